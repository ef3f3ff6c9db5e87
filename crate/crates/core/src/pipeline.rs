//! End-to-end run: ontology → ICH → balls → hard negatives → synthetic
//! features → projector → few-shot episodes → SVG, one artifact per stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{train_embeddings, BallSpace, EmbedConfig, LossBreakdown};
use crate::error::Result;
use crate::eval::{grid_search, score_space, GridSpec, Scores};
use crate::harness::{
    check_disjoint_splits, dataset_accuracy, evaluate_episodes, generate_space_aligned_features,
    generate_synthetic_features, nearest_centroid_baseline, sample_episodes, AccuracySummary, EvalReport,
    SyntheticConfig, SyntheticFeatures,
};
use crate::io;
use crate::negatives::{build_negative_sets, NegativeSets};
use crate::ontology::{compute_ich, compute_stats, parse_ontology, HierarchyStats, Ich, Ontology};
use crate::projector::{train_base, Mlp, ProjectorConfig};
use crate::viz::render_balls_2d;

/// Seed used wherever none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Per-stage seeds that replace the global one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageSeeds {
    pub embed: Option<u64>,
    pub negatives: Option<u64>,
    pub features: Option<u64>,
    pub projector: Option<u64>,
    pub episodes: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NegativesStage {
    /// Cluster count; `None` uses `⌈√#leaves⌉`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturesStage {
    #[serde(flatten)]
    pub synthetic: SyntheticConfig,
    /// Derive leaf anchors from the trained balls instead of the hierarchy.
    pub align_to_space: bool,
    /// Also write `features_base.csv` and `features_novel.csv`.
    pub write_features: bool,
}

impl Default for FeaturesStage {
    fn default() -> Self {
        FeaturesStage {
            synthetic: SyntheticConfig::default(),
            align_to_space: true,
            write_features: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodesStage {
    pub w: usize,
    pub s: usize,
    pub q: usize,
    pub episodes: usize,
}

impl Default for EpisodesStage {
    fn default() -> Self {
        EpisodesStage {
            w: 5,
            s: 5,
            q: 15,
            episodes: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VizStage {
    /// Concepts to draw; `None` draws every concept.
    pub concepts: Option<Vec<String>>,
    /// Base examples per class projected through the trained MLP and drawn.
    pub points_per_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub ontology: PathBuf,
    pub out_dir: PathBuf,
    /// Global seed, copied into every stage without an entry in `seeds`.
    pub seed: u64,
    pub seeds: StageSeeds,
    pub embed: EmbedConfig,
    /// When set, the embedding is grid-searched and the best point kept.
    pub tune: Option<GridSpec>,
    pub negatives: NegativesStage,
    pub features: FeaturesStage,
    pub projector: ProjectorConfig,
    pub episodes: EpisodesStage,
    pub viz: VizStage,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ontology: PathBuf::from("ontology.json"),
            out_dir: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            seeds: StageSeeds::default(),
            embed: EmbedConfig {
                dim: 16,
                radius_clamp_min: 0.05,
                ..EmbedConfig::default()
            },
            tune: None,
            negatives: NegativesStage::default(),
            features: FeaturesStage::default(),
            projector: ProjectorConfig::default(),
            episodes: EpisodesStage::default(),
            viz: VizStage::default(),
        }
    }
}

/// Inferred hierarchy artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IchArtifact {
    pub total_levels: usize,
    pub pairs: Vec<[String; 2]>,
    pub concepts: Vec<ConceptStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptStats {
    pub name: String,
    pub level: usize,
    pub occurrences: usize,
    pub leaf: bool,
}

impl IchArtifact {
    pub fn new(ontology: &Ontology, ich: &Ich, stats: &HierarchyStats) -> Self {
        IchArtifact {
            total_levels: stats.total_levels,
            pairs: ich.named_pairs(ontology),
            concepts: ontology
                .ids()
                .map(|id| ConceptStats {
                    name: ontology.name(id).to_string(),
                    level: stats.level(id),
                    occurrences: stats.occurrences(id),
                    leaf: ontology.is_leaf(id),
                })
                .collect(),
        }
    }
}

/// Summary written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub embedding: Scores,
    pub embedding_loss: Option<LossBreakdown>,
    pub base_classes: usize,
    pub novel_classes: usize,
    pub base_loss_first: Option<f64>,
    pub base_loss_last: Option<f64>,
    pub base_train_accuracy: f64,
    pub base_heldout_accuracy: Option<f64>,
    pub episodes: EvalReport,
    pub baseline: AccuracySummary,
}

/// Paths of everything a run wrote, in stage order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    f().map_err(|e| e.in_stage(name))
}

fn write(artifacts: &mut Artifacts, path: PathBuf, contents: &str) -> Result<()> {
    io::write_text(&path, contents)?;
    artifacts.files.push(path);
    Ok(())
}

/// Runs every stage in order, writing each artifact as soon as its stage
/// finishes. The first failing stage aborts the run with its name attached.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Artifacts> {
    let seeds = &config.seeds;
    let seed_of = |s: Option<u64>| s.unwrap_or(config.seed);
    let out = |name: &str| config.out_dir.join(name);
    let mut artifacts = Artifacts::default();

    let (ontology, ich, stats) = stage("ich", || {
        let text = io::read_text(&config.ontology)?;
        let parsed = parse_ontology(&text)?;
        for w in &parsed.warnings {
            log::warn!("{w}");
        }
        let ich = compute_ich(&parsed.ontology)?;
        let stats = compute_stats(&parsed.ontology, &ich)?;
        let artifact = IchArtifact::new(&parsed.ontology, &ich, &stats);
        write(&mut artifacts, out("ich.json"), &io::to_json_string(&artifact)?)?;
        Ok((parsed.ontology, ich, stats))
    })?;

    let (space, embedding, embedding_loss) = stage("embed", || {
        let mut embed = EmbedConfig {
            seed: seed_of(seeds.embed),
            ..config.embed.clone()
        };
        if let Some(grid) = &config.tune {
            let report = grid_search(&ontology, &ich, &stats, grid, &embed)?;
            if report.below_threshold {
                log::warn!("no grid point reached s_d_fraction {}", grid.s_d_threshold);
            }
            write(&mut artifacts, out("tune.json"), &io::to_json_string(&report)?)?;
            embed = report.best_config;
        }
        let (space, history) = train_embeddings(&ontology, &ich, &stats, &embed)?;
        let scores = score_space(&space, &ich, &ontology)?;
        write(&mut artifacts, out("space.json"), &space.to_json_string())?;
        Ok((space, scores, history.final_loss()))
    })?;

    let negatives = stage("negatives", || {
        let leaves = ontology.leaf_names();
        let sets = build_negative_sets(&space, &leaves, config.negatives.k, seed_of(seeds.negatives))?;
        write(&mut artifacts, out("negatives.json"), &io::to_json_string(&sets.to_json())?)?;
        Ok(sets)
    })?;

    let features = stage("features", || {
        let synthetic = SyntheticConfig {
            seed: seed_of(seeds.features),
            ..config.features.synthetic.clone()
        };
        let data = if config.features.align_to_space {
            generate_space_aligned_features(&ontology, &space, &synthetic)?
        } else {
            generate_synthetic_features(&ontology, &synthetic)?
        };
        check_disjoint_splits(&data.base, &data.novel)?;
        if config.features.write_features {
            write(&mut artifacts, out("features_base.csv"), &io::features_to_csv(&data.base))?;
            write(&mut artifacts, out("features_novel.csv"), &io::features_to_csv(&data.novel))?;
        }
        Ok(data)
    })?;

    let projector = ProjectorConfig {
        seed: seed_of(seeds.projector),
        ..config.projector.clone()
    };
    let (mlp, history) = stage("projector", || {
        let (mlp, history) = train_base(&features.base, &space, &negatives, &projector)?;
        write(&mut artifacts, out("mlp.json"), &io::to_json_string(&mlp)?)?;
        Ok((mlp, history))
    })?;

    let report = stage("episodes", || {
        episode_report(
            config,
            &ontology,
            &space,
            &features,
            &negatives,
            &mlp,
            &projector,
            &history,
            embedding,
            embedding_loss,
            seed_of(seeds.episodes),
        )
    })?;
    write(&mut artifacts, out("report.json"), &io::to_json_string(&report)?).map_err(|e| e.in_stage("episodes"))?;

    stage("viz", || {
        let selected = config
            .viz
            .concepts
            .clone()
            .unwrap_or_else(|| ontology.concepts().to_vec());
        let mut points = Vec::new();
        for (label, examples) in features.base.by_class() {
            for e in examples.into_iter().take(config.viz.points_per_class) {
                points.push((label.clone(), mlp.forward(&e.features)?));
            }
        }
        let svg = render_balls_2d(&space, &selected, &points)?;
        write(&mut artifacts, out("balls.svg"), &svg)
    })?;

    Ok(artifacts)
}

#[allow(clippy::too_many_arguments)]
fn episode_report(
    config: &PipelineConfig,
    ontology: &Ontology,
    space: &BallSpace,
    features: &SyntheticFeatures,
    negatives: &NegativeSets,
    mlp: &Mlp,
    projector: &ProjectorConfig,
    history: &[f64],
    embedding: Scores,
    embedding_loss: Option<LossBreakdown>,
    seed: u64,
) -> Result<PipelineReport> {
    let base_classes = features.base.classes();
    let novel_classes = features.novel.classes().len();
    let e = &config.episodes;
    let w = e.w.min(novel_classes);
    if w < e.w {
        log::warn!("only {novel_classes} novel classes; running {w}-way episodes");
    }
    let episodes = sample_episodes(&features.novel, w, e.s, e.q, e.episodes, seed)?;
    let report = evaluate_episodes(space, Some(ontology), mlp, &episodes, projector, Some(negatives))?;
    let heldout = if features.base_heldout.is_empty() {
        None
    } else {
        Some(dataset_accuracy(mlp, &features.base_heldout, &base_classes, space)?)
    };
    Ok(PipelineReport {
        seed: config.seed,
        embedding,
        embedding_loss,
        base_classes: base_classes.len(),
        novel_classes,
        base_loss_first: history.first().copied(),
        base_loss_last: history.last().copied(),
        base_train_accuracy: dataset_accuracy(mlp, &features.base, &base_classes, space)?,
        base_heldout_accuracy: heldout,
        baseline: nearest_centroid_baseline(&episodes)?,
        episodes: report,
    })
}

/// Reads a pipeline config; relative paths inside it resolve against the
/// config file's directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let mut config: PipelineConfig = io::read_json(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut config.ontology, &mut config.out_dir] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(config)
}
