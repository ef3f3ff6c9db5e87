//! Command-line front end; `src/bin/geoball.rs` only parses and dispatches.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::embedding::{train_embeddings, BallSpace, EmbedConfig};
use crate::error::{Error, Result};
use crate::eval::{grid_search, score_space, GridSpec};
use crate::harness::{
    evaluate_episodes, generate_space_aligned_features, generate_synthetic_features, nearest_centroid_baseline,
    sample_episodes, AccuracySummary, EvalReport, Split,
};
use crate::io;
use crate::negatives::{build_negative_sets, NegativeSets};
use crate::ontology::{
    compute_ich, compute_stats, ingest_hypernym_edges, parse_hypernym_edges, parse_label_list, parse_ontology, Ontology,
};
use crate::pipeline::{load_config, run_pipeline, IchArtifact, PipelineConfig};
use crate::projector::{classify_in_space, train_base, Mlp, Prediction, Preset, ProjectorConfig};
use crate::viz::render_balls_2d;

#[derive(Debug, Parser)]
#[command(name = "geoball", version, about = "n-ball ontology embeddings and ball-guided few-shot classification")]
pub struct Cli {
    /// Stream per-epoch losses and stage progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Seed for every stochastic step (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON pipeline config; its stage settings seed every subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an ontology from a child<TAB>parent edge list.
    Ingest {
        edges: PathBuf,
        #[arg(long)]
        leaves: PathBuf,
        /// Make leaves that share a parent pairwise disjoint.
        #[arg(long)]
        sibling_disjoint: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inferred class hierarchy with levels and occurrence counts.
    Ich {
        ontology: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one ball per concept.
    Embed {
        ontology: PathBuf,
        #[command(flatten)]
        opts: EmbedOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search gamma, psi and phi.
    Tune {
        ontology: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        opts: EmbedOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster leaf centres into hard-negative sets.
    Negatives {
        space: PathBuf,
        /// Leaves are read from this ontology...
        #[arg(long, conflicts_with = "leaves")]
        ontology: Option<PathBuf>,
        /// ...or from a newline-separated label list.
        #[arg(long)]
        leaves: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic base and novel feature CSVs for an ontology.
    Synth {
        ontology: PathBuf,
        /// Derive anchors from this ball space instead of the hierarchy.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Base learning of the projector on labelled features.
    TrainProjector {
        space: PathBuf,
        features: PathBuf,
        #[arg(long)]
        negatives: PathBuf,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify feature rows among candidate classes.
    Infer {
        space: PathBuf,
        mlp: PathBuf,
        features: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<String>,
        /// Orders containing balls by level instead of radius.
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Few-shot evaluation over sampled episodes.
    Episodes {
        space: PathBuf,
        mlp: PathBuf,
        #[arg(long)]
        novel: PathBuf,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        negatives: Option<PathBuf>,
        /// Enables the semantic-error fraction.
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render balls (and optionally projected features) as SVG.
    Viz {
        space: PathBuf,
        #[arg(long, value_delimiter = ',')]
        concepts: Vec<String>,
        /// Feature CSV to project through `--mlp` and draw as dots.
        #[arg(long, requires = "mlp")]
        points: Option<PathBuf>,
        #[arg(long)]
        mlp: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage from one config.
    Pipeline {
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EmbedOpts {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub radius_min: Option<f64>,
}

impl EmbedOpts {
    fn apply(&self, mut c: EmbedConfig) -> EmbedConfig {
        c.dim = self.dim.unwrap_or(c.dim);
        c.gamma = self.gamma.unwrap_or(c.gamma);
        c.psi = self.psi.unwrap_or(c.psi);
        c.phi = self.phi.unwrap_or(c.phi);
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.learning_rate = self.lr.unwrap_or(c.learning_rate);
        c.radius_clamp_min = self.radius_min.unwrap_or(c.radius_clamp_min);
        c
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &io::to_json_string(value)?)
}

fn load_ontology(path: &Path) -> Result<Ontology> {
    let parsed = parse_ontology(&io::read_text(path)?)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(parsed.ontology)
}

fn load_space(path: &Path) -> Result<BallSpace> {
    BallSpace::from_json_str(&io::read_text(path)?)
}

fn load_negatives(path: &Path) -> Result<NegativeSets> {
    NegativeSets::from_json_str(&io::read_text(path)?)
}

#[derive(Serialize)]
struct Inference<'a> {
    label: &'a str,
    #[serde(flatten)]
    prediction: Prediction,
}

#[derive(Serialize)]
struct EpisodesOutput {
    #[serde(flatten)]
    report: EvalReport,
    baseline: AccuracySummary,
}

/// Executes one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut base = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        base.seed = seed;
    }
    let seed = base.seed;
    let seed_of = |s: Option<u64>| s.unwrap_or(seed);

    match cli.command {
        Command::Ingest {
            edges,
            leaves,
            sibling_disjoint,
            out,
        } => {
            let edges = parse_hypernym_edges(&io::read_text(&edges)?)?;
            let labels = parse_label_list(&io::read_text(&leaves)?);
            let ontology = ingest_hypernym_edges(&edges, &labels, sibling_disjoint)?;
            emit_json(out.as_deref(), &ontology.to_document())
        }
        Command::Ich { ontology, out } => {
            let ontology = load_ontology(&ontology)?;
            let ich = compute_ich(&ontology)?;
            let stats = compute_stats(&ontology, &ich)?;
            emit_json(out.as_deref(), &IchArtifact::new(&ontology, &ich, &stats))
        }
        Command::Embed { ontology, opts, out } => {
            let ontology = load_ontology(&ontology)?;
            let ich = compute_ich(&ontology)?;
            let stats = compute_stats(&ontology, &ich)?;
            let config = EmbedConfig {
                seed: seed_of(base.seeds.embed),
                ..opts.apply(base.embed.clone())
            };
            let (space, _) = train_embeddings(&ontology, &ich, &stats, &config)?;
            let scores = score_space(&space, &ich, &ontology)?;
            log::info!(
                "f1_all {:.4} f1_leaf {:.4} s_d_fraction {:.4}",
                scores.f1_all,
                scores.f1_leaf,
                scores.s_d_fraction
            );
            emit(out.as_deref(), &space.to_json_string())
        }
        Command::Tune {
            ontology,
            grid,
            threshold,
            opts,
            out,
        } => {
            let ontology = load_ontology(&ontology)?;
            let ich = compute_ich(&ontology)?;
            let stats = compute_stats(&ontology, &ich)?;
            let mut grid: GridSpec = io::read_json(&grid)?;
            if let Some(t) = threshold {
                grid.s_d_threshold = t;
            }
            let config = EmbedConfig {
                seed: seed_of(base.seeds.embed),
                ..opts.apply(base.embed.clone())
            };
            let report = grid_search(&ontology, &ich, &stats, &grid, &config)?;
            if report.below_threshold {
                log::warn!("no grid point reached s_d_fraction {}", grid.s_d_threshold);
            }
            emit_json(out.as_deref(), &report)
        }
        Command::Negatives {
            space,
            ontology,
            leaves,
            k,
            out,
        } => {
            let space = load_space(&space)?;
            let leaves = match (ontology, leaves) {
                (Some(o), _) => load_ontology(&o)?.leaf_names(),
                (None, Some(l)) => parse_label_list(&io::read_text(&l)?),
                (None, None) => {
                    return Err(Error::Config("negatives needs --ontology or --leaves".into()));
                }
            };
            let sets = build_negative_sets(&space, &leaves, k.or(base.negatives.k), seed_of(base.seeds.negatives))?;
            emit_json(out.as_deref(), &sets.to_json())
        }
        Command::Synth {
            ontology,
            space,
            dim,
            per_class,
            noise,
            out_dir,
        } => {
            let ontology = load_ontology(&ontology)?;
            let mut config = base.features.synthetic.clone();
            config.seed = seed_of(base.seeds.features);
            config.dim = dim.unwrap_or(config.dim);
            config.per_class = per_class.unwrap_or(config.per_class);
            config.noise_sigma = noise.unwrap_or(config.noise_sigma);
            let data = match space {
                Some(s) => generate_space_aligned_features(&ontology, &load_space(&s)?, &config)?,
                None => generate_synthetic_features(&ontology, &config)?,
            };
            io::write_features_csv(&out_dir.join("features_base.csv"), &data.base)?;
            io::write_features_csv(&out_dir.join("features_novel.csv"), &data.novel)?;
            if !data.base_heldout.is_empty() {
                io::write_features_csv(&out_dir.join("features_heldout.csv"), &data.base_heldout)?;
            }
            Ok(())
        }
        Command::TrainProjector {
            space,
            features,
            negatives,
            preset,
            epochs,
            lr,
            weight_decay,
            out,
        } => {
            let space = load_space(&space)?;
            let data = io::read_features_csv(&features, Split::Base)?;
            let negatives = load_negatives(&negatives)?;
            let mut config = base.projector.clone();
            config.seed = seed_of(base.seeds.projector);
            if let Some(p) = preset {
                config.hidden = match p {
                    PresetArg::Desk => Preset::Desk,
                    PresetArg::Paper => Preset::Paper,
                }
                .hidden();
            }
            config.epochs_bl = epochs.unwrap_or(config.epochs_bl);
            config.learning_rate = lr.unwrap_or(config.learning_rate);
            config.weight_decay = weight_decay.unwrap_or(config.weight_decay);
            let (mlp, history) = train_base(&data, &space, &negatives, &config)?;
            if let (Some(first), Some(last)) = (history.first(), history.last()) {
                log::info!("base loss {first:.6} -> {last:.6}");
            }
            emit_json(out.as_deref(), &mlp)
        }
        Command::Infer {
            space,
            mlp,
            features,
            candidates,
            ontology,
            out,
        } => {
            let mut space = load_space(&space)?;
            let mlp: Mlp = io::read_json(&mlp)?;
            let data = io::read_features_csv(&features, Split::Novel)?;
            let stats = match ontology {
                Some(o) => {
                    let o = load_ontology(&o)?;
                    // Reorder the balls so level statistics index them directly.
                    space = space.aligned_to(&o)?;
                    Some(compute_stats(&o, &compute_ich(&o)?)?)
                }
                None => None,
            };
            let mut rows = Vec::with_capacity(data.len());
            for e in &data.examples {
                let h = mlp.forward(&e.features)?;
                rows.push(Inference {
                    label: &e.label,
                    prediction: classify_in_space(&h, &candidates, &space, stats.as_ref())?,
                });
            }
            emit_json(out.as_deref(), &rows)
        }
        Command::Episodes {
            space,
            mlp,
            novel,
            w,
            s,
            q,
            episodes,
            negatives,
            ontology,
            out,
        } => {
            let space = load_space(&space)?;
            let mlp: Mlp = io::read_json(&mlp)?;
            let novel = io::read_features_csv(&novel, Split::Novel)?;
            let negatives = negatives.as_deref().map(load_negatives).transpose()?;
            let ontology = ontology.as_deref().map(load_ontology).transpose()?;
            let e = &base.episodes;
            let list = sample_episodes(
                &novel,
                w.unwrap_or(e.w),
                s.unwrap_or(e.s),
                q.unwrap_or(e.q),
                episodes.unwrap_or(e.episodes),
                seed_of(base.seeds.episodes),
            )?;
            let config = ProjectorConfig {
                seed: seed_of(base.seeds.projector),
                ..base.projector.clone()
            };
            let report = evaluate_episodes(&space, ontology.as_ref(), &mlp, &list, &config, negatives.as_ref())?;
            log::info!(
                "accuracy {:.4} ± {:.4}",
                report.summary.accuracy,
                report.summary.ci95_half_width
            );
            let output = EpisodesOutput {
                report,
                baseline: nearest_centroid_baseline(&list)?,
            };
            emit_json(out.as_deref(), &output)
        }
        Command::Viz {
            space,
            concepts,
            points,
            mlp,
            out,
        } => {
            let space = load_space(&space)?;
            let selected = if concepts.is_empty() {
                space.names().to_vec()
            } else {
                concepts
            };
            let mut dots = Vec::new();
            if let (Some(points), Some(mlp)) = (points, mlp) {
                let mlp: Mlp = io::read_json(&mlp)?;
                for e in io::read_features_csv(&points, Split::Novel)?.examples {
                    dots.push((e.label.clone(), mlp.forward(&e.features)?));
                }
            }
            emit(out.as_deref(), &render_balls_2d(&space, &selected, &dots)?)
        }
        Command::Pipeline { ontology, out_dir } => {
            if let Some(o) = ontology {
                base.ontology = o;
            }
            if let Some(d) = out_dir {
                base.out_dir = d;
            }
            let artifacts = run_pipeline(&base)?;
            for f in &artifacts.files {
                log::info!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}
