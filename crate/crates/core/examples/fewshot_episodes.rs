//! Base learning on synthetic features, then 5-way 5-shot episodes on the
//! novel classes, against a nearest-centroid baseline.
//!
//! cargo run --release --example fewshot_episodes

use geoball::embedding::{train_embeddings, EmbedConfig};
use geoball::harness::{
    evaluate_episodes, generate_space_aligned_features, nearest_centroid_baseline, sample_episodes, SyntheticConfig,
};
use geoball::negatives::build_negative_sets;
use geoball::ontology::{compute_ich, compute_stats, synthetic_tree, SiblingDisjointness};
use geoball::projector::{train_base, ProjectorConfig};

fn main() -> geoball::error::Result<()> {
    let o = synthetic_tree(&[2, 2, 6], SiblingDisjointness::All);
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;
    let embed = EmbedConfig {
        dim: 16,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    };
    let (space, _) = train_embeddings(&o, &ich, &stats, &embed)?;

    let features = SyntheticConfig {
        per_class: 100,
        ..SyntheticConfig::default()
    };
    let data = generate_space_aligned_features(&o, &space, &features)?;
    println!("{} base examples, {} novel", data.base.len(), data.novel.len());

    let negatives = build_negative_sets(&space, &o.leaf_names(), None, 42)?;
    let config = ProjectorConfig {
        epochs_bl: 40,
        ..ProjectorConfig::default()
    };
    let (mlp, history) = train_base(&data.base, &space, &negatives, &config)?;
    println!("base loss {:.4} -> {:.4}", history[0], history[history.len() - 1]);

    let episodes = sample_episodes(&data.novel, 5, 5, 15, 20, 7)?;
    let report = evaluate_episodes(&space, Some(&o), &mlp, &episodes, &config, Some(&negatives))?;
    let baseline = nearest_centroid_baseline(&episodes)?;
    println!(
        "balls {:.4} ± {:.4}   centroid baseline {:.4} ± {:.4}",
        report.summary.accuracy, report.summary.ci95_half_width, baseline.accuracy, baseline.ci95_half_width
    );
    if let Some(f) = report.semantic_error_fraction {
        println!("{} errors, {:.0}% inside a parent ball of the true class", report.errors, 100.0 * f);
    }
    Ok(())
}
