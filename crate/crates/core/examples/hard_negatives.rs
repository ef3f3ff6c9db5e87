//! Cluster leaf balls and list each class's hard negatives.
//!
//! cargo run --example hard_negatives

use geoball::embedding::{train_embeddings, EmbedConfig};
use geoball::negatives::build_negative_sets;
use geoball::ontology::{compute_ich, compute_stats, synthetic_tree, SiblingDisjointness};

fn main() -> geoball::error::Result<()> {
    let o = synthetic_tree(&[3, 4], SiblingDisjointness::All);
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;
    let config = EmbedConfig {
        dim: 8,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    };
    let (space, _) = train_embeddings(&o, &ich, &stats, &config)?;

    // Default k is ⌈√12⌉ = 4.
    let sets = build_negative_sets(&space, &o.leaf_names(), None, 42)?;
    for (i, cluster) in sets.clusters.iter().enumerate() {
        println!("cluster {i}: {}", cluster.join(", "));
    }
    for class in sets.classes() {
        println!("{class:>6} -> {:?}", sets.get(class).unwrap_or_default());
    }
    Ok(())
}
