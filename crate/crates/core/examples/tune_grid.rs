//! Grid search over the margin and the radius/norm scales.
//!
//! cargo run --example tune_grid

use geoball::embedding::EmbedConfig;
use geoball::eval::{grid_search, GridSpec};
use geoball::ontology::{compute_ich, compute_stats, synthetic_tree, SiblingDisjointness};

fn main() -> geoball::error::Result<()> {
    let o = synthetic_tree(&[2, 2, 5], SiblingDisjointness::All);
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;
    let grid = GridSpec {
        gamma: vec![0.0, -0.05, -0.1],
        psi: vec![0.1, 0.3],
        phi: vec![1.0],
        s_d_threshold: 0.95,
    };
    let base = EmbedConfig {
        dim: 16,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    };
    let report = grid_search(&o, &ich, &stats, &grid, &base)?;

    println!("{:>6} {:>5} {:>5}  {:>7} {:>7} {:>6}", "gamma", "psi", "phi", "f1_leaf", "f1_all", "s_d");
    for (i, r) in report.rows.iter().enumerate() {
        let mark = if i == report.best { " <- best" } else { "" };
        println!(
            "{:>6} {:>5} {:>5}  {:>7.4} {:>7.4} {:>6.3}{mark}",
            r.gamma, r.psi, r.phi, r.scores.f1_leaf, r.scores.f1_all, r.scores.s_d_fraction
        );
    }
    Ok(())
}
