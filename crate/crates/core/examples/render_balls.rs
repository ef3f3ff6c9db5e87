//! Draw the poodle balls as SVG.
//!
//! cargo run --example render_balls > balls.svg

use geoball::embedding::{train_embeddings, EmbedConfig};
use geoball::ontology::{compute_ich, compute_stats, parse_ontology};
use geoball::viz::render_balls_2d;

fn main() -> geoball::error::Result<()> {
    let o = parse_ontology(include_str!("../fixtures/poodle.json"))?.ontology;
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;
    let config = EmbedConfig {
        dim: 10,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    };
    let (space, _) = train_embeddings(&o, &ich, &stats, &config)?;

    // A query point placed at the dog centre shows up inside dog but in
    // neither breed.
    let dog = space.ball_by_name("dog")?.centre.to_vec();
    let svg = render_balls_2d(&space, o.concepts(), &[("query".into(), dog)])?;
    print!("{svg}");
    Ok(())
}
