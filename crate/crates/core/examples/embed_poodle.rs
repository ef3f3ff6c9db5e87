//! Train one ball per concept and check the resulting geometry.
//!
//! cargo run --example embed_poodle

use geoball::embedding::{train_embeddings, EmbedConfig};
use geoball::eval::{containment_holds, score_space};
use geoball::ontology::{compute_ich, compute_stats, parse_ontology};

fn main() -> geoball::error::Result<()> {
    let o = parse_ontology(include_str!("../fixtures/poodle.json"))?.ontology;
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;
    let config = EmbedConfig {
        dim: 10,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    };
    let (space, history) = train_embeddings(&o, &ich, &stats, &config)?;

    for rec in history.epochs.iter().step_by(400) {
        println!("epoch {:>4}  loss {:.5}", rec.epoch, rec.loss.total());
    }
    let scores = score_space(&space, &ich, &o)?;
    println!("f1_all {:.3}  f1_leaf {:.3}  s_d {:.3}", scores.f1_all, scores.f1_leaf, scores.s_d_fraction);

    for (p, q) in [("poodle", "dog"), ("dog", "animal"), ("street_sign", "animal")] {
        let inside = containment_holds(space.ball_by_name(p)?, space.ball_by_name(q)?)?;
        println!("{p} inside {q}: {inside}");
    }
    Ok(())
}
