//! Transitive closure, levels and occurrence counts for a small ontology.
//!
//! cargo run --example build_ich

use geoball::ontology::{compute_ich, compute_stats, parse_ontology};

const ONTOLOGY: &str = include_str!("../fixtures/poodle.json");

fn main() -> geoball::error::Result<()> {
    let o = parse_ontology(ONTOLOGY)?.ontology;
    let ich = compute_ich(&o)?;
    let stats = compute_stats(&o, &ich)?;

    println!("{} told subsumptions, {} inferred", o.told_subsumptions().len(), ich.len());
    for [sub, sup] in ich.named_pairs(&o) {
        println!("  {sub} ⊑ {sup}");
    }
    println!("\n{:<12} {:>5} {:>11}", "concept", "level", "occurrences");
    for id in o.ids() {
        println!("{:<12} {:>5} {:>11}", o.name(id), stats.level(id), stats.occurrences(id));
    }
    Ok(())
}
