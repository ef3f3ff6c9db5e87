//! Every stage from one config, writing artifacts to a directory.
//!
//! cargo run --release --example full_pipeline [out_dir]

use geoball::pipeline::{run_pipeline, EpisodesStage, PipelineConfig};
use geoball::projector::ProjectorConfig;

fn main() -> geoball::error::Result<()> {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "pipeline_out".into());
    let config = PipelineConfig {
        ontology: concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/poodle.json").into(),
        out_dir: out_dir.into(),
        projector: ProjectorConfig {
            epochs_bl: 20,
            ..ProjectorConfig::default()
        },
        episodes: EpisodesStage {
            episodes: 20,
            ..EpisodesStage::default()
        },
        ..PipelineConfig::default()
    };
    let artifacts = run_pipeline(&config)?;
    for f in &artifacts.files {
        println!("{}", f.display());
    }
    Ok(())
}
