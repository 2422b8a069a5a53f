//! File formats and measured-data ingestion.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod rss;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::ExperimentConfig;
pub use dataset::{generate_records, DatasetFile, DatasetRecord, GenerationPlan};
pub use rss::{estimate_attenuation, ingest_records, ingest_rss, read_rss_csv, PowerSnapshot, RssRecord};
