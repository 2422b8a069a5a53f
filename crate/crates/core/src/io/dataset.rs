//! JSON-lines datasets: one header line, then one snapshot per line.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffraction::QuadratureConfig;
use crate::error::{Error, Result};
use crate::geometry::{sample_targets, GraphDocument, MembershipConfig, NetworkGraph, SubjectProfile};
use crate::multibody::{AttenuationSnapshot, ModelKind, SceneLosses};
use crate::net::{adjacency_matrix, LabeledGraphSample};
use crate::rng::derive_seed;

pub const DATASET_SCHEMA: &str = "rfsl-dataset/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema: String,
    pub graph: GraphDocument,
    /// Settings that produced the records (free-form).
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    /// True target count; absent for unlabeled measurements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    pub snapshot: AttenuationSnapshot,
}

#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub graph: NetworkGraph,
    pub config: serde_json::Value,
    pub records: Vec<DatasetRecord>,
}

impl DatasetFile {
    pub fn new(graph: NetworkGraph, config: serde_json::Value, records: Vec<DatasetRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.snapshot
                .check_shape(&graph)
                .map_err(|e| Error::ShapeMismatch(format!("record {i}: {e}")))?;
        }
        Ok(Self { graph, config, records })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let header = DatasetHeader {
            schema: DATASET_SCHEMA.to_string(),
            graph: self.graph.to_document(),
            config: self.config.clone(),
        };
        serde_json::to_writer(&mut w, &header).map_err(|e| Error::parse("dataset header", e))?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| Error::parse("dataset record", e))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let first = lines.next().ok_or_else(|| Error::parse("dataset line 1", "missing header"))??;
        let probe: serde_json::Value =
            serde_json::from_str(&first).map_err(|e| Error::parse("dataset line 1", e))?;
        let schema = probe.get("schema").and_then(|s| s.as_str()).unwrap_or("");
        if schema != DATASET_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: DATASET_SCHEMA.to_string(),
                found: schema.to_string(),
            });
        }
        let header: DatasetHeader = serde_json::from_value(probe).map_err(|e| Error::parse("dataset line 1", e))?;
        let graph = NetworkGraph::try_from(header.graph)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let context = format!("dataset line {}", i + 2);
            let r: DatasetRecord = serde_json::from_str(&line).map_err(|e| Error::parse(&context, e))?;
            r.snapshot
                .check_shape(&graph)
                .map_err(|e| Error::ShapeMismatch(format!("{context}: {e}")))?;
            records.push(r);
        }
        Ok(Self {
            graph,
            config: header.config,
            records,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Labeled samples for the counting network.
    pub fn samples(&self) -> Result<Vec<LabeledGraphSample>> {
        let adjacency = Arc::new(adjacency_matrix(&self.graph));
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let label = r
                    .label
                    .ok_or_else(|| Error::InvalidArgument(format!("record {i} has no label")))?;
                Ok(LabeledGraphSample::from_snapshot(adjacency.clone(), &r.snapshot, label))
            })
            .collect()
    }
}

/// Scene sampling plan for synthetic datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub counts: Vec<usize>,
    pub samples_per_count: usize,
    pub profile: SubjectProfile,
    pub wavelength: f64,
    pub quadrature: QuadratureConfig,
    pub membership: MembershipConfig,
    pub seed: u64,
}

impl GenerationPlan {
    /// Seed of scene `i` with `n` targets.
    pub fn scene_seed(&self, n: usize, i: usize) -> u64 {
        derive_seed(derive_seed(self.seed, n as u64), i as u64)
    }
}

/// Synthetic records for each requested model, all from the same scenes.
///
/// Records are ordered by count, then scene index.
pub fn generate_records(
    graph: &NetworkGraph,
    plan: &GenerationPlan,
    kinds: &[ModelKind],
) -> Result<Vec<Vec<DatasetRecord>>> {
    let need_mam = kinds.contains(&ModelKind::Mam);
    if kinds.contains(&ModelKind::Measured) {
        return Err(Error::InvalidArgument("measured data cannot be generated".into()));
    }
    let jobs: Vec<(usize, usize)> = plan
        .counts
        .iter()
        .flat_map(|&n| (0..plan.samples_per_count).map(move |i| (n, i)))
        .collect();
    let per_scene: Vec<Vec<DatasetRecord>> = jobs
        .par_iter()
        .enumerate()
        .map(|(t, &(n, i))| {
            let targets = sample_targets(n, graph.area(), &plan.profile, plan.scene_seed(n, i));
            let losses = SceneLosses::compute(graph, &targets, plan.wavelength, &plan.quadrature, &plan.membership, need_mam)?;
            kinds
                .iter()
                .map(|&k| {
                    Ok(DatasetRecord {
                        label: Some(n as u32),
                        snapshot: AttenuationSnapshot::from_link_values(graph, &losses.links(k)?, t as u64, k)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::with_capacity(jobs.len()); kinds.len()];
    for scene in per_scene {
        for (k, r) in scene.into_iter().enumerate() {
            out[k].push(r);
        }
    }
    Ok(out)
}
