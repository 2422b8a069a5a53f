//! Experiment configuration: a TOML document with fixed sections.
//!
//! Every key has a default, so an empty file is valid. Unknown keys are
//! rejected. `key=value` overrides use dotted paths such as `scene.nodes=25`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{BoundConfig, Variant};
use crate::diffraction::QuadratureConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_perimeter_network, Area, LinkRule, MembershipConfig, NetworkGraph, NodePlacement, SubjectProfile};
use crate::multibody::{ModelKind, NoiseConfig};
use crate::net::TrainConfig;
use crate::rng::derive_seed;

/// Keys without a default value (absent unless set).
const OPTIONAL_KEYS: &[&str] = &["scene.spacing", "scene.subject_dims", "ingest.label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub area_width: f64,
    pub area_height: f64,
    /// Node count, used unless `spacing` is set.
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    pub node_height: f64,
    pub frequency_hz: f64,
    /// Preset name: A, B or C.
    pub subject: String,
    /// Custom `[height, width_ap, width_lat]`, overrides the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject_dims: Option<[f64; 3]>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            area_width: 10.0,
            area_height: 10.0,
            nodes: 60,
            spacing: None,
            node_height: 1.0,
            frequency_hz: 5.8e9,
            subject: "A".into(),
            subject_dims: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub step_fraction: f64,
    pub max_elements: usize,
    pub overlap_threshold: f64,
    pub footprint_samples: usize,
    pub noise_sigma_db: f64,
    pub noise_enabled: bool,
    /// Free-space received power used when no table is given, dBm.
    pub free_space_dbm: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        let m = MembershipConfig::default();
        Self {
            kind: ModelKind::Mam,
            step_fraction: q.step_fraction,
            max_elements: q.max_elements,
            overlap_threshold: m.overlap_threshold,
            footprint_samples: m.footprint_samples,
            noise_sigma_db: 0.0,
            noise_enabled: false,
            free_space_dbm: -50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub tau: f64,
    pub variant: Variant,
    pub n_trials: usize,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            tau: 0.2,
            variant: Variant::ClusterConsistent,
            n_trials: 500,
            n_min: 1,
            n_max: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub samples_per_n: usize,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            samples_per_n: 750,
            n_min: 1,
            n_max: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub lr_decay_patience: usize,
    pub min_learning_rate: f64,
    pub validation_fraction: f64,
    pub iterations: usize,
    pub include_sort_channel: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            early_stop_patience: t.early_stop_patience,
            lr_decay_patience: t.lr_decay_patience,
            min_learning_rate: t.min_learning_rate,
            validation_fraction: t.validation_fraction,
            iterations: t.iterations,
            include_sort_channel: t.include_sort_channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub window_ms: u64,
    pub averaging_window: usize,
    /// Count attached to ingested snapshots, if known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            window_ms: crate::io::rss::DEFAULT_WINDOW_MS,
            averaging_window: crate::io::rss::DEFAULT_AVERAGING_WINDOW,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub targets: usize,
    pub snapshots: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            targets: 3,
            snapshots: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Dotted config key → values; the grid is their Cartesian product.
    pub axes: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub scene: SceneConfig,
    pub model: ModelConfig,
    pub bounds: BoundsSection,
    pub data: DataSection,
    pub train: TrainSection,
    pub ingest: IngestSection,
    pub simulate: SimulateSection,
    pub sweep: SweepSection,
}

/// Independent random streams derived from the master seed.
pub mod stream {
    pub const SCENES: u64 = 1;
    pub const BOUNDS: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const NOISE: u64 = 4;
}

fn leaf_keys(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) if prefix != "sweep.axes" => {
            for (k, child) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_keys(&key, child, out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// TOML integers are i64, so seeds past `i64::MAX` travel as decimal strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("seed `{t}` is not a u64"))),
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentConfig {
    /// All settable dotted keys.
    pub fn valid_keys() -> Vec<String> {
        let v = toml::Value::try_from(Self::default()).expect("default config serializes");
        let mut keys = Vec::new();
        leaf_keys("", &v, &mut keys);
        keys.extend(OPTIONAL_KEYS.iter().map(|s| s.to_string()));
        keys.sort();
        keys
    }

    fn check_key(key: &str) -> Result<()> {
        let keys = Self::valid_keys();
        let target = key.strip_prefix("sweep.axes.").unwrap_or(key);
        if keys.iter().any(|k| k == target) && !target.starts_with("sweep.") {
            return Ok(());
        }
        if keys.iter().any(|k| k == key) {
            return Ok(());
        }
        Err(Error::Config(format!("unknown key `{key}`; valid keys: {}", keys.join(", "))))
    }

    fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
        let (path, leaf) = match key.strip_prefix("sweep.axes.") {
            Some(axis) => (vec!["sweep", "axes"], axis),
            None => {
                let mut parts: Vec<&str> = key.split('.').collect();
                let leaf = parts.pop().expect("split yields one part");
                (parts, leaf)
            }
        };
        let mut node = root;
        for p in path {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{key}` crosses a non-table value")))?;
            node = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        node.as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}` crosses a non-table value")))?
            .insert(leaf.to_string(), value);
        Ok(())
    }

    /// Parse TOML text and apply `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Value = toml::from_str::<toml::Table>(text)
            .map(toml::Value::Table)
            .map_err(|e| Error::parse("config", e.message()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let key = key.trim();
            Self::check_key(key)?;
            Self::set_path(&mut root, key, parse_scalar(raw.trim()))?;
        }
        let cfg: Self = root.try_into().map_err(|e: toml::de::Error| {
            let mut msg = e.message().to_string();
            if msg.contains("unknown field") {
                msg.push_str(&format!("; valid keys: {}", Self::valid_keys().join(", ")));
            }
            Error::Config(msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    /// Copy with extra overrides applied.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::from_toml_str(&self.to_toml()?, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scene;
        let positive = [
            ("scene.area_width", s.area_width),
            ("scene.area_height", s.area_height),
            ("scene.node_height", s.node_height),
            ("scene.frequency_hz", s.frequency_hz),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be > 0, got {v}")));
            }
        }
        let component = || -> Result<()> {
            self.quadrature().validate()?;
            self.membership().validate()?;
            self.bound_config().validate()?;
            self.profile()?;
            self.train_config().validate()
        };
        component().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        if self.model.noise_sigma_db < 0.0 {
            return Err(Error::Config("model.noise_sigma_db must be >= 0".into()));
        }
        if self.bounds.n_min > self.bounds.n_max || self.data.n_min > self.data.n_max {
            return Err(Error::Config("n_min must not exceed n_max".into()));
        }
        if self.ingest.window_ms == 0 || self.ingest.averaging_window == 0 {
            return Err(Error::Config("ingest windows must be >= 1".into()));
        }
        for key in self.sweep.axes.keys() {
            Self::check_key(key)?;
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        crate::wavelength(self.scene.frequency_hz)
    }

    pub fn area(&self) -> Result<Area> {
        Area::new(self.scene.area_width, self.scene.area_height)
    }

    pub fn build_graph(&self) -> Result<NetworkGraph> {
        let placement = match self.scene.spacing {
            Some(d) => NodePlacement::Spacing(d),
            None => NodePlacement::Count(self.scene.nodes),
        };
        build_perimeter_network(self.area()?, placement, self.scene.node_height, LinkRule::AllPairs)
    }

    pub fn profile(&self) -> Result<SubjectProfile> {
        match self.scene.subject_dims {
            Some([h, ap, lat]) => SubjectProfile::new("custom", h, ap, lat),
            None => SubjectProfile::preset(&self.scene.subject)
                .ok_or_else(|| Error::Config(format!("unknown subject `{}` (expected A, B, C)", self.scene.subject))),
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            step_fraction: self.model.step_fraction,
            max_elements: self.model.max_elements,
        }
    }

    pub fn membership(&self) -> MembershipConfig {
        MembershipConfig {
            overlap_threshold: self.model.overlap_threshold,
            footprint_samples: self.model.footprint_samples,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            sigma_db: self.model.noise_sigma_db,
            enabled: self.model.noise_enabled,
        }
    }

    pub fn bound_config(&self) -> BoundConfig {
        BoundConfig {
            tau: self.bounds.tau,
            variant: self.bounds.variant,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            early_stop_patience: t.early_stop_patience,
            lr_decay_patience: t.lr_decay_patience,
            min_learning_rate: t.min_learning_rate,
            rng_seed: derive_seed(self.seed, stream::TRAIN),
            validation_fraction: t.validation_fraction,
            iterations: t.iterations,
            include_sort_channel: t.include_sort_channel,
        }
    }

    pub fn stream_seed(&self, stream: u64) -> u64 {
        derive_seed(self.seed, stream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = ExperimentConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.build_graph().unwrap().num_nodes(), 60);
    }

    #[test]
    fn file_and_overrides() {
        let text = "seed = 4\n[scene]\nnodes = 25\narea_width = 5.0\narea_height = 5.0\n";
        let c = ExperimentConfig::from_toml_str(text, &["scene.frequency_hz=2.4e9".into(), "bounds.variant=literal-guarded".into()]).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.scene.nodes, 25);
        assert_eq!(c.scene.frequency_hz, 2.4e9);
        assert_eq!(c.bounds.variant, Variant::LiteralGuarded);
        let c = ExperimentConfig::from_toml_str("", &["scene.spacing=0.67".into(), "ingest.label=3".into()]).unwrap();
        assert_eq!(c.build_graph().unwrap().num_nodes(), 60);
        assert_eq!(c.ingest.label, Some(3));
    }

    #[test]
    fn unknown_keys_list_valid_ones() {
        let e = ExperimentConfig::from_toml_str("", &["scene.bogus=1".into()]).unwrap_err();
        assert_eq!(e.category(), "config-error");
        assert!(e.to_string().contains("scene.nodes"), "{e}");
        let e = ExperimentConfig::from_toml_str("[model]\nfoo = 1\n", &[]).unwrap_err();
        assert!(e.to_string().contains("unknown field"), "{e}");
        assert!(e.to_string().contains("model.step_fraction"), "{e}");
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml_str("", &["bounds.tau=1.5".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str("", &["scene.subject=\"Z\"".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str("[scene]\nnodes = \"x\"\n", &[]).is_err());
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let mut c = ExperimentConfig::default();
        c.sweep.axes.insert("scene.nodes".into(), vec![toml::Value::Integer(25), toml::Value::Integer(60)]);
        c.ingest.label = Some(2);
        let back = ExperimentConfig::from_toml_str(&c.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(ExperimentConfig::default().hash(), c.hash());
    }

    #[test]
    fn sweep_axis_keys_checked() {
        let ok = ExperimentConfig::from_toml_str("[sweep.axes]\n\"scene.nodes\" = [25, 60]\n", &[]);
        assert!(ok.is_ok());
        let bad = ExperimentConfig::from_toml_str("[sweep.axes]\n\"scene.nope\" = [1]\n", &[]);
        assert!(bad.is_err());
    }
}
