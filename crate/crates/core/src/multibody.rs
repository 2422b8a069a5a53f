//! Multi-body attenuation models and network snapshots.
//!
//! Two compositions of the single-body diffraction loss are provided:
//!
//! - **MAM** sums the loss of every body on every link.
//! - **C-MAM** only counts bodies inside the link's Fresnel region and keeps
//!   the largest of their losses (the dominant body shadows the rest).
//!
//! Links `(u, v)` and `(v, u)` share geometry; losses are always evaluated
//! with the lower node index as transmitter so both directions agree bit for bit.

use std::collections::HashMap;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffraction::{single_target_attenuation, LinkGeometry, QuadratureConfig};
use crate::error::{Error, Result};
use crate::geometry::{FresnelTable, MembershipConfig, NetworkGraph, TargetParams};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "mam")]
    Mam,
    #[serde(rename = "c-mam")]
    Cmam,
    #[serde(rename = "measured")]
    Measured,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Mam => "mam",
            ModelKind::Cmam => "c-mam",
            ModelKind::Measured => "measured",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mam" => Ok(ModelKind::Mam),
            "c-mam" | "cmam" => Ok(ModelKind::Cmam),
            "measured" => Ok(ModelKind::Measured),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind `{other}` (expected mam, c-mam, measured)"
            ))),
        }
    }
}

/// Per-node attenuation features of one time instant.
///
/// Row `u` lists the attenuation of links `(u, v)` for the neighbors `v` of
/// `u` in ascending order, zero-padded to the largest out-degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationSnapshot {
    pub node_features: Vec<Vec<f64>>,
    pub timestamp: u64,
    pub model_kind: ModelKind,
}

impl AttenuationSnapshot {
    /// Arrange per-link values (indexed like `graph.links()`) into node rows.
    pub fn from_link_values(
        graph: &NetworkGraph,
        link_values: &[f64],
        timestamp: u64,
        model_kind: ModelKind,
    ) -> Result<Self> {
        if link_values.len() != graph.num_links() {
            return Err(Error::ShapeMismatch(format!(
                "{} link values for {} links",
                link_values.len(),
                graph.num_links()
            )));
        }
        let width = graph.max_degree();
        let node_features = (0..graph.num_nodes())
            .map(|u| {
                let mut row = vec![0.0; width];
                for (j, &v) in graph.neighbors(u).iter().enumerate() {
                    let l = graph.link_index(u, v).expect("neighbor implies link");
                    row[j] = link_values[l];
                }
                row
            })
            .collect();
        Ok(Self {
            node_features,
            timestamp,
            model_kind,
        })
    }

    /// Inverse of [`AttenuationSnapshot::from_link_values`].
    pub fn link_values(&self, graph: &NetworkGraph) -> Result<Vec<f64>> {
        self.check_shape(graph)?;
        let mut out = vec![0.0; graph.num_links()];
        for u in 0..graph.num_nodes() {
            for (j, &v) in graph.neighbors(u).iter().enumerate() {
                out[graph.link_index(u, v).expect("neighbor implies link")] = self.node_features[u][j];
            }
        }
        Ok(out)
    }

    pub fn shape(&self) -> (usize, usize) {
        (
            self.node_features.len(),
            self.node_features.first().map_or(0, Vec::len),
        )
    }

    pub fn check_shape(&self, graph: &NetworkGraph) -> Result<()> {
        let expected = (graph.num_nodes(), graph.max_degree());
        let ragged = self.node_features.iter().any(|r| r.len() != expected.1);
        if self.node_features.len() != expected.0 || ragged {
            return Err(Error::ShapeMismatch(format!(
                "snapshot is {:?}, graph needs {:?}",
                self.shape(),
                expected
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation of the dB-domain disturbance.
    pub sigma_db: f64,
    pub enabled: bool,
}

impl NoiseConfig {
    pub fn off() -> Self {
        Self {
            sigma_db: 0.0,
            enabled: false,
        }
    }

    pub fn gaussian(sigma_db: f64) -> Self {
        Self {
            sigma_db,
            enabled: true,
        }
    }
}

/// Received powers of every link, dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssSnapshot {
    pub link_power: Vec<f64>,
    pub free_space_power: Vec<f64>,
}

/// Link geometry with the lower node index as transmitter.
pub fn canonical_link(graph: &NetworkGraph, link: usize) -> LinkGeometry {
    let (u, v) = graph.links()[link];
    let p = graph.node_positions();
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    LinkGeometry::new(p[a], p[b]).expect("validated graph")
}

fn body_loss(
    graph: &NetworkGraph,
    link: usize,
    target: &TargetParams,
    wavelength: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    single_target_attenuation(&canonical_link(graph, link), target, wavelength, quad)
}

/// Additive model: sum of every body's single-obstacle loss on `link`.
pub fn mam_link_attenuation(
    link: usize,
    graph: &NetworkGraph,
    targets: &[TargetParams],
    wavelength: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    targets
        .iter()
        .map(|t| body_loss(graph, link, t, wavelength, quad))
        .sum()
}

/// Single-obstacle loss when `target` is in the Fresnel region of `link`, else 0.
pub fn cmam_target_attenuation(
    link: usize,
    graph: &NetworkGraph,
    target: &TargetParams,
    wavelength: f64,
    quad: &QuadratureConfig,
    cfg: &MembershipConfig,
) -> Result<f64> {
    if crate::geometry::fresnel_membership(target, link, graph, wavelength, cfg)? {
        body_loss(graph, link, target, wavelength, quad)
    } else {
        Ok(0.0)
    }
}

/// Dominant in-region body of `link` and its loss; ties go to the lower index.
pub fn cmam_dominant(
    link: usize,
    graph: &NetworkGraph,
    targets: &[TargetParams],
    wavelength: f64,
    quad: &QuadratureConfig,
    cfg: &MembershipConfig,
) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in targets.iter().enumerate() {
        if !crate::geometry::fresnel_membership(t, link, graph, wavelength, cfg)? {
            continue;
        }
        let a = body_loss(graph, link, t, wavelength, quad)?;
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    Ok(best)
}

/// Composite model: largest loss among in-region bodies, 0 if none.
pub fn cmam_link_attenuation(
    link: usize,
    graph: &NetworkGraph,
    targets: &[TargetParams],
    wavelength: f64,
    quad: &QuadratureConfig,
    cfg: &MembershipConfig,
) -> Result<f64> {
    Ok(cmam_dominant(link, graph, targets, wavelength, quad, cfg)?.map_or(0.0, |(_, a)| a))
}

/// Per-body, per-link losses of one scene, shared by both models.
///
/// Evaluated once per unordered node pair. When only C-MAM is needed the
/// diffraction integral is skipped for out-of-region bodies.
#[derive(Debug, Clone)]
pub struct SceneLosses {
    /// Ordered link indices per unordered pair.
    pair_links: Vec<Vec<usize>>,
    /// `loss[pair][target]`; `None` when not evaluated.
    loss: Vec<Vec<Option<f64>>>,
    member: Vec<Vec<bool>>,
    num_links: usize,
}

impl SceneLosses {
    pub fn compute(
        graph: &NetworkGraph,
        targets: &[TargetParams],
        wavelength: f64,
        quad: &QuadratureConfig,
        cfg: &MembershipConfig,
        need_mam: bool,
    ) -> Result<Self> {
        quad.validate()?;
        let table = FresnelTable::new(graph, wavelength, cfg)?;
        let membership: Vec<Vec<bool>> = targets
            .iter()
            .map(|t| table.membership_row(t, graph.num_links()))
            .collect();

        let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pair_links: Vec<Vec<usize>> = Vec::new();
        for (idx, &(u, v)) in graph.links().iter().enumerate() {
            let s = *slot.entry((u.min(v), u.max(v))).or_insert_with(|| {
                pair_links.push(Vec::new());
                pair_links.len() - 1
            });
            pair_links[s].push(idx);
        }

        let rows: Vec<(Vec<Option<f64>>, Vec<bool>)> = pair_links
            .par_iter()
            .map(|links| {
                let rep = links[0];
                let link = canonical_link(graph, rep);
                let mut loss = Vec::with_capacity(targets.len());
                let mut member = Vec::with_capacity(targets.len());
                for (t, m) in targets.iter().zip(&membership) {
                    let inside = m[rep];
                    member.push(inside);
                    if need_mam || inside {
                        loss.push(Some(single_target_attenuation(&link, t, wavelength, quad)?));
                    } else {
                        loss.push(None);
                    }
                }
                Ok((loss, member))
            })
            .collect::<Result<_>>()?;
        let (loss, member) = rows.into_iter().unzip();
        Ok(Self {
            pair_links,
            loss,
            member,
            num_links: graph.num_links(),
        })
    }

    /// Per-link MAM values. Requires `need_mam` at construction.
    pub fn mam_links(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_links];
        for (links, row) in self.pair_links.iter().zip(&self.loss) {
            let mut sum = 0.0;
            for v in row {
                sum += v.ok_or_else(|| {
                    Error::InvalidArgument("scene losses were computed without MAM terms".into())
                })?;
            }
            for &l in links {
                out[l] = sum;
            }
        }
        Ok(out)
    }

    /// Per-link C-MAM values.
    pub fn cmam_links(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_links];
        for ((links, row), member) in self.pair_links.iter().zip(&self.loss).zip(&self.member) {
            let mut best = 0.0f64;
            for (v, &m) in row.iter().zip(member) {
                if m {
                    best = best.max(v.expect("members always evaluated"));
                }
            }
            for &l in links {
                out[l] = best;
            }
        }
        out
    }

    pub fn links(&self, kind: ModelKind) -> Result<Vec<f64>> {
        match kind {
            ModelKind::Mam => self.mam_links(),
            ModelKind::Cmam => Ok(self.cmam_links()),
            ModelKind::Measured => Err(Error::InvalidArgument(
                "measured snapshots cannot be simulated".into(),
            )),
        }
    }
}

/// Network snapshot of a scene under the chosen model.
pub fn snapshot(
    graph: &NetworkGraph,
    targets: &[TargetParams],
    model_kind: ModelKind,
    wavelength: f64,
    quad: &QuadratureConfig,
    cfg: &MembershipConfig,
) -> Result<AttenuationSnapshot> {
    snapshot_at(graph, targets, model_kind, wavelength, quad, cfg, 0)
}

pub fn snapshot_at(
    graph: &NetworkGraph,
    targets: &[TargetParams],
    model_kind: ModelKind,
    wavelength: f64,
    quad: &QuadratureConfig,
    cfg: &MembershipConfig,
    timestamp: u64,
) -> Result<AttenuationSnapshot> {
    let losses = SceneLosses::compute(
        graph,
        targets,
        wavelength,
        quad,
        cfg,
        model_kind == ModelKind::Mam,
    )?;
    AttenuationSnapshot::from_link_values(graph, &losses.links(model_kind)?, timestamp, model_kind)
}

/// Received powers for a snapshot: `P = P(∅) − A + w`, `w ~ N(0, σ²)` per link.
pub fn simulate_rss(
    graph: &NetworkGraph,
    snapshot: &AttenuationSnapshot,
    free_space_power: &[f64],
    noise: &NoiseConfig,
    rng_seed: u64,
) -> Result<RssSnapshot> {
    if free_space_power.len() != graph.num_links() {
        return Err(Error::ShapeMismatch(format!(
            "{} free-space powers for {} links",
            free_space_power.len(),
            graph.num_links()
        )));
    }
    if noise.sigma_db < 0.0 || !noise.sigma_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma_db must be >= 0, got {}",
            noise.sigma_db
        )));
    }
    let attenuation = snapshot.link_values(graph)?;
    let mut rng = rng_from_seed(rng_seed);
    let normal = Normal::new(0.0, noise.sigma_db.max(0.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let link_power = attenuation
        .iter()
        .zip(free_space_power)
        .map(|(a, p0)| {
            let w = if noise.enabled { normal.sample(&mut rng) } else { 0.0 };
            p0 - a + w
        })
        .collect();
    Ok(RssSnapshot {
        link_power,
        free_space_power: free_space_power.to_vec(),
    })
}
