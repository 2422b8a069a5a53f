//! Link sets, Jaccard resolvability and the resolvable-target count.
//!
//! A target is resolvable when its link set `Q_n` is non-empty and differs
//! (Jaccard distance above `tau`) from every other target's set. Targets
//! that cannot be told apart are folded into fractional contributions.
//! Counts are kept as exact rationals; `f64` is only used for reporting.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_targets, FresnelTable, MembershipConfig, NetworkGraph, SubjectProfile, TargetParams};
use crate::rng::derive_seed;

/// Per-target link sets `Q_n` (sorted, duplicate-free link indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSetFamily {
    pub sets: Vec<Vec<usize>>,
}

impl LinkSetFamily {
    pub fn new(mut sets: Vec<Vec<usize>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        Self { sets }
    }

    pub fn n_targets(&self) -> usize {
        self.sets.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Variant {
    /// Divides the overlap correction by the number of look-alikes.
    #[serde(rename = "literal-guarded")]
    LiteralGuarded,
    /// Divides by the cluster size, so a cluster counts once.
    #[default]
    #[serde(rename = "cluster-consistent")]
    ClusterConsistent,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::LiteralGuarded => "literal-guarded",
            Variant::ClusterConsistent => "cluster-consistent",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal-guarded" => Ok(Variant::LiteralGuarded),
            "cluster-consistent" => Ok(Variant::ClusterConsistent),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant `{other}` (expected literal-guarded, cluster-consistent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub tau: f64,
    pub variant: Variant,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            variant: Variant::ClusterConsistent,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in [0, 1), got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub n_hat: Ratio<i64>,
    pub theta1: Vec<u8>,
    pub theta2: Vec<u8>,
    /// Number of other targets within `tau` of each target.
    pub psi: Vec<usize>,
}

impl BoundResult {
    pub fn n_hat_f64(&self) -> f64 {
        *self.n_hat.numer() as f64 / *self.n_hat.denom() as f64
    }

    /// Nearest integer, halves rounded up.
    pub fn rounded(&self) -> i64 {
        (self.n_hat + Ratio::new(1, 2)).floor().to_integer()
    }
}

/// `Q_n` for every target using the Fresnel-region membership rule.
pub fn link_sets(
    graph: &NetworkGraph,
    targets: &[TargetParams],
    wavelength: f64,
    cfg: &MembershipConfig,
) -> Result<LinkSetFamily> {
    let table = FresnelTable::new(graph, wavelength, cfg)?;
    Ok(link_sets_with(&table, targets))
}

pub fn link_sets_with(table: &FresnelTable, targets: &[TargetParams]) -> LinkSetFamily {
    LinkSetFamily::new(targets.iter().map(|t| table.covering_links(t)).collect())
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `1 - |A ∩ B| / |A ∪ B|` as an exact fraction; two empty sets give 0.
pub fn jaccard_ratio(q_n: &[usize], q_m: &[usize]) -> Ratio<i64> {
    let inter = intersection_len(q_n, q_m) as i64;
    let union = (q_n.len() + q_m.len()) as i64 - inter;
    if union == 0 {
        return Ratio::from_integer(0);
    }
    Ratio::new(union - inter, union)
}

/// Jaccard distance of two sorted link sets.
pub fn jaccard_distance(q_n: &[usize], q_m: &[usize]) -> f64 {
    let r = jaccard_ratio(q_n, q_m);
    *r.numer() as f64 / *r.denom() as f64
}

/// `δ > τ` decided exactly for the binary value of `tau`.
fn separated(q_n: &[usize], q_m: &[usize], tau: f64) -> bool {
    let inter = intersection_len(q_n, q_m);
    let union = q_n.len() + q_m.len() - inter;
    if union == 0 {
        return false;
    }
    let (diff, union) = ((union - inter) as f64, union as f64);
    let delta = diff / union;
    if delta != tau {
        // correctly rounded division preserves strict order against a float
        return delta > tau;
    }
    // a single rounding keeps the sign of tau*union - diff
    tau.mul_add(union, -diff) < 0.0
}

/// 1 when target `n` is farther than `tau` from every other target.
pub fn theta1(n: usize, family: &LinkSetFamily, tau: f64) -> u8 {
    let qn = &family.sets[n];
    let all = family
        .sets
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != n)
        .all(|(_, qm)| separated(qn, qm, tau));
    u8::from(all)
}

/// 1 when at least one link covers the target.
pub fn theta2(q_n: &[usize]) -> u8 {
    u8::from(!q_n.is_empty())
}

/// Resolvable-target count of a link-set family.
pub fn resolvable_count(family: &LinkSetFamily, cfg: &BoundConfig) -> BoundResult {
    let n = family.n_targets();
    let mut psi = vec![0usize; n];
    for a in 0..n {
        for b in (a + 1)..n {
            if !separated(&family.sets[a], &family.sets[b], cfg.tau) {
                psi[a] += 1;
                psi[b] += 1;
            }
        }
    }
    let theta1: Vec<u8> = psi.iter().map(|&p| u8::from(p == 0)).collect();
    let theta2: Vec<u8> = family.sets.iter().map(|q| theta2(q)).collect();

    let mut n_hat = Ratio::from_integer(0i64);
    for i in 0..n {
        if theta2[i] == 0 {
            continue;
        }
        if theta1[i] == 1 {
            n_hat += 1;
            continue;
        }
        let divisor = match cfg.variant {
            Variant::LiteralGuarded => psi[i] as i64,
            Variant::ClusterConsistent => psi[i] as i64 + 1,
        };
        if divisor > 0 {
            n_hat += Ratio::new(1, divisor);
        }
    }
    BoundResult {
        n_hat,
        theta1,
        theta2,
        psi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub n_targets: usize,
    pub accuracy: f64,
    pub n_hat_mean: f64,
}

/// Monte Carlo probability that the rounded count equals `n_targets`.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_bound(
    graph: &NetworkGraph,
    n_targets: usize,
    profile: &SubjectProfile,
    cfg: &BoundConfig,
    wavelength: f64,
    n_trials: usize,
    rng_seed: u64,
    membership: &MembershipConfig,
) -> Result<AccuracyPoint> {
    let table = FresnelTable::new(graph, wavelength, membership)?;
    accuracy_with_table(graph, &table, n_targets, profile, cfg, n_trials, rng_seed)
}

pub fn accuracy_with_table(
    graph: &NetworkGraph,
    table: &FresnelTable,
    n_targets: usize,
    profile: &SubjectProfile,
    cfg: &BoundConfig,
    n_trials: usize,
    rng_seed: u64,
) -> Result<AccuracyPoint> {
    cfg.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    let area = graph.area();
    let outcomes: Vec<(bool, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let targets = sample_targets(n_targets, area, profile, derive_seed(rng_seed, i as u64));
            let r = resolvable_count(&link_sets_with(table, &targets), cfg);
            (r.rounded() == n_targets as i64, r.n_hat_f64())
        })
        .collect();
    let hits = outcomes.iter().filter(|o| o.0).count();
    let n_hat_sum: f64 = outcomes.iter().map(|o| o.1).sum();
    Ok(AccuracyPoint {
        n_targets,
        accuracy: hits as f64 / n_trials as f64,
        n_hat_mean: n_hat_sum / n_trials as f64,
    })
}

/// Accuracy for each target count; every count gets its own derived seed.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_curve(
    graph: &NetworkGraph,
    counts: &[usize],
    profile: &SubjectProfile,
    cfg: &BoundConfig,
    wavelength: f64,
    n_trials: usize,
    rng_seed: u64,
    membership: &MembershipConfig,
) -> Result<Vec<AccuracyPoint>> {
    let table = FresnelTable::new(graph, wavelength, membership)?;
    counts
        .iter()
        .map(|&n| {
            accuracy_with_table(graph, &table, n, profile, cfg, n_trials, derive_seed(rng_seed, n as u64))
        })
        .collect()
}
