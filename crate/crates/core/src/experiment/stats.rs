use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::trial::{Atom, TrialResult};

/// Cells per axis of the spatial uniformity partition.
pub const UNIFORMITY_CELLS_PER_AXIS: usize = 4;

/// Sample moments of a per-trial statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased (`n - 1`) sample variance; `0` for a single trial.
    pub variance: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Moments {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let t = v.len() as f64;
        if v.is_empty() {
            return Self {
                mean: 0.0,
                variance: 0.0,
                std_error: 0.0,
                trials: 0,
            };
        }
        let mean = v.iter().sum::<f64>() / t;
        let variance = if v.len() > 1 {
            v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            variance,
            std_error: (variance / t).sqrt(),
            trials: v.len() as u64,
        }
    }
}

/// A proportion with its binomial standard error `sqrt(p (1-p) / T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub trials: u64,
}

impl Probability {
    pub fn from_hits(hits: u64, trials: u64) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Self {
            estimate: p,
            std_error: if trials == 0 { 0.0 } else { (p * (1.0 - p) / trials as f64).sqrt() },
            hits,
            trials,
        }
    }
}

/// Moments and tail probabilities of a count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub moments: Moments,
    pub at_least_one: Probability,
    pub at_least_two: Probability,
}

impl CountStats {
    pub fn from_counts(counts: &[u64]) -> Self {
        let t = counts.len() as u64;
        Self {
            moments: Moments::from_values(counts.iter().map(|&c| c as f64)),
            at_least_one: Probability::from_hits(counts.iter().filter(|&&c| c >= 1).count() as u64, t),
            at_least_two: Probability::from_hits(counts.iter().filter(|&&c| c >= 2).count() as u64, t),
        }
    }
}

/// Atoms per trial with `u` in `[lo, hi)`; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: Option<f64>,
    pub atoms: u64,
    pub moments: Moments,
}

/// Pearson chi-square of pooled atom centers over a `4^d` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uniformity {
    pub cells: u64,
    pub atoms: u64,
    pub chi_square: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Order-independent summary of a set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub trials: u64,
    pub points: Moments,
    pub g: CountStats,
    pub g_pos: Option<CountStats>,
    pub g_neg_k: Option<CountStats>,
    pub g_neg_next: Option<CountStats>,
    pub bins: Vec<BinStats>,
    pub minus_bins: Vec<BinStats>,
    pub uniformity: Uniformity,
    /// `P̂(G⁺_k != G⁻_{k+1})`.
    pub discrepancy: Option<Probability>,
    pub invariant_checks: u64,
}

fn bin_stats(results: &[TrialResult], edges: &[f64], atoms: impl Fn(&TrialResult) -> &[Atom]) -> Vec<BinStats> {
    (0..edges.len())
        .map(|b| {
            let lo = edges[b];
            let hi = edges.get(b + 1).copied();
            let counts: Vec<u64> = results
                .iter()
                .map(|r| {
                    atoms(r)
                        .iter()
                        .filter(|a| a.u >= lo && hi.is_none_or(|h| a.u < h))
                        .count() as u64
                })
                .collect();
            BinStats {
                lo,
                hi,
                atoms: counts.iter().sum(),
                moments: Moments::from_values(counts.iter().map(|&c| c as f64)),
            }
        })
        .collect()
}

/// Chi-square uniformity of `centers` over `m^d` equal cells.
pub fn uniformity(centers: impl Iterator<Item = Vec<f64>>, d: usize, m: usize) -> Uniformity {
    let cells = m.pow(d as u32);
    let mut counts = vec![0u64; cells];
    for c in centers {
        let cell = c.iter().fold(0usize, |acc, &x| acc * m + ((x * m as f64) as usize).min(m - 1));
        counts[cell] += 1;
    }
    let atoms: u64 = counts.iter().sum();
    let dof = (cells - 1) as u64;
    if atoms == 0 {
        return Uniformity {
            cells: cells as u64,
            atoms,
            chi_square: 0.0,
            dof,
            p_value: 1.0,
        };
    }
    let e = atoms as f64 / cells as f64;
    let chi: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let p = ChiSquared::new(dof as f64).map(|dist| dist.sf(chi)).unwrap_or(f64::NAN);
    Uniformity {
        cells: cells as u64,
        atoms,
        chi_square: chi,
        dof,
        p_value: p,
    }
}

/// Reduces trial results (in any order) to summary statistics.
pub fn aggregate(results: &[TrialResult], cfg: &ExperimentConfig) -> Result<AggregateStats> {
    if results.is_empty() {
        return Err(Error::Contract("aggregate needs at least one trial".into()));
    }
    let mut sorted: Vec<&TrialResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    let results: Vec<TrialResult> = sorted.into_iter().cloned().collect();
    let counts = |f: fn(&TrialResult) -> u64| -> Vec<u64> { results.iter().map(f).collect() };
    let edges = cfg.bin_edges();
    let g_pos = counts(TrialResult::g_pos);
    let g_next = counts(TrialResult::g_neg_next);
    let discrepancy = cfg.tracks_next().then(|| {
        Probability::from_hits(
            g_pos.iter().zip(&g_next).filter(|(a, b)| a != b).count() as u64,
            results.len() as u64,
        )
    });
    Ok(AggregateStats {
        trials: results.len() as u64,
        points: Moments::from_values(results.iter().map(|r| r.points as f64)),
        g: CountStats::from_counts(&counts(TrialResult::g)),
        g_pos: cfg.classify_signs.then(|| CountStats::from_counts(&g_pos)),
        g_neg_k: cfg.classify_signs.then(|| CountStats::from_counts(&counts(TrialResult::g_neg_k))),
        g_neg_next: cfg.tracks_next().then(|| CountStats::from_counts(&g_next)),
        bins: bin_stats(&results, &edges, |r| &r.atoms),
        minus_bins: if cfg.tracks_next() {
            bin_stats(&results, &edges, |r| &r.minus_atoms)
        } else {
            Vec::new()
        },
        uniformity: uniformity(
            results.iter().flat_map(|r| r.atoms.iter().map(|a| a.center.coords().to_vec())),
            cfg.d,
            UNIFORMITY_CELLS_PER_AXIS,
        ),
        discrepancy,
        invariant_checks: results.iter().filter(|r| r.morse.is_some()).count() as u64,
    })
}
