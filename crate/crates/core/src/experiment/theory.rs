use serde::{Deserialize, Serialize};

use crate::constants::{lambda_target, ConstantEstimate};
use crate::error::{Error, Result};
use crate::quadrature::integrate;

use super::config::{ExperimentConfig, Window};
use super::stats::{AggregateStats, CountStats, Probability};

/// Finite-size allowance added to `3σ` when gating the asymptotic limits.
pub const FINITE_SIZE_ALLOWANCE: f64 = 0.15;
/// Largest accepted `P̂(G >= 2) / b_{k,n}` at the final sweep intensity.
pub const TWO_ATOM_RATIO_LIMIT: f64 = 0.3;
/// Smallest accepted uniformity p-value.
pub const UNIFORMITY_ALPHA: f64 = 1e-3;

fn check_dk(dk: &ConstantEstimate) -> Result<()> {
    if !(dk.value.is_finite() && dk.value > 0.0 && dk.std_error.is_finite()) {
        return Err(Error::Dependency(format!("D_k unavailable: {dk:?}")));
    }
    Ok(())
}

/// `∫_lo^hi (1 + u/a)^{k-1} e^{-u} du`; closed form for `k = 1`.
fn intensity_integral(a: f64, k: usize, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok((-lo).exp() - (-hi).exp());
    }
    integrate(|u| (1.0 + u / a).powi(k as i32 - 1) * (-u).exp(), lo, hi, 1e-12)
}

/// Exact mean of `G_{k,n}` from the Mecke formula.
pub fn mecke_expected_count(cfg: &ExperimentConfig, w: &Window, dk: &ConstantEstimate) -> Result<f64> {
    mecke_expected_bin(cfg, w, dk, cfg.u0, f64::INFINITY)
}

/// Exact mean number of atoms with `u` in `[lo, hi)`.
pub fn mecke_expected_bin(cfg: &ExperimentConfig, w: &Window, dk: &ConstantEstimate, lo: f64, hi: f64) -> Result<f64> {
    check_dk(dk)?;
    if !(cfg.u0 <= lo && lo < hi) {
        return Err(Error::Contract(format!("bin [{lo}, {hi}) must satisfy u0 <= lo < hi")));
    }
    let top = hi.min(w.u_max);
    Ok(dk.value * w.b_kn * intensity_integral(w.a_n, cfg.k, lo, top)?)
}

/// How a report row decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PassRule {
    /// `|z| <= 3`.
    ZScore,
    /// `|empirical - target| <= 3σ + allowance · target`.
    Band { allowance: f64 },
    /// `empirical < limit`.
    Below { limit: f64 },
    /// `empirical >= alpha` (a p-value).
    AtLeast { alpha: f64 },
}

/// Whether a row is an identity at finite `n` or a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Exact,
    Asymptotic,
    Uniformity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub statistic: String,
    pub kind: RowKind,
    pub empirical: f64,
    pub target: f64,
    pub std_error: f64,
    pub z: f64,
    pub rule: PassRule,
    pub pass: bool,
}

impl TheoryRow {
    fn new(statistic: String, kind: RowKind, empirical: f64, target: f64, std_error: f64, rule: PassRule) -> Self {
        let z = if std_error > 0.0 { (empirical - target) / std_error } else { 0.0 };
        let pass = match rule {
            PassRule::ZScore => z.abs() <= 3.0,
            PassRule::Band { allowance } => (empirical - target).abs() <= 3.0 * std_error + allowance * target.abs(),
            PassRule::Below { limit } => empirical < limit,
            PassRule::AtLeast { alpha } => empirical >= alpha,
        };
        Self {
            statistic,
            kind,
            empirical,
            target,
            std_error,
            z,
            rule,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub rows: Vec<TheoryRow>,
}

impl TheoryReport {
    pub fn row(&self, statistic: &str) -> Option<&TheoryRow> {
        self.rows.iter().find(|r| r.statistic == statistic)
    }

    /// Whether every finite-`n` identity passed.
    pub fn exact_rows_pass(&self) -> bool {
        self.rows.iter().filter(|r| r.kind == RowKind::Exact).all(|r| r.pass)
    }
}

/// Standard error of a mean of counts against `target`; falls back to the
/// Poisson null `sqrt(target / T)` when the sample has no spread.
fn mean_std_error(se: f64, target: f64, trials: u64) -> f64 {
    if se > 0.0 {
        se
    } else {
        (target.max(0.0) / trials as f64).sqrt()
    }
}

/// `b^{-1} P̂(count >= 1)` with its standard error, including the `D_k`
/// uncertainty. Falls back to the binomial null at `p0 = min(target·b, 1)`
/// when the sample has no spread.
pub fn scaled_probability(p: &Probability, b: f64, target: f64, dk: &ConstantEstimate, u0: f64) -> (f64, f64) {
    let est = p.estimate / b;
    let se_p = if p.std_error > 0.0 {
        p.std_error
    } else {
        let p0 = (target * b).clamp(0.0, 1.0);
        (p0 * (1.0 - p0) / p.trials.max(1) as f64).sqrt()
    };
    let se_dk = (-u0).exp() * dk.std_error;
    (est, ((se_p / b).powi(2) + se_dk * se_dk).sqrt())
}

/// Compares aggregate statistics with the Mecke identities and the limits.
pub fn compare_to_theory(stats: &AggregateStats, cfg: &ExperimentConfig, w: &Window, dk: &ConstantEstimate) -> Result<TheoryReport> {
    let t = stats.trials;
    let rel_dk = dk.std_error / dk.value;
    let mut rows = Vec::new();

    let target = mecke_expected_count(cfg, w, dk)?;
    let se = mean_std_error(stats.g.moments.std_error, target, t);
    rows.push(TheoryRow::new(
        "mean_G".into(),
        RowKind::Exact,
        stats.g.moments.mean,
        target,
        se.hypot(target * rel_dk),
        PassRule::ZScore,
    ));
    for bin in &stats.bins {
        let hi = bin.hi.unwrap_or(f64::INFINITY);
        let target = mecke_expected_bin(cfg, w, dk, bin.lo, hi)?;
        let se = mean_std_error(bin.moments.std_error, target, t);
        let name = match bin.hi {
            Some(h) => format!("bin_mean[{},{})", bin.lo, h),
            None => format!("bin_mean[{},inf)", bin.lo),
        };
        rows.push(TheoryRow::new(name, RowKind::Exact, bin.moments.mean, target, se.hypot(target * rel_dk), PassRule::ZScore));
    }

    let limit = lambda_target(cfg.u0, dk);
    let mut limit_row = |name: &str, c: &CountStats| {
        let (est, se) = scaled_probability(&c.at_least_one, w.b_kn, limit, dk, cfg.u0);
        rows.push(TheoryRow::new(name.into(), RowKind::Asymptotic, est, limit, se, PassRule::ZScore));
    };
    limit_row("scaled_P(G>=1)", &stats.g);
    if let Some(c) = &stats.g_pos {
        limit_row("scaled_P(G+>=1)", c);
    }
    if let Some(c) = &stats.g_neg_next {
        limit_row("scaled_P(G-next>=1)", c);
    }
    let two = &stats.g.at_least_two;
    rows.push(TheoryRow::new(
        "scaled_P(G>=2)".into(),
        RowKind::Asymptotic,
        two.estimate / w.b_kn,
        0.0,
        two.std_error / w.b_kn,
        PassRule::Below { limit: TWO_ATOM_RATIO_LIMIT },
    ));
    rows.push(TheoryRow::new(
        "uniformity_p_value".into(),
        RowKind::Uniformity,
        stats.uniformity.p_value,
        1.0,
        0.0,
        PassRule::AtLeast { alpha: UNIFORMITY_ALPHA },
    ));
    Ok(TheoryReport { rows })
}

/// `b^{-1} P̂(· >= 1)` at one intensity with its `3σ` interval and band check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub lo: f64,
    pub hi: f64,
    pub covers: bool,
}

impl SweepEstimate {
    pub fn new(estimate: f64, std_error: f64, target: f64) -> Self {
        Self {
            estimate,
            std_error,
            lo: estimate - 3.0 * std_error,
            hi: estimate + 3.0 * std_error,
            covers: (estimate - target).abs() <= 3.0 * std_error + FINITE_SIZE_ALLOWANCE * target,
        }
    }

    pub fn from_probability(p: &Probability, b: f64, target: f64, dk: &ConstantEstimate, u0: f64) -> Self {
        let (est, se) = scaled_probability(p, b, target, dk, u0);
        Self::new(est, se, target)
    }
}

/// One intensity of a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: f64,
    pub seed: u64,
    pub window: Window,
    pub trials: u64,
    pub g: SweepEstimate,
    pub g_pos: Option<SweepEstimate>,
    pub g_neg_next: Option<SweepEstimate>,
    /// `P̂(G >= 2) / b_{k,n}`.
    pub two_atom_ratio: f64,
    pub discrepancy: Option<Probability>,
}

impl SweepCell {
    pub fn from_stats(n: f64, seed: u64, w: Window, stats: &AggregateStats, target: f64, dk: &ConstantEstimate, u0: f64) -> Self {
        let est = |c: &CountStats| SweepEstimate::from_probability(&c.at_least_one, w.b_kn, target, dk, u0);
        Self {
            n,
            seed,
            window: w,
            trials: stats.trials,
            g: est(&stats.g),
            g_pos: stats.g_pos.as_ref().map(est),
            g_neg_next: stats.g_neg_next.as_ref().map(est),
            two_atom_ratio: stats.g.at_least_two.estimate / w.b_kn,
            discrepancy: stats.discrepancy,
        }
    }
}

/// Trend table over increasing intensities with flags gated at the largest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub target: f64,
    pub dk: ConstantEstimate,
    pub cells: Vec<SweepCell>,
    pub final_covers_g: bool,
    pub final_covers_pos: Option<bool>,
    pub final_covers_neg_next: Option<bool>,
    pub final_two_atom_below: bool,
    /// Discrepancy rate strictly decreasing in `n`.
    pub discrepancy_decreasing: Option<bool>,
}

impl SweepReport {
    pub fn from_cells(cells: Vec<SweepCell>, target: f64, dk: ConstantEstimate) -> Result<Self> {
        if cells.len() < 3 || cells.windows(2).any(|w| !(w[0].n < w[1].n)) {
            return Err(Error::Config("a sweep needs at least 3 strictly increasing intensities".into()));
        }
        let last = cells.last().expect("non-empty");
        let discrepancy_decreasing = cells
            .iter()
            .map(|c| c.discrepancy.map(|p| p.estimate))
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.windows(2).all(|w| w[1] < w[0]));
        Ok(Self {
            target,
            dk,
            final_covers_g: last.g.covers,
            final_covers_pos: last.g_pos.map(|e| e.covers),
            final_covers_neg_next: last.g_neg_next.map(|e| e.covers),
            final_two_atom_below: last.two_atom_ratio < TWO_ATOM_RATIO_LIMIT,
            discrepancy_decreasing,
            cells,
        })
    }
}
