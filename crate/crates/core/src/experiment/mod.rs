//! Trials, aggregation, exact finite-`n` means and comparison with the limits.
//!
//! Trial `i` always draws from `substream(seed, i)`; `D_k` draws from the
//! reserved stream [`DK_STREAM`]. Sweep cells get their own master seeds,
//! derived from the configured seed and the cell position.

mod config;
mod stats;
mod theory;
mod trial;

pub use config::{Backend, ExperimentConfig, RnRule, Window, DEFAULT_BIN_OFFSETS};
pub use stats::{aggregate, uniformity, AggregateStats, BinStats, CountStats, Moments, Probability, Uniformity, UNIFORMITY_CELLS_PER_AXIS};
pub use theory::{
    compare_to_theory, mecke_expected_bin, mecke_expected_count, scaled_probability, PassRule, RowKind, SweepCell,
    SweepEstimate, SweepReport, TheoryReport, TheoryRow, FINITE_SIZE_ALLOWANCE, TWO_ATOM_RATIO_LIMIT, UNIFORMITY_ALPHA,
};
pub use trial::{run_trial, Atom, TrialGeometry, TrialResult};

use rand::RngCore;

use crate::constants::{estimate_dk, lambda_target, ConstantEstimate};
use crate::error::{Error, Result};
use crate::parallel::{try_map_indices, Execution};
use crate::sampling::substream;

/// Stream index reserved for the `D_k` estimate.
pub const DK_STREAM: u64 = u64::MAX;
/// Stream index from which sweep-cell seeds are drawn.
pub const SWEEP_SEED_STREAM: u64 = u64::MAX - 1;

/// `D_k` for the configuration (exact when `k = 1`).
pub fn dk_for(cfg: &ExperimentConfig, exec: Execution) -> Result<ConstantEstimate> {
    let mut stream = substream(cfg.seed, DK_STREAM);
    estimate_dk(cfg.d, cfg.k, cfg.dk_samples, &mut stream, exec).map_err(|e| Error::Dependency(e.to_string()))
}

/// A full run at `cfg.n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub window: Window,
    pub dk: Option<ConstantEstimate>,
    pub stats: AggregateStats,
    pub theory: Option<TheoryReport>,
    pub results: Vec<TrialResult>,
}

/// All trials of `cfg` at intensity `w.n`, in trial order.
pub fn run_trials(cfg: &ExperimentConfig, w: &Window, exec: Execution) -> Result<Vec<TrialResult>> {
    try_map_indices(exec, 0..cfg.trials, |i| run_trial(cfg, w, i))
}

/// Validates, runs every trial, aggregates and compares with theory.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<RunReport> {
    let w = cfg.validate()?;
    let results = run_trials(cfg, &w, exec)?;
    let stats = aggregate(&results, cfg)?;
    let (dk, theory) = if cfg.theorem_mode {
        let dk = dk_for(cfg, exec)?;
        let theory = compare_to_theory(&stats, cfg, &w, &dk)?;
        (Some(dk), Some(theory))
    } else {
        (None, None)
    };
    Ok(RunReport {
        config: cfg.clone(),
        window: w,
        dk,
        stats,
        theory,
        results,
    })
}

/// Master seed of sweep cell `i`.
pub fn sweep_cell_seed(seed: u64, cell: usize) -> u64 {
    let mut s = substream(seed, SWEEP_SEED_STREAM);
    let mut v = 0;
    for _ in 0..=cell {
        v = s.next_u64();
    }
    v
}

/// Runs `cfg` at every intensity of `n_list` and tabulates `b^{-1} P̂(· >= 1)`.
pub fn convergence_sweep(cfg: &ExperimentConfig, n_list: &[f64], exec: Execution) -> Result<(SweepReport, Vec<AggregateStats>)> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("a sweep needs at least 3 strictly increasing intensities".into()));
    }
    if !cfg.theorem_mode {
        return Err(Error::Config("sweeps compare against the limit theorems; theorem_mode must be on".into()));
    }
    cfg.validate()?;
    let dk = dk_for(cfg, exec)?;
    let target = lambda_target(cfg.u0, &dk);
    let mut cells = Vec::with_capacity(n_list.len());
    let mut all_stats = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let mut c = cfg.with_n(n);
        c.seed = sweep_cell_seed(cfg.seed, i);
        let w = c.validate()?;
        let results = run_trials(&c, &w, exec)?;
        let stats = aggregate(&results, &c)?;
        cells.push(SweepCell::from_stats(n, c.seed, w, &stats, target, &dk, cfg.u0));
        all_stats.push(stats);
    }
    Ok((SweepReport::from_cells(cells, target, dk)?, all_stats))
}
