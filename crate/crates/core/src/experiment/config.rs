use serde::{Deserialize, Serialize};

use crate::constants::{a_n_value, b_kn, r_n_of_u, u_of_radius, unit_ball_volume, ScheduleRule};
use crate::detect::MAX_WINDOW_RADIUS;
use crate::error::{Error, Result};
use crate::geometry::MAX_AMBIENT_DIM;

/// How the filtration cap `R_n` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RnRule {
    /// `R_n = ((a_n log a_n) / (n ω_d))^{1/d}`.
    #[default]
    Power,
    /// `R_n = factor · r_n(0)`.
    MultipleOfR0 { factor: f64 },
    /// A fixed radius.
    Fixed { radius: f64 },
}

/// Complex used for sign classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Delaunay–Čech when `d = 2`, Čech otherwise.
    #[default]
    Auto,
    Cech,
    DelaunayCech,
}

fn yes() -> bool {
    true
}

fn default_schedule() -> ScheduleRule {
    ScheduleRule::ThresholdPlusLogLogLog
}

fn default_dk_samples() -> u64 {
    1_000_000
}

/// Default `u`-bin edges relative to `u0`; the last bin is unbounded.
pub const DEFAULT_BIN_OFFSETS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// One experiment. Serialized as a flat JSON object; see the README for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub k: usize,
    /// Poisson intensity.
    pub n: f64,
    /// Intensities for a convergence sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<f64>,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleRule,
    #[serde(default)]
    pub rn_rule: RnRule,
    #[serde(default)]
    pub u0: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "yes")]
    pub classify_signs: bool,
    /// Left edges of the `u`-bins; defaults to `u0 + {0, 0.5, 1, 2}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_bins: Option<Vec<f64>>,
    /// Restricts `k` to `1..=d-1`, where the limit theorems apply.
    #[serde(default = "yes")]
    pub theorem_mode: bool,
    #[serde(default)]
    pub backend: Backend,
    /// Monte Carlo samples for `D_k` when `k >= 2`.
    #[serde(default = "default_dk_samples")]
    pub dk_samples: u64,
    /// Run the Morse/Betti and spanning-tree cross-checks on every trial.
    #[serde(default)]
    pub verify_invariants: bool,
}

/// Radii and normalizers derived from a configuration at one intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub n: f64,
    pub a_n: f64,
    pub b_kn: f64,
    /// `r_n(u0)`, the lower end of the detection window.
    pub r_lo: f64,
    /// `R_n`, the upper end of the window and the filtration cap.
    pub r_hi: f64,
    /// `r_n(0)`.
    pub r_zero: f64,
    /// `n ω_d R_n^d - a_n`.
    pub u_max: f64,
}

impl ExperimentConfig {
    /// A configuration with every optional field at its default.
    pub fn minimal(d: usize, k: usize, n: f64, trials: u64, seed: u64) -> Self {
        Self {
            d,
            k,
            n,
            n_list: Vec::new(),
            schedule: default_schedule(),
            rn_rule: RnRule::default(),
            u0: 0.0,
            trials,
            seed,
            classify_signs: true,
            eta_bins: None,
            theorem_mode: true,
            backend: Backend::Auto,
            dk_samples: default_dk_samples(),
            verify_invariants: false,
        }
    }

    /// A copy at intensity `n`.
    pub fn with_n(&self, n: f64) -> Self {
        Self {
            n,
            n_list: Vec::new(),
            ..self.clone()
        }
    }

    /// Checks every structural constraint and returns the window at `self.n`.
    pub fn validate(&self) -> Result<Window> {
        if self.d == 0 || self.d > MAX_AMBIENT_DIM {
            return Err(Error::Config(format!("d = {} outside 1..={MAX_AMBIENT_DIM}", self.d)));
        }
        if self.k == 0 || self.k > self.d {
            return Err(Error::Config(format!("k = {} outside 1..=d", self.k)));
        }
        if self.theorem_mode && self.k == self.d {
            return Err(Error::Config(format!(
                "k = d = {} has no limit theorem; the theorems cover 1 <= k <= d-1 (set theorem_mode = false for classification only)",
                self.d
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.k >= 2 && self.theorem_mode && self.dk_samples < 2 {
            return Err(Error::Config("dk_samples must be >= 2".into()));
        }
        if !self.u0.is_finite() {
            return Err(Error::Config(format!("u0 = {} is not finite", self.u0)));
        }
        if self.backend == Backend::DelaunayCech && self.d != 2 {
            return Err(Error::Config("delaunay_cech backend requires d = 2".into()));
        }
        let edges = self.bin_edges();
        if edges.is_empty() || edges[0] < self.u0 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(format!(
                "eta_bins {edges:?} must be strictly increasing and start at or above u0 = {}",
                self.u0
            )));
        }
        for &n in &self.n_list {
            self.window_at(n)?;
        }
        self.window_at(self.n)
    }

    /// The window at intensity `n`, with the radius constraints checked.
    pub fn window_at(&self, n: f64) -> Result<Window> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Config(format!("intensity n = {n} must be positive")));
        }
        let a_n = a_n_value(self.schedule, n, self.k).map_err(|e| Error::Config(e.to_string()))?;
        if !(a_n + self.u0 > 0.0) {
            return Err(Error::Config(format!("a_n + u0 = {} must be positive at n = {n}", a_n + self.u0)));
        }
        let d = self.d;
        let r_lo = r_n_of_u(self.u0, n, a_n, d)?;
        let r_zero = if a_n > 0.0 { r_n_of_u(0.0, n, a_n, d)? } else { 0.0 };
        let r_hi = match self.rn_rule {
            RnRule::Power => {
                if !(a_n > 1.0) {
                    return Err(Error::Config(format!("power rule needs a_n > 1, got {a_n} at n = {n}")));
                }
                (a_n * a_n.ln() / (n * unit_ball_volume(d))).powf(1.0 / d as f64)
            }
            RnRule::MultipleOfR0 { factor } => factor * r_zero,
            RnRule::Fixed { radius } => radius,
        };
        if !(4.0 * r_hi < 0.5) {
            return Err(Error::Config(format!("4·R_n >= 1/2 at n = {n} (R_n = {r_hi})")));
        }
        debug_assert!(r_hi < MAX_WINDOW_RADIUS);
        if !(r_lo < r_hi) {
            return Err(Error::Config(format!(
                "empty window at n = {n}: r_n(u0) = {r_lo} >= R_n = {r_hi} (u0 >= n ω_d R_n^d - a_n)"
            )));
        }
        Ok(Window {
            n,
            a_n,
            b_kn: b_kn(n, a_n, self.k),
            r_lo,
            r_hi,
            r_zero,
            u_max: u_of_radius(r_hi, n, a_n, d),
        })
    }

    /// Left edges of the `u`-bins.
    pub fn bin_edges(&self) -> Vec<f64> {
        match &self.eta_bins {
            Some(e) => e.clone(),
            None => DEFAULT_BIN_OFFSETS.iter().map(|o| self.u0 + o).collect(),
        }
    }

    /// Whether negative `(k+1)`-faces exist and are tracked.
    pub fn tracks_next(&self) -> bool {
        self.classify_signs && self.k < self.d
    }

    /// Backend actually used for a cloud in this configuration.
    pub fn resolved_backend(&self) -> Backend {
        match self.backend {
            Backend::Auto if self.d == 2 => Backend::DelaunayCech,
            Backend::Auto => Backend::Cech,
            b => b,
        }
    }
}
