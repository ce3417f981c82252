//! Normalizing sequences and limit constants: `ω_d`, `Ω_j`, the centering
//! schedules `a_n`, `r_n(u)`, `b_{k,n}` and the constant `D_k` of the limiting
//! Poisson intensity.
//!
//! ```text
//! D_k = (k!)^{d-k+1} / ((k+1)! d ω_d^k) · C(d,k) · Ω_d / (Ω_k Ω_{d-k})
//!       · ∫_{(S^{k-1})^{k+1}} h_k(θ) V_simp(θ)^{d-k+1} dθ
//! ```
//!
//! `dθ` is the unnormalized surface measure; `S^0 = {-1, +1}` carries counting
//! measure, which makes `k = 1` a finite sum and gives `D_1 = 2^{d-1}`.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{barycentric_coordinates, simplex_volume, INTERIOR_TOL, MAX_AMBIENT_DIM};
use crate::parallel::{map_indices, Execution};
use crate::sampling::{substream, RandomStream};

/// Smallest intensity for which `log log log n` is defined and positive.
pub const MIN_SCHEDULE_N: f64 = 16.0;

/// Monte Carlo samples per independently seeded shard.
pub const SHARD_SAMPLES: u64 = 1 << 16;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// `Ω_j = ω_1 ω_2 ⋯ ω_j`, with `Ω_0 = 1`.
pub fn omega_product(j: usize) -> f64 {
    (1..=j).map(unit_ball_volume).product()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Centering sequence `a_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleRule {
    /// `log n + (k-1) log log n + log log log n`.
    ThresholdPlusLogLogLog,
    /// `2 log n`.
    TwoLogN,
    /// `α log n + β log log n + γ log log log n + c`.
    Custom {
        #[serde(default)]
        log_n: f64,
        #[serde(default)]
        log_log_n: f64,
        #[serde(default)]
        log_log_log_n: f64,
        #[serde(default)]
        constant: f64,
    },
}

/// Evaluates the schedule at intensity `n` for face index `k`.
pub fn a_n_value(rule: ScheduleRule, n: f64, k: usize) -> Result<f64> {
    if !(n >= MIN_SCHEDULE_N) || !n.is_finite() {
        return Err(Error::Domain(format!("schedule needs n >= 16, got {n}")));
    }
    let l1 = n.ln();
    let l2 = l1.ln();
    let l3 = l2.ln();
    Ok(match rule {
        ScheduleRule::ThresholdPlusLogLogLog => l1 + (k as f64 - 1.0) * l2 + l3,
        ScheduleRule::TwoLogN => 2.0 * l1,
        ScheduleRule::Custom {
            log_n,
            log_log_n,
            log_log_log_n,
            constant,
        } => log_n * l1 + log_log_n * l2 + log_log_log_n * l3 + constant,
    })
}

/// `r_n(u) = ((a_n + u) / (n ω_d))^{1/d}`.
pub fn r_n_of_u(u: f64, n: f64, a_n: f64, d: usize) -> Result<f64> {
    let m = a_n + u;
    if !(m > 0.0) {
        return Err(Error::Domain(format!("a_n + u = {m} must be positive")));
    }
    if !(n > 0.0) || d == 0 {
        return Err(Error::Domain(format!("r_n needs n > 0 and d >= 1 (n = {n}, d = {d})")));
    }
    Ok((m / (n * unit_ball_volume(d))).powf(1.0 / d as f64))
}

/// Inverse of [`r_n_of_u`]: `n ω_d ρ^d - a_n`.
pub fn u_of_radius(rho: f64, n: f64, a_n: f64, d: usize) -> f64 {
    n * unit_ball_volume(d) * rho.powi(d as i32) - a_n
}

/// `b_{k,n} = n a_n^{k-1} e^{-a_n}`.
pub fn b_kn(n: f64, a_n: f64, k: usize) -> f64 {
    n * a_n.powi(k as i32 - 1) * (-a_n).exp()
}

/// Whether the origin lies in the open convex hull of `theta` (`k+1` vectors in `R^k`).
pub fn origin_in_open_hull(theta: &[&[f64]]) -> bool {
    let Some(first) = theta.first() else {
        return false;
    };
    let origin = vec![0.0; first.len()];
    match barycentric_coordinates(theta, &origin) {
        Ok(b) => b.iter().all(|&x| x > INTERIOR_TOL),
        Err(_) => false,
    }
}

/// A value of `D_k` with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub exact: bool,
}

// the integer part is formed exactly and the ω_d^k cancellation is done as
// ratios, so k = 1 reduces to exactly 1/4
fn dk_prefactor(d: usize, k: usize) -> f64 {
    let num = factorial(k).powi((d - k + 1) as i32) * binomial(d, k);
    let den = factorial(k + 1) * d as f64;
    let wd = unit_ball_volume(d);
    let ratio: f64 = (d - k + 1..=d).map(|i| unit_ball_volume(i) / wd).product();
    num / den * ratio / omega_product(k)
}

/// `D_k` in ambient dimension `d`: exact for `k = 1`, Monte Carlo over
/// `samples` draws of `k+1` uniform points on `S^{k-1}` otherwise.
///
/// Samples are split into shards of [`SHARD_SAMPLES`], each with a substream
/// keyed by a seed drawn from `stream`, so the estimate does not depend on
/// the execution mode.
pub fn estimate_dk(d: usize, k: usize, samples: u64, stream: &mut RandomStream, exec: Execution) -> Result<ConstantEstimate> {
    if d < 2 || d > MAX_AMBIENT_DIM || k == 0 || k >= d {
        return Err(Error::Domain(format!("D_k needs 1 <= k <= d-1 and d <= {MAX_AMBIENT_DIM}, got d = {d}, k = {k}")));
    }
    if samples == 0 {
        return Err(Error::Domain("D_k estimation needs at least one sample".into()));
    }
    let pre = dk_prefactor(d, k);
    let power = (d - k + 1) as i32;
    if k == 1 {
        let mut integral = 0.0;
        for a in [-1.0f64, 1.0] {
            for b in [-1.0f64, 1.0] {
                let (pa, pb) = ([a], [b]);
                if origin_in_open_hull(&[&pa, &pb]) {
                    integral += simplex_volume(&[&pa, &pb]).powi(power);
                }
            }
        }
        return Ok(ConstantEstimate {
            value: pre * integral,
            std_error: 0.0,
            samples: 4,
            exact: true,
        });
    }
    let shard_seed = stream.next_u64();
    let shards = samples.div_ceil(SHARD_SAMPLES);
    let sums = map_indices(exec, 0..shards, |s| {
        let count = SHARD_SAMPLES.min(samples - s * SHARD_SAMPLES);
        let mut rng = substream(shard_seed, s);
        let mut acc = (0.0f64, 0.0f64);
        let mut pts = vec![[0.0f64; MAX_AMBIENT_DIM]; k + 1];
        for _ in 0..count {
            for p in pts.iter_mut() {
                loop {
                    let mut norm2 = 0.0;
                    for x in p.iter_mut().take(k) {
                        *x = rng.sample(StandardNormal);
                        norm2 += *x * *x;
                    }
                    if norm2 > 0.0 {
                        let inv = norm2.sqrt().recip();
                        p.iter_mut().take(k).for_each(|x| *x *= inv);
                        break;
                    }
                }
            }
            let refs: Vec<&[f64]> = pts.iter().map(|p| &p[..k]).collect();
            let v = if origin_in_open_hull(&refs) {
                simplex_volume(&refs).powi(power)
            } else {
                0.0
            };
            acc.0 += v;
            acc.1 += v * v;
        }
        acc
    });
    let (sum, sum2) = sums.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0, a.1 + s.1));
    let m = samples as f64;
    let mean = sum / m;
    let var = if samples > 1 {
        ((sum2 - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    let scale = pre * (k as f64 * unit_ball_volume(k)).powi(k as i32 + 1);
    Ok(ConstantEstimate {
        value: scale * mean,
        std_error: scale * (var / m).sqrt(),
        samples,
        exact: false,
    })
}

/// Limit of `b_{k,n}^{-1} P(G_{k,n} >= 1)`: `D_k e^{-u0}`.
pub fn lambda_target(u0: f64, dk: &ConstantEstimate) -> f64 {
    dk.value * (-u0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((omega_product(3) - 2.0 * PI * 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn schedules() {
        let e4 = 4f64.exp();
        assert!((a_n_value(ScheduleRule::TwoLogN, e4, 1).unwrap() - 8.0).abs() < 1e-14);
        let a = a_n_value(ScheduleRule::ThresholdPlusLogLogLog, 1e6, 1).unwrap();
        assert!((a - 14.780893090216232).abs() < 1e-12, "{a}");
        let c = ScheduleRule::Custom {
            log_n: 0.0,
            log_log_n: 0.0,
            log_log_log_n: 0.0,
            constant: 3.25,
        };
        assert_eq!(a_n_value(c, 1000.0, 2).unwrap(), 3.25);
        assert!(matches!(a_n_value(ScheduleRule::TwoLogN, 15.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn radius_and_rates() {
        let r = r_n_of_u(0.0, 1000.0, 10.0, 2).unwrap();
        assert!((r - (10.0 / (1000.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((r - 0.056419).abs() < 1e-6);
        assert!(r_n_of_u(-10.0, 1000.0, 10.0, 2).is_err());
        let l = 1000f64.ln();
        assert!((b_kn(1000.0, l, 1) - 1.0).abs() < 1e-12);
        assert!((b_kn(1000.0, l, 2) - l).abs() < 1e-12);
        assert!((b_kn(1000.0, 2.0 * l, 1) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn hull_examples() {
        assert!(origin_in_open_hull(&[&[1.0], &[-1.0]]));
        assert!(!origin_in_open_hull(&[&[1.0], &[1.0]]));
        let v: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 3.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!(origin_in_open_hull(&[&v[0], &v[1], &v[2]]));
        assert!(!origin_in_open_hull(&[&v[0], &v[0], &v[1]]));
    }

    #[test]
    fn d1_closed_form() {
        let mut s = substream(0, 0);
        for d in 2..=6 {
            let e = estimate_dk(d, 1, 1, &mut s, Execution::Sequential).unwrap();
            assert!(e.exact && e.std_error == 0.0);
            assert_eq!(e.value, 2f64.powi(d as i32 - 1), "d = {d}");
        }
    }

    #[test]
    fn dk_rejects_out_of_range() {
        let mut s = substream(0, 0);
        assert!(estimate_dk(3, 3, 10, &mut s, Execution::Sequential).is_err());
        assert!(estimate_dk(3, 0, 10, &mut s, Execution::Sequential).is_err());
        assert!(estimate_dk(3, 2, 0, &mut s, Execution::Sequential).is_err());
    }

    #[test]
    fn dk_independent_of_execution() {
        let a = estimate_dk(3, 2, 200_000, &mut substream(5, 0), Execution::Sequential).unwrap();
        let b = estimate_dk(3, 2, 200_000, &mut substream(5, 0), Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.value > 0.0 && a.std_error > 0.0);
    }

    #[test]
    fn lambda_targets() {
        let d = ConstantEstimate {
            value: 2.0,
            std_error: 0.0,
            samples: 4,
            exact: true,
        };
        assert_eq!(lambda_target(0.0, &d), 2.0);
        assert!((lambda_target(2f64.ln(), &d) - 1.0).abs() < 1e-15);
        assert!(lambda_target(50.0, &d) < 1e-20);
    }

    #[test]
    fn built_in_schedules_grow_past_threshold() {
        for rule in [ScheduleRule::ThresholdPlusLogLogLog, ScheduleRule::TwoLogN] {
            for k in 1..=3usize {
                let mut prev_excess = f64::NEG_INFINITY;
                let mut prev_b = f64::INFINITY;
                for e in 0..=35 {
                    let n = 100.0 * 10f64.powf(e as f64 * 7.0 / 35.0);
                    let a = a_n_value(rule, n, k).unwrap();
                    let excess = a - n.ln() - (k as f64 - 1.0) * n.ln().ln();
                    assert!(excess > prev_excess);
                    let b = b_kn(n, a, k);
                    assert!(b < prev_b);
                    prev_excess = excess;
                    prev_b = b;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn radius_round_trip(u in -5.0f64..20.0, n in 16.0f64..1e7, d in 1usize..6) {
            let a = 10.0;
            let r = r_n_of_u(u, n, a, d).unwrap();
            let back = u_of_radius(r, n, a, d);
            prop_assert!(((back + a) - (u + a)).abs() <= 1e-12 * (u + a).abs().max(1.0));
            let r2 = r_n_of_u(u + 0.5, n, a, d).unwrap();
            prop_assert!(r2 > r);
        }

        #[test]
        fn hull_is_permutation_invariant(angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 3)) {
            let v: Vec<[f64; 2]> = angles.iter().map(|t| [t.cos(), t.sin()]).collect();
            let base = origin_in_open_hull(&[&v[0], &v[1], &v[2]]);
            prop_assert_eq!(base, origin_in_open_hull(&[&v[2], &v[0], &v[1]]));
            prop_assert_eq!(base, origin_in_open_hull(&[&v[1], &v[0], &v[2]]));
        }
    }
}
