//! Euclidean simplex kernels on lifted coordinates: circumspheres, barycentric
//! interiority, general position, simplex volumes, and minimum enclosing balls.

use crate::error::{Error, Result};
use crate::linalg::{determinant, solve_full_pivot, sym_eigen_extremes, Square, MAX_DIM};

pub use crate::linalg::MAX_DIM as MAX_AMBIENT_DIM;

/// Gram condition number above which a vertex set counts as degenerate.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;
/// Relative singular-value floor of the general-position test.
pub const GENERAL_POSITION_TOL: f64 = 1e-9;
/// Barycentric coordinates must exceed this for strict interiority.
pub const INTERIOR_TOL: f64 = 1e-12;

/// A Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Difference vectors `y_{i+1} - y_0` and their Gram matrix.
struct Frame {
    k: usize,
    dim: usize,
    diffs: [[f64; MAX_DIM]; MAX_DIM],
    gram: Square,
}

impl Frame {
    fn new(points: &[&[f64]]) -> Result<Self> {
        let k = points.len().saturating_sub(1);
        let dim = points.first().map_or(0, |p| p.len());
        if dim > MAX_DIM || k > MAX_DIM {
            return Err(Error::Contract(format!(
                "simplex with {} vertices in dimension {dim} exceeds the supported size",
                points.len()
            )));
        }
        let mut diffs = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, p) in points.iter().enumerate().skip(1) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            for a in 0..dim {
                diffs[i - 1][a] = p[a] - points[0][a];
            }
        }
        let mut gram = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..k {
            for j in i..k {
                let g: f64 = (0..dim).map(|a| diffs[i][a] * diffs[j][a]).sum();
                gram[i][j] = g;
                gram[j][i] = g;
            }
        }
        Ok(Self { k, dim, diffs, gram })
    }

    fn condition(&self) -> f64 {
        if self.k == 0 {
            return 1.0;
        }
        if self.k > self.dim {
            return f64::INFINITY;
        }
        let (lo, hi) = sym_eigen_extremes(&self.gram, self.k);
        if lo <= 0.0 || !hi.is_finite() {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Coefficients `λ` with `center = y_0 + Σ λ_j v_j` of the circumcenter.
    fn circum_coefficients(&self) -> Option<[f64; MAX_DIM]> {
        if self.k == 1 {
            let mut l = [0.0; MAX_DIM];
            l[0] = 0.5;
            return Some(l);
        }
        let mut a = self.gram;
        let mut rhs = [0.0; MAX_DIM];
        for i in 0..self.k {
            for j in 0..self.k {
                a[i][j] *= 2.0;
            }
            rhs[i] = self.gram[i][i];
        }
        solve_full_pivot(a, rhs, self.k)
    }

    fn combine(&self, origin: &[f64], coeffs: &[f64; MAX_DIM]) -> Vec<f64> {
        let mut c = origin.to_vec();
        for j in 0..self.k {
            for a in 0..self.dim {
                c[a] += coeffs[j] * self.diffs[j][a];
            }
        }
        c
    }
}

/// Circumcenter and radius of a simplex, with the center in its affine hull.
///
/// Fails with [`Error::Degenerate`] when the Gram matrix of the difference
/// vectors has condition number above [`GRAM_CONDITION_LIMIT`].
pub fn circumsphere(points: &[&[f64]]) -> Result<Ball> {
    circumsphere_barycentric(points).map(|(ball, _)| ball)
}

/// Circumsphere together with the barycentric coordinates of its center.
pub fn circumsphere_barycentric(points: &[&[f64]]) -> Result<(Ball, Vec<f64>)> {
    if points.is_empty() {
        return Err(Error::Contract("empty vertex set".into()));
    }
    let frame = Frame::new(points)?;
    if frame.k == 0 {
        return Ok((
            Ball {
                center: points[0].to_vec(),
                radius: 0.0,
            },
            vec![1.0],
        ));
    }
    if frame.condition() > GRAM_CONDITION_LIMIT {
        return Err(Error::Degenerate);
    }
    let coeffs = frame.circum_coefficients().ok_or(Error::Degenerate)?;
    let center = frame.combine(points[0], &coeffs);
    let radius = center
        .iter()
        .zip(points[0].iter())
        .map(|(c, p)| (c - p) * (c - p))
        .sum::<f64>()
        .sqrt();
    let mut bary = Vec::with_capacity(frame.k + 1);
    bary.push(1.0 - coeffs[..frame.k].iter().sum::<f64>());
    bary.extend_from_slice(&coeffs[..frame.k]);
    Ok((Ball { center, radius }, bary))
}

/// Barycentric coordinates of `c` (assumed in the affine hull) with respect to the vertices.
pub fn barycentric_coordinates(points: &[&[f64]], c: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Contract("empty vertex set".into()));
    }
    let frame = Frame::new(points)?;
    if frame.k == 0 {
        return Ok(vec![1.0]);
    }
    if frame.k > frame.dim {
        return Err(Error::Degenerate);
    }
    let mut rhs = [0.0; MAX_DIM];
    for (i, r) in rhs.iter_mut().enumerate().take(frame.k) {
        *r = (0..frame.dim)
            .map(|a| frame.diffs[i][a] * (c[a] - points[0][a]))
            .sum();
    }
    let beta = solve_full_pivot(frame.gram, rhs, frame.k).ok_or(Error::Degenerate)?;
    let mut out = Vec::with_capacity(frame.k + 1);
    out.push(1.0 - beta[..frame.k].iter().sum::<f64>());
    out.extend_from_slice(&beta[..frame.k]);
    Ok(out)
}

/// Whether `c` lies in the open simplex: all barycentric coordinates exceed [`INTERIOR_TOL`].
pub fn barycentric_interior(points: &[&[f64]], c: &[f64]) -> bool {
    barycentric_coordinates(points, c)
        .map(|b| b.iter().all(|&x| x > INTERIOR_TOL))
        .unwrap_or(false)
}

/// Whether the difference vectors have smallest singular value above
/// `1e-9` times the largest.
pub fn general_position_check(points: &[&[f64]]) -> bool {
    let Ok(frame) = Frame::new(points) else {
        return false;
    };
    if frame.k == 0 {
        return true;
    }
    if frame.k > frame.dim {
        return false;
    }
    let (lo, hi) = sym_eigen_extremes(&frame.gram, frame.k);
    hi > 0.0 && lo > 0.0 && lo.sqrt() > GENERAL_POSITION_TOL * hi.sqrt()
}

/// `k`-volume of a simplex with `k + 1` vertices: `sqrt(det Gram) / k!`.
pub fn simplex_volume(points: &[&[f64]]) -> f64 {
    let Ok(frame) = Frame::new(points) else {
        return 0.0;
    };
    if frame.k == 0 || frame.k > frame.dim {
        return 0.0;
    }
    let det = determinant(frame.gram, frame.k);
    if det <= 0.0 {
        return 0.0;
    }
    let fact: f64 = (1..=frame.k).map(|i| i as f64).product();
    det.sqrt() / fact
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn contains(ball: &Ball, p: &[f64]) -> bool {
    let r = ball.radius * (1.0 + 1e-12) + 1e-15;
    ball.radius >= 0.0 && dist2(&ball.center, p) <= r * r
}

fn ball_on(points: &[&[f64]], support: &[usize]) -> Option<Ball> {
    match support.len() {
        0 => None,
        1 => Some(Ball {
            center: points[support[0]].to_vec(),
            radius: 0.0,
        }),
        _ => {
            let s: Vec<&[f64]> = support.iter().map(|&i| points[i]).collect();
            circumsphere(&s).ok()
        }
    }
}

/// Move-to-front recursion: smallest ball containing `order[..end]` with every
/// point of `support` on its boundary.
fn mtf(points: &[&[f64]], order: &mut Vec<usize>, end: usize, support: &mut Vec<usize>, dim: usize) -> Result<Option<Ball>> {
    let mut ball = if support.is_empty() {
        None
    } else {
        Some(ball_on(points, support).ok_or(Error::Degenerate)?)
    };
    if support.len() == dim + 1 {
        return Ok(ball);
    }
    let mut i = 0;
    while i < end {
        let p = order[i];
        let inside = ball.as_ref().is_some_and(|b| contains(b, points[p]));
        if !inside {
            support.push(p);
            ball = mtf(points, order, i, support, dim)?;
            support.pop();
            order.remove(i);
            order.insert(0, p);
        }
        i += 1;
    }
    Ok(ball)
}

/// Smallest enclosing ball of at most `d + 1` lifted points (Welzl's
/// move-to-front recursion over support sets).
pub fn min_enclosing_ball(points: &[&[f64]]) -> Result<Ball> {
    let first = points
        .first()
        .ok_or_else(|| Error::Contract("empty point set".into()))?;
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: points.iter().map(|p| p.len()).find(|&l| l != dim).unwrap_or(dim),
        });
    }
    match points.len() {
        1 => {
            return Ok(Ball {
                center: first.to_vec(),
                radius: 0.0,
            })
        }
        2 => {
            let center: Vec<f64> = first.iter().zip(points[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let radius = 0.5 * dist2(first, points[1]).sqrt();
            return Ok(Ball { center, radius });
        }
        _ => {}
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut support = Vec::with_capacity(dim + 1);
    match mtf(points, &mut order, points.len(), &mut support, dim) {
        Ok(Some(ball)) => Ok(ball),
        // near-degenerate support sets: fall back to exhaustive support search
        _ => exhaustive_min_ball(points),
    }
}

/// Smallest ball over all affinely independent support subsets that contains every point.
fn exhaustive_min_ball(points: &[&[f64]]) -> Result<Ball> {
    let m = points.len();
    let mut best: Option<Ball> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let Some(ball) = ball_on(points, &support) else {
            continue;
        };
        if points.iter().all(|p| contains(&ball, p))
            && best.as_ref().is_none_or(|b| ball.radius < b.radius)
        {
            best = Some(ball);
        }
    }
    best.ok_or(Error::Degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|p| p.as_slice()).collect()
    }

    #[test]
    fn circumsphere_examples() {
        let b = circumsphere(&[&[0.0, 0.0], &[0.2, 0.0]]).unwrap();
        assert!((b.center[0] - 0.1).abs() < 1e-15 && b.center[1] == 0.0);
        assert!((b.radius - 0.1).abs() < 1e-15);

        let s = 0.1;
        let tri = vec![vec![0.0, 0.0], vec![s, 0.0], vec![s / 2.0, s * 3f64.sqrt() / 2.0]];
        let b = circumsphere(&refs(&tri)).unwrap();
        assert!((b.radius - s / 3f64.sqrt()).abs() < 1e-15);
        assert!((b.center[0] - s / 2.0).abs() < 1e-15);
        assert!((b.center[1] - s * 3f64.sqrt() / 6.0).abs() < 1e-15);

        let b = circumsphere(&[&[0.0, 0.0], &[0.1, 0.0], &[0.0, 0.1]]).unwrap();
        assert!((b.center[0] - 0.05).abs() < 1e-15 && (b.center[1] - 0.05).abs() < 1e-15);
        assert!((b.radius - 0.05 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn circumsphere_rejects_degenerate() {
        assert!(matches!(
            circumsphere(&[&[0.0, 0.0], &[0.1, 0.0], &[0.2, 0.0]]),
            Err(Error::Degenerate)
        ));
        assert!(matches!(circumsphere(&[&[0.3, 0.3], &[0.3, 0.3]]), Err(Error::Degenerate)));
    }

    #[test]
    fn interiority_examples() {
        let right = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]];
        let r: Vec<&[f64]> = right.iter().map(|p| p.as_slice()).collect();
        assert!(!barycentric_interior(&r, &[0.05, 0.05]));

        let s = 0.1;
        let tri = vec![vec![0.0, 0.0], vec![s, 0.0], vec![s / 2.0, s * 3f64.sqrt() / 2.0]];
        let centroid = [s / 2.0, s * 3f64.sqrt() / 6.0];
        assert!(barycentric_interior(&refs(&tri), &centroid));

        assert!(barycentric_interior(&[&[0.0, 0.0], &[0.2, 0.0]], &[0.1, 0.0]));
    }

    #[test]
    fn general_position_examples() {
        assert!(general_position_check(&[&[0.0, 0.0], &[0.1, 0.0], &[0.0, 0.1]]));
        assert!(!general_position_check(&[&[0.0, 0.0], &[0.1, 0.0], &[0.2, 0.0]]));
        assert!(!general_position_check(&[&[0.1, 0.2], &[0.1, 0.2]]));
        assert!(!general_position_check(&[&[0.0], &[0.1], &[0.3]]));
    }

    #[test]
    fn volume_examples() {
        assert!((simplex_volume(&[&[-1.0], &[1.0]]) - 2.0).abs() < 1e-15);
        assert!((simplex_volume(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]) - 0.5).abs() < 1e-15);
        let tau = std::f64::consts::TAU;
        let tri: Vec<Vec<f64>> = (0..3)
            .map(|i| vec![(tau * i as f64 / 3.0).cos(), (tau * i as f64 / 3.0).sin()])
            .collect();
        assert!((simplex_volume(&refs(&tri)) - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert_eq!(simplex_volume(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]), 0.0);
    }

    #[test]
    fn min_ball_examples() {
        let b = min_enclosing_ball(&[&[0.4, 0.4]]).unwrap();
        assert_eq!(b.radius, 0.0);
        let b = min_enclosing_ball(&[&[0.0, 0.0], &[0.1, 0.0]]).unwrap();
        assert!((b.radius - 0.05).abs() < 1e-15 && (b.center[0] - 0.05).abs() < 1e-15);
        // obtuse: angle at (0.02, 0.01) exceeds 90 degrees
        let pts = [[0.0, 0.0], [0.2, 0.0], [0.02, 0.01]];
        let (a, bb, c) = (pts[0], pts[1], pts[2]);
        let dot = (a[0] - c[0]) * (bb[0] - c[0]) + (a[1] - c[1]) * (bb[1] - c[1]);
        assert!(dot < 0.0);
        let r: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let b = min_enclosing_ball(&r).unwrap();
        assert!((b.radius - 0.1).abs() < 1e-15);
        assert!((b.center[0] - 0.1).abs() < 1e-15 && b.center[1].abs() < 1e-15);
    }

    /// Independent oracle: try every support subset, keep the smallest enclosing circumball.
    fn brute_min_ball(points: &[&[f64]]) -> f64 {
        let m = points.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << m) {
            let s: Vec<&[f64]> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| points[i]).collect();
            let Ok(b) = circumsphere(&s) else { continue };
            if points.iter().all(|p| dist2(&b.center, p).sqrt() <= b.radius * (1.0 + 1e-9) + 1e-15) {
                best = best.min(b.radius);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn welzl_matches_subset_search(dim in 2usize..=4, raw in proptest::collection::vec(-0.1..0.1f64, 20)) {
            let m = dim + 1;
            let pts: Vec<Vec<f64>> = raw.chunks(dim).take(m).map(|c| c.to_vec()).collect();
            prop_assume!(pts.len() == m && pts.iter().all(|p| p.len() == dim));
            let r = refs(&pts);
            let ball = min_enclosing_ball(&r).unwrap();
            let oracle = brute_min_ball(&r);
            prop_assert!((ball.radius - oracle).abs() <= 1e-9 * oracle.max(1e-12));
            for p in &r {
                prop_assert!(dist2(&ball.center, p).sqrt() <= ball.radius * (1.0 + 1e-9) + 1e-15);
            }
        }

        #[test]
        fn circumcenter_is_equidistant(dim in 2usize..=4, raw in proptest::collection::vec(-0.1..0.1f64, 20), k in 1usize..=4) {
            prop_assume!(k <= dim);
            let pts: Vec<Vec<f64>> = raw.chunks(dim).take(k + 1).map(|c| c.to_vec()).collect();
            prop_assume!(pts.len() == k + 1 && pts.iter().all(|p| p.len() == dim));
            let r = refs(&pts);
            if let Ok((b, bary)) = circumsphere_barycentric(&r) {
                for p in &r {
                    prop_assert!((dist2(&b.center, p).sqrt() - b.radius).abs() <= 1e-9 * b.radius);
                }
                let direct = barycentric_coordinates(&r, &b.center).unwrap();
                for (x, y) in bary.iter().zip(&direct) {
                    prop_assert!((x - y).abs() < 1e-6 * x.abs().max(1.0));
                }
            }
        }
    }
}
