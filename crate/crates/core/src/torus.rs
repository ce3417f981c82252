//! Flat torus `T^d = [0,1)^d` with the periodic metric, local lifting into
//! `R^d`, and a uniform bucket grid for fixed-radius neighbor queries.

use crate::error::{Error, Result};

/// Half-width of the lifting window around an anchor.
pub const LIFT_WINDOW: f64 = 0.25;

/// A point of the flat torus with canonical coordinates in `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Builds a point from coordinates that must already lie in `[0,1)`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Contract("torus points need dimension >= 1".into()));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::Contract(format!("coordinate {c} outside [0,1)")));
        }
        Ok(Self { coords })
    }

    /// Builds a point from arbitrary real coordinates, reducing each modulo 1.
    pub fn wrapped(coords: &[f64]) -> Self {
        Self {
            coords: coords.iter().map(|&c| canonical(c)).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Fractional part in `[0,1)`.
#[inline]
pub fn canonical(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed shortest displacement from `a` to `b` along one periodic axis, in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_delta(a: f64, b: f64) -> f64 {
    let mut d = b - a;
    d -= d.round();
    if d >= 0.5 {
        d -= 1.0;
    }
    d
}

/// Squared torus distance between coordinate slices of equal length.
#[inline]
pub(crate) fn torus_dist2_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = (a - b).abs();
            let d = d - d.floor();
            let m = d.min(1.0 - d);
            m * m
        })
        .sum()
}

/// Periodic Euclidean distance: per-axis `min(|Δ|, 1-|Δ|)` composed in the 2-norm.
pub fn torus_dist(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(torus_dist2_unchecked(x, y).sqrt())
}

/// Lifts `point` to the representative closest to `anchor`'s canonical coordinates.
#[inline]
pub(crate) fn lift_into(anchor: &[f64], point: &[f64], out: &mut [f64]) {
    for ((o, &a), &p) in out.iter_mut().zip(anchor).zip(point) {
        *o = a + wrap_delta(a, p);
    }
}

/// Lifts torus points into `R^d` around an anchor.
///
/// Every point must lie at torus distance `< 1/4` from the anchor; the lifted
/// representatives then sit in the open cube of half-width `1/4` around the
/// anchor and pairwise Euclidean distances equal torus distances.
pub fn lift(points: &[&[f64]], anchor: &[f64]) -> Result<Vec<Vec<f64>>> {
    let base: Vec<f64> = anchor.iter().map(|&c| canonical(c)).collect();
    points
        .iter()
        .map(|p| {
            if p.len() != base.len() {
                return Err(Error::DimensionMismatch {
                    expected: base.len(),
                    got: p.len(),
                });
            }
            let dist = torus_dist2_unchecked(p, &base).sqrt();
            if dist >= LIFT_WINDOW {
                return Err(Error::LiftWindow { distance: dist });
            }
            let mut out = vec![0.0; base.len()];
            lift_into(&base, p, &mut out);
            Ok(out)
        })
        .collect()
}

/// Uniform bucket grid over `[0,1)^d` stored in compressed form.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    dim: usize,
    cell_size: f64,
    cells_per_axis: usize,
    cell_start: Vec<u32>,
    ids: Vec<u32>,
}

/// Largest number of cells a grid may allocate.
const MAX_CELLS: usize = 1 << 26;

impl SpatialGrid {
    /// Indexes `points` (flat coordinates, `dim` per point) with the given cell size.
    pub fn build(dim: usize, coords: &[f64], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size <= 1.0) {
            return Err(Error::Contract(format!(
                "grid cell size {cell_size} outside (0, 1]"
            )));
        }
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::Contract("coordinate buffer does not match dimension".into()));
        }
        let m = ((1.0 / cell_size).floor() as usize).max(1);
        let total = m
            .checked_pow(dim as u32)
            .filter(|&t| t <= MAX_CELLS)
            .ok_or_else(|| Error::Contract(format!("grid with {m}^{dim} cells is too large")))?;
        let n = coords.len() / dim;
        let mut counts = vec![0u32; total + 1];
        let cells: Vec<usize> = coords
            .chunks_exact(dim)
            .map(|p| Self::cell_of_with(p, m))
            .collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut ids = vec![0u32; n];
        for (id, &c) in cells.iter().enumerate() {
            ids[fill[c] as usize] = id as u32;
            fill[c] += 1;
        }
        Ok(Self {
            dim,
            cell_size,
            cells_per_axis: m,
            cell_start: counts,
            ids,
        })
    }

    fn cell_of_with(p: &[f64], m: usize) -> usize {
        p.iter().fold(0usize, |acc, &c| {
            let i = ((canonical(c) * m as f64) as usize).min(m - 1);
            acc * m + i
        })
    }

    /// Multi-index of the cell containing `p`.
    pub fn cell_coords(&self, p: &[f64]) -> Vec<usize> {
        let m = self.cells_per_axis;
        p.iter()
            .map(|&c| ((canonical(c) * m as f64) as usize).min(m - 1))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Point ids stored in the cell with the given multi-index.
    pub fn bucket(&self, cell: &[usize]) -> &[u32] {
        let m = self.cells_per_axis;
        let flat = cell.iter().fold(0usize, |acc, &i| acc * m + i);
        self.bucket_flat(flat)
    }

    fn bucket_flat(&self, flat: usize) -> &[u32] {
        &self.ids[self.cell_start[flat] as usize..self.cell_start[flat + 1] as usize]
    }

    pub fn bucket_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.cell_start.windows(2).map(|w| (w[1] - w[0]) as usize)
    }

    /// Calls `f` with every id stored in cells within `radius` of `x` (a superset
    /// of the true neighbors; each id visited once).
    pub(crate) fn for_each_candidate(&self, x: &[f64], radius: f64, mut f: impl FnMut(u32)) {
        let m = self.cells_per_axis;
        let width = 1.0 / m as f64;
        let ring = (radius / width).ceil() as usize;
        let full = 2 * ring + 1 >= m;
        // per-axis lists of cell indices to visit
        let axes: Vec<Vec<usize>> = x
            .iter()
            .map(|&c| {
                if full {
                    (0..m).collect()
                } else {
                    let home = ((canonical(c) * m as f64) as usize).min(m - 1);
                    (0..=2 * ring)
                        .map(|o| (home + m + o - ring) % m)
                        .collect()
                }
            })
            .collect();
        let mut odometer = vec![0usize; self.dim];
        loop {
            let flat = odometer
                .iter()
                .zip(&axes)
                .fold(0usize, |acc, (&i, axis)| acc * m + axis[i]);
            for &id in self.bucket_flat(flat) {
                f(id);
            }
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                odometer[axis] += 1;
                if odometer[axis] < axes[axis].len() {
                    break;
                }
                odometer[axis] = 0;
            }
        }
    }

    /// Ids of points at torus distance `<= radius` from `x`, in increasing order.
    pub fn neighbors_within(&self, coords: &[f64], x: &[f64], radius: f64) -> Vec<u32> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate(x, radius, |id| {
            let p = &coords[id as usize * self.dim..(id as usize + 1) * self.dim];
            if torus_dist2_unchecked(p, x) <= r2 {
                out.push(id);
            }
        });
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wraps_one_axis() {
        let d = torus_dist(&[0.1, 0.1], &[0.9, 0.1]).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(torus_dist(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = torus_dist(&[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            torus_dist(&[0.1], &[0.1, 0.2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lift_examples() {
        let lifted = lift(&[&[0.98, 0.5]], &[0.02, 0.5]).unwrap();
        assert!((lifted[0][0] + 0.02).abs() < 1e-15);
        assert_eq!(lifted[0][1], 0.5);

        let anchor = [0.3, 0.6];
        assert_eq!(lift(&[&anchor], &anchor).unwrap()[0], anchor.to_vec());

        let l = lift(&[&[0.1, 0.0], &[0.15, 0.0]], &[0.1, 0.0]).unwrap();
        let e = ((l[0][0] - l[1][0]).powi(2) + (l[0][1] - l[1][1]).powi(2)).sqrt();
        let t = torus_dist(&[0.1, 0.0], &[0.15, 0.0]).unwrap();
        assert!((e - 0.05).abs() < 1e-15 && (e - t).abs() < 1e-15);
    }

    #[test]
    fn lift_rejects_far_points() {
        assert!(matches!(
            lift(&[&[0.4, 0.5]], &[0.1, 0.5]),
            Err(Error::LiftWindow { .. })
        ));
    }

    #[test]
    fn grid_examples() {
        let empty = SpatialGrid::build(2, &[], 0.25).unwrap();
        assert!(empty.bucket_sizes().all(|s| s == 0));

        let g = SpatialGrid::build(2, &[0.5, 0.5], 0.25).unwrap();
        assert_eq!(g.cells_per_axis(), 4);
        assert_eq!(g.bucket(&[2, 2]), &[0]);
        assert_eq!(g.cell_coords(&[0.5, 0.5]), vec![2, 2]);

        assert!(SpatialGrid::build(2, &[], 0.0).is_err());
        assert!(SpatialGrid::build(2, &[], 1.5).is_err());
    }

    #[test]
    fn neighbor_examples() {
        let coords = [0.0, 0.0, 0.1, 0.0, 0.25, 0.0];
        let g = SpatialGrid::build(2, &coords, 0.1).unwrap();
        assert_eq!(g.neighbors_within(&coords, &[0.0, 0.0], 0.12), vec![0, 1]);
        assert!(g.neighbors_within(&coords, &[0.6, 0.6], 0.05).is_empty());
        let all = g.neighbors_within(&coords, &[0.6, 0.6], 2f64.sqrt() / 2.0);
        assert_eq!(all, vec![0, 1, 2]);
    }

    fn cloud(dim: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
        (0..=max).prop_flat_map(move |n| proptest::collection::vec(0.0..1.0f64, n * dim))
    }

    proptest! {
        #[test]
        fn metric_axioms(x in proptest::collection::vec(0.0..1.0f64, 3),
                         y in proptest::collection::vec(0.0..1.0f64, 3),
                         z in proptest::collection::vec(0.0..1.0f64, 3)) {
            let xy = torus_dist(&x, &y).unwrap();
            prop_assert_eq!(xy, torus_dist(&y, &x).unwrap());
            let xz = torus_dist(&x, &z).unwrap();
            let zy = torus_dist(&z, &y).unwrap();
            prop_assert!(xy <= xz + zy + 1e-12);
            prop_assert!(xy <= 3f64.sqrt() / 2.0 + 1e-15);
        }

        #[test]
        fn lift_is_an_isometry(anchor in proptest::collection::vec(0.0..1.0f64, 2),
                               offs in proptest::collection::vec(-0.12..0.12f64, 6)) {
            let pts: Vec<Vec<f64>> = offs.chunks(2)
                .map(|o| vec![canonical(anchor[0] + o[0]), canonical(anchor[1] + o[1])])
                .collect();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let lifted = lift(&refs, &anchor).unwrap();
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let e: f64 = lifted[i].iter().zip(&lifted[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    let t = torus_dist(&pts[i], &pts[j]).unwrap();
                    prop_assert!((e - t).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn neighbors_match_brute_force(coords in cloud(2, 500),
                                       q in proptest::collection::vec(0.0..1.0f64, 2),
                                       cell in 0.02..0.5f64, radius in 0.0..0.25f64) {
            let g = SpatialGrid::build(2, &coords, cell).unwrap();
            prop_assert_eq!(g.bucket_sizes().sum::<usize>(), coords.len() / 2);
            let fast = g.neighbors_within(&coords, &q, radius);
            let slow: Vec<u32> = coords.chunks(2).enumerate()
                .filter(|(_, p)| torus_dist(p, &q).unwrap() <= radius)
                .map(|(i, _)| i as u32).collect();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn neighbors_match_brute_force_3d(coords in cloud(3, 200),
                                          q in proptest::collection::vec(0.0..1.0f64, 3),
                                          cell in 0.05..0.5f64, radius in 0.0..0.3f64) {
            let g = SpatialGrid::build(3, &coords, cell).unwrap();
            let fast = g.neighbors_within(&coords, &q, radius);
            let slow: Vec<u32> = coords.chunks(3).enumerate()
                .filter(|(_, p)| torus_dist(p, &q).unwrap() <= radius)
                .map(|(i, _)| i as u32).collect();
            prop_assert_eq!(fast, slow);
        }
    }
}
