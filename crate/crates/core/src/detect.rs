//! Enumeration of critical `k`-faces of the distance function `d_P`.
//!
//! A `(k+1)`-subset `Y` is a critical face when its vertices are in general
//! position, its circumcenter `c(Y)` lies in the open simplex, and the open
//! circumscribed ball contains no other point of the cloud. The critical value
//! `ρ(Y)` is the circumradius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{barycentric_interior, circumsphere, circumsphere_barycentric, INTERIOR_TOL};
use crate::sampling::PointCloud;
use crate::torus::{self, lift_into, torus_dist2_unchecked, SpatialGrid, TorusPoint};

/// Radii in detection windows must stay below this so every face lifts.
pub const MAX_WINDOW_RADIUS: f64 = 0.125;
/// A point at distance `<= ρ (1 + OCCUPIED_TOL)` from a center occupies the ball.
pub const OCCUPIED_TOL: f64 = 1e-12;

/// Persistence sign of a critical face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Unclassified,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Unclassified => "unclassified",
        }
    }
}

/// A critical face: vertex ids, index `k`, critical point, and critical value.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFace {
    pub vertices: Vec<u32>,
    pub index: usize,
    pub center: TorusPoint,
    pub value: f64,
    /// `n ω_d ρ^d - a_n`, set by the experiment engine.
    pub u: Option<f64>,
    pub sign: Sign,
}

impl CriticalFace {
    /// Re-checks equidistance, interiority and emptiness against `cloud` without
    /// using any spatial index.
    pub fn revalidate(&self, cloud: &PointCloud) -> Result<()> {
        if self.vertices.len() != self.index + 1 || self.vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Consistency(format!("bad vertex tuple {:?}", self.vertices)));
        }
        if !(self.value > 0.0 && self.value <= MAX_WINDOW_RADIUS) {
            return Err(Error::Consistency(format!("value {} out of range", self.value)));
        }
        let c = self.center.coords();
        for &v in &self.vertices {
            let d = torus_dist2_unchecked(cloud.point(v as usize), c).sqrt();
            if (d - self.value).abs() > 1e-9 * self.value {
                return Err(Error::Consistency(format!(
                    "vertex {v} at distance {d} from the center, value {}",
                    self.value
                )));
            }
        }
        let pts: Vec<&[f64]> = self.vertices.iter().map(|&v| cloud.point(v as usize)).collect();
        let lifted = torus::lift(&pts, c)?;
        let refs: Vec<&[f64]> = lifted.iter().map(|p| p.as_slice()).collect();
        let center = torus::lift(&[c], c)?.remove(0);
        if !barycentric_interior(&refs, &center) {
            return Err(Error::Consistency("center not interior".into()));
        }
        let limit = self.value * (1.0 + OCCUPIED_TOL);
        for (id, p) in cloud.iter().enumerate() {
            if self.vertices.binary_search(&(id as u32)).is_err()
                && torus_dist2_unchecked(p, c) <= limit * limit
            {
                return Err(Error::Consistency(format!("point {id} inside the ball")));
            }
        }
        Ok(())
    }
}

/// A `(k+1)`-subset with its lifted vertices and circumsphere.
#[derive(Debug, Clone)]
pub struct CandidateFace {
    pub vertices: Vec<u32>,
    pub lifted: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub value: f64,
}

fn check_window(cloud: &PointCloud, k: usize, r_min: f64, r_max: f64) -> Result<()> {
    if !(0.0 <= r_min && r_min <= r_max && r_max < MAX_WINDOW_RADIUS) {
        return Err(Error::Contract(format!(
            "detection window [{r_min}, {r_max}] must satisfy 0 <= r_min <= r_max < 1/8"
        )));
    }
    if k == 0 || k > cloud.dim() {
        return Err(Error::Contract(format!(
            "face index {k} outside 1..={}",
            cloud.dim()
        )));
    }
    Ok(())
}

/// Whether no point outside `exclude` lies within `rho (1 + 1e-12)` of `c`.
pub fn is_ball_empty(cloud: &PointCloud, grid: &SpatialGrid, c: &[f64], rho: f64, exclude: &[u32]) -> bool {
    let limit = rho * (1.0 + OCCUPIED_TOL);
    let limit2 = limit * limit;
    let mut empty = true;
    grid.for_each_candidate(c, limit, |id| {
        if empty
            && !exclude.contains(&id)
            && torus_dist2_unchecked(cloud.point(id as usize), c) <= limit2
        {
            empty = false;
        }
    });
    empty
}

/// Grid-accelerated enumeration of the critical `k`-faces with value in `[r_min, r_max]`.
///
/// Each subset is generated once, from its lowest-id vertex, among neighbors
/// within `2 r_max`. Output is sorted lexicographically by vertex ids.
pub fn detect_critical_faces(cloud: &PointCloud, k: usize, r_min: f64, r_max: f64) -> Result<Vec<CriticalFace>> {
    check_window(cloud, k, r_min, r_max)?;
    if cloud.is_empty() || r_max == 0.0 {
        return Ok(Vec::new());
    }
    let grid = SpatialGrid::build(cloud.dim(), cloud.coords(), 2.0 * r_max)?;
    let mut out = Vec::new();
    let mut scratch = AnchorScratch::default();
    for anchor in 0..cloud.len() as u32 {
        detect_from_anchor(cloud, &grid, anchor, k, r_min, r_max, &mut scratch, &mut out);
    }
    Ok(out)
}

#[derive(Default)]
struct AnchorScratch {
    ids: Vec<u32>,
    lifted: Vec<f64>,
    higher: Vec<usize>,
    chosen: Vec<usize>,
}

#[allow(clippy::too_many_arguments)]
fn detect_from_anchor(
    cloud: &PointCloud,
    grid: &SpatialGrid,
    anchor: u32,
    k: usize,
    r_min: f64,
    r_max: f64,
    s: &mut AnchorScratch,
    out: &mut Vec<CriticalFace>,
) {
    let dim = cloud.dim();
    let p = cloud.point(anchor as usize);
    let reach = 2.0 * r_max * (1.0 + 1e-9);
    let reach2 = reach * reach;
    s.ids.clear();
    grid.for_each_candidate(p, reach, |id| {
        if id != anchor && torus_dist2_unchecked(cloud.point(id as usize), p) <= reach2 {
            s.ids.push(id);
        }
    });
    s.ids.sort_unstable();
    s.lifted.clear();
    s.lifted.resize(s.ids.len() * dim, 0.0);
    for (slot, &id) in s.ids.iter().enumerate() {
        lift_into(p, cloud.point(id as usize), &mut s.lifted[slot * dim..(slot + 1) * dim]);
    }
    s.higher.clear();
    s.higher.extend((0..s.ids.len()).filter(|&i| s.ids[i] > anchor));
    if s.higher.len() < k {
        return;
    }
    s.chosen.clear();
    let ctx = Ctx {
        dim,
        anchor,
        p,
        ids: &s.ids,
        lifted: &s.lifted,
        k,
        r_min,
        r_max,
        reach2,
    };
    let higher = std::mem::take(&mut s.higher);
    let mut chosen = std::mem::take(&mut s.chosen);
    ctx.extend(&higher, 0, &mut chosen, out);
    s.higher = higher;
    s.chosen = chosen;
}

struct Ctx<'a> {
    dim: usize,
    anchor: u32,
    p: &'a [f64],
    ids: &'a [u32],
    lifted: &'a [f64],
    k: usize,
    r_min: f64,
    r_max: f64,
    reach2: f64,
}

impl Ctx<'_> {
    fn point(&self, slot: usize) -> &[f64] {
        &self.lifted[slot * self.dim..(slot + 1) * self.dim]
    }

    fn extend(&self, higher: &[usize], start: usize, chosen: &mut Vec<usize>, out: &mut Vec<CriticalFace>) {
        if chosen.len() == self.k {
            self.test(chosen, out);
            return;
        }
        let need = self.k - chosen.len();
        for pos in start..higher.len() {
            if higher.len() - pos < need {
                break;
            }
            let slot = higher[pos];
            let q = self.point(slot);
            let close = chosen.iter().all(|&c| {
                let r = self.point(c);
                q.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= self.reach2
            });
            if close {
                chosen.push(slot);
                self.extend(higher, pos + 1, chosen, out);
                chosen.pop();
            }
        }
    }

    fn test(&self, chosen: &[usize], out: &mut Vec<CriticalFace>) {
        let mut verts: Vec<&[f64]> = Vec::with_capacity(self.k + 1);
        verts.push(self.p);
        verts.extend(chosen.iter().map(|&c| self.point(c)));
        let Ok((ball, bary)) = circumsphere_barycentric(&verts) else {
            return;
        };
        if ball.radius < self.r_min || ball.radius > self.r_max {
            return;
        }
        if !bary.iter().all(|&b| b > INTERIOR_TOL) {
            return;
        }
        let limit = ball.radius * (1.0 + OCCUPIED_TOL);
        let limit2 = limit * limit;
        for slot in 0..self.ids.len() {
            if chosen.contains(&slot) {
                continue;
            }
            let z = self.point(slot);
            if z.iter().zip(&ball.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= limit2 {
                return;
            }
        }
        let mut vertices = Vec::with_capacity(self.k + 1);
        vertices.push(self.anchor);
        vertices.extend(chosen.iter().map(|&c| self.ids[c]));
        out.push(CriticalFace {
            vertices,
            index: self.k,
            center: TorusPoint::wrapped(&ball.center),
            value: ball.radius,
            u: None,
            sign: Sign::Unclassified,
        });
    }
}

/// Lifts the vertices of `ids` around the first one and computes the circumsphere.
pub fn candidate_face(cloud: &PointCloud, ids: &[u32]) -> Result<CandidateFace> {
    let first = cloud.point(ids[0] as usize);
    let pts: Vec<&[f64]> = ids.iter().map(|&i| cloud.point(i as usize)).collect();
    let lifted = torus::lift(&pts, first)?;
    let refs: Vec<&[f64]> = lifted.iter().map(|p| p.as_slice()).collect();
    let ball = circumsphere(&refs)?;
    Ok(CandidateFace {
        vertices: ids.to_vec(),
        center: ball.center,
        value: ball.radius,
        lifted,
    })
}

/// Tests every `(k+1)`-subset of the cloud with no spatial pruning.
///
/// Used as the reference enumerator; cost grows as `N^{k+1}`.
pub fn detect_critical_faces_brute_force(
    cloud: &PointCloud,
    k: usize,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<CriticalFace>> {
    check_window(cloud, k, r_min, r_max)?;
    let n = cloud.len();
    let mut out = Vec::new();
    if n < k + 1 {
        return Ok(out);
    }
    let mut idx: Vec<usize> = (0..=k).collect();
    loop {
        let ids: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
        match candidate_face(cloud, &ids) {
            Ok(cand) => {
                let refs: Vec<&[f64]> = cand.lifted.iter().map(|p| p.as_slice()).collect();
                if cand.value >= r_min
                    && cand.value <= r_max
                    && barycentric_interior(&refs, &cand.center)
                {
                    let center = TorusPoint::wrapped(&cand.center);
                    let limit = cand.value * (1.0 + OCCUPIED_TOL);
                    let empty = cloud.iter().enumerate().all(|(id, z)| {
                        ids.contains(&(id as u32))
                            || torus_dist2_unchecked(z, center.coords()) > limit * limit
                    });
                    if empty {
                        out.push(CriticalFace {
                            vertices: ids,
                            index: k,
                            center,
                            value: cand.value,
                            u: None,
                            sign: Sign::Unclassified,
                        });
                    }
                }
            }
            // vertices too far apart to lift cannot have a circumradius below 1/8
            Err(Error::LiftWindow { .. }) | Err(Error::Degenerate) => {}
            Err(e) => return Err(e),
        }
        // next combination in lexicographic order
        let mut i = k + 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] < n - (k + 1 - i) {
                idx[i] += 1;
                for j in i + 1..=k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_trial_cloud;

    fn cloud2(points: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_points(2, &points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn collinear() -> PointCloud {
        cloud2(&[[0.0, 0.0], [0.1, 0.0], [0.25, 0.0]])
    }

    #[test]
    fn two_points_one_face() {
        let c = cloud2(&[[0.5, 0.5], [0.6, 0.5]]);
        let f = detect_critical_faces(&c, 1, 0.0, 0.12).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].vertices, vec![0, 1]);
        assert!((f[0].value - 0.05).abs() < 1e-15);
        assert!((f[0].center.coords()[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn collinear_triple_keeps_short_pairs() {
        let c = collinear();
        let f = detect_critical_faces(&c, 1, 0.0, 0.124).unwrap();
        let got: Vec<(Vec<u32>, f64)> = f.iter().map(|x| (x.vertices.clone(), x.value)).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, vec![0, 1]);
        assert!((got[0].1 - 0.05).abs() < 1e-15);
        assert_eq!(got[1].0, vec![1, 2]);
        assert!((got[1].1 - 0.075).abs() < 1e-15);
        assert_eq!(f, detect_critical_faces_brute_force(&c, 1, 0.0, 0.124).unwrap());
    }

    #[test]
    fn zero_window_is_empty() {
        let c = sample_trial_cloud(200.0, 2, 3, 0).unwrap();
        assert!(detect_critical_faces(&c, 1, 0.0, 0.0).unwrap().is_empty());
    }

    #[test]
    fn window_contract() {
        let c = collinear();
        assert!(detect_critical_faces(&c, 1, 0.0, 0.2).is_err());
        assert!(detect_critical_faces(&c, 1, 0.1, 0.05).is_err());
        assert!(detect_critical_faces(&c, 3, 0.0, 0.1).is_err());
        assert!(detect_critical_faces(&c, 0, 0.0, 0.1).is_err());
    }

    #[test]
    fn ball_emptiness_examples() {
        let c = cloud2(&[[0.5, 0.5], [0.6, 0.5]]);
        let g = SpatialGrid::build(2, c.coords(), 0.2).unwrap();
        assert!(is_ball_empty(&c, &g, &[0.55, 0.5], 0.05, &[0, 1]));
        let with_center = c.with_point(&[0.55, 0.5]).unwrap();
        let g = SpatialGrid::build(2, with_center.coords(), 0.2).unwrap();
        assert!(!is_ball_empty(&with_center, &g, &[0.55, 0.5], 0.05, &[0, 1]));

        let c = collinear();
        let g = SpatialGrid::build(2, c.coords(), 0.25).unwrap();
        // middle point sits 0.025 from the long pair's midpoint
        assert!(!is_ball_empty(&c, &g, &[0.125, 0.0], 0.125, &[0, 2]));
    }

    #[test]
    fn faces_revalidate_and_match_brute_force() {
        for t in 0..6 {
            let c = sample_trial_cloud(40.0, 2, 17, t).unwrap();
            for k in 1..=2 {
                let fast = detect_critical_faces(&c, k, 0.0, 0.12).unwrap();
                let slow = detect_critical_faces_brute_force(&c, k, 0.0, 0.12).unwrap();
                assert_eq!(fast, slow);
                for f in &fast {
                    f.revalidate(&c).unwrap();
                }
            }
        }
    }
}
