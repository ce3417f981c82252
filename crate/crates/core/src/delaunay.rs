//! Periodic Delaunay triangulation of a planar point cloud on `T^2`.
//!
//! The cloud is padded with periodic copies inside a margin around the unit
//! square and triangulated in the plane; a triangle is kept when its
//! circumcenter falls in `[0,1)^2`. The result is accepted only if every kept
//! circumradius is below the margin (so emptiness was tested against every
//! relevant copy) and the triangle count matches the Euler characteristic of
//! the torus (`F = 2V`).
//!
//! Every critical face has an empty circumscribed ball and is therefore a
//! Delaunay simplex, and the Čech filtration restricted to Delaunay simplices
//! has the same persistent homology as the full Čech filtration. In `d = 2`
//! this shrinks the complex from `O(n · m^2)` triangles to `2n`.

use delaunator::{triangulate, Point};

use crate::detect::{is_ball_empty, CriticalFace, Sign, MAX_WINDOW_RADIUS};
use crate::error::{Error, Result};
use crate::geometry::{circumsphere_barycentric, INTERIOR_TOL};
use crate::sampling::PointCloud;
use crate::torus::{lift_into, torus_dist2_unchecked, SpatialGrid, TorusPoint, LIFT_WINDOW};

/// Delaunay triangles and edges of a cloud on `T^2`, as sorted id tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDelaunay {
    pub triangles: Vec<[u32; 3]>,
    pub edges: Vec<[u32; 2]>,
    pub margin: f64,
    pub max_circumradius: f64,
}

impl PeriodicDelaunay {
    /// Simplices of dimension `k` (1 = edges, 2 = triangles) as id slices.
    pub fn simplices(&self, k: usize) -> Vec<&[u32]> {
        match k {
            1 => self.edges.iter().map(|e| e.as_slice()).collect(),
            2 => self.triangles.iter().map(|t| t.as_slice()).collect(),
            _ => Vec::new(),
        }
    }
}

fn planar_circumcenter(a: &Point, b: &Point, c: &Point) -> Option<(f64, f64, f64)> {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    if d == 0.0 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some((a.x + ux, a.y + uy, (ux * ux + uy * uy).sqrt()))
}

/// Triangulates a planar cloud on the flat torus.
pub fn periodic_delaunay(cloud: &PointCloud) -> Result<PeriodicDelaunay> {
    if cloud.dim() != 2 {
        return Err(Error::DelaunayUnavailable(format!(
            "only planar clouds are supported, got d = {}",
            cloud.dim()
        )));
    }
    let n = cloud.len();
    if n < 3 {
        return Err(Error::DelaunayUnavailable(format!("{n} points")));
    }
    let typical = ((n as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt();
    let mut margin = (4.0 * typical).clamp(0.05, 0.5);
    loop {
        match triangulate_with_margin(cloud, margin) {
            Ok(dt) => return Ok(dt),
            Err(e) if margin >= 0.5 => return Err(e),
            Err(_) => margin = (2.0 * margin).min(0.5),
        }
    }
}

fn triangulate_with_margin(cloud: &PointCloud, margin: f64) -> Result<PeriodicDelaunay> {
    let n = cloud.len();
    let mut pts = Vec::with_capacity(n * 2);
    let mut origin = Vec::with_capacity(n * 2);
    for sx in [0.0, -1.0, 1.0] {
        for sy in [0.0, -1.0, 1.0] {
            for (id, p) in cloud.iter().enumerate() {
                let (x, y) = (p[0] + sx, p[1] + sy);
                if (-margin..1.0 + margin).contains(&x) && (-margin..1.0 + margin).contains(&y) {
                    pts.push(Point { x, y });
                    origin.push(id as u32);
                }
            }
        }
    }
    let tri = triangulate(&pts);
    let mut triangles = Vec::with_capacity(2 * n);
    let mut max_r: f64 = 0.0;
    for t in tri.triangles.chunks_exact(3) {
        let (a, b, c) = (&pts[t[0]], &pts[t[1]], &pts[t[2]]);
        let Some((cx, cy, r)) = planar_circumcenter(a, b, c) else {
            continue;
        };
        if !((0.0..1.0).contains(&cx) && (0.0..1.0).contains(&cy)) {
            continue;
        }
        let mut ids = [origin[t[0]], origin[t[1]], origin[t[2]]];
        ids.sort_unstable();
        if ids[0] == ids[1] || ids[1] == ids[2] {
            return Err(Error::DelaunayUnavailable("triangle repeats a vertex".into()));
        }
        max_r = max_r.max(r);
        triangles.push(ids);
    }
    if !(max_r < margin && max_r < LIFT_WINDOW) {
        return Err(Error::DelaunayUnavailable(format!(
            "circumradius {max_r} exceeds margin {margin}"
        )));
    }
    if triangles.len() != 2 * n {
        return Err(Error::DelaunayUnavailable(format!(
            "{} triangles for {n} points (expected {})",
            triangles.len(),
            2 * n
        )));
    }
    triangles.sort_unstable();
    let mut edges: Vec<[u32; 2]> = triangles
        .iter()
        .flat_map(|t| [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    if edges.len() != 3 * n {
        return Err(Error::DelaunayUnavailable(format!(
            "{} edges for {n} points (expected {})",
            edges.len(),
            3 * n
        )));
    }
    Ok(PeriodicDelaunay {
        triangles,
        edges,
        margin,
        max_circumradius: max_r,
    })
}

/// Critical `k`-faces with value in `[r_min, r_max]`, read off the Delaunay simplices.
///
/// Produces the same set, in the same order, as
/// [`detect_critical_faces`](crate::detect::detect_critical_faces).
pub fn detect_critical_faces_delaunay(
    cloud: &PointCloud,
    dt: &PeriodicDelaunay,
    grid: &SpatialGrid,
    k: usize,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<CriticalFace>> {
    if !(0.0 <= r_min && r_min <= r_max && r_max < MAX_WINDOW_RADIUS) {
        return Err(Error::Contract(format!(
            "detection window [{r_min}, {r_max}] must satisfy 0 <= r_min <= r_max < 1/8"
        )));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Contract(format!("face index {k} outside 1..=2")));
    }
    let diam2 = (2.0 * r_max * (1.0 + 1e-9)).powi(2);
    let mut out = Vec::new();
    let mut lifted = [[0.0; 2]; 3];
    for ids in dt.simplices(k) {
        let first = cloud.point(ids[0] as usize);
        let close = ids.iter().enumerate().all(|(i, &a)| {
            ids[i + 1..]
                .iter()
                .all(|&b| torus_dist2_unchecked(cloud.point(a as usize), cloud.point(b as usize)) <= diam2)
        });
        if !close {
            continue;
        }
        for (slot, &id) in ids.iter().enumerate() {
            lift_into(first, cloud.point(id as usize), &mut lifted[slot]);
        }
        let verts: Vec<&[f64]> = lifted[..ids.len()].iter().map(|p| p.as_slice()).collect();
        let Ok((ball, bary)) = circumsphere_barycentric(&verts) else {
            continue;
        };
        if ball.radius < r_min || ball.radius > r_max || !bary.iter().all(|&b| b > INTERIOR_TOL) {
            continue;
        }
        let center = TorusPoint::wrapped(&ball.center);
        if !is_ball_empty(cloud, grid, center.coords(), ball.radius, ids) {
            continue;
        }
        out.push(CriticalFace {
            vertices: ids.to_vec(),
            index: k,
            center,
            value: ball.radius,
            u: None,
            sign: Sign::Unclassified,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::detect_critical_faces;
    use crate::sampling::sample_trial_cloud;

    #[test]
    fn euler_counts_hold() {
        for t in 0..5 {
            let c = sample_trial_cloud(400.0, 2, 8, t).unwrap();
            let dt = periodic_delaunay(&c).unwrap();
            assert_eq!(dt.triangles.len(), 2 * c.len());
            assert_eq!(dt.edges.len(), 3 * c.len());
        }
    }

    #[test]
    fn rejects_other_dimensions_and_tiny_clouds() {
        let c = sample_trial_cloud(50.0, 3, 1, 0).unwrap();
        assert!(periodic_delaunay(&c).is_err());
        let c = PointCloud::from_points(2, &[vec![0.1, 0.1], vec![0.5, 0.5]]).unwrap();
        assert!(periodic_delaunay(&c).is_err());
    }

    #[test]
    fn matches_grid_detector() {
        for t in 0..8 {
            let c = sample_trial_cloud(300.0, 2, 21, t).unwrap();
            let dt = periodic_delaunay(&c).unwrap();
            let grid = SpatialGrid::build(2, c.coords(), 0.2).unwrap();
            for k in 1..=2 {
                let a = detect_critical_faces(&c, k, 0.01, 0.1).unwrap();
                let b = detect_critical_faces_delaunay(&c, &dt, &grid, k, 0.01, 0.1).unwrap();
                assert_eq!(a, b, "trial {t} k {k}");
            }
        }
    }
}
