//! Čech filtrations on the torus, valued by minimum enclosing ball radius.

use rustc_hash::FxHashMap;

use crate::delaunay::PeriodicDelaunay;
use crate::detect::MAX_WINDOW_RADIUS;
use crate::error::{Error, Result};
use crate::geometry::min_enclosing_ball;
use crate::sampling::PointCloud;
use crate::torus::{lift_into, torus_dist2_unchecked, SpatialGrid};

/// A simplex given by sorted vertex ids and its filtration value.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<u32>,
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices ordered by `(value, dim, vertex ids)`, so every face precedes its cofaces.
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
    index: FxHashMap<Vec<u32>, u32>,
}

impl Filtration {
    /// Sorts and indexes `simplices`. Vertex lists must already be sorted and
    /// the set must be closed under taking faces.
    ///
    /// Each value is raised to the maximum over its facets, so rounding in the
    /// enclosing-ball solver can never order a simplex before one of its faces.
    pub fn from_simplices(mut simplices: Vec<Simplex>, max_dim: usize) -> Result<Self> {
        for s in &simplices {
            if s.vertices.is_empty() || s.dim() > max_dim || !s.vertices.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Contract(format!("malformed simplex {:?}", s.vertices)));
            }
        }
        simplices.sort_by(|a, b| a.vertices.len().cmp(&b.vertices.len()).then_with(|| a.vertices.cmp(&b.vertices)));
        let mut index: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        index.reserve(simplices.len());
        let mut facet = Vec::with_capacity(max_dim + 1);
        for i in 0..simplices.len() {
            let len = simplices[i].vertices.len();
            if len > 1 {
                let mut v = simplices[i].value;
                for skip in 0..len {
                    facet.clear();
                    facet.extend((0..len).filter(|&j| j != skip).map(|j| simplices[i].vertices[j]));
                    let j = *index.get(&facet).ok_or_else(|| {
                        Error::Consistency(format!("face {facet:?} of {:?} missing", simplices[i].vertices))
                    })?;
                    v = v.max(simplices[j as usize].value);
                }
                simplices[i].value = v;
            }
            if index.insert(simplices[i].vertices.clone(), i as u32).is_some() {
                return Err(Error::Contract(format!("duplicate simplex {:?}", simplices[i].vertices)));
            }
        }
        let mut order: Vec<u32> = (0..simplices.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (a, b) = (&simplices[a as usize], &simplices[b as usize]);
            a.value
                .total_cmp(&b.value)
                .then(a.vertices.len().cmp(&b.vertices.len()))
                .then_with(|| a.vertices.cmp(&b.vertices))
        });
        let mut rank = vec![0u32; order.len()];
        for (pos, &old) in order.iter().enumerate() {
            rank[old as usize] = pos as u32;
        }
        for slot in index.values_mut() {
            *slot = rank[*slot as usize];
        }
        let mut taken: Vec<Option<Simplex>> = simplices.into_iter().map(Some).collect();
        let simplices = order.iter().map(|&old| taken[old as usize].take().expect("permutation")).collect();
        Ok(Self {
            simplices,
            max_dim,
            index,
        })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn index_of(&self, vertices: &[u32]) -> Option<usize> {
        self.index.get(vertices).map(|&i| i as usize)
    }

    /// Positions of the codimension-one faces of simplex `i`, ascending.
    pub fn boundary(&self, i: usize) -> Result<Vec<u32>> {
        let s = &self.simplices[i];
        if s.vertices.len() < 2 {
            return Ok(Vec::new());
        }
        let mut facet = Vec::with_capacity(s.vertices.len() - 1);
        let mut col = Vec::with_capacity(s.vertices.len());
        for skip in 0..s.vertices.len() {
            facet.clear();
            facet.extend(
                s.vertices
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &v)| v),
            );
            match self.index.get(&facet) {
                Some(&j) if (j as usize) < i => col.push(j),
                _ => {
                    return Err(Error::Consistency(format!(
                        "face {facet:?} of {:?} missing or out of order",
                        s.vertices
                    )))
                }
            }
        }
        col.sort_unstable();
        Ok(col)
    }

    /// Number of simplices of each dimension.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            c[s.dim()] += 1;
        }
        c
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0 && r < MAX_WINDOW_RADIUS) {
        return Err(Error::Contract(format!("filtration radius {r} must lie in [0, 1/8)")));
    }
    Ok(())
}

fn vertices(cloud: &PointCloud) -> Vec<Simplex> {
    (0..cloud.len() as u32)
        .map(|v| Simplex {
            vertices: vec![v],
            value: 0.0,
        })
        .collect()
}

/// All simplices of dimension `<= max_dim` whose minimum enclosing ball radius is at most `r`.
pub fn build_cech_filtration(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<Filtration> {
    check_radius(r)?;
    if max_dim > cloud.dim() {
        return Err(Error::Contract(format!(
            "max_dim {max_dim} exceeds ambient dimension {}",
            cloud.dim()
        )));
    }
    let mut out = vertices(cloud);
    if r > 0.0 && max_dim > 0 && cloud.len() > 1 {
        let dim = cloud.dim();
        let grid = SpatialGrid::build(dim, cloud.coords(), 2.0 * r)?;
        let reach = 2.0 * r * (1.0 + 1e-9);
        let reach2 = reach * reach;
        let mut ids = Vec::new();
        let mut lifted = Vec::new();
        let mut chosen = Vec::new();
        for anchor in 0..cloud.len() as u32 {
            let p = cloud.point(anchor as usize);
            ids.clear();
            grid.for_each_candidate(p, reach, |id| {
                if id > anchor && torus_dist2_unchecked(cloud.point(id as usize), p) <= reach2 {
                    ids.push(id);
                }
            });
            ids.sort_unstable();
            lifted.clear();
            lifted.resize(ids.len() * dim, 0.0);
            for (slot, &id) in ids.iter().enumerate() {
                lift_into(p, cloud.point(id as usize), &mut lifted[slot * dim..(slot + 1) * dim]);
            }
            let ctx = CliqueCtx {
                dim,
                anchor,
                p,
                ids: &ids,
                lifted: &lifted,
                max_dim,
                r,
                reach2,
            };
            chosen.clear();
            ctx.extend(0, &mut chosen, &mut out)?;
        }
    }
    Filtration::from_simplices(out, max_dim)
}

struct CliqueCtx<'a> {
    dim: usize,
    anchor: u32,
    p: &'a [f64],
    ids: &'a [u32],
    lifted: &'a [f64],
    max_dim: usize,
    r: f64,
    reach2: f64,
}

impl CliqueCtx<'_> {
    fn point(&self, slot: usize) -> &[f64] {
        &self.lifted[slot * self.dim..(slot + 1) * self.dim]
    }

    // enclosing radius is monotone under inclusion, so a failed subset prunes its supersets
    fn extend(&self, start: usize, chosen: &mut Vec<usize>, out: &mut Vec<Simplex>) -> Result<()> {
        for slot in start..self.ids.len() {
            let q = self.point(slot);
            let close = chosen.iter().all(|&c| {
                let z = self.point(c);
                q.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= self.reach2
            });
            if !close {
                continue;
            }
            chosen.push(slot);
            let mut pts: Vec<&[f64]> = Vec::with_capacity(chosen.len() + 1);
            pts.push(self.p);
            pts.extend(chosen.iter().map(|&c| self.point(c)));
            let ball = min_enclosing_ball(&pts)?;
            if ball.radius <= self.r {
                let mut vertices = Vec::with_capacity(chosen.len() + 1);
                vertices.push(self.anchor);
                vertices.extend(chosen.iter().map(|&c| self.ids[c]));
                out.push(Simplex {
                    vertices,
                    value: ball.radius,
                });
                if chosen.len() < self.max_dim {
                    self.extend(slot + 1, chosen, out)?;
                }
            }
            chosen.pop();
        }
        Ok(())
    }
}

/// Delaunay simplices (edges and triangles) whose minimum enclosing ball radius is at most `r`.
///
/// Same persistent homology as [`build_cech_filtration`] with `max_dim = 2` in the plane.
pub fn build_delaunay_cech_filtration(cloud: &PointCloud, dt: &PeriodicDelaunay, r: f64) -> Result<Filtration> {
    check_radius(r)?;
    let mut out = vertices(cloud);
    let mut lifted = [[0.0; 2]; 3];
    for k in 1..=2 {
        for ids in dt.simplices(k) {
            let first = cloud.point(ids[0] as usize);
            for (slot, &id) in ids.iter().enumerate() {
                lift_into(first, cloud.point(id as usize), &mut lifted[slot]);
            }
            let pts: Vec<&[f64]> = lifted[..ids.len()].iter().map(|p| p.as_slice()).collect();
            let far = pts[1..].iter().any(|q| q.iter().zip(first).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 4.0 * r * r * (1.0 + 1e-9));
            if far {
                continue;
            }
            let ball = min_enclosing_ball(&pts)?;
            if ball.radius <= r {
                out.push(Simplex {
                    vertices: ids.to_vec(),
                    value: ball.radius,
                });
            }
        }
    }
    Filtration::from_simplices(out, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::periodic_delaunay;
    use crate::sampling::sample_trial_cloud;

    #[test]
    fn faces_precede_cofaces() {
        let c = sample_trial_cloud(200.0, 2, 3, 0).unwrap();
        let f = build_cech_filtration(&c, 0.08, 2).unwrap();
        for i in 0..f.len() {
            let b = f.boundary(i).unwrap();
            assert!(b.iter().all(|&j| (j as usize) < i));
            for &j in &b {
                assert!(f.simplices()[j as usize].value <= f.simplices()[i].value);
            }
        }
    }

    #[test]
    fn equilateral_triangle_values() {
        let s = 0.05;
        let h = s * 3f64.sqrt() / 2.0;
        let c = PointCloud::from_points(2, &[vec![0.4, 0.4], vec![0.4 + s, 0.4], vec![0.4 + s / 2.0, 0.4 + h]]).unwrap();
        let f = build_cech_filtration(&c, 0.1, 2).unwrap();
        assert_eq!(f.counts(), vec![3, 3, 1]);
        let tri = &f.simplices()[f.index_of(&[0, 1, 2]).unwrap()];
        assert!((tri.value - s / 3f64.sqrt()).abs() < 1e-14);
        let edge = &f.simplices()[f.index_of(&[0, 1]).unwrap()];
        assert!((edge.value - s / 2.0).abs() < 1e-14);
    }

    #[test]
    fn wraps_across_boundary() {
        let c = PointCloud::from_points(2, &[vec![0.99, 0.5], vec![0.01, 0.5]]).unwrap();
        let f = build_cech_filtration(&c, 0.011, 1).unwrap();
        assert_eq!(f.counts(), vec![2, 1]);
        assert!((f.simplices()[2].value - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_radius() {
        let c = sample_trial_cloud(10.0, 2, 3, 0).unwrap();
        assert!(build_cech_filtration(&c, 0.125, 2).is_err());
        assert!(build_cech_filtration(&c, -0.1, 2).is_err());
        assert!(build_cech_filtration(&c, 0.1, 3).is_err());
    }

    #[test]
    fn delaunay_filtration_is_a_subcomplex() {
        let c = sample_trial_cloud(300.0, 2, 4, 1).unwrap();
        let dt = periodic_delaunay(&c).unwrap();
        let full = build_cech_filtration(&c, 0.07, 2).unwrap();
        let sub = build_delaunay_cech_filtration(&c, &dt, 0.07).unwrap();
        for s in sub.simplices() {
            let j = full.index_of(&s.vertices).expect("Delaunay simplex missing from Čech complex");
            assert_eq!(full.simplices()[j].value, s.value);
        }
        for i in 0..sub.len() {
            sub.boundary(i).unwrap();
        }
    }
}
