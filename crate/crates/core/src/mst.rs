//! Union-find, connected components and the minimum spanning forest of the
//! geometric graph on the torus. Negative critical 1-faces of the Čech
//! filtration are exactly the spanning-forest edges, which makes this an
//! independent oracle for the persistence classifier.

use crate::detect::{CriticalFace, Sign};
use crate::error::Result;
use crate::sampling::PointCloud;
use crate::torus::{torus_dist2_unchecked, wrap_delta, SpatialGrid, TorusPoint};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Pairs `(i < j)` at torus distance `<= max_dist`, with their distances.
fn close_pairs(cloud: &PointCloud, max_dist: f64) -> Result<Vec<(f64, u32, u32)>> {
    let mut pairs = Vec::new();
    if cloud.len() < 2 || max_dist <= 0.0 {
        return Ok(pairs);
    }
    let grid = SpatialGrid::build(cloud.dim(), cloud.coords(), max_dist.min(0.5))?;
    let lim2 = max_dist * max_dist;
    for i in 0..cloud.len() as u32 {
        let p = cloud.point(i as usize);
        grid.for_each_candidate(p, max_dist, |j| {
            if j > i {
                let d2 = torus_dist2_unchecked(p, cloud.point(j as usize));
                if d2 <= lim2 {
                    pairs.push((d2.sqrt(), i, j));
                }
            }
        });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(pairs)
}

/// Number of connected components of the graph joining points at distance `<= threshold`.
pub fn component_count(cloud: &PointCloud, threshold: f64) -> Result<usize> {
    let mut uf = UnionFind::new(cloud.len());
    for (_, i, j) in close_pairs(cloud, threshold)? {
        uf.union(i, j);
    }
    Ok(uf.components())
}

/// Kruskal spanning-forest edges of length `<= 2r`, reported as negative
/// critical 1-faces (midpoint center, half-length value), sorted by vertex ids.
pub fn mst_negative_one_faces(cloud: &PointCloud, r: f64) -> Result<Vec<CriticalFace>> {
    let mut uf = UnionFind::new(cloud.len());
    let mut out = Vec::new();
    for (d, i, j) in close_pairs(cloud, 2.0 * r)? {
        if uf.union(i, j) {
            let (p, q) = (cloud.point(i as usize), cloud.point(j as usize));
            let mid: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| a + 0.5 * wrap_delta(a, b)).collect();
            out.push(CriticalFace {
                vertices: vec![i, j],
                index: 1,
                center: TorusPoint::wrapped(&mid),
                value: 0.5 * d,
                u: None,
                sign: Sign::Negative,
            });
        }
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    Ok(out)
}
