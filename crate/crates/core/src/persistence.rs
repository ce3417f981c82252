//! Persistence pairing over `Z/2` by left-to-right column reduction, and
//! positive/negative classification of critical faces.

use crate::detect::{CriticalFace, Sign};
use crate::error::{Error, Result};
use crate::filtration::Filtration;

const NO_OWNER: u32 = u32::MAX;

/// Whether a simplex creates or destroys a homology class when it enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Creator,
    Destroyer,
}

/// A persistence interval `[birth, death)`; `death = None` is essential.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    pub death: Option<f64>,
}

/// Result of reducing the boundary matrix of a filtration.
#[derive(Debug, Clone)]
pub struct PersistencePairing {
    roles: Vec<Role>,
    partner: Vec<u32>,
    values: Vec<f64>,
    dims: Vec<u8>,
    max_dim: usize,
}

impl PersistencePairing {
    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    /// The simplex paired with `i`, if any.
    pub fn partner(&self, i: usize) -> Option<usize> {
        (self.partner[i] != NO_OWNER).then_some(self.partner[i] as usize)
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Finite and essential intervals of every dimension, ordered by creator position.
    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.len())
            .filter(|&i| self.roles[i] == Role::Creator)
            .map(|i| Interval {
                dim: self.dims[i] as usize,
                birth: self.values[i],
                death: self.partner(i).map(|j| self.values[j]),
            })
            .collect()
    }

    /// `(#creators of dim j, #destroyers of dim j)` among simplices with value `<= r`.
    pub fn role_counts(&self, r: f64) -> Vec<(usize, usize)> {
        let mut c = vec![(0, 0); self.max_dim + 1];
        for i in 0..self.len() {
            if self.values[i] <= r {
                let d = self.dims[i] as usize;
                match self.roles[i] {
                    Role::Creator => c[d].0 += 1,
                    Role::Destroyer => c[d].1 += 1,
                }
            }
        }
        c
    }
}

fn xor_into(col: &mut Vec<u32>, other: &[u32], buf: &mut Vec<u32>) {
    buf.clear();
    let (mut i, mut j) = (0, 0);
    while i < col.len() && j < other.len() {
        match col[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                buf.push(col[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                buf.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    buf.extend_from_slice(&col[i..]);
    buf.extend_from_slice(&other[j..]);
    std::mem::swap(col, buf);
}

/// Standard column reduction of the `Z/2` boundary matrix.
pub fn reduce_boundary_matrix(f: &Filtration) -> Result<PersistencePairing> {
    let n = f.len();
    let mut owner = vec![NO_OWNER; n];
    let mut partner = vec![NO_OWNER; n];
    let mut roles = vec![Role::Creator; n];
    let mut reduced: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for j in 0..n {
        let mut col = f.boundary(j)?;
        while let Some(&low) = col.last() {
            let o = owner[low as usize];
            if o == NO_OWNER {
                break;
            }
            xor_into(&mut col, &reduced[o as usize], &mut buf);
        }
        if let Some(&low) = col.last() {
            owner[low as usize] = j as u32;
            partner[low as usize] = j as u32;
            partner[j] = low;
            roles[j] = Role::Destroyer;
        }
        reduced.push(col);
    }
    Ok(PersistencePairing {
        roles,
        partner,
        values: f.simplices().iter().map(|s| s.value).collect(),
        dims: f.simplices().iter().map(|s| s.dim() as u8).collect(),
        max_dim: f.max_dim(),
    })
}

/// Betti numbers `beta_0..=beta_{max_dim}` of the sublevel complex at radius `r`.
pub fn betti_profile(p: &PersistencePairing, r: f64) -> Vec<usize> {
    let counts = p.role_counts(r);
    (0..=p.max_dim)
        .map(|j| {
            let destroyed = counts.get(j + 1).map_or(0, |c| c.1);
            counts[j].0 - destroyed
        })
        .collect()
}

/// Labels each critical face positive (creator) or negative (destroyer).
///
/// Fails if a face is absent from the filtration or its value disagrees with
/// the filtration value beyond `1e-9` relative.
pub fn classify_faces(faces: &mut [CriticalFace], f: &Filtration, p: &PersistencePairing) -> Result<()> {
    for face in faces {
        let i = f.index_of(&face.vertices).ok_or_else(|| {
            Error::Consistency(format!("critical face {:?} not in filtration", face.vertices))
        })?;
        let v = f.simplices()[i].value;
        if (v - face.value).abs() > 1e-9 * face.value.abs().max(v.abs()) {
            return Err(Error::Consistency(format!(
                "critical face {:?}: filtration value {v} vs critical value {}",
                face.vertices, face.value
            )));
        }
        face.sign = match p.role(i) {
            Role::Creator => Sign::Positive,
            Role::Destroyer => Sign::Negative,
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{build_cech_filtration, Simplex};
    use crate::sampling::PointCloud;

    fn simplex(v: &[u32], value: f64) -> Simplex {
        Simplex {
            vertices: v.to_vec(),
            value,
        }
    }

    #[test]
    fn hollow_triangle_has_one_loop() {
        let f = Filtration::from_simplices(
            vec![
                simplex(&[0], 0.0),
                simplex(&[1], 0.0),
                simplex(&[2], 0.0),
                simplex(&[0, 1], 1.0),
                simplex(&[1, 2], 2.0),
                simplex(&[0, 2], 3.0),
                simplex(&[0, 1, 2], 4.0),
            ],
            2,
        )
        .unwrap();
        let p = reduce_boundary_matrix(&f).unwrap();
        assert_eq!(betti_profile(&p, 0.0), vec![3, 0, 0]);
        assert_eq!(betti_profile(&p, 2.0), vec![1, 0, 0]);
        assert_eq!(betti_profile(&p, 3.0), vec![1, 1, 0]);
        assert_eq!(betti_profile(&p, 4.0), vec![1, 0, 0]);
        let iv = p.intervals();
        assert_eq!(iv.iter().filter(|i| i.death.is_none()).count(), 1);
        assert!(iv.contains(&Interval { dim: 1, birth: 3.0, death: Some(4.0) }));
    }

    #[test]
    fn missing_face_is_reported() {
        let f = Filtration::from_simplices(vec![simplex(&[0], 0.0), simplex(&[0, 1], 1.0)], 1);
        assert!(matches!(f, Err(Error::Consistency(_))));
    }

    #[test]
    fn square_loop_born_and_filled() {
        // sides enter at s/2, diagonals and triangles at s/sqrt(2)
        let s = 0.04;
        let c = PointCloud::from_points(
            2,
            &[vec![0.5, 0.5], vec![0.5 + s, 0.5], vec![0.5 + s, 0.5 + s], vec![0.5, 0.5 + s]],
        )
        .unwrap();
        let f = build_cech_filtration(&c, 0.05, 2).unwrap();
        let p = reduce_boundary_matrix(&f).unwrap();
        assert_eq!(betti_profile(&p, s / 2.0 * (1.0 + 1e-9)), vec![1, 1, 0]);
        // without the tetrahedron the four triangles close up into a 2-sphere
        assert_eq!(betti_profile(&p, s / 2f64.sqrt() * (1.0 + 1e-9)), vec![1, 0, 1]);
    }
}
