use crate::constants::u_of_radius;
use crate::delaunay::{detect_critical_faces_delaunay, periodic_delaunay, PeriodicDelaunay};
use crate::detect::{detect_critical_faces, CriticalFace, Sign};
use crate::error::{Error, Result};
use crate::filtration::{build_cech_filtration, build_delaunay_cech_filtration, Filtration};
use crate::persistence::{classify_faces, reduce_boundary_matrix};
use crate::sampling::{sample_trial_cloud, PointCloud};
use crate::torus::{SpatialGrid, TorusPoint};
use crate::verify::{check_morse_invariants, MorseCheck};

use super::config::{Backend, ExperimentConfig, Window};

/// One atom of `η_{k,n}` (or of the negative `(k+1)`-face process).
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub vertices: Vec<u32>,
    pub index: usize,
    pub center: TorusPoint,
    pub u: f64,
    pub sign: Sign,
}

/// Everything one trial contributes to the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    pub points: usize,
    /// Critical `k`-faces with value in `[r_n(u0), R_n]`, by vertex ids.
    pub atoms: Vec<Atom>,
    /// Negative critical `(k+1)`-faces in the same window.
    pub minus_atoms: Vec<Atom>,
    pub morse: Option<MorseCheck>,
}

impl TrialResult {
    /// `G_{k,n}`.
    pub fn g(&self) -> u64 {
        self.atoms.len() as u64
    }

    /// `G⁺_{k,n}`.
    pub fn g_pos(&self) -> u64 {
        self.atoms.iter().filter(|a| a.sign == Sign::Positive).count() as u64
    }

    /// Negative critical `k`-faces in the window.
    pub fn g_neg_k(&self) -> u64 {
        self.atoms.iter().filter(|a| a.sign == Sign::Negative).count() as u64
    }

    /// `G⁻_{k+1,n}`.
    pub fn g_neg_next(&self) -> u64 {
        self.minus_atoms.len() as u64
    }

    /// Location-free `u`-coordinates of the negative `(k+1)`-faces.
    pub fn eta_minus(&self) -> Vec<f64> {
        self.minus_atoms.iter().map(|a| a.u).collect()
    }
}

/// Detection and filtration routes for one cloud.
pub struct TrialGeometry<'a> {
    cloud: &'a PointCloud,
    delaunay: Option<(PeriodicDelaunay, SpatialGrid)>,
}

impl<'a> TrialGeometry<'a> {
    /// Prepares `cloud` for radii up to `r_hi`. `Auto` falls back to Čech when
    /// the periodic triangulation cannot be certified.
    pub fn new(cloud: &'a PointCloud, backend: Backend, r_hi: f64) -> Result<Self> {
        let delaunay = match backend {
            Backend::Cech => None,
            Backend::Auto | Backend::DelaunayCech => match periodic_delaunay(cloud) {
                Ok(dt) => Some((dt, SpatialGrid::build(cloud.dim(), cloud.coords(), (2.0 * r_hi).min(1.0))?)),
                Err(Error::DelaunayUnavailable(_)) if backend == Backend::Auto || cloud.len() < 3 => None,
                Err(e) => return Err(e),
            },
        };
        Ok(Self { cloud, delaunay })
    }

    pub fn uses_delaunay(&self) -> bool {
        self.delaunay.is_some()
    }

    pub fn detect(&self, k: usize, r_min: f64, r_max: f64) -> Result<Vec<CriticalFace>> {
        match &self.delaunay {
            Some((dt, grid)) => detect_critical_faces_delaunay(self.cloud, dt, grid, k, r_min, r_max),
            None => detect_critical_faces(self.cloud, k, r_min, r_max),
        }
    }

    /// Filtration to `r_hi` with simplices up to `max_dim`, and the largest
    /// `j` for which its `β_j` is that of the union of balls.
    pub fn filtration(&self, r_hi: f64, max_dim: usize) -> Result<(Filtration, usize)> {
        match &self.delaunay {
            Some((dt, _)) if max_dim >= 2 => Ok((build_delaunay_cech_filtration(self.cloud, dt, r_hi)?, 2)),
            _ => Ok((build_cech_filtration(self.cloud, r_hi, max_dim)?, max_dim.saturating_sub(1))),
        }
    }
}

fn to_atoms(faces: Vec<CriticalFace>, w: &Window, d: usize) -> Vec<Atom> {
    faces
        .into_iter()
        .map(|f| Atom {
            u: u_of_radius(f.value, w.n, w.a_n, d),
            vertices: f.vertices,
            index: f.index,
            center: f.center,
            sign: f.sign,
        })
        .collect()
}

/// Samples and analyzes trial `trial_index` at window `w`.
pub fn run_trial(cfg: &ExperimentConfig, w: &Window, trial_index: u64) -> Result<TrialResult> {
    run_trial_inner(cfg, w, trial_index).map_err(|e| e.in_trial(trial_index))
}

fn run_trial_inner(cfg: &ExperimentConfig, w: &Window, trial_index: u64) -> Result<TrialResult> {
    let cloud = sample_trial_cloud(w.n, cfg.d, cfg.seed, trial_index)?;
    if cloud.is_empty() {
        return Ok(TrialResult {
            trial_index,
            points: 0,
            atoms: Vec::new(),
            minus_atoms: Vec::new(),
            morse: None,
        });
    }
    let geo = TrialGeometry::new(&cloud, cfg.resolved_backend(), w.r_hi)?;
    let mut faces = geo.detect(cfg.k, w.r_lo, w.r_hi)?;
    let mut next = if cfg.tracks_next() {
        geo.detect(cfg.k + 1, w.r_lo, w.r_hi)?
    } else {
        Vec::new()
    };
    let mut morse = None;
    if cfg.classify_signs || cfg.verify_invariants {
        let top = (cfg.k + 1).min(cfg.d);
        let (f, betti_top) = geo.filtration(w.r_hi, top)?;
        let p = reduce_boundary_matrix(&f)?;
        if cfg.classify_signs {
            classify_faces(&mut faces, &f, &p)?;
            classify_faces(&mut next, &f, &p)?;
            next.retain(|f| f.sign == Sign::Negative);
        }
        if cfg.verify_invariants {
            let radii: Vec<f64> = [w.r_zero, 0.5 * w.r_hi, w.r_hi]
                .into_iter()
                .filter(|&r| r > 0.0 && r <= w.r_hi)
                .collect();
            let detect = |j: usize, lo: f64, hi: f64| geo.detect(j, lo, hi);
            morse = Some(check_morse_invariants(&cloud, &detect, &f, &p, w.r_hi, &radii, betti_top)?);
        }
    }
    Ok(TrialResult {
        trial_index,
        points: cloud.len(),
        atoms: to_atoms(faces, w, cfg.d),
        minus_atoms: to_atoms(next, w, cfg.d),
        morse,
    })
}
