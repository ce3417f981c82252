//! Independent cross-checks between critical-face geometry, persistence and
//! graph connectivity.
//!
//! At every radius `r` checked:
//!
//! * `β_0(r) = N - #negative critical 1-faces(<= r)`, and both equal the number
//!   of components of the graph joining points at distance `<= 2r`;
//! * `β_j(r) = #positive critical j-faces(<= r) - #negative critical (j+1)-faces(<= r)`
//!   for every `j` whose Betti number the filtration determines;
//! * the negative critical 1-faces are exactly the minimum spanning forest
//!   edges of half-length `<= R`.

use rand::Rng;
use serde::Serialize;

use crate::delaunay::{detect_critical_faces_delaunay, periodic_delaunay};
use crate::detect::{detect_critical_faces, detect_critical_faces_brute_force, CriticalFace, Sign};
use crate::error::{Error, Result};
use crate::filtration::{build_cech_filtration, build_delaunay_cech_filtration, Filtration};
use crate::mst::{component_count, mst_negative_one_faces};
use crate::parallel::{map_indices, Execution};
use crate::persistence::{betti_profile, classify_faces, reduce_boundary_matrix, PersistencePairing};
use crate::sampling::{substream, PointCloud, RandomStream};
use crate::torus::SpatialGrid;

/// Relative tolerance when comparing spanning-tree half-lengths to critical values.
pub const MST_VALUE_TOL: f64 = 1e-12;
/// Absolute floor for the same comparison; coordinates in `[0,1)` carry
/// rounding of this order, which dominates for very short edges.
pub const MST_VALUE_ABS_TOL: f64 = 1e-15;

/// Summary of one successful invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseCheck {
    pub radii: Vec<f64>,
    /// `β_0..=β_top` at each radius.
    pub betti: Vec<Vec<usize>>,
    pub mst_edges: usize,
}

/// Classified critical faces of indices `1..=top` with value in `[0, r_max]`.
pub fn classified_faces(
    detect: &dyn Fn(usize, f64, f64) -> Result<Vec<CriticalFace>>,
    f: &Filtration,
    p: &PersistencePairing,
    top: usize,
    r_max: f64,
) -> Result<Vec<Vec<CriticalFace>>> {
    let mut out = vec![Vec::new()];
    for j in 1..=top {
        let mut faces = detect(j, 0.0, r_max)?;
        classify_faces(&mut faces, f, p)?;
        out.push(faces);
    }
    Ok(out)
}

fn count(faces: &[CriticalFace], sign: Sign, r: f64) -> usize {
    faces.iter().filter(|f| f.sign == sign && f.value <= r).count()
}

/// Runs every Morse/Betti identity at each radius in `radii` (all `<= r_max`).
///
/// `betti_top` is the largest `j` for which `β_j` of the truncated filtration
/// equals that of the union of balls; it must be at most `f.max_dim()`.
pub fn check_morse_invariants(
    cloud: &PointCloud,
    detect: &dyn Fn(usize, f64, f64) -> Result<Vec<CriticalFace>>,
    f: &Filtration,
    p: &PersistencePairing,
    r_max: f64,
    radii: &[f64],
    betti_top: usize,
) -> Result<MorseCheck> {
    let top = f.max_dim();
    let faces = classified_faces(detect, f, p, top, r_max)?;
    let n = cloud.len();
    let mut betti = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > r_max {
            return Err(Error::Contract(format!("check radius {r} above {r_max}")));
        }
        let b = betti_profile(p, r);
        let neg1 = if top >= 1 { count(&faces[1], Sign::Negative, r) } else { 0 };
        let components = component_count(cloud, 2.0 * r)?;
        if b[0] != n - neg1 || b[0] != components {
            return Err(Error::Consistency(format!(
                "beta_0({r}) = {} but N - negative 1-faces = {} and components = {components}",
                b[0],
                n - neg1
            )));
        }
        for j in 1..=betti_top.min(top) {
            let pos = count(&faces[j], Sign::Positive, r);
            let neg = if j < top { count(&faces[j + 1], Sign::Negative, r) } else { 0 };
            if pos < neg || b[j] != pos - neg {
                return Err(Error::Consistency(format!(
                    "beta_{j}({r}) = {} but positive {j}-faces = {pos}, negative {}-faces = {neg}",
                    b[j],
                    j + 1
                )));
            }
        }
        betti.push(b);
    }
    let mst_edges = if top >= 1 { check_mst_oracle(cloud, &faces[1], r_max)? } else { 0 };
    Ok(MorseCheck {
        radii: radii.to_vec(),
        betti,
        mst_edges,
    })
}

/// Compares the negative faces among classified critical 1-faces (window
/// `[0, r_max]`) with the spanning forest edges of half-length `<= r_max`.
/// Returns the number of edges.
pub fn check_mst_oracle(cloud: &PointCloud, one_faces: &[CriticalFace], r_max: f64) -> Result<usize> {
    let negative: Vec<&CriticalFace> = one_faces.iter().filter(|f| f.sign == Sign::Negative).collect();
    let mst = mst_negative_one_faces(cloud, r_max)?;
    if negative.len() != mst.len() {
        return Err(Error::Consistency(format!(
            "{} negative 1-faces but {} spanning-forest edges",
            negative.len(),
            mst.len()
        )));
    }
    for (a, b) in negative.iter().zip(&mst) {
        if a.vertices != b.vertices {
            return Err(Error::Consistency(format!(
                "negative 1-face {:?} vs spanning-forest edge {:?}",
                a.vertices, b.vertices
            )));
        }
        if (a.value - b.value).abs() > MST_VALUE_TOL * a.value.max(b.value) + MST_VALUE_ABS_TOL {
            return Err(Error::Consistency(format!(
                "edge {:?}: critical value {} vs half-length {}",
                a.vertices, a.value, b.value
            )));
        }
    }
    Ok(mst.len())
}

/// Grid detector against exhaustive enumeration; returns the number of faces compared.
pub fn check_detector_equivalence(cloud: &PointCloud, k: usize, r_min: f64, r_max: f64) -> Result<usize> {
    let fast = detect_critical_faces(cloud, k, r_min, r_max)?;
    let slow = detect_critical_faces_brute_force(cloud, k, r_min, r_max)?;
    if fast != slow {
        return Err(Error::Consistency(format!(
            "grid detector found {} faces, exhaustive enumeration {}",
            fast.len(),
            slow.len()
        )));
    }
    for face in &fast {
        face.revalidate(cloud)?;
    }
    Ok(fast.len())
}

/// Čech route for one cloud: detects and classifies faces of indices up to
/// `max_dim`, then runs [`check_morse_invariants`] with `β_0..β_{max_dim-1}`.
pub fn check_cloud_cech(cloud: &PointCloud, r_max: f64, max_dim: usize, radii: &[f64]) -> Result<MorseCheck> {
    let f = build_cech_filtration(cloud, r_max, max_dim)?;
    let p = reduce_boundary_matrix(&f)?;
    let detect = |k: usize, lo: f64, hi: f64| detect_critical_faces(cloud, k, lo, hi);
    check_morse_invariants(cloud, &detect, &f, &p, r_max, radii, max_dim.saturating_sub(1))
}

/// Delaunay–Čech route against the Čech route (`d = 2`): same critical faces
/// with the same signs for `k = 1, 2`, same `β_0, β_1` at `radii`.
pub fn check_backend_equivalence(cloud: &PointCloud, r_max: f64, radii: &[f64]) -> Result<usize> {
    let dt = periodic_delaunay(cloud)?;
    let grid = SpatialGrid::build(cloud.dim(), cloud.coords(), (2.0 * r_max).min(1.0))?;
    let fd = build_delaunay_cech_filtration(cloud, &dt, r_max)?;
    let pd = reduce_boundary_matrix(&fd)?;
    let fc = build_cech_filtration(cloud, r_max, 2)?;
    let pc = reduce_boundary_matrix(&fc)?;
    let del = |k: usize, lo: f64, hi: f64| detect_critical_faces_delaunay(cloud, &dt, &grid, k, lo, hi);
    let cech = |k: usize, lo: f64, hi: f64| detect_critical_faces(cloud, k, lo, hi);
    let a = classified_faces(&del, &fd, &pd, 2, r_max)?;
    let b = classified_faces(&cech, &fc, &pc, 2, r_max)?;
    if a != b {
        return Err(Error::Consistency("Delaunay and Čech routes disagree on critical faces".into()));
    }
    for &r in radii {
        let (bd, bc) = (betti_profile(&pd, r), betti_profile(&pc, r));
        if bd[..2] != bc[..2] {
            return Err(Error::Consistency(format!("Betti numbers at {r}: Delaunay {bd:?}, Čech {bc:?}")));
        }
    }
    Ok(a.iter().map(Vec::len).sum())
}

/// Outcome of one self-test suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: u64,
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn uniform_cloud(stream: &mut RandomStream, d: usize, n: usize) -> Result<PointCloud> {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| stream.random::<f64>()).collect()).collect();
    PointCloud::from_points(d, &pts)
}

fn run_suite(
    name: &str,
    cases: u64,
    exec: Execution,
    case: impl Fn(u64) -> Result<()> + Sync,
) -> SuiteOutcome {
    let failures = map_indices(exec, 0..cases, |i| case(i).err().map(|e| format!("case {i}: {e}")))
        .into_iter()
        .flatten()
        .collect();
    SuiteOutcome {
        name: name.into(),
        cases,
        failures,
    }
}

/// Brute-force-oracle suites on small random clouds, each case from
/// `substream(seed, case)`:
///
/// * grid detector vs exhaustive enumeration (`d ∈ {2,3}`, `k ∈ {1,2}`, `<= 60` points);
/// * Morse/Betti identities and the spanning-tree oracle on the Čech route;
/// * Delaunay–Čech route vs Čech route.
pub fn selftest(seed: u64, cases: u64, exec: Execution) -> Vec<SuiteOutcome> {
    vec![
        run_suite("detector_vs_enumeration", cases, exec, |i| {
            let mut s = substream(seed, i);
            let d = 2 + (i % 2) as usize;
            let k = 1 + ((i / 2) % 2) as usize;
            let n = s.random_range(k + 2..=60);
            let cloud = uniform_cloud(&mut s, d, n)?;
            check_detector_equivalence(&cloud, k, 0.0, 0.12).map(|_| ())
        }),
        run_suite("morse_betti_mst", cases, exec, |i| {
            let mut s = substream(seed ^ 0x5eed_0001, i);
            let n = s.random_range(20..=100);
            let cloud = uniform_cloud(&mut s, 2, n)?;
            check_cloud_cech(&cloud, 0.1, 2, &[0.03, 0.06, 0.1]).map(|_| ())
        }),
        run_suite("delaunay_vs_cech", cases, exec, |i| {
            let mut s = substream(seed ^ 0x5eed_0002, i);
            let n = s.random_range(60..=150);
            let cloud = uniform_cloud(&mut s, 2, n)?;
            check_backend_equivalence(&cloud, 0.1, &[0.03, 0.06, 0.1]).map(|_| ())
        }),
    ]
}
