//! Morse critical faces of the distance function over homogeneous Poisson
//! processes on the flat torus `T^d = R^d / Z^d`.
//!
//! The crate detects critical `k`-faces inside a radius window, signs them
//! as positive or negative through Čech persistence over `Z/2`, and runs
//! Monte Carlo experiments that compare the resulting counts and point
//! processes against their exact finite-`n` means and their limits above
//! the homological-connectivity threshold.
//!
//! Module map:
//!
//! * [`torus`]: periodic metric, lifting into `R^d`, grid neighbor search.
//! * [`sampling`]: counter-based random streams and Poisson sampling.
//! * [`geometry`]: circumspheres, barycentric tests, minimum enclosing balls.
//! * [`detect`]: critical-face enumeration (grid accelerated and brute force).
//! * [`delaunay`]: periodic planar Delaunay triangulation used to shrink
//!   complexes in `d = 2`.
//! * [`filtration`], [`persistence`], [`mst`]: Čech filtrations, boundary
//!   reduction, face signs, Betti numbers, minimum spanning trees.
//! * [`constants`]: `ω_d`, centering schedules, `r_n(u)`, `b_{k,n}`, `D_k`.
//! * [`experiment`]: trials, aggregation, exact means, theory comparison.
//! * [`verify`]: invariant checks shared by the test suites and `selftest`.
//! * [`io`]: configuration files and result serialization.

pub mod constants;
pub mod delaunay;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod filtration;
pub mod geometry;
pub mod io;
pub(crate) mod linalg;
pub mod mst;
pub mod parallel;
pub mod persistence;
pub mod quadrature;
pub mod sampling;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
