//! Computational geometry of strongly convex sets.
//!
//! A set is *r-convex* when, together with any two of its points, it contains
//! the intersection of all closed balls of radius `r` through those points
//! (the *lens* of the pair). This crate turns that definition and its
//! classical characterizations into executable algorithms:
//!
//! * lens and short-arc constructions in the plane ([`lens`]);
//! * bodies given as convex polygons, intersections of congruent disks,
//!   occupancy grids or membership predicates ([`bodies`]);
//! * numerical estimation of the modulus of convexity δ_Ω(ε), its directional
//!   variant, and the limit δ_Ω(ε)/ε² whose 1/(8r) threshold characterizes
//!   r-convexity ([`modulus`]);
//! * r-hulls of point sets and r-convexity certification ([`rconvex`]);
//! * deliberately simple brute-force reference implementations used to
//!   validate everything above at desk scale ([`oracle`]);
//! * a named verification suite exercising the characterization theorems on
//!   fixtures ([`verify`]).
//!
//! Exact boundary constructions are two-dimensional; higher dimensions are
//! supported through membership predicates and sampling.

pub mod bodies;
pub mod geom;
pub mod lens;
pub mod minball;
pub mod modulus;
pub mod oracle;
pub mod rconvex;
pub mod rng;
pub mod svg;
pub mod verify;

mod error;

pub use bodies::Body;
pub use error::{Error, Result};
pub use geom::{Ball, Point, Tolerance, UnitVector, Vec2};
pub use oracle::SampleConfig;

/// Builds a rayon thread pool with `threads` workers (0 = library default).
///
/// All parallel reductions in this crate are order-independent, so results
/// are byte-identical for any worker count; the pool only affects wall time.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Construction(format!("thread pool: {e}")))
}
