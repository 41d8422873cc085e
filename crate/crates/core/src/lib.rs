//! Certified numerics for a degree-six inequality on convex quadrilaterals.
//!
//! For a convex quadrilateral `z1 z2 z3 z4` with sides `a, c, d, f`,
//! diagonals `b, e` and triangle areas `A123, A124, A134, A234`, the residual
//!
//! ```text
//! E12 + E23 + E34 + E41 - E13 - E24
//! ```
//!
//! is nonnegative. This crate evaluates it along independent algebraic
//! routes ([`kernel`]), audits every identity and inequality used to rewrite
//! it, encloses it over boxes of shape parameters ([`interval`]), certifies a
//! positive lower bound on a compact shape domain ([`certifier`]), and hunts
//! for violations near the degenerate boundary ([`search`]).
//!
//! ```
//! use quadineq::geometry::{Point, Quadrilateral};
//! use quadineq::kernel::{residual, ResidualPath};
//!
//! let square = Quadrilateral::from_points([
//!     Point::new(0.0, 0.0),
//!     Point::new(1.0, 0.0),
//!     Point::new(1.0, 1.0),
//!     Point::new(0.0, 1.0),
//! ])?;
//! let m = square.metrics();
//! for path in ResidualPath::ALL {
//!     assert!((residual(&m, path) - 2.0).abs() < 1e-12);
//! }
//! # Ok::<(), quadineq::geometry::GeometryError>(())
//! ```

pub mod certifier;
pub mod geometry;
pub mod json;
pub mod interval;
pub mod kernel;
pub mod search;

/// Toolkit version embedded in every report and certificate.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The guide's chapters, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/residual.md")]
    mod residual {}
    #[doc = include_str!("../../../book/src/audit.md")]
    mod audit {}
    #[doc = include_str!("../../../book/src/intervals.md")]
    mod intervals {}
    #[doc = include_str!("../../../book/src/certification.md")]
    mod certification {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
}
