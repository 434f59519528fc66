//! Exact computations in the tropical vertex group.
//!
//! * [`series`] and [`lattice`]: exact truncated series in lattice monomials,
//!   a deformation parameter `t` and square-zero markers.
//! * [`lie`]: the Lie algebra of log derivations and the automorphisms it
//!   exponentiates to.
//! * [`scattering`]: walls, diagrams, path-ordered products, consistency
//!   certificates and order-by-order completion.
//! * [`tropical`]: toric fans, tropical disks, broken lines and the
//!   perturbed superpotential with its wall-crossing check.
//! * [`mctrees`]: a leading-order sum-over-trees solver whose output is a
//!   scattering diagram comparable with the completion.
//! * [`format`]: text interchange formats for diagrams and fans.

pub mod error;
pub mod format;
pub mod lattice;
pub mod lie;
pub mod mctrees;
pub mod par;
pub mod scattering;
pub mod series;
pub mod tropical;

pub use error::{Error, Result};
pub use lattice::{pair, primitive_part, DualVec, LatticeVec, Point};
pub use lie::{Automorphism, LieElement, LieTerm};
pub use scattering::{Align, ConsistencyCertificate, ScatteringDiagram, Wall, WallKind};
pub use series::{Markers, Monomial, TruncatedSeries};

/// Exact rational coefficients and coordinates.
pub type Rational = num_rational::BigRational;
