//! Exact dynamics of a single particle on a periodic tight-binding ring with
//! on-site energy defects.
//!
//! The defect-free propagator is known in closed form; a finite number of
//! defects is handled by closing the resolvent identity at the defect sites,
//! which turns the problem into locating the real roots of Chebyshev
//! polynomials and summing residues. Every quantity is also available from a
//! dense exact-diagonalization oracle for validation.

pub mod error;
pub mod homogeneous;
pub mod lattice;
pub mod multi;
pub mod oracle;
pub mod profile;
pub mod single;
pub mod spectral;
pub mod strong;

pub use error::{Error, Result};
pub use lattice::{
    cosine_weighted_sum, distance_power_sum, periodic_distance, Defect, DefectSet, LatticeSpec,
    MomentOrder, PeriodicDistance, SiteIndex,
};
