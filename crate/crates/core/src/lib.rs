//! Regularized point-singularity fields.
//!
//! The electric monopole and magnetic dipole of a classical point electron are
//! embedded as smooth two-parameter families, with a cutoff radius `a` and a
//! regularization width `eps` obeying `eps << a`. The crate evaluates the
//! nearly-singular radial integrals those families produce and compares them
//! with their closed-form leading asymptotics: self-energies, radial
//! self-force, hidden momentum and spin.
//!
//! Layout:
//!
//! * [`regularizers`] kernels, normalization and moments `M[p,n]`
//! * [`embedding`] Dirac/Heaviside embeddings and the singular term families
//! * [`fields`] Coulomb and dipole field profiles assembled from those terms
//! * [`quadrature`] peak-split radial quadrature, sphere grids, asymptotic fits
//! * [`observables`] the radial integrals `M_n`, `R_n`, weighted delta squares
//!   and the integration-by-parts identities
//! * [`electron`] physical observables and the comparison report
//! * [`report`] CSV/JSON row serialization

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod electron;
pub mod embedding;
pub mod error;
pub mod exec;
pub mod fields;
pub mod observables;
pub mod quadrature;
pub mod regularizers;
pub mod report;

pub use error::{Error, Result};
pub use nalgebra::Vector3;
