//! Splitting trees with neutral mutations under the infinitely-many-alleles
//! model.
//!
//! * [`model`] holds parameters, lifespan measures and mutation mechanisms.
//! * [`analytic`] evaluates `ψ`, scale functions, expected allelic spectra,
//!   their limits and tail asymptotics, and the scales of old and large
//!   families.
//! * [`simulate`] runs exact forward simulations and extracts allelic
//!   partitions.
//! * [`stats`] aggregates replicas and runs goodness-of-fit checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod model;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    ClonalParams, Criticality, LifespanKind, LifespanMeasure, ModelParams, MutationMechanism,
    TabulatedTail,
};
