//! Toolkit for evaluating topic models the way practitioners use them:
//! as automated coders over a document collection.
//!
//! The crate trains classical LDA by collapsed Gibbs sampling, ingests
//! run bundles produced by any external model, and scores them on two
//! criteria: *stability* (total topic distance between runs under a
//! minimum-cost matching of ranked topics) and *alignment* (agreement of
//! hard topic assignments with gold document labels). Unstable run sets
//! can be combined into an ensemble model by clustering stacked topic
//! estimates and averaging within clusters.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`];
//! `f64` aliases are exported at the crate root for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

pub mod alignment;
pub mod assignment;
pub mod cluster;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod lda;
pub mod matrix;
pub mod run_io;
pub mod stability;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// Floating-point scalar used by all estimate matrices and distances.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Debug
    + Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Default-precision aliases.
pub type Matrix64 = matrix::Matrix<f64>;
pub type RunBundle64 = run_io::RunBundle<f64>;
pub type RunSet64 = run_io::RunSet<f64>;
pub type StabilityReport64 = stability::StabilityReport<f64>;
pub type AlignmentScores64 = alignment::AlignmentScores<f64>;
pub type EnsembleModel64 = ensemble::EnsembleModel<f64>;
pub type PlantedWorld64 = synth::PlantedWorld<f64>;
