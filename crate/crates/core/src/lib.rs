//! Max κ-cut on inhomogeneous sparse random graphs and the multi-species
//! Potts Parisi functional that predicts it.
//!
//! The pipeline: a [`kernel::Kernel`] sets edge probabilities for
//! [`graph::sample_graph`]; [`cut`] solves or approximates Max κ-cut; the
//! [`spinglass`] module holds the Gaussian Potts model that the cut problem
//! reduces to; [`parisi`] evaluates and minimizes its variational free
//! energy and assembles the prediction; [`rpc`] samples Ruelle cascades as an
//! independent Monte Carlo check of the recursion. [`cli`] runs all of it from
//! JSON configs.

pub mod cli;
pub mod cut;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod parisi;
pub mod quadrature;
pub mod rng;
pub mod rpc;
pub mod species;
pub mod spinglass;
pub mod stats;

pub use error::{Error, Result};
