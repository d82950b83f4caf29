//! Spectra of random regular bipartite graphs checked against the
//! symmetrized Marchenko-Pastur limit law.
//!
//! The crate samples the Erdős–Rényi and biregular bipartite ensembles,
//! computes block spectra, evaluates the limit measure on intervals, decides
//! f-factor existence two independent ways, and runs seeded Monte-Carlo
//! experiments over all of it.

pub mod error;
pub mod experiments;
pub mod factors;
pub mod graphs;
pub mod linalg;
pub mod mplaw;
pub mod quadrature;
pub mod spectra;

pub use error::{Error, Result};
pub use graphs::{BipartiteGraph, DegreeSpec, DenseSymmetric};
pub use mplaw::{Interval, LimitLaw};
pub use spectra::{Spectrum, WindowKind, WindowPair};
