//! Levy trees, admissible families of branching mechanisms and the
//! pruning processes they generate.

pub mod error;
pub mod family;
pub mod laws;
pub mod mechanism;
pub mod numerics;
pub mod prune;
pub mod real;
pub mod rng;
pub mod sampler;
pub mod tree;

pub use error::{Error, Result};
pub use real::Real;

pub type Mechanism = mechanism::Mechanism<f64>;
pub type Primitive = mechanism::Primitive<f64>;
pub type AdmissibleFamily = family::AdmissibleFamily<f64>;
pub type FamilySpec = family::FamilySpec<f64>;
pub type FiniteTree = tree::FiniteTree<f64>;
pub type GwScheme = sampler::GwScheme<f64>;
pub type MarkedTree = prune::MarkedTree<f64>;
