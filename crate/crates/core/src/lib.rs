//! Spectra of the Dirichlet string `−y'' = λρy` on `[0, 1]` whose weight `ρ`
//! is the derivative of a self-similar step function of zero spectral order.
//!
//! * [`selfsim`]: similarity parameters, the step function `P` and its atoms.
//! * [`spectra`]: the exact finite pencil of a truncated weight, inertia,
//!   counting function, eigenvalues and two independent oracles.
//! * [`theory`]: finite-dimensional checks of the index identities behind the
//!   geometric asymptotics.
//! * [`asympt`]: extraction of the asymptotic constants and table reproduction.
//! * [`cli`]: the command-line front end.
//!
//! Parameter handling, meshes and inertia are generic over [`Scalar`], so they
//! run in exact rational arithmetic as well as in floating point.

pub mod asympt;
pub mod cli;
pub mod config;
pub mod linalg;
pub mod scalar;
pub mod selfsim;
pub mod spectra;
pub mod theory;

pub use num_rational::BigRational;
pub use scalar::{Real, Scalar};

pub type Params = selfsim::SelfSimilarParams<f64>;
pub type ExactParams = selfsim::SelfSimilarParams<BigRational>;
pub type Measure = selfsim::JumpMeasure<f64>;
pub type ExactMeasure = selfsim::JumpMeasure<BigRational>;
pub type System = spectra::DiscreteSystem<f64>;
pub type ExactSystem = spectra::DiscreteSystem<BigRational>;
pub type Eigenvalues = spectra::EigenSequence<f64>;
