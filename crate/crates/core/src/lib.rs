//! Max-product Kantorovich neural-network operators activated by sigmoidal
//! functions, together with an Orlicz-space toolkit for measuring how fast
//! they converge.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: adaptive composite Gauss–Legendre integration and fixed
//!   composite grids used for modular integrals.
//! - [`sigmoid`]: sigmoidal activations, the induced density kernel
//!   `φ_σ(x) = ½[σ(x+1) − σ(x−1)]`, structural checks and generalized moments.
//! - [`function`]: bounded test functions on an interval plus the default corpus.
//! - [`operator`]: the max-product Kantorovich operator `K_n`.
//! - [`orlicz`]: φ-functions, modulars, the Δ₂ check and modular distances.
//! - [`kfunctional`]: K-functional upper estimates and the quantitative rate bound.
//! - [`harness`]: convergence sweeps, bound checks and report emission.

pub mod error;
pub mod function;
pub mod harness;
pub mod kfunctional;
pub mod operator;
pub mod orlicz;
pub mod quadrature;
pub mod sigmoid;

pub use error::{Error, Result};
pub use function::TestFunction;

pub use operator::{KantorovichMeans, OperatorInstance};
pub use kfunctional::{KFunctionalEstimate, RateBoundReport, SmootherCandidate};
pub use orlicz::{ModularValue, PhiFunction};

pub use quadrature::{integrate, integrate_decaying, Integral, IntegrationRequest};
pub use sigmoid::{DensityKernel, MomentReport, SigmoidalFunction};

use std::sync::Arc;

/// Shared real-valued evaluator.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
