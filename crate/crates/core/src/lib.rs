//! Contextual black-box optimization with CMA-ES style search distributions.
//!
//! The crate implements contextual CMA-ES (an upper-level Gaussian policy
//! `N(Wᵀφ(s), σ²Σ)` over parameter vectors, conditioned on a context `s`),
//! two extensions of it — an active covariance update that also exploits the
//! worst samples of a generation, and a ranking-SVM surrogate that fills each
//! generation with virtual samples — together with a contextual benchmark
//! suite, a 2D viapoint environment based on dynamical movement primitives,
//! and a seeded experiment harness that writes learning curves as CSV.

pub mod dmp_env;
pub mod error;
pub mod features;
pub mod harness;
pub mod objectives;
pub mod optimizer;
pub mod surrogate;

pub use error::{Error, Result};
pub use features::FeatureMap;
pub use objectives::{BaseFunction, BaseFunctionKind, ContextualObjective};
pub use optimizer::{
    BaselineModel, GenerationBatch, Hyperparameters, RecombinationWeights, SearchDistribution,
};
pub use surrogate::{Archive, RankingModel, SurrogateConfig};

/// A context vector: the per-episode task descriptor observed by the learner.
pub type Context = nalgebra::DVector<f64>;
