//! Estimation of subpopulation weights in heterogeneous tissue from gene
//! expression ratios and Boolean-network expression profiles.
//!
//! The model is a conjugate exponential hierarchy: each gene's ratio is
//! normal around `D_iᵀβ_i + μ_i` with precision `ρ`, the latent weights
//! `β_i` are normal around the population weights `K` with precision `Λ`,
//! and `(K, Λ, ρ)` carry Normal-Wishart and Gamma priors. Three engines fit
//! it: coordinate-ascent variational Bayes ([`vb`]), a Gibbs sampler
//! ([`gibbs`]) and expectation maximization ([`em`]).

pub mod analysis;
pub mod boolnet;
pub mod em;
pub mod error;
pub mod gibbs;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod samplers;
pub mod special;
pub mod vb;

pub use error::{Error, Result};
pub use linalg::{Exec, Mat, MatBatch, VecBatch, Vector};
pub use model::{Dataset, HyperParams, ModelParams, WeightsFull};
