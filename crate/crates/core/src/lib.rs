//! Budgeted influencer-portfolio optimization.
//!
//! A campaign buys a fraction `a_n` of each user's posting activity so that
//! the summed utility of the campaign-related impressions seen by every
//! viewer is maximal under a money budget. The crate provides the problem
//! model, a Frank-Wolfe solver with an exact sort-based linear oracle,
//! comparison baselines, synthetic network generation, trace ingestion and
//! a multi-platform extension.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` case.

pub mod baselines;
pub mod error;
pub mod fw;
pub mod ingest;
pub mod io;
pub mod model;
pub mod multiplatform;
pub mod netgen;
pub mod oracle;
pub mod scalar;
pub mod utility;

pub use error::{BpoError, Result};
pub use fw::{SolveReport, SolverConfig, StepRule, Termination};
pub use model::{CampaignInstance, ImpressionMatrix, ParticipationVector, Tier};
pub use multiplatform::{MpVariant, MultiPlatformInstance};
pub use oracle::{FeasibleSet, LinearOracle};
pub use scalar::Scalar;
pub use utility::UtilitySpec;

pub type Instance = model::CampaignInstance<f64>;
pub type Impressions = model::ImpressionMatrix<f64>;
pub type Participation = model::ParticipationVector<f64>;
pub type Report = fw::SolveReport<f64>;
pub type Config = fw::SolverConfig<f64>;
