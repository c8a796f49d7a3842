//! Gaussian quantum discord of two-mode squeezed thermal states from
//! dual-homodyne data.
//!
//! * [`model`]: state family, discord closed forms, quadrature variances and
//!   the physical `(r, γ, η) → (N_s, N_t)` map.
//! * [`fisher`]: quantum and homodyne Fisher information, reparametrisation
//!   to `{D, γ}` and Cramér–Rao bounds on the discord.
//! * [`homodyne`]: seeded synthetic datasets and their CSV/JSON file format.
//! * [`estimation`]: inversion (Monte Carlo) and block-wise Bayesian estimators.
//! * [`sweep`] and [`cli`]: the command-line runner and its output tables.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod homodyne;
pub mod model;
pub mod numdiff;
pub mod rng;
pub mod schema;
pub mod sweep;

pub use error::{Error, Result};
pub use estimation::{EstimateRecord, Method};
pub use fisher::{CrbResult, InfoKind, InfoMatrix2, Jacobian2};
pub use homodyne::{DatasetMeta, HomodyneDataset};
pub use model::{CovMatrix2Mode, PhysicalParams, StsParams, VacuumUnit};
