//! Two-stage technical-efficiency benchmarking for balanced panels of
//! decision-making units (DMUs).
//!
//! The first stage estimates per-DMU, per-period technical efficiency with
//! two complementary frontiers:
//!
//! - a stochastic translog output-distance function with Battese–Coelli
//!   (1992) time-decay inefficiency ([`sfa`]), and
//! - an output-oriented DEA envelope under variable or constant returns to
//!   scale ([`dea`]), solved per period with a dense simplex.
//!
//! The second stage ([`second_stage`]) explains the scores with a two-limit
//! Tobit regression (for the stochastic-frontier scores) and a Simar–Wilson
//! (2007) bootstrap truncated regression (for the DEA scores). [`synth`]
//! generates panels with known frontier and inefficiency structure for
//! estimator validation, and [`pipeline`] drives the whole flow from a
//! config file to an output bundle.
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! `f64` is what the CLI and the concrete aliases at the crate root use.

pub mod dea;
pub mod linalg;
pub mod num;
pub mod optim;
pub mod panel;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod second_stage;
pub mod sfa;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use num::Real;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Concrete double-precision aliases for the common pipeline types.
pub type Panel64 = panel::PanelDataset<f64>;
pub type DeaResult64 = dea::DeaResult<f64>;
pub type DeaScores64 = dea::DeaScores<f64>;
pub type SfaFit64 = sfa::SfaFit<f64>;
pub type TobitFit64 = second_stage::TobitFit<f64>;
pub type SimarWilsonFit64 = second_stage::SimarWilsonFit<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unbalanced panel: DMU `{dmu}` has no row for period {period}")]
    UnbalancedPanel { dmu: String, period: i32 },
    #[error("duplicate row for DMU `{dmu}`, period {period}")]
    DuplicateRow { dmu: String, period: i32 },
    #[error("`{var}` must be strictly positive (DMU `{dmu}`, period {period}: {value})")]
    NonPositiveQuantity {
        var: String,
        dmu: String,
        period: i32,
        value: f64,
    },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("period labels must be consecutive integers ({found} follows {prev})")]
    NonConsecutivePeriods { prev: i32, found: i32 },
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("price index has no entry for year {0}")]
    MissingIndexYear(i32),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("LP solver failed for DMU `{dmu}`, period {period}: {status:?}")]
    SolverFailure {
        dmu: String,
        period: i32,
        status: dea::LpStatus,
    },
    #[error("design matrix is rank-deficient (rank {rank} < {cols} columns)")]
    DegenerateDesign { rank: usize, cols: usize },
    #[error("objective is not finite at the supplied parameters")]
    NonFinite,
    #[error("optimizer failed to converge: {0}")]
    NonConvergence(String),
    #[error("all observations are censored at the same limit")]
    DegenerateCensoring,
    #[error("truncated regression requires scores strictly below 1; {0} row(s) at the bound")]
    EfficientScoreInTruncation(usize),
    #[error("not enough interior scores: have {have}, need at least {need}")]
    InsufficientInteriorScores { have: usize, need: usize },
    #[error("bootstrap degenerate: {failed} of {total} replicates failed")]
    BootstrapDegenerate { failed: usize, total: usize },
    #[error("covariate names differ between fits: {0}")]
    CovariateMismatch(String),
    #[error("rejection sampler stalled (acceptance rate below 1e-4)")]
    RejectionStall,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for validation
    /// problems, 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_)
            | Error::NonFinite
            | Error::SolverFailure { .. }
            | Error::BootstrapDegenerate { .. }
            | Error::RejectionStall => 3,
            _ => 2,
        }
    }
}

/// Returns-to-scale assumption of the DEA envelopment surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnsToScale {
    Vrs,
    Crs,
}

/// Frontier orientation. Only output orientation is implemented: inputs are
/// treated as fixed and outputs are expanded radially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Output,
}

/// Declarative choice of outputs, inputs, normalizing output, returns to
/// scale and orientation, shared by the SFA and DEA engines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontierSpec {
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    /// Output used to impose linear homogeneity in the translog design.
    pub normalizing_output: String,
    pub returns_to_scale: ReturnsToScale,
    #[serde(default)]
    pub orientation: Orientation,
}

impl FrontierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() || self.inputs.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one output and one input".into(),
            ));
        }
        if !self.outputs.contains(&self.normalizing_output) {
            return Err(Error::InvalidConfig(format!(
                "normalizing output `{}` is not among the outputs",
                self.normalizing_output
            )));
        }
        Ok(())
    }
}
