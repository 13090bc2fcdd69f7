//! Monte Carlo checks of the convergence theorems.

mod clt;
mod ks;
mod lln;

pub use clt::{verify_clt, CltCampaign, CltOutcome, CltRecord, CltSummary, Theorem};
pub use ks::{kolmogorov_survival, ks_test, KsResult, KS_MIN_SAMPLES};
pub use lln::{ols_slope, verify_lln, LlnCampaign, LlnTarget, RatePoint, RateReport};
