//! Discretized functionals of Itô semimartingales with jumps.
//!
//! The crate simulates jump-diffusions together with their volatility,
//! evaluates the sums `V^n(f)` and `V'^n(f)` of a test function over the
//! increments of a regular grid, computes the objects these sums converge
//! to (jump sums, Itô-type limits, Gaussian `ρ`-integrals, the conditional
//! variance and limit processes of the associated central limit theorems)
//! and checks the convergence claims by Monte Carlo.
//!
//! Module map:
//!
//! * [`model`]: model description, test functions and their catalog,
//!   hypothesis applicability.
//! * [`simulate`]: Euler simulation on a grid augmented with exact jump
//!   times, nested-grid subsampling.
//! * [`functionals`]: `V^n`, `V'^n` and the Gaussian proxy.
//! * [`limits`]: quadrature, `ρ`-integrals, `D(f)`, `C(f)`, `a`, `w(1)`,
//!   `w(2)` and samplers for the limit processes `F` and `L(f)`.
//! * [`verify`]: law-of-large-numbers rate studies, CLT campaigns and the
//!   Kolmogorov–Smirnov test.
//! * [`config`] and [`run`]: the experiment file and the pipelines behind
//!   the `semimart` binary.

pub mod config;
pub mod error;
pub mod functionals;
pub mod limits;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod run;
pub mod simulate;
pub mod verify;

mod sum;

pub use error::{Error, Result};
pub use functionals::{gaussian_proxy, v_n, v_prime_n, FunctionalSeries};
pub use limits::{
    a_process, c_f, d_f_ito, d_f_jump, rho_integral, rho_sigma, simulate_f, simulate_l,
    w_processes, FLimitDraw, FSampler, LMode, LSampler, QuadratureRule,
};
pub use model::{
    build_catalog, check_applicability, ApplicabilityReport, FunctionMeta, FunctionSpec,
    HypothesisFlags, JumpLaw, JumpSpec, ModelSpec, Parity, TestFunction, Verdict, VolSpec,
};
pub use simulate::{simulate_path, subsample, JumpEvent, PathRecord, TimeGrid};
pub use verify::{ks_test, verify_clt, verify_lln, CltCampaign, CltRecord, LlnCampaign, RateReport};
