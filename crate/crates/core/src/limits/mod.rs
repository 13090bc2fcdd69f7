//! Limit objects of the laws of large numbers and central limit theorems
//! for `V^n(f)` and `V'^n(f)`.

mod gaussian;
mod jumps;
mod quadrature;

pub use gaussian::{a_process, rho_integral, rho_sigma, simulate_l, w_processes, LMode, LSampler};
pub use jumps::{c_f, d_f_ito, d_f_jump, simulate_f, FLimitDraw, FSampler};
pub use quadrature::{QuadratureRule, MAX_NODES};

pub(crate) use gaussian::{clamp_variance, MomentEngine};
