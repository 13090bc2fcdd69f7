use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Parity of one output component as a function of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

/// Declared properties of a test function.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionMeta {
    /// One entry per output component.
    pub parity: Vec<Parity>,
    /// Polynomial growth exponent `p` in `‖f‖ ≤ Γ φ(z) (1 + ‖x‖^p)`.
    pub growth: f64,
    /// `f = O(‖x‖^r)` as `x → 0`; `0` when `f(t,z,0) ≠ 0`, infinite for `f ≡ 0`.
    pub origin_order: f64,
    /// Hölder exponent in `t`; `None` when `f` does not depend on `t`.
    pub time_holder: Option<f64>,
    /// Whether `f` varies with its `z` argument.
    pub depends_on_z: bool,
    pub equicontinuous_x: bool,
    pub satisfies_k: bool,
    pub satisfies_m1: bool,
    pub satisfies_m2: bool,
    pub satisfies_m2prime: bool,
}

/// Which derivatives a kernel supplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Derivatives {
    pub grad_x: bool,
    pub grad_z: bool,
    pub hess_x: bool,
}

impl Derivatives {
    pub const NONE: Self = Self {
        grad_x: false,
        grad_z: false,
        hess_x: false,
    };
    pub const ALL: Self = Self {
        grad_x: true,
        grad_z: true,
        hess_x: true,
    };
}

/// Evaluation of `f(t, z, x) ∈ R^q` with `z, x ∈ R^d`.
///
/// Derivative layouts are row-major: `grad_x` and `grad_z` write `q×d`
/// (`out[j·d + k] = ∂f^j/∂x_k`), `hess_x` writes `q×d×d`. Derivative
/// methods are only called when [`Kernel::derivatives`] advertises them.
pub trait Kernel: Send + Sync {
    fn eval(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]);

    fn derivatives(&self) -> Derivatives {
        Derivatives::NONE
    }

    fn grad_x(&self, _t: f64, _z: &[f64], _x: &[f64], _out: &mut [f64]) {
        unreachable!("grad_x not provided")
    }

    fn grad_z(&self, _t: f64, _z: &[f64], _x: &[f64], _out: &mut [f64]) {
        unreachable!("grad_z not provided")
    }

    fn hess_x(&self, _t: f64, _z: &[f64], _x: &[f64], _out: &mut [f64]) {
        unreachable!("hess_x not provided")
    }
}

/// A named test function with dimensions and metadata.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    d: usize,
    q: usize,
    meta: FunctionMeta,
    kernel: Arc<dyn Kernel>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("q", &self.q)
            .field("meta", &self.meta)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        q: usize,
        meta: FunctionMeta,
        kernel: Arc<dyn Kernel>,
    ) -> Result<Self> {
        let name = name.into();
        if d == 0 || q == 0 {
            return Err(Error::InvalidFunction(format!("{name}: d and q must be positive")));
        }
        if meta.parity.len() != q {
            return Err(Error::InvalidFunction(format!(
                "{name}: parity must list {q} components"
            )));
        }
        Ok(Self {
            name,
            d,
            q,
            meta,
            kernel,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn meta(&self) -> &FunctionMeta {
        &self.meta
    }
    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }
    pub fn derivatives(&self) -> Derivatives {
        self.kernel.derivatives()
    }

    pub fn is_even(&self) -> bool {
        self.meta.parity.iter().all(|p| *p == Parity::Even)
    }

    #[inline]
    pub fn eval(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.q);
        self.kernel.eval(t, z, x, out)
    }

    pub fn eval_vec(&self, t: f64, z: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.q];
        self.eval(t, z, x, &mut out);
        out
    }

    pub fn grad_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.derivatives().grad_x {
            return Err(Error::MissingDerivative(format!("{} has no grad_x", self.name)));
        }
        self.kernel.grad_x(t, z, x, out);
        Ok(())
    }

    pub fn grad_z(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.derivatives().grad_z {
            return Err(Error::MissingDerivative(format!("{} has no grad_z", self.name)));
        }
        self.kernel.grad_z(t, z, x, out);
        Ok(())
    }

    pub fn hess_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        if !self.derivatives().hess_x {
            return Err(Error::MissingDerivative(format!("{} has no hess_x", self.name)));
        }
        self.kernel.hess_x(t, z, x, out);
        Ok(())
    }
}
