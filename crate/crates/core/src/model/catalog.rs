//! Built-in test functions.
//!
//! Every built-in except `constant`/`zero` acts componentwise on `x`, so
//! `q = d`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cutoff::psi_with_derivatives;
use super::function::{Derivatives, FunctionMeta, Kernel, Parity, TestFunction};
use crate::error::{Error, Result};

pub const CATALOG_NAMES: &[&str] = &[
    "power_abs",
    "power_signed",
    "identity",
    "quad",
    "quartic",
    "weighted",
    "cutoff",
    "constant",
    "zero",
];

/// Serializable reference to a catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<FunctionSpec>>,
}

impl FunctionSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }
}

/// Resolves a catalog reference for state dimension `d`.
pub fn lookup(spec: &FunctionSpec, d: usize) -> Result<TestFunction> {
    let need = |v: Option<f64>, p: &str| {
        v.ok_or_else(|| Error::InvalidFunction(format!("{} requires parameter `{p}`", spec.name)))
    };
    match spec.name.as_str() {
        "power_abs" => power_abs(d, need(spec.r, "r")?),
        "power_signed" => power_signed(
            d,
            spec.k.ok_or_else(|| {
                Error::InvalidFunction("power_signed requires parameter `k`".into())
            })?,
        ),
        "identity" => identity(d),
        "quad" => quad(d),
        "quartic" => quartic(d),
        "weighted" => weighted(d, need(spec.r, "r")?),
        "cutoff" => {
            let inner = spec
                .inner
                .as_ref()
                .ok_or_else(|| Error::InvalidFunction("cutoff requires `inner`".into()))?;
            cutoff(&lookup(inner, d)?, need(spec.eps, "eps")?)
        }
        "constant" => constant(d, need(spec.value, "value")?),
        "zero" => zero(d),
        other => Err(Error::UnknownFunction {
            name: other.to_string(),
            known: CATALOG_NAMES.join(", "),
        }),
    }
}

/// A representative instance of every catalog family.
pub fn build_catalog(d: usize) -> Result<Vec<TestFunction>> {
    let quad = quad(d)?;
    Ok(vec![
        power_abs(d, 1.0)?,
        power_abs(d, 2.0)?,
        power_abs(d, 3.0)?,
        power_abs(d, 4.5)?,
        identity(d)?,
        power_signed(d, 3)?,
        power_signed(d, 5)?,
        quad.clone(),
        quartic(d)?,
        weighted(d, 2.0)?,
        weighted(d, 4.0)?,
        cutoff(&quad, 1.0)?,
        constant(d, 1.0)?,
        zero(d)?,
    ])
}

struct PowerAbs {
    r: f64,
}

impl PowerAbs {
    fn d1(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            self.r * x.abs().powf(self.r - 1.0) * x.signum()
        }
    }

    fn d2(&self, x: f64) -> f64 {
        if self.r == 2.0 {
            2.0
        } else if x == 0.0 {
            0.0
        } else {
            self.r * (self.r - 1.0) * x.abs().powf(self.r - 2.0)
        }
    }
}

impl Kernel for PowerAbs {
    fn eval(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.abs().powf(self.r);
        }
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives {
            grad_x: self.r > 1.0,
            grad_z: true,
            hess_x: self.r >= 2.0,
        }
    }

    fn grad_x(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        diag(x.len(), out, |j| self.d1(x[j]));
    }

    fn grad_z(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hess_x(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        diag_hess(x.len(), out, |j| self.d2(x[j]));
    }
}

struct PowerSigned {
    k: i32,
}

impl Kernel for PowerSigned {
    fn eval(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.powi(self.k);
        }
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::ALL
    }

    fn grad_x(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        let k = self.k;
        diag(x.len(), out, |j| k as f64 * x[j].powi(k - 1));
    }

    fn grad_z(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hess_x(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
        let k = self.k;
        diag_hess(x.len(), out, |j| {
            if k < 2 {
                0.0
            } else {
                (k * (k - 1)) as f64 * x[j].powi(k - 2)
            }
        });
    }
}

/// `g(t,z)·|x_j|^r` with `g(t,z) = (1+t)/(1+‖z‖²)`.
struct Weighted {
    base: PowerAbs,
}

fn weight(t: f64, z: &[f64]) -> f64 {
    (1.0 + t) / (1.0 + z.iter().map(|v| v * v).sum::<f64>())
}

impl Kernel for Weighted {
    fn eval(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let g = weight(t, z);
        for (o, v) in out.iter_mut().zip(x) {
            *o = g * v.abs().powf(self.base.r);
        }
    }

    fn derivatives(&self) -> Derivatives {
        self.base.derivatives()
    }

    fn grad_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let g = weight(t, z);
        diag(x.len(), out, |j| g * self.base.d1(x[j]));
    }

    fn grad_z(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let s = 1.0 + z.iter().map(|v| v * v).sum::<f64>();
        for j in 0..d {
            let fx = x[j].abs().powf(self.base.r);
            for k in 0..d {
                out[j * d + k] = -(1.0 + t) * 2.0 * z[k] / (s * s) * fx;
            }
        }
    }

    fn hess_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let g = weight(t, z);
        diag_hess(x.len(), out, |j| g * self.base.d2(x[j]));
    }
}

/// `f(t,z,x)·Ψ_ε(x)` with `Ψ_ε(x) = Π_j ψ(x_j/ε)`.
struct Cutoff {
    inner: TestFunction,
    eps: f64,
}

impl Cutoff {
    /// Returns `(Ψ, ∇Ψ, ∇²Ψ)` at `x`.
    fn weights(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let d = x.len();
        let parts: Vec<(f64, f64, f64)> = x
            .iter()
            .map(|v| {
                let (p, p1, p2) = psi_with_derivatives(v / self.eps);
                (p, p1 / self.eps, p2 / (self.eps * self.eps))
            })
            .collect();
        let prod_except = |skip: &[usize]| -> f64 {
            parts
                .iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, p)| p.0)
                .product()
        };
        let value = prod_except(&[]);
        let grad: Vec<f64> = (0..d).map(|k| parts[k].1 * prod_except(&[k])).collect();
        let mut hess = vec![0.0; d * d];
        for k in 0..d {
            for l in 0..d {
                hess[k * d + l] = if k == l {
                    parts[k].2 * prod_except(&[k])
                } else {
                    parts[k].1 * parts[l].1 * prod_except(&[k, l])
                };
            }
        }
        (value, grad, hess)
    }
}

impl Kernel for Cutoff {
    fn eval(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let w: f64 = x.iter().map(|v| psi_with_derivatives(v / self.eps).0).product();
        if w == 0.0 {
            out.fill(0.0);
            return;
        }
        self.inner.eval(t, z, x, out);
        for o in out.iter_mut() {
            *o *= w;
        }
    }

    fn derivatives(&self) -> Derivatives {
        let inner = self.inner.derivatives();
        Derivatives {
            grad_x: inner.grad_x,
            grad_z: inner.grad_z,
            hess_x: inner.grad_x && inner.hess_x,
        }
    }

    fn grad_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let (d, q) = (x.len(), self.inner.q());
        let (w, dw, _) = self.weights(x);
        let f = self.inner.eval_vec(t, z, x);
        self.inner.kernel().grad_x(t, z, x, out);
        for j in 0..q {
            for k in 0..d {
                out[j * d + k] = out[j * d + k] * w + f[j] * dw[k];
            }
        }
    }

    fn grad_z(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let (w, _, _) = self.weights(x);
        self.inner.kernel().grad_z(t, z, x, out);
        for o in out.iter_mut() {
            *o *= w;
        }
    }

    fn hess_x(&self, t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
        let (d, q) = (x.len(), self.inner.q());
        let (w, dw, ddw) = self.weights(x);
        let f = self.inner.eval_vec(t, z, x);
        let mut g = vec![0.0; q * d];
        self.inner.kernel().grad_x(t, z, x, &mut g);
        self.inner.kernel().hess_x(t, z, x, out);
        for j in 0..q {
            for k in 0..d {
                for l in 0..d {
                    let idx = (j * d + k) * d + l;
                    out[idx] = out[idx] * w
                        + g[j * d + k] * dw[l]
                        + g[j * d + l] * dw[k]
                        + f[j] * ddw[k * d + l];
                }
            }
        }
    }
}

struct Constant {
    value: f64,
}

impl Kernel for Constant {
    fn eval(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(self.value);
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::ALL
    }

    fn grad_x(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_z(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hess_x(&self, _t: f64, _z: &[f64], _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

fn diag(d: usize, out: &mut [f64], entry: impl Fn(usize) -> f64) {
    out.fill(0.0);
    for j in 0..d {
        out[j * d + j] = entry(j);
    }
}

fn diag_hess(d: usize, out: &mut [f64], entry: impl Fn(usize) -> f64) {
    out.fill(0.0);
    for j in 0..d {
        out[(j * d + j) * d + j] = entry(j);
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidFunction("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

/// `|x_j|^r`, `r > 0`.
pub fn power_abs(d: usize, r: f64) -> Result<TestFunction> {
    check_dim(d)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidFunction(format!("power_abs: r must be positive, got {r}")));
    }
    let meta = FunctionMeta {
        parity: vec![Parity::Even; d],
        growth: r,
        origin_order: r,
        time_holder: None,
        depends_on_z: false,
        equicontinuous_x: true,
        satisfies_k: true,
        // second derivative r(r-1)|x|^{r-2} must be o(|x|)
        satisfies_m1: r > 3.0,
        satisfies_m2: r > 1.0,
        satisfies_m2prime: false,
    };
    TestFunction::new(format!("power_abs({r})"), d, d, meta, Arc::new(PowerAbs { r }))
}

/// `x_j^k`, `k ≥ 1`.
pub fn power_signed(d: usize, k: u32) -> Result<TestFunction> {
    check_dim(d)?;
    if k == 0 || k > 64 {
        return Err(Error::InvalidFunction(format!(
            "power_signed: k must be in 1..=64, got {k}"
        )));
    }
    let parity = if k.is_multiple_of(2) { Parity::Even } else { Parity::Odd };
    let meta = FunctionMeta {
        parity: vec![parity; d],
        growth: k as f64,
        origin_order: k as f64,
        time_holder: None,
        depends_on_z: false,
        equicontinuous_x: true,
        satisfies_k: true,
        satisfies_m1: k >= 4,
        satisfies_m2: true,
        satisfies_m2prime: false,
    };
    TestFunction::new(
        format!("power_signed({k})"),
        d,
        d,
        meta,
        Arc::new(PowerSigned { k: k as i32 }),
    )
}

fn renamed(f: TestFunction, name: &str) -> Result<TestFunction> {
    TestFunction::new(name, f.d(), f.q(), f.meta().clone(), f.kernel().clone())
}

pub fn identity(d: usize) -> Result<TestFunction> {
    renamed(power_signed(d, 1)?, "identity")
}

pub fn quad(d: usize) -> Result<TestFunction> {
    renamed(power_signed(d, 2)?, "quad")
}

pub fn quartic(d: usize) -> Result<TestFunction> {
    renamed(power_signed(d, 4)?, "quartic")
}

/// `(1+t)/(1+‖z‖²)·|x_j|^r`.
pub fn weighted(d: usize, r: f64) -> Result<TestFunction> {
    check_dim(d)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidFunction(format!("weighted: r must be positive, got {r}")));
    }
    let meta = FunctionMeta {
        parity: vec![Parity::Even; d],
        growth: r,
        origin_order: r,
        time_holder: Some(1.0),
        depends_on_z: true,
        equicontinuous_x: true,
        satisfies_k: true,
        // mixed x–z second derivative needs r > 2, pure x one needs r > 3
        satisfies_m1: r > 3.0,
        satisfies_m2: r > 1.0,
        satisfies_m2prime: false,
    };
    TestFunction::new(
        format!("weighted({r})"),
        d,
        d,
        meta,
        Arc::new(Weighted {
            base: PowerAbs { r },
        }),
    )
}

/// `f·Ψ_ε`: equal to `f` when every `|x_j| ≤ ε`, zero once some `|x_j| ≥ 2ε`.
pub fn cutoff(f: &TestFunction, eps: f64) -> Result<TestFunction> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidFunction(format!("cutoff: eps must be positive, got {eps}")));
    }
    let inner = f.meta();
    let meta = FunctionMeta {
        parity: inner.parity.clone(),
        growth: 0.0,
        origin_order: inner.origin_order,
        time_holder: inner.time_holder,
        depends_on_z: inner.depends_on_z,
        equicontinuous_x: inner.equicontinuous_x,
        satisfies_k: inner.satisfies_k,
        satisfies_m1: inner.satisfies_m1,
        satisfies_m2: inner.satisfies_m2,
        // compact support in x bounds f and ∇_x f
        satisfies_m2prime: inner.satisfies_m2,
    };
    TestFunction::new(
        format!("cutoff({}, {eps})", f.name()),
        f.d(),
        f.q(),
        meta,
        Arc::new(Cutoff {
            inner: f.clone(),
            eps,
        }),
    )
}

/// `f ≡ c` with `q = 1`.
pub fn constant(d: usize, value: f64) -> Result<TestFunction> {
    check_dim(d)?;
    if !value.is_finite() {
        return Err(Error::InvalidFunction("constant: value must be finite".into()));
    }
    let is_zero = value == 0.0;
    let meta = FunctionMeta {
        parity: vec![Parity::Even],
        growth: 0.0,
        origin_order: if is_zero { f64::INFINITY } else { 0.0 },
        time_holder: None,
        depends_on_z: false,
        equicontinuous_x: true,
        satisfies_k: true,
        satisfies_m1: is_zero,
        satisfies_m2: true,
        satisfies_m2prime: true,
    };
    let name = if is_zero {
        "zero".to_string()
    } else {
        format!("constant({value})")
    };
    TestFunction::new(name, d, 1, meta, Arc::new(Constant { value }))
}

pub fn zero(d: usize) -> Result<TestFunction> {
    constant(d, 0.0)
}
