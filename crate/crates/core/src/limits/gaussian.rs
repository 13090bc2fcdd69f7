//! Limits driven by the local Gaussian law `ρ_σ`: `ρ`-integrals, the scale
//! processes `a`, `w(1)`, `w(2)` and the process `L(f)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::functionals::FunctionalSeries;
use crate::linalg::{psd_sqrt, PSD_CLAMP};
use crate::model::TestFunction;
use crate::rng::{stream, Stream};
use crate::simulate::PathRecord;
use crate::sum::CompensatedVec;

use super::QuadratureRule;

/// `ρ_σ(f)`, `ρ_σ(f fᵗ)` and `ρ'(f·Pᵗ)` at one point, where `P(u) = u`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments {
    /// `q`.
    pub mean: Vec<f64>,
    /// `q×q`, filled when requested.
    pub second: Vec<f64>,
    /// `q×m`, filled when requested.
    pub cross: Vec<f64>,
}

/// Evaluates moments of `u ↦ f(t, z, σu)` under a quadrature rule, reusing
/// the previous result when `f` ignores `(t, z)` and `σ` has not changed.
pub(crate) struct MomentEngine<'a> {
    f: &'a TestFunction,
    rule: &'a QuadratureRule,
    d: usize,
    m: usize,
    second: bool,
    cross: bool,
    reusable: bool,
    cached_sigma: Vec<f64>,
    cached: Option<Moments>,
    arg: Vec<f64>,
    val: Vec<f64>,
}

impl<'a> MomentEngine<'a> {
    pub(crate) fn new(
        f: &'a TestFunction,
        rule: &'a QuadratureRule,
        m: usize,
        second: bool,
        cross: bool,
    ) -> Result<Self> {
        if rule.dim() != m {
            return Err(Error::InvalidQuadrature(format!(
                "rule has dimension {} but the Brownian motion has m = {m}",
                rule.dim()
            )));
        }
        let meta = f.meta();
        Ok(Self {
            f,
            rule,
            d: f.d(),
            m,
            second,
            cross,
            reusable: meta.time_holder.is_none() && !meta.depends_on_z,
            cached_sigma: Vec::new(),
            cached: None,
            arg: vec![0.0; f.d()],
            val: vec![0.0; f.q()],
        })
    }

    pub(crate) fn at(&mut self, t: f64, z: &[f64], sigma: &[f64]) -> Result<&Moments> {
        if self.reusable && self.cached.is_some() && self.cached_sigma == sigma {
            return Ok(self.cached.as_ref().unwrap());
        }
        let (d, m, q) = (self.d, self.m, self.f.q());
        let mut out = Moments {
            mean: vec![0.0; q],
            second: if self.second { vec![0.0; q * q] } else { Vec::new() },
            cross: if self.cross { vec![0.0; q * m] } else { Vec::new() },
        };
        for (i, &w) in self.rule.weights().iter().enumerate() {
            let u = self.rule.node(i);
            for j in 0..d {
                self.arg[j] = (0..m).map(|k| sigma[j * m + k] * u[k]).sum();
            }
            self.f.eval(t, z, &self.arg, &mut self.val);
            for a in 0..q {
                let wa = w * self.val[a];
                out.mean[a] += wa;
                if self.second {
                    for b in 0..q {
                        out.second[a * q + b] += wa * self.val[b];
                    }
                }
                if self.cross {
                    for k in 0..m {
                        out.cross[a * m + k] += wa * u[k];
                    }
                }
            }
        }
        let finite = out
            .mean
            .iter()
            .chain(&out.second)
            .chain(&out.cross)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                what: format!("in Gaussian integral of {}", self.f.name()),
                time: t,
                state: z.to_vec(),
            });
        }
        self.cached_sigma.clear();
        self.cached_sigma.extend_from_slice(sigma);
        self.cached = Some(out);
        Ok(self.cached.as_ref().unwrap())
    }
}

impl Moments {
    /// `ρ(ffᵗ) − ρ(f)ρ(f)ᵗ`.
    pub(crate) fn covariance(&self) -> Vec<f64> {
        let q = self.mean.len();
        let mut b = self.second.clone();
        for a in 0..q {
            for c in 0..q {
                b[a * q + c] -= self.mean[a] * self.mean[c];
            }
        }
        b
    }

    /// `ρ(ffᵗ) − ρ(f)ρ(f)ᵗ − w1 w1ᵗ` with `w1 = cross`.
    pub(crate) fn residual_covariance(&self, m: usize) -> Vec<f64> {
        let q = self.mean.len();
        let mut b = self.covariance();
        for a in 0..q {
            for c in 0..q {
                b[a * q + c] -= (0..m).map(|k| self.cross[a * m + k] * self.cross[c * m + k]).sum::<f64>();
            }
        }
        b
    }
}

/// Scalar variance clamped as in [`psd_sqrt`]: tiny negative values become
/// zero, anything below `−PSD_CLAMP·scale` is an error.
pub(crate) fn clamp_variance(v: f64, scale: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -PSD_CLAMP * scale.abs() {
        Ok(0.0)
    } else {
        Err(Error::NotPsd {
            min_eigenvalue: v,
            trace: scale,
        })
    }
}

fn path_rule_check(f: &TestFunction, path: &PathRecord) -> Result<()> {
    if f.d() != path.d {
        return Err(Error::InvalidArgument(format!(
            "test function `{}` has d = {} but the path has d = {}",
            f.name(),
            f.d(),
            path.d
        )));
    }
    Ok(())
}

/// `E[f(t, z, σU)]`, `U ~ N(0, I_m)`, with `σ` given `d×m` row-major.
pub fn rho_sigma(
    f: &TestFunction,
    t: f64,
    z: &[f64],
    sigma: &[f64],
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if z.len() != f.d() || !sigma.len().is_multiple_of(f.d()) {
        return Err(Error::InvalidArgument(format!(
            "z must have length {} and σ must be {}×m",
            f.d(),
            f.d()
        )));
    }
    let m = sigma.len() / f.d();
    let mut engine = MomentEngine::new(f, rule, m, false, false)?;
    Ok(engine.at(t, z, sigma)?.mean.clone())
}

/// `Δ Σ_{i≤k} ρ_{σ[i−1]}(f(t_{i−1}, x[i−1], ·))`.
pub fn rho_integral(
    f: &TestFunction,
    path: &PathRecord,
    rule: &QuadratureRule,
) -> Result<FunctionalSeries> {
    path_rule_check(f, path)?;
    let q = f.q();
    let delta = path.grid.delta();
    let mut engine = MomentEngine::new(f, rule, path.m, false, false)?;
    let mut series = FunctionalSeries::zeros(path.grid, q, "rho", format!("rho_integral({})", f.name()));
    let mut acc = CompensatedVec::new(q);
    for i in 1..=path.n_steps() {
        let mom = engine.at(path.grid.node(i - 1), path.x_at(i - 1), path.sigma_at(i - 1))?;
        acc.add(&mom.mean);
        let out = series.at_mut(i);
        acc.write(out);
        out.iter_mut().for_each(|v| *v *= delta);
    }
    Ok(series)
}

/// Principal square root of `ρ_σ(ffᵗ) − ρ_σ(f)ρ_σ(f)ᵗ` at every node
/// `(t_i, x[i], σ[i])`; `q×q` per node.
pub fn a_process(
    f: &TestFunction,
    path: &PathRecord,
    rule: &QuadratureRule,
) -> Result<FunctionalSeries> {
    path_rule_check(f, path)?;
    let q = f.q();
    let mut engine = MomentEngine::new(f, rule, path.m, true, false)?;
    let mut series = FunctionalSeries::zeros_matrix(path.grid, q, q, "a", format!("a({})", f.name()));
    for i in 0..=path.n_steps() {
        let mom = engine.at(path.grid.node(i), path.x_at(i), path.sigma_at(i))?;
        let root = psd_sqrt(&mom.covariance(), q)?;
        series.at_mut(i).copy_from_slice(&root);
    }
    Ok(series)
}

/// `w(1) = ρ'(f·Pᵗ)` (`q×m`) and `w(2)`, the principal square root of
/// `ρ(ffᵗ) − ρ(f)ρ(f)ᵗ − w(1)w(1)ᵗ` (`q×q`), at every node.
pub fn w_processes(
    f: &TestFunction,
    path: &PathRecord,
    rule: &QuadratureRule,
) -> Result<(FunctionalSeries, FunctionalSeries)> {
    path_rule_check(f, path)?;
    let (q, m) = (f.q(), path.m);
    let mut engine = MomentEngine::new(f, rule, m, true, true)?;
    let mut w1 = FunctionalSeries::zeros_matrix(path.grid, q, m, "w1", format!("w1({})", f.name()));
    let mut w2 = FunctionalSeries::zeros_matrix(path.grid, q, q, "w2", format!("w2({})", f.name()));
    for i in 0..=path.n_steps() {
        let mom = engine.at(path.grid.node(i), path.x_at(i), path.sigma_at(i))?;
        w1.at_mut(i).copy_from_slice(&mom.cross);
        let root = psd_sqrt(&mom.residual_covariance(m), q)?;
        w2.at_mut(i).copy_from_slice(&root);
    }
    Ok((w1, w2))
}

/// Which representation of `L(f)` to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LMode {
    /// `∫ a dW̄`, for even `f`.
    Even,
    /// `∫ w(1) dW + ∫ w(2) dW̄`, reusing the path's own `W`.
    General,
}

/// Precomputed coefficients for repeated draws of `L(f)` on a fixed path.
#[derive(Debug, Clone)]
pub struct LSampler {
    q: usize,
    n: usize,
    sqrt_delta: f64,
    /// `q×q` per step: `a` or `w(2)` at the left node.
    scale: Vec<f64>,
    /// `Σ_{i≤k} w(1)[i−1]·ΔW_i` per node (`q` each); zero in even mode.
    mean: Vec<f64>,
}

impl LSampler {
    pub fn new(
        f: &TestFunction,
        path: &PathRecord,
        rule: &QuadratureRule,
        mode: LMode,
    ) -> Result<Self> {
        path_rule_check(f, path)?;
        if mode == LMode::Even && !f.is_even() {
            return Err(Error::InvalidArgument(format!(
                "even-mode L(f) requires an even test function; `{}` is not",
                f.name()
            )));
        }
        let (q, m, n) = (f.q(), path.m, path.n_steps());
        let general = mode == LMode::General;
        let mut engine = MomentEngine::new(f, rule, m, true, general)?;
        let mut scale = Vec::with_capacity(n * q * q);
        let mut mean = vec![0.0; (n + 1) * q];
        let mut acc = CompensatedVec::new(q);
        let mut term = vec![0.0; q];
        for i in 1..=n {
            let mom = engine.at(path.grid.node(i - 1), path.x_at(i - 1), path.sigma_at(i - 1))?;
            if general {
                scale.extend(psd_sqrt(&mom.residual_covariance(m), q)?);
                let dw = path.dw_step(i);
                for (a, t) in term.iter_mut().enumerate() {
                    *t = (0..m).map(|k| mom.cross[a * m + k] * dw[k]).sum();
                }
                acc.add(&term);
                acc.write(&mut mean[i * q..(i + 1) * q]);
            } else {
                scale.extend(psd_sqrt(&mom.covariance(), q)?);
            }
        }
        Ok(Self {
            q,
            n,
            sqrt_delta: path.grid.delta().sqrt(),
            scale,
            mean,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Path-measurable part at the terminal node.
    pub fn conditional_mean(&self) -> &[f64] {
        &self.mean[self.n * self.q..]
    }

    /// `Σ_i scale_i scale_iᵗ Δ`, the conditional covariance of `L_T`.
    pub fn conditional_covariance(&self) -> Vec<f64> {
        let q = self.q;
        let delta = self.sqrt_delta * self.sqrt_delta;
        let mut out = vec![0.0; q * q];
        for s in self.scale.chunks_exact(q * q) {
            for a in 0..q {
                for b in 0..q {
                    out[a * q + b] += delta * (0..q).map(|c| s[a * q + c] * s[b * q + c]).sum::<f64>();
                }
            }
        }
        out
    }

    fn step<R: Rng + ?Sized>(&self, rng: &mut R, i: usize, noise: &mut [f64], acc: &mut [f64]) {
        let q = self.q;
        for e in noise.iter_mut() {
            *e = self.sqrt_delta * Distribution::<f64>::sample(&StandardNormal, rng);
        }
        let s = &self.scale[(i - 1) * q * q..i * q * q];
        for (a, o) in acc.iter_mut().enumerate() {
            *o += (0..q).map(|c| s[a * q + c] * noise[c]).sum::<f64>();
        }
    }

    /// One draw of `L_T`.
    pub fn sample_terminal<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut noise = vec![0.0; self.q];
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=self.n {
            self.step(rng, i, &mut noise, out);
        }
        for (o, m) in out.iter_mut().zip(self.conditional_mean()) {
            *o += m;
        }
    }

    /// One draw of the whole series.
    pub fn sample_series<R: Rng + ?Sized>(&self, rng: &mut R, series: &mut FunctionalSeries) {
        let q = self.q;
        let mut noise = vec![0.0; q];
        let mut acc = vec![0.0; q];
        series.at_mut(0).iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=self.n {
            self.step(rng, i, &mut noise, &mut acc);
            let out = series.at_mut(i);
            for a in 0..q {
                out[a] = acc[a] + self.mean[i * q + a];
            }
        }
    }
}

/// One draw of `L(f)` on `path`, from the stream [`Stream::LLimit`] of
/// `seed`.
pub fn simulate_l(
    f: &TestFunction,
    path: &PathRecord,
    rule: &QuadratureRule,
    seed: u64,
    mode: LMode,
) -> Result<FunctionalSeries> {
    let sampler = LSampler::new(f, path, rule, mode)?;
    let mut series = FunctionalSeries::zeros(path.grid, f.q(), "l", format!("L({})", f.name()));
    let mut rng: ChaCha8Rng = stream(seed, Stream::LLimit);
    sampler.sample_series(&mut rng, &mut series);
    Ok(series)
}
