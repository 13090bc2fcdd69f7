use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::coefficient::Coefficient;
use super::cutoff::psi;
use super::jumps::{JumpLaw, JumpSpec, VolJumps};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Tolerance for the `b' ≡ 0` and `σ̃ ≡ 0` spot checks.
pub const DECLARED_ZERO_TOL: f64 = 1e-12;
/// Number of random probe points for declared-zero spot checks.
pub const DECLARED_ZERO_PROBES: usize = 100;
/// Monte Carlo sample size for `E[h(J)]` when no closed form is available.
pub const COMPENSATOR_SAMPLES: usize = 1_000_000;

/// Hypothesis flags declared by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HypothesisFlags {
    pub continuous: bool,
    pub bprime_zero: bool,
    pub sigmatilde_zero: bool,
}

/// Volatility dynamics
/// `dσ = b̃(t,σ) dt + σ̃(t,σ) dW + ṽ(t,σ) dV + jumps`.
///
/// `sigma0` is `d×m`; `vol_of_vol` is `d×m×m` with entry `[(j·m + k)·m + r]`
/// loading `dσ^{jk}` on `dW^r`; `indep_loading` is `d×m×l` likewise on `dV`.
#[derive(Debug, Clone)]
pub struct VolSpec {
    pub sigma0: Vec<f64>,
    pub drift: Coefficient,
    pub vol_of_vol: Coefficient,
    pub indep_loading: Coefficient,
    pub jumps: Option<VolJumps>,
}

impl VolSpec {
    /// Constant volatility matrix.
    pub fn constant(sigma0: Vec<f64>, d: usize, m: usize, l: usize) -> Self {
        Self {
            sigma0,
            drift: Coefficient::zero(d * m),
            vol_of_vol: Coefficient::zero(d * m * m),
            indep_loading: Coefficient::zero(d * m * l),
            jumps: None,
        }
    }
}

/// A validated model.
///
/// `X_t = x0 + ∫ b' dt + ∫ σ dW + Σ ΔX`, where `b' = b − λ·E[h(J)]` is the
/// drift after compensating the truncated Poisson jumps.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    d: usize,
    m: usize,
    l: usize,
    x0: Vec<f64>,
    drift: Coefficient,
    vol: VolSpec,
    jumps: Option<JumpSpec>,
    truncation_radius: f64,
    flags: HypothesisFlags,
    compensator: Vec<f64>,
}

pub struct ModelBuilder {
    d: usize,
    m: usize,
    l: usize,
    x0: Option<Vec<f64>>,
    drift: Option<Coefficient>,
    vol: Option<VolSpec>,
    jumps: Option<JumpSpec>,
    truncation_radius: f64,
    flags: Option<HypothesisFlags>,
}

impl ModelBuilder {
    pub fn independent_dim(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn drift(mut self, drift: Coefficient) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn vol(mut self, vol: VolSpec) -> Self {
        self.vol = Some(vol);
        self
    }

    /// Shortcut for a constant volatility matrix.
    pub fn sigma(self, sigma0: Vec<f64>) -> Self {
        let (d, m, l) = (self.d, self.m, self.l);
        self.vol(VolSpec::constant(sigma0, d, m, l))
    }

    pub fn jumps(mut self, jumps: JumpSpec) -> Self {
        self.jumps = Some(jumps);
        self
    }

    pub fn truncation_radius(mut self, r: f64) -> Self {
        self.truncation_radius = r;
        self
    }

    /// Declared flags. When never called, `continuous` is derived from the
    /// presence of jumps and the other flags are false.
    pub fn flags(mut self, flags: HypothesisFlags) -> Self {
        self.flags = Some(flags);
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        let Self {
            d,
            m,
            l,
            x0,
            drift,
            vol,
            jumps,
            truncation_radius,
            flags,
        } = self;
        if d == 0 || m == 0 {
            return Err(Error::InvalidModel("d and m must be positive".into()));
        }
        let x0 = x0.unwrap_or_else(|| vec![0.0; d]);
        if x0.len() != d || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!("x0 must have {d} finite entries")));
        }
        let drift = drift.unwrap_or_else(|| Coefficient::zero(d));
        drift.validate("drift", d, d)?;
        let vol = vol.unwrap_or_else(|| VolSpec::constant(vec![0.0; d * m], d, m, l));
        if vol.sigma0.len() != d * m || vol.sigma0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "sigma0 must have {} finite entries (d×m)",
                d * m
            )));
        }
        vol.drift.validate("vol.drift", d * m, d * m)?;
        vol.vol_of_vol.validate("vol.vol_of_vol", d * m * m, d * m)?;
        vol.indep_loading
            .validate("vol.indep_loading", d * m * l, d * m)?;
        if let Some(vj) = &vol.jumps {
            vj.validate(d * m)?;
        }
        if let Some(j) = &jumps {
            j.validate(d, "jumps")?;
        }
        if !(truncation_radius.is_finite() && truncation_radius > 0.0) {
            return Err(Error::InvalidModel(
                "truncation_radius must be positive".into(),
            ));
        }
        let flags = flags.unwrap_or(HypothesisFlags {
            continuous: jumps.is_none(),
            ..Default::default()
        });
        if flags.continuous == jumps.is_some() {
            return Err(Error::InvalidModel(
                "flag `continuous` must be true exactly when the model has no jumps".into(),
            ));
        }
        let compensator = match &jumps {
            Some(JumpSpec {
                intensity,
                law: Some(law),
                ..
            }) if *intensity > 0.0 => {
                let mean = truncated_mean(law, truncation_radius);
                mean.into_iter().map(|v| intensity * v).collect()
            }
            _ => vec![0.0; d],
        };
        let model = ModelSpec {
            d,
            m,
            l,
            x0,
            drift,
            vol,
            jumps,
            truncation_radius,
            flags,
            compensator,
        };
        model.spot_check_declarations()?;
        Ok(model)
    }
}

impl ModelSpec {
    pub fn builder(d: usize, m: usize) -> ModelBuilder {
        ModelBuilder {
            d,
            m,
            l: 0,
            x0: None,
            drift: None,
            vol: None,
            jumps: None,
            truncation_radius: 1.0,
            flags: None,
        }
    }

    /// `X = x0 + σ W` with constant scalar `σ` on every diagonal entry.
    pub fn brownian(d: usize, sigma: f64) -> Self {
        let mut s = vec![0.0; d * d];
        for j in 0..d {
            s[j * d + j] = sigma;
        }
        Self::builder(d, d)
            .sigma(s)
            .build()
            .expect("brownian model is valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn l(&self) -> usize {
        self.l
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn drift(&self) -> &Coefficient {
        &self.drift
    }
    pub fn vol(&self) -> &VolSpec {
        &self.vol
    }
    pub fn jumps(&self) -> Option<&JumpSpec> {
        self.jumps.as_ref()
    }
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }
    pub fn flags(&self) -> HypothesisFlags {
        self.flags
    }

    /// `λ·E[h(J)]`, cached at build time.
    pub fn compensator(&self) -> &[f64] {
        &self.compensator
    }

    /// Truncation function `h(x) = x·ψ(‖x‖ / r_h)`.
    pub fn truncation(&self, x: &[f64], out: &mut [f64]) {
        truncate(x, self.truncation_radius, out)
    }

    /// Compensated drift `b'(t, x) = b(t, x) − λ·E[h(J)]`.
    pub fn drift_prime(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.drift.eval(t, x, out);
        for (o, c) in out.iter_mut().zip(&self.compensator) {
            *o -= c;
        }
    }

    /// Whether `σ` can move at all (drift, loadings or jumps).
    pub fn has_dynamic_vol(&self) -> bool {
        let v = &self.vol;
        v.jumps.is_some()
            || [&v.drift, &v.vol_of_vol, &v.indep_loading]
                .iter()
                .any(|c| c.is_structurally_zero() != Some(true))
    }

    fn spot_check_declarations(&self) -> Result<()> {
        let mut rng = stream(0x5EED, Stream::Probe);
        let dm = self.d * self.m;
        let mut out = vec![0.0; self.d.max(dm * self.m)];
        for _ in 0..DECLARED_ZERO_PROBES {
            let t: f64 = 10.0 * rng.random::<f64>();
            if self.flags.bprime_zero {
                let x: Vec<f64> = (0..self.d)
                    .map(|_| 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                let o = &mut out[..self.d];
                self.drift_prime(t, &x, o);
                let mag = o.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(mag <= DECLARED_ZERO_TOL) {
                    return Err(Error::InvalidModel(format!(
                        "declared b' ≡ 0 but |b'(t={t:.3}, x={x:?})| = {mag:e}"
                    )));
                }
            }
            if self.flags.sigmatilde_zero {
                let s: Vec<f64> = (0..dm)
                    .map(|_| 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect();
                let o = &mut out[..dm * self.m];
                self.vol.vol_of_vol.eval(t, &s, o);
                if o.iter().any(|&v| v != 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "declared σ̃ ≡ 0 but σ̃(t={t:.3}) is nonzero"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn truncate(x: &[f64], radius: f64, out: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w = psi(norm / radius);
    for (o, v) in out.iter_mut().zip(x) {
        *o = w * v;
    }
}

/// `E[h(J)]`: exact for point-mass laws and symmetric laws (`h` is odd),
/// otherwise a fixed-seed Monte Carlo average.
fn truncated_mean(law: &JumpLaw, radius: f64) -> Vec<f64> {
    let dim = law.dim();
    let mut out = vec![0.0; dim];
    match law {
        _ if law.is_symmetric() => {}
        JumpLaw::Constant(v) => truncate(v, radius, &mut out),
        JumpLaw::TwoPoint { a, b, p_a } => {
            let mut ha = vec![0.0; dim];
            let mut hb = vec![0.0; dim];
            truncate(a, radius, &mut ha);
            truncate(b, radius, &mut hb);
            for j in 0..dim {
                out[j] = p_a * ha[j] + (1.0 - p_a) * hb[j];
            }
        }
        _ => {
            let mut rng = stream(0xC0FFEE, Stream::Compensator);
            let mut j = vec![0.0; dim];
            let mut h = vec![0.0; dim];
            let mut acc = vec![0.0; dim];
            for _ in 0..COMPENSATOR_SAMPLES {
                law.sample(&mut rng, &mut j);
                truncate(&j, radius, &mut h);
                for (a, v) in acc.iter_mut().zip(&h) {
                    *a += v;
                }
            }
            for (o, a) in out.iter_mut().zip(acc) {
                *o = a / COMPENSATOR_SAMPLES as f64;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::jumps::ScheduledJump;

    #[test]
    fn truncation_is_identity_near_zero_and_vanishes_far() {
        let mut out = [0.0; 2];
        truncate(&[0.3, 0.4], 1.0, &mut out);
        assert_eq!(out, [0.3, 0.4]);
        truncate(&[1.5, 1.5], 1.0, &mut out);
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn continuous_flag_must_match_jumps() {
        let err = ModelSpec::builder(1, 1)
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![1.0])]))
            .flags(HypothesisFlags {
                continuous: true,
                ..Default::default()
            })
            .build();
        assert!(err.is_err());
    }

    #[test]
    fn compensator_closed_forms() {
        let m = ModelSpec::builder(1, 1)
            .jumps(JumpSpec::poisson(2.0, JumpLaw::Constant(vec![0.5])))
            .build()
            .unwrap();
        assert_eq!(m.compensator(), &[1.0]);
        let m = ModelSpec::builder(1, 1)
            .jumps(JumpSpec::poisson(3.0, JumpLaw::gaussian(vec![1.0]).unwrap()))
            .build()
            .unwrap();
        assert_eq!(m.compensator(), &[0.0]);
    }

    #[test]
    fn compensator_monte_carlo_matches_quadrature() {
        // J ~ U(0, 1.5) with r_h = 1: E h(J) = (1/1.5)·(∫_0^1 y dy + ∫_1^1.5 y ψ(y) dy).
        let law = JumpLaw::UniformBox {
            lo: vec![0.0],
            hi: vec![1.5],
        };
        let mc = truncated_mean(&law, 1.0)[0];
        let n = 200_000;
        let h = 0.5 / n as f64;
        let tail: f64 = (0..n)
            .map(|i| {
                let y = 1.0 + (i as f64 + 0.5) * h;
                y * psi(y) * h
            })
            .sum();
        let exact = (0.5 + tail) / 1.5;
        assert!((mc - exact).abs() < 1e-3, "{mc} vs {exact}");
    }

    #[test]
    fn declared_bprime_zero_is_checked() {
        let bad = ModelSpec::builder(1, 1)
            .drift(Coefficient::Constant(vec![0.1]))
            .flags(HypothesisFlags {
                continuous: true,
                bprime_zero: true,
                sigmatilde_zero: false,
            })
            .build();
        assert!(bad.is_err());
        let good = ModelSpec::builder(1, 1)
            .jumps(JumpSpec::poisson(2.0, JumpLaw::Constant(vec![0.5])))
            .drift(Coefficient::Constant(vec![1.0]))
            .flags(HypothesisFlags {
                continuous: false,
                bprime_zero: true,
                sigmatilde_zero: false,
            })
            .build();
        assert!(good.is_ok());
    }
}
