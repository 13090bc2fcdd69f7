use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{matvec, psd_sqrt};

/// Law of i.i.d. jump sizes.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    Constant(Vec<f64>),
    /// Independent uniform coordinates on `[lo_j, hi_j]`.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Centered Gaussian; `factor` is the PSD square root of `cov`.
    Gaussian { cov: Vec<f64>, factor: Vec<f64> },
    /// `a` with probability `p_a`, otherwise `b`.
    TwoPoint { a: Vec<f64>, b: Vec<f64>, p_a: f64 },
}

impl JumpLaw {
    pub fn gaussian(cov: Vec<f64>) -> Result<Self> {
        let dim = (cov.len() as f64).sqrt().round() as usize;
        if dim * dim != cov.len() || dim == 0 {
            return Err(Error::InvalidModel(
                "gaussian jump covariance must be a non-empty square matrix".into(),
            ));
        }
        let factor = psd_sqrt(&cov, dim)
            .map_err(|e| Error::InvalidModel(format!("gaussian jump covariance: {e}")))?;
        Ok(Self::Gaussian { cov, factor })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(v) => v.len(),
            Self::UniformBox { lo, .. } => lo.len(),
            Self::Gaussian { factor, .. } => (factor.len() as f64).sqrt().round() as usize,
            Self::TwoPoint { a, .. } => a.len(),
        }
    }

    pub(crate) fn validate(&self, dim: usize, what: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(format!("{what}: {msg}")));
        if self.dim() != dim {
            return bad(format!("jump law has dimension {}, expected {dim}", self.dim()));
        }
        match self {
            Self::UniformBox { lo, hi } => {
                if hi.len() != lo.len() || lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return bad("uniform box needs lo ≤ hi componentwise".into());
                }
            }
            Self::TwoPoint { a, b, p_a }
                if (a.len() != b.len() || !(0.0..=1.0).contains(p_a)) => {
                    return bad("two-point law needs equal lengths and p_a in [0, 1]".into());
                }
            _ => {}
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Constant(v) => out.copy_from_slice(v),
            Self::UniformBox { lo, hi } => {
                for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
                    let u: f64 = rng.random();
                    *o = l + (h - l) * u;
                }
            }
            Self::Gaussian { factor, .. } => {
                let z: Vec<f64> = (0..out.len()).map(|_| StandardNormal.sample(rng)).collect();
                matvec(factor, &z, out);
            }
            Self::TwoPoint { a, b, p_a } => {
                let u: f64 = rng.random();
                out.copy_from_slice(if u < *p_a { a } else { b });
            }
        }
    }

    /// Bound on the attainable `‖J‖`. For the Gaussian law this is a declared
    /// 8-sigma bound used for reporting only.
    pub fn gamma_bound(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            Self::Constant(v) => norm(v),
            Self::UniformBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Self::Gaussian { cov, .. } => {
                let dim = self.dim();
                let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
                8.0 * trace.sqrt()
            }
            Self::TwoPoint { a, b, .. } => norm(a).max(norm(b)),
        }
    }

    /// True when `J` and `-J` have the same law.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Constant(v) => v.iter().all(|&x| x == 0.0),
            Self::UniformBox { lo, hi } => lo.iter().zip(hi).all(|(l, h)| *l == -*h),
            Self::Gaussian { .. } => true,
            Self::TwoPoint { a, b, p_a } => {
                *p_a == 0.5 && a.iter().zip(b).all(|(x, y)| *x == -*y)
            }
        }
    }
}

/// Finite-activity jumps of `X`: a compound Poisson part plus optional
/// deterministic jumps at scheduled times.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub intensity: f64,
    pub law: Option<JumpLaw>,
    pub scheduled: Vec<ScheduledJump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledJump {
    pub time: f64,
    pub size: Vec<f64>,
}

impl ScheduledJump {
    pub fn new(time: f64, size: Vec<f64>) -> Self {
        Self { time, size }
    }
}

impl JumpSpec {
    pub fn poisson(intensity: f64, law: JumpLaw) -> Self {
        Self {
            intensity,
            law: Some(law),
            scheduled: Vec::new(),
        }
    }

    pub fn scheduled(jumps: Vec<ScheduledJump>) -> Self {
        Self {
            intensity: 0.0,
            law: None,
            scheduled: jumps,
        }
    }

    pub fn with_scheduled(mut self, jumps: Vec<ScheduledJump>) -> Self {
        self.scheduled = jumps;
        self
    }

    pub fn gamma_bound(&self) -> f64 {
        let poisson = self.law.as_ref().map_or(0.0, JumpLaw::gamma_bound);
        self.scheduled
            .iter()
            .map(|j| j.size.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(poisson, f64::max)
    }

    pub(crate) fn validate(&self, dim: usize, what: &str) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "{what}: intensity must be finite and non-negative"
            )));
        }
        match &self.law {
            Some(law) => law.validate(dim, what)?,
            None if self.intensity > 0.0 => {
                return Err(Error::InvalidModel(format!(
                    "{what}: positive intensity needs a size law"
                )))
            }
            None => {}
        }
        validate_schedule(&self.scheduled, dim, what)
    }
}

pub(crate) fn validate_schedule(jumps: &[ScheduledJump], dim: usize, what: &str) -> Result<()> {
    let mut prev = 0.0;
    for j in jumps {
        if !(j.time > prev) || !j.time.is_finite() {
            return Err(Error::InvalidModel(format!(
                "{what}: scheduled times must be strictly increasing and positive"
            )));
        }
        if j.size.len() != dim || j.size.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "{what}: scheduled jump at {} must have {dim} finite entries",
                j.time
            )));
        }
        prev = j.time;
    }
    Ok(())
}

/// Jumps of the volatility process (sizes are flattened `d×m` matrices).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VolJumps {
    pub scheduled: Vec<ScheduledJump>,
    pub intensity: f64,
    pub law: Option<JumpLaw>,
    /// Jump added to `σ` at every jump time of `X`.
    pub at_x_jumps: Option<Vec<f64>>,
}

impl VolJumps {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        JumpSpec {
            intensity: self.intensity,
            law: self.law.clone(),
            scheduled: self.scheduled.clone(),
        }
        .validate(dim, "volatility jumps")?;
        if let Some(c) = &self.at_x_jumps {
            if c.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "volatility jumps: at_x_jumps must have {dim} entries"
                )));
            }
        }
        Ok(())
    }
}
