use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{v_n, v_prime_n};
use crate::limits::{c_f, clamp_variance, d_f_jump, MomentEngine, QuadratureRule};
use crate::model::{check_applicability, ModelSpec, TestFunction};
use crate::rng::replication_seed;
use crate::simulate::{fmt_f64, simulate_path, PathRecord, TimeGrid};
use crate::sum::CompensatedSum;

use super::ks::{ks_test, KsResult};

/// Which central limit theorem a campaign checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// `(V^n(f) − D(f))/√Δ → F`, conditional variance `C(f)`.
    T4,
    /// `(V'^n(f) − ∫ρ(f))/√Δ → ∫ a dW̄` for even `f`.
    T5,
    /// `(V'^n(f) − ∫ρ(f))/√Δ → ∫ w(1) dW + ∫ w(2) dW̄`.
    T6,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::T4 => "t4",
            Theorem::T5 => "t5",
            Theorem::T6 => "t6",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "t4" => Ok(Theorem::T4),
            "t5" => Ok(Theorem::T5),
            "t6" => Ok(Theorem::T6),
            other => Err(format!("unknown theorem `{other}` (expected t4, t5 or t6)")),
        }
    }
}

/// One replication of a CLT campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltRecord {
    pub id: usize,
    /// Normalized terminal residual.
    pub raw: f64,
    /// Path-conditional mean of the limit.
    pub mean: f64,
    /// Path-conditional standard deviation of the limit.
    pub std: f64,
    /// `(raw − mean)/std`; `None` when `std` is not positive.
    pub standardized: Option<f64>,
}

impl CltRecord {
    /// Builds a record from the outputs of a single path.
    pub fn new(id: usize, raw: f64, mean: f64, std: f64) -> Self {
        let standardized = (std > 0.0 && std.is_finite()).then(|| (raw - mean) / std);
        Self {
            id,
            raw,
            mean,
            std,
            standardized,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.standardized.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct CltCampaign<'a> {
    pub model: &'a ModelSpec,
    pub f: &'a TestFunction,
    pub grid: TimeGrid,
    pub reps: usize,
    pub seed: u64,
    pub theorem: Theorem,
    /// Quadrature for `ρ`-moments; the default rule for `m` when `None`.
    pub rule: Option<QuadratureRule>,
}

/// Aggregate statistics of the standardized residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltSummary {
    pub reps: usize,
    pub used: usize,
    pub degenerate: usize,
    pub ks: KsResult,
    pub sample_mean: f64,
    pub sample_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltOutcome {
    pub theorem: Theorem,
    pub records: Vec<CltRecord>,
    pub summary: CltSummary,
}

impl CltOutcome {
    /// Columns `id, raw, mean, std, standardized`; degenerate records leave
    /// the last column empty.
    pub fn write_records_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "id,raw,mean,std,standardized")?;
        for r in &self.records {
            let s = r.standardized.map(fmt_f64).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                r.id,
                fmt_f64(r.raw),
                fmt_f64(r.mean),
                fmt_f64(r.std),
                s
            )?;
        }
        Ok(())
    }

    /// Columns `theorem, n, degenerate, ks_stat, p, sample_mean, sample_var`.
    pub fn write_summary_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let s = &self.summary;
        writeln!(w, "theorem,n,degenerate,ks_stat,p,sample_mean,sample_var")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            self.theorem,
            s.used,
            s.degenerate,
            fmt_f64(s.ks.statistic),
            fmt_f64(s.ks.p_value),
            fmt_f64(s.sample_mean),
            fmt_f64(s.sample_var)
        )
    }
}

/// `(raw, mean, std)` for one path.
fn residual(c: &CltCampaign<'_>, rule: &QuadratureRule, path: &PathRecord) -> Result<(f64, f64, f64)> {
    let sqrt_delta = path.grid.delta().sqrt();
    match c.theorem {
        Theorem::T4 => {
            let v = v_n(c.f, path)?.terminal()[0];
            let d = d_f_jump(c.f, path)?.terminal()[0];
            let var = c_f(c.f, path)?.terminal()[0];
            Ok(((v - d) / sqrt_delta, 0.0, var.max(0.0).sqrt()))
        }
        Theorem::T5 | Theorem::T6 => {
            let general = c.theorem == Theorem::T6;
            let m = path.m;
            let delta = path.grid.delta();
            let mut engine = MomentEngine::new(c.f, rule, m, true, general)?;
            let (mut rho, mut var, mut mean) =
                (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
            for i in 1..=path.n_steps() {
                let mom = engine.at(path.grid.node(i - 1), path.x_at(i - 1), path.sigma_at(i - 1))?;
                rho.add(mom.mean[0]);
                let b = mom.second[0] - mom.mean[0] * mom.mean[0];
                if general {
                    let w1 = &mom.cross[..m];
                    let w1sq: f64 = w1.iter().map(|v| v * v).sum();
                    var.add(clamp_variance(b - w1sq, mom.second[0])?);
                    mean.add(w1.iter().zip(path.dw_step(i)).map(|(a, w)| a * w).sum());
                } else {
                    var.add(clamp_variance(b, mom.second[0])?);
                }
            }
            let v = v_prime_n(c.f, path)?.terminal()[0];
            let raw = (v - delta * rho.value()) / sqrt_delta;
            Ok((raw, mean.value(), (delta * var.value()).max(0.0).sqrt()))
        }
    }
}

/// Runs a CLT campaign: per replication the terminal residual is
/// standardized by the conditional mean and standard deviation of the
/// limit computed from the same path, and the standardized residuals are
/// tested against `N(0, 1)`.
pub fn verify_clt(c: &CltCampaign<'_>) -> Result<CltOutcome> {
    if c.f.q() != 1 {
        return Err(Error::InvalidArgument(format!(
            "CLT campaigns need a scalar test function; `{}` has q = {}",
            c.f.name(),
            c.f.q()
        )));
    }
    if c.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let report = check_applicability(c.model, c.f);
    let verdict = report.get(c.theorem.name()).expect("known theorem");
    if !verdict.applies() {
        return Err(Error::Inapplicable {
            theorem: c.theorem.name(),
            report: Box::new(report),
        });
    }
    let rule = match &c.rule {
        Some(r) => r.clone(),
        None => QuadratureRule::default_for(c.model.m())?,
    };
    let records: Vec<CltRecord> = (0..c.reps)
        .into_par_iter()
        .map(|r| {
            let path = simulate_path(c.model, &c.grid, replication_seed(c.seed, r as u64))?;
            let (raw, mean, std) = residual(c, &rule, &path)?;
            Ok(CltRecord::new(r, raw, mean, std))
        })
        .collect::<Result<_>>()?;

    let degenerate = records.iter().filter(|r| r.is_degenerate()).count();
    if degenerate * 100 > c.reps {
        return Err(Error::TooManyDegenerate {
            degenerate,
            total: c.reps,
        });
    }
    let z: Vec<f64> = records.iter().filter_map(|r| r.standardized).collect();
    let ks = ks_test(&z)?;
    let n = z.len() as f64;
    let sample_mean = z.iter().sum::<f64>() / n;
    let sample_var = z.iter().map(|v| (v - sample_mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(CltOutcome {
        theorem: c.theorem,
        summary: CltSummary {
            reps: c.reps,
            used: z.len(),
            degenerate,
            ks,
            sample_mean,
            sample_var,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{power_signed, quad, quartic};
    use crate::model::{JumpSpec, ScheduledJump};

    #[test]
    fn record_standardization() {
        let r = CltRecord::new(3, 5.0, 1.0, 2.0);
        assert_eq!(r.standardized, Some(2.0));
        assert!(CltRecord::new(0, 1.0, 0.0, 0.0).is_degenerate());
    }

    #[test]
    fn theorem_names_round_trip() {
        for t in [Theorem::T4, Theorem::T5, Theorem::T6] {
            assert_eq!(t.name().parse::<Theorem>().unwrap(), t);
        }
        assert!("t7".parse::<Theorem>().is_err());
    }

    #[test]
    fn t5_small_campaign() {
        let model = ModelSpec::brownian(1, 1.0);
        let f = quad(1).unwrap();
        let out = verify_clt(&CltCampaign {
            model: &model,
            f: &f,
            grid: TimeGrid::new(1.0, 256).unwrap(),
            reps: 200,
            seed: 3,
            theorem: Theorem::T5,
            rule: None,
        })
        .unwrap();
        assert_eq!(out.records.len(), 200);
        for r in &out.records {
            assert!((r.std - 2f64.sqrt()).abs() < 1e-12);
        }
        assert!(out.summary.ks.p_value > 0.001);
    }

    #[test]
    fn t4_standard_deviation_is_four() {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![1.0])
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![1.0])]))
            .build()
            .unwrap();
        let f = quartic(1).unwrap();
        let out = verify_clt(&CltCampaign {
            model: &model,
            f: &f,
            grid: TimeGrid::new(1.0, 256).unwrap(),
            reps: 60,
            seed: 3,
            theorem: Theorem::T4,
            rule: None,
        })
        .unwrap();
        for r in &out.records {
            assert!((r.std - 4.0).abs() < 1e-12);
        }
        assert_eq!(out.summary.used, 60);
    }

    #[test]
    fn t6_requires_declared_flags() {
        let model = ModelSpec::brownian(1, 1.0);
        let f = power_signed(1, 3).unwrap();
        let err = verify_clt(&CltCampaign {
            model: &model,
            f: &f,
            grid: TimeGrid::new(1.0, 16).unwrap(),
            reps: 60,
            seed: 0,
            theorem: Theorem::T6,
            rule: None,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Inapplicable { theorem: "t6", .. }));
    }

    #[test]
    fn degenerate_records_abort() {
        let model = ModelSpec::builder(1, 1).build().unwrap();
        let f = quad(1).unwrap();
        let err = verify_clt(&CltCampaign {
            model: &model,
            f: &f,
            grid: TimeGrid::new(1.0, 16).unwrap(),
            reps: 60,
            seed: 0,
            theorem: Theorem::T5,
            rule: None,
        })
        .unwrap_err();
        assert!(matches!(err, Error::TooManyDegenerate { degenerate: 60, .. }));
    }
}
