use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{v_n, v_prime_n, FunctionalSeries};
use crate::limits::{d_f_ito, d_f_jump, rho_integral, QuadratureRule};
use crate::model::{check_applicability, ModelSpec, TestFunction};
use crate::rng::replication_seed;
use crate::simulate::{fmt_f64, simulate_path, subsample, PathRecord, TimeGrid};

/// Which functional a rate study follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlnTarget {
    /// `V^n(f) → D(f)`.
    Vn,
    /// `V'^n(f) → ∫ ρ_{σ_{s−}}(f) ds`.
    VPrime,
}

/// A nested-grid convergence study.
///
/// Every replication is simulated once on `grid`; the functional is
/// computed on each coarsening of that path and compared with the limit
/// computed on the fine path.
#[derive(Debug, Clone)]
pub struct LlnCampaign<'a> {
    pub model: &'a ModelSpec,
    pub f: &'a TestFunction,
    pub grid: TimeGrid,
    /// Coarsening factors, powers of two dividing `grid.n_steps()`.
    pub factors: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub target: LlnTarget,
    /// Quadrature for `ρ`-integrals; the default rule for `m` when `None`.
    pub rule: Option<QuadratureRule>,
}

/// Errors at one mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub factor: usize,
    pub delta: f64,
    /// Mean over replications of the sup-norm error along the path.
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_terminal_error: f64,
    pub terminal_std_error: f64,
}

/// Result of a rate study; points ordered by decreasing `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub target: LlnTarget,
    /// Name of the limit the functional was compared with.
    pub limit: &'static str,
    pub points: Vec<RatePoint>,
    /// Least-squares slope and intercept of `log(mean_error)` on `log Δ`,
    /// over points with positive error; `None` with fewer than two.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub terminal_slope: Option<f64>,
    pub reps: usize,
}

impl RateReport {
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "delta,factor,mean_error,std_error,mean_terminal_error,terminal_std_error")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(p.delta),
                p.factor,
                fmt_f64(p.mean_error),
                fmt_f64(p.std_error),
                fmt_f64(p.mean_terminal_error),
                fmt_f64(p.terminal_std_error)
            )?;
        }
        Ok(())
    }
}

/// Ordinary least-squares fit `y ≈ slope·x + intercept`; `None` with fewer
/// than two points or no spread in `x`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn log_fit(points: &[RatePoint], error: impl Fn(&RatePoint) -> f64) -> Option<(f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| error(p) > 0.0)
        .map(|p| (p.delta.ln(), error(p).ln()))
        .unzip();
    ols_slope(&xs, &ys)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn validate_factors(factors: &[usize], n: usize) -> Result<Vec<usize>> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("at least one coarsening factor is required".into()));
    }
    let mut sorted = factors.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.dedup();
    for &k in &sorted {
        if !k.is_power_of_two() || !n.is_multiple_of(k) {
            return Err(Error::InvalidArgument(format!(
                "coarsening factor {k} must be a power of two dividing n = {n}"
            )));
        }
    }
    Ok(sorted)
}

/// Sup over fine nodes of `|coarse(⌊j/factor⌋) − fine(j)|`, max-norm over
/// components.
fn sup_error(coarse: &FunctionalSeries, fine: &FunctionalSeries, factor: usize) -> f64 {
    (0..fine.n_nodes())
        .map(|j| max_diff(coarse.at(j / factor), fine.at(j)))
        .fold(0.0, f64::max)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

type Limit = fn(&TestFunction, &PathRecord, &QuadratureRule) -> Result<FunctionalSeries>;

/// Runs a rate study. Replications run on the current rayon pool; results
/// are folded in replication order.
pub fn verify_lln(c: &LlnCampaign<'_>) -> Result<RateReport> {
    if c.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let factors = validate_factors(&c.factors, c.grid.n_steps())?;
    let report = check_applicability(c.model, c.f);
    let (limit_name, limit): (&'static str, Limit) = match c.target {
        LlnTarget::VPrime => {
            if !report.t3.applies() {
                return Err(Error::Inapplicable {
                    theorem: "t3",
                    report: Box::new(report),
                });
            }
            ("rho_integral", |f, p, r| rho_integral(f, p, r))
        }
        LlnTarget::Vn => {
            if report.t2.applies() {
                ("d_f_ito", |f, p, _| d_f_ito(f, p))
            } else if report.t1.applies() {
                ("d_f_jump", |f, p, _| d_f_jump(f, p))
            } else {
                return Err(Error::Inapplicable {
                    theorem: "t1/t2",
                    report: Box::new(report),
                });
            }
        }
    };
    let rule = match &c.rule {
        Some(r) => r.clone(),
        None => QuadratureRule::default_for(c.model.m())?,
    };
    let functional = match c.target {
        LlnTarget::Vn => v_n,
        LlnTarget::VPrime => v_prime_n,
    };

    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..c.reps)
        .into_par_iter()
        .map(|r| {
            let path = simulate_path(c.model, &c.grid, replication_seed(c.seed, r as u64))?;
            let lim = limit(c.f, &path, &rule)?;
            let mut sup = Vec::with_capacity(factors.len());
            let mut term = Vec::with_capacity(factors.len());
            for &k in &factors {
                let coarse = subsample(&path, k)?;
                let v = functional(c.f, &coarse)?;
                sup.push(sup_error(&v, &lim, k));
                term.push(max_diff(v.terminal(), lim.terminal()));
            }
            Ok((sup, term))
        })
        .collect::<Result<_>>()?;

    let points: Vec<RatePoint> = factors
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let sup: Vec<f64> = per_rep.iter().map(|(s, _)| s[i]).collect();
            let term: Vec<f64> = per_rep.iter().map(|(_, t)| t[i]).collect();
            let (mean_error, std_error) = mean_and_se(&sup);
            let (mean_terminal_error, terminal_std_error) = mean_and_se(&term);
            RatePoint {
                factor: k,
                delta: c.grid.delta() * k as f64,
                mean_error,
                std_error,
                mean_terminal_error,
                terminal_std_error,
            }
        })
        .collect();
    let fit = log_fit(&points, |p| p.mean_error);
    let terminal_fit = log_fit(&points, |p| p.mean_terminal_error);
    Ok(RateReport {
        target: c.target,
        limit: limit_name,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        terminal_slope: terminal_fit.map(|f| f.0),
        points,
        reps: c.reps,
    })
}
