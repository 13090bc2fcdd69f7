//! Pipelines behind the `semimart` binary.
//!
//! Every pipeline writes its CSVs and a `summary.txt` into one output
//! directory. Each CSV starts with `#` comment lines carrying the crate
//! version, the SHA-256 of the experiment file, the kind and the seed, so
//! identical inputs give byte-identical files whatever the worker count.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::functionals::{v_n, v_prime_n, FunctionalSeries};
use crate::limits::{
    a_process, c_f, d_f_ito, d_f_jump, rho_integral, simulate_f, simulate_l, w_processes,
    LMode, QuadratureRule,
};
use crate::model::{check_applicability, TestFunction};
use crate::simulate::{simulate_path, PathRecord};
use crate::verify::{verify_clt, verify_lln, CltCampaign, LlnCampaign, Theorem};

/// KS threshold reported in clt summaries when the config sets none.
pub const DEFAULT_KS_P_MIN: f64 = 0.01;

/// Files written and assertion results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Violated `[assert]` thresholds, one message each.
    pub failures: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    comments: Vec<String>,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>, &[String]) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w, &self.comments)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn series(&mut self, name: &str, s: &FunctionalSeries) -> Result<()> {
        self.csv(name, |w, c| s.write_csv(w, c))
    }
}

/// Runs `config`, writing into `out` (or the config's `run.out`, or `out/`).
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut w = Writer {
        dir: &dir,
        comments: vec![
            format!("semimart {}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256={}", config.sha256),
            format!("kind={}", config.kind),
            format!("seed={}", config.seed),
        ],
        files: Vec::new(),
    };
    let mut summary = String::new();
    let mut failures = Vec::new();
    writeln!(summary, "kind={}", config.kind).unwrap();
    writeln!(summary, "seed={}", config.seed).unwrap();
    writeln!(summary, "config_sha256={}", config.sha256).unwrap();
    if let Some(f) = &config.function {
        let report = check_applicability(&config.model, f);
        writeln!(summary, "function={}", f.name()).unwrap();
        writeln!(summary, "applicability:").unwrap();
        for (name, verdict) in report.entries() {
            writeln!(summary, "  {name}: {verdict}").unwrap();
        }
        for name in &config.assertions.applies {
            match report.get(name) {
                Some(v) if v.applies() => {}
                Some(v) => failures.push(format!("{name} expected to apply but is {v}")),
                None => failures.push(format!("unknown theorem {name}")),
            }
        }
    }
    let rule = quadrature(config)?;
    pool.install(|| match config.kind {
        ExperimentKind::Simulate => run_simulate(config, &mut w, &mut summary),
        ExperimentKind::Check => run_check(config, &mut w),
        ExperimentKind::Limits => run_limits(config, rule.as_ref(), &mut w, &mut summary),
        ExperimentKind::Lln => run_lln(config, rule, &mut w, &mut summary, &mut failures),
        ExperimentKind::Clt => run_clt(config, rule, &mut w, &mut summary, &mut failures),
    })?;
    if failures.is_empty() {
        writeln!(summary, "assertions: ok").unwrap();
    } else {
        for f in &failures {
            writeln!(summary, "assertion failed: {f}").unwrap();
        }
    }
    let path = dir.join("summary.txt");
    fs::write(&path, &summary)?;
    w.files.push(path);
    Ok(RunOutcome {
        files: w.files,
        out_dir: dir,
        summary,
        failures,
    })
}

fn quadrature(config: &ExperimentConfig) -> Result<Option<QuadratureRule>> {
    config
        .quadrature_nodes
        .map(|n| QuadratureRule::with_nodes(config.model.m(), n))
        .transpose()
}

fn function(config: &ExperimentConfig) -> Result<&TestFunction> {
    config
        .function
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("kind {} needs a [function] table", config.kind)))
}

fn write_path(path: &PathRecord, w: &mut Writer<'_>) -> Result<()> {
    w.csv("path.csv", |out, c| path.write_csv(out, c))?;
    w.csv("jumps.csv", |out, c| path.write_jumps_csv(out, c))
}

fn run_simulate(config: &ExperimentConfig, w: &mut Writer<'_>, summary: &mut String) -> Result<()> {
    let path = simulate_path(&config.model, &config.grid, config.seed)?;
    write_path(&path, w)?;
    writeln!(summary, "steps={}", path.n_steps()).unwrap();
    writeln!(summary, "jumps={}", path.jumps.len()).unwrap();
    if let Some(f) = &config.function {
        w.series("vn.csv", &v_n(f, &path)?)?;
        w.series("vprime.csv", &v_prime_n(f, &path)?)?;
    }
    Ok(())
}

fn run_check(config: &ExperimentConfig, w: &mut Writer<'_>) -> Result<()> {
    let f = function(config)?;
    let report = check_applicability(&config.model, f);
    w.csv("applicability.csv", |out, c| {
        for line in c {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "theorem,verdict")?;
        for (name, verdict) in report.entries() {
            let text = verdict.to_string().replace('"', "'");
            writeln!(out, "{name},\"{text}\"")?;
        }
        Ok(())
    })
}

fn optional(
    name: &str,
    result: Result<FunctionalSeries>,
    w: &mut Writer<'_>,
    summary: &mut String,
) -> Result<()> {
    match result {
        Ok(s) => w.series(name, &s),
        Err(e @ (Error::MissingDerivative(_) | Error::Inapplicable { .. } | Error::InvalidArgument(_))) => {
            writeln!(summary, "skipped {name}: {}", e.to_string().lines().next().unwrap_or("")).unwrap();
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn run_limits(
    config: &ExperimentConfig,
    rule: Option<&QuadratureRule>,
    w: &mut Writer<'_>,
    summary: &mut String,
) -> Result<()> {
    let f = function(config)?;
    let path = simulate_path(&config.model, &config.grid, config.seed)?;
    let default_rule;
    let rule = match rule {
        Some(r) => r,
        None => {
            default_rule = QuadratureRule::default_for(path.m)?;
            &default_rule
        }
    };
    write_path(&path, w)?;
    writeln!(summary, "steps={}", path.n_steps()).unwrap();
    writeln!(summary, "jumps={}", path.jumps.len()).unwrap();
    w.series("vn.csv", &v_n(f, &path)?)?;
    w.series("vprime.csv", &v_prime_n(f, &path)?)?;
    w.series("rho_integral.csv", &rho_integral(f, &path, rule)?)?;
    w.series("a.csv", &a_process(f, &path, rule)?)?;
    let (w1, w2) = w_processes(f, &path, rule)?;
    w.series("w1.csv", &w1)?;
    w.series("w2.csv", &w2)?;
    w.series("d_jump.csv", &d_f_jump(f, &path)?)?;
    optional("d_ito.csv", d_f_ito(f, &path), w, summary)?;
    optional("c.csv", c_f(f, &path), w, summary)?;
    optional("f_draw.csv", simulate_f(f, &path, config.seed).map(|d| d.series), w, summary)?;
    let mode = if f.is_even() { LMode::Even } else { LMode::General };
    optional("l_draw.csv", simulate_l(f, &path, rule, config.seed, mode), w, summary)
}

fn run_lln(
    config: &ExperimentConfig,
    rule: Option<QuadratureRule>,
    w: &mut Writer<'_>,
    summary: &mut String,
    failures: &mut Vec<String>,
) -> Result<()> {
    let f = function(config)?;
    let report = verify_lln(&LlnCampaign {
        model: &config.model,
        f,
        grid: config.grid,
        factors: config.factors.clone(),
        reps: config.reps,
        seed: config.seed,
        target: config.target,
        rule,
    })?;
    w.csv("rate.csv", |out, c| report.write_csv(out, c))?;
    writeln!(summary, "limit={}", report.limit).unwrap();
    writeln!(summary, "reps={}", report.reps).unwrap();
    let show = |v: Option<f64>| v.map_or("none".to_string(), |s| format!("{s:.6}"));
    writeln!(summary, "slope={}", show(report.slope)).unwrap();
    writeln!(summary, "terminal_slope={}", show(report.terminal_slope)).unwrap();
    let finest = report.points.iter().min_by_key(|p| p.factor);
    if let Some(p) = finest {
        writeln!(summary, "finest_delta={:e}", p.delta).unwrap();
        writeln!(summary, "finest_mean_error={:.6e}", p.mean_error).unwrap();
        writeln!(summary, "finest_mean_terminal_error={:.6e}", p.mean_terminal_error).unwrap();
    }
    let a = &config.assertions;
    if let Some([lo, hi]) = a.slope {
        match report.slope {
            Some(s) if (lo..=hi).contains(&s) => {}
            other => failures.push(format!("slope {} outside [{lo}, {hi}]", show(other))),
        }
    }
    if let (Some(max), Some(p)) = (a.max_terminal_error, finest) {
        if p.mean_terminal_error > max {
            failures.push(format!(
                "finest mean terminal error {:e} exceeds {max:e}",
                p.mean_terminal_error
            ));
        }
    }
    Ok(())
}

fn run_clt(
    config: &ExperimentConfig,
    rule: Option<QuadratureRule>,
    w: &mut Writer<'_>,
    summary: &mut String,
    failures: &mut Vec<String>,
) -> Result<()> {
    let f = function(config)?;
    let theorem = config.theorem.unwrap_or(Theorem::T5);
    let outcome = verify_clt(&CltCampaign {
        model: &config.model,
        f,
        grid: config.grid,
        reps: config.reps,
        seed: config.seed,
        theorem,
        rule,
    })?;
    w.csv("records.csv", |out, c| outcome.write_records_csv(out, c))?;
    w.csv("clt_summary.csv", |out, c| outcome.write_summary_csv(out, c))?;
    let s = &outcome.summary;
    let p_min = config.assertions.ks_p_min.unwrap_or(DEFAULT_KS_P_MIN);
    writeln!(summary, "theorem={theorem}").unwrap();
    writeln!(summary, "reps={} used={} degenerate={}", s.reps, s.used, s.degenerate).unwrap();
    writeln!(summary, "ks_stat={:.6}", s.ks.statistic).unwrap();
    writeln!(summary, "ks_p={:.6}", s.ks.p_value).unwrap();
    let verdict = if s.ks.p_value > p_min { "pass" } else { "fail" };
    writeln!(summary, "ks_verdict={verdict} (p > {p_min})").unwrap();
    writeln!(summary, "sample_mean={:.6}", s.sample_mean).unwrap();
    writeln!(summary, "sample_var={:.6}", s.sample_var).unwrap();
    let a = &config.assertions;
    if a.ks_p_min.is_some() && verdict == "fail" {
        failures.push(format!("KS p-value {:.6} not above {p_min}", s.ks.p_value));
    }
    if let Some([lo, hi]) = a.sample_var {
        if !(lo..=hi).contains(&s.sample_var) {
            failures.push(format!("sample variance {:.6} outside [{lo}, {hi}]", s.sample_var));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(kind: &str, extra: &str) -> ExperimentConfig {
        parse_config(&format!(
            r#"
kind = "{kind}"
{extra}
[model]
d = 1
m = 1
sigma0 = [1.0]
[function]
name = "quad"
[grid]
horizon = 1.0
n = 64
[run]
seed = 11
reps = 60
"#
        ))
        .unwrap()
    }

    #[test]
    fn check_lists_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config("check", ""), Some(dir.path())).unwrap();
        assert!(out.summary.contains("t3: applies"));
        assert!(out.summary.contains("t5: applies"));
        assert!(dir.path().join("applicability.csv").exists());
    }

    #[test]
    fn simulate_writes_every_node() {
        let dir = tempfile::tempdir().unwrap();
        run(&config("simulate", ""), Some(dir.path())).unwrap();
        let text = fs::read_to_string(dir.path().join("path.csv")).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 65);
        assert!(text.starts_with("# semimart "));
    }

    #[test]
    fn clt_records_and_ks_line() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config("clt", "theorem = \"t5\""), Some(dir.path())).unwrap();
        assert!(out.summary.lines().any(|l| l.starts_with("ks_p=")));
        let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 60);
    }

    #[test]
    fn limits_writes_all_series() {
        let dir = tempfile::tempdir().unwrap();
        run(&config("limits", ""), Some(dir.path())).unwrap();
        for name in ["vprime.csv", "rho_integral.csv", "a.csv", "w1.csv", "w2.csv", "d_jump.csv", "l_draw.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
    }

    #[test]
    fn failed_assertions_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let c = config("clt", "theorem = \"t5\"\n[assert]\nsample_var = [5.0, 6.0]\napplies = [\"t4\"]");
        let out = run(&c, Some(dir.path())).unwrap();
        assert_eq!(out.failures.len(), 2, "{:?}", out.failures);
    }
}
