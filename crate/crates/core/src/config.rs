//! Experiment files.
//!
//! An experiment is a TOML document; every key is lowercase snake_case and
//! unknown keys are rejected. The layout, with optional keys commented:
//!
//! ```toml
//! kind = "clt"                  # simulate | lln | clt | check | limits
//! theorem = "t5"                # clt only: t4 | t5 | t6
//! # target = "vprime"           # lln only: vn | vprime
//!
//! [model]
//! d = 1
//! m = 1
//! # l = 0                       # independent Brownian dimension
//! # x0 = [0.0]
//! # truncation_radius = 1.0
//! # drift = { kind = "constant", value = [0.0] }
//! sigma0 = [1.0]                # d×m, row-major
//! # [model.flags]               # declared hypotheses
//! # bprime_zero = false
//! # sigmatilde_zero = false
//! # [model.vol]
//! # drift = { ... }             # d×m entries
//! # vol_of_vol = { ... }        # d×m×m entries, loading on W
//! # indep_loading = { ... }     # d×m×l entries, loading on V
//! # jumps = { intensity = 0.0, law = { ... }, scheduled = [...], at_x_jumps = [...] }
//! # [model.jumps]
//! # intensity = 2.0
//! # law = { kind = "gaussian", cov = [0.25] }
//! # scheduled = [{ time = 0.5, size = [1.0] }]
//!
//! [function]                    # not needed by kind = "simulate"
//! name = "quad"                 # plus r, k, eps, value, inner as the entry needs
//!
//! [grid]
//! horizon = 1.0
//! n = 16384                     # or a list of step counts (lln)
//! # factors = [64, 32, 1]       # lln coarsening factors when n is a number
//!
//! [run]
//! seed = 42
//! # reps = 2000
//! # out = "out"
//! # quadrature_nodes = 64
//! # workers = 8
//!
//! # [assert]                    # checked by `--assert`
//! # ks_p_min = 0.01
//! # sample_var = [0.85, 1.15]
//! # slope = [0.35, 0.65]
//! # max_terminal_error = 0.02
//! # applies = ["t3", "t5"]
//! ```
//!
//! Coefficient presets are `{ kind = "constant", value }`,
//! `{ kind = "affine", offset, linear }` (linear is output×state,
//! row-major) and `{ kind = "sine", offset, amplitude, frequency, phase }`.
//! Jump laws are `{ kind = "constant", value }`,
//! `{ kind = "uniform_box", lo, hi }`, `{ kind = "gaussian", cov }` and
//! `{ kind = "two_point", a, b, p_a }`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{
    lookup, Coefficient, FunctionSpec, HypothesisFlags, JumpLaw, JumpSpec, ModelSpec,
    ScheduledJump, TestFunction, VolJumps, VolSpec,
};
use crate::simulate::TimeGrid;
use crate::verify::{LlnTarget, Theorem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    Lln,
    Clt,
    Check,
    Limits,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Lln => "lln",
            Self::Clt => "clt",
            Self::Check => "check",
            Self::Limits => "limits",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Self::Simulate),
            "lln" => Ok(Self::Lln),
            "clt" => Ok(Self::Clt),
            "check" => Ok(Self::Check),
            "limits" => Ok(Self::Limits),
            other => Err(format!(
                "unknown kind `{other}` (expected simulate, lln, clt, check or limits)"
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawCoefficient {
    Constant {
        value: Vec<f64>,
    },
    Affine {
        offset: Vec<f64>,
        linear: Vec<f64>,
    },
    Sine {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl From<RawCoefficient> for Coefficient {
    fn from(raw: RawCoefficient) -> Self {
        match raw {
            RawCoefficient::Constant { value } => Coefficient::Constant(value),
            RawCoefficient::Affine { offset, linear } => Coefficient::Affine { offset, linear },
            RawCoefficient::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => Coefficient::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawLaw {
    Constant { value: Vec<f64> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    Gaussian { cov: Vec<f64> },
    TwoPoint { a: Vec<f64>, b: Vec<f64>, p_a: f64 },
}

impl RawLaw {
    fn build(self) -> Result<JumpLaw> {
        Ok(match self {
            RawLaw::Constant { value } => JumpLaw::Constant(value),
            RawLaw::UniformBox { lo, hi } => JumpLaw::UniformBox { lo, hi },
            RawLaw::Gaussian { cov } => JumpLaw::gaussian(cov)?,
            RawLaw::TwoPoint { a, b, p_a } => JumpLaw::TwoPoint { a, b, p_a },
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheduled {
    time: f64,
    size: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawJumps {
    #[serde(default)]
    intensity: f64,
    law: Option<RawLaw>,
    #[serde(default)]
    scheduled: Vec<RawScheduled>,
}

#[derive(Debug, Default, Deserialize)]
struct RawVolJumps {
    #[serde(default)]
    intensity: f64,
    law: Option<RawLaw>,
    #[serde(default)]
    scheduled: Vec<RawScheduled>,
    at_x_jumps: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
struct RawVol {
    drift: Option<RawCoefficient>,
    vol_of_vol: Option<RawCoefficient>,
    indep_loading: Option<RawCoefficient>,
    jumps: Option<RawVolJumps>,
}

#[derive(Debug, Default, Deserialize)]
struct RawFlags {
    #[serde(default)]
    bprime_zero: bool,
    #[serde(default)]
    sigmatilde_zero: bool,
}

#[derive(Debug, Default, Deserialize)]
struct RawModel {
    d: Option<usize>,
    m: Option<usize>,
    #[serde(default)]
    l: usize,
    x0: Option<Vec<f64>>,
    truncation_radius: Option<f64>,
    drift: Option<RawCoefficient>,
    sigma0: Option<Vec<f64>>,
    vol: Option<RawVol>,
    jumps: Option<RawJumps>,
    flags: Option<RawFlags>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSteps {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
struct RawGrid {
    horizon: Option<f64>,
    n: Option<RawSteps>,
    factors: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
struct RawRun {
    seed: Option<u64>,
    reps: Option<usize>,
    out: Option<PathBuf>,
    quadrature_nodes: Option<usize>,
    workers: Option<usize>,
}

/// Thresholds checked in `--assert` mode.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct Assertions {
    pub ks_p_min: Option<f64>,
    pub sample_var: Option<[f64; 2]>,
    pub slope: Option<[f64; 2]>,
    pub max_terminal_error: Option<f64>,
    #[serde(default)]
    pub applies: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    kind: Option<String>,
    theorem: Option<String>,
    target: Option<String>,
    model: Option<RawModel>,
    function: Option<FunctionSpec>,
    grid: Option<RawGrid>,
    run: Option<RawRun>,
    #[serde(rename = "assert")]
    assertions: Option<Assertions>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: ModelSpec,
    pub function: Option<TestFunction>,
    pub grid: TimeGrid,
    /// Coarsening factors for rate studies, decreasing.
    pub factors: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub quadrature_nodes: Option<usize>,
    pub workers: Option<usize>,
    pub theorem: Option<Theorem>,
    pub target: LlnTarget,
    pub assertions: Assertions,
    /// SHA-256 of the source document, lowercase hex.
    pub sha256: String,
}

/// Values given on the command line, applied before validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, Overrides::default())
}

/// Parses and validates an experiment document, reporting every unknown
/// key and every validation failure together.
pub fn parse_config_with(text: &str, overrides: Overrides) -> Result<ExperimentConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| {
        unknown.push(path.to_string().replace(".?", "").replace("?.", ""))
    })
        .map_err(|e| Error::Config(vec![e.to_string()]))?;
    let mut errors: Vec<String> = unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect();
    let sha256 = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let config = validate(raw, overrides, sha256, &mut errors);
    match config {
        Some(c) if errors.is_empty() => Ok(c),
        _ => Err(Error::Config(errors)),
    }
}

fn validate(
    raw: RawConfig,
    overrides: Overrides,
    sha256: String,
    errors: &mut Vec<String>,
) -> Option<ExperimentConfig> {
    let kind = match (overrides.kind, raw.kind.as_deref()) {
        (Some(k), None) => Some(k),
        (Some(k), Some(s)) => match s.parse::<ExperimentKind>() {
            Ok(c) if c == k => Some(k),
            Ok(c) => {
                errors.push(format!("kind: config says `{c}` but the command is `{k}`"));
                None
            }
            Err(e) => {
                errors.push(format!("kind: {e}"));
                None
            }
        },
        (None, Some(s)) => s.parse().map_err(|e| errors.push(format!("kind: {e}"))).ok(),
        (None, None) => {
            errors.push("kind: missing (simulate, lln, clt, check or limits)".into());
            None
        }
    };

    let theorem = match (&kind, raw.theorem.as_deref()) {
        (_, Some(s)) => s.parse().map_err(|e| errors.push(format!("theorem: {e}"))).ok(),
        (Some(ExperimentKind::Clt), None) => {
            errors.push("theorem: required for clt (t4, t5 or t6)".into());
            None
        }
        _ => None,
    };
    let target = match raw.target.as_deref() {
        None | Some("vprime") => LlnTarget::VPrime,
        Some("vn") => LlnTarget::Vn,
        Some(other) => {
            errors.push(format!("target: unknown `{other}` (expected vn or vprime)"));
            LlnTarget::VPrime
        }
    };

    let run = raw.run.unwrap_or_default();
    let seed = overrides.seed.or(run.seed);
    if seed.is_none() {
        errors.push("run.seed: seed required for reproducibility".into());
    }
    let needs_reps = matches!(kind, Some(ExperimentKind::Lln | ExperimentKind::Clt));
    let reps = match run.reps {
        Some(0) => {
            errors.push("run.reps: must be positive".into());
            1
        }
        Some(r) => r,
        None if needs_reps => {
            errors.push("run.reps: required for lln and clt".into());
            1
        }
        None => 1,
    };
    if run.workers == Some(0) {
        errors.push("run.workers: must be positive".into());
    }

    let model = build_model(raw.model, errors);
    let function = match (raw.function, &model) {
        (Some(spec), Some(model)) => lookup(&spec, model.d())
            .map_err(|e| errors.push(format!("function: {e}")))
            .ok(),
        (Some(_), None) => None,
        (None, _) => {
            if !matches!(kind, Some(ExperimentKind::Simulate) | None) {
                errors.push("function: missing [function] table".into());
            }
            None
        }
    };
    if let (Some(f), Some(ExperimentKind::Clt)) = (&function, kind) {
        if f.q() != 1 {
            errors.push(format!("function: clt needs a scalar function, `{}` has q = {}", f.name(), f.q()));
        }
    }

    let coarsening = kind == Some(ExperimentKind::Lln);
    let (grid, factors) = build_grid(raw.grid, coarsening, errors);
    let quadrature_nodes = run.quadrature_nodes;
    if let Some(n) = quadrature_nodes {
        if n == 0 || n > crate::limits::MAX_NODES {
            errors.push(format!(
                "run.quadrature_nodes: must be in 1..={}",
                crate::limits::MAX_NODES
            ));
        }
    }
    let assertions = raw.assertions.unwrap_or_default();
    for name in &assertions.applies {
        if !["t1", "t2", "t3", "t4", "t5", "t6"].contains(&name.as_str()) {
            errors.push(format!("assert.applies: unknown theorem `{name}`"));
        }
    }

    Some(ExperimentConfig {
        kind: kind?,
        model: model?,
        function,
        grid: grid?,
        factors,
        reps,
        seed: seed?,
        out: run.out,
        quadrature_nodes,
        workers: run.workers,
        theorem,
        target,
        assertions,
        sha256,
    })
}

fn scheduled(list: Vec<RawScheduled>) -> Vec<ScheduledJump> {
    list.into_iter()
        .map(|s| ScheduledJump::new(s.time, s.size))
        .collect()
}

fn build_model(raw: Option<RawModel>, errors: &mut Vec<String>) -> Option<ModelSpec> {
    let Some(raw) = raw else {
        errors.push("model: missing [model] table".into());
        return None;
    };
    if raw.d.is_none() {
        errors.push("model.d: missing".into());
    }
    if raw.m.is_none() {
        errors.push("model.m: missing".into());
    }
    if raw.sigma0.is_none() {
        errors.push("model.sigma0: missing".into());
    }
    let (d, m, sigma0) = (raw.d?, raw.m?, raw.sigma0?);
    let l = raw.l;
    let vol_raw = raw.vol.unwrap_or_default();
    let mut vol = VolSpec::constant(sigma0, d, m, l);
    if let Some(c) = vol_raw.drift {
        vol.drift = c.into();
    }
    if let Some(c) = vol_raw.vol_of_vol {
        vol.vol_of_vol = c.into();
    }
    if let Some(c) = vol_raw.indep_loading {
        vol.indep_loading = c.into();
    }
    if let Some(vj) = vol_raw.jumps {
        let law = match vj.law.map(RawLaw::build).transpose() {
            Ok(l) => l,
            Err(e) => {
                errors.push(format!("model.vol.jumps.law: {e}"));
                return None;
            }
        };
        vol.jumps = Some(VolJumps {
            scheduled: scheduled(vj.scheduled),
            intensity: vj.intensity,
            law,
            at_x_jumps: vj.at_x_jumps,
        });
    }
    let mut builder = ModelSpec::builder(d, m).independent_dim(l).vol(vol);
    if let Some(x0) = raw.x0 {
        builder = builder.x0(x0);
    }
    if let Some(r) = raw.truncation_radius {
        builder = builder.truncation_radius(r);
    }
    if let Some(c) = raw.drift {
        builder = builder.drift(c.into());
    }
    let has_jumps = raw.jumps.is_some();
    if let Some(j) = raw.jumps {
        let law = match j.law.map(RawLaw::build).transpose() {
            Ok(l) => l,
            Err(e) => {
                errors.push(format!("model.jumps.law: {e}"));
                return None;
            }
        };
        builder = builder.jumps(JumpSpec {
            intensity: j.intensity,
            law,
            scheduled: scheduled(j.scheduled),
        });
    }
    if let Some(f) = raw.flags {
        builder = builder.flags(HypothesisFlags {
            continuous: !has_jumps,
            bprime_zero: f.bprime_zero,
            sigmatilde_zero: f.sigmatilde_zero,
        });
    }
    builder
        .build()
        .map_err(|e| errors.push(format!("model: {e}")))
        .ok()
}

fn build_grid(
    raw: Option<RawGrid>,
    coarsening: bool,
    errors: &mut Vec<String>,
) -> (Option<TimeGrid>, Vec<usize>) {
    let Some(raw) = raw else {
        errors.push("grid: missing [grid] table".into());
        return (None, vec![1]);
    };
    if raw.horizon.is_none() {
        errors.push("grid.horizon: missing".into());
    }
    let (n, mut factors) = match raw.n {
        None => {
            errors.push("grid.n: missing".into());
            (None, vec![1])
        }
        Some(RawSteps::One(n)) => (Some(n), raw.factors.clone().unwrap_or_else(|| vec![1])),
        Some(RawSteps::Many(list)) => {
            if raw.factors.is_some() {
                errors.push("grid.factors: give either a list of n or factors, not both".into());
            }
            match list.iter().max() {
                None => {
                    errors.push("grid.n: empty list".into());
                    (None, vec![1])
                }
                Some(&fine) => {
                    let mut fs = Vec::new();
                    for &k in &list {
                        if k == 0 || fine % k != 0 {
                            errors.push(format!("grid.n: {k} does not divide the finest grid {fine}"));
                        } else {
                            fs.push(fine / k);
                        }
                    }
                    if !coarsening && list.len() > 1 {
                        errors.push("grid.n: a list of step counts is only used by lln".into());
                    }
                    (Some(fine), fs)
                }
            }
        }
    };
    if let Some(n) = n {
        if n == 0 {
            errors.push("grid.n: must be positive".into());
        } else if coarsening && !n.is_power_of_two() {
            errors.push(format!("grid.n: {n} is not a power of two (required for coarsening)"));
        }
    }
    if coarsening {
        for &k in &factors {
            if !k.is_power_of_two() || n.is_some_and(|n| n % k != 0) {
                errors.push(format!("grid.factors: {k} must be a power of two dividing n"));
            }
        }
    }
    factors.sort_unstable_by(|a, b| b.cmp(a));
    factors.dedup();
    let grid = match (raw.horizon, n) {
        (Some(h), Some(n)) if n > 0 => TimeGrid::new(h, n)
            .map_err(|e| errors.push(format!("grid: {e}")))
            .ok(),
        _ => None,
    };
    (grid, factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T5: &str = r#"
kind = "clt"
theorem = "t5"

[model]
d = 1
m = 1
sigma0 = [1.0]

[function]
name = "quad"

[grid]
horizon = 1.0
n = 16384

[run]
seed = 7
reps = 2000
"#;

    fn messages(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(list)) => list,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_clt_config() {
        let c = parse_config(T5).unwrap();
        assert_eq!(c.kind, ExperimentKind::Clt);
        assert_eq!(c.theorem, Some(Theorem::T5));
        assert_eq!(c.grid.n_steps(), 16384);
        assert_eq!(c.reps, 2000);
        assert_eq!(c.sha256.len(), 64);
    }

    #[test]
    fn missing_seed() {
        let text = T5.replace("seed = 7\n", "");
        let errs = messages(&text);
        assert!(errs.iter().any(|e| e.contains("seed required for reproducibility")));
        let c = parse_config_with(&text, Overrides { seed: Some(3), kind: None }).unwrap();
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn coarsening_needs_power_of_two() {
        let text = T5
            .replace("kind = \"clt\"\ntheorem = \"t5\"", "kind = \"lln\"")
            .replace("n = 16384", "n = 1000\nfactors = [1, 2]");
        let errs = messages(&text);
        assert!(errs.iter().any(|e| e.starts_with("grid.n") && e.contains("power of two")), "{errs:?}");
    }

    #[test]
    fn every_problem_is_reported() {
        let text = r#"
kind = "lln"
colour = "blue"
[model]
d = 1
sigmo0 = [1.0]
[grid]
horizon = 1.0
[run]
reps = 3
"#;
        let errs = messages(text);
        for needle in ["unknown key `colour`", "unknown key `model.sigmo0`", "model.m", "model.sigma0", "grid.n", "seed required", "[function]"] {
            assert!(errs.iter().any(|e| e.contains(needle)), "missing {needle}: {errs:?}");
        }
    }

    #[test]
    fn list_of_steps_becomes_factors() {
        let text = T5
            .replace("kind = \"clt\"\ntheorem = \"t5\"", "kind = \"lln\"")
            .replace("n = 16384", "n = [256, 1024, 512]");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.grid.n_steps(), 1024);
        assert_eq!(c.factors, vec![4, 2, 1]);
    }

    #[test]
    fn full_model() {
        let text = r#"
kind = "simulate"
[model]
d = 1
m = 1
l = 1
x0 = [0.5]
drift = { kind = "sine", offset = [0.0], amplitude = [1.0], frequency = 2.0 }
sigma0 = [1.0]
[model.flags]
sigmatilde_zero = true
[model.vol]
indep_loading = { kind = "constant", value = [0.5] }
[model.jumps]
intensity = 3.0
law = { kind = "two_point", a = [0.5], b = [-0.5], p_a = 0.5 }
scheduled = [{ time = 0.5, size = [1.0] }]
[grid]
horizon = 2.0
n = 64
[run]
seed = 1
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.model.l(), 1);
        assert!(c.model.jumps().is_some());
        assert!(c.function.is_none());
        assert!(c.model.flags().sigmatilde_zero);
    }

    #[test]
    fn kind_override_must_agree() {
        let errs = match parse_config_with(T5, Overrides { kind: Some(ExperimentKind::Lln), seed: None }) {
            Err(Error::Config(e)) => e,
            other => panic!("{other:?}"),
        };
        assert!(errs.iter().any(|e| e.contains("config says `clt`")));
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(parse_config("kind = "), Err(Error::Config(_))));
    }
}
