//! The discretized functionals `V^n(f)` and `V'^n(f)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::TestFunction;
use crate::simulate::{fmt_f64, PathRecord, TimeGrid};
use crate::sum::CompensatedVec;

/// A process sampled at the grid nodes; `width` values per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    pub grid: TimeGrid,
    pub width: usize,
    pub columns: Vec<String>,
    pub values: Vec<f64>,
    pub label: String,
}

impl FunctionalSeries {
    /// Zero series with columns `{prefix}_1..{prefix}_width`.
    pub fn zeros(grid: TimeGrid, width: usize, prefix: &str, label: impl Into<String>) -> Self {
        Self {
            grid,
            width,
            columns: (1..=width).map(|j| format!("{prefix}_{j}")).collect(),
            values: vec![0.0; (grid.n_steps() + 1) * width],
            label: label.into(),
        }
    }

    /// Zero series of `rows×cols` matrices with columns `{prefix}_{r}{c}`.
    pub fn zeros_matrix(
        grid: TimeGrid,
        rows: usize,
        cols: usize,
        prefix: &str,
        label: impl Into<String>,
    ) -> Self {
        let columns = (1..=rows)
            .flat_map(|r| (1..=cols).map(move |c| format!("{prefix}_{r}{c}")))
            .collect();
        Self {
            grid,
            width: rows * cols,
            columns,
            values: vec![0.0; (grid.n_steps() + 1) * rows * cols],
            label: label.into(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_steps() + 1
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub(crate) fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.n_steps())
    }

    /// CSV with columns `t` then the series columns.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t,{}", self.columns.join(","))?;
        for i in 0..self.n_nodes() {
            let row: Vec<String> = self.at(i).iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{},{}", fmt_f64(self.grid.node(i)), row.join(","))?;
        }
        Ok(())
    }
}

fn check_dims(f: &TestFunction, path: &PathRecord) -> Result<()> {
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

/// Accumulates `scale · Σ_i f(t_{i−1}, x[i−1], arg_i)` where `arg` fills the
/// third argument for step `i`.
fn accumulate<F>(f: &TestFunction, path: &PathRecord, scale: f64, label: String, mut arg: F) -> Result<FunctionalSeries>
where
    F: FnMut(usize, &mut [f64]),
{
    check_dims(f, path)?;
    let q = f.q();
    let mut series = FunctionalSeries::zeros(path.grid, q, "v", label);
    let mut acc = CompensatedVec::new(q);
    let mut x = vec![0.0; path.d];
    let mut val = vec![0.0; q];
    for i in 1..=path.n_steps() {
        arg(i, &mut x);
        f.eval(path.grid.node(i - 1), path.x_at(i - 1), &x, &mut val);
        if val.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFunctional { step: i });
        }
        acc.add(&val);
        let out = series.at_mut(i);
        acc.write(out);
        if scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(series)
}

/// `V^n(f)_{t_k} = Σ_{i≤k} f(t_{i−1}, x[i−1], x[i] − x[i−1])`.
pub fn v_n(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    accumulate(f, path, 1.0, format!("V^n({})", f.name()), |i, out| path.increment(i, out))
}

/// `V'^n(f)_{t_k} = Δ Σ_{i≤k} f(t_{i−1}, x[i−1], (x[i] − x[i−1])/√Δ)`.
pub fn v_prime_n(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    let delta = path.grid.delta();
    let inv = 1.0 / delta.sqrt();
    accumulate(f, path, delta, format!("V'^n({})", f.name()), |i, out| {
        path.increment(i, out);
        out.iter_mut().for_each(|v| *v *= inv);
    })
}

/// `Δ Σ_{i≤k} f(t_{i−1}, x[i−1], β_i)` with `β_i = σ[i−1]·ΔW_i/√Δ`.
pub fn gaussian_proxy(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    let delta = path.grid.delta();
    let inv = 1.0 / delta.sqrt();
    let (d, m) = (path.d, path.m);
    accumulate(f, path, delta, format!("proxy({})", f.name()), |i, out| {
        let s = path.sigma_at(i - 1);
        let w = path.dw_step(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = inv * (0..m).map(|k| s[j * m + k] * w[k]).sum::<f64>();
        }
        debug_assert_eq!(out.len(), d);
    })
}
