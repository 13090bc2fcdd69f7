//! Limits built from the jump ledger: `D(f)` in both forms, the
//! conditional variance `C(f)` and the process `F`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::functionals::FunctionalSeries;
use crate::model::checks::check_vanishes_at_origin;
use crate::model::TestFunction;
use crate::rng::{stream, Stream};
use crate::simulate::PathRecord;
use crate::sum::CompensatedVec;

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

fn eval_checked(f: &TestFunction, t: f64, z: &[f64], x: &[f64], out: &mut [f64], step: usize) -> Result<()> {
    f.eval(t, z, x, out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFunctional { step });
    }
    Ok(())
}

/// `Σ_{T_p ≤ t_k} f(T_p, X_{T_p−}, ΔX_{T_p})`.
pub fn d_f_jump(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    check_dims(f, path)?;
    let q = f.q();
    let mut series = FunctionalSeries::zeros(path.grid, q, "d", format!("D({})", f.name()));
    let mut acc = CompensatedVec::new(q);
    let mut val = vec![0.0; q];
    let mut filled = 0;
    for j in &path.jumps {
        for k in filled + 1..j.host_step {
            acc.write(series.at_mut(k));
        }
        filled = j.host_step - 1;
        eval_checked(f, j.time, &j.x_pre, &j.size, &mut val, j.host_step)?;
        acc.add(&val);
    }
    for k in filled + 1..=path.n_steps() {
        acc.write(series.at_mut(k));
    }
    Ok(series)
}

/// Itô form of `D(f)`:
/// `Σ ∇_x f(t_{i−1}, x[i−1], 0)·Δ_i X^c + ½ Σ ∂²_x f(t_{i−1}, x[i−1], 0) : σσᵗ[i−1] Δ
///  + Σ_{T_p ≤ t_k} f(T_p, X_{T_p−}, ΔX_{T_p})`,
/// where `Δ_i X^c` is the increment of step `i` with its jumps removed.
///
/// The three sums are accumulated separately, so when both derivatives
/// vanish at the origin the result is bitwise equal to [`d_f_jump`].
pub fn d_f_ito(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    check_dims(f, path)?;
    let der = f.derivatives();
    if !(der.grad_x && der.hess_x) {
        return Err(Error::MissingDerivative(format!(
            "{} lacks grad_x or hess_x; use d_f_jump when f = o(|x|²) at the origin",
            f.name()
        )));
    }
    check_vanishes_at_origin(f).map_err(Error::InvalidFunction)?;
    let (d, m, q) = (path.d, path.m, f.q());
    let delta = path.grid.delta();
    let zero = vec![0.0; d];
    let mut grad = vec![0.0; q * d];
    let mut hess = vec![0.0; q * d * d];
    let mut inc = vec![0.0; d];
    let mut cov = vec![0.0; d * d];
    let mut val = vec![0.0; q];
    let (mut g_acc, mut h_acc, mut j_acc) =
        (CompensatedVec::new(q), CompensatedVec::new(q), CompensatedVec::new(q));
    let (mut g, mut h, mut jv) = (vec![0.0; q], vec![0.0; q], vec![0.0; q]);
    let mut series = FunctionalSeries::zeros(path.grid, q, "d", format!("D_ito({})", f.name()));
    let hosted = path.jumps_by_step();
    for i in 1..=path.n_steps() {
        let t = path.grid.node(i - 1);
        let x = path.x_at(i - 1);
        let events = &path.jumps[hosted[i].clone()];
        f.grad_x(t, x, &zero, &mut grad)?;
        f.hess_x(t, x, &zero, &mut hess)?;
        path.continuous_increment(i, events, &mut inc);
        let s = path.sigma_at(i - 1);
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] = (0..m).map(|k| s[a * m + k] * s[b * m + k]).sum();
            }
        }
        for c in 0..q {
            g[c] = (0..d).map(|a| grad[c * d + a] * inc[a]).sum();
            h[c] = 0.5 * delta * (0..d * d).map(|e| hess[c * d * d + e] * cov[e]).sum::<f64>();
        }
        if g.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFunctional { step: i });
        }
        g_acc.add(&g);
        h_acc.add(&h);
        for e in events {
            eval_checked(f, e.time, &e.x_pre, &e.size, &mut val, i)?;
            j_acc.add(&val);
        }
        g_acc.write(&mut g);
        h_acc.write(&mut h);
        j_acc.write(&mut jv);
        for (c, o) in series.at_mut(i).iter_mut().enumerate() {
            *o = (g[c] + h[c]) + jv[c];
        }
    }
    Ok(series)
}

/// Per-jump coefficients of the limit `F`:
/// `ΔF_p = Σ_k √κ_p U_p^k A_p[·,k] + √(1−κ_p) U'_p^k B_p[·,k]` with
/// `A = (∇_x f − ∇_z f)·σ_{T_p−}` and `B = ∇_x f·σ_{T_p}` (both `q×m`).
#[derive(Debug, Clone)]
pub struct FSampler {
    q: usize,
    m: usize,
    n: usize,
    host: Vec<usize>,
    pre: Vec<f64>,
    post: Vec<f64>,
}

impl FSampler {
    pub fn new(f: &TestFunction, path: &PathRecord) -> Result<Self> {
        check_dims(f, path)?;
        let der = f.derivatives();
        if !(der.grad_x && der.grad_z) {
            return Err(Error::MissingDerivative(format!(
                "{} lacks grad_x or grad_z, needed by C(f) and F",
                f.name()
            )));
        }
        let (d, m, q) = (path.d, path.m, f.q());
        let mut fx = vec![0.0; q * d];
        let mut fz = vec![0.0; q * d];
        let mut host = Vec::with_capacity(path.jumps.len());
        let mut pre = Vec::with_capacity(path.jumps.len() * q * m);
        let mut post = Vec::with_capacity(path.jumps.len() * q * m);
        for j in &path.jumps {
            f.grad_x(j.time, &j.x_pre, &j.size, &mut fx)?;
            f.grad_z(j.time, &j.x_pre, &j.size, &mut fz)?;
            if fx.iter().chain(&fz).any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFunctional { step: j.host_step });
            }
            for c in 0..q {
                for k in 0..m {
                    pre.push((0..d).map(|a| j.sigma_pre[a * m + k] * (fx[c * d + a] - fz[c * d + a])).sum());
                }
            }
            for c in 0..q {
                for k in 0..m {
                    post.push((0..d).map(|a| j.sigma_post[a * m + k] * fx[c * d + a]).sum());
                }
            }
            host.push(j.host_step);
        }
        Ok(Self {
            q,
            m,
            n: path.n_steps(),
            host,
            pre,
            post,
        })
    }

    pub fn n_jumps(&self) -> usize {
        self.host.len()
    }

    /// `C(f)` contribution `½(AAᵗ + BBᵗ)` of jump `p`, added to `out` (`q×q`).
    fn add_variance(&self, p: usize, out: &mut [f64]) {
        let (q, m) = (self.q, self.m);
        let a = &self.pre[p * q * m..(p + 1) * q * m];
        let b = &self.post[p * q * m..(p + 1) * q * m];
        for r in 0..q {
            for c in 0..q {
                out[r * q + c] += 0.5
                    * (0..m)
                        .map(|k| a[r * m + k] * a[c * m + k] + b[r * m + k] * b[c * m + k])
                        .sum::<f64>();
            }
        }
    }

    /// Draws `(κ_p, U_p, U'_p)` for jump `p` and adds its increment of `F`.
    fn draw_jump<R: Rng + ?Sized>(&self, rng: &mut R, p: usize, draw: &mut [f64], out: &mut [f64]) {
        let (q, m) = (self.q, self.m);
        let kappa: f64 = rng.random();
        draw[0] = kappa;
        for v in draw[1..].iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let (sa, sb) = (kappa.sqrt(), (1.0 - kappa).sqrt());
        let a = &self.pre[p * q * m..(p + 1) * q * m];
        let b = &self.post[p * q * m..(p + 1) * q * m];
        let (u, up) = draw[1..].split_at(m);
        for (c, o) in out.iter_mut().enumerate() {
            *o += (0..m)
                .map(|k| sa * u[k] * a[c * m + k] + sb * up[k] * b[c * m + k])
                .sum::<f64>();
        }
    }

    /// One draw of `F_T`.
    pub fn sample_terminal<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut draw = vec![0.0; 1 + 2 * self.m];
        out.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..self.n_jumps() {
            self.draw_jump(rng, p, &mut draw, out);
        }
    }
}

/// `C(f)_{t_k} = ½ Σ_{T_p ≤ t_k} (A_p A_pᵗ + B_p B_pᵗ)`, flattened `q×q`.
pub fn c_f(f: &TestFunction, path: &PathRecord) -> Result<FunctionalSeries> {
    let sampler = FSampler::new(f, path)?;
    let q = f.q();
    let mut series = FunctionalSeries::zeros_matrix(path.grid, q, q, "c", format!("C({})", f.name()));
    let mut acc = vec![0.0; q * q];
    let mut p = 0;
    for i in 1..=path.n_steps() {
        while p < sampler.n_jumps() && sampler.host[p] == i {
            sampler.add_variance(p, &mut acc);
            p += 1;
        }
        series.at_mut(i).copy_from_slice(&acc);
    }
    Ok(series)
}

/// One draw of the extended-space variables and the resulting `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct FLimitDraw {
    pub kappa: Vec<f64>,
    /// `m` values per jump.
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub series: FunctionalSeries,
}

/// Draws `κ_p ~ U(0,1)`, `U_p, U'_p ~ N(0, I_m)` for every ledger jump from
/// stream [`Stream::FLimit`] of `seed` and evaluates `F`.
pub fn simulate_f(f: &TestFunction, path: &PathRecord, seed: u64) -> Result<FLimitDraw> {
    let sampler = FSampler::new(f, path)?;
    let (q, m) = (f.q(), path.m);
    let mut rng = stream(seed, Stream::FLimit);
    let mut series = FunctionalSeries::zeros(path.grid, q, "f", format!("F({})", f.name()));
    let mut draw = vec![0.0; 1 + 2 * m];
    let mut acc = vec![0.0; q];
    let (mut kappa, mut u, mut u_prime) = (Vec::new(), Vec::new(), Vec::new());
    let mut p = 0;
    for i in 1..=sampler.n {
        while p < sampler.n_jumps() && sampler.host[p] == i {
            sampler.draw_jump(&mut rng, p, &mut draw, &mut acc);
            kappa.push(draw[0]);
            u.extend_from_slice(&draw[1..1 + m]);
            u_prime.extend_from_slice(&draw[1 + m..]);
            p += 1;
        }
        series.at_mut(i).copy_from_slice(&acc);
    }
    Ok(FLimitDraw {
        kappa,
        u,
        u_prime,
        series,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::catalog::{identity, power_signed, quad, quartic};
    use crate::model::function::{Derivatives, Kernel};
    use crate::model::{FunctionMeta, JumpLaw, JumpSpec, ModelSpec, Parity, ScheduledJump};
    use crate::simulate::{simulate_path, TimeGrid};

    fn one_jump(size: f64, sigma: f64, n: usize) -> PathRecord {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![sigma])
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![size])]))
            .build()
            .unwrap();
        simulate_path(&model, &TimeGrid::new(1.0, n).unwrap(), 1).unwrap()
    }

    #[test]
    fn d_f_jump_examples() {
        let path = one_jump(2.0, 0.0, 8);
        let s = d_f_jump(&power_signed(1, 3).unwrap(), &path).unwrap();
        for k in 0..=8 {
            let want = if path.grid.node(k) >= 0.5 { 8.0 } else { 0.0 };
            assert_eq!(s.at(k)[0], want);
        }
        let bm = simulate_path(&ModelSpec::brownian(1, 1.0), &TimeGrid::new(1.0, 8).unwrap(), 0).unwrap();
        assert!(d_f_jump(&quad(1).unwrap(), &bm).unwrap().values.iter().all(|v| *v == 0.0));
        let model = ModelSpec::builder(1, 1)
            .jumps(JumpSpec::scheduled(vec![
                ScheduledJump::new(0.2, vec![1.0]),
                ScheduledJump::new(0.7, vec![-1.0]),
            ]))
            .build()
            .unwrap();
        let p = simulate_path(&model, &TimeGrid::new(1.0, 10).unwrap(), 0).unwrap();
        assert_eq!(d_f_jump(&quad(1).unwrap(), &p).unwrap().terminal()[0], 2.0);
    }

    fn jump_diffusion(seed: u64) -> PathRecord {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![0.8])
            .jumps(JumpSpec::poisson(3.0, JumpLaw::gaussian(vec![0.5]).unwrap()))
            .build()
            .unwrap();
        simulate_path(&model, &TimeGrid::new(1.0, 512).unwrap(), seed).unwrap()
    }

    #[test]
    fn d_f_ito_identity_telescopes() {
        let path = jump_diffusion(3);
        let s = d_f_ito(&identity(1).unwrap(), &path).unwrap();
        for k in 0..=512 {
            assert!((s.at(k)[0] - (path.x[k] - path.x[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn d_f_ito_quad_is_quadratic_variation() {
        let path = jump_diffusion(4);
        let s = d_f_ito(&quad(1).unwrap(), &path).unwrap();
        let qv = 0.64 + path.jumps.iter().map(|j| j.size[0] * j.size[0]).sum::<f64>();
        assert!((s.terminal()[0] - qv).abs() < 1e-12);
    }

    #[test]
    fn d_f_ito_equals_jump_form_for_quartic() {
        for seed in 0..5 {
            let path = jump_diffusion(seed);
            let a = d_f_ito(&quartic(1).unwrap(), &path).unwrap();
            let b = d_f_jump(&quartic(1).unwrap(), &path).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn d_f_ito_requires_derivatives() {
        let path = jump_diffusion(0);
        let f = crate::model::catalog::power_abs(1, 1.0).unwrap();
        assert!(matches!(d_f_ito(&f, &path), Err(Error::MissingDerivative(_))));
    }

    #[test]
    fn c_f_quartic_fixture() {
        let path = one_jump(1.0, 1.0, 16);
        let c = c_f(&quartic(1).unwrap(), &path).unwrap();
        assert_eq!(c.at(7)[0], 0.0);
        let x_pre = path.jumps[0].x_pre[0];
        let fx = 4.0 * (1.0f64).powi(3);
        assert!(x_pre.is_finite());
        assert!((c.terminal()[0] - 0.5 * (fx * fx + fx * fx)).abs() < 1e-12);
        assert!((c.terminal()[0] - 16.0).abs() < 1e-12);
    }

    struct ZxSquared;
    impl Kernel for ZxSquared {
        fn eval(&self, _t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = z[0] * x[0] * x[0];
        }
        fn derivatives(&self) -> Derivatives {
            Derivatives {
                grad_x: true,
                grad_z: true,
                hess_x: false,
            }
        }
        fn grad_x(&self, _t: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = 2.0 * z[0] * x[0];
        }
        fn grad_z(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = x[0] * x[0];
        }
    }

    fn zx_squared() -> TestFunction {
        let meta = FunctionMeta {
            parity: vec![Parity::Even],
            growth: 2.0,
            origin_order: 2.0,
            time_holder: None,
            depends_on_z: true,
            equicontinuous_x: true,
            satisfies_k: true,
            satisfies_m1: false,
            satisfies_m2: true,
            satisfies_m2prime: false,
        };
        TestFunction::new("z*x^2", 1, 1, meta, Arc::new(ZxSquared)).unwrap()
    }

    #[test]
    fn c_f_z_dependence() {
        let model = ModelSpec::builder(1, 1)
            .sigma(vec![1.0])
            .jumps(JumpSpec::scheduled(vec![ScheduledJump::new(0.5, vec![1.0])]))
            .build()
            .unwrap();
        let mut path = simulate_path(&model, &TimeGrid::new(1.0, 4).unwrap(), 0).unwrap();
        path.jumps[0].x_pre = vec![0.0];
        let c = c_f(&zx_squared(), &path).unwrap();
        assert!((c.terminal()[0] - 0.5).abs() < 1e-15);
    }

    /// The conditional variance written as the four-fold sum over
    /// `(j, j′, k)` of the `σ∇f` products.
    fn c_direct(f: &TestFunction, path: &PathRecord) -> f64 {
        let (d, m) = (path.d, path.m);
        let mut total = 0.0;
        for j in &path.jumps {
            let mut fx = vec![0.0; d];
            let mut fz = vec![0.0; d];
            f.grad_x(j.time, &j.x_pre, &j.size, &mut fx).unwrap();
            f.grad_z(j.time, &j.x_pre, &j.size, &mut fz).unwrap();
            for a in 0..d {
                for b in 0..d {
                    for k in 0..m {
                        let pre = j.sigma_pre[a * m + k] * j.sigma_pre[b * m + k];
                        let post = j.sigma_post[a * m + k] * j.sigma_post[b * m + k];
                        total += 0.5
                            * ((pre + post) * fx[a] * fx[b] - pre * (fx[a] * fz[b] + fz[a] * fx[b])
                                + pre * fz[a] * fz[b]);
                    }
                }
            }
        }
        total
    }

    #[test]
    fn c_f_matches_direct_sum() {
        let path = jump_diffusion(7);
        assert!(!path.jumps.is_empty());
        for f in [quartic(1).unwrap(), zx_squared()] {
            let c = c_f(&f, &path).unwrap();
            let want = c_direct(&f, &path);
            assert!((c.terminal()[0] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn f_process_zero_without_jumps() {
        let bm = simulate_path(&ModelSpec::brownian(1, 1.0), &TimeGrid::new(1.0, 8).unwrap(), 0).unwrap();
        let draw = simulate_f(&quartic(1).unwrap(), &bm, 5).unwrap();
        assert!(draw.series.values.iter().all(|v| *v == 0.0));
        assert!(draw.kappa.is_empty());
    }

    #[test]
    fn f_process_moments() {
        let path = one_jump(1.0, 1.0, 16);
        let sampler = FSampler::new(&quartic(1).unwrap(), &path).unwrap();
        let mut rng = stream(11, Stream::FLimit);
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let mut o = [0.0];
            sampler.sample_terminal(&mut rng, &mut o);
            s1 += o[0];
            s2 += o[0] * o[0];
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 * (16.0 / n as f64).sqrt());
        assert!((var / 16.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn f_draw_records_variables() {
        let path = one_jump(1.0, 1.0, 16);
        let draw = simulate_f(&quartic(1).unwrap(), &path, 2).unwrap();
        assert_eq!(draw.kappa.len(), 1);
        let (k, u, up) = (draw.kappa[0], draw.u[0], draw.u_prime[0]);
        let want = k.sqrt() * u * 4.0 + (1.0 - k).sqrt() * up * 4.0;
        assert!((draw.series.terminal()[0] - want).abs() < 1e-12);
        assert_eq!(draw.series.at(7)[0], 0.0);
    }
}
