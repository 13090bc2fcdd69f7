//! Numerical spot checks of declared test-function metadata.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::function::{Parity, TestFunction};
use crate::rng::{stream, Stream};

pub const PARITY_PROBES: usize = 1000;
pub const PARITY_TOL: f64 = 1e-12;
pub const DERIVATIVE_PROBES: usize = 100;
pub const DERIVATIVE_RTOL: f64 = 1e-5;
pub const ORIGIN_TOL: f64 = 1e-12;

struct Probe {
    t: f64,
    z: Vec<f64>,
    x: Vec<f64>,
}

fn probes(d: usize, count: usize, salt: u64) -> Vec<Probe> {
    let mut rng = stream(0x9E0B_E000 ^ salt, Stream::Probe);
    let scales = [0.3, 1.0, 2.5];
    (0..count)
        .map(|i| {
            let s = scales[i % scales.len()];
            let mut normal = |scale: f64| -> Vec<f64> {
                (0..d)
                    .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect()
            };
            let z = normal(1.5);
            let x = normal(s);
            Probe {
                t: 2.0 * rng.random::<f64>(),
                z,
                x,
            }
        })
        .collect()
}

/// Checks every component with declared even/odd parity.
pub fn check_parity(f: &TestFunction) -> Result<(), String> {
    let parity = &f.meta().parity;
    if parity.iter().all(|p| *p == Parity::Neither) {
        return Ok(());
    }
    let mut a = vec![0.0; f.q()];
    let mut b = vec![0.0; f.q()];
    for p in probes(f.d(), PARITY_PROBES, 1) {
        let neg: Vec<f64> = p.x.iter().map(|v| -v).collect();
        f.eval(p.t, &p.z, &p.x, &mut a);
        f.eval(p.t, &p.z, &neg, &mut b);
        for (j, par) in parity.iter().enumerate() {
            let expected = match par {
                Parity::Even => b[j],
                Parity::Odd => -b[j],
                Parity::Neither => continue,
            };
            if (a[j] - expected).abs() > PARITY_TOL * a[j].abs().max(1.0) {
                return Err(format!(
                    "component {j} declared {par:?} but f(x)={} and f(-x)={} at x={:?}",
                    a[j], b[j], p.x
                ));
            }
        }
    }
    Ok(())
}

/// Spot-checks `f(t, z, 0) = 0`.
pub fn check_vanishes_at_origin(f: &TestFunction) -> Result<(), String> {
    let zero = vec![0.0; f.d()];
    let mut out = vec![0.0; f.q()];
    for p in probes(f.d(), DERIVATIVE_PROBES, 2) {
        f.eval(p.t, &p.z, &zero, &mut out);
        if out.iter().any(|v| v.abs() > ORIGIN_TOL) {
            return Err(format!("f(t={:.3}, z, 0) = {out:?}", p.t));
        }
    }
    Ok(())
}

fn close(analytic: f64, fd: f64) -> bool {
    (analytic - fd).abs() <= DERIVATIVE_RTOL * analytic.abs().max(fd.abs()).max(1.0)
}

/// Compares supplied derivatives with central finite differences
/// (step `1e-6·(1 + ‖·‖)`).
pub fn check_derivatives(f: &TestFunction) -> Result<(), String> {
    let derivs = f.derivatives();
    let (d, q) = (f.d(), f.q());
    let mut plus = vec![0.0; q];
    let mut minus = vec![0.0; q];
    let mut analytic = vec![0.0; q * d];
    let mut hess = vec![0.0; q * d * d];
    let mut gp = vec![0.0; q * d];
    let mut gm = vec![0.0; q * d];
    for p in probes(d, DERIVATIVE_PROBES, 3) {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if derivs.grad_x {
            let h = 1e-6 * (1.0 + norm(&p.x));
            f.kernel().grad_x(p.t, &p.z, &p.x, &mut analytic);
            for k in 0..d {
                let mut xp = p.x.clone();
                let mut xm = p.x.clone();
                xp[k] += h;
                xm[k] -= h;
                f.eval(p.t, &p.z, &xp, &mut plus);
                f.eval(p.t, &p.z, &xm, &mut minus);
                for j in 0..q {
                    let fd = (plus[j] - minus[j]) / (2.0 * h);
                    if !close(analytic[j * d + k], fd) {
                        return Err(format!(
                            "∂f^{j}/∂x_{k} = {} but finite difference gives {fd} at x={:?}",
                            analytic[j * d + k],
                            p.x
                        ));
                    }
                }
            }
        }
        if derivs.grad_z {
            let h = 1e-6 * (1.0 + norm(&p.z));
            f.kernel().grad_z(p.t, &p.z, &p.x, &mut analytic);
            for k in 0..d {
                let mut zp = p.z.clone();
                let mut zm = p.z.clone();
                zp[k] += h;
                zm[k] -= h;
                f.eval(p.t, &zp, &p.x, &mut plus);
                f.eval(p.t, &zm, &p.x, &mut minus);
                for j in 0..q {
                    let fd = (plus[j] - minus[j]) / (2.0 * h);
                    if !close(analytic[j * d + k], fd) {
                        return Err(format!(
                            "∂f^{j}/∂z_{k} = {} but finite difference gives {fd}",
                            analytic[j * d + k]
                        ));
                    }
                }
            }
        }
        if derivs.hess_x {
            let h = 1e-6 * (1.0 + norm(&p.x));
            f.kernel().hess_x(p.t, &p.z, &p.x, &mut hess);
            for l in 0..d {
                let mut xp = p.x.clone();
                let mut xm = p.x.clone();
                xp[l] += h;
                xm[l] -= h;
                if derivs.grad_x {
                    f.kernel().grad_x(p.t, &p.z, &xp, &mut gp);
                    f.kernel().grad_x(p.t, &p.z, &xm, &mut gm);
                } else {
                    // second difference of f along each pair is only needed on the diagonal
                    // when no gradient is available
                    f.eval(p.t, &p.z, &xp, &mut plus);
                    f.eval(p.t, &p.z, &xm, &mut minus);
                    let mut mid = vec![0.0; q];
                    f.eval(p.t, &p.z, &p.x, &mut mid);
                    for j in 0..q {
                        let fd = (plus[j] - 2.0 * mid[j] + minus[j]) / (h * h);
                        let a = hess[(j * d + l) * d + l];
                        if (a - fd).abs() > 1e-3 * a.abs().max(1.0) {
                            return Err(format!("∂²f^{j}/∂x_{l}² = {a} but finite difference gives {fd}"));
                        }
                    }
                    continue;
                }
                for j in 0..q {
                    for k in 0..d {
                        let fd = (gp[j * d + k] - gm[j * d + k]) / (2.0 * h);
                        let a = hess[(j * d + k) * d + l];
                        if !close(a, fd) {
                            return Err(format!(
                                "∂²f^{j}/∂x_{k}∂x_{l} = {a} but finite difference gives {fd} at x={:?}",
                                p.x
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{build_catalog, power_abs};
    use crate::model::function::{FunctionMeta, Kernel};
    use std::sync::Arc;

    #[test]
    fn catalog_metadata_is_consistent() {
        for d in [1, 2, 3] {
            for f in build_catalog(d).unwrap() {
                check_parity(&f).unwrap_or_else(|e| panic!("{}: {e}", f.name()));
                check_derivatives(&f).unwrap_or_else(|e| panic!("{}: {e}", f.name()));
                let vanishes = check_vanishes_at_origin(&f).is_ok();
                assert_eq!(vanishes, f.meta().origin_order > 0.0, "{}", f.name());
            }
        }
        for r in [1.5, 2.5, 3.5] {
            check_derivatives(&power_abs(2, r).unwrap()).unwrap();
        }
    }

    struct Shifted;
    impl Kernel for Shifted {
        fn eval(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = (x[0] - 0.1).powi(2);
        }
    }

    #[test]
    fn detects_false_parity() {
        let meta = FunctionMeta {
            parity: vec![Parity::Even],
            growth: 2.0,
            origin_order: 0.0,
            time_holder: None,
            depends_on_z: false,
            equicontinuous_x: true,
            satisfies_k: true,
            satisfies_m1: false,
            satisfies_m2: true,
            satisfies_m2prime: false,
        };
        let f = TestFunction::new("shifted", 1, 1, meta, Arc::new(Shifted)).unwrap();
        assert!(check_parity(&f).is_err());
    }

    struct WrongGradient;
    impl Kernel for WrongGradient {
        fn eval(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = x[0].powi(3);
        }
        fn derivatives(&self) -> crate::model::function::Derivatives {
            crate::model::function::Derivatives {
                grad_x: true,
                ..Default::default()
            }
        }
        fn grad_x(&self, _t: f64, _z: &[f64], x: &[f64], out: &mut [f64]) {
            out[0] = 2.0 * x[0] * x[0];
        }
    }

    #[test]
    fn detects_wrong_gradient() {
        let meta = FunctionMeta {
            parity: vec![Parity::Odd],
            growth: 3.0,
            origin_order: 3.0,
            time_holder: None,
            depends_on_z: false,
            equicontinuous_x: true,
            satisfies_k: true,
            satisfies_m1: false,
            satisfies_m2: true,
            satisfies_m2prime: false,
        };
        let f = TestFunction::new("cube", 1, 1, meta, Arc::new(WrongGradient)).unwrap();
        assert!(check_derivatives(&f).is_err());
    }
}
