//! The smooth plateau `ψ`: equal to 1 on `[-1, 1]`, 0 outside `(-2, 2)`,
//! and `C^∞` everywhere. On `1 < |y| < 2` it is the ratio
//! `g(2-|y|) / (g(2-|y|) + g(|y|-1))` with `g(s) = exp(-1/s)`.

fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn g1(s: f64) -> f64 {
    if s > 0.0 {
        g(s) / (s * s)
    } else {
        0.0
    }
}

fn g2(s: f64) -> f64 {
    if s > 0.0 {
        g(s) * (1.0 - 2.0 * s) / s.powi(4)
    } else {
        0.0
    }
}

/// `(ψ(y), ψ'(y), ψ''(y))`.
pub fn psi_with_derivatives(y: f64) -> (f64, f64, f64) {
    let a = y.abs();
    if a <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if a >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let (p, q) = (g(2.0 - a), g(a - 1.0));
    let (dp, dq) = (-g1(2.0 - a), g1(a - 1.0));
    let (ddp, ddq) = (g2(2.0 - a), g2(a - 1.0));
    let s = p + q;
    let ds = dp + dq;
    let num = dp * q - p * dq;
    let dnum = ddp * q - p * ddq;
    let value = p / s;
    let d1 = num / (s * s);
    let d2 = (dnum * s - 2.0 * num * ds) / (s * s * s);
    let sign = y.signum();
    (value, sign * d1, d2)
}

pub fn psi(y: f64) -> f64 {
    psi_with_derivatives(y).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        for y in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(psi(y), 1.0);
        }
        for y in [-5.0, -2.0, 2.0, 3.0] {
            assert_eq!(psi(y), 0.0);
        }
        for i in 1..100 {
            let y = 1.0 + i as f64 / 100.0;
            let v = psi(y);
            assert!((0.0..=1.0).contains(&v));
            if (10..=90).contains(&i) {
                assert!(v > 0.0 && v < 1.0);
            }
            assert!(psi(y + 0.001) <= v);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..40 {
            let y = -1.98 + i as f64 * 0.099;
            let (_, d1, d2) = psi_with_derivatives(y);
            let fd1 = (psi(y + h) - psi(y - h)) / (2.0 * h);
            let fd2 = (psi_with_derivatives(y + h).1 - psi_with_derivatives(y - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "y={y}: {d1} vs {fd1}");
            assert!((d2 - fd2).abs() < 1e-5, "y={y}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn flat_at_the_junctions() {
        for y in [1.0 + 1e-3, 2.0 - 1e-3] {
            let (_, d1, d2) = psi_with_derivatives(y);
            assert!(d1.abs() < 1e-100 && d2.abs() < 1e-100);
        }
    }
}
