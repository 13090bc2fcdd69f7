//! Gauss–Hermite rules for expectations under the standard normal law.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Largest one-dimensional rule; beyond it the Christoffel weights of the
/// outermost nodes underflow.
pub const MAX_NODES: usize = 256;

/// Nodes per axis used when nothing else is requested.
pub const DEFAULT_NODES_1D: usize = 64;
pub const DEFAULT_NODES_TENSOR: usize = 20;
/// Sample count of the Monte Carlo replacement for `m > 3`.
pub const MONTE_CARLO_SAMPLES: usize = 100_000;
const MONTE_CARLO_SEED: u64 = 0x5EED;

/// Nodes and weights approximating `E[g(U)]`, `U ~ N(0, I_dim)`.
///
/// Weights are normalized to sum to one. Nodes are stored row-major, one
/// `dim`-vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    per_axis: Option<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Orthonormal probabilists' Hermite polynomials `p_0..p_{n}` at `x`,
/// returning `(p_n, p_{n-1}, Σ_{k<n} p_k²)`.
fn hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sq = 0.0;
    for k in 0..n {
        sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sq)
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let x = eig.eigenvalues.iter().copied().collect();
    let w = (0..n).map(|k| 2.0 * eig.eigenvectors[(0, k)].powi(2)).collect();
    (x, w)
}

/// The half-normal density `2φ(u)` on `[0, 40]` as a discrete measure,
/// without the points where it underflows.
fn half_normal_discretization() -> (Vec<f64>, Vec<f64>) {
    const PANELS: usize = 400;
    const UPPER: f64 = 40.0;
    let (gx, gw) = gauss_legendre(24);
    let h = UPPER / PANELS as f64;
    let c = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut xs = Vec::with_capacity(PANELS * gx.len());
    let mut ws = Vec::with_capacity(PANELS * gx.len());
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            let u = mid + 0.5 * h * x;
            let weight = 0.5 * h * w * c * (-0.5 * u * u).exp();
            if weight > 1e-280 {
                xs.push(u);
                ws.push(weight);
            }
        }
    }
    (xs, ws)
}

/// Three-term recurrence coefficients `(α_k, β_k)`, `k < n`, of the
/// polynomials orthogonal for the discrete measure `(x, w)`, computed with
/// normalized polynomials.
fn stieltjes(x: &[f64], w: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mass: f64 = w.iter().sum();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![1.0 / mass.sqrt(); x.len()];
    beta.push(mass);
    for k in 0..n {
        let a: f64 = (0..x.len()).map(|i| w[i] * x[i] * cur[i] * cur[i]).sum();
        alpha.push(a);
        if k + 1 == n {
            break;
        }
        let b_prev = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let mut next: Vec<f64> = (0..x.len())
            .map(|i| (x[i] - a) * cur[i] - b_prev * prev[i])
            .collect();
        let norm: f64 = (0..x.len()).map(|i| w[i] * next[i] * next[i]).sum();
        let inv = 1.0 / norm.sqrt();
        next.iter_mut().for_each(|v| *v *= inv);
        beta.push(norm);
        prev = std::mem::replace(&mut cur, next);
    }
    (alpha, beta)
}

/// For the orthonormal polynomials of the recurrence `(α, β)` of length
/// `n`: `(p_n(x), p_n'(x), Σ_{k<n} p_k(x)²)`, with `p_n` scaled as if
/// `β_n = 1`.
fn orthonormal_eval(alpha: &[f64], beta: &[f64], x: f64) -> (f64, f64, f64) {
    let n = alpha.len();
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sq = 0.0;
    for k in 0..n {
        sq += p * p;
        let b_prev = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let b_next = if k + 1 < n { beta[k + 1].sqrt() } else { 1.0 };
        let p_next = ((x - alpha[k]) * p - b_prev * p_prev) / b_next;
        let d_next = ((x - alpha[k]) * d + p - b_prev * d_prev) / b_next;
        (p_prev, p) = (p, p_next);
        (d_prev, d) = (d, d_next);
    }
    (p, d, sq)
}

impl QuadratureRule {
    /// One-dimensional `n`-point Gauss–Hermite rule, exact for polynomials
    /// of degree `≤ 2n − 1`.
    ///
    /// Nodes start from the eigenvalues of the Jacobi matrix and are
    /// polished by Newton steps on the three-term recurrence; weights are
    /// `1 / Σ_k p_k(x_i)²`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(Error::InvalidQuadrature(format!(
                "node count must be in 1..={MAX_NODES}, got {n}"
            )));
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut x: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        x.sort_by(f64::total_cmp);
        for xi in x.iter_mut() {
            for _ in 0..4 {
                let (p, q, _) = hermite(n, *xi);
                let dp = (n as f64).sqrt() * q;
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                *xi -= step;
                if step.abs() <= 1e-16 * xi.abs().max(1.0) {
                    break;
                }
            }
        }
        for i in 0..n / 2 {
            let a = 0.5 * (x[n - 1 - i] - x[i]);
            x[i] = -a;
            x[n - 1 - i] = a;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let mut w: Vec<f64> = x.iter().map(|&xi| 1.0 / hermite(n, xi).2).collect();
        for i in 0..n / 2 {
            let a = 0.5 * (w[i] + w[n - 1 - i]);
            w[i] = a;
            w[n - 1 - i] = a;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        Ok(Self {
            dim: 1,
            per_axis: Some(n),
            nodes: x,
            weights: w,
        })
    }

    /// One-dimensional `n`-point rule (`n` even) built by mirroring the
    /// `n/2`-point Gauss rule of the half-normal density on `[0, ∞)`.
    ///
    /// It is exact for every function that is a polynomial of degree
    /// `≤ n − 1` on each half-line, so kinks at the origin such as `|x|^r`
    /// with odd `r` are integrated without the `O(1/n)` error of
    /// Gauss–Hermite. Recurrence coefficients come from the Stieltjes
    /// procedure on a discretization of the half-normal density by
    /// composite Gauss–Legendre panels.
    pub fn half_range(n: usize) -> Result<Self> {
        if n == 0 || n % 2 == 1 || n > MAX_NODES {
            return Err(Error::InvalidQuadrature(format!(
                "half-range rule needs an even node count in 2..={MAX_NODES}, got {n}"
            )));
        }
        let half = n / 2;
        let (px, pw) = half_normal_discretization();
        let (alpha, beta) = stieltjes(&px, &pw, half);
        let jacobi = DMatrix::from_fn(half, half, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j || j + 1 == i {
                beta[i.max(j)].sqrt()
            } else {
                0.0
            }
        });
        let mut x: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        x.sort_by(f64::total_cmp);
        let mut pairs = Vec::with_capacity(half);
        for mut xi in x {
            for _ in 0..4 {
                let (p, dp, _) = orthonormal_eval(&alpha, &beta, xi);
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                xi -= step;
                if step.abs() <= 1e-16 * xi.abs().max(1.0) {
                    break;
                }
            }
            pairs.push((xi, 1.0 / orthonormal_eval(&alpha, &beta, xi).2));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &(x, w) in pairs.iter().rev() {
            nodes.push(-x);
            weights.push(0.5 * w / total);
        }
        for &(x, w) in &pairs {
            nodes.push(x);
            weights.push(0.5 * w / total);
        }
        Ok(Self {
            dim: 1,
            per_axis: Some(n),
            nodes,
            weights,
        })
    }

    /// Tensor product of `dim` copies of the `n`-point rule.
    pub fn tensor(n: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidQuadrature("dimension must be positive".into()));
        }
        let base = Self::gauss_hermite(n)?;
        let count = n
            .checked_pow(dim as u32)
            .filter(|c| *c <= 16_777_216)
            .ok_or_else(|| Error::InvalidQuadrature(format!("{n}^{dim} nodes is too many")))?;
        let mut nodes = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let mut w = 1.0;
            for &i in &idx {
                nodes.push(base.nodes[i]);
                w *= base.weights[i];
            }
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Self {
            dim,
            per_axis: Some(n),
            nodes,
            weights,
        })
    }

    /// Equal-weight antithetic sample of `N(0, I_dim)`: `samples / 2`
    /// draws and their negatives, so odd integrands vanish exactly.
    pub fn monte_carlo(samples: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || samples < 2 {
            return Err(Error::InvalidQuadrature(
                "Monte Carlo rule needs dim ≥ 1 and at least 2 samples".into(),
            ));
        }
        let half = samples / 2;
        let mut rng = stream(seed, Stream::Quadrature);
        let mut nodes = Vec::with_capacity(2 * half * dim);
        for _ in 0..half {
            for _ in 0..dim {
                nodes.push(StandardNormal.sample(&mut rng));
            }
        }
        let mirrored: Vec<f64> = nodes.iter().map(|v: &f64| -v).collect();
        nodes.extend(mirrored);
        Ok(Self {
            dim,
            per_axis: None,
            nodes,
            weights: vec![1.0 / (2 * half) as f64; 2 * half],
        })
    }

    /// The 64-node half-range rule for `m = 1`, a 20-per-axis
    /// Gauss–Hermite tensor rule for `m ∈ {2, 3}`, a fixed-seed Monte Carlo
    /// rule with 10^5 samples beyond.
    pub fn default_for(m: usize) -> Result<Self> {
        match m {
            0 => Err(Error::InvalidQuadrature("dimension must be positive".into())),
            1 => Self::half_range(DEFAULT_NODES_1D),
            2 | 3 => Self::tensor(DEFAULT_NODES_TENSOR, m),
            _ => Self::monte_carlo(MONTE_CARLO_SAMPLES, m, MONTE_CARLO_SEED),
        }
    }

    /// Like [`default_for`](Self::default_for) with `n` nodes per axis;
    /// for `m = 1` an odd `n` selects Gauss–Hermite.
    pub fn with_nodes(m: usize, n: usize) -> Result<Self> {
        match m {
            0 => Err(Error::InvalidQuadrature("dimension must be positive".into())),
            1 if n.is_multiple_of(2) => Self::half_range(n),
            1 => Self::gauss_hermite(n),
            2 | 3 => Self::tensor(n, m),
            _ => Self::monte_carlo(MONTE_CARLO_SAMPLES, m, MONTE_CARLO_SEED),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `None` for Monte Carlo rules.
    pub fn per_axis(&self) -> Option<usize> {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i g(node_i)`.
    pub fn integrate<G: FnMut(&[f64]) -> f64>(&self, mut g: G) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * g(self.node(i))).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(f64::from).product()
    }

    fn gaussian_moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else if k == 0 {
            1.0
        } else {
            double_factorial(k - 1)
        }
    }

    /// `E|U|^k = 2^{k/2} Γ((k+1)/2) / √π`.
    fn abs_moment(k: u32) -> f64 {
        if k.is_multiple_of(2) {
            gaussian_moment(k)
        } else {
            // Γ((k+1)/2) = ((k−1)/2)! for odd k
            let fact: f64 = (1..=(k - 1) / 2).map(f64::from).product();
            2f64.powf(k as f64 / 2.0) * fact / std::f64::consts::PI.sqrt()
        }
    }

    /// Trapezoid rule on [-40, 40] against the normal density.
    fn trapezoid<G: Fn(f64) -> f64>(g: G) -> f64 {
        let n = 400_000;
        let h = 80.0 / n as f64;
        let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        (0..=n)
            .map(|i| {
                let x = -40.0 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * g(x) * c * (-0.5 * x * x).exp()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn weights_positive_and_normalized() {
        for n in [1, 2, 5, 64, 200, 256] {
            let r = QuadratureRule::gauss_hermite(n).unwrap();
            assert!(r.weights().iter().all(|w| *w > 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert!(QuadratureRule::gauss_hermite(257).is_err());
        assert!(QuadratureRule::gauss_hermite(0).is_err());
    }

    #[test]
    fn polynomial_exactness() {
        for n in [1usize, 2, 3, 8, 20] {
            let r = QuadratureRule::gauss_hermite(n).unwrap();
            for k in 0..(2 * n as u32) {
                let got = r.integrate(|u| u[0].powi(k as i32));
                let want = gaussian_moment(k);
                let scale = abs_moment(k);
                assert!(
                    (got - want).abs() <= 1e-12 * scale.max(1.0),
                    "n={n} k={k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn known_small_rule() {
        let r = QuadratureRule::gauss_hermite(3).unwrap();
        let s3 = 3f64.sqrt();
        assert!((r.node(0)[0] + s3).abs() < 1e-15 && (r.node(2)[0] - s3).abs() < 1e-15);
        assert!((r.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn high_order_moments_with_64_nodes() {
        for r in [
            QuadratureRule::gauss_hermite(64).unwrap(),
            QuadratureRule::default_for(1).unwrap(),
        ] {
            for k in 0..=8u32 {
                let got = r.integrate(|u| u[0].powi(k as i32));
                assert!((got - gaussian_moment(k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn absolute_value_against_trapezoid_oracle() {
        let oracle = trapezoid(|x| (2.0 * x).abs());
        assert!((oracle - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-8);
        let r = QuadratureRule::half_range(64).unwrap();
        let got = r.integrate(|u| (2.0 * u[0]).abs());
        assert!((got - oracle).abs() < 1e-6);
        // Gauss–Hermite only converges like 1/n across the kink
        let gh = QuadratureRule::gauss_hermite(64).unwrap();
        let err = (gh.integrate(|u| (2.0 * u[0]).abs()) - oracle).abs();
        assert!(err > 1e-3 && err < 2e-2);
    }

    #[test]
    fn half_range_rule() {
        assert!(QuadratureRule::half_range(3).is_err());
        for n in [2usize, 8, 64, 256] {
            let r = QuadratureRule::half_range(n).unwrap();
            assert!(r.weights().iter().all(|w| *w > 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for k in 0..(n as u32).min(40) {
                let got = r.integrate(|u| u[0].abs().powi(k as i32));
                let want = abs_moment(k);
                assert!((got - want).abs() <= 1e-12 * want.max(1.0), "n={n} k={k}: {got} vs {want}");
                let odd = r.integrate(|u| u[0].powi(k as i32));
                assert!((odd - gaussian_moment(k)).abs() <= 1e-12 * want.max(1.0));
            }
        }
        let r = QuadratureRule::half_range(64).unwrap();
        let oracle = trapezoid(|x| x.abs().powf(1.5));
        assert!((r.integrate(|u| u[0].abs().powf(1.5)) - oracle).abs() < 1e-6);
    }

    #[test]
    fn smooth_function_against_trapezoid_oracle() {
        let oracle = trapezoid(|x| x.cos() * x * x);
        let r = QuadratureRule::gauss_hermite(64).unwrap();
        assert!((r.integrate(|u| u[0].cos() * u[0] * u[0]) - oracle).abs() < 1e-10);
    }

    #[test]
    fn tensor_rule_moments() {
        let r = QuadratureRule::tensor(6, 3).unwrap();
        assert_eq!(r.len(), 216);
        let got = r.integrate(|u| u[0] * u[0] * u[1].powi(4) * u[2].powi(2));
        assert!((got - 3.0).abs() < 1e-12);
        assert!(r.integrate(|u| u[0] * u[1]).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_rule() {
        let r = QuadratureRule::monte_carlo(100_000, 4, 1).unwrap();
        assert_eq!(r.per_axis(), None);
        assert!(r.integrate(|u| u[0] * u[1] * u[3]).abs() < 1e-12);
        assert!((r.integrate(|u| u[2] * u[2]) - 1.0).abs() < 0.02);
        assert_eq!(QuadratureRule::default_for(5).unwrap().dim(), 5);
    }
}
