//! Shared numerical kernels: adaptive quadrature, safeguarded root finding,
//! central finite differences and small dense symmetric eigenproblems.
//!
//! Everything here is dimension-agnostic plumbing; the physics lives in the
//! other modules.

use crate::error::{Error, Result};
use serde::Serialize;

/// Step size for central finite differences: `h = cbrt(eps) * max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central difference approximation of `df/dx`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = fd_step(x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central difference with an explicit step.
pub fn central_diff_h<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second difference `d²f/dx²`.
pub fn central_diff2<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    // fourth root spreads the rounding/truncation balance for second differences
    let h = f64::EPSILON.powf(0.25) * x.abs().max(1.0);
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut result_gauss = fc * WG[3];
    let mut result_kronrod = fc * WGK[7];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let fa = f(c - h * x);
        let fb = f(c + h * x);
        result_kronrod += WGK[j] * (fa + fb);
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * (fa + fb);
        }
    }
    let kron = result_kronrod * h;
    let err = ((result_kronrod - result_gauss) * h).abs();
    (kron, err)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` (a > b allowed)
/// toward the given absolute tolerance.
///
/// Worst-interval-first refinement with a hard interval cap, so unreachable
/// tolerances (below f64 noise) degrade gracefully instead of recursing.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let tol = abs_tol.max(1e-300);
    let span = hi - lo;

    struct Node {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(&f, lo, hi);
    let mut nodes = vec![Node {
        a: lo,
        b: hi,
        val,
        err,
    }];
    const MAX_INTERVALS: usize = 512;
    loop {
        let total_err: f64 = nodes.iter().map(|n| n.err).sum();
        if total_err <= tol || nodes.len() >= MAX_INTERVALS {
            break;
        }
        let worst = nodes
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if nodes[worst].b - nodes[worst].a <= 1e-13 * span {
            break;
        }
        let Node { a, b, .. } = nodes[worst];
        let c = 0.5 * (a + b);
        let (v1, e1) = gk15(&f, a, c);
        let (v2, e2) = gk15(&f, c, b);
        nodes[worst] = Node {
            a,
            b: c,
            val: v1,
            err: e1,
        };
        nodes.push(Node {
            a: c,
            b,
            val: v2,
            err: e2,
        });
    }
    sign * nodes.iter().map(|n| n.val).sum::<f64>()
}

/// Safeguarded Newton iteration on a bracketed root of a monotone function.
///
/// `f` must have opposite signs at `lo` and `hi`. Newton steps are taken from
/// a secant-estimated derivative when `df` is `None`; any step leaving the
/// bracket falls back to bisection. Convergence is declared on `|f| <= f_tol`.
pub fn solve_bracketed<F, D>(f: F, df: Option<D>, mut lo: f64, mut hi: f64, f_tol: f64) -> Result<(f64, usize)>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok((lo, 0));
    }
    if fhi == 0.0 {
        return Ok((hi, 0));
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut x = 0.5 * (lo + hi);
    for it in 1..=200 {
        let fx = f(x);
        if fx.abs() <= f_tol {
            return Ok((x, it));
        }
        // shrink the bracket
        if fx * flo < 0.0 {
            hi = x;
        } else {
            lo = x;
            flo = fx;
        }
        let slope = match &df {
            Some(d) => d(x),
            None => {
                // keep the difference step inside the bracket so the slope
                // reflects the local scale even for very narrow roots
                let h = fd_step(x).min(0.25 * (hi - lo)).max(1e-300);
                (f(x + h) - f(x - h)) / (2.0 * h)
            }
        };
        let newton = if slope != 0.0 { x - fx / slope } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= f64::EPSILON * (lo.abs() + hi.abs()) {
            return Ok((x, it));
        }
    }
    Err(Error::NoConvergence {
        what: "bracketed root solve".into(),
    })
}

/// Dense square matrix in row-major order. Sizes here are the species count,
/// so no effort is spent on anything beyond O(n³) kernels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.n, other.n);
        SquareMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Rank-one matrix `s * v ⊗ v`, bitwise symmetric.
    pub fn outer(v: &[f64], s: f64) -> SquareMatrix {
        let n = v.len();
        SquareMatrix::from_fn(n, |i, j| s * (v[i] * v[j]))
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn transpose_mul_self_diff(&self) -> f64 {
        // max |A - Aᵀ|, used in symmetry checks
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        if n == 0 {
            return vec![];
        }
        if n == 1 {
            return vec![self.data[0]];
        }
        let mut a = self.clone();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.get(i, j).abs();
                }
            }
            let scale = a.max_abs().max(1e-300);
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= 1e-18 * scale {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues()[0]
    }

    /// Singular values = |eigenvalues| for symmetric input, descending.
    pub fn sym_singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.sym_eigenvalues().iter().map(|e| e.abs()).collect();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        s
    }

    /// Restriction `Bᵀ A B` of `self` to the subspace spanned by the columns
    /// of `basis` (each entry of `basis` is one column).
    pub fn restrict(&self, basis: &[Vec<f64>]) -> SquareMatrix {
        let m = basis.len();
        let mut out = SquareMatrix::zeros(m);
        for (i, bi) in basis.iter().enumerate() {
            let abi = self.mul_vec(bi);
            for (j, bj) in basis.iter().enumerate() {
                let v: f64 = abi.iter().zip(bj).map(|(a, b)| a * b).sum();
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Orthonormal basis of the orthogonal complement of `v`, built from the
/// Householder reflection mapping `v` onto a coordinate axis. Returns `n - 1`
/// columns.
pub fn householder_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(norm > 0.0, "zero vector has no well-defined complement");
    // w = v - alpha e1 with alpha = -sign(v1) |v|, then H = I - 2 w wᵀ/|w|²
    let alpha = if v[0] >= 0.0 { -norm } else { norm };
    let mut w: Vec<f64> = v.to_vec();
    w[0] -= alpha;
    let wn2: f64 = w.iter().map(|a| a * a).sum();
    let mut cols = Vec::with_capacity(n - 1);
    for j in 1..n {
        let mut col = vec![0.0; n];
        for i in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            col[i] = e - 2.0 * w[i] * w[j] / wn2;
        }
        cols.push(col);
    }
    cols
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Polynomial in one variable, `c[0] + c[1] t + c[2] t² + ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Polynomial(vec![c])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// ∫_{t0}^{t} p(θ)/θ dθ
    pub fn integral_over_theta(&self, t0: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += if k == 0 {
                c * (t / t0).ln()
            } else {
                c * (t.powi(k as i32) - t0.powi(k as i32)) / k as f64
            };
        }
        acc
    }

    /// ∫_{t0}^{t} ∫_{t0}^{θ} p(θ')/θ' dθ' dθ
    pub fn double_integral_over_theta(&self, t0: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += if k == 0 {
                c * (t * (t / t0).ln() - t + t0)
            } else {
                let kk = k as f64;
                c * ((t.powi(k as i32 + 1) - t0.powi(k as i32 + 1)) / (kk * (kk + 1.0))
                    - t0.powi(k as i32) * (t - t0) / kk)
            };
        }
        acc
    }

    /// ∫_{t0}^{t} p(θ) dθ
    pub fn integral(&self, t0: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let kk = k as f64 + 1.0;
            acc += c * (t.powi(k as i32 + 1) - t0.powi(k as i32 + 1)) / kk;
        }
        acc
    }
}
