//! Real-root extraction: safeguarded Newton inside known brackets, grid
//! scanning with critical-point detection for close pairs, and a colleague
//! matrix fallback for polynomials given in the Chebyshev basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::cheb::{cheb_t, Jet};

/// A located real root and its multiplicity (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub x: f64,
    pub multiplicity: u8,
}

const MAX_ITER: usize = 300;

/// Root of `f` in (lo, hi), given that f(lo) has sign `sign_lo` and f(hi)
/// the opposite sign. `f` may return any positive multiple of the true
/// function; only the sign and the ratio v/d1 are used.
pub fn refine_bracketed(f: impl Fn(f64) -> Jet, lo: f64, hi: f64, sign_lo: f64) -> f64 {
    refine_with(
        |x| {
            let j = f(x);
            (j.v, j.d1)
        },
        lo,
        hi,
        sign_lo,
    )
}

/// Critical point of `f` in (lo, hi) (root of f′ using f″ for Newton).
pub fn refine_critical(f: impl Fn(f64) -> Jet, lo: f64, hi: f64, sign_lo: f64) -> f64 {
    refine_with(
        |x| {
            let j = f(x);
            (j.d1, j.d2)
        },
        lo,
        hi,
        sign_lo,
    )
}

fn refine_with(g: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64, sign_lo: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut x = 0.5 * (lo + hi);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (v, d) = g(x);
        if v == 0.0 {
            return x;
        }
        if v.signum() == sign_lo {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= 2.0 * f64::EPSILON * x.abs().max(1e-300) {
            return x;
        }
        let newton = x - v / d;
        let inside = newton.is_finite() && newton > lo && newton < hi;
        let step = (newton - x).abs();
        if inside && step < 0.5 * last_step.max(width) {
            last_step = step;
            x = newton;
            if step <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                // one more Newton step for the last bit
                let (v, d) = g(x);
                let polished = x - v / d;
                if polished.is_finite() && (polished - x).abs() <= step {
                    return polished;
                }
                return x;
            }
        } else {
            last_step = width;
            x = 0.5 * (lo + hi);
        }
    }
    x
}

/// All real roots of `f` on the span of `grid` (sorted ascending).
///
/// Sign changes between neighbouring grid points give simple roots. Where
/// f keeps its sign but f′ changes sign, the cell is searched for a
/// critical point; a sign flip there yields two roots, and a critical
/// value indistinguishable from zero (pair separation below
/// `double_tol`·max(1, |x|)) yields a double root.
pub fn scan_roots(f: impl Fn(f64) -> Jet, grid: &[f64], double_tol: f64) -> Vec<RealRoot> {
    let vals: Vec<Jet> = grid.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa.v == 0.0 {
            push_root(&mut roots, a, &f, double_tol);
            continue;
        }
        if fb.v == 0.0 {
            continue;
        }
        if fa.v.signum() != fb.v.signum() {
            let x = refine_bracketed(&f, a, b, fa.v.signum());
            roots.push(RealRoot { x, multiplicity: 1 });
            continue;
        }
        if fa.d1 != 0.0 && fb.d1 != 0.0 && fa.d1.signum() != fb.d1.signum() {
            // f moves towards zero at a and away at b: candidate pair
            if fa.d1.signum() == fa.v.signum() {
                continue;
            }
            let xc = refine_critical(&f, a, b, fa.d1.signum());
            let jc = f(xc);
            if jc.v == 0.0 || jc.v.signum() != fa.v.signum() {
                let sep = (2.0 * jc.v.abs() / jc.d2.abs()).sqrt();
                if sep <= double_tol * xc.abs().max(1.0) {
                    roots.push(RealRoot {
                        x: xc,
                        multiplicity: 2,
                    });
                } else {
                    let x1 = refine_bracketed(&f, a, xc, fa.v.signum());
                    let x2 = refine_bracketed(&f, xc, b, jc.v.signum());
                    roots.push(RealRoot {
                        x: x1,
                        multiplicity: 1,
                    });
                    roots.push(RealRoot {
                        x: x2,
                        multiplicity: 1,
                    });
                }
            } else {
                let sep = (2.0 * jc.v.abs() / jc.d2.abs()).sqrt();
                if sep <= double_tol * xc.abs().max(1.0) {
                    roots.push(RealRoot {
                        x: xc,
                        multiplicity: 2,
                    });
                }
            }
        }
    }
    roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    roots
}

fn push_root(roots: &mut Vec<RealRoot>, x: f64, f: &impl Fn(f64) -> Jet, double_tol: f64) {
    let j = f(x);
    let multiplicity = if j.d1.abs() <= double_tol * j.d2.abs() {
        2
    } else {
        1
    };
    roots.push(RealRoot { x, multiplicity });
}

/// Coefficients c₀..c_n of the degree-n interpolant of `f` on [a, b] in the
/// Chebyshev basis of the mapped variable u = (2x − a − b)/(b − a).
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, degree: usize, a: f64, b: f64) -> Vec<f64> {
    let m = degree + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos())
        .collect();
    let samples: Vec<f64> = nodes
        .iter()
        .map(|&u| f(0.5 * (b - a) * u + 0.5 * (a + b)))
        .collect();
    (0..m)
        .map(|j| {
            let s: f64 = nodes
                .iter()
                .zip(&samples)
                .map(|(&u, &y)| y * cheb_t(j, u))
                .sum();
            let w = if j == 0 { 1.0 } else { 2.0 };
            w * s / m as f64
        })
        .collect()
}

/// Eigenvalues of the colleague matrix of ∑ c_j T_j(u), i.e. its roots in u.
pub fn colleague_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    match n {
        0 => Vec::new(),
        1 => vec![Complex64::new(-c[0] / c[1], 0.0)],
        _ => {
            let mut a = DMatrix::<f64>::zeros(n, n);
            a[(0, 1)] = 1.0;
            for i in 1..n {
                a[(i, i - 1)] = 0.5;
                if i + 1 < n {
                    a[(i, i + 1)] = 0.5;
                }
            }
            for j in 0..n {
                a[(n - 1, j)] -= c[j] / (2.0 * c[n]);
            }
            a.complex_eigenvalues().iter().copied().collect()
        }
    }
}
