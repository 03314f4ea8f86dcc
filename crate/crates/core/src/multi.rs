//! Several defects: the resolvent system M·Ψ = G at the defect sites, the
//! expanded two-defect rational solution, its pole/residue inversion to the
//! time domain, and a contour-quadrature inversion for any number of defects.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homogeneous::{green_row_with, ModeTable};
use crate::lattice::{periodic_distance, Defect, DefectSet, LatticeSpec, SiteIndex};
use crate::profile::SiteProfile;
use crate::single::{green_convolution, PhiSeries, NORMALIZATION_TOL};
use crate::spectral::cheb::{cheb_t, cheb_u, cheb_u_signed, cheb_v, cheb_w, ldexp};
use crate::spectral::roots::{
    chebyshev_coefficients, colleague_roots, refine_bracketed, scan_roots, RealRoot,
};
use crate::spectral::{Jet, Scalar, ScaledJet};

/// |det M| below this is reported as a singular resolvent.
pub const RESOLVENT_DET_TOL: f64 = 1e-13;
/// Roots of the reduced two-defect denominator closer than this (relative)
/// are merged into one double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-7;

/// G̃(n, m, ε) = (1/N)∑_k e^{2πik(n−m)/N} / (ε − 2iγ cos(2πk/N)).
pub fn green_laplace(n: SiteIndex, m: SiteIndex, eps: Complex64, spec: &LatticeSpec) -> Complex64 {
    let table = ModeTable::new(spec.sites());
    green_laplace_offsets(&table, spec.gamma(), eps)[offset(n, m, spec.sites())]
}

/// G̃(n, m, ε) = [T_{N−[n−m]}(x) + T_{[n−m]}(x)] / (2iγ (x²−1) U_{N−1}(x)), x = ε/2iγ.
pub fn green_laplace_chebyshev(
    n: SiteIndex,
    m: SiteIndex,
    eps: Complex64,
    spec: &LatticeSpec,
) -> Complex64 {
    let two_ig = Complex64::new(0.0, 2.0 * spec.gamma());
    let x = eps / two_ig;
    let d = periodic_distance(n, m, spec.sites()).get();
    tau(spec.sites(), d, x) / (two_ig * band(spec.sites(), x))
}

fn offset(n: SiteIndex, m: SiteIndex, sites: usize) -> usize {
    (n.get() + sites - m.get()) % sites
}

/// G̃ for every offset n − m.
fn green_laplace_offsets(table: &ModeTable, gamma: f64, eps: Complex64) -> Vec<Complex64> {
    let inv: Vec<Complex64> = (0..table.sites())
        .map(|k| 1.0 / (eps - Complex64::new(0.0, 2.0 * gamma * table.cos(k))))
        .collect();
    table.synthesize(&inv)
}

/// T_{N−m}(x) + T_m(x).
fn tau<S: Scalar>(n: usize, m: usize, x: S) -> S {
    cheb_t(n - m, x) + cheb_t(m, x)
}

/// (x² − 1) U_{N−1}(x).
fn band<S: Scalar>(n: usize, x: S) -> S {
    (x * x - S::from_f64(1.0)) * cheb_u(n - 1, x)
}

/// M_ij = δ_ij − i q_j G̃(n_{d_i}, n_{d_j}, ε).
#[derive(Debug, Clone, PartialEq)]
pub struct DefectMatrix {
    entries: DMatrix<Complex64>,
}

impl DefectMatrix {
    pub fn new(defects: &DefectSet, spec: &LatticeSpec, eps: Complex64) -> Result<Self> {
        let table = ModeTable::new(spec.sites());
        let g = green_laplace_offsets(&table, spec.gamma(), eps);
        Self::from_offsets(defects, spec.sites(), &g)
    }

    fn from_offsets(defects: &DefectSet, sites: usize, g: &[Complex64]) -> Result<Self> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "Laplace variable sits on a band energy".into(),
            ));
        }
        let d = defects.as_slice();
        let entries = DMatrix::from_fn(d.len(), d.len(), |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            Complex64::new(delta, 0.0)
                - Complex64::new(0.0, d[j].strength) * g[offset(d[i].site, d[j].site, sites)]
        });
        Ok(DefectMatrix { entries })
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn det(&self) -> Complex64 {
        self.entries.clone().lu().determinant()
    }

    fn solve(&self, rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let lu = self.entries.clone().lu();
        let det = lu.determinant();
        if det.norm() < RESOLVENT_DET_TOL || !det.is_finite() {
            return Err(Error::SingularResolvent { det: det.norm() });
        }
        let b = nalgebra::DVector::from_vec(rhs);
        let x = lu
            .solve(&b)
            .ok_or(Error::SingularResolvent { det: det.norm() })?;
        Ok(x.iter().copied().collect())
    }
}

/// ψ̃(n_{d_k}, n₀, ε) for every defect, from M·Ψ = G.
pub fn resolvent_solve(
    defects: &DefectSet,
    spec: &LatticeSpec,
    eps: Complex64,
) -> Result<Vec<Complex64>> {
    let table = ModeTable::new(spec.sites());
    let g = green_laplace_offsets(&table, spec.gamma(), eps);
    solve_at_defects(defects, spec, &g)
}

fn solve_at_defects(
    defects: &DefectSet,
    spec: &LatticeSpec,
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    if defects.is_empty() {
        return Err(Error::InvalidArgument("no defects".into()));
    }
    let n = spec.sites();
    let m = DefectMatrix::from_offsets(defects, n, g)?;
    let rhs = defects
        .iter()
        .map(|d| g[offset(d.site, spec.n0(), n)])
        .collect();
    m.solve(rhs)
}

/// ψ̃(n, n₀, ε) = G̃(n, n₀) + ∑_k i q_k G̃(n, n_{d_k}) ψ̃(n_{d_k}, n₀) for every site.
pub fn resolvent_wavefunction(
    defects: &DefectSet,
    spec: &LatticeSpec,
    eps: Complex64,
) -> Result<Vec<Complex64>> {
    let table = ModeTable::new(spec.sites());
    let g = green_laplace_offsets(&table, spec.gamma(), eps);
    assemble(defects, spec, &g)
}

fn assemble(defects: &DefectSet, spec: &LatticeSpec, g: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = spec.sites();
    let psi_d = solve_at_defects(defects, spec, g)?;
    Ok((0..n)
        .map(|site| {
            let s = SiteIndex::new(site as i64, n);
            g[offset(s, spec.n0(), n)]
                + defects
                    .iter()
                    .zip(&psi_d)
                    .map(|(d, p)| Complex64::new(0.0, d.strength) * g[offset(s, d.site, n)] * p)
                    .sum::<Complex64>()
        })
        .collect())
}

/// The two-defect Laplace solution as rational functions of x = ε/(2iγ).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDefectRational {
    n: usize,
    gamma: f64,
    n0: SiteIndex,
    defects: [Defect; 2],
}

pub fn two_defect_rational(defects: &DefectSet, spec: &LatticeSpec) -> Result<TwoDefectRational> {
    let d = defects.as_slice();
    if d.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected two defects, got {}",
            d.len()
        )));
    }
    Ok(TwoDefectRational {
        n: spec.sites(),
        gamma: spec.gamma(),
        n0: spec.n0(),
        defects: [d[0], d[1]],
    })
}

impl TwoDefectRational {
    fn dist(&self, a: SiteIndex, b: SiteIndex) -> usize {
        periodic_distance(a, b, self.n).get()
    }

    fn c(&self, k: usize) -> f64 {
        self.defects[k].strength / (2.0 * self.gamma)
    }

    /// Q(x) = [(x²−1)U_{N−1}]² − (q₁+q₂)/(2γ)·(x²−1)U_{N−1}·[T_N+1]
    ///        − q₁q₂/(4γ²)·{[T_{N−m}+T_m]² − [T_N+1]²}, m = [n_{d₁}−n_{d₂}].
    pub fn q<S: Scalar>(&self, x: S) -> S {
        let d = band(self.n, x);
        let t0 = tau(self.n, 0, x);
        let t12 = tau(
            self.n,
            self.dist(self.defects[0].site, self.defects[1].site),
            x,
        );
        d * d
            - (d * t0).scale(self.c(0) + self.c(1))
            - (t12 * t12 - t0 * t0).scale(self.c(0) * self.c(1))
    }

    /// R_α(x) = [T_{N−[α−n]}+T_{[α−n]}]·[T_{N−[α−n₀]}+T_{[α−n₀]}]/(4γ²) for defect α.
    pub fn r<S: Scalar>(&self, alpha: usize, n: SiteIndex, x: S) -> S {
        let a = self.defects[alpha].site;
        (tau(self.n, self.dist(a, n), x) * tau(self.n, self.dist(a, self.n0), x))
            .scale(1.0 / (4.0 * self.gamma * self.gamma))
    }

    /// P_α(x) = τ_{α,n₀}·[T_N+1] − τ_{α,β}·τ_{β,n₀}, β the other defect.
    pub fn p<S: Scalar>(&self, alpha: usize, x: S) -> S {
        let (a, b) = (self.defects[alpha].site, self.defects[1 - alpha].site);
        tau(self.n, self.dist(a, self.n0), x) * tau(self.n, 0, x)
            - tau(self.n, self.dist(a, b), x) * tau(self.n, self.dist(b, self.n0), x)
    }

    /// ψ̃(n, n₀, ε) = G̃(n,n₀) − i(q₁R₁ + q₂R₂)/Q − q₁q₂/(4γ²Q)·[P₁G̃(n,d₁) + P₂G̃(n,d₂)].
    pub fn laplace_wavefunction(&self, n: SiteIndex, eps: Complex64) -> Complex64 {
        let two_ig = Complex64::new(0.0, 2.0 * self.gamma);
        let x = eps / two_ig;
        let g = |a: SiteIndex, b: SiteIndex| {
            tau(self.n, self.dist(a, b), x) / (two_ig * band(self.n, x))
        };
        let (q1, q2) = (self.defects[0].strength, self.defects[1].strength);
        let q = self.q(x);
        let r = self.r(0, n, x) * q1 + self.r(1, n, x) * q2;
        let p =
            self.p(0, x) * g(n, self.defects[0].site) + self.p(1, x) * g(n, self.defects[1].site);
        g(n, self.n0)
            - Complex64::new(0.0, 1.0) * r / q
            - p * (q1 * q2 / (4.0 * self.gamma * self.gamma)) / q
    }

    /// The factor w(x) = x²−1 (even N) or x−1 (odd N) of Q/s².
    pub fn w<S: Scalar>(&self, x: S) -> S {
        let one = S::from_f64(1.0);
        if self.n.is_multiple_of(2) {
            x * x - one
        } else {
            x - one
        }
    }

    /// Q_r with Q = s²·w·Q_r, s = 2T_{N/2} (even N) or (1+x)V_{(N−1)/2} (odd N).
    /// Degree N; its roots are −E/2γ over the spectrum of H.
    pub fn reduced_denominator<S: Scalar>(&self, x: S) -> S {
        let h = self.n / 2;
        let m = self.dist(self.defects[0].site, self.defects[1].site) as i64;
        let (c1, c2) = (self.c(0), self.c(1));
        let one = S::from_f64(1.0);
        if self.n.is_multiple_of(2) {
            let u = cheb_u(h - 1, x);
            let um = cheb_u_signed(h as i64 - m - 1, x);
            (x * x - one) * u * u
                - (cheb_t(h, x) * u).scale(c1 + c2)
                - (um * um - u * u).scale(c1 * c2)
        } else {
            let wh = cheb_w(h, x);
            (x - one) * wh * wh - (wh * cheb_v(h, x)).scale(c1 + c2)
                + (cheb_u_signed(self.n as i64 - 1 - m, x) * cheb_u_signed(m - 1, x))
                    .scale(2.0 * c1 * c2)
        }
    }

    /// n_k with ψ̃(n_{d_k}, n₀, ε) = n_k / (2iγ·w·Q_r).
    pub fn reduced_numerator<S: Scalar>(&self, k: usize, x: S) -> S {
        let h = self.n / 2;
        let (a, b) = (self.defects[k].site, self.defects[1 - k].site);
        let cb = self.c(1 - k);
        let (ma0, mab, mb0) = (
            self.dist(a, self.n0),
            self.dist(a, b),
            self.dist(b, self.n0),
        );
        let one = S::from_f64(1.0);
        if self.n.is_multiple_of(2) {
            let lead = (x * x - one) * cheb_u(h - 1, x) - cheb_t(h, x).scale(cb);
            lead * cheb_t(h - ma0, x) + (cheb_t(h - mab, x) * cheb_t(h - mb0, x)).scale(cb)
        } else {
            let lead = (x - one) * cheb_w(h, x) - cheb_v(h, x).scale(cb);
            lead * cheb_v(h - ma0, x) + (cheb_v(h - mab, x) * cheb_v(h - mb0, x)).scale(cb)
        }
    }

    /// Search half-width for the roots: 1 + (|q₁|+|q₂|)/2γ + 1.
    fn window(&self) -> f64 {
        2.0 + (self.defects[0].strength.abs() + self.defects[1].strength.abs()) / (2.0 * self.gamma)
    }

    /// Real roots of Q_r with multiplicities, which must total N.
    pub fn roots(&self) -> Result<Vec<RealRoot>> {
        let f = |x: f64| self.reduced_denominator(ScaledJet::variable(x)).mantissa();
        let roots = merge_close(scan_roots(f, &self.grid(), DOUBLE_ROOT_TOL));
        let count: usize = roots.iter().map(|r| r.multiplicity as usize).sum();
        if count == self.n {
            return Ok(roots);
        }
        let fallback = self.colleague_fallback();
        let found: usize = fallback.iter().map(|r| r.multiplicity as usize).sum();
        if found == self.n {
            Ok(fallback)
        } else {
            Err(Error::PoleCountMismatch {
                found: count,
                expected: self.n,
            })
        }
    }

    fn grid(&self) -> Vec<f64> {
        let cells = 16 * self.n;
        let span = self.window() - 1.0;
        let mut g: Vec<f64> = (0..=cells)
            .map(|j| -(PI * j as f64 / cells as f64).cos())
            .collect();
        let outer: Vec<f64> = (0..64)
            .map(|j| span * 10f64.powf(-12.0 * (1.0 - j as f64 / 63.0)))
            .collect();
        let mut left: Vec<f64> = outer.iter().rev().map(|o| -1.0 - o).collect();
        left.append(&mut g);
        left.extend(outer.iter().map(|o| 1.0 + o));
        left
    }

    fn colleague_fallback(&self) -> Vec<RealRoot> {
        let l = self.window();
        let f = |x: f64| self.reduced_denominator(x);
        let coeffs = chebyshev_coefficients(f, self.n, -l, l);
        let mut xs: Vec<f64> = colleague_roots(&coeffs)
            .iter()
            .filter(|z| z.im.abs() < 1e-6 && z.re.abs() <= 1.0 + 1e-9)
            .map(|z| {
                let x0 = l * z.re;
                let fj = |x: f64| self.reduced_denominator(ScaledJet::variable(x)).mantissa();
                polish(fj, x0, 1e-3 * l / self.n as f64)
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        merge_close(
            xs.into_iter()
                .map(|x| RealRoot { x, multiplicity: 1 })
                .collect(),
        )
    }
}

/// Newton polish inside [x0 − h, x0 + h] when a sign change brackets it.
fn polish(f: impl Fn(f64) -> Jet, x0: f64, h: f64) -> f64 {
    let (a, b) = (f(x0 - h), f(x0 + h));
    if a.v != 0.0 && b.v != 0.0 && a.v.signum() != b.v.signum() {
        refine_bracketed(&f, x0 - h, x0 + h, a.v.signum())
    } else {
        x0
    }
}

fn merge_close(roots: Vec<RealRoot>) -> Vec<RealRoot> {
    let mut out: Vec<RealRoot> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(last) = out.last_mut() {
            if last.multiplicity == 1
                && r.multiplicity == 1
                && (r.x - last.x).abs() <= DOUBLE_ROOT_TOL * r.x.abs().max(1.0)
            {
                *last = RealRoot {
                    x: 0.5 * (last.x + r.x),
                    multiplicity: 2,
                };
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// mantissa component ratio a_i/b_j restored to its true scale.
fn scaled_ratio(num: f64, num_exp: i64, den: f64, den_exp: i64) -> f64 {
    ldexp(num / den, num_exp - den_exp)
}

/// A ring with two defects, solved in the time domain by residues.
#[derive(Debug, Clone)]
pub struct TwoDefect {
    spec: LatticeSpec,
    rational: TwoDefectRational,
    roots: Vec<RealRoot>,
    /// ψ(n_{d_k}, t) = ∑_j residues[k][j] e^{2iγx_j t}.
    residues: [Vec<f64>; 2],
    phis: [PhiSeries; 2],
    table: ModeTable,
}

impl TwoDefect {
    pub fn new(spec: &LatticeSpec, defects: &DefectSet) -> Result<Self> {
        let rational = two_defect_rational(defects, spec)?;
        let table = ModeTable::new(spec.sites());
        let gamma = spec.gamma();
        let d = rational.defects;
        if d[0].strength == 0.0 && d[1].strength == 0.0 {
            return Ok(TwoDefect {
                spec: *spec,
                rational,
                roots: Vec::new(),
                residues: [Vec::new(), Vec::new()],
                phis: [PhiSeries::empty(gamma), PhiSeries::empty(gamma)],
                table,
            });
        }
        let roots = rational.roots()?;
        let residues = [0, 1].map(|k| {
            roots
                .iter()
                .map(|r| Self::residue(&rational, k, *r))
                .collect::<Vec<f64>>()
        });
        let phis = [0, 1].map(|k| {
            let iq = Complex64::new(0.0, d[k].strength);
            PhiSeries::new(
                gamma,
                roots
                    .iter()
                    .zip(&residues[k])
                    .filter(|(_, r)| **r != 0.0)
                    .map(|(root, r)| (root.x, iq * r))
                    .collect(),
            )
        });
        Ok(TwoDefect {
            spec: *spec,
            rational,
            roots,
            residues,
            phis,
            table,
        })
    }

    /// Residue of n_k/(w·Q_r) at a root of Q_r.
    fn residue(rat: &TwoDefectRational, k: usize, root: RealRoot) -> f64 {
        let xs = ScaledJet::variable(root.x);
        let num = rat.reduced_numerator(k, xs);
        if root.multiplicity == 1 {
            let den = rat.w(xs) * rat.reduced_denominator(xs);
            let (a, b) = (num.mantissa(), den.mantissa());
            return scaled_ratio(a.v, num.exponent(), b.d1, den.exponent());
        }
        // double root: 2ñ′/Q_r″ − (2/3)ñQ_r‴/Q_r″², ñ = n_k/w
        let nt = num / rat.w(xs);
        let q = rat.reduced_denominator(xs);
        let (a, b) = (nt.mantissa(), q.mantissa());
        let first = 2.0 * a.d1 / b.d2;
        let second = 2.0 / 3.0 * a.v * b.d3 / (b.d2 * b.d2);
        ldexp(first - second, nt.exponent() - q.exponent())
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn rational(&self) -> &TwoDefectRational {
        &self.rational
    }

    /// Roots of Q_r, i.e. −E/2γ over the spectrum.
    pub fn roots(&self) -> &[RealRoot] {
        &self.roots
    }

    /// Φ_k(t) = i q_k ψ(n_{d_k}, t).
    pub fn phi(&self, k: usize) -> &PhiSeries {
        &self.phis[k]
    }

    /// ψ(n_{d_k}, t) at t = 0 from the residues alone (δ_{n_{d_k}, n₀}).
    pub fn initial_defect_amplitude(&self, k: usize) -> f64 {
        self.residues[k].iter().sum()
    }

    /// ψ(n, t) = G(n, n₀, t) + ∑_k ∫₀ᵗ G(n, n_{d_k}, t − t₁) Φ_k(t₁) dt₁.
    pub fn wavefunction(&self, t: f64) -> Vec<Complex64> {
        let mut psi = green_row_with(&self.table, &self.spec, t);
        for k in 0..2 {
            let a = green_convolution(
                &self.table,
                self.spec.gamma(),
                self.rational.defects[k].site,
                self.phis[k].terms(),
                t,
            );
            psi.iter_mut().zip(a).for_each(|(p, a)| *p += a);
        }
        psi
    }

    pub fn occupation(&self, t: f64) -> Result<SiteProfile> {
        let p = SiteProfile::new(self.wavefunction(t).iter().map(|v| v.norm_sqr()).collect());
        p.check_normalized(NORMALIZATION_TOL)?;
        Ok(p)
    }

    pub fn occupation_series(&self, times: &[f64]) -> Result<Vec<SiteProfile>> {
        times.par_iter().map(|&t| self.occupation(t)).collect()
    }
}

/// P_n(t) with two defects.
pub fn two_defect_time(
    defects: &DefectSet,
    spec: &LatticeSpec,
    n: SiteIndex,
    t: f64,
) -> Result<f64> {
    Ok(TwoDefect::new(spec, defects)?.occupation(t)?.get(n))
}

/// ψ(n, t) for every site by trapezoidal quadrature of ψ̃(ε)e^{εt} on an
/// ellipse enclosing the spectral segment of the imaginary axis. Works for
/// any number of defects. `points` defaults to a count chosen from t and
/// the spectral radius.
pub fn contour_inversion(
    defects: &DefectSet,
    spec: &LatticeSpec,
    t: f64,
    points: Option<usize>,
) -> Result<Vec<Complex64>> {
    let n = spec.sites();
    if t < 0.0 {
        return Err(Error::InvalidArgument("t must be non-negative".into()));
    }
    if t == 0.0 {
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        psi[spec.n0().get()] = Complex64::new(1.0, 0.0);
        return Ok(psi);
    }
    let radius = 2.0 * spec.gamma() + defects.iter().map(|d| d.strength.abs()).sum::<f64>();
    let rho = (1.0 / (radius * t)).asinh().min(1.0);
    let m = points.unwrap_or(((36.0 / rho).ceil() as usize).max(64));
    let (a, b) = (radius * rho.sinh(), radius * rho.cosh());
    let table = ModeTable::new(n);
    let partial: Result<Vec<Vec<Complex64>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let th = 2.0 * PI * j as f64 / m as f64;
            let eps = Complex64::new(a * th.cos(), b * th.sin());
            let deps = Complex64::new(-a * th.sin(), b * th.cos());
            let g = green_laplace_offsets(&table, spec.gamma(), eps);
            let psi = if defects.is_empty() {
                (0..n).map(|s| g[(s + n - spec.n0().get()) % n]).collect()
            } else {
                assemble(defects, spec, &g)?
            };
            let w = (eps * t).exp() * deps;
            Ok(psi.into_iter().map(|v| v * w).collect())
        })
        .collect();
    let scale = Complex64::new(0.0, -1.0 / m as f64);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for row in partial? {
        out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
    }
    Ok(out.into_iter().map(|v| v * scale).collect())
}
