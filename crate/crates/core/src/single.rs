//! One on-site defect of finite strength: Φ(t), the convolution amplitude
//! A(n, n_d, t), the corrections I and K, and their long-time averages.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::homogeneous::{self, green_row_with, ModeTable};
use crate::lattice::{Defect, LatticeSpec, MomentOrder, SiteIndex};
use crate::profile::SiteProfile;
use crate::spectral::{find_poles, BoundStateWindow, DefectDenominator, PoleSet};

/// |𝒞_k(x_j)| below this multiple of γ uses the resonant limit.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Allowed |∑ₙ Pₙ − 1| before `NormalizationDrift`.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Φ(t) = ∑_j weight_j · e^{2iγx_j t}.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSeries {
    gamma: f64,
    terms: Vec<(f64, Complex64)>,
}

impl PhiSeries {
    pub fn new(gamma: f64, terms: Vec<(f64, Complex64)>) -> Self {
        PhiSeries { gamma, terms }
    }

    pub fn empty(gamma: f64) -> Self {
        PhiSeries {
            gamma,
            terms: Vec::new(),
        }
    }

    pub fn terms(&self) -> &[(f64, Complex64)] {
        &self.terms
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(x, w)| w * Complex64::from_polar(1.0, 2.0 * self.gamma * x * t))
            .sum()
    }
}

/// Φ(t) = iq∑_j f_j e^{2iγx_j t} over the non-discarded poles.
pub fn phi_series(defect: &Defect, spec: &LatticeSpec, poles: &PoleSet) -> PhiSeries {
    let iq = Complex64::new(0.0, defect.strength);
    PhiSeries::new(
        spec.gamma(),
        poles.active().map(|p| (p.x, iq * p.f)).collect(),
    )
}

/// (e^{2iγxt} − e^{2iγct}) / (−2i𝒞) with 𝒞 = γ(c − x), written as
/// e^{iγ(x+c)t}·sin(𝒞t)/𝒞 so nearby frequencies do not cancel.
fn divided_difference(gamma: f64, x: f64, c: f64, t: f64) -> Complex64 {
    let cc = gamma * (c - x);
    let phase = Complex64::from_polar(1.0, gamma * (x + c) * t);
    if cc.abs() < RESONANCE_TOL * gamma {
        phase * t
    } else {
        phase * ((cc * t).sin() / cc)
    }
}

/// ∫₀ᵗ G(n, n_d, t − t₁) Φ(t₁) dt₁ for every site n, with
/// Φ(t) = ∑_j w_j e^{2iγx_j t}.
pub(crate) fn green_convolution(
    table: &ModeTable,
    gamma: f64,
    nd: SiteIndex,
    terms: &[(f64, Complex64)],
    t: f64,
) -> Vec<Complex64> {
    let n = table.sites();
    if terms.is_empty() || t == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let s: Vec<Complex64> = (0..n)
        .map(|k| {
            let c = table.cos(k);
            terms
                .iter()
                .map(|&(x, w)| w * divided_difference(gamma, x, c, t))
                .sum()
        })
        .collect();
    let by_offset = table.synthesize(&s);
    (0..n)
        .map(|site| by_offset[(site + n - nd.get()) % n])
        .collect()
}

/// Īₙ and K̄ₙ for Φ(t) = i∑_j a_j e^{2iγx_j t} with real a_j and pole
/// positions x_j distinct from every band energy cos(2πk/N).
pub(crate) fn steady_from_weights(
    table: &ModeTable,
    spec: &LatticeSpec,
    nd: SiteIndex,
    weights: &[(f64, f64)],
) -> DefectCorrection {
    let ns = spec.sites();
    if weights.is_empty() {
        return DefectCorrection::zero(ns);
    }
    let nf = ns as f64;
    let gamma = spec.gamma();
    let nd = nd.get();
    let n0 = spec.n0().get();
    let paired = |k: usize| k != 0 && 2 * k != ns;

    // g_k = ∑_j a_j / 𝒞_k(x_j)
    let g: Vec<f64> = (0..ns)
        .map(|k| {
            let c = table.cos(k);
            weights.iter().map(|&(x, a)| a / (gamma * (c - x))).sum()
        })
        .collect();
    let diag: f64 = (0..ns)
        .map(|k| g[k] * table.phase(k, (n0 + ns - nd) % ns).re)
        .sum();
    let g_sq: f64 = g.iter().map(|v| v * v).sum();

    // h_j(m) = ∑_k e^{2πikm/N}/𝒞_k(x_j), one row per pole
    let pole_rows: Vec<(f64, Vec<Complex64>)> = weights
        .iter()
        .map(|&(x, a)| {
            let inv: Vec<Complex64> = (0..ns)
                .map(|k| Complex64::new(nf / (gamma * (table.cos(k) - x)), 0.0))
                .collect();
            (a, table.synthesize(&inv))
        })
        .collect();

    let mut i = Vec::with_capacity(ns);
    let mut kk = Vec::with_capacity(ns);
    for n in 0..ns {
        let cross: f64 = (0..ns)
            .filter(|&k| paired(k))
            .map(|k| g[k] * table.phase(k, (2 * ns + 2 * n - n0 - nd) % ns).re)
            .sum();
        i.push((diag + cross) / (nf * nf));

        let m = (n + ns - nd) % ns;
        let pole_part: f64 = pole_rows.iter().map(|(a, h)| a * a * h[m].norm_sqr()).sum();
        let mirror: f64 = (0..ns)
            .filter(|&k| paired(k))
            .map(|k| g[k] * g[k] * table.phase(k, (2 * m) % ns).re)
            .sum();
        kk.push((pole_part + g_sq + mirror) / (4.0 * nf * nf));
    }
    DefectCorrection { i, k: kk }
}

/// Per-site corrections Iₙ and Kₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectCorrection {
    pub i: Vec<f64>,
    pub k: Vec<f64>,
}

impl DefectCorrection {
    pub fn zero(n: usize) -> Self {
        DefectCorrection {
            i: vec![0.0; n],
            k: vec![0.0; n],
        }
    }

    /// ∑ₙ (Iₙ + Kₙ), which vanishes for a normalized state.
    pub fn total(&self) -> f64 {
        self.i.iter().zip(&self.k).map(|(a, b)| a + b).sum()
    }

    pub fn weighted(&self, order: MomentOrder, spec: &LatticeSpec) -> f64 {
        spec.distances_from_start()
            .iter()
            .zip(self.i.iter().zip(&self.k))
            .map(|(&d, (a, b))| order.weight(d) * (a + b))
            .sum()
    }
}

/// A ring with one defect, with its poles located once.
#[derive(Debug, Clone)]
pub struct SingleDefect {
    spec: LatticeSpec,
    defect: Defect,
    poles: Option<PoleSet>,
    phi: PhiSeries,
    table: ModeTable,
}

impl SingleDefect {
    pub fn new(spec: &LatticeSpec, defect: Defect) -> Result<Self> {
        if !defect.strength.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "defect strength must be finite, got {}",
                defect.strength
            )));
        }
        let defect = Defect::new(
            SiteIndex::new(defect.site.get() as i64, spec.sites()),
            defect.strength,
        );
        let (poles, phi) = if defect.strength == 0.0 {
            (None, PhiSeries::empty(spec.gamma()))
        } else {
            let den = DefectDenominator::new(spec, &defect);
            let poles = find_poles(&den, BoundStateWindow::for_denominator(&den))?;
            let phi = phi_series(&defect, spec, &poles);
            (Some(poles), phi)
        };
        Ok(SingleDefect {
            spec: *spec,
            defect,
            poles,
            phi,
            table: ModeTable::new(spec.sites()),
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn defect(&self) -> &Defect {
        &self.defect
    }

    pub fn poles(&self) -> Option<&PoleSet> {
        self.poles.as_ref()
    }

    pub fn phi(&self) -> &PhiSeries {
        &self.phi
    }

    /// Active (x_j, f_j).
    fn residues(&self) -> Vec<(f64, f64)> {
        self.poles
            .iter()
            .flat_map(|p| p.active().map(|p| (p.x, p.f)))
            .collect()
    }

    /// A(n, n_d, t) for every site.
    pub fn amplitude_row(&self, t: f64) -> Vec<Complex64> {
        green_convolution(
            &self.table,
            self.spec.gamma(),
            self.defect.site,
            self.phi.terms(),
            t,
        )
    }

    pub fn amplitude(&self, n: SiteIndex, t: f64) -> Complex64 {
        self.amplitude_row(t)[n.get()]
    }

    /// ψ(n, t) = G(n, n₀, t) + A(n, n_d, t).
    pub fn wavefunction(&self, t: f64) -> Vec<Complex64> {
        let g = green_row_with(&self.table, &self.spec, t);
        g.iter()
            .zip(self.amplitude_row(t))
            .map(|(g, a)| g + a)
            .collect()
    }

    /// Iₙ = 2Re[G*(n,n₀,t)A(n,n_d,t)], Kₙ = |A(n,n_d,t)|².
    pub fn correction_time(&self, t: f64) -> DefectCorrection {
        let g = green_row_with(&self.table, &self.spec, t);
        let a = self.amplitude_row(t);
        DefectCorrection {
            i: g.iter()
                .zip(&a)
                .map(|(g, a)| 2.0 * (g.conj() * a).re)
                .collect(),
            k: a.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    /// The same corrections from the fully expanded trigonometric sums;
    /// O(N²·poles²) per site, intended as a reference.
    pub fn correction_time_expanded(&self, n: SiteIndex, t: f64) -> (f64, f64) {
        let res = self.residues();
        let ns = self.spec.sites();
        let nf = ns as f64;
        let gamma = self.spec.gamma();
        let q = self.defect.strength;
        let two_pi = 2.0 * std::f64::consts::PI;
        let n_i = n.get() as f64;
        let nd = self.defect.site.get() as f64;
        let n0 = self.spec.n0().get() as f64;
        let cmode = |k: usize, x: f64| gamma * (self.table.cos(k) - x);

        let mut i_sum = 0.0;
        for &(x, f) in &res {
            for k1 in 0..ns {
                for k2 in 0..ns {
                    let beta = 2.0 * gamma * (self.table.cos(k2) - self.table.cos(k1));
                    let b = two_pi * (k2 as f64 * (n_i - nd) - k1 as f64 * (n_i - n0)) / nf;
                    let c1 = cmode(k1, x);
                    i_sum += f / cmode(k2, x)
                        * ((beta * t).cos() * b.cos() + (beta * t).sin() * b.sin()
                            - (2.0 * c1 * t).cos() * b.cos()
                            + (2.0 * c1 * t).sin() * b.sin());
                }
            }
        }
        let mut k_sum = 0.0;
        for &(xj, fj) in &res {
            for &(xr, fr) in &res {
                let w = 2.0 * gamma * (xj - xr);
                for k1 in 0..ns {
                    for k2 in 0..ns {
                        let beta = 2.0 * gamma * (self.table.cos(k2) - self.table.cos(k1));
                        let chi = two_pi * (k1 as f64 - k2 as f64) * (n_i - nd) / nf;
                        k_sum += fj * fr / (cmode(k1, xj) * cmode(k2, xr))
                            * chi.cos()
                            * ((w * t).cos() + (beta * t).cos()
                                - (2.0 * cmode(k2, xj) * t).cos()
                                - (2.0 * cmode(k1, xr) * t).cos());
                    }
                }
            }
        }
        (q / (nf * nf) * i_sum, q * q / (4.0 * nf * nf) * k_sum)
    }

    /// P_n^(d)(t) = Pₙ(t) + Iₙ(t) + Kₙ(t).
    pub fn occupation(&self, t: f64) -> Result<SiteProfile> {
        let p = SiteProfile::new(self.wavefunction(t).iter().map(|z| z.norm_sqr()).collect());
        p.check_normalized(NORMALIZATION_TOL)?;
        Ok(p)
    }

    /// Occupation at each time, in input order.
    pub fn occupation_series(&self, times: &[f64]) -> Result<Vec<SiteProfile>> {
        times.par_iter().map(|&t| self.occupation(t)).collect()
    }

    /// Long-time averages Īₙ and K̄ₙ.
    pub fn steady_correction(&self) -> DefectCorrection {
        let q = self.defect.strength;
        let weights: Vec<(f64, f64)> = self.residues().iter().map(|&(x, f)| (x, q * f)).collect();
        steady_from_weights(&self.table, &self.spec, self.defect.site, &weights)
    }

    /// P̄ₙ^(d) = P̄ₙ + Īₙ + K̄ₙ.
    pub fn steady_profile(&self) -> Result<SiteProfile> {
        let base = homogeneous::steady_profile(&self.spec);
        let c = self.steady_correction();
        let p = SiteProfile::new(
            base.values()
                .iter()
                .zip(c.i.iter().zip(&c.k))
                .map(|(p, (i, k))| p + i + k)
                .collect(),
        );
        p.check_normalized(NORMALIZATION_TOL)?;
        Ok(p)
    }

    /// Δ_p^(d)(t) = Δ_p(t) + ∑ₙ [n−n₀]^p (Iₙ + Kₙ).
    pub fn moment_time(&self, order: MomentOrder, t: f64) -> Result<f64> {
        let c = self.correction_time(t);
        check_total(&c)?;
        Ok(homogeneous::moment_time(order, t, &self.spec) + c.weighted(order, &self.spec))
    }

    /// Δ̄_p^(d) = Δ̄_p + ∑ₙ [n−n₀]^p (Īₙ + K̄ₙ).
    pub fn steady_moment(&self, order: MomentOrder) -> Result<f64> {
        let c = self.steady_correction();
        check_total(&c)?;
        Ok(homogeneous::steady_moment(order, &self.spec) + c.weighted(order, &self.spec))
    }
}

fn check_total(c: &DefectCorrection) -> Result<()> {
    let total = c.total();
    if total.abs() > NORMALIZATION_TOL || !total.is_finite() {
        return Err(Error::NormalizationDrift {
            sum: 1.0 + total,
            drift: total.abs(),
        });
    }
    Ok(())
}

/// A(n, n_d, t) for a single site.
pub fn amplitude_a(
    n: SiteIndex,
    t: f64,
    phi: &PhiSeries,
    spec: &LatticeSpec,
    nd: SiteIndex,
) -> Complex64 {
    let table = ModeTable::new(spec.sites());
    green_convolution(&table, spec.gamma(), nd, phi.terms(), t)[n.get()]
}

/// (Iₙ(t), Kₙ(t)).
pub fn correction_time(
    n: SiteIndex,
    t: f64,
    spec: &LatticeSpec,
    defect: Defect,
) -> Result<(f64, f64)> {
    let c = SingleDefect::new(spec, defect)?.correction_time(t);
    Ok((c.i[n.get()], c.k[n.get()]))
}

/// P_n^(d)(t).
pub fn occupation_defect(n: SiteIndex, t: f64, spec: &LatticeSpec, defect: Defect) -> Result<f64> {
    Ok(SingleDefect::new(spec, defect)?.occupation(t)?.get(n))
}

/// (Īₙ, K̄ₙ).
pub fn steady_correction(n: SiteIndex, spec: &LatticeSpec, defect: Defect) -> Result<(f64, f64)> {
    let c = SingleDefect::new(spec, defect)?.steady_correction();
    Ok((c.i[n.get()], c.k[n.get()]))
}

/// Δ_p^(d) at time `t`, or its long-time value when `t` is `None`.
pub fn moments_defect(
    order: MomentOrder,
    t: Option<f64>,
    spec: &LatticeSpec,
    defect: Defect,
) -> Result<f64> {
    let s = SingleDefect::new(spec, defect)?;
    match t {
        Some(t) => s.moment_time(order, t),
        None => s.steady_moment(order),
    }
}
