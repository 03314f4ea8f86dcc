//! The infinitely strong defect: Φ(t) from the double poles at the roots of
//! T_N + 1, the exact steady profile with its mirror-site enhancement, the
//! steady corrections, and the limit moments.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::homogeneous::{self, green_row_with, ModeTable};
use crate::lattice::{periodic_distance, LatticeSpec, MomentOrder, SiteIndex};
use crate::profile::SiteProfile;
use crate::single::{green_convolution, steady_from_weights, DefectCorrection, PhiSeries};

/// Φ(t) = −iγ̃ ∑_k F_k e^{2iγt cos θ_k}, θ_k = (2k−1)π/N, F_k = sin(dθ_k) sin θ_k.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongDefectSeries {
    gamma: f64,
    gamma_tilde: f64,
    terms: Vec<(f64, f64)>,
}

impl StrongDefectSeries {
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma_tilde
    }

    /// (θ_k, F_k) pairs, k = 1..⌊N/2⌋.
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let s: Complex64 = self
            .terms
            .iter()
            .map(|&(theta, f)| f * Complex64::from_polar(1.0, 2.0 * self.gamma * t * theta.cos()))
            .sum();
        Complex64::new(0.0, -self.gamma_tilde) * s
    }

    /// The same series in pole form, x_k = cos θ_k with weight −iγ̃F_k.
    pub fn to_phi(&self) -> PhiSeries {
        let w = Complex64::new(0.0, -self.gamma_tilde);
        PhiSeries::new(
            self.gamma,
            self.terms
                .iter()
                .map(|&(theta, f)| (theta.cos(), w * f))
                .collect(),
        )
    }

    /// (x_k, a_k) with Φ = i∑ a_k e^{2iγx_k t}.
    fn real_weights(&self) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .map(|&(theta, f)| (theta.cos(), -self.gamma_tilde * f))
            .collect()
    }
}

pub fn phi_infinite_q(spec: &LatticeSpec, nd: SiteIndex) -> StrongDefectSeries {
    let n = spec.sites();
    let d = periodic_distance(nd, spec.n0(), n).get() as f64;
    let terms = (1..=n / 2)
        .map(|k| {
            let theta = PI * (2 * k - 1) as f64 / n as f64;
            (theta, (d * theta).sin() * theta.sin())
        })
        .collect();
    StrongDefectSeries {
        gamma: spec.gamma(),
        gamma_tilde: 4.0 * spec.gamma() / n as f64,
        terms,
    }
}

/// Reflection of n₀ through the defect, (2n_d − n₀) mod N.
pub fn mirror_site(spec: &LatticeSpec, nd: SiteIndex) -> SiteIndex {
    spec.site(2 * nd.get() as i64 - spec.n0().get() as i64)
}

/// Steady profile at infinite strength.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongSteady {
    pub profile: SiteProfile,
    /// The mirror site coincides with n₀ or with n_d.
    pub mirror_collision: bool,
}

/// P̄ₙ = 3/(2N)(δ_{n,mirror} + δ_{n,n₀}) + (1/N)(1 − δ_{n,mirror} − δ_{n,n₀} − δ_{n,n_d}),
/// or δ_{n,n_d} when the particle starts on the defect.
pub fn steady_profile_infinite_q(spec: &LatticeSpec, nd: SiteIndex) -> StrongSteady {
    let n = spec.sites();
    let n0 = spec.n0();
    if nd == n0 {
        let mut v = vec![0.0; n];
        v[nd.get()] = 1.0;
        return StrongSteady {
            profile: SiteProfile::new(v),
            mirror_collision: false,
        };
    }
    let mirror = mirror_site(spec, nd);
    let nf = n as f64;
    let delta = |a: usize, b: SiteIndex| if a == b.get() { 1.0 } else { 0.0 };
    let values = (0..n)
        .map(|s| {
            let (dm, d0, dd) = (delta(s, mirror), delta(s, n0), delta(s, nd));
            1.5 / nf * (dm + d0) + (1.0 - dm - d0 - dd) / nf
        })
        .collect();
    StrongSteady {
        profile: SiteProfile::new(values),
        mirror_collision: mirror == n0 || mirror == nd,
    }
}

/// (Īₙ, K̄ₙ) at infinite strength from the pole sums, so that
/// P̄ₙ + Īₙ + K̄ₙ reproduces [`steady_profile_infinite_q`].
pub fn steady_corrections_infinite_q(spec: &LatticeSpec, nd: SiteIndex) -> DefectCorrection {
    let n = spec.sites();
    if nd == spec.n0() {
        // ψ = e^{iqt}δ_{n,n_d} and the cross term G*ψ averages out
        let base = homogeneous::steady_profile(spec);
        let i = base.values().iter().map(|p| -2.0 * p).collect();
        let mut k = base.into_values();
        k[nd.get()] += 1.0;
        return DefectCorrection { i, k };
    }
    let series = phi_infinite_q(spec, nd);
    steady_from_weights(&ModeTable::new(n), spec, nd, &series.real_weights())
}

/// Īₙ in Kronecker form: −(N−4)/N² − (1/N)(δ_{n₀} + δ_{n_d} + δ_{n₀+N/2} + δ_{n_d+N/2})
/// for even N, −(N−2)/N² − (1/N)(δ_{n₀} + δ_{n_d}) for odd N. `None` when
/// the four even-N sites are not distinct.
pub fn kronecker_i_infinite_q(spec: &LatticeSpec, nd: SiteIndex) -> Option<Vec<f64>> {
    let n = spec.sites();
    let n0 = spec.n0();
    if nd == n0 {
        return None;
    }
    let nf = n as f64;
    let mut special = vec![n0.get(), nd.get()];
    if spec.is_even() {
        let half = (n / 2) as i64;
        special.push(n0.shifted(half, n).get());
        special.push(nd.shifted(half, n).get());
        if special[2] == nd.get() {
            return None;
        }
    }
    let base = -((n - special.len()) as f64) / (nf * nf);
    Some(
        (0..n)
            .map(|s| {
                if special.contains(&s) {
                    base - 1.0 / nf
                } else {
                    base
                }
            })
            .collect(),
    )
}

/// Δ̄_p at infinite strength, ∑ₙ [n−n₀]^p P̄ₙ for the profile above in
/// closed form: (S_p + [m]^p/2 − d^p)/N with d = [n_d−n₀], m = [2(n_d−n₀)],
/// S_p = ∑ₙ [n−n₀]^p.
pub fn steady_moments_infinite_q(order: MomentOrder, spec: &LatticeSpec, nd: SiteIndex) -> f64 {
    let n = spec.sites();
    let n0 = spec.n0();
    if nd == n0 {
        return 0.0;
    }
    let d = periodic_distance(nd, n0, n).get();
    let m = periodic_distance(mirror_site(spec, nd), n0, n).get();
    let sp = crate::lattice::distance_power_sum(order, n);
    (sp + 0.5 * order.weight(m) - order.weight(d)) / n as f64
}

/// ψ(n, t) for every site at infinite strength.
pub fn wavefunction_infinite_q(spec: &LatticeSpec, nd: SiteIndex, t: f64) -> Vec<Complex64> {
    let n = spec.sites();
    let table = ModeTable::new(n);
    let mut psi = green_row_with(&table, spec, t);
    if nd == spec.n0() {
        // the start site decouples and the particle stays put
        psi.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        psi[nd.get()] = Complex64::new(1.0, 0.0);
        return psi;
    }
    let phi = phi_infinite_q(spec, nd).to_phi();
    let a = green_convolution(&table, spec.gamma(), nd, phi.terms(), t);
    psi.iter_mut().zip(a).for_each(|(p, a)| *p += a);
    psi
}

/// Pₙ(t) at infinite strength.
pub fn occupation_infinite_q(spec: &LatticeSpec, nd: SiteIndex, t: f64) -> SiteProfile {
    SiteProfile::new(
        wavefunction_infinite_q(spec, nd, t)
            .iter()
            .map(|v| v.norm_sqr())
            .collect(),
    )
}
