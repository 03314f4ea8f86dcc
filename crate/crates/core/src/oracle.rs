//! Ground truth by dense exact diagonalization, plus the classical
//! random walk across a partially permeable barrier.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{periodic_distance, DefectSet, LatticeSpec, MomentOrder, SiteIndex};
use crate::profile::SiteProfile;

/// H = −γ∑(|n+1⟩⟨n| + h.c.) − ∑_k q_k|n_k⟩⟨n_k| on the ring.
pub fn build_hamiltonian(spec: &LatticeSpec, defects: &DefectSet) -> Result<DMatrix<f64>> {
    let defects = DefectSet::new(defects.as_slice().to_vec())?;
    let n = spec.sites();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        h[(i, j)] -= spec.gamma();
        h[(j, i)] -= spec.gamma();
    }
    for d in defects.iter() {
        h[(d.site.get(), d.site.get())] -= d.strength;
    }
    Ok(h)
}

/// The ring with one site deleted (an open chain of N−1 sites), which is
/// the q → ∞ limit seen from every other site. Returns the matrix and the
/// ring label of each remaining row.
pub fn build_hamiltonian_removed_site(
    spec: &LatticeSpec,
    removed: SiteIndex,
) -> (DMatrix<f64>, Vec<usize>) {
    let n = spec.sites();
    let labels: Vec<usize> = (1..n).map(|k| (removed.get() + k) % n).collect();
    let m = n - 1;
    let mut h = DMatrix::<f64>::zeros(m, m);
    for i in 0..m - 1 {
        h[(i, i + 1)] = -spec.gamma();
        h[(i + 1, i)] = -spec.gamma();
    }
    (h, labels)
}

/// Eigenpairs sorted ascending, grouped into degeneracy classes.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    classes: Vec<std::ops::Range<usize>>,
    norm: f64,
}

impl SpectralDecomposition {
    pub const DEGENERACY_REL_TOL: f64 = 1e-9;

    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&a| eig.eigenvalues[a]).collect();
        let eigenvectors = eig.eigenvectors.select_columns(&order);
        let norm = eigenvalues
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let tol = Self::DEGENERACY_REL_TOL * norm;
        let mut classes = Vec::new();
        let mut start = 0;
        for a in 1..=eigenvalues.len() {
            if a < eigenvalues.len() {
                let gap = eigenvalues[a] - eigenvalues[a - 1];
                if gap > tol && gap < 10.0 * tol {
                    return Err(Error::DegeneracyAmbiguity { gap });
                }
                if gap <= tol {
                    continue;
                }
            }
            classes.push(start..a);
            start = a;
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            classes,
            norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// ⟨n|α⟩.
    pub fn component(&self, n: usize, alpha: usize) -> f64 {
        self.eigenvectors[(n, alpha)]
    }

    pub fn classes(&self) -> &[std::ops::Range<usize>] {
        &self.classes
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// max_α ‖H v_α − E_α v_α‖.
    pub fn residual(&self, h: &DMatrix<f64>) -> f64 {
        (0..self.dim())
            .map(|a| {
                let v = self.eigenvectors.column(a);
                (h * v - v * self.eigenvalues[a]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// ψ(t) = ∑_α e^{−iE_α t} v_α ⟨v_α|n₀⟩.
pub fn evolve_exact(decomp: &SpectralDecomposition, n0: usize, t: f64) -> Vec<Complex64> {
    let dim = decomp.dim();
    let coeff: Vec<Complex64> = (0..dim)
        .map(|a| Complex64::from_polar(decomp.component(n0, a), -decomp.eigenvalues[a] * t))
        .collect();
    (0..dim)
        .map(|n| {
            coeff
                .iter()
                .enumerate()
                .map(|(a, c)| c * decomp.component(n, a))
                .sum()
        })
        .collect()
}

/// |ψ_n(t)|² for every site.
pub fn occupation_exact(decomp: &SpectralDecomposition, n0: usize, t: f64) -> SiteProfile {
    SiteProfile::new(
        evolve_exact(decomp, n0, t)
            .iter()
            .map(|z| z.norm_sqr())
            .collect(),
    )
}

/// Long-time average of |ψ_n(t)|², exact in the eigenbasis:
/// P̄_n = ∑_C |∑_{α∈C} v_α(n) v_α(n₀)|².
pub fn time_average_exact(decomp: &SpectralDecomposition, n0: usize) -> SiteProfile {
    let values = (0..decomp.dim())
        .map(|n| {
            decomp
                .classes
                .iter()
                .map(|class| {
                    let s: f64 = class
                        .clone()
                        .map(|a| decomp.component(n, a) * decomp.component(n0, a))
                        .sum();
                    s * s
                })
                .sum()
        })
        .collect();
    SiteProfile::new(values)
}

/// Dense solver for a ring with arbitrary defects.
#[derive(Debug, Clone)]
pub struct RingOracle {
    spec: LatticeSpec,
    decomp: SpectralDecomposition,
}

impl RingOracle {
    pub fn new(spec: &LatticeSpec, defects: &DefectSet) -> Result<Self> {
        let h = build_hamiltonian(spec, defects)?;
        Ok(RingOracle {
            spec: *spec,
            decomp: SpectralDecomposition::new(&h)?,
        })
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomp
    }

    pub fn occupation(&self, t: f64) -> SiteProfile {
        occupation_exact(&self.decomp, self.spec.n0().get(), t)
    }

    pub fn amplitudes(&self, t: f64) -> Vec<Complex64> {
        evolve_exact(&self.decomp, self.spec.n0().get(), t)
    }

    pub fn time_average(&self) -> SiteProfile {
        time_average_exact(&self.decomp, self.spec.n0().get())
    }
}

/// Long-time profile for an infinitely strong defect at `nd`, from the
/// open chain left after deleting that site.
pub fn strong_defect_time_average(spec: &LatticeSpec, nd: SiteIndex) -> Result<SiteProfile> {
    let n = spec.sites();
    let mut values = vec![0.0; n];
    if nd == spec.n0() {
        values[nd.get()] = 1.0;
        return Ok(SiteProfile::new(values));
    }
    let (h, labels) = build_hamiltonian_removed_site(spec, nd);
    let decomp = SpectralDecomposition::new(&h)?;
    let start = labels
        .iter()
        .position(|&l| l == spec.n0().get())
        .expect("n0 differs from the removed site");
    let avg = time_average_exact(&decomp, start);
    for (row, &label) in labels.iter().enumerate() {
        values[label] = avg.values()[row];
    }
    Ok(SiteProfile::new(values))
}

/// Classical walk on the ring with hop rate F on every bond except the
/// bond (r, r+1), which has rate f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierWalkSpec {
    sites: usize,
    bulk_rate: f64,
    barrier_rate: f64,
    barrier: SiteIndex,
    n0: SiteIndex,
}

impl BarrierWalkSpec {
    pub fn new(
        sites: usize,
        bulk_rate: f64,
        barrier_rate: f64,
        barrier: usize,
        n0: usize,
    ) -> Result<Self> {
        if sites < 3 {
            return Err(Error::InvalidLattice(format!(
                "ring needs at least 3 sites, got {sites}"
            )));
        }
        if !(bulk_rate > 0.0 && barrier_rate > 0.0 && barrier_rate <= bulk_rate) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < f ≤ F, got f = {barrier_rate}, F = {bulk_rate}"
            )));
        }
        if barrier >= sites || n0 >= sites {
            return Err(Error::InvalidLattice(format!(
                "barrier {barrier} or start {n0} outside 0..{sites}"
            )));
        }
        Ok(BarrierWalkSpec {
            sites,
            bulk_rate,
            barrier_rate,
            barrier: SiteIndex::new(barrier as i64, sites),
            n0: SiteIndex::new(n0 as i64, sites),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Δ = F − f.
    pub fn delta(&self) -> f64 {
        self.bulk_rate - self.barrier_rate
    }

    /// Generator L of dP/dt = L·P (symmetric).
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.sites;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            let rate = if i == self.barrier.get() {
                self.barrier_rate
            } else {
                self.bulk_rate
            };
            l[(i, j)] += rate;
            l[(j, i)] += rate;
            l[(i, i)] -= rate;
            l[(j, j)] -= rate;
        }
        l
    }
}

/// P(t) for the barrier walk, by exact exponentiation of the generator.
pub fn barrier_walk_evolve(spec: &BarrierWalkSpec, t: f64) -> SiteProfile {
    let eig = SymmetricEigen::new(spec.generator());
    let p0 = eig.eigenvectors.row(spec.n0.get()).transpose();
    let decay = DVector::from_iterator(
        spec.sites,
        eig.eigenvalues
            .iter()
            .zip(p0.iter())
            .map(|(l, c)| (l * t).exp() * c),
    );
    SiteProfile::new((&eig.eigenvectors * decay).iter().copied().collect())
}

/// Defect-free Laplace propagator Ψ̃_{n₀}(n, ε) of the classical walk.
fn classical_free_laplace(n_sites: usize, rate: f64, from: usize, to: usize, eps: f64) -> f64 {
    let nf = n_sites as f64;
    let m = to as f64 - from as f64;
    let mut s = 1.0 / (nf * eps);
    for k in 1..n_sites {
        let a = 2.0 * std::f64::consts::PI * k as f64 / nf;
        s += (m * a).cos() / (nf * (eps + 2.0 * rate * (1.0 - a.cos())));
    }
    s
}

/// P̃_{n₀}(n, ε) by closing the resolvent identity at the barrier bond.
pub fn barrier_walk_laplace(spec: &BarrierWalkSpec, n: usize, eps: f64) -> f64 {
    let ns = spec.sites;
    let psi = |from: usize, to: usize| classical_free_laplace(ns, spec.bulk_rate, from, to, eps);
    let r = spec.barrier.get();
    let r1 = (r + 1) % ns;
    let n0 = spec.n0.get();
    let delta = spec.delta();
    if delta == 0.0 {
        return psi(n0, n);
    }
    let num = psi(n0, r1) - psi(n0, r);
    let den = 1.0 / delta + psi(r1, r) + psi(r, r1) - psi(r1, r1) - psi(r, r);
    psi(n0, n) - (psi(r, n) - psi(r1, n)) * num / den
}

/// Stationary state of the barrier walk reached two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierWalkSteady {
    /// Profile after exact evolution to the relaxation time cap.
    pub profile: SiteProfile,
    /// ∑ₙ [n − n₀]² P̄ₙ from `profile`.
    pub msd: f64,
    /// lim ε→0 of ε·P̃(n, ε).
    pub laplace_profile: SiteProfile,
    pub laplace_msd: f64,
}

pub const BARRIER_LAPLACE_EPS: f64 = 1e-12;
pub const BARRIER_RESIDUAL_TOL: f64 = 1e-12;

pub fn barrier_walk_steady(spec: &BarrierWalkSpec) -> Result<BarrierWalkSteady> {
    let l = spec.generator();
    let eig = SymmetricEigen::new(l.clone());
    let slowest = eig
        .eigenvalues
        .iter()
        .filter(|v| v.abs() > 1e-12 * spec.bulk_rate)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    let t_end = 40.0 / slowest;
    let profile = barrier_walk_evolve(spec, t_end);
    let residual = (&l * DVector::from_column_slice(profile.values())).norm();
    if residual > BARRIER_RESIDUAL_TOL * spec.bulk_rate {
        return Err(Error::NotConverged { t: t_end, residual });
    }
    let laplace_profile = SiteProfile::new(
        (0..spec.sites)
            .map(|n| BARRIER_LAPLACE_EPS * barrier_walk_laplace(spec, n, BARRIER_LAPLACE_EPS))
            .collect(),
    );
    let msd = profile.moment(MomentOrder::Second, spec.n0);
    let laplace_msd = laplace_profile.moment(MomentOrder::Second, spec.n0);
    Ok(BarrierWalkSteady {
        profile,
        msd,
        laplace_profile,
        laplace_msd,
    })
}

/// ∑ₙ [n − n₀]²/N, the MSD of the uniform profile.
pub fn uniform_msd(sites: usize) -> f64 {
    let n0 = SiteIndex::new(0, sites);
    (0..sites)
        .map(|n| {
            let d = periodic_distance(SiteIndex::new(n as i64, sites), n0, sites).get() as f64;
            d * d
        })
        .sum::<f64>()
        / sites as f64
}
