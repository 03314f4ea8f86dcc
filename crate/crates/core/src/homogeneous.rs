//! Defect-free propagation: Green's function, occupation probabilities,
//! displacement moments and their long-time values.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{
    cosine_weighted_sum, distance_power_sum, LatticeSpec, MomentOrder, SiteIndex,
};
use crate::profile::{MomentSeries, SiteProfile};

/// e^{2πij/N} for j = 0..N, shared by every lattice-mode sum.
#[derive(Debug, Clone)]
pub(crate) struct ModeTable {
    n: usize,
    roots: Vec<Complex64>,
    cosines: Vec<f64>,
}

impl ModeTable {
    pub(crate) fn new(n: usize) -> Self {
        let roots: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
            .collect();
        let cosines = roots.iter().map(|z| z.re).collect();
        ModeTable { n, roots, cosines }
    }

    pub(crate) fn sites(&self) -> usize {
        self.n
    }

    /// e^{2πi·k·m/N}.
    pub(crate) fn phase(&self, k: usize, m: usize) -> Complex64 {
        self.roots[(k * m) % self.n]
    }

    /// cos(2πk/N).
    pub(crate) fn cos(&self, k: usize) -> f64 {
        self.cosines[k % self.n]
    }

    /// e^{2iγt·cos(2πk/N)} for every mode k.
    pub(crate) fn propagators(&self, gamma: f64, t: f64) -> Vec<Complex64> {
        self.cosines
            .iter()
            .map(|c| Complex64::from_polar(1.0, 2.0 * gamma * t * c))
            .collect()
    }

    /// (1/N)∑_k z_k e^{2πikm/N} for every offset m.
    pub(crate) fn synthesize(&self, z: &[Complex64]) -> Vec<Complex64> {
        let inv = 1.0 / self.n as f64;
        (0..self.n)
            .map(|m| {
                z.iter()
                    .enumerate()
                    .map(|(k, zk)| zk * self.phase(k, m))
                    .sum::<Complex64>()
                    * inv
            })
            .collect()
    }
}

/// G(n, n₀, t) = (1/N)∑_k exp[2iγt cos(2πk/N) + 2πik(n−n₀)/N].
pub fn green_time(n: SiteIndex, n0: SiteIndex, t: f64, spec: &LatticeSpec) -> Complex64 {
    let sites = spec.sites();
    let table = ModeTable::new(sites);
    let m = (n.get() + sites - n0.get()) % sites;
    let z = table.propagators(spec.gamma(), t);
    z.iter()
        .enumerate()
        .map(|(k, zk)| zk * table.phase(k, m))
        .sum::<Complex64>()
        / sites as f64
}

/// G(n, n₀, t) for every site n, in site order.
pub fn green_row(spec: &LatticeSpec, t: f64) -> Vec<Complex64> {
    green_row_with(&ModeTable::new(spec.sites()), spec, t)
}

pub(crate) fn green_row_with(table: &ModeTable, spec: &LatticeSpec, t: f64) -> Vec<Complex64> {
    let by_offset = table.synthesize(&table.propagators(spec.gamma(), t));
    let sites = spec.sites();
    let n0 = spec.n0().get();
    (0..sites)
        .map(|n| by_offset[(n + sites - n0) % sites])
        .collect()
}

/// P_n(t) = |G(n, n₀, t)|².
pub fn occupation_time(spec: &LatticeSpec, t: f64) -> SiteProfile {
    SiteProfile::new(green_row(spec, t).iter().map(|g| g.norm_sqr()).collect())
}

/// Long-time average of P_n(t).
pub fn steady_profile(spec: &LatticeSpec) -> SiteProfile {
    let n = spec.sites();
    let nf = n as f64;
    let n0 = spec.n0().get();
    let values = if n.is_multiple_of(2) {
        let base = 1.0 / nf - 2.0 / (nf * nf);
        let mirror = (n0 + n / 2) % n;
        (0..n)
            .map(|s| {
                if s == n0 || s == mirror {
                    base + 1.0 / nf
                } else {
                    base
                }
            })
            .collect()
    } else {
        let base = 1.0 / nf - 1.0 / (nf * nf);
        (0..n)
            .map(|s| if s == n0 { base + 1.0 / nf } else { base })
            .collect()
    };
    SiteProfile::new(values)
}

/// C_p(y) = ∑_m [m]^p cos(2πym/N) for y = 0..N.
fn cosine_table(p: MomentOrder, n: usize) -> Vec<f64> {
    (0..n)
        .map(|y| {
            if y == 0 {
                distance_power_sum(p, n)
            } else {
                cosine_weighted_sum(p, y as i64, n).expect("y is nonzero mod N")
            }
        })
        .collect()
}

/// Evaluates Δ_p(t) on many time points sharing one cosine table.
#[derive(Debug, Clone)]
pub struct MomentEvaluator {
    spec: LatticeSpec,
    order: MomentOrder,
    table: ModeTable,
    weights: Vec<f64>,
}

impl MomentEvaluator {
    pub fn new(order: MomentOrder, spec: &LatticeSpec) -> Self {
        MomentEvaluator {
            spec: *spec,
            order,
            table: ModeTable::new(spec.sites()),
            weights: cosine_table(order, spec.sites()),
        }
    }

    pub fn order(&self) -> MomentOrder {
        self.order
    }

    /// Δ_p(t) = (1/N²)∑_{k₁,k₂} e^{2iγt(cos k₁ − cos k₂)} C_p(k₁ − k₂).
    pub fn at(&self, t: f64) -> f64 {
        let n = self.spec.sites();
        let z = self.table.propagators(self.spec.gamma(), t);
        let mut total = 0.0;
        for (y, w) in self.weights.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k2 in 0..n {
                acc += z[(k2 + y) % n] * z[k2].conj();
            }
            total += w * acc.re;
        }
        total / (n * n) as f64
    }
}

/// Δ_p(t) = ∑ₙ [n − n₀]^p P_n(t).
pub fn moment_time(p: MomentOrder, t: f64, spec: &LatticeSpec) -> f64 {
    MomentEvaluator::new(p, spec).at(t)
}

/// Δ_p on a caller-supplied grid; parallel over times, order preserved.
pub fn moment_series(p: MomentOrder, spec: &LatticeSpec, times: &[f64]) -> MomentSeries {
    let eval = MomentEvaluator::new(p, spec);
    let values = times.par_iter().map(|&t| eval.at(t)).collect();
    MomentSeries {
        order: p,
        times: times.to_vec(),
        values,
        steady: steady_moment(p, spec),
    }
}

/// Long-time limits Δ̄₁, Δ̄₂.
pub fn steady_moment(p: MomentOrder, spec: &LatticeSpec) -> f64 {
    let nf = spec.sites() as f64;
    match (p, spec.is_even()) {
        (MomentOrder::First, true) => nf / 4.0,
        (MomentOrder::Second, true) => (nf * nf + 2.0) / 12.0 + nf / 12.0 - 1.0 / (3.0 * nf),
        (MomentOrder::First, false) => (nf - 1.0).powi(2) * (nf + 1.0) / (4.0 * nf * nf),
        (MomentOrder::Second, false) => (nf - 1.0).powi(2) * (nf + 1.0) / (12.0 * nf),
    }
}

/// 2048 points over [0, 4N/γ].
pub fn default_time_grid(spec: &LatticeSpec) -> Vec<f64> {
    uniform_grid(4.0 * spec.sites() as f64 / spec.gamma(), 2048)
}

/// `count` equally spaced points over [0, t_max].
pub fn uniform_grid(t_max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| t_max * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub const TSTAR_SCAN_POINTS: usize = 2048;

/// Earliest t with |Δ₂(t) − 2γ²t²| / (2γ²t²) > threshold, searched on
/// (0, 2N/γ] and refined by bisection.
pub fn estimate_tstar(spec: &LatticeSpec, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "t* threshold must lie in (0, 0.5), got {threshold}"
        )));
    }
    let eval = MomentEvaluator::new(MomentOrder::Second, spec);
    let g2 = 2.0 * spec.gamma() * spec.gamma();
    let deviation = |t: f64| {
        let ballistic = g2 * t * t;
        (eval.at(t) - ballistic).abs() / ballistic
    };
    let t_max = 2.0 * spec.sites() as f64 / spec.gamma();
    let dt = t_max / TSTAR_SCAN_POINTS as f64;
    let mut prev = 0.0;
    for i in 1..=TSTAR_SCAN_POINTS {
        let t = dt * i as f64;
        if deviation(t) > threshold {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > 1e-12 * hi {
                let mid = 0.5 * (lo + hi);
                if deviation(mid) > threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = t;
    }
    Err(Error::NotReached { t_max })
}

/// Straight-line least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_linear(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 {
            1.0
        } else {
            sxy * sxy / (sxx * syy)
        },
    }
}

/// D in Δ₂ ≈ D·t², least squares through the origin.
pub fn fit_ballistic(times: &[f64], values: &[f64]) -> f64 {
    let num: f64 = times.iter().zip(values).map(|(t, v)| t * t * v).sum();
    let den: f64 = times.iter().map(|t| t.powi(4)).sum();
    num / den
}
