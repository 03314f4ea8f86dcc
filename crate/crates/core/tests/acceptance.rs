//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringdefect::homogeneous::{estimate_tstar, moment_series, steady_moment, steady_profile};
use ringdefect::multi::TwoDefect;
use ringdefect::oracle::{barrier_walk_steady, BarrierWalkSpec};
use ringdefect::single::SingleDefect;
use ringdefect::strong::{steady_moments_infinite_q, steady_profile_infinite_q};
use ringdefect::{Defect, DefectSet, LatticeSpec, MomentOrder};

const TIME_TOL: f64 = 1e-8;
const STEADY_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-12;
const BALLISTIC_REL_TOL: f64 = 0.01;
const TSTAR_R2_MIN: f64 = 0.99;
const TSTAR_DOUBLING_TOL: f64 = 0.05;
const LARGE_Q_TOL: f64 = 1e-2;
const TWO_DEFECT_TOL: f64 = 1e-8;
const REDUCTION_TOL: f64 = 1e-10;
const CLASSICAL_SPREAD_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-10;
/// Roundoff allowance for K̄ and probabilities that are exactly zero.
const POSITIVITY_SLACK: f64 = 1e-12;

/// Running record of every probability slice produced by the suite.
#[derive(Default)]
struct Ledger {
    slices: usize,
    worst_sum: f64,
    most_negative: f64,
}

impl Ledger {
    fn slice(&mut self, p: &[f64]) {
        self.slices += 1;
        self.worst_sum = self.worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        self.nonneg(p);
    }

    fn nonneg(&mut self, v: &[f64]) {
        self.most_negative = v.iter().copied().fold(self.most_negative, f64::min);
    }

    fn ok(&self) -> bool {
        self.worst_sum < NORM_TOL && self.most_negative >= -POSITIVITY_SLACK
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn ring_hamiltonian(n: usize, gamma: f64, defects: &[(usize, f64)]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        h[(i, j)] -= gamma;
        h[(j, i)] -= gamma;
    }
    for &(s, q) in defects {
        h[(s, s)] -= q;
    }
    h
}

/// Exact diagonalization of the ring with on-site defects.
struct Exact {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    n0: usize,
}

impl Exact {
    fn new(n: usize, gamma: f64, n0: usize, defects: &[(usize, f64)]) -> Self {
        Exact {
            eig: SymmetricEigen::new(ring_hamiltonian(n, gamma, defects)),
            n0,
        }
    }

    fn occupation(&self, t: f64) -> Vec<f64> {
        let v = &self.eig.eigenvectors;
        let n = v.nrows();
        (0..n)
            .map(|site| {
                let mut z = Complex64::new(0.0, 0.0);
                for (a, &e) in self.eig.eigenvalues.iter().enumerate() {
                    z += Complex64::from_polar(v[(site, a)] * v[(self.n0, a)], -e * t);
                }
                z.norm_sqr()
            })
            .collect()
    }

    fn time_average(&self) -> Vec<f64> {
        let v = &self.eig.eigenvectors;
        let n = v.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        let e = &self.eig.eigenvalues;
        order.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
        let scale = e.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &a in &order {
            match classes.last_mut() {
                Some(c) if (e[a] - e[*c.last().unwrap()]).abs() < 1e-9 * scale => c.push(a),
                _ => classes.push(vec![a]),
            }
        }
        (0..n)
            .map(|site| {
                classes
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|&a| v[(site, a)] * v[(self.n0, a)])
                            .sum::<f64>()
                            .powi(2)
                    })
                    .sum()
            })
            .collect()
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn periodic(n: usize, a: usize, b: usize) -> f64 {
    let d = (a as i64 - b as i64).rem_euclid(n as i64) as usize;
    d.min(n - d) as f64
}

fn moment_of(profile: &[f64], n0: usize, p: i32) -> f64 {
    let n = profile.len();
    profile
        .iter()
        .enumerate()
        .map(|(i, &v)| periodic(n, i, n0).powi(p) * v)
        .sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn spec(n: usize, gamma: f64, n0: usize) -> LatticeSpec {
    LatticeSpec::new(n, gamma, n0).unwrap()
}

fn criterion_1(rng: &mut ChaCha8Rng, ledger: &mut Ledger) -> Verdict {
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let n = rng.random_range(4..=64);
        let gamma = rng.random_range(0.5..2.0);
        let n0 = rng.random_range(0..n);
        let nd = rng.random_range(0..n);
        let q = rng.random_range(-5.0..5.0);
        let s = spec(n, gamma, n0);
        let solver = SingleDefect::new(&s, Defect::new(s.site(nd as i64), q)).unwrap();
        let exact = Exact::new(n, gamma, n0, &[(nd, q)]);
        for _ in 0..20 {
            let t = rng.random_range(0.0..3.0 * n as f64 / gamma);
            let p = solver.occupation(t).unwrap();
            ledger.slice(p.values());
            ledger.nonneg(&solver.correction_time(t).k);
            worst = worst.max(max_diff(p.values(), &exact.occupation(t)));
        }
    }
    verdict(
        worst < TIME_TOL,
        format!("max per-site difference {worst:.2e} over 1000 (tuple, time) points"),
    )
}

fn criterion_2(rng: &mut ChaCha8Rng, ledger: &mut Ledger) -> Verdict {
    let mut worst = 0.0_f64;
    for _ in 0..25 {
        let n = rng.random_range(3..=64);
        let gamma = rng.random_range(0.5..2.0);
        let n0 = rng.random_range(0..n);
        let nd = rng.random_range(0..n);
        let q = rng.random_range(-5.0..5.0);
        let s = spec(n, gamma, n0);
        let solver = SingleDefect::new(&s, Defect::new(s.site(nd as i64), q)).unwrap();
        let p = solver.steady_profile().unwrap();
        ledger.slice(p.values());
        ledger.nonneg(&solver.steady_correction().k);
        worst = worst.max(max_diff(
            p.values(),
            &Exact::new(n, gamma, n0, &[(nd, q)]).time_average(),
        ));
    }
    verdict(
        worst < STEADY_TOL,
        format!("max per-site difference {worst:.2e} over 25 tuples"),
    )
}

/// Defect-free steady profile: 2/N − 2/N² at n₀ and n₀ + N/2 (even N), 2/N − 1/N² at n₀ (odd N).
fn free_profile_formula(n: usize, n0: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            if n.is_multiple_of(2) {
                let special = i == n0 || i == (n0 + n / 2) % n;
                if special {
                    2.0 / nf - 2.0 / (nf * nf)
                } else {
                    1.0 / nf - 2.0 / (nf * nf)
                }
            } else if i == n0 {
                2.0 / nf - 1.0 / (nf * nf)
            } else {
                1.0 / nf - 1.0 / (nf * nf)
            }
        })
        .collect()
}

fn free_moment_formula(n: usize, p: MomentOrder) -> f64 {
    let nf = n as f64;
    match (n.is_multiple_of(2), p) {
        (true, MomentOrder::First) => nf / 4.0,
        (true, MomentOrder::Second) => (nf * nf + 2.0) / 12.0 + nf / 12.0 - 1.0 / (3.0 * nf),
        (false, MomentOrder::First) => (nf - 1.0).powi(2) * (nf + 1.0) / (4.0 * nf * nf),
        (false, MomentOrder::Second) => (nf - 1.0).powi(2) * (nf + 1.0) / (12.0 * nf),
    }
}

/// Infinite-strength steady profile with the Kronecker deltas taken literally.
fn strong_profile_formula(n: usize, nd: usize, n0: usize) -> Vec<f64> {
    let nf = n as f64;
    if nd == n0 {
        return (0..n).map(|i| if i == nd { 1.0 } else { 0.0 }).collect();
    }
    let mirror = (2 * nd + n - n0) % n;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    (0..n)
        .map(|i| {
            1.5 / nf * (d(i, mirror) + d(i, n0)) + (1.0 - d(i, mirror) - d(i, n0) - d(i, nd)) / nf
        })
        .collect()
}

fn criterion_3(ledger: &mut Ledger) -> Verdict {
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for n in 3..=200 {
        for n0 in [0, n / 3, n - 1] {
            let s = spec(n, 1.0, n0);
            let p = steady_profile(&s);
            ledger.slice(p.values());
            worst = worst.max(max_diff(p.values(), &free_profile_formula(n, n0)));
            for order in [MomentOrder::First, MomentOrder::Second] {
                let (a, b) = (steady_moment(order, &s), free_moment_formula(n, order));
                if !rel_close(a, b, CLOSED_FORM_TOL) {
                    failures.push(format!("free moment N={n} {order:?}: {a} vs {b}"));
                }
            }
        }
        for (n0, nd) in [
            (0, 0),
            (0, 1),
            (0, 2),
            (0, n / 2),
            (0, n / 3),
            (n / 2, n - 1),
            (1, n / 2 + 1),
        ] {
            let s = spec(n, 1.0, n0);
            let st = steady_profile_infinite_q(&s, s.site(nd as i64));
            ledger.slice(st.profile.values());
            let formula = strong_profile_formula(n, nd, n0);
            worst = worst.max(max_diff(st.profile.values(), &formula));
            for (order, p) in [(MomentOrder::First, 1), (MomentOrder::Second, 2)] {
                let a = steady_moments_infinite_q(order, &s, s.site(nd as i64));
                let b = moment_of(&formula, n0, p);
                if !rel_close(a, b, CLOSED_FORM_TOL) {
                    failures.push(format!(
                        "q->inf moment N={n} n0={n0} nd={nd} p={p}: {a} vs {b}"
                    ));
                }
            }
        }
    }
    if worst >= CLOSED_FORM_TOL {
        failures.push(format!("profile formula difference {worst:.2e}"));
    }

    let p50 = steady_profile(&spec(50, 1.0, 0));
    for (site, want) in [(0, 0.0392), (25, 0.0392), (7, 0.0192)] {
        if (p50.values()[site] - want).abs() > 5e-5 {
            failures.push(format!("N=50 P[{site}] = {} vs {want}", p50.values()[site]));
        }
    }
    let d4 = steady_moment(MomentOrder::Second, &spec(4, 1.0, 0));
    if (d4 - 1.75).abs() > CLOSED_FORM_TOL {
        failures.push(format!("N=4 defect-free msd = {d4} vs 1.75"));
    }
    let s = spec(50, 1.0, 22);
    let strong = steady_moments_infinite_q(MomentOrder::Second, &s, s.site(25));
    if (strong - 208.5).abs() > 0.05 {
        failures.push(format!(
            "N=50 q->inf msd (n_d=25, n0=22) = {strong:.4}, expected 208.5; the infinite-strength profile gives (S_2 + [2d]^2/2 - d^2)/N"
        ));
    }
    if failures.is_empty() {
        verdict(
            true,
            format!("all identities within {CLOSED_FORM_TOL:e}; spot values match"),
        )
    } else {
        verdict(false, failures.join("; "))
    }
}

fn criterion_4() -> Verdict {
    let mut worst = 0.0_f64;
    for n in [50, 200] {
        for gamma in [0.5, 1.0, 2.0] {
            let s = spec(n, gamma, n / 2);
            let times: Vec<f64> = (0..=50).map(|i| 0.05 / gamma * i as f64 / 50.0).collect();
            let series = moment_series(MomentOrder::Second, &s, &times);
            let num: f64 = times
                .iter()
                .zip(&series.values)
                .map(|(t, y)| t * t * y)
                .sum();
            let den: f64 = times.iter().map(|t| t.powi(4)).sum();
            let d = num / den;
            worst = worst.max((d / (2.0 * gamma * gamma) - 1.0).abs());
        }
    }
    verdict(
        worst < BALLISTIC_REL_TOL,
        format!("max relative deviation of D from 2 gamma^2: {worst:.2e}"),
    )
}

fn criterion_5() -> Verdict {
    let sizes = [50usize, 100, 150, 200, 300, 400];
    let stars: Vec<f64> = sizes
        .iter()
        .map(|&n| estimate_tstar(&spec(n, 1.0, n / 2), 0.01).unwrap())
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, stars.iter().sum::<f64>() / k);
    let sxy: f64 = xs
        .iter()
        .zip(&stars)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = stars.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let mut worst_ratio = 0.0_f64;
    for (a, b) in [(50, 100), (100, 200), (150, 300), (200, 400)] {
        let ia = sizes.iter().position(|&n| n == a).unwrap();
        let ib = sizes.iter().position(|&n| n == b).unwrap();
        worst_ratio = worst_ratio.max((stars[ib] / stars[ia] / 2.0 - 1.0).abs());
    }
    verdict(
        r2 > TSTAR_R2_MIN && worst_ratio < TSTAR_DOUBLING_TOL,
        format!("R^2 = {r2:.5}, worst doubling deviation {worst_ratio:.3}, t* = {stars:.3?}"),
    )
}

fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Strictly up then strictly down, with the peak strictly inside.
fn rises_then_falls(v: &[f64]) -> bool {
    let peak = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    peak > 0
        && peak + 1 < v.len()
        && v[..=peak].windows(2).all(|w| w[1] > w[0])
        && v[peak..].windows(2).all(|w| w[1] < w[0])
}

/// Global minimum strictly inside the sweep, below both endpoints.
fn interior_minimum(v: &[f64]) -> bool {
    let low = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    low > 0 && low + 1 < v.len() && v[low] < v[0] && v[low] < v[v.len() - 1]
}

fn monotone(v: &[f64], increasing: bool) -> bool {
    v.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn criterion_6(ledger: &mut Ledger) -> Verdict {
    let qs = logspace(0.05, 50.0, 40);
    let sweep = |n0: usize, nd: usize, ledger: &mut Ledger| -> (Vec<f64>, Vec<f64>) {
        let s = spec(50, 1.0, n0);
        let mut occ = Vec::new();
        let mut msd = Vec::new();
        for &q in &qs {
            let solver = SingleDefect::new(&s, Defect::new(s.site(nd as i64), q)).unwrap();
            let p = solver.steady_profile().unwrap();
            ledger.slice(p.values());
            ledger.nonneg(&solver.steady_correction().k);
            occ.push(p.values()[nd]);
            msd.push(solver.steady_moment(MomentOrder::Second).unwrap());
        }
        (occ, msd)
    };
    let (occ, msd) = sweep(2, 4, ledger);
    let (occ_same, msd_same) = sweep(2, 2, ledger);
    let checks = [
        ("P[n_d] rises then falls (n_d=4)", rises_then_falls(&occ)),
        ("msd has interior minimum (n_d=4)", interior_minimum(&msd)),
        ("P[n_d] increasing (n_d=n0)", monotone(&occ_same, true)),
        ("msd decreasing (n_d=n0)", monotone(&msd_same, false)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() {
        verdict(true, "all four sign patterns hold over 40 strengths")
    } else {
        verdict(false, format!("failed: {}", failed.join(", ")))
    }
}

fn criterion_7(ledger: &mut Ledger) -> Verdict {
    let (n, n0, nd) = (50, 2, 4);
    let s = spec(n, 1.0, n0);
    let limit = steady_profile_infinite_q(&s, s.site(nd));
    let diffs: Vec<Vec<f64>> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&q| {
            let p = SingleDefect::new(&s, Defect::new(s.site(nd), q))
                .unwrap()
                .steady_profile()
                .unwrap();
            ledger.slice(p.values());
            p.values()
                .iter()
                .zip(limit.profile.values())
                .map(|(a, b)| (a - b).abs())
                .collect()
        })
        .collect();
    let decreasing = (0..n).all(|i| diffs[1][i] < diffs[0][i] && diffs[2][i] < diffs[1][i]);
    let last = diffs[2].iter().copied().fold(0.0, f64::max);
    let maxes: Vec<f64> = diffs
        .iter()
        .map(|d| d.iter().copied().fold(0.0, f64::max))
        .collect();
    verdict(
        decreasing && last < LARGE_Q_TOL,
        format!(
            "max per-site distance at q = 1e2, 1e3, 1e4: {}; per-site decrease {decreasing}",
            maxes
                .iter()
                .map(|m| format!("{m:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_8(rng: &mut ChaCha8Rng, ledger: &mut Ledger) -> Verdict {
    let mut worst = 0.0_f64;
    for _ in 0..25 {
        let n = rng.random_range(4..=32);
        let gamma = rng.random_range(0.5..2.0);
        let n0 = rng.random_range(0..n);
        let d1 = rng.random_range(0..n);
        let d2 = (d1 + rng.random_range(1..n)) % n;
        let (q1, q2) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let s = spec(n, gamma, n0);
        let set = DefectSet::new(vec![
            Defect::new(s.site(d1 as i64), q1),
            Defect::new(s.site(d2 as i64), q2),
        ])
        .unwrap();
        let solver = TwoDefect::new(&s, &set).unwrap();
        let exact = Exact::new(n, gamma, n0, &[(d1, q1), (d2, q2)]);
        for _ in 0..10 {
            let t = rng.random_range(0.0..3.0 * n as f64 / gamma);
            let p = solver.occupation(t).unwrap();
            ledger.slice(p.values());
            worst = worst.max(max_diff(p.values(), &exact.occupation(t)));
        }
    }
    let mut reduction = 0.0_f64;
    for _ in 0..10 {
        let n = rng.random_range(4..=32);
        let n0 = rng.random_range(0..n);
        let d1 = rng.random_range(0..n);
        let d2 = (d1 + rng.random_range(1..n)) % n;
        let q1 = rng.random_range(-4.0..4.0);
        let s = spec(n, 1.0, n0);
        let set = DefectSet::new(vec![
            Defect::new(s.site(d1 as i64), q1),
            Defect::new(s.site(d2 as i64), 0.0),
        ])
        .unwrap();
        let two = TwoDefect::new(&s, &set).unwrap();
        let one = SingleDefect::new(&s, Defect::new(s.site(d1 as i64), q1)).unwrap();
        for _ in 0..5 {
            let t = rng.random_range(0.0..2.0 * n as f64);
            let a = two.occupation(t).unwrap();
            ledger.slice(a.values());
            reduction = reduction.max(max_diff(a.values(), one.occupation(t).unwrap().values()));
        }
    }
    verdict(
        worst < TWO_DEFECT_TOL && reduction < REDUCTION_TOL,
        format!("max per-site difference vs exact {worst:.2e}; q2 = 0 reduction {reduction:.2e}"),
    )
}

fn criterion_9(ledger: &mut Ledger) -> Verdict {
    let (n, bulk) = (20, 1.0);
    let mut msds = Vec::new();
    let mut worst_uniform = 0.0_f64;
    for n0 in 0..n {
        let uniform = moment_of(&vec![1.0 / n as f64; n], n0, 2);
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let st =
                barrier_walk_steady(&BarrierWalkSpec::new(n, bulk, frac * bulk, 3, n0).unwrap())
                    .unwrap();
            ledger.slice(st.profile.values());
            worst_uniform = worst_uniform.max((st.msd - uniform).abs());
            msds.push(st.msd);
        }
    }
    let spread = msds.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - msds.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        spread < CLASSICAL_SPREAD_TOL && worst_uniform < CLASSICAL_SPREAD_TOL,
        format!("msd spread {spread:.2e} over 5 barrier rates x 20 starts; distance from uniform {worst_uniform:.2e}"),
    )
}

fn criterion_10(ledger: &Ledger) -> Verdict {
    verdict(
        ledger.ok(),
        format!(
            "{} slices, worst |sum - 1| {:.2e}, most negative value {:.2e}",
            ledger.slices, ledger.worst_sum, ledger.most_negative
        ),
    )
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
    let mut ledger = Ledger::default();
    let mut results: Vec<(usize, Verdict, Duration, Duration)> = Vec::new();
    let mut timed = |id: usize, budget_s: u64, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        results.push((id, v, start.elapsed(), Duration::from_secs(budget_s)));
    };
    timed(1, 30, &mut || criterion_1(&mut rng, &mut ledger));
    timed(2, 30, &mut || criterion_2(&mut rng, &mut ledger));
    timed(3, 5, &mut || criterion_3(&mut ledger));
    timed(4, 5, &mut criterion_4);
    timed(5, 60, &mut criterion_5);
    timed(6, 120, &mut || criterion_6(&mut ledger));
    timed(7, 60, &mut || criterion_7(&mut ledger));
    timed(8, 60, &mut || criterion_8(&mut rng, &mut ledger));
    timed(9, 10, &mut || criterion_9(&mut ledger));
    timed(10, 1, &mut || criterion_10(&ledger));

    let mut failed = 0;
    for (id, v, elapsed, budget) in &results {
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2}: {} ({:.2} s of {} s) {}{}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail,
            if in_time { "" } else { "; over time budget" },
        );
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
