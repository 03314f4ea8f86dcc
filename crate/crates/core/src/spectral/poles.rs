//! The single-defect denominator 𝒬(x) = (x²−1)U_{N−1}(x) − c[T_N(x)+1] with
//! c = q/2γ, its numerator 𝒫(x) = T_{N−d}(x) + T_d(x), and the pole set.
//!
//! Both polynomials share the factor s(x) with T_N + 1 = 2T_h² (even N,
//! h = N/2) or (1+x)V_h² (odd N, h = (N−1)/2):
//!
//! * even N: 𝒬 = 2T_h·[(x²−1)U_{h−1} − cT_h],  𝒫 = 2T_h·T_{h−d}
//! * odd N:  𝒬 = (1+x)V_h·[(x−1)W_h − cV_h],   𝒫 = (1+x)V_h·V_{h−d}
//!
//! Roots of s are removable and carry zero residue. The bracketed factor
//! Q_s divided by σ = T_h (or V_h) is strictly increasing between
//! consecutive roots of σ, which gives one exact bracket per physical pole.

use crate::error::{Error, Result};
use crate::lattice::{periodic_distance, Defect, LatticeSpec, PeriodicDistance};

use super::cheb::{cheb_t, cheb_u, cheb_v, cheb_w, Jet, Scalar, ScaledJet};
use super::roots::refine_bracketed;

/// 𝒬 and 𝒫 for one defect: ring size, c = q/2γ and d = [n_d − n₀].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectDenominator {
    n: usize,
    c: f64,
    d: usize,
}

impl DefectDenominator {
    pub fn new(spec: &LatticeSpec, defect: &Defect) -> Self {
        DefectDenominator {
            n: spec.sites(),
            c: defect.strength / (2.0 * spec.gamma()),
            d: periodic_distance(defect.site, spec.n0(), spec.sites()).get(),
        }
    }

    pub fn from_parts(n: usize, q_over_2gamma: f64, d: PeriodicDistance) -> Self {
        DefectDenominator {
            n,
            c: q_over_2gamma,
            d: d.get(),
        }
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn q_over_2gamma(&self) -> f64 {
        self.c
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    fn half(&self) -> usize {
        self.n / 2
    }

    /// σ: T_h (even N) or V_h (odd N).
    fn sigma<S: Scalar>(&self, x: S) -> S {
        if self.n.is_multiple_of(2) {
            cheb_t(self.half(), x)
        } else {
            cheb_v(self.half(), x)
        }
    }

    /// Q_s: the factor of 𝒬 whose roots are the physical poles.
    fn reduced<S: Scalar>(&self, x: S) -> S {
        let h = self.half();
        let one = S::from_f64(1.0);
        if self.n.is_multiple_of(2) {
            (x * x - one) * cheb_u(h - 1, x) - cheb_t(h, x).scale(self.c)
        } else {
            (x - one) * cheb_w(h, x) - cheb_v(h, x).scale(self.c)
        }
    }

    /// ν: T_{h−d} (even N) or V_{h−d} (odd N).
    fn numerator<S: Scalar>(&self, x: S) -> S {
        let m = self.half() - self.d;
        if self.n.is_multiple_of(2) {
            cheb_t(m, x)
        } else {
            cheb_v(m, x)
        }
    }

    /// 𝒬 in any scalar type (jets give the analytic derivatives).
    pub fn q_poly<S: Scalar>(&self, x: S) -> S {
        let one = S::from_f64(1.0);
        (x * x - one) * cheb_u(self.n - 1, x) - (cheb_t(self.n, x) + one).scale(self.c)
    }

    /// 𝒫 in any scalar type.
    pub fn p_poly<S: Scalar>(&self, x: S) -> S {
        cheb_t(self.n - self.d, x) + cheb_t(self.d, x)
    }

    /// Q_s/σ as a jet; finite away from the roots of σ even for |x| ≫ 1.
    fn ratio(&self, x: f64) -> Jet {
        let xs = ScaledJet::variable(x);
        (self.reduced(xs) / self.sigma(xs)).to_jet()
    }
}

/// 𝒬(x).
pub fn eval_q(d: &DefectDenominator, x: f64) -> f64 {
    d.q_poly(x)
}

/// 𝒫(x).
pub fn eval_p(d: &DefectDenominator, x: f64) -> f64 {
    d.p_poly(x)
}

/// Half-width W of the search interval [−1−W, 1+W].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateWindow {
    pub half_width: f64,
}

impl BoundStateWindow {
    /// W = |q|/2γ + 1, outside the spectral bound ‖H‖ ≤ 2γ + |q|.
    pub fn for_denominator(d: &DefectDenominator) -> Self {
        BoundStateWindow {
            half_width: d.c.abs() + 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoleClass {
    InBand,
    BoundState,
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub x: f64,
    pub f: f64,
    pub class: PoleClass,
    /// Root of the common factor s(x); residue is identically zero.
    pub removable: bool,
}

/// Roots of 𝒬 sorted ascending, with residues f_j = 𝒫(x_j)/𝒬′(x_j).
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    poles: Vec<Pole>,
}

impl PoleSet {
    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// Poles that contribute to Φ.
    pub fn active(&self) -> impl Iterator<Item = &Pole> + '_ {
        self.poles
            .iter()
            .filter(|p| p.class != PoleClass::Discarded)
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Sum of residues; equals 1 when n_d = n₀.
    pub fn residue_sum(&self) -> f64 {
        self.active().map(|p| p.f).sum()
    }
}

/// Relative residue cutoff below which a physical pole is marked Discarded.
pub const RESIDUE_TOL: f64 = 1e-13;
/// Lower bound on d(Q_s/σ)/dx at a root; the ratio is increasing, so a
/// flatter slope means the bracket collapsed onto a double root.
pub const SIMPLE_POLE_TOL: f64 = 1e-8;

/// All real roots of 𝒬 in [−1−W, 1+W] with residues and classes.
pub fn find_poles(d: &DefectDenominator, window: BoundStateWindow) -> Result<PoleSet> {
    if d.c == 0.0 {
        return Err(Error::InvalidArgument(
            "q = 0 has no defect poles; use the homogeneous solution".into(),
        ));
    }
    let edge = 1.0 + window.half_width;
    let nodes: Vec<f64> = strong_defect_nodes(d.n)
        .into_iter()
        .rev()
        .map(|(_, x)| x)
        .collect();
    let expected = d.half() + 1;

    let left = d.ratio(-edge);
    let right = d.ratio(edge);
    if !(left.v < 0.0 && right.v > 0.0) {
        return Err(Error::PoleCountMismatch {
            found: expected - usize::from(left.v >= 0.0) - usize::from(right.v <= 0.0),
            expected,
        });
    }

    let mut bounds = Vec::with_capacity(nodes.len() + 2);
    bounds.push(-edge);
    bounds.extend(&nodes);
    bounds.push(edge);

    let mut located: Vec<(f64, f64)> = Vec::with_capacity(expected);
    for w in bounds.windows(2) {
        let x = refine_bracketed(|x| d.ratio(x), w[0], w[1], -1.0);
        let slope = d.ratio(x).d1;
        let xs = ScaledJet::variable(x);
        let nu_over_sigma = (d.numerator(xs) / d.sigma(xs)).to_jet().v;
        located.push((x, nu_over_sigma / slope));
    }
    if located.len() != expected {
        return Err(Error::PoleCountMismatch {
            found: located.len(),
            expected,
        });
    }

    for &(x, _) in &located {
        let s = d.ratio(x).d1;
        if !(s.is_finite() && s > SIMPLE_POLE_TOL) {
            return Err(Error::NonSimplePole { x, derivative: s });
        }
    }

    let max_f = located.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let mut poles: Vec<Pole> = located
        .into_iter()
        .map(|(x, f)| {
            let class = if f.abs() < RESIDUE_TOL * max_f {
                PoleClass::Discarded
            } else if x.abs() <= 1.0 {
                PoleClass::InBand
            } else {
                PoleClass::BoundState
            };
            Pole {
                x,
                f,
                class,
                removable: false,
            }
        })
        .collect();

    let removable = nodes.iter().copied().chain((d.n % 2 == 1).then_some(-1.0));
    poles.extend(removable.map(|x| Pole {
        x,
        f: 0.0,
        class: PoleClass::Discarded,
        removable: true,
    }));
    poles.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(PoleSet { poles })
}

/// θ_k = π(2k−1)/N and x_k = cos θ_k for k = 1..⌊N/2⌋.
pub fn strong_defect_nodes(n: usize) -> Vec<(f64, f64)> {
    (1..=n / 2)
        .map(|k| {
            let th = std::f64::consts::PI * (2 * k - 1) as f64 / n as f64;
            (th, th.cos())
        })
        .collect()
}

/// Checks the physical poles against a dense spectrum: every eigenvalue E
/// with |⟨n_d|α⟩| > `amp_tol` must appear as a pole at −E/2γ, and no
/// other physical pole may exist.
pub fn reconcile_with_spectrum(
    poles: &PoleSet,
    gamma: f64,
    eigenvalues: &[f64],
    defect_amplitudes: &[f64],
    tol: f64,
) -> Result<()> {
    let mut expected: Vec<f64> = eigenvalues
        .iter()
        .zip(defect_amplitudes)
        .filter(|(_, a)| a.abs() > 1e-8)
        .map(|(e, _)| -e / (2.0 * gamma))
        .collect();
    expected.sort_by(f64::total_cmp);
    let physical: Vec<f64> = poles
        .poles
        .iter()
        .filter(|p| !p.removable)
        .map(|p| p.x)
        .collect();
    if physical.len() != expected.len()
        || physical
            .iter()
            .zip(&expected)
            .any(|(a, b)| (a - b).abs() > tol * b.abs().max(1.0))
    {
        return Err(Error::PoleCountMismatch {
            found: physical.len(),
            expected: expected.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteIndex;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn denominator(n: usize, gamma: f64, q: f64, nd: usize, n0: usize) -> DefectDenominator {
        let spec = LatticeSpec::new(n, gamma, n0).unwrap();
        DefectDenominator::new(&spec, &Defect::new(SiteIndex::new(nd as i64, n), q))
    }

    fn dense(n: usize, gamma: f64, q: f64, nd: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            h[(i, j)] -= gamma;
            h[(j, i)] -= gamma;
        }
        h[(nd, nd)] -= q;
        SymmetricEigen::new(h)
    }

    #[test]
    fn eval_q_examples() {
        let d = DefectDenominator::from_parts(
            4,
            0.5,
            periodic_distance(SiteIndex::new(0, 4), SiteIndex::new(0, 4), 4),
        );
        assert!((eval_q(&d, 1.0) + 1.0).abs() < 1e-14);
        let free = DefectDenominator { n: 4, c: 0.0, d: 0 };
        let expect = (0.09 - 1.0) * cheb_u(3, 0.3);
        assert!((eval_q(&free, 0.3) - expect).abs() < 1e-15);
        for n in 3..12 {
            let free = DefectDenominator { n, c: 0.0, d: 0 };
            for k in 1..n {
                let x = (std::f64::consts::PI * k as f64 / n as f64).cos();
                assert!(eval_q(&free, x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_matches_full_polynomials() {
        for n in 3..30 {
            for d in 0..=n / 2 {
                let den = DefectDenominator { n, c: 0.73, d };
                for &x in &[-1.7, -0.9, -0.2, 0.4, 0.95, 1.3] {
                    let s = if n % 2 == 0 {
                        2.0 * cheb_t(n / 2, x)
                    } else {
                        (1.0 + x) * cheb_v(n / 2, x)
                    };
                    let q = s * den.reduced(x);
                    let p = s * den.numerator(x);
                    let scale = den.q_poly(x).abs().max(1.0);
                    assert!(
                        (q - den.q_poly(x)).abs() < 1e-11 * scale,
                        "N={n} d={d} x={x}"
                    );
                    let scale = den.p_poly(x).abs().max(1.0);
                    assert!((p - den.p_poly(x)).abs() < 1e-11 * scale);
                }
            }
        }
    }

    #[test]
    fn poles_match_dense_spectrum_n4() {
        let d = denominator(4, 1.0, 1.0, 1, 1);
        let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
        let eig = dense(4, 1.0, 1.0, 1);
        let amps: Vec<f64> = (0..4).map(|a| eig.eigenvectors[(1, a)]).collect();
        reconcile_with_spectrum(&poles, 1.0, eig.eigenvalues.as_slice(), &amps, 1e-12).unwrap();
        assert!((poles.residue_sum() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn residues_are_eigenvector_products() {
        let (n, gamma, q, nd, n0) = (9, 0.7, -2.3, 5, 1);
        let d = denominator(n, gamma, q, nd, n0);
        let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
        let eig = dense(n, gamma, q, nd);
        for p in poles.active() {
            let e = -2.0 * gamma * p.x;
            let a = (0..n)
                .min_by(|&a, &b| {
                    (eig.eigenvalues[a] - e)
                        .abs()
                        .total_cmp(&(eig.eigenvalues[b] - e).abs())
                })
                .unwrap();
            assert!((eig.eigenvalues[a] - e).abs() < 1e-12);
            let prod = eig.eigenvectors[(nd, a)] * eig.eigenvectors[(n0, a)];
            assert!(
                (prod - p.f).abs() < 1e-12,
                "x={} f={} oracle={}",
                p.x,
                p.f,
                prod
            );
        }
    }

    #[test]
    fn weak_defect_poles_approach_free_nodes() {
        let d = denominator(6, 1.0, 1e-7, 0, 0);
        let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
        for p in poles.poles().iter().filter(|p| !p.removable) {
            let nearest = (0..=6)
                .map(|k| (std::f64::consts::PI * k as f64 / 6.0).cos())
                .map(|c| (c - p.x).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6, "pole {} not near a node", p.x);
        }
    }

    #[test]
    fn strong_defect_has_single_bound_state() {
        let d = denominator(50, 1.0, 20.0, 2, 2);
        let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
        let bound: Vec<&Pole> = poles
            .poles()
            .iter()
            .filter(|p| p.class == PoleClass::BoundState)
            .collect();
        assert_eq!(bound.len(), 1);
        assert!(bound[0].x > 1.0 && bound[0].x <= 1.0 + 10.0);
        assert_eq!(poles.len(), 51);
    }

    #[test]
    fn huge_defect_large_ring_stays_finite() {
        let d = denominator(400, 1.0, 1e4, 10, 3);
        let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
        assert!(poles
            .poles()
            .iter()
            .all(|p| p.x.is_finite() && p.f.is_finite()));
        assert!(poles.residue_sum().abs() < 1e-10);
    }

    #[test]
    fn zero_strength_is_rejected() {
        let d = denominator(5, 1.0, 0.0, 0, 0);
        assert!(find_poles(&d, BoundStateWindow::for_denominator(&d)).is_err());
    }

    #[test]
    fn strong_nodes_examples() {
        let n4 = strong_defect_nodes(4);
        assert_eq!(n4.len(), 2);
        assert!((n4[0].1 - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((n4[1].1 + 0.5f64.sqrt()).abs() < 1e-15);
        let n3 = strong_defect_nodes(3);
        assert_eq!(n3.len(), 1);
        assert!((n3[0].1 - 0.5).abs() < 1e-15);
        let n50 = strong_defect_nodes(50);
        assert_eq!(n50.len(), 25);
        assert!(n50.windows(2).all(|w| w[1].1 < w[0].1));
        assert!(n50.iter().all(|p| p.1.abs() < 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residual_and_oracle_agreement(
            n in 3usize..40,
            gamma in 0.5f64..2.0,
            q in -15.0f64..15.0,
            nd in 0usize..40,
            n0 in 0usize..40,
        ) {
            prop_assume!(q.abs() > 1e-3);
            let (nd, n0) = (nd % n, n0 % n);
            let d = denominator(n, gamma, q, nd, n0);
            let poles = find_poles(&d, BoundStateWindow::for_denominator(&d)).unwrap();
            prop_assert_eq!(poles.len(), n + 1);
            prop_assert!(poles.poles().windows(2).all(|w| w[0].x <= w[1].x));
            for p in poles.poles().iter().filter(|p| !p.removable) {
                let g = d.ratio(p.x);
                prop_assert!(g.v.abs() <= 1e-12 * (d.c.abs() + g.d1.abs() * p.x.abs().max(1.0)));
            }
            let eig = dense(n, gamma, q, nd);
            let amps: Vec<f64> = (0..n).map(|a| eig.eigenvectors[(nd, a)]).collect();
            prop_assert!(reconcile_with_spectrum(
                &poles, gamma, eig.eigenvalues.as_slice(), &amps, 1e-9).is_ok());
            let expect_sum = if nd == n0 { 1.0 } else { 0.0 };
            prop_assert!((poles.residue_sum() - expect_sum).abs() < 1e-10);
        }

        #[test]
        fn poles_move_continuously_in_q(n in 4usize..24, q in 0.2f64..8.0, dist in 0usize..12) {
            let d0 = DefectDenominator { n, c: q / 2.0, d: dist % (n / 2 + 1) };
            let d1 = DefectDenominator { c: (q + 1e-6) / 2.0, ..d0 };
            let a = find_poles(&d0, BoundStateWindow::for_denominator(&d0)).unwrap();
            let b = find_poles(&d1, BoundStateWindow::for_denominator(&d1)).unwrap();
            for (pa, pb) in a.poles().iter().zip(b.poles()) {
                prop_assert!((pa.x - pb.x).abs() < 1e-5);
            }
        }
    }
}
