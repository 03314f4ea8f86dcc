//! Lattice arena: chain geometry, site arithmetic on the ring and the
//! closed-form lattice sums that every moment computation reduces to.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A site on the ring, always stored reduced modulo the ring size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteIndex(usize);

impl SiteIndex {
    /// Reduces an arbitrary (possibly negative) integer label onto `0..n`.
    pub fn new(raw: i64, n: usize) -> Self {
        SiteIndex(raw.rem_euclid(n as i64) as usize)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Site shifted by `by` positions around a ring of `n` sites.
    pub fn shifted(self, by: i64, n: usize) -> Self {
        SiteIndex::new(self.0 as i64 + by, n)
    }
}

impl From<SiteIndex> for usize {
    fn from(s: SiteIndex) -> usize {
        s.0
    }
}

/// Minimum distance between two sites on the ring, in `0..=n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeriodicDistance(usize);

impl PeriodicDistance {
    pub fn get(self) -> usize {
        self.0
    }
}

/// Chain size, hopping strength and initial site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    sites: usize,
    gamma: f64,
    n0: SiteIndex,
}

impl LatticeSpec {
    pub fn new(sites: usize, gamma: f64, n0: usize) -> Result<Self> {
        if sites < 3 {
            return Err(Error::InvalidLattice(format!(
                "ring needs at least 3 sites, got {sites}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "hopping strength must be positive and finite, got {gamma}"
            )));
        }
        if n0 >= sites {
            return Err(Error::InvalidLattice(format!(
                "initial site {n0} outside 0..{sites}"
            )));
        }
        Ok(LatticeSpec {
            sites,
            gamma,
            n0: SiteIndex(n0),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n0(&self) -> SiteIndex {
        self.n0
    }

    pub fn site(&self, raw: i64) -> SiteIndex {
        SiteIndex::new(raw, self.sites)
    }

    /// Same ring and hopping, different initial site.
    pub fn with_n0(&self, n0: SiteIndex) -> Self {
        LatticeSpec {
            n0: SiteIndex::new(n0.get() as i64, self.sites),
            ..*self
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        LatticeSpec::new(self.sites, gamma, self.n0.get())
    }

    pub fn is_even(&self) -> bool {
        self.sites.is_multiple_of(2)
    }

    /// Lattice mode angle 2πk/N.
    pub fn mode_angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.sites as f64
    }

    /// [n − n₀] for every site, in site order.
    pub fn distances_from_start(&self) -> Vec<usize> {
        (0..self.sites)
            .map(|n| periodic_distance(SiteIndex(n), self.n0, self.sites).get())
            .collect()
    }
}

/// An on-site energy defect of signed strength `strength` at `site`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub site: SiteIndex,
    pub strength: f64,
}

impl Defect {
    pub fn new(site: SiteIndex, strength: f64) -> Self {
        Defect { site, strength }
    }
}

/// Ordered list of defects with distinct sites.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefectSet(Vec<Defect>);

impl DefectSet {
    pub fn new(defects: Vec<Defect>) -> Result<Self> {
        for (i, a) in defects.iter().enumerate() {
            if !a.strength.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "defect strength must be finite, got {}",
                    a.strength
                )));
            }
            if defects[..i].iter().any(|b| b.site == a.site) {
                return Err(Error::DuplicateDefectSite(a.site.get()));
            }
        }
        Ok(DefectSet(defects))
    }

    pub fn empty() -> Self {
        DefectSet(Vec::new())
    }

    pub fn single(site: SiteIndex, strength: f64) -> Result<Self> {
        DefectSet::new(vec![Defect::new(site, strength)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Defect> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Defect] {
        &self.0
    }
}

/// Order p of the displacement moment ⟨[n − n₀]^p⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentOrder {
    First,
    Second,
}

impl MomentOrder {
    pub fn exponent(self) -> u32 {
        match self {
            MomentOrder::First => 1,
            MomentOrder::Second => 2,
        }
    }

    /// d^p for a periodic distance d.
    pub fn weight(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            MomentOrder::First => d,
            MomentOrder::Second => d * d,
        }
    }
}

impl TryFrom<u32> for MomentOrder {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        match p {
            1 => Ok(MomentOrder::First),
            2 => Ok(MomentOrder::Second),
            other => Err(Error::UnsupportedMoment(other)),
        }
    }
}

/// min(|a − b|, N − |a − b|).
pub fn periodic_distance(a: SiteIndex, b: SiteIndex, n: usize) -> PeriodicDistance {
    let d = a.get().abs_diff(b.get()) % n;
    PeriodicDistance(d.min(n - d))
}

/// ∑ₙ [n − n₀]^p over the whole ring; independent of n₀.
pub fn distance_power_sum(p: MomentOrder, n: usize) -> f64 {
    let nf = n as f64;
    match (p, n.is_multiple_of(2)) {
        (MomentOrder::First, true) => nf * nf / 4.0,
        (MomentOrder::First, false) => (nf * nf - 1.0) / 4.0,
        (MomentOrder::Second, true) => nf * (nf * nf + 2.0) / 12.0,
        (MomentOrder::Second, false) => nf * (nf * nf - 1.0) / 12.0,
    }
}

/// Closed forms of ∑_{n=1}^{N−1} [n]^p cos(2πyn/N), selected by the
/// parities of y and N. Valid for y ≢ 0 (mod N).
pub fn cosine_weighted_sum(p: MomentOrder, y: i64, n: usize) -> Result<f64> {
    if y.rem_euclid(n as i64) == 0 {
        return Err(Error::InvalidArgument(format!(
            "closed form needs y ≢ 0 mod {n}, got y = {y}"
        )));
    }
    let nf = n as f64;
    let yf = y as f64;
    let y_even = y.rem_euclid(2) == 0;
    let n_even = n.is_multiple_of(2);
    let sign = if y_even { 1.0 } else { -1.0 };
    let s = (PI * yf / nf).sin();
    let value = match (p, y_even, n_even) {
        (MomentOrder::First, true, true) => 0.0,
        (MomentOrder::First, false, true) => -1.0 / (s * s),
        (MomentOrder::First, true, false) => {
            let c = (PI * yf / (2.0 * nf)).cos();
            -1.0 / (4.0 * c * c)
        }
        (MomentOrder::First, false, false) => {
            let h = (PI * yf / (2.0 * nf)).sin();
            -1.0 / (4.0 * h * h)
        }
        (MomentOrder::Second, _, true) => nf * sign / (2.0 * s * s),
        (MomentOrder::Second, _, false) => nf * sign * (PI * yf / nf).cos() / (2.0 * s * s),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(v: usize) -> SiteIndex {
        SiteIndex(v)
    }

    /// Double-double number (hi + lo) for an oracle free of cancellation.
    #[derive(Clone, Copy)]
    struct Dd(f64, f64);

    impl Dd {
        fn from(v: f64) -> Dd {
            Dd(v, 0.0)
        }
        fn add(self, o: Dd) -> Dd {
            let s = self.0 + o.0;
            let bb = s - self.0;
            let e = (self.0 - (s - bb)) + (o.0 - bb) + self.1 + o.1;
            let hi = s + e;
            Dd(hi, e - (hi - s))
        }
        fn mul(self, o: Dd) -> Dd {
            let p = self.0 * o.0;
            let e = self.0.mul_add(o.0, -p) + self.0 * o.1 + self.1 * o.0;
            let hi = p + e;
            Dd(hi, e - (hi - p))
        }
        fn div(self, d: f64) -> Dd {
            let q = self.0 / d;
            let r = self.add(Dd::from(d).mul(Dd::from(-q)));
            let q2 = r.0 / d;
            Dd::from(q).add(Dd::from(q2))
        }
    }

    const PI_DD: Dd = Dd(std::f64::consts::PI, 1.2246467991473532e-16);

    fn dd_cos_two_pi_fraction(r: i64, n: i64) -> Dd {
        let r = if 2 * r > n { r - n } else { r };
        let theta = PI_DD.mul(Dd::from(2.0 * r as f64)).div(n as f64);
        let minus_sq = theta.mul(theta).mul(Dd::from(-1.0));
        let mut term = Dd::from(1.0);
        let mut sum = Dd::from(1.0);
        for k in 1..40 {
            term = term.mul(minus_sq).div(((2 * k - 1) * (2 * k)) as f64);
            sum = sum.add(term);
        }
        sum
    }

    fn direct_cosine_sum(p: MomentOrder, y: i64, n: usize) -> f64 {
        let mut sum = Dd::from(0.0);
        for m in 1..n {
            let d = m.min(n - m);
            let r = (y * m as i64).rem_euclid(n as i64);
            sum = sum.add(dd_cos_two_pi_fraction(r, n as i64).mul(Dd::from(p.weight(d))));
        }
        sum.0 + sum.1
    }

    #[test]
    fn distance_examples() {
        assert_eq!(periodic_distance(site(0), site(0), 50).get(), 0);
        assert_eq!(periodic_distance(site(2), site(27), 50).get(), 25);
        assert_eq!(periodic_distance(site(1), site(48), 50).get(), 3);
    }

    #[test]
    fn site_index_reduces() {
        assert_eq!(SiteIndex::new(-1, 7).get(), 6);
        assert_eq!(SiteIndex::new(15, 7).get(), 1);
        assert_eq!(site(3).shifted(-5, 4).get(), 2);
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(LatticeSpec::new(2, 1.0, 0).is_err());
        assert!(LatticeSpec::new(5, 0.0, 0).is_err());
        assert!(LatticeSpec::new(5, -1.0, 0).is_err());
        assert!(LatticeSpec::new(5, 1.0, 5).is_err());
        assert!(LatticeSpec::new(3, 1.0, 2).is_ok());
    }

    #[test]
    fn defect_set_rejects_duplicates() {
        let a = Defect::new(site(2), 1.0);
        let b = Defect::new(site(2), -1.0);
        assert_eq!(
            DefectSet::new(vec![a, b]).unwrap_err(),
            Error::DuplicateDefectSite(2)
        );
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(distance_power_sum(MomentOrder::First, 4), 4.0);
        assert_eq!(distance_power_sum(MomentOrder::Second, 5), 10.0);
        assert_eq!(distance_power_sum(MomentOrder::Second, 4), 6.0);
        assert_eq!(MomentOrder::try_from(3), Err(Error::UnsupportedMoment(3)));
    }

    #[test]
    fn power_sum_matches_direct_sum() {
        for n in 3..=1000usize {
            for p in [MomentOrder::First, MomentOrder::Second] {
                let direct: f64 = (0..n).map(|m| p.weight(m.min(n - m))).sum();
                assert_eq!(distance_power_sum(p, n), direct, "N={n} p={p:?}");
            }
        }
    }

    #[test]
    fn cosine_sum_examples() {
        let v = cosine_weighted_sum(MomentOrder::Second, 1, 4).unwrap();
        assert!((v + 4.0).abs() < 1e-12);
        let v = cosine_weighted_sum(MomentOrder::First, 1, 4).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
        let v = cosine_weighted_sum(MomentOrder::Second, 2, 5).unwrap();
        let oracle = direct_cosine_sum(MomentOrder::Second, 2, 5);
        assert!((v - oracle).abs() < 1e-12);
        assert!(cosine_weighted_sum(MomentOrder::First, 0, 5).is_err());
        assert!(cosine_weighted_sum(MomentOrder::First, 10, 5).is_err());
    }

    #[test]
    fn cosine_sum_branch_table_exhaustive() {
        for n in 3..64usize {
            for y in -(n as i64 - 1)..(n as i64) {
                if y == 0 {
                    continue;
                }
                for p in [MomentOrder::First, MomentOrder::Second] {
                    let closed = cosine_weighted_sum(p, y, n).unwrap();
                    let direct = direct_cosine_sum(p, y, n);
                    let scale = direct.abs().max(1.0);
                    assert!(
                        (closed - direct).abs() <= 1e-12 * scale,
                        "N={n} y={y} p={p:?}: {closed} vs {direct}"
                    );
                }
            }
        }
    }
}
