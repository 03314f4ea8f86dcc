use crate::error::{Error, Result};
use crate::lattice::{periodic_distance, MomentOrder, SiteIndex};

/// One value per ring site, in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteProfile {
    values: Vec<f64>,
}

impl SiteProfile {
    pub fn new(values: Vec<f64>) -> Self {
        SiteProfile { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, site: SiteIndex) -> f64 {
        self.values[site.get()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// ∑ₙ [n − n₀]^p · valueₙ.
    pub fn moment(&self, order: MomentOrder, n0: SiteIndex) -> f64 {
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .map(|(site, v)| {
                let d = periodic_distance(SiteIndex::new(site as i64, n), n0, n).get();
                order.weight(d) * v
            })
            .sum()
    }

    /// Fails with `NormalizationDrift` if the values do not sum to 1 ± tol.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let sum = self.sum();
        let drift = (sum - 1.0).abs();
        if drift > tol || !sum.is_finite() {
            return Err(Error::NormalizationDrift { sum, drift });
        }
        Ok(())
    }

    /// Elementwise sum of two profiles on the same ring.
    pub fn plus(&self, other: &SiteProfile) -> SiteProfile {
        SiteProfile::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &SiteProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Δ_p sampled on a time grid, with its long-time value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub order: MomentOrder,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub steady: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_of_point_mass() {
        let mut v = vec![0.0; 10];
        v[7] = 1.0;
        let p = SiteProfile::new(v);
        assert_eq!(p.moment(MomentOrder::First, SiteIndex::new(2, 10)), 5.0);
        assert_eq!(p.moment(MomentOrder::Second, SiteIndex::new(9, 10)), 4.0);
        assert!(p.check_normalized(1e-15).is_ok());
    }

    #[test]
    fn drift_is_reported() {
        let p = SiteProfile::new(vec![0.5, 0.6]);
        assert!(matches!(
            p.check_normalized(1e-3),
            Err(Error::NormalizationDrift { .. })
        ));
    }
}
