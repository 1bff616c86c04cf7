//! Replica-order-free summaries.
//!
//! Sums are taken over sorted values with Neumaier compensation, so any
//! permutation of the replicas gives bit-identical results.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn order_free_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in v {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance; zero for a single value.
    pub variance: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, variance: f64::NAN };
        }
        let mean = order_free_sum(values.iter().copied()) / n as f64;
        let variance = if n > 1 {
            order_free_sum(values.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, variance }
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let (mx, my) = (Moments::of(xs).mean, Moments::of(ys).mean);
    order_free_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my))) / (n as f64 - 1.0)
}

/// `Σx / Σy` over paired replicas, with its delta-method standard error.
pub fn ratio_of_means(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (Moments::of(xs), Moments::of(ys));
    let ratio = mx.mean / my.mean;
    let var = (mx.variance - 2.0 * ratio * covariance(xs, ys) + ratio * ratio * my.variance).max(0.0);
    (ratio, (var / n).sqrt() / my.mean.abs())
}

/// Standard error floored at one pseudo-count over `n` replicas.
pub fn floored_se(se: f64, n: usize) -> f64 {
    se.max(1.0 / n as f64)
}

/// Two-sided critical `|z|` at `level` over `cells` simultaneous cells,
/// never below 3.
pub fn bonferroni_z(level: f64, cells: usize) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - level / (2.0 * cells.max(1) as f64)).max(3.0)
}

/// Two-sided normal p-value of `z`.
pub fn two_sided_p(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * normal.sf(z.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moments_of_small_samples() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(Moments::of(&[7.0]).variance, 0.0);
    }

    #[test]
    fn compensation_recovers_cancelled_digits() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(order_free_sum(v), 2.0);
    }

    #[test]
    fn bonferroni_thresholds() {
        assert_eq!(bonferroni_z(0.01, 1), 3.0);
        // 0.01 / 30 two-sided
        assert!((bonferroni_z(0.01, 15) - 3.4029).abs() < 1e-3);
        assert!((two_sided_p(3.0) - 0.0026998).abs() < 1e-6);
    }

    #[test]
    fn ratio_standard_error_matches_delta_method() {
        // y constant: se is se(x)/y
        let xs = [1.0, 2.0, 3.0, 6.0];
        let ys = [2.0; 4];
        let (r, se) = ratio_of_means(&xs, &ys);
        assert_eq!(r, 1.5);
        assert!((se - Moments::of(&xs).se() / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sums_ignore_replica_order(mut v in prop::collection::vec(-1e6f64..1e6, 1..200), seed in any::<u64>()) {
            let a = order_free_sum(v.iter().copied());
            let m = Moments::of(&v);
            // deterministic shuffle
            let mut s = seed;
            for i in (1..v.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(a.to_bits(), order_free_sum(v.iter().copied()).to_bits());
            prop_assert_eq!(m, Moments::of(&v));
        }
    }
}
