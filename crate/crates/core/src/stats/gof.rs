//! Goodness-of-fit tests: pooled chi-square for discrete laws and
//! one-sample Kolmogorov–Smirnov.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// A law on `{start, start + 1, …}` described by its mass and upper tail.
pub trait DiscreteLaw {
    fn start(&self) -> u64;
    fn pmf(&self, k: u64) -> f64;
    /// `P(X ≥ k)`.
    fn tail(&self, k: u64) -> f64;
}

/// `P(X = k) = q(1 − q)^{k − start}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometric {
    pub success: f64,
    pub start: u64,
}

impl DiscreteLaw for Geometric {
    fn start(&self) -> u64 {
        self.start
    }

    fn pmf(&self, k: u64) -> f64 {
        if k < self.start {
            return 0.0;
        }
        self.success * (1.0 - self.success).powf((k - self.start) as f64)
    }

    fn tail(&self, k: u64) -> f64 {
        if k <= self.start {
            return 1.0;
        }
        (1.0 - self.success).powf((k - self.start) as f64)
    }
}

/// Values `lo..=hi`, or `lo..` for the last bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: u64,
    pub hi: Option<u64>,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: Vec<Bin>,
}

/// Chi-square test of `sample` against `law`, with adjacent values pooled
/// until every bin expects at least `min_expected` observations.
pub fn chi_square(sample: &[u64], law: &impl DiscreteLaw, min_expected: f64) -> Result<ChiSquare> {
    let n = sample.len() as f64;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &x in sample {
        if x < law.start() {
            return Err(Error::InvalidParameter {
                name: "sample",
                value: x as f64,
                reason: "lies below the support of the law",
            });
        }
        *counts.entry(x).or_default() += 1;
    }
    let observed = |lo: u64, hi: Option<u64>| -> u64 {
        match hi {
            Some(hi) => counts.range(lo..=hi).map(|(_, c)| c).sum(),
            None => counts.range(lo..).map(|(_, c)| c).sum(),
        }
    };
    let mut bins = Vec::new();
    let mut lo = law.start();
    let mut k = lo;
    let mut acc = 0.0;
    while n * law.tail(k + 1) >= min_expected {
        acc += n * law.pmf(k);
        if acc >= min_expected {
            bins.push(Bin { lo, hi: Some(k), observed: observed(lo, Some(k)), expected: acc });
            lo = k + 1;
            acc = 0.0;
        }
        k += 1;
    }
    bins.push(Bin { lo, hi: None, observed: observed(lo, None), expected: n * law.tail(lo) });
    if bins.len() < 2 {
        return Err(Error::InsufficientSample {
            test: "chi-square",
            needed: 2,
            got: bins.len(),
        });
    }
    let statistic = bins
        .iter()
        .map(|b| (b.observed as f64 - b.expected).powi(2) / b.expected)
        .sum::<f64>();
    let dof = bins.len() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(statistic);
    Ok(ChiSquare { statistic, dof, p_value, bins })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovSmirnov {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against a continuous `cdf`, with the Stephens
/// small-sample correction of the asymptotic p-value.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KolmogorovSmirnov> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::InsufficientSample { test: "Kolmogorov-Smirnov", needed: 1, got: 0 });
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / nf) - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let root = nf.sqrt();
    let p_value = kolmogorov_sf((root + 0.12 + 0.11 / root) * statistic);
    Ok(KolmogorovSmirnov { statistic, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geometric_sample(q: f64, start: u64, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                start + ((1.0 - u).ln() / (1.0 - q).ln()).floor() as u64
            })
            .collect()
    }

    #[test]
    fn kolmogorov_tail_values() {
        // classical critical values
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn bins_pool_to_the_minimum_expectation() {
        let law = Geometric { success: 0.3, start: 1 };
        let sample = geometric_sample(0.3, 1, 2000, 4);
        let chi = chi_square(&sample, &law, 5.0).unwrap();
        assert!(chi.bins.iter().all(|b| b.expected >= 5.0));
        assert_eq!(chi.bins.iter().map(|b| b.observed).sum::<u64>(), 2000);
        assert!((chi.bins.iter().map(|b| b.expected).sum::<f64>() - 2000.0).abs() < 1e-6);
        assert_eq!(chi.bins.last().unwrap().hi, None);
    }

    #[test]
    fn chi_square_accepts_the_truth_and_rejects_a_shift() {
        let sample = geometric_sample(0.25, 0, 10_000, 9);
        let good = chi_square(&sample, &Geometric { success: 0.25, start: 0 }, 5.0).unwrap();
        assert!(good.p_value > 0.01, "{good:?}");
        let bad = chi_square(&sample, &Geometric { success: 0.3, start: 0 }, 5.0).unwrap();
        assert!(bad.p_value < 1e-6);
    }

    #[test]
    fn ks_accepts_the_truth_and_rejects_a_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.random::<f64>()).ln() / 0.5).collect();
        let good = ks_test(&xs, |x| 1.0 - (-0.5 * x).exp()).unwrap();
        assert!(good.p_value > 0.01);
        let bad = ks_test(&xs, |x| 1.0 - (-0.6 * x).exp()).unwrap();
        assert!(bad.p_value < 1e-6);
    }

    #[test]
    fn degenerate_samples_are_insufficient() {
        let law = Geometric { success: 0.5, start: 0 };
        assert!(matches!(chi_square(&[0, 1], &law, 5.0), Err(Error::InsufficientSample { .. })));
        assert!(matches!(chi_square(&[0], &Geometric { success: 0.5, start: 1 }, 5.0), Err(Error::InvalidParameter { .. })));
    }
}
