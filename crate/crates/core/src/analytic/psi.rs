//! The Laplace exponent `ψ(λ) = λ − ∫(1 − e^{−λu}) Λ(du)` and its largest root.

use crate::error::{Error, Result};
use crate::model::{LifespanKind, LifespanMeasure, ModelParams, MutationMechanism};

/// Lower end of the root bracket.
const ROOT_EPS: f64 = 1e-12;
/// The bracket is doubled at most this many times.
const MAX_DOUBLINGS: usize = 80;

#[derive(Debug, Clone)]
pub struct LaplaceExponent {
    lifespan: LifespanMeasure,
}

impl LaplaceExponent {
    pub fn new(lifespan: LifespanMeasure) -> Self {
        Self { lifespan }
    }

    /// `ψ` of the total population.
    pub fn of_population(params: &ModelParams) -> Self {
        Self::new(params.lifespan.clone())
    }

    /// `ψ⋆` of the clonal process, computed from the clonal lifespan measure.
    pub fn of_clone(params: &ModelParams) -> Self {
        Self::new(params.clonal_lifespan())
    }

    pub fn lifespan(&self) -> &LifespanMeasure {
        &self.lifespan
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        let b = self.lifespan.birth_rate();
        match self.lifespan.kind() {
            LifespanKind::Exponential { death_rate: d } => lambda * (lambda - b + d) / (lambda + d),
            LifespanKind::PointMassAtInfinity => lambda - b,
            LifespanKind::Tabulated(t) => {
                // integration by parts: ∫(1 − e^{−λu})Λ(du) = λ ∫ e^{−λy} Λ̄(y) dy
                lambda - lambda * t.integrate_against(|y| (-lambda * y).exp())
            }
        }
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        let b = self.lifespan.birth_rate();
        match self.lifespan.kind() {
            LifespanKind::Exponential { death_rate: d } => {
                let s = lambda + d;
                if s == 0.0 {
                    // Yule at the origin: ψ(λ) = λ − b for λ > 0
                    return 1.0;
                }
                (lambda * lambda + 2.0 * lambda * d + d * (d - b)) / (s * s)
            }
            LifespanKind::PointMassAtInfinity => 1.0,
            LifespanKind::Tabulated(t) => {
                let plain = t.integrate_against(|y| (-lambda * y).exp());
                let weighted = t.integrate_against(|y| y * (-lambda * y).exp());
                1.0 - plain + lambda * weighted
            }
        }
    }

    /// Malthusian parameter: the largest root of `ψ`, which is `0` unless the
    /// mean offspring number exceeds one.
    pub fn largest_root(&self) -> Result<f64> {
        let b = self.lifespan.birth_rate();
        match self.lifespan.kind() {
            LifespanKind::Exponential { death_rate: d } => return Ok((b - d).max(0.0)),
            LifespanKind::PointMassAtInfinity => return Ok(b),
            LifespanKind::Tabulated(_) => {}
        }
        if self.lifespan.mean_offspring() <= 1.0 {
            return Ok(0.0);
        }
        let mut lo = ROOT_EPS;
        let mut hi = 1.0f64.min(b);
        let mut doublings = 0;
        while self.eval(hi) <= 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::RootNotBracketed { upper: hi });
            }
        }
        if self.eval(lo) >= 0.0 {
            return Err(Error::RootNotBracketed { upper: hi });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
                break;
            }
            if self.eval(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut root = 0.5 * (lo + hi);
        for _ in 0..3 {
            let slope = self.derivative(root);
            if slope <= 0.0 {
                break;
            }
            let next = root - self.eval(root) / slope;
            if !(next > lo * 0.5 && next < hi * 2.0) {
                break;
            }
            root = next;
        }
        Ok(root)
    }
}

/// `ψ(λ)` of the model's total population.
pub fn psi(params: &ModelParams, lambda: f64) -> f64 {
    LaplaceExponent::of_population(params).eval(lambda)
}

/// Malthusian parameter `r` of the total population.
pub fn malthusian(params: &ModelParams) -> Result<f64> {
    LaplaceExponent::of_population(params).largest_root()
}

/// `ψ⋆` written through the total-population exponent: `pλ + (1 − p)ψ(λ)`
/// in Model I and `λψ(λ + θ)/(λ + θ)` in Model II.
pub fn clonal_psi_via_population(params: &ModelParams, lambda: f64) -> f64 {
    let total = LaplaceExponent::of_population(params);
    match params.mutation {
        MutationMechanism::ModelI { p } => p * lambda + (1.0 - p) * total.eval(lambda),
        MutationMechanism::ModelII { theta } => {
            if lambda + theta == 0.0 {
                0.0
            } else {
                lambda * total.eval(lambda + theta) / (lambda + theta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TabulatedTail;
    use approx::assert_relative_eq;

    fn exp_tabulated(b: f64, d: f64) -> LifespanMeasure {
        LifespanMeasure::tabulated(
            TabulatedTail::from_fn(1e-3, 40.0 / d, |y| b * (-d * y).exp()).unwrap(),
        )
    }

    #[test]
    fn psi_examples() {
        let params = ModelParams::exponential_ii(2.0, 1.0, 1.0).unwrap();
        assert_eq!(psi(&params, 1.0), 0.0);
        assert_eq!(psi(&params, 0.0), 0.0);
        assert_relative_eq!(psi(&params, 3.0), 1.5);
    }

    #[test]
    fn tabulated_psi_matches_closed_form() {
        let closed = LaplaceExponent::new(LifespanMeasure::exponential(2.0, 1.0).unwrap());
        let tab = LaplaceExponent::new(exp_tabulated(2.0, 1.0));
        for &l in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            assert_relative_eq!(tab.eval(l), closed.eval(l), epsilon = 1e-10);
            assert_relative_eq!(tab.derivative(l), closed.derivative(l), epsilon = 1e-9);
        }
    }

    #[test]
    fn derivative_at_origin_and_at_root() {
        let psi = LaplaceExponent::new(LifespanMeasure::exponential(2.0, 1.0).unwrap());
        // ψ'(0) = 1 − m, ψ'(r) = 1 − d/b
        assert_relative_eq!(psi.derivative(0.0), -1.0);
        assert_relative_eq!(psi.derivative(1.0), 0.5);
    }

    #[test]
    fn malthusian_examples() {
        assert_eq!(malthusian(&ModelParams::exponential_ii(2.0, 1.0, 1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(malthusian(&ModelParams::exponential_ii(1.0, 1.0, 1.0).unwrap()).unwrap(), 0.0);
        let tab = LaplaceExponent::new(exp_tabulated(2.0, 1.0));
        let r = tab.largest_root().unwrap();
        assert!((r - 1.0).abs() < 1e-8, "r = {r}");
    }

    #[test]
    fn bisection_oracle_on_uniform_lifespans() {
        // uniform lifespans on (0, L) with mass b: ψ(λ) = λ − b + b(1 − e^{−λL})/(λL)
        let (b, len) = (1.5, 2.0);
        let closed = |l: f64| l - b + b * (1.0 - (-l * len).exp()) / (l * len);
        let tail = TabulatedTail::from_fn(1e-3, len, |y| b * (1.0 - y / len).max(0.0)).unwrap();
        let psi = LaplaceExponent::new(LifespanMeasure::tabulated(tail));
        let (mut lo, mut hi) = (1e-6, 10.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if closed(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let r = psi.largest_root().unwrap();
        assert!((r - lo).abs() < 1e-8, "{r} vs {lo}");
    }

    #[test]
    fn clonal_exponent_two_routes() {
        // clonal lifespan measure vs formulas through ψ, exponential and tabulated
        let tail = TabulatedTail::from_fn(1e-3, 3.0, |y| 2.0 * (1.0 - y / 3.0).max(0.0)).unwrap();
        for lifespan in [
            LifespanMeasure::exponential(2.0, 1.0).unwrap(),
            LifespanMeasure::tabulated(tail),
        ] {
            for mutation in [
                MutationMechanism::model_i(0.3).unwrap(),
                MutationMechanism::model_ii(0.7).unwrap(),
            ] {
                let params = ModelParams::new(lifespan.clone(), mutation);
                let star = LaplaceExponent::of_clone(&params);
                for k in 1..40 {
                    let l = 0.1 * k as f64;
                    assert_relative_eq!(
                        star.eval(l),
                        clonal_psi_via_population(&params, l),
                        epsilon = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn clonal_growth_is_largest_root_of_clonal_exponent() {
        for params in [
            ModelParams::exponential_ii(4.0, 1.0, 1.0).unwrap(),
            ModelParams::exponential_i(3.0, 1.0, 0.2).unwrap(),
            ModelParams::exponential_ii(2.0, 0.5, 0.25).unwrap(),
        ] {
            let c = params.clonal_params().unwrap();
            let (b, d) = (c.b_star, c.d_star);
            let tab = LaplaceExponent::new(exp_tabulated(b, d));
            assert!((tab.largest_root().unwrap() - c.r_star).abs() < 1e-8);
            let closed = LaplaceExponent::of_clone(&params).largest_root().unwrap();
            assert!((closed - c.r_star).abs() < 1e-10);
        }
        // subcritical clone: r⋆ is the negative root
        let params = ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap();
        let c = params.clonal_params().unwrap();
        assert!(LaplaceExponent::of_clone(&params).eval(c.r_star).abs() < 1e-12);
    }
}
