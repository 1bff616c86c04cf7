//! Orders of magnitude of the oldest and largest families, exponential
//! lifespans.

use crate::analytic::psi::LaplaceExponent;
use crate::error::{ensure_param, Error, Result};
use crate::model::{ClonalParams, Criticality, ModelParams, MutationMechanism};

struct Rates {
    b: f64,
    d: f64,
    r: f64,
    clone: ClonalParams,
}

fn rates(params: &ModelParams) -> Result<Rates> {
    let (b, d) = params.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
    let r = params.net_growth()?;
    if !(r > 0.0) {
        return Err(Error::UnsupportedRegime(
            "family scales need a supercritical population".into(),
        ));
    }
    Ok(Rates {
        b,
        d,
        r,
        clone: params.clonal_params()?,
    })
}

fn require_subcritical(clone: &ClonalParams) -> Result<()> {
    if clone.class == Criticality::Subcritical {
        Ok(())
    } else {
        Err(Error::UnsupportedRegime("clonal process is not subcritical".into()))
    }
}

/// `c_t`, the age of the oldest families: `rt/(r − r⋆)` for a subcritical
/// clone and `t − (ln t)/r` for a critical one.
pub fn old_family_scale(params: &ModelParams, t: f64) -> Result<f64> {
    ensure_param(t > 0.0, "t", t, "must be positive")?;
    let k = rates(params)?;
    match k.clone.class {
        Criticality::Subcritical => Ok(k.r * t / (k.r - k.clone.r_star)),
        Criticality::Critical => Ok(t - t.ln() / k.r),
        Criticality::Supercritical => Err(Error::UnsupportedRegime(
            "no old-family scale for a supercritical clone".into(),
        )),
    }
}

/// Limit law of `O_t(a + c_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OldFamilyLimit {
    /// `L(a) = (|r⋆|/d⋆) e^{−(r−r⋆)a}`, the unconditional mean.
    pub mean: f64,
    /// Success probability of the geometric law on `{0, 1, …}` conditional
    /// on survival: `1/(1 + (b/r) L(a))`.
    pub success: f64,
}

impl OldFamilyLimit {
    /// Mean of the conditional geometric law, `(b/r) L(a)`.
    pub fn conditional_mean(&self) -> f64 {
        (1.0 - self.success) / self.success
    }
}

pub fn old_family_limit(params: &ModelParams, a: f64) -> Result<OldFamilyLimit> {
    let k = rates(params)?;
    require_subcritical(&k.clone)?;
    let mean = k.clone.r_star.abs() / k.clone.d_star * (-(k.r - k.clone.r_star) * a).exp();
    Ok(OldFamilyLimit {
        mean,
        success: 1.0 / (1.0 + k.b / k.r * mean),
    })
}

/// Intensity at `x` of the limiting point process of recentred ages
/// `A_t^k − c_t`, given a unit mixture variable:
/// `(b/r)(|r⋆|/d⋆)(r − r⋆) e^{−(r−r⋆)x}`.
pub fn age_point_intensity(params: &ModelParams, x: f64) -> Result<f64> {
    let k = rates(params)?;
    require_subcritical(&k.clone)?;
    let rate = k.r - k.clone.r_star;
    Ok(k.b / k.r * k.clone.r_star.abs() / k.clone.d_star * rate * (-rate * x).exp())
}

/// Mass of [`age_point_intensity`] on `[lo, hi)`.
pub fn age_intensity_mass(params: &ModelParams, lo: f64, hi: f64) -> Result<f64> {
    let k = rates(params)?;
    require_subcritical(&k.clone)?;
    let rate = k.r - k.clone.r_star;
    let scale = k.b / k.r * k.clone.r_star.abs() / k.clone.d_star;
    Ok(scale * ((-rate * lo).exp() - (-rate * hi).exp()))
}

struct ModelIiRates {
    r: f64,
    theta: f64,
    rho: f64,
}

fn model_ii_rates(params: &ModelParams) -> Result<(Rates, ModelIiRates)> {
    let MutationMechanism::ModelII { theta } = params.mutation else {
        return Err(Error::UnsupportedRegime("large-family scales need Model II".into()));
    };
    let k = rates(params)?;
    let extra = ModelIiRates {
        r: k.r,
        theta,
        rho: k.b / (theta + k.d),
    };
    Ok((k, extra))
}

/// `x_t`, the size of the largest families in Model II.
///
/// Subcritical clone (`θ > r`): `(rt − (θ/(θ−r)) ln t)/(−ln(b/(θ+d)))`.
/// Critical clone (`θ = r`): `(r²/(4ψ'(r)))(t − (ln t)/(2r))²`.
pub fn large_family_scale_ii(params: &ModelParams, t: f64) -> Result<f64> {
    ensure_param(t > 0.0, "t", t, "must be positive")?;
    let (k, m) = model_ii_rates(params)?;
    match k.clone.class {
        Criticality::Subcritical => {
            Ok((m.r * t - m.theta / (m.theta - m.r) * t.ln()) / -m.rho.ln())
        }
        Criticality::Critical => {
            let slope = LaplaceExponent::of_population(params).derivative(m.r);
            let inner = t - t.ln() / (2.0 * m.r);
            Ok(m.r * m.r / (4.0 * slope) * inner * inner)
        }
        Criticality::Supercritical => Err(Error::UnsupportedRegime(
            "θ ≤ r: use the supercritical clonal scale".into(),
        )),
    }
}

/// Horizons `t_n` with `x_{t_n} = n` for a subcritical Model II clone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subsequence {
    /// `x_t` is increasing for `t` above this point.
    pub t_min: f64,
    /// Smallest `n` with a solution.
    pub n0: u64,
    /// Asymptotic slope `t_n/n → ln((θ+d)/b)/r`, read off the leading term
    /// of `x_t`.
    pub slope: f64,
}

pub fn subsequence(params: &ModelParams) -> Result<Subsequence> {
    let (k, m) = model_ii_rates(params)?;
    require_subcritical(&k.clone)?;
    let kappa = m.theta / (m.theta - m.r);
    let t_min = kappa / m.r;
    let x_min = large_family_scale_ii(params, t_min)?;
    let n0 = (x_min.floor() + 1.0).max(1.0) as u64;
    Ok(Subsequence {
        t_min,
        n0,
        slope: -m.rho.ln() / m.r,
    })
}

/// Solves `x_{t_n} = n` on the increasing branch of `x_t`.
pub fn subsequence_time(params: &ModelParams, n: u64) -> Result<f64> {
    let s = subsequence(params)?;
    if n < s.n0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "x_t = n has no solution below n0",
        });
    }
    let target = n as f64;
    let x = |t: f64| large_family_scale_ii(params, t);
    let mut lo = s.t_min;
    let mut hi = (2.0 * s.t_min).max(s.slope * target * 2.0).max(1.0);
    while x(hi)? < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if x(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exploratory size scale for a critical Model I clone:
/// `(2/σ²)(rt² − t ln t)` with `σ² = ∫ u² Λ(du)`.
pub fn conjecture_scale_i(params: &ModelParams, t: f64) -> Result<f64> {
    ensure_param(t > 0.0, "t", t, "must be positive")?;
    let MutationMechanism::ModelI { .. } = params.mutation else {
        return Err(Error::UnsupportedRegime("the conjectured scale concerns Model I".into()));
    };
    let clone_mean = params.clonal_lifespan().mean_offspring();
    if (clone_mean - 1.0).abs() > 1e-9 {
        return Err(Error::UnsupportedRegime("clonal process is not critical".into()));
    }
    let sigma2 = params.lifespan.second_moment();
    if !sigma2.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma2",
            value: sigma2,
            reason: "the lifespan measure needs a finite second moment",
        });
    }
    let r = LaplaceExponent::of_population(params).largest_root()?;
    Ok(2.0 / sigma2 * (r * t * t - t * t.ln()))
}

/// `e^{r⋆t}`, the order of family sizes for a supercritical clone.
pub fn supercritical_clonal_scale(params: &ModelParams, t: f64) -> Result<f64> {
    let r_star = LaplaceExponent::of_clone(params).largest_root()?;
    if !(r_star > 0.0) {
        return Err(Error::UnsupportedRegime("clonal process is not supercritical".into()));
    }
    Ok((r_star * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sub() -> ModelParams {
        ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap()
    }

    #[test]
    fn old_family_scale_examples() {
        assert_relative_eq!(old_family_scale(&sub(), 12.0).unwrap(), 8.0, max_relative = 1e-14);
        let near = ModelParams::exponential_ii(2.0, 1.0, 1.0 + 1e-9).unwrap();
        assert_relative_eq!(old_family_scale(&near, 7.0).unwrap(), 7.0, max_relative = 1e-8);
        let crit = ModelParams::exponential_ii(2.0, 1.0, 1.0).unwrap();
        let e = 1f64.exp();
        assert_relative_eq!(old_family_scale(&crit, e).unwrap(), e - 1.0, max_relative = 1e-14);
        let sup = ModelParams::exponential_ii(4.0, 1.0, 1.0).unwrap();
        assert!(old_family_scale(&sup, 5.0).is_err());
    }

    #[test]
    fn old_family_limit_examples() {
        let l0 = old_family_limit(&sub(), 0.0).unwrap();
        assert_relative_eq!(l0.mean, 0.2, max_relative = 1e-14);
        assert_relative_eq!(l0.success, 1.0 / 1.4, max_relative = 1e-14);
        // the conditional geometric mean times P(survival) is the unconditional mean
        assert_relative_eq!(l0.conditional_mean() * 0.5, l0.mean, max_relative = 1e-14);
        let l1 = old_family_limit(&sub(), 1.0).unwrap();
        assert_relative_eq!(l1.mean, 0.2 * (-1.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(l1.mean, 0.044_626, epsilon = 1e-6);
        let far = old_family_limit(&sub(), 60.0).unwrap();
        assert!(far.mean < 1e-30 && (far.success - 1.0).abs() < 1e-30);
    }

    #[test]
    fn intensity_examples() {
        assert_relative_eq!(age_point_intensity(&sub(), 0.0).unwrap(), 0.6, max_relative = 1e-14);
        let slope = age_point_intensity(&sub(), 2.0).unwrap().ln() - age_point_intensity(&sub(), 1.0).unwrap().ln();
        assert_relative_eq!(slope, -1.5, max_relative = 1e-12);
        for a in [-1.0, 0.0, 0.7] {
            let mass = age_intensity_mass(&sub(), a, f64::INFINITY).unwrap();
            assert_relative_eq!(mass, 2.0 * old_family_limit(&sub(), a).unwrap().mean, max_relative = 1e-13);
        }
    }

    #[test]
    fn large_family_scale_examples() {
        let t: f64 = 9.0;
        let expected = (t - 3.0 * t.ln()) / -(0.8f64.ln());
        assert_relative_eq!(large_family_scale_ii(&sub(), t).unwrap(), expected, max_relative = 1e-14);
        // critical Model II: θ = r
        let crit = ModelParams::exponential_ii(2.0, 1.0, 1.0).unwrap();
        let x = large_family_scale_ii(&crit, 5.0).unwrap();
        let inner: f64 = 5.0 - 5f64.ln() / 2.0;
        assert_relative_eq!(x, inner * inner / (4.0 * 0.5), max_relative = 1e-14);
        let model_i = ModelParams::exponential_i(2.0, 1.0, 0.5).unwrap();
        assert!(large_family_scale_ii(&model_i, 5.0).is_err());
    }

    #[test]
    fn subsequence_times() {
        let s = subsequence(&sub()).unwrap();
        assert_relative_eq!(s.t_min, 3.0);
        assert_relative_eq!(s.slope, 0.223_143_551_314_209_7, max_relative = 1e-12);
        for n in [s.n0, 10, 14, 50] {
            let t = subsequence_time(&sub(), n).unwrap();
            assert_relative_eq!(large_family_scale_ii(&sub(), t).unwrap(), n as f64, max_relative = 1e-12);
            assert!(t > s.t_min);
        }
        assert_relative_eq!(subsequence_time(&sub(), 14).unwrap(), 10.045_3, epsilon = 1e-4);
        // t_n = (n ln(1/ρ) + 3 ln t_n)/r, so the slope is approached at rate ln n / n
        let mut gap = f64::INFINITY;
        for far in [1_000u64, 100_000, 10_000_000] {
            let ratio = subsequence_time(&sub(), far).unwrap() / far as f64;
            let next = (ratio / s.slope - 1.0).abs();
            assert!(next < gap);
            gap = next;
        }
        assert!(gap < 1e-4);
        assert!(subsequence_time(&sub(), s.n0 - 1).is_err());
    }

    #[test]
    fn conjecture_scale_examples() {
        let params = ModelParams::exponential_i(2.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(params.lifespan.second_moment(), 4.0);
        let t = 6.0;
        assert_relative_eq!(conjecture_scale_i(&params, t).unwrap(), 0.5 * (t * t - t * t.ln()), max_relative = 1e-12);
        for t in [0.5, 1.0, 3.0, 10.0] {
            assert!(conjecture_scale_i(&params, t).unwrap() > 0.0);
        }
        assert!(conjecture_scale_i(&sub(), t).is_err());
    }

    #[test]
    fn supercritical_clonal_scale_examples() {
        let params = ModelParams::exponential_ii(4.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(supercritical_clonal_scale(&params, 1.5).unwrap(), 3f64.exp(), max_relative = 1e-12);
        assert!(supercritical_clonal_scale(&sub(), 1.0).is_err());
    }
}
