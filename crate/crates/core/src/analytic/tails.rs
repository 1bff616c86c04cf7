//! Large-`i` behaviour of the limiting spectrum `J^i` for exponential
//! lifespans.

use statrs::function::gamma::ln_gamma;

use crate::analytic::quadrature::Quadrature;
use crate::error::{ensure_param, Error, Result};
use crate::model::{Criticality, ModelParams};

/// Constants of the power-law tail, with `ν = r/r⋆`, `μ = b⋆/r⋆` and
/// `γ = (r − r⋆)/b⋆`. For a critical clone `ν` and `μ` are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    pub nu: f64,
    pub mu: f64,
    pub gamma: f64,
    /// `ψ'(r) = 1 − d/b`.
    pub psi_prime_r: f64,
}

pub fn asymptotic_constants(params: &ModelParams) -> Result<AsymptoticConstants> {
    let c = params.clonal_params()?;
    let (b, d) = params.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
    let r = b - d;
    if !(r > 0.0) {
        return Err(Error::UnsupportedRegime(
            "tail constants need a supercritical population".into(),
        ));
    }
    Ok(AsymptoticConstants {
        nu: r / c.r_star,
        mu: c.b_star / c.r_star,
        gamma: (r - c.r_star) / c.b_star,
        psi_prime_r: 1.0 - d / b,
    })
}

/// `J^i ~ i^{−1−ν} γ Γ(ν+1) μ^ν` for a supercritical clone.
///
/// The approach is slow, with relative error close to `5.3/i` for
/// `b = 4, d = 1, θ = 1`; there `J^i` is within 5% of the asymptote from
/// `i = 107` on.
pub fn tail_supercritical(params: &ModelParams, i: u64) -> Result<f64> {
    ensure_param(i >= 1, "i", i as f64, "family sizes start at 1")?;
    if params.clonal_params()?.class != Criticality::Supercritical {
        return Err(Error::UnsupportedRegime("clonal process is not supercritical".into()));
    }
    let k = asymptotic_constants(params)?;
    let ln = -(1.0 + k.nu) * (i as f64).ln() + k.gamma.ln() + ln_gamma(k.nu + 1.0) + k.nu * k.mu.ln();
    Ok(ln.exp())
}

/// `C(x) = √π e^{x/2} x^{5/4}`.
pub fn critical_tail_constant(x: f64) -> f64 {
    std::f64::consts::PI.sqrt() * (x / 2.0).exp() * x.powf(1.25)
}

/// `J^i ~ C(γ) i^{−3/4} e^{−2√(γi)}` for a critical clone, where `γ = r/b⋆`.
///
/// For `γ = 1` the ratio to `J^i` stays below 1.03 for every `i ≥ 1`.
pub fn tail_critical(params: &ModelParams, i: u64) -> Result<f64> {
    ensure_param(i >= 1, "i", i as f64, "family sizes start at 1")?;
    if params.clonal_params()?.class != Criticality::Critical {
        return Err(Error::UnsupportedRegime("clonal process is not critical".into()));
    }
    let gamma = asymptotic_constants(params)?.gamma;
    let i = i as f64;
    Ok(critical_tail_constant(gamma) * i.powf(-0.75) * (-2.0 * (gamma * i).sqrt()).exp())
}

/// `J^i` for a critical clone through `γ ∫₀^∞ e^{−γs} s^{i−1}/(1+s)^{i+1} ds`,
/// which equals `γ Γ(i) U(i, 0, γ)`.
///
/// The integrand is scaled by its maximum in the log domain, so the
/// result keeps full relative precision even when it underflows `e^{−700}`
/// in unscaled form; it is returned as `(ln J^i)`.
pub fn critical_j_log(gamma: f64, i: u64) -> Result<f64> {
    ensure_param(gamma > 0.0, "gamma", gamma, "must be positive")?;
    ensure_param(i >= 1, "i", i as f64, "family sizes start at 1")?;
    let k = i as f64;
    let log_f = |s: f64| -gamma * s + (k - 1.0) * s.ln() - (k + 1.0) * s.ln_1p();
    // stationary point of log_f: γs² + (γ + 2)s − (i − 1) = 0
    let peak = if i == 1 {
        0.0
    } else {
        let g2 = gamma + 2.0;
        2.0 * (k - 1.0) / (g2 + (g2 * g2 + 4.0 * gamma * (k - 1.0)).sqrt())
    };
    let top = if i == 1 { 0.0 } else { log_f(peak) };
    let scaled = |s: f64| if s <= 0.0 && i > 1 { 0.0 } else { (log_f(s) - top).exp() };
    let q = Quadrature::relative(1e-12);
    // curvature of log_f at the peak sets the width of the bulk
    let width = if i == 1 {
        1.0 / (gamma + 2.0)
    } else {
        let c = (k - 1.0) / (peak * peak) - (k + 1.0) / ((1.0 + peak) * (1.0 + peak));
        1.0 / c.max(1e-300).sqrt()
    };
    let lo = (peak - 40.0 * width).max(0.0);
    let inner = q.integrate(scaled, lo, peak + 40.0 * width);
    let below = if lo > 0.0 { q.integrate(scaled, 0.0, lo) } else { 0.0 };
    let above = q
        .integrate_unbounded(scaled, peak + 40.0 * width, gamma, f64::INFINITY)
        .ok_or(Error::UnsupportedRegime("confluent integral did not converge".into()))?;
    Ok(gamma.ln() + top + (inner + below + above).ln())
}
