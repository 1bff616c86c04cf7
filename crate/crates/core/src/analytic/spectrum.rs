//! One-dimensional marginals, the expected allelic frequency spectrum
//! `E[M_t^{i,a}]` and its large-time constants `J^{i,a}` and `J`.

use crate::analytic::psi::LaplaceExponent;
use crate::analytic::quadrature::Quadrature;
use crate::analytic::scale::{scale_w, scale_w_clonal, ScaleFlavor, ScaleFunction};
use crate::error::{ensure_param, Error, Result};
use crate::model::{ModelParams, MutationMechanism};

/// Grid used for tabulated lifespans when none is given.
pub const DEFAULT_HORIZON: f64 = 40.0;
pub const DEFAULT_STEP: f64 = 2e-3;

/// `(1 − 1/w)^{i−1}`, evaluated through logarithms so large `i` cannot
/// lose the factor to repeated rounding.
pub fn geometric_weight(w: f64, i: u64) -> f64 {
    if i <= 1 {
        return 1.0;
    }
    ((i - 1) as f64 * (-1.0 / w).ln_1p()).exp()
}

/// A model with its scale functions, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    params: ModelParams,
    r: f64,
    b: f64,
    b_star: f64,
    w: ScaleFunction,
    w_star: ScaleFunction,
    quad: Quadrature,
}

impl AnalyticModel {
    /// Closed forms for exponential lifespans; the default grid otherwise.
    pub fn new(params: ModelParams) -> Result<Self> {
        Self::with_grid(params, DEFAULT_HORIZON, DEFAULT_STEP)
    }

    /// `horizon` and `step` only matter for tabulated lifespans, where they
    /// set the range and resolution of the renewal solution.
    pub fn with_grid(params: ModelParams, horizon: f64, step: f64) -> Result<Self> {
        let w = scale_w(&params, horizon, step)?;
        let w_star = scale_w_clonal(&params, horizon, step)?;
        let r = LaplaceExponent::of_population(&params).largest_root()?;
        Ok(Self {
            b: params.birth_rate(),
            b_star: params.clonal_lifespan().birth_rate(),
            r,
            w,
            w_star,
            quad: Quadrature::relative(1e-10),
            params,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Malthusian parameter `r`.
    pub fn malthusian(&self) -> f64 {
        self.r
    }

    pub fn scale(&self) -> &ScaleFunction {
        &self.w
    }

    pub fn clonal_scale(&self) -> &ScaleFunction {
        &self.w_star
    }

    /// `ψ'(r)`, the rate of the exponential limit of `e^{−rt}Z(t)`.
    pub fn psi_prime_r(&self) -> f64 {
        LaplaceExponent::of_population(&self.params).derivative(self.r)
    }

    fn reach(&self) -> f64 {
        self.w.horizon().min(self.w_star.horizon())
    }

    fn check_time(&self, x: f64) -> Result<()> {
        ensure_param(x >= 0.0 && x.is_finite(), "t", x, "must be finite and non-negative")?;
        if x > self.reach() * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon {
                x,
                horizon: self.reach(),
            });
        }
        Ok(())
    }

    /// `P(Z(t) = n)`: an atom at zero and a geometric law with success
    /// probability `1/W(t)` on the positive integers.
    pub fn marginal_z(&self, t: f64, n: u64) -> Result<f64> {
        self.check_time(t)?;
        Ok(geometric_marginal(self.b, self.w.value(t), self.w.derivative(t), n))
    }

    /// `P(Z(t) > 0) = W'(t)/(bW(t))`.
    pub fn alive_probability(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.w.derivative(t) / (self.b * self.w.value(t)))
    }

    /// `E[Z(t)] = W'(t)/b`.
    pub fn expected_population(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.w.derivative(t) / self.b)
    }

    /// Probability of never dying out: `r/b`.
    pub fn survival_probability(&self) -> f64 {
        self.r / self.b
    }

    /// `P(Z⋆(t) = i)`: the progenitor's type is carried by `i` particles.
    pub fn clonal_marginal(&self, t: f64, i: u64) -> Result<f64> {
        self.check_time(t)?;
        Ok(geometric_marginal(self.b_star, self.w_star.value(t), self.w_star.derivative(t), i))
    }

    fn density_unchecked(&self, i: u64, a: f64, t: f64) -> f64 {
        let ws = self.w_star.value(a);
        let geo = geometric_weight(ws, i) / (ws * ws);
        match self.params.mutation {
            MutationMechanism::ModelI { p } => {
                p / (self.b * (1.0 - p)) * self.w.derivative(t - a) * geo * self.w_star.derivative(a)
            }
            MutationMechanism::ModelII { theta } => {
                theta * self.w.derivative(t) / self.b * geo * (-theta * a).exp()
            }
        }
    }

    /// `dE[M_t^{i,da}]/da` for `0 < a < t`: types of age `≈ a` carried by
    /// exactly `i` particles.
    pub fn spectrum_density(&self, i: u64, a: f64, t: f64) -> Result<f64> {
        check_query(i, a, t)?;
        if a >= t {
            return Err(Error::InvalidParameter {
                name: "a",
                value: a,
                reason: "the density excludes the progenitor atom at a = t",
            });
        }
        self.check_time(t)?;
        Ok(self.density_unchecked(i, a, t))
    }

    /// `E[M_t^{i,a}]`, the expected number of types younger than `a` carried
    /// by `i` particles; for `a = t` the progenitor's type is included.
    pub fn expected_spectrum(&self, i: u64, a: f64, t: f64) -> Result<f64> {
        check_query(i, a, t)?;
        self.check_time(t)?;
        let bulk = self.quad.integrate(|x| self.density_unchecked(i, x, t), 0.0, a);
        let atom = if is_full_age(a, t) {
            self.clonal_marginal(t, i)?
        } else {
            0.0
        };
        Ok(bulk + atom)
    }

    /// Exponential lifespans only: the same expectation through the single
    /// formula written with `b⋆, d⋆, r⋆`.
    pub fn expected_spectrum_unified(&self, i: u64, a: f64, t: f64) -> Result<f64> {
        check_query(i, a, t)?;
        let net = self.params.net_growth()?;
        let c = self.params.clonal_params()?;
        let rate = self.params.founding_rate();
        let w_star = ScaleFunction::closed_form(c.b_star, c.d_star);
        let bulk = rate
            * (net * t).exp()
            * self.quad.integrate(
                |x| {
                    let ws = w_star.value(x);
                    geometric_weight(ws, i) * (-rate * x).exp() / (ws * ws)
                },
                0.0,
                a,
            );
        let atom = if is_full_age(a, t) {
            geometric_marginal(c.b_star, w_star.value(t), w_star.derivative(t), i)
        } else {
            0.0
        };
        Ok(bulk + atom)
    }

    /// Decay rate of the `J` integrands, which carry `e^{−ru}` in Model I
    /// and `e^{−θu}` in Model II.
    fn j_decay(&self) -> f64 {
        match self.params.mutation {
            MutationMechanism::ModelI { .. } => self.r,
            MutationMechanism::ModelII { theta } => theta,
        }
    }

    fn j_integral(&self, f: impl Fn(f64) -> f64, a: f64) -> Result<f64> {
        if a.is_finite() {
            self.check_time(a)?;
            return Ok(self.quad.integrate(f, 0.0, a));
        }
        let decay = self.j_decay();
        if !(decay > 0.0) {
            return Err(Error::UnsupportedRegime(
                "J over all ages needs r > 0 (Model I) or θ > 0 (Model II)".into(),
            ));
        }
        self.quad
            .integrate_unbounded(f, 0.0, decay, self.reach())
            .ok_or(Error::BeyondHorizon {
                x: f64::INFINITY,
                horizon: self.reach(),
            })
    }

    /// `J^{i,a}`; pass `f64::INFINITY` for `J^i`.
    pub fn limit_spectrum_j(&self, i: u64, a: f64) -> Result<f64> {
        ensure_param(i >= 1, "i", i as f64, "family sizes start at 1")?;
        ensure_param(a >= 0.0, "a", a, "must be non-negative")?;
        let r = self.r;
        match self.params.mutation {
            MutationMechanism::ModelI { p } => {
                let j = self.j_integral(
                    |u| {
                        let ws = self.w_star.value(u);
                        geometric_weight(ws, i) * (-r * u).exp() * self.w_star.derivative(u) / (ws * ws)
                    },
                    a,
                )?;
                Ok(p / (1.0 - p) * j)
            }
            MutationMechanism::ModelII { theta } => {
                let j = self.j_integral(
                    |u| {
                        let ws = self.w_star.value(u);
                        geometric_weight(ws, i) * (-theta * u).exp() / (ws * ws)
                    },
                    a,
                )?;
                Ok(theta * j)
            }
        }
    }

    /// `lim e^{−rt} E[M_t^{i,a}] = (r/b)(1/ψ'(r)) J^{i,a}`.
    pub fn spectrum_limit(&self, i: u64, a: f64) -> Result<f64> {
        self.require_supercritical()?;
        Ok(self.r / self.b / self.psi_prime_r() * self.limit_spectrum_j(i, a)?)
    }

    fn require_supercritical(&self) -> Result<()> {
        if self.r > 0.0 {
            Ok(())
        } else {
            Err(Error::UnsupportedRegime(
                "the total population must be supercritical (r > 0)".into(),
            ))
        }
    }

    /// `J`, the limit of `e^{−rt}M_t` per unit of the martingale limit.
    ///
    /// Model I: `(rp/(1 − p)) ∫ e^{−ru} ln W_p(u) du`.
    /// Model II: `θ ∫ e^{−θx}/W_θ(x) dx`.
    pub fn j_total(&self) -> Result<f64> {
        self.require_supercritical()?;
        let r = self.r;
        match self.params.mutation {
            MutationMechanism::ModelI { p } => {
                let j = self.j_integral(|u| (-r * u).exp() * self.w_star.value(u).ln(), f64::INFINITY)?;
                Ok(r * p / (1.0 - p) * j)
            }
            MutationMechanism::ModelII { theta } => {
                let j = self.j_integral(|u| (-theta * u).exp() / self.w_star.value(u), f64::INFINITY)?;
                Ok(theta * j)
            }
        }
    }

    /// Exponential lifespans only: `J = (r − r⋆) ∫ e^{−(r−r⋆)u}/W⋆(u) du`.
    pub fn j_total_unified(&self) -> Result<f64> {
        self.require_supercritical()?;
        let rate = self.params.founding_rate();
        if !matches!(self.w_star.flavor(), ScaleFlavor::ClosedFormExponential { .. }) {
            return Err(Error::NotExponential);
        }
        let j = self
            .quad
            .integrate_unbounded(|u| (-rate * u).exp() / self.w_star.value(u), 0.0, rate, f64::INFINITY)
            .ok_or(Error::UnsupportedRegime("J integral did not converge".into()))?;
        Ok(rate * j)
    }
}

fn geometric_marginal(b: f64, w: f64, dw: f64, n: u64) -> f64 {
    let alive = dw / (b * w);
    if n == 0 {
        1.0 - alive
    } else {
        alive * geometric_weight(w, n) / w
    }
}

fn is_full_age(a: f64, t: f64) -> bool {
    (a - t).abs() <= 1e-12 * t.max(1.0)
}

fn check_query(i: u64, a: f64, t: f64) -> Result<()> {
    ensure_param(i >= 1, "i", i as f64, "family sizes start at 1")?;
    ensure_param(t > 0.0 && t.is_finite(), "t", t, "must be positive and finite")?;
    ensure_param(a > 0.0 && a <= t * (1.0 + 1e-12), "a", a, "must lie in (0, t]")
}

/// `P(Z(t) = n)` for the model's population.
pub fn marginal_z(params: &ModelParams, t: f64, n: u64) -> Result<f64> {
    AnalyticModel::new(params.clone())?.marginal_z(t, n)
}

/// `r/b`, zero unless the population is supercritical.
pub fn survival_probability(params: &ModelParams) -> Result<f64> {
    Ok(LaplaceExponent::of_population(params).largest_root()? / params.birth_rate())
}
