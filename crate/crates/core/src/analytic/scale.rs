//! Scale functions `W` with `∫ W(x) e^{−λx} dx = 1/ψ(λ)`.
//!
//! Exponential lifespans have the closed form `W(x) = (b e^{gx} − d)/g` with
//! `g = b − d` (`1 + bx` when `b = d`). Otherwise `W` solves the renewal
//! equation `W = 1 + Λ̄ ∗ W`, and `W'` solves the same equation with
//! forcing `Λ̄` instead of `1`, so no numerical differentiation is needed.

use crate::error::{Error, Result};
use crate::model::{LifespanMeasure, ModelParams, MutationMechanism};

/// Gregory end weights for `n ≥ 5` intervals; interior weights are `1`.
const GREGORY_END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleFlavor {
    ClosedFormExponential { b: f64, d: f64, growth: f64 },
    RenewalSolved,
    /// `W_θ(x) = 1 + ∫₀ˣ e^{−θu} W'(u) du` from a renewal-solved `W`.
    KilledIntegral { theta: f64 },
}

#[derive(Debug, Clone)]
pub struct ScaleFunction {
    flavor: ScaleFlavor,
    step: f64,
    horizon: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl ScaleFunction {
    pub fn closed_form(b: f64, d: f64) -> Self {
        let growth = b - d;
        let growth = if growth.abs() <= 1e-12 * (b + d) { 0.0 } else { growth };
        Self {
            flavor: ScaleFlavor::ClosedFormExponential { b, d, growth },
            step: 0.0,
            horizon: f64::INFINITY,
            values: Vec::new(),
            derivs: Vec::new(),
        }
    }

    pub fn flavor(&self) -> &ScaleFlavor {
        &self.flavor
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Grid values `W(kh)` (empty for the closed form).
    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_derivatives(&self) -> &[f64] {
        &self.derivs
    }

    /// `W(x)`.
    ///
    /// # Panics
    /// If `x` lies beyond the tabulated horizon.
    pub fn value(&self, x: f64) -> f64 {
        match self.flavor {
            ScaleFlavor::ClosedFormExponential { b, growth, .. } => {
                if growth == 0.0 {
                    1.0 + b * x
                } else {
                    1.0 + b * (growth * x).exp_m1() / growth
                }
            }
            _ => self.hermite(x).0,
        }
    }

    /// `W'(x)` (right derivative at `0`, which equals `b`).
    pub fn derivative(&self, x: f64) -> f64 {
        match self.flavor {
            ScaleFlavor::ClosedFormExponential { b, growth, .. } => b * (growth * x).exp(),
            _ => self.hermite(x).1,
        }
    }

    fn hermite(&self, x: f64) -> (f64, f64) {
        assert!(
            x >= 0.0 && x <= self.horizon * (1.0 + 1e-12),
            "scale function evaluated at {x} outside [0, {}]",
            self.horizon
        );
        let pos = x / self.step;
        let last = self.values.len() - 1;
        let k = (pos.floor() as usize).min(last - 1);
        let s = (pos - k as f64).clamp(0.0, 1.0);
        let h = self.step;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.derivs[k] * h, self.derivs[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let slope = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (value, slope)
    }
}

fn check_grid(horizon: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !(horizon > 0.0) || step > horizon {
        return Err(Error::InvalidGrid { step, horizon });
    }
    Ok(((horizon / step).round() as usize).max(1))
}

/// Quadrature weight of node `k` in an `n`-interval rule on a uniform grid.
fn weight(n: usize, k: usize) -> f64 {
    match n {
        1 => 0.5,
        2 => [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0][k],
        3 => [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0][k],
        4 => [1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0][k],
        _ => {
            let from_end = k.min(n - k);
            if from_end < 3 {
                GREGORY_END[from_end]
            } else {
                1.0
            }
        }
    }
}

/// Solves `W = 1 + Λ̄ ∗ W` and `W' = Λ̄ + Λ̄ ∗ W'` on `[0, horizon]`.
///
/// The convolutions use Gregory's fourth-order end corrections, so the
/// error is `O(h⁴)` for smooth tails.
pub fn solve_renewal(tail: impl Fn(f64) -> f64, horizon: f64, step: f64) -> Result<ScaleFunction> {
    let n_max = check_grid(horizon, step)?;
    let h = step;
    let kernel: Vec<f64> = (0..=n_max).map(|k| tail(k as f64 * h)).collect();
    let mut w = Vec::with_capacity(n_max + 1);
    let mut dw = Vec::with_capacity(n_max + 1);
    w.push(1.0);
    dw.push(kernel[0]);
    for n in 1..=n_max {
        // Σ_{k=1}^{n} K_k X_{n−k} with unit weights, then end corrections
        let (mut sum_w, mut sum_d) = (0.0, 0.0);
        for (kv, (wv, dv)) in kernel[1..=n]
            .iter()
            .zip(w[..n].iter().rev().zip(dw[..n].iter().rev()))
        {
            sum_w += kv * wv;
            sum_d += kv * dv;
        }
        let correct = |k: usize, sum: &mut f64, x: &[f64]| {
            *sum += (weight(n, k) - 1.0) * kernel[k] * x[n - k];
        };
        let mut touched = [usize::MAX; 5];
        for (slot, k) in [1, 2, n.saturating_sub(2), n.saturating_sub(1), n].into_iter().enumerate() {
            if k >= 1 && k <= n && !touched.contains(&k) {
                touched[slot] = k;
                correct(k, &mut sum_w, &w);
                correct(k, &mut sum_d, &dw);
            }
        }
        let diag = 1.0 - h * weight(n, 0) * kernel[0];
        if diag <= 0.0 {
            return Err(Error::InvalidGrid {
                step,
                horizon,
            });
        }
        w.push((1.0 + h * sum_w) / diag);
        dw.push((kernel[n] + h * sum_d) / diag);
    }
    Ok(ScaleFunction {
        flavor: ScaleFlavor::RenewalSolved,
        step,
        horizon: n_max as f64 * h,
        values: w,
        derivs: dw,
    })
}

/// `W_θ(x) = 1 + ∫₀ˣ e^{−θu} W'(u) du` from a tabulated `W`.
pub fn killed_scale(base: &ScaleFunction, theta: f64) -> ScaleFunction {
    let h = base.step;
    let g: Vec<f64> = base
        .derivs
        .iter()
        .enumerate()
        .map(|(k, d)| (-theta * k as f64 * h).exp() * d)
        .collect();
    let n = g.len() - 1;
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    let mut acc = 1.0;
    for k in 0..n {
        // cubic through four neighbouring nodes, one-sided at the ends
        let piece = if n < 3 {
            0.5 * h * (g[k] + g[k + 1])
        } else if k == 0 {
            h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if k + 1 == n {
            h / 24.0 * (9.0 * g[n] + 19.0 * g[n - 1] - 5.0 * g[n - 2] + g[n - 3])
        } else {
            h / 24.0 * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2])
        };
        acc += piece;
        values.push(acc);
    }
    ScaleFunction {
        flavor: ScaleFlavor::KilledIntegral { theta },
        step: h,
        horizon: base.horizon,
        values,
        derivs: g,
    }
}

/// Scale function of a lifespan measure.
pub fn scale_of(lifespan: &LifespanMeasure, horizon: f64, step: f64) -> Result<ScaleFunction> {
    check_grid(horizon, step)?;
    match lifespan.exponential_rates() {
        Some((b, d)) => Ok(ScaleFunction::closed_form(b, d)),
        None => solve_renewal(|y| lifespan.tail(y), horizon, step),
    }
}

/// `W` of the total population.
pub fn scale_w(params: &ModelParams, horizon: f64, step: f64) -> Result<ScaleFunction> {
    scale_of(&params.lifespan, horizon, step)
}

/// `W⋆` of the clonal process: `W_p` (scale function of `(1 − p)Λ`) in
/// Model I, `W_θ` through `W_θ' = e^{−θx} W'` in Model II.
pub fn scale_w_clonal(params: &ModelParams, horizon: f64, step: f64) -> Result<ScaleFunction> {
    check_grid(horizon, step)?;
    if params.lifespan.exponential_rates().is_some() {
        let c = params.clonal_params()?;
        return Ok(ScaleFunction::closed_form(c.b_star, c.d_star));
    }
    match params.mutation {
        MutationMechanism::ModelI { .. } => scale_of(&params.clonal_lifespan(), horizon, step),
        MutationMechanism::ModelII { theta } => {
            let base = scale_w(params, horizon, step)?;
            Ok(killed_scale(&base, theta))
        }
    }
}
