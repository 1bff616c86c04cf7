//! Model parameters: the lifespan measure of a splitting tree, the neutral
//! mutation mechanism, and the scalar quantities derived from them.
//!
//! A lifespan measure `Λ` is a finite measure on `(0, ∞]` with total mass
//! `b`, the birth rate. Internally everything is phrased through the tail
//! `Λ̄(y) = Λ((y, ∞])`, which is what the renewal equation for the scale
//! function and the Laplace exponent consume.

use std::io::BufRead;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{ensure_param, Error, Result};

/// Relative tolerance under which a growth rate is treated as exactly zero.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Samples of a non-increasing tail `Λ̄` on the uniform grid `0, h, 2h, …`.
///
/// Beyond the last node the tail is zero, so the measure carries an atom
/// of mass `Λ̄(end)` at the end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    step: f64,
    values: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        ensure_param(step > 0.0 && step.is_finite(), "step", step, "must be positive")?;
        if values.len() < 2 {
            return Err(Error::InvalidTail("need at least two grid nodes".into()));
        }
        let head = values[0];
        if !(head > 0.0 && head.is_finite()) {
            return Err(Error::InvalidTail(format!(
                "tail at 0 must be a positive birth rate, got {head}"
            )));
        }
        for (k, w) in values.windows(2).enumerate() {
            if !(w[1] <= w[0]) || w[1] < 0.0 {
                return Err(Error::InvalidTail(format!(
                    "tail must be non-increasing and non-negative (node {})",
                    k + 1
                )));
            }
        }
        Ok(Self { step, values })
    }

    /// Samples `y ↦ tail(y)` on `[0, horizon]` with the given step.
    pub fn from_fn(step: f64, horizon: f64, tail: impl Fn(f64) -> f64) -> Result<Self> {
        ensure_param(step > 0.0, "step", step, "must be positive")?;
        let n = (horizon / step).round() as usize;
        Self::new(step, (0..=n).map(|k| tail(k as f64 * step)).collect())
    }

    /// Reads a two-column `y,tail` table with a uniform `y` grid starting at 0.
    /// Blank lines, `#` comments and a non-numeric header line are skipped.
    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut ys = Vec::new();
        let mut vals = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "expected two comma-separated columns".into(),
                });
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(y), Ok(v)) => {
                    ys.push(y);
                    vals.push(v);
                }
                _ if ys.is_empty() => continue,
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("non-numeric row `{trimmed}`"),
                    })
                }
            }
        }
        if ys.len() < 2 {
            return Err(Error::InvalidTail("table has fewer than two rows".into()));
        }
        if ys[0].abs() > 1e-12 {
            return Err(Error::InvalidTail("grid must start at y = 0".into()));
        }
        let step = ys[1] - ys[0];
        for (k, y) in ys.iter().enumerate() {
            if (y - k as f64 * step).abs() > 1e-9 * (1.0 + y.abs()) {
                return Err(Error::InvalidTail(format!("grid is not uniform at row {k}")));
            }
        }
        Self::new(step, vals)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right end of the grid.
    pub fn end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Linear interpolation between nodes, zero beyond the grid.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.values[0];
        }
        let pos = y / self.step;
        let k = pos.floor() as usize;
        if k + 1 >= self.values.len() {
            return if k + 1 == self.values.len() && pos - k as f64 == 0.0 {
                self.values[k]
            } else {
                0.0
            };
        }
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// `∫₀^end f(y) Λ̄(y) dy` by composite Simpson on the grid nodes
    /// (three-eighths rule on the last panel when the interval count is odd).
    pub fn integrate_against(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.step;
        let g: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * f(k as f64 * h))
            .collect();
        composite_simpson(&g, h)
    }

    fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let step = self.step;
        Self {
            step,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| f(k as f64 * step, v))
                .collect(),
        }
    }
}

pub(crate) fn composite_simpson(g: &[f64], h: f64) -> f64 {
    let n = g.len() - 1;
    match n {
        0 => 0.0,
        1 => 0.5 * h * (g[0] + g[1]),
        2 => h / 3.0 * (g[0] + 4.0 * g[1] + g[2]),
        3 => 3.0 * h / 8.0 * (g[0] + 3.0 * g[1] + 3.0 * g[2] + g[3]),
        _ => {
            let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
            let mut acc = g[0] + g[simpson_end];
            for (k, v) in g.iter().enumerate().take(simpson_end).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = acc * h / 3.0;
            if simpson_end != n {
                let s = simpson_end;
                total += 3.0 * h / 8.0 * (g[s] + 3.0 * g[s + 1] + 3.0 * g[s + 2] + g[s + 3]);
            }
            total
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LifespanKind {
    /// Exponential lifespans with the given death rate (`0` means immortal).
    Exponential { death_rate: f64 },
    PointMassAtInfinity,
    Tabulated(TabulatedTail),
}

/// Lifespan measure `Λ` with total mass `b`; `Λ/b` is the lifespan law.
#[derive(Debug, Clone, PartialEq)]
pub struct LifespanMeasure {
    birth_rate: f64,
    kind: LifespanKind,
}

impl LifespanMeasure {
    pub fn exponential(birth_rate: f64, death_rate: f64) -> Result<Self> {
        ensure_param(
            birth_rate > 0.0 && birth_rate.is_finite(),
            "b",
            birth_rate,
            "birth rate must be positive",
        )?;
        ensure_param(
            death_rate >= 0.0 && death_rate.is_finite(),
            "d",
            death_rate,
            "death rate must be non-negative",
        )?;
        Ok(Self {
            birth_rate,
            kind: LifespanKind::Exponential { death_rate },
        })
    }

    /// Immortal particles: `Λ = b δ_∞`, the Yule process.
    pub fn point_mass_at_infinity(birth_rate: f64) -> Result<Self> {
        ensure_param(
            birth_rate > 0.0 && birth_rate.is_finite(),
            "b",
            birth_rate,
            "birth rate must be positive",
        )?;
        Ok(Self {
            birth_rate,
            kind: LifespanKind::PointMassAtInfinity,
        })
    }

    /// The birth rate is read off the tail at zero.
    pub fn tabulated(tail: TabulatedTail) -> Self {
        Self {
            birth_rate: tail.values[0],
            kind: LifespanKind::Tabulated(tail),
        }
    }

    pub fn birth_rate(&self) -> f64 {
        self.birth_rate
    }

    pub fn kind(&self) -> &LifespanKind {
        &self.kind
    }

    /// `(b, d)` when the lifespans are exponential; immortality reads as `d = 0`.
    pub fn exponential_rates(&self) -> Option<(f64, f64)> {
        match self.kind {
            LifespanKind::Exponential { death_rate } => Some((self.birth_rate, death_rate)),
            LifespanKind::PointMassAtInfinity => Some((self.birth_rate, 0.0)),
            LifespanKind::Tabulated(_) => None,
        }
    }

    /// `Λ̄(y) = Λ((y, ∞])`.
    pub fn tail(&self, y: f64) -> f64 {
        match &self.kind {
            LifespanKind::Exponential { death_rate } => self.birth_rate * (-death_rate * y.max(0.0)).exp(),
            LifespanKind::PointMassAtInfinity => self.birth_rate,
            LifespanKind::Tabulated(t) => t.eval(y),
        }
    }

    /// Mean offspring number `m = ∫ u Λ(du) = ∫ Λ̄(y) dy`.
    pub fn mean_offspring(&self) -> f64 {
        match &self.kind {
            LifespanKind::Exponential { death_rate } if *death_rate > 0.0 => {
                self.birth_rate / death_rate
            }
            LifespanKind::Exponential { .. } | LifespanKind::PointMassAtInfinity => f64::INFINITY,
            LifespanKind::Tabulated(t) => {
                // the atom at the grid end is already inside ∫ Λ̄
                t.integrate_against(|_| 1.0)
            }
        }
    }

    /// `σ² = ∫ u² Λ(du) = 2 ∫ y Λ̄(y) dy`.
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            LifespanKind::Exponential { death_rate } if *death_rate > 0.0 => {
                2.0 * self.birth_rate / (death_rate * death_rate)
            }
            LifespanKind::Exponential { .. } | LifespanKind::PointMassAtInfinity => f64::INFINITY,
            LifespanKind::Tabulated(t) => 2.0 * t.integrate_against(|y| y),
        }
    }

    /// `(1 − p)Λ`: same lifespans, thinned births.
    pub fn thinned(&self, keep: f64) -> Self {
        let kind = match &self.kind {
            LifespanKind::Tabulated(t) => LifespanKind::Tabulated(t.map_values(|_, v| v * keep)),
            other => other.clone(),
        };
        Self {
            birth_rate: self.birth_rate * keep,
            kind,
        }
    }

    /// Lifespans `min(X, Exp(θ))`: tail multiplied by `e^{−θy}`.
    pub fn killed(&self, theta: f64) -> Self {
        if theta == 0.0 {
            return self.clone();
        }
        let kind = match &self.kind {
            LifespanKind::Exponential { death_rate } => LifespanKind::Exponential {
                death_rate: death_rate + theta,
            },
            LifespanKind::PointMassAtInfinity => LifespanKind::Exponential { death_rate: theta },
            LifespanKind::Tabulated(t) => {
                LifespanKind::Tabulated(t.map_values(|y, v| v * (-theta * y).exp()))
            }
        };
        Self {
            birth_rate: self.birth_rate,
            kind,
        }
    }

    /// Draws one lifespan from `Λ/b`; may be `+∞`.
    pub fn sample_lifespan<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LifespanKind::Exponential { death_rate } if *death_rate > 0.0 => {
                Exp::new(*death_rate).expect("positive rate").sample(rng)
            }
            LifespanKind::Exponential { .. } | LifespanKind::PointMassAtInfinity => f64::INFINITY,
            LifespanKind::Tabulated(t) => {
                // inverse transform: P(ζ > y) = Λ̄(y)/b
                let u: f64 = 1.0 - rng.random::<f64>();
                let level = u * self.birth_rate;
                let vals = &t.values;
                let k = vals.partition_point(|&v| v >= level);
                if k >= vals.len() {
                    t.end()
                } else {
                    let (hi, lo) = (vals[k - 1], vals[k]);
                    (k - 1) as f64 * t.step + t.step * (hi - level) / (hi - lo)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MutationMechanism {
    /// Each newborn is a mutant with probability `p`, a clone otherwise.
    ModelI { p: f64 },
    /// Mutations along each lifeline at rate `theta`; births are clonal.
    ModelII { theta: f64 },
}

impl MutationMechanism {
    /// `p = 0` is accepted as the mutation-free control.
    pub fn model_i(p: f64) -> Result<Self> {
        ensure_param((0.0..1.0).contains(&p), "p", p, "must lie in [0, 1)")?;
        Ok(Self::ModelI { p })
    }

    /// `theta = 0` is accepted as the mutation-free control.
    pub fn model_ii(theta: f64) -> Result<Self> {
        ensure_param(
            theta >= 0.0 && theta.is_finite(),
            "theta",
            theta,
            "must be a non-negative rate",
        )?;
        Ok(Self::ModelII { theta })
    }

    pub fn is_mutation_free(&self) -> bool {
        match *self {
            Self::ModelI { p } => p == 0.0,
            Self::ModelII { theta } => theta == 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::ModelI { .. } => "I",
            Self::ModelII { .. } => "II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl Criticality {
    fn from_sign(x: f64, scale: f64) -> Self {
        if x.abs() <= CRITICAL_TOLERANCE * scale.max(1.0) {
            Self::Critical
        } else if x < 0.0 {
            Self::Subcritical
        } else {
            Self::Supercritical
        }
    }
}

/// Birth rate, death rate and growth rate of the clonal process (the
/// population bearing the progenitor's type), exponential case.
///
/// `r_star = b_star − d_star` may be negative; it is zeroed when it falls
/// within [`CRITICAL_TOLERANCE`] of zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClonalParams {
    pub b_star: f64,
    pub d_star: f64,
    pub r_star: f64,
    pub class: Criticality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lifespan: LifespanMeasure,
    pub mutation: MutationMechanism,
}

impl ModelParams {
    pub fn new(lifespan: LifespanMeasure, mutation: MutationMechanism) -> Self {
        Self { lifespan, mutation }
    }

    /// Linear birth–death process with Model I mutations.
    pub fn exponential_i(b: f64, d: f64, p: f64) -> Result<Self> {
        Ok(Self::new(
            LifespanMeasure::exponential(b, d)?,
            MutationMechanism::model_i(p)?,
        ))
    }

    /// Linear birth–death process with Model II mutations.
    pub fn exponential_ii(b: f64, d: f64, theta: f64) -> Result<Self> {
        Ok(Self::new(
            LifespanMeasure::exponential(b, d)?,
            MutationMechanism::model_ii(theta)?,
        ))
    }

    pub fn birth_rate(&self) -> f64 {
        self.lifespan.birth_rate()
    }

    pub fn mean_offspring(&self) -> f64 {
        self.lifespan.mean_offspring()
    }

    pub fn classify(&self) -> Criticality {
        let m = self.mean_offspring();
        if m.is_infinite() {
            Criticality::Supercritical
        } else {
            Criticality::from_sign(m - 1.0, 1.0)
        }
    }

    /// Lifespan measure of the clonal splitting tree: `(1 − p)Λ` in Model I,
    /// lifespans `min(X, Exp(θ))` in Model II.
    pub fn clonal_lifespan(&self) -> LifespanMeasure {
        match self.mutation {
            MutationMechanism::ModelI { p } => self.lifespan.thinned(1.0 - p),
            MutationMechanism::ModelII { theta } => self.lifespan.killed(theta),
        }
    }

    /// Rate at which each particle founds new types, `r − r⋆`: `bp` in
    /// Model I, `θ` in Model II.
    pub fn founding_rate(&self) -> f64 {
        match self.mutation {
            MutationMechanism::ModelI { p } => self.birth_rate() * p,
            MutationMechanism::ModelII { theta } => theta,
        }
    }

    /// Clonal `(b⋆, d⋆, r⋆)` in the exponential case.
    pub fn clonal_params(&self) -> Result<ClonalParams> {
        let (b, d) = self.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
        let (b_star, d_star) = match self.mutation {
            MutationMechanism::ModelI { p } => (b * (1.0 - p), d),
            MutationMechanism::ModelII { theta } => (b, d + theta),
        };
        let raw = b_star - d_star;
        let class = Criticality::from_sign(raw, b_star + d_star);
        let r_star = if class == Criticality::Critical { 0.0 } else { raw };
        Ok(ClonalParams {
            b_star,
            d_star,
            r_star,
            class,
        })
    }

    /// `b − d` in the exponential case (negative when subcritical).
    pub fn net_growth(&self) -> Result<f64> {
        let (b, d) = self.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
        let raw = b - d;
        Ok(if raw.abs() <= CRITICAL_TOLERANCE * (b + d) { 0.0 } else { raw })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_offspring_examples() {
        let lm = LifespanMeasure::exponential(2.0, 1.0).unwrap();
        assert_eq!(lm.mean_offspring(), 2.0);
        assert_eq!(LifespanMeasure::exponential(1.0, 1.0).unwrap().mean_offspring(), 1.0);
        assert!(LifespanMeasure::point_mass_at_infinity(1.0)
            .unwrap()
            .mean_offspring()
            .is_infinite());
    }

    #[test]
    fn tabulated_mean_matches_closed_form() {
        let tail = TabulatedTail::from_fn(1e-3, 20.0, |y| 2.0 * (-y).exp()).unwrap();
        let m = LifespanMeasure::tabulated(tail).mean_offspring();
        // trapezoid oracle on the same samples
        let h = 1e-3;
        let n = 20_000;
        let trap: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * 2.0 * (-(k as f64) * h).exp()
            })
            .sum::<f64>()
            * h;
        assert!((trap - 2.0).abs() < 1e-3);
        assert!((m - 2.0).abs() < 1e-3);
    }

    #[test]
    fn classify_examples() {
        let class = |b, d| ModelParams::exponential_ii(b, d, 0.5).unwrap().classify();
        assert_eq!(class(2.0, 1.0), Criticality::Supercritical);
        assert_eq!(class(1.0, 1.0), Criticality::Critical);
        assert_eq!(class(1.0, 2.0), Criticality::Subcritical);
    }

    #[test]
    fn clonal_params_examples() {
        let c = ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap().clonal_params().unwrap();
        assert_eq!((c.b_star, c.d_star, c.r_star), (2.0, 2.5, -0.5));
        assert_eq!(c.class, Criticality::Subcritical);

        let c = ModelParams::exponential_i(2.0, 1.0, 0.5).unwrap().clonal_params().unwrap();
        assert_eq!((c.b_star, c.d_star, c.r_star), (1.0, 1.0, 0.0));
        assert_eq!(c.class, Criticality::Critical);

        let c = ModelParams::exponential_ii(2.0, 1.0, 1e-300).unwrap().clonal_params().unwrap();
        assert_relative_eq!(c.b_star, 2.0);
        assert_relative_eq!(c.d_star, 1.0);
        assert_relative_eq!(c.r_star, 1.0);
        assert_eq!(c.class, Criticality::Supercritical);
    }

    #[test]
    fn clonal_params_rejects_tabulated() {
        let tail = TabulatedTail::from_fn(0.01, 5.0, |y| (1.0 - y / 5.0).max(0.0)).unwrap();
        let params = ModelParams::new(
            LifespanMeasure::tabulated(tail),
            MutationMechanism::model_i(0.2).unwrap(),
        );
        assert!(matches!(params.clonal_params(), Err(Error::NotExponential)));
    }

    #[test]
    fn parameter_ranges() {
        assert!(MutationMechanism::model_i(1.5).is_err());
        assert!(MutationMechanism::model_i(-0.1).is_err());
        assert!(MutationMechanism::model_ii(-1.0).is_err());
        assert!(LifespanMeasure::exponential(0.0, 1.0).is_err());
        assert!(TabulatedTail::new(0.1, vec![1.0, 1.2]).is_err());
        assert!(TabulatedTail::new(0.1, vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn tail_transforms() {
        let lm = LifespanMeasure::exponential(2.0, 1.0).unwrap();
        assert_relative_eq!(lm.tail(0.0), 2.0);
        assert_relative_eq!(lm.tail(1.0), 2.0 * (-1.0f64).exp());
        let killed = lm.killed(1.5);
        assert_eq!(killed.exponential_rates(), Some((2.0, 2.5)));
        let thinned = lm.thinned(0.75);
        assert_eq!(thinned.exponential_rates(), Some((1.5, 1.0)));
        let yule = LifespanMeasure::point_mass_at_infinity(1.0).unwrap();
        assert_eq!(yule.tail(100.0), 1.0);
        assert_eq!(yule.killed(2.0).exponential_rates(), Some((1.0, 2.0)));
    }

    #[test]
    fn second_moment_exponential() {
        // ∫ u² · 2e^{−u} du = 4
        let lm = LifespanMeasure::exponential(2.0, 1.0).unwrap();
        assert_relative_eq!(lm.second_moment(), 4.0);
        let tail = TabulatedTail::from_fn(1e-3, 40.0, |y| 2.0 * (-y).exp()).unwrap();
        assert_relative_eq!(
            LifespanMeasure::tabulated(tail).second_moment(),
            4.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn tabulated_sampling_matches_tail() {
        // uniform lifespans on (0, 2): P(ζ > 1) = 1/2, mean 1
        let tail = TabulatedTail::from_fn(0.01, 2.0, |y| 3.0 * (1.0 - y / 2.0).max(0.0)).unwrap();
        let lm = LifespanMeasure::tabulated(tail);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| lm.sample_lifespan(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let above = draws.iter().filter(|&&z| z > 1.0).count() as f64 / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((above - 0.5).abs() < 0.01, "P(>1) {above}");
        assert!(draws.iter().all(|&z| (0.0..=2.0).contains(&z)));
    }

    #[test]
    fn csv_tail_roundtrip() {
        let text = "y,tail\n0,2\n0.5,1.5\n1.0,0.5\n1.5,0\n";
        let t = TabulatedTail::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.step(), 0.5);
        assert_eq!(t.values(), &[2.0, 1.5, 0.5, 0.0]);
        assert!(TabulatedTail::from_csv("0,1\n0.5,1\n0.7,1\n".as_bytes()).is_err());
    }
}
