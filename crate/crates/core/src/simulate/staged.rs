//! Old-family counts at large horizons for exponential lifespans.
//!
//! Only families founded before `s = t − min(a)` can be older than `a` at
//! `t`. The chain with types is run up to `s`; afterwards each of those
//! families is followed alone as a count, and every individual that
//! leaves it (by mutation, or as a mutant child) only matters through
//! whether its own lineage is still alive at `t`. That is one Bernoulli
//! draw with the linear birth–death survival probability, so the cost
//! after `s` is that of the old families, not of the whole population.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{ensure_param, Error, Result};
use crate::model::ModelParams;
use crate::simulate::markov::{simulate_partition_markov, Rates};
use crate::simulate::seeding::ReplicaRngs;
use crate::simulate::tree::Caps;

#[derive(Debug, Clone, PartialEq)]
pub struct OldFamilyOutcome {
    /// `O_t(a)` for each requested `a`, in order.
    pub old_families: Vec<u64>,
    /// Whether `Z(t) > 0`.
    pub alive: bool,
}

/// `P(Z(τ) > 0)` for a linear birth–death process from one individual.
pub(crate) fn lineage_survival(b: f64, d: f64, tau: f64) -> f64 {
    let g = b - d;
    if g == 0.0 {
        return 1.0 / (1.0 + b * tau);
    }
    // W'(τ)/(b W(τ)) with W = 1 + b(e^{gτ} − 1)/g, scaled to stay finite
    if g > 0.0 {
        1.0 / ((-g * tau).exp() - b * (-g * tau).exp_m1() / g)
    } else {
        (g * tau).exp() / (1.0 + b * (g * tau).exp_m1() / g)
    }
}

struct Leaks<'a> {
    rates: Rates,
    horizon: f64,
    alive: bool,
    rng: &'a mut rand_chacha::ChaCha8Rng,
}

impl Leaks<'_> {
    fn spawn(&mut self, at: f64) {
        if !self.alive {
            let p = lineage_survival(self.rates.b, self.rates.d, self.horizon - at);
            self.alive = self.rng.random::<f64>() < p;
        }
    }
}

/// Runs one replica and reports `O_t(a)` for each entry of `ages`.
///
/// Exact in law; agrees with counting old families on a full simulation.
pub fn simulate_old_families(
    params: &ModelParams,
    horizon: f64,
    ages: &[f64],
    rngs: &mut ReplicaRngs,
    caps: Caps,
) -> Result<OldFamilyOutcome> {
    ensure_param(horizon > 0.0 && horizon.is_finite(), "t", horizon, "must be positive and finite")?;
    for &a in ages {
        ensure_param(a.is_finite(), "a", a, "must be finite")?;
    }
    let rates = Rates::of(params)?;
    let youngest = ages
        .iter()
        .copied()
        .filter(|&a| a < horizon)
        .fold(horizon, f64::min)
        .max(0.0);
    let split = horizon - youngest;
    if split <= 0.0 {
        // no family can be old enough; only survival is needed
        let part = simulate_partition_markov(params, horizon, rngs, caps)?;
        return Ok(OldFamilyOutcome {
            old_families: ages.iter().map(|&a| part.old_families(a)).collect(),
            alive: part.population() > 0,
        });
    }
    let part = simulate_partition_markov(params, split, rngs, caps)?;
    let mut counts = vec![0u64; ages.len()];
    let mut leaks = Leaks {
        rates,
        horizon,
        alive: false,
        rng: &mut rngs.mutation,
    };
    let mut tracked = 0u64;
    let total = rates.total();
    let mut events = 0usize;
    for family in part.families.iter().filter(|f| f.origin < split) {
        tracked += family.size;
        let mut n = family.size;
        let mut now = split;
        while n > 0 {
            now += rngs.tree.sample::<f64, _>(Exp1) / (n as f64 * total);
            if now > horizon {
                break;
            }
            events += 1;
            if events > caps.max_events {
                return Err(Error::EventCapExceeded { events, cap: caps.max_events });
            }
            let u = rngs.tree.random::<f64>() * total;
            if u < rates.b {
                if rates.p > 0.0 && leaks.rng.random::<f64>() < rates.p {
                    leaks.spawn(now);
                } else {
                    if n as usize >= caps.max_particles {
                        return Err(Error::PopulationCapExceeded {
                            particles: n as usize + 1,
                            cap: caps.max_particles,
                        });
                    }
                    n += 1;
                }
            } else if u < rates.b + rates.d {
                n -= 1;
            } else {
                n -= 1;
                leaks.spawn(now);
            }
        }
        if n > 0 {
            leaks.alive = true;
            let age = horizon - family.origin;
            for (c, &a) in counts.iter_mut().zip(ages) {
                if a >= 0.0 && age > a {
                    *c += 1;
                }
            }
        }
    }
    let others = part.population() - tracked;
    let p = lineage_survival(rates.b, rates.d, horizon - split);
    for _ in 0..others {
        if leaks.alive {
            break;
        }
        leaks.alive = leaks.rng.random::<f64>() < p;
    }
    Ok(OldFamilyOutcome {
        old_families: counts,
        alive: leaks.alive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AnalyticModel;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn survival_probability_matches_scale_function() {
        for (b, d) in [(2.0, 1.0), (1.0, 2.0), (1.0, 1.0), (3.0, 0.0)] {
            let model = AnalyticModel::new(ModelParams::exponential_ii(b, d, 0.0).unwrap()).unwrap();
            for tau in [0.0, 0.3, 2.0, 7.5] {
                let want = model.alive_probability(tau).unwrap();
                approx::assert_relative_eq!(lineage_survival(b, d, tau), want, max_relative = 1e-12);
            }
        }
        assert!(lineage_survival(2.0, 1.0, 800.0) > 0.49);
        assert!(lineage_survival(1.0, 2.0, 800.0) >= 0.0);
    }

    #[test]
    fn agrees_with_the_full_chain() {
        let t = 6.0;
        let ages = [3.0, 4.0, 5.0];
        for params in [
            ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap(),
            ModelParams::exponential_i(2.0, 1.0, 0.6).unwrap(),
        ] {
            let n = 4000;
            let mut staged = vec![Vec::new(); 4];
            let mut full = vec![Vec::new(); 4];
            for k in 0..n {
                let out = simulate_old_families(&params, t, &ages, &mut ReplicaRngs::new(21, k), Caps::default())
                    .unwrap();
                for (j, &o) in out.old_families.iter().enumerate() {
                    staged[j].push(o as f64);
                }
                staged[3].push(out.alive as u8 as f64);
                let part =
                    simulate_partition_markov(&params, t, &mut ReplicaRngs::new(22, k), Caps::default()).unwrap();
                for (j, &a) in ages.iter().enumerate() {
                    full[j].push(part.old_families(a) as f64);
                }
                full[3].push((part.population() > 0) as u8 as f64);
            }
            for j in 0..4 {
                let (a, sa) = mean_and_se(&staged[j]);
                let (b, sb) = mean_and_se(&full[j]);
                assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "statistic {j}: {a} vs {b}");
            }
            let want = AnalyticModel::new(params).unwrap().alive_probability(t).unwrap();
            let (m, se) = mean_and_se(&staged[3]);
            assert!((m - want).abs() < 4.0 * se);
        }
    }

    #[test]
    fn thresholds_beyond_the_horizon_count_nothing() {
        let params = ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap();
        for k in 0..20 {
            let out = simulate_old_families(&params, 3.0, &[-1.0, 3.0, 10.0], &mut ReplicaRngs::new(2, k), Caps::default())
                .unwrap();
            assert_eq!(out.old_families, vec![0, 0, 0]);
        }
    }
}
