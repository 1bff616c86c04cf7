//! Gillespie simulation of the birth–death chain with exponential lifespans.
//!
//! Lifespans `Exp(d)` make the population a continuous-time Markov chain,
//! so a single alive individual is all the state a lineage needs. Each
//! alive individual is stored as the index of its type; picking one
//! uniformly and swap-removing on death keeps every event O(1).

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{ensure_param, Error, Result};
use crate::model::{ModelParams, MutationMechanism};
use crate::simulate::partition::{AllelicPartition, Family};
use crate::simulate::seeding::ReplicaRngs;
use crate::simulate::tree::Caps;

/// Per-individual rates of an exponential model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rates {
    pub b: f64,
    pub d: f64,
    /// Model II mutation rate, zero under Model I.
    pub theta: f64,
    /// Model I mutant-birth probability, zero under Model II.
    pub p: f64,
}

impl Rates {
    pub(crate) fn of(params: &ModelParams) -> Result<Self> {
        let (b, d) = params.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
        let (theta, p) = match params.mutation {
            MutationMechanism::ModelI { p } => (0.0, p),
            MutationMechanism::ModelII { theta } => (theta, 0.0),
        };
        Ok(Self { b, d, theta, p })
    }

    pub(crate) fn total(&self) -> f64 {
        self.b + self.d + self.theta
    }
}

fn check(horizon: f64, caps: Caps) -> Result<()> {
    ensure_param(horizon > 0.0 && horizon.is_finite(), "t", horizon, "must be positive and finite")?;
    caps.validate()
}

/// Allelic partition at `horizon` of a tree with exponential lifespans.
///
/// Same law as [`allelic_partition`](crate::simulate::allelic_partition)
/// of [`simulate_tree`](crate::simulate::simulate_tree), without the
/// genealogy. Event times and choices come from `rngs.tree`, Model I
/// mutant draws from `rngs.mutation`.
pub fn simulate_partition_markov(
    params: &ModelParams,
    horizon: f64,
    rngs: &mut ReplicaRngs,
    caps: Caps,
) -> Result<AllelicPartition> {
    check(horizon, caps)?;
    let rates = Rates::of(params)?;
    let total = rates.total();
    let mut alive: Vec<u32> = vec![0];
    let mut sizes: Vec<u64> = vec![1];
    let mut origins: Vec<f64> = vec![0.0];
    let mut now = 0.0;
    let mut events = 0usize;
    fn new_type(now: f64, sizes: &mut Vec<u64>, origins: &mut Vec<f64>) -> u32 {
        sizes.push(1);
        origins.push(now);
        (sizes.len() - 1) as u32
    }
    while !alive.is_empty() {
        now += rngs.tree.sample::<f64, _>(Exp1) / (alive.len() as f64 * total);
        if now > horizon {
            break;
        }
        events += 1;
        if events > caps.max_events {
            return Err(Error::EventCapExceeded { events, cap: caps.max_events });
        }
        // one uniform picks the individual (integer part) and the event (fraction)
        let x = rngs.tree.random::<f64>() * alive.len() as f64;
        let k = (x as usize).min(alive.len() - 1);
        let u = (x - k as f64) * total;
        if u < rates.b {
            if alive.len() >= caps.max_particles {
                return Err(Error::PopulationCapExceeded {
                    particles: alive.len() + 1,
                    cap: caps.max_particles,
                });
            }
            let ty = if rates.p > 0.0 && rngs.mutation.random::<f64>() < rates.p {
                new_type(now, &mut sizes, &mut origins)
            } else {
                sizes[alive[k] as usize] += 1;
                alive[k]
            };
            alive.push(ty);
        } else if u < rates.b + rates.d {
            sizes[alive[k] as usize] -= 1;
            alive.swap_remove(k);
        } else {
            sizes[alive[k] as usize] -= 1;
            alive[k] = new_type(now, &mut sizes, &mut origins);
        }
    }
    let families = sizes
        .iter()
        .zip(&origins)
        .enumerate()
        .filter(|(_, (&size, _))| size > 0)
        .map(|(k, (&size, &origin))| Family {
            type_id: k as u64,
            origin,
            size,
        })
        .collect();
    Ok(AllelicPartition::new(horizon, families))
}

/// `Z(t)` of a linear birth–death process started from one individual.
pub fn simulate_population_count(b: f64, d: f64, horizon: f64, rngs: &mut ReplicaRngs, caps: Caps) -> Result<u64> {
    check(horizon, caps)?;
    ensure_param(b > 0.0 && b.is_finite(), "b", b, "must be positive")?;
    ensure_param(d >= 0.0 && d.is_finite(), "d", d, "must be non-negative")?;
    let total = b + d;
    let mut z: u64 = 1;
    let mut now = 0.0;
    let mut events = 0usize;
    while z > 0 {
        now += rngs.tree.sample::<f64, _>(Exp1) / (z as f64 * total);
        if now > horizon {
            break;
        }
        events += 1;
        if events > caps.max_events {
            return Err(Error::EventCapExceeded { events, cap: caps.max_events });
        }
        if rngs.tree.random::<f64>() * total < b {
            if z as usize >= caps.max_particles {
                return Err(Error::PopulationCapExceeded {
                    particles: z as usize + 1,
                    cap: caps.max_particles,
                });
            }
            z += 1;
        } else {
            z -= 1;
        }
    }
    Ok(z)
}
