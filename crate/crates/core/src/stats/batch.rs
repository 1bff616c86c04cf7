//! Replica batches run in parallel.
//!
//! Replica `k` draws only from the streams of `(seed, k)`, and results are
//! collected in replica order, so a batch does not depend on the number of
//! worker threads.

use rayon::prelude::*;

use crate::analytic::old_family_scale;
use crate::error::{ensure_param, Error, Result};
use crate::model::ModelParams;
use crate::simulate::markov::{simulate_partition_markov, simulate_population_count};
use crate::simulate::partition::{allelic_partition, snapshot_statistics, SnapshotStatistics, StatisticsGrid};
use crate::simulate::seeding::ReplicaRngs;
use crate::simulate::staged::{simulate_old_families, OldFamilyOutcome};
use crate::simulate::tree::{condition_on_survival, simulate_tree_with, Caps};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Per-particle genealogy; any lifespan measure.
    Tree,
    /// Birth–death chain with types; exponential lifespans.
    Markov,
    /// Population size only; exponential lifespans.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub replicas: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub caps: Caps,
    /// Keep only replicas with `Z(t) > 0`, resampling extinct ones.
    pub conditioned: bool,
    pub max_attempts: usize,
}

impl RunSettings {
    pub fn new(seed: u64, replicas: usize) -> Self {
        Self {
            seed,
            replicas,
            threads: None,
            caps: Caps::default(),
            conditioned: false,
            max_attempts: 1_000_000,
        }
    }

    pub fn conditioned(mut self) -> Self {
        self.conditioned = true;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn validate(&self) -> Result<()> {
        ensure_param(self.replicas >= 1, "replicas", self.replicas as f64, "must be at least 1")?;
        ensure_param(self.max_attempts >= 1, "max_attempts", self.max_attempts as f64, "must be at least 1")?;
        if let Some(n) = self.threads {
            ensure_param(n >= 1, "threads", n as f64, "must be at least 1")?;
        }
        self.caps.validate()
    }
}

/// Runs `replica(k, rngs)` for every `k`, on `settings.threads` workers,
/// resampling extinct outcomes when the run is conditioned. Returns the
/// outcomes in replica order with their attempt counts.
fn fan_out<T: Send>(
    settings: &RunSettings,
    replica: impl Fn(&mut ReplicaRngs) -> Result<(T, bool)> + Sync + Send,
) -> Result<Vec<(T, u64)>> {
    settings.validate()?;
    let run = || {
        (0..settings.replicas as u64)
            .into_par_iter()
            .map(|k| {
                let mut rngs = ReplicaRngs::new(settings.seed, k);
                if settings.conditioned {
                    condition_on_survival(settings.max_attempts, || replica(&mut rngs))
                        .map(|(t, attempts)| (t, attempts as u64))
                } else {
                    replica(&mut rngs).map(|(t, _)| (t, 1))
                }
            })
            .collect::<Result<Vec<_>>>()
    };
    match settings.threads {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::UnsupportedRegime(format!("thread pool: {e}")))?
            .install(run),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaBatch {
    pub params: ModelParams,
    pub t: f64,
    pub engine: Engine,
    pub settings: RunSettings,
    pub grid: StatisticsGrid,
    /// The count engine fills in `population` only.
    pub replicas: Vec<SnapshotStatistics>,
    /// Simulations used per replica; 1 unless conditioned.
    pub attempts: Vec<u64>,
}

impl ReplicaBatch {
    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    pub fn total_attempts(&self) -> u64 {
        self.attempts.iter().sum()
    }

    pub fn populations(&self) -> Vec<u64> {
        self.replicas.iter().map(|r| r.population).collect()
    }

    /// Index of `a` in the grid of ages.
    pub fn age_index(&self, a: f64) -> Option<usize> {
        self.grid.ages.iter().position(|&x| (x - a).abs() <= 1e-12 * a.abs().max(1.0))
    }

    /// Index of `x` in the grid of sizes.
    pub fn size_index(&self, x: f64) -> Option<usize> {
        self.grid.sizes.iter().position(|&y| (y - x).abs() <= 1e-12 * x.abs().max(1.0))
    }
}

fn count_only(population: u64) -> SnapshotStatistics {
    SnapshotStatistics {
        population,
        type_count: 0,
        spectrum: Vec::new(),
        old_families: Vec::new(),
        large_families: Vec::new(),
        ranked_ages: Vec::new(),
        ranked_sizes: Vec::new(),
    }
}

pub fn run_batch(
    params: &ModelParams,
    t: f64,
    grid: &StatisticsGrid,
    engine: Engine,
    settings: RunSettings,
) -> Result<ReplicaBatch> {
    let out = fan_out(&settings, |rngs| {
        let stats = match engine {
            Engine::Tree => {
                let snap = simulate_tree_with(params, t, rngs, settings.caps)?;
                snapshot_statistics(&allelic_partition(&snap), grid)
            }
            Engine::Markov => {
                let part = simulate_partition_markov(params, t, rngs, settings.caps)?;
                snapshot_statistics(&part, grid)
            }
            Engine::Count => {
                let (b, d) = params.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
                count_only(simulate_population_count(b, d, t, rngs, settings.caps)?)
            }
        };
        let alive = stats.population > 0;
        Ok((stats, alive))
    })?;
    let (replicas, attempts) = out.into_iter().unzip();
    Ok(ReplicaBatch {
        params: params.clone(),
        t,
        engine,
        settings,
        grid: grid.clone(),
        replicas,
        attempts,
    })
}

/// Old-family counts `O_t(a + c_t)` at recentred offsets `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct OldFamilyBatch {
    pub params: ModelParams,
    pub t: f64,
    /// `c_t`.
    pub centre: f64,
    pub offsets: Vec<f64>,
    pub settings: RunSettings,
    pub outcomes: Vec<OldFamilyOutcome>,
    pub attempts: Vec<u64>,
}

impl OldFamilyBatch {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn total_attempts(&self) -> u64 {
        self.attempts.iter().sum()
    }

    /// `O_t(offsets[j] + c_t)` across replicas.
    pub fn counts(&self, j: usize) -> Vec<u64> {
        self.outcomes.iter().map(|o| o.old_families[j]).collect()
    }
}

pub fn run_old_family_batch(
    params: &ModelParams,
    t: f64,
    offsets: &[f64],
    settings: RunSettings,
) -> Result<OldFamilyBatch> {
    let centre = old_family_scale(params, t)?;
    let ages: Vec<f64> = offsets.iter().map(|a| a + centre).collect();
    let out = fan_out(&settings, |rngs| {
        let o = simulate_old_families(params, t, &ages, rngs, settings.caps)?;
        let alive = o.alive;
        Ok((o, alive))
    })?;
    let (outcomes, attempts) = out.into_iter().unzip();
    Ok(OldFamilyBatch {
        params: params.clone(),
        t,
        centre,
        offsets: offsets.to_vec(),
        settings,
        outcomes,
        attempts,
    })
}
