//! Exact event-driven simulation of a splitting tree with genealogy.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{ensure_param, Error, Result};
use crate::model::{ModelParams, MutationMechanism};
use crate::simulate::seeding::ReplicaRngs;

pub const DEFAULT_MAX_PARTICLES: usize = 10_000_000;
pub const DEFAULT_MAX_EVENTS: usize = 100_000_000;

/// Guards against supercritical explosion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_particles: usize,
    pub max_events: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_particles: DEFAULT_MAX_PARTICLES,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

impl Caps {
    pub fn validate(&self) -> Result<()> {
        ensure_param(self.max_particles > 0, "max_particles", self.max_particles as f64, "must be positive")?;
        ensure_param(self.max_events > 0, "max_events", self.max_events as f64, "must be positive")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_time: f64,
    /// May exceed the horizon, or be infinite.
    pub death_time: f64,
    pub type_at_birth: u64,
}

impl Particle {
    pub fn is_alive_at(&self, t: f64) -> bool {
        self.birth_time <= t && t < self.death_time
    }
}

/// A Model II mutation mark: `particle` switches to `new_type` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationEvent {
    pub particle: usize,
    pub time: f64,
    pub new_type: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSnapshot {
    pub horizon: f64,
    pub particles: Vec<Particle>,
    /// In time order.
    pub mutation_events: Vec<MutationEvent>,
    /// `type_origins[k]` is the creation time of type `k`; type `0` is the
    /// progenitor's and originates at `0`.
    pub type_origins: Vec<f64>,
    pub alive_ids: Vec<usize>,
    pub seed: u64,
    pub replica: u64,
}

impl TreeSnapshot {
    /// `Z(t)`.
    pub fn population(&self) -> usize {
        self.alive_ids.len()
    }
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Birth(usize),
    Mutation(usize),
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // reversed: the heap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Engine<'a> {
    params: &'a ModelParams,
    horizon: f64,
    caps: Caps,
    queue: BinaryHeap<Pending>,
    seq: u64,
    particles: Vec<Particle>,
    current_type: Vec<u64>,
    type_origins: Vec<f64>,
    mutation_events: Vec<MutationEvent>,
}

impl Engine<'_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Pending {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn new_type(&mut self, time: f64) -> u64 {
        self.type_origins.push(time);
        (self.type_origins.len() - 1) as u64
    }

    fn schedule_birth(&mut self, m: usize, from: f64, rng: &mut impl Rng) {
        let b = self.params.birth_rate();
        let next = from + rng.sample::<f64, _>(Exp1) / b;
        if next < self.particles[m].death_time && next <= self.horizon {
            self.push(next, EventKind::Birth(m));
        }
    }

    fn schedule_mutation(&mut self, m: usize, from: f64, rng: &mut impl Rng) {
        if let MutationMechanism::ModelII { theta } = self.params.mutation {
            if theta > 0.0 {
                let next = from + rng.sample::<f64, _>(Exp1) / theta;
                if next < self.particles[m].death_time && next <= self.horizon {
                    self.push(next, EventKind::Mutation(m));
                }
            }
        }
    }

    fn add_particle(&mut self, parent: Option<usize>, time: f64, ty: u64, rngs: &mut ReplicaRngs) -> Result<()> {
        let id = self.particles.len();
        if id >= self.caps.max_particles {
            return Err(Error::PopulationCapExceeded {
                particles: id + 1,
                cap: self.caps.max_particles,
            });
        }
        let lifespan = self.params.lifespan.sample_lifespan(&mut rngs.tree);
        self.particles.push(Particle {
            id,
            parent,
            birth_time: time,
            death_time: time + lifespan,
            type_at_birth: ty,
        });
        self.current_type.push(ty);
        self.schedule_birth(id, time, &mut rngs.tree);
        self.schedule_mutation(id, time, &mut rngs.mutation);
        Ok(())
    }
}

/// Simulates one tree up to `horizon` with replica 0 of `seed`.
pub fn simulate_tree(params: &ModelParams, horizon: f64, seed: u64, caps: Caps) -> Result<TreeSnapshot> {
    let mut rngs = ReplicaRngs::new(seed, 0);
    simulate_tree_with(params, horizon, &mut rngs, caps).map(|mut s| {
        s.seed = seed;
        s
    })
}

/// Simulates one tree drawing from the given streams.
///
/// Lifespans and birth times come from `rngs.tree` and mutation draws from
/// `rngs.mutation`, in the order birth events occur. The tree is therefore
/// a function of the tree stream alone, whatever the mutation mechanism.
pub fn simulate_tree_with(
    params: &ModelParams,
    horizon: f64,
    rngs: &mut ReplicaRngs,
    caps: Caps,
) -> Result<TreeSnapshot> {
    ensure_param(horizon > 0.0 && horizon.is_finite(), "t", horizon, "must be positive and finite")?;
    caps.validate()?;
    let mut engine = Engine {
        params,
        horizon,
        caps,
        queue: BinaryHeap::new(),
        seq: 0,
        particles: Vec::new(),
        current_type: Vec::new(),
        type_origins: vec![0.0],
        mutation_events: Vec::new(),
    };
    engine.add_particle(None, 0.0, 0, rngs)?;
    let mut events = 0usize;
    while let Some(event) = engine.queue.pop() {
        events += 1;
        if events > caps.max_events {
            return Err(Error::EventCapExceeded {
                events,
                cap: caps.max_events,
            });
        }
        let now = event.time;
        match event.kind {
            EventKind::Birth(m) => {
                let ty = match params.mutation {
                    MutationMechanism::ModelI { p } if rngs.mutation.random::<f64>() < p => engine.new_type(now),
                    _ => engine.current_type[m],
                };
                engine.schedule_birth(m, now, &mut rngs.tree);
                engine.add_particle(Some(m), now, ty, rngs)?;
            }
            EventKind::Mutation(m) => {
                let ty = engine.new_type(now);
                engine.current_type[m] = ty;
                engine.mutation_events.push(MutationEvent {
                    particle: m,
                    time: now,
                    new_type: ty,
                });
                engine.schedule_mutation(m, now, &mut rngs.mutation);
            }
        }
    }
    let alive_ids = engine
        .particles
        .iter()
        .filter(|p| p.is_alive_at(horizon))
        .map(|p| p.id)
        .collect();
    Ok(TreeSnapshot {
        horizon,
        particles: engine.particles,
        mutation_events: engine.mutation_events,
        type_origins: engine.type_origins,
        alive_ids,
        seed: 0,
        replica: 0,
    })
}

/// Repeats `attempt` until it reports a surviving population.
///
/// Returns the accepted outcome and the number of attempts used.
pub fn condition_on_survival<T>(
    max_attempts: usize,
    mut attempt: impl FnMut() -> Result<(T, bool)>,
) -> Result<(T, usize)> {
    for k in 1..=max_attempts {
        let (outcome, alive) = attempt()?;
        if alive {
            return Ok((outcome, k));
        }
    }
    Err(Error::MaxAttemptsExceeded {
        attempts: max_attempts,
    })
}

/// Rejection sampling of a tree with `Z(t) > 0`.
///
/// This conditions on survival up to `t`, not on ultimate survival.
pub fn simulate_conditioned(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    caps: Caps,
    max_attempts: usize,
) -> Result<(TreeSnapshot, usize)> {
    let mut rngs = ReplicaRngs::new(seed, 0);
    condition_on_survival(max_attempts, || {
        let snap = simulate_tree_with(params, horizon, &mut rngs, caps)?;
        let alive = snap.population() > 0;
        Ok((snap, alive))
    })
    .map(|(mut snap, k)| {
        snap.seed = seed;
        (snap, k)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LifespanMeasure, TabulatedTail};

    fn supercritical_ii() -> ModelParams {
        ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap()
    }

    #[test]
    fn tiny_horizon_has_only_the_root() {
        let snap = simulate_tree(&supercritical_ii(), 1e-9, 1, Caps::default()).unwrap();
        assert_eq!(snap.particles.len(), 1);
        assert_eq!(snap.alive_ids, vec![0]);
        assert!(snap.mutation_events.is_empty());
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let a = simulate_tree(&supercritical_ii(), 4.0, 99, Caps::default()).unwrap();
        let b = simulate_tree(&supercritical_ii(), 4.0, 99, Caps::default()).unwrap();
        assert_eq!(a, b);
        let c = simulate_tree(&supercritical_ii(), 4.0, 100, Caps::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn genealogy_is_sound() {
        let tail = TabulatedTail::from_fn(1e-3, 3.0, |y| 1.5 * (1.0 - y / 3.0)).unwrap();
        let tab = ModelParams::new(LifespanMeasure::tabulated(tail), MutationMechanism::model_i(0.3).unwrap());
        for params in [supercritical_ii(), ModelParams::exponential_i(2.0, 1.0, 0.3).unwrap(), tab] {
            for seed in 0..20 {
                let snap = simulate_tree(&params, 4.0, seed, Caps::default()).unwrap();
                for p in &snap.particles {
                    assert!(p.birth_time < p.death_time);
                    if let Some(m) = p.parent {
                        let mother = &snap.particles[m];
                        assert!(mother.birth_time < p.birth_time && p.birth_time < mother.death_time);
                    } else {
                        assert_eq!((p.id, p.birth_time), (0, 0.0));
                    }
                }
                for w in snap.mutation_events.windows(2) {
                    assert!(w[0].time <= w[1].time);
                }
            }
        }
    }

    #[test]
    fn neutrality_coupling() {
        let i = ModelParams::exponential_i(2.0, 1.0, 0.3).unwrap();
        for seed in 0..30 {
            let a = simulate_tree(&i, 3.5, seed, Caps::default()).unwrap();
            let b = simulate_tree(&supercritical_ii(), 3.5, seed, Caps::default()).unwrap();
            assert_eq!(a.population(), b.population());
            let times = |s: &TreeSnapshot| s.particles.iter().map(|p| (p.birth_time, p.death_time)).collect::<Vec<_>>();
            assert_eq!(times(&a), times(&b));
        }
    }

    #[test]
    fn population_cap_is_enforced() {
        let params = ModelParams::exponential_ii(3.0, 0.0, 0.5).unwrap();
        let caps = Caps {
            max_particles: 1000,
            ..Caps::default()
        };
        assert!(matches!(
            simulate_tree(&params, 30.0, 1, caps),
            Err(Error::PopulationCapExceeded { .. })
        ));
    }

    #[test]
    fn conditioning_accepts_only_survivors() {
        for seed in 0..10 {
            let (snap, attempts) = simulate_conditioned(&supercritical_ii(), 3.0, seed, Caps::default(), 1000).unwrap();
            assert!(snap.population() > 0 && attempts >= 1);
        }
        let sub = ModelParams::exponential_ii(0.1, 5.0, 0.5).unwrap();
        assert!(matches!(
            simulate_conditioned(&sub, 20.0, 1, Caps::default(), 3),
            Err(Error::MaxAttemptsExceeded { attempts: 3 })
        ));
    }
}
