//! Forward simulation of splitting trees with mutation marks.
//!
//! [`tree`] is the exact per-particle engine with full genealogy and works
//! for any lifespan measure. For exponential lifespans the process is a
//! Markov birth–death chain, and [`markov`] and [`staged`] simulate it
//! without a genealogy, which is what makes large horizons affordable.

pub mod io;
pub mod markov;
pub mod partition;
pub mod seeding;
pub mod staged;
pub mod tree;

pub use io::{read_snapshot_csv, write_snapshot_csv};
pub use markov::{simulate_partition_markov, simulate_population_count};
pub use partition::{
    allelic_partition, snapshot_statistics, AllelicPartition, Family, SnapshotStatistics, StatisticsGrid,
};
pub use seeding::ReplicaRngs;
pub use staged::{simulate_old_families, OldFamilyOutcome};
pub use tree::{
    condition_on_survival, simulate_conditioned, simulate_tree, simulate_tree_with, Caps, MutationEvent,
    Particle, TreeSnapshot,
};
