//! Allelic partitions and the statistics read off them.

use std::collections::BTreeMap;

use crate::simulate::tree::TreeSnapshot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    pub type_id: u64,
    pub origin: f64,
    pub size: u64,
}

/// Extant families at `horizon`, sorted by type id.
#[derive(Debug, Clone, PartialEq)]
pub struct AllelicPartition {
    pub horizon: f64,
    pub families: Vec<Family>,
}

impl AllelicPartition {
    pub fn new(horizon: f64, mut families: Vec<Family>) -> Self {
        families.retain(|f| f.size > 0);
        families.sort_by_key(|f| f.type_id);
        Self { horizon, families }
    }

    /// `Z(t)`.
    pub fn population(&self) -> u64 {
        self.families.iter().map(|f| f.size).sum()
    }

    /// `M_t`, the number of extant types.
    pub fn type_count(&self) -> usize {
        self.families.len()
    }

    pub fn age(&self, family: &Family) -> f64 {
        self.horizon - family.origin
    }

    /// Number of families of size exactly `i` and age below `a`; with
    /// `a = t` every family counts, the progenitor's included.
    pub fn spectrum(&self, i: u64, a: f64) -> u64 {
        let all = is_full_age(a, self.horizon);
        self.families
            .iter()
            .filter(|f| f.size == i && (all || self.age(f) < a))
            .count() as u64
    }

    /// `O_t(a)`: families strictly older than `a`; zero for `a < 0`.
    pub fn old_families(&self, a: f64) -> u64 {
        if a < 0.0 {
            return 0;
        }
        self.families.iter().filter(|f| self.age(f) > a).count() as u64
    }

    /// `L_t(x)`: families with at least `⌈x⌉` members.
    pub fn large_families(&self, x: f64) -> u64 {
        let threshold = x.ceil();
        self.families.iter().filter(|f| f.size as f64 >= threshold).count() as u64
    }

    /// Ages in decreasing order, ties broken by increasing type id.
    pub fn ranked_ages(&self) -> Vec<f64> {
        let mut order: Vec<&Family> = self.families.iter().collect();
        order.sort_by(|x, y| x.origin.total_cmp(&y.origin).then(x.type_id.cmp(&y.type_id)));
        order.into_iter().map(|f| self.age(f)).collect()
    }

    /// Sizes in decreasing order, ties broken by increasing type id.
    pub fn ranked_sizes(&self) -> Vec<u64> {
        let mut order: Vec<&Family> = self.families.iter().collect();
        order.sort_by(|x, y| y.size.cmp(&x.size).then(x.type_id.cmp(&y.type_id)));
        order.into_iter().map(|f| f.size).collect()
    }
}

pub(crate) fn is_full_age(a: f64, t: f64) -> bool {
    a >= t || (a - t).abs() <= 1e-12 * t.max(1.0)
}

/// Groups the snapshot's alive particles by their type at the horizon.
///
/// A particle carries its type at birth unless a mutation mark switched
/// it later; the last mark up to the horizon wins.
pub fn allelic_partition(snapshot: &TreeSnapshot) -> AllelicPartition {
    let mut current: BTreeMap<usize, u64> = BTreeMap::new();
    for e in &snapshot.mutation_events {
        if e.time <= snapshot.horizon {
            current.insert(e.particle, e.new_type);
        }
    }
    let mut sizes: BTreeMap<u64, u64> = BTreeMap::new();
    for &id in &snapshot.alive_ids {
        let ty = current
            .get(&id)
            .copied()
            .unwrap_or(snapshot.particles[id].type_at_birth);
        *sizes.entry(ty).or_default() += 1;
    }
    let families = sizes
        .into_iter()
        .map(|(type_id, size)| Family {
            type_id,
            origin: snapshot.type_origins[type_id as usize],
            size,
        })
        .collect();
    AllelicPartition::new(snapshot.horizon, families)
}

/// Grids at which [`SnapshotStatistics`] are evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatisticsGrid {
    pub i_max: u64,
    pub ages: Vec<f64>,
    pub old_ages: Vec<f64>,
    pub sizes: Vec<f64>,
    /// How many leading ranked ages and sizes to keep.
    pub ranked_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStatistics {
    pub population: u64,
    pub type_count: u64,
    /// `spectrum[a][i − 1] = M^{i,a}` over `grid.ages`.
    pub spectrum: Vec<Vec<u64>>,
    pub old_families: Vec<u64>,
    pub large_families: Vec<u64>,
    pub ranked_ages: Vec<f64>,
    pub ranked_sizes: Vec<u64>,
}

pub fn snapshot_statistics(partition: &AllelicPartition, grid: &StatisticsGrid) -> SnapshotStatistics {
    SnapshotStatistics {
        population: partition.population(),
        type_count: partition.type_count() as u64,
        spectrum: grid
            .ages
            .iter()
            .map(|&a| (1..=grid.i_max).map(|i| partition.spectrum(i, a)).collect())
            .collect(),
        old_families: grid.old_ages.iter().map(|&a| partition.old_families(a)).collect(),
        large_families: grid.sizes.iter().map(|&x| partition.large_families(x)).collect(),
        ranked_ages: partition.ranked_ages().into_iter().take(grid.ranked_len).collect(),
        ranked_sizes: partition.ranked_sizes().into_iter().take(grid.ranked_len).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::simulate::tree::{simulate_tree, Caps};

    fn sample() -> AllelicPartition {
        AllelicPartition::new(
            10.0,
            vec![
                Family { type_id: 3, origin: 7.0, size: 1 },
                Family { type_id: 0, origin: 0.0, size: 2 },
                Family { type_id: 1, origin: 2.0, size: 3 },
                Family { type_id: 2, origin: 7.0, size: 1 },
                Family { type_id: 5, origin: 9.0, size: 0 },
            ],
        )
    }

    #[test]
    fn counts_and_conventions() {
        let p = sample();
        assert_eq!(p.type_count(), 4);
        assert_eq!(p.population(), 7);
        assert_eq!((p.spectrum(1, 10.0), p.spectrum(2, 10.0), p.spectrum(3, 10.0)), (2, 1, 1));
        // the progenitor's family (age exactly t) only counts at a = t
        assert_eq!(p.spectrum(2, 9.999), 0);
        assert_eq!(p.spectrum(1, 3.0 + 1e-9), 2);
        assert_eq!(p.spectrum(1, 3.0), 0);
        assert_eq!((p.old_families(-1.0), p.old_families(0.0), p.old_families(5.0), p.old_families(10.0)), (0, 4, 2, 0));
        assert_eq!((p.large_families(0.0), p.large_families(1.5), p.large_families(2.0), p.large_families(3.1)), (4, 2, 2, 0));
    }

    #[test]
    fn ranking_breaks_ties_by_type() {
        let p = sample();
        assert_eq!(p.ranked_ages(), vec![10.0, 8.0, 3.0, 3.0]);
        assert_eq!(p.ranked_sizes(), vec![3, 2, 1, 1]);
        let order: Vec<u64> = {
            let mut f: Vec<&Family> = p.families.iter().collect();
            f.sort_by(|x, y| y.size.cmp(&x.size).then(x.type_id.cmp(&y.type_id)));
            f.iter().map(|f| f.type_id).collect()
        };
        assert_eq!(order, vec![1, 0, 2, 3]);
    }

    #[test]
    fn statistics_are_consistent_on_simulated_trees() {
        let grid = StatisticsGrid {
            i_max: 500,
            ages: vec![1.0, 2.5, 5.0],
            old_ages: vec![0.0, 1.0, 2.0, 4.0],
            sizes: vec![1.0, 2.0, 5.0],
            ranked_len: 3,
        };
        for params in [
            ModelParams::exponential_ii(2.0, 1.0, 1.5).unwrap(),
            ModelParams::exponential_i(2.0, 1.0, 0.25).unwrap(),
        ] {
            for seed in 0..25 {
                let snap = simulate_tree(&params, 5.0, seed, Caps::default()).unwrap();
                let part = allelic_partition(&snap);
                let s = snapshot_statistics(&part, &grid);
                assert_eq!(s.population as usize, snap.population());
                let weighted: u64 = s.spectrum[2].iter().zip(1..).map(|(m, i)| m * i).sum();
                assert_eq!(weighted, s.population);
                assert_eq!(s.spectrum[2].iter().sum::<u64>(), s.type_count);
                assert!(s.old_families.windows(2).all(|w| w[0] >= w[1]));
                assert!(s.large_families.windows(2).all(|w| w[0] >= w[1]));
                assert_eq!(s.ranked_sizes.len(), part.type_count().min(3));
                assert!(s.ranked_sizes.first().is_none_or(|&m| m == part.families.iter().map(|f| f.size).max().unwrap()));
                for a in 0..2 {
                    for i in 0..500 {
                        assert!(s.spectrum[a][i] <= s.spectrum[a + 1][i]);
                    }
                }
            }
        }
    }

    #[test]
    fn mutation_free_models_form_one_family() {
        for params in [
            ModelParams::exponential_ii(2.0, 1.0, 0.0).unwrap(),
            ModelParams::exponential_i(2.0, 1.0, 0.0).unwrap(),
        ] {
            for seed in 0..10 {
                let snap = simulate_tree(&params, 3.0, seed, Caps::default()).unwrap();
                let part = allelic_partition(&snap);
                if snap.population() == 0 {
                    assert_eq!(part.type_count(), 0);
                } else {
                    assert_eq!(part.families, vec![Family { type_id: 0, origin: 0.0, size: snap.population() as u64 }]);
                    assert_eq!(part.age(&part.families[0]), 3.0);
                }
            }
        }
    }
}
