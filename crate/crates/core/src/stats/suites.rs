//! Named validation suites with their documented parameter sets.

use std::fmt;
use std::str::FromStr;

use crate::analytic::{conjecture_scale_i, subsequence_time, supercritical_clonal_scale};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulate::partition::StatisticsGrid;
use crate::simulate::tree::Caps;
use crate::stats::batch::{run_batch, run_old_family_batch, Engine, ReplicaBatch, RunSettings};
use crate::stats::checks::*;
use crate::stats::report::{Outcome, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Law of `Z(t)` and its exponential limit.
    Marginals,
    /// Expected frequency spectrum and its scaled limits.
    Spectrum,
    /// Old and large families, and the exploratory probes.
    Limits,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Marginals, Suite::Spectrum, Suite::Limits];

    pub fn name(self) -> &'static str {
        match self {
            Self::Marginals => "marginals",
            Self::Spectrum => "spectrum",
            Self::Limits => "limits",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces every documented sample size when set.
    pub replicas: Option<usize>,
    pub threads: Option<usize>,
    pub caps: Caps,
}

impl SuiteOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, replicas: None, threads: None, caps: Caps::default() }
    }

    /// Settings for the `k`-th batch of a suite, with its own seed.
    fn settings(&self, k: u64, replicas: usize) -> RunSettings {
        let mut s = RunSettings::new(batch_seed(self.seed, k), self.replicas.unwrap_or(replicas));
        s.threads = self.threads;
        s.caps = self.caps;
        s
    }
}

/// SplitMix64 of `seed + k`: distinct, well-mixed seeds per batch.
pub fn batch_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Turns a check that could not run into a failed report.
fn settle(name: &str, seed: u64, result: Result<TestReport>) -> TestReport {
    result.unwrap_or_else(|e| {
        let mut r = TestReport::new(name, seed, 0, 0);
        r.outcome = Outcome::Fail;
        r.statistic_kind = "error";
        r.notes.push(format!("could not run: {e}"));
        r
    })
}

fn population_only() -> StatisticsGrid {
    StatisticsGrid::default()
}

fn run_marginals(opts: &SuiteOptions) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let bd = ModelParams::exponential_i(2.0, 1.0, 0.0)?;

    let s = opts.settings(0, 10_000);
    let batch = run_batch(&bd, 3.0, &population_only(), Engine::Tree, s)?;
    out.push(settle("geometric_marginal", s.seed, test_geometric_marginal(&batch)));
    out.push(settle("geometric_marginal_negative_control", s.seed, test_geometric_marginal_perturbed(&batch, 1.2)));

    let yule = ModelParams::exponential_i(1.0, 0.0, 0.0)?;
    let s = opts.settings(1, 10_000);
    let batch = run_batch(&yule, 2.0, &population_only(), Engine::Count, s)?;
    out.push(rename(settle("geometric_marginal", s.seed, test_geometric_marginal(&batch)), "geometric_marginal_yule"));

    let s = opts.settings(2, 10_000).conditioned();
    let batch = run_batch(&bd, 10.0, &population_only(), Engine::Count, s)?;
    out.push(settle("exponential_limit", s.seed, test_exponential_limit(&batch)));
    out.push(settle("exponential_limit_negative_control", s.seed, test_exponential_limit_perturbed(&batch, 1.2)));

    let fast = ModelParams::exponential_i(4.0, 1.0, 0.0)?;
    let s = opts.settings(3, 10_000).conditioned();
    let batch = run_batch(&fast, 3.0, &population_only(), Engine::Count, s)?;
    out.push(rename(settle("exponential_limit", s.seed, test_exponential_limit(&batch)), "exponential_limit_b4"));

    let s = opts.settings(4, 10_000).conditioned();
    let batch = run_batch(&bd, 1.0, &population_only(), Engine::Count, s)?;
    let mut early = rename(settle("exponential_limit", s.seed, test_exponential_limit(&batch)), "exponential_limit_t1");
    if early.p_value.is_some() {
        early.outcome = Outcome::Exploratory;
        early.notes.push("t = 1 is preasymptotic; a rejection is expected".into());
    }
    out.push(early);
    Ok(out)
}

fn rename(mut r: TestReport, name: &str) -> TestReport {
    r.name = name.to_string();
    r
}

fn spectrum_grid(t: f64, ages: &[f64], i_max: u64) -> StatisticsGrid {
    let mut ages = ages.to_vec();
    ages.push(t);
    StatisticsGrid { i_max, ages, ..StatisticsGrid::default() }
}

fn run_spectrum(opts: &SuiteOptions) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let i_grid: Vec<u64> = (1..=5).collect();
    for (k, (name, params)) in [
        ("expected_spectrum_model_ii", ModelParams::exponential_ii(2.0, 1.0, 1.5)?),
        ("expected_spectrum_model_i", ModelParams::exponential_i(2.0, 1.0, 0.25)?),
    ]
    .into_iter()
    .enumerate()
    {
        let s = opts.settings(k as u64, 10_000);
        let batch = run_batch(&params, 5.0, &spectrum_grid(5.0, &[1.0, 2.5], 5), Engine::Tree, s)?;
        out.push(settle(name, s.seed, test_expected_spectrum(name, &[&batch], &i_grid, &[1.0, 2.5, 5.0])));
    }

    let s = opts.settings(2, 1000).conditioned();
    let free = ModelParams::exponential_ii(2.0, 1.0, 0.0)?;
    let batch = run_batch(&free, 3.0, &spectrum_grid(3.0, &[], 1), Engine::Tree, s)?;
    out.push(mutation_free_control(&batch));

    let critical = ModelParams::exponential_ii(1.0, 1.0, 0.5)?;
    let batches = [4.0, 6.0, 8.0]
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let s = opts.settings(3 + k as u64, 10_000);
            run_batch(&critical, t, &spectrum_grid(t, &[2.0], 3), Engine::Markov, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ReplicaBatch> = batches.iter().collect();
    let name = "expected_spectrum_critical_t_independence";
    out.push(settle(name, refs[0].settings.seed, test_expected_spectrum(name, &refs, &[1, 2, 3], &[2.0])));

    let params = ModelParams::exponential_ii(2.0, 1.0, 1.5)?;
    let s1 = opts.settings(6, 4000).conditioned();
    let s2 = opts.settings(7, 4000).conditioned();
    let early = run_batch(&params, 7.0, &spectrum_grid(7.0, &[1.0, 2.5], 3), Engine::Markov, s1)?;
    let late = run_batch(&params, 10.0, &spectrum_grid(10.0, &[1.0, 2.5], 3), Engine::Markov, s2)?;
    out.push(settle("spectrum_limits", s2.seed, test_spectrum_limits(&early, &late, &[1, 2, 3])));
    Ok(out)
}

/// With no mutation every surviving replica is one family of age `t`.
pub fn mutation_free_control(batch: &ReplicaBatch) -> TestReport {
    let mut r = TestReport::new("mutation_free_control", batch.settings.seed, batch.len(), batch.total_attempts());
    let bad = batch
        .replicas
        .iter()
        .filter(|s| s.population > 0 && (s.type_count != 1 || s.spectrum.last().map(|v| v.iter().sum::<u64>()) != Some(1)))
        .count();
    r.statistic = bad as f64;
    r.statistic_kind = "replicas with M_t != 1";
    r.outcome = Outcome::from_pass(bad == 0 && batch.params.mutation.is_mutation_free());
    r
}

/// Documented horizon and grid of the large-family check: `n = 14`.
pub const LARGE_FAMILY_N: u64 = 14;

fn run_limits(opts: &SuiteOptions) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let params = ModelParams::exponential_ii(2.0, 1.0, 1.5)?;

    let s = opts.settings(0, 10_000).conditioned();
    let batch = run_old_family_batch(&params, 12.0, &[-1.0, 0.0, 1.0, 2.0], s)?;
    out.push(settle("old_families", s.seed, test_old_families(&batch)));
    out.push(settle("old_families_negative_control", s.seed, test_old_families_perturbed(&batch, 1.2)));
    out.push(settle("age_point_process", s.seed, test_age_point_process(&batch)));

    let n = LARGE_FAMILY_N;
    let t_n = subsequence_time(&params, n)?;
    let grid = StatisticsGrid {
        sizes: (n - 1..=n + 3).map(|x| x as f64).collect(),
        ..StatisticsGrid::default()
    };
    let s = opts.settings(1, 2000).conditioned();
    let batch = run_batch(&params, t_n, &grid, Engine::Markov, s)?;
    match test_large_families_ii(&batch, n, &[-1, 0, 1]) {
        Ok(r) => out.extend([r.profile, r.atoms, r.finite_horizon]),
        Err(e) => out.push(settle("large_families_ii_profile", s.seed, Err(e))),
    }

    let mut probes = Vec::new();
    let conj = ModelParams::exponential_i(2.0, 1.0, 0.5)?;
    for (k, t) in [4.0, 6.0, 8.0].into_iter().enumerate() {
        let grid = StatisticsGrid { sizes: vec![conjecture_scale_i(&conj, t)?], ..StatisticsGrid::default() };
        probes.push(run_batch(&conj, t, &grid, Engine::Markov, opts.settings(2 + k as u64, 1000).conditioned())?);
    }
    let refs: Vec<&ReplicaBatch> = probes.iter().collect();
    out.push(rename(settle("conjecture_probe", refs[0].settings.seed, probe_conjecture(&refs)), "conjecture_probe_model_i"));

    let mut probes = Vec::new();
    let superclone = ModelParams::exponential_ii(4.0, 1.0, 1.0)?;
    for (k, t) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        let grid =
            StatisticsGrid { sizes: vec![supercritical_clonal_scale(&superclone, t)?], ..StatisticsGrid::default() };
        probes.push(run_batch(&superclone, t, &grid, Engine::Markov, opts.settings(5 + k as u64, 500).conditioned())?);
    }
    let refs: Vec<&ReplicaBatch> = probes.iter().collect();
    out.push(rename(
        settle("conjecture_probe", refs[0].settings.seed, probe_conjecture(&refs)),
        "supercritical_clone_probe",
    ));
    Ok(out)
}

/// Runs every check of `suite`. A check that cannot run is reported as a
/// failure; a simulation error aborts the suite.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<TestReport>> {
    match suite {
        Suite::Marginals => run_marginals(opts),
        Suite::Spectrum => run_spectrum(opts),
        Suite::Limits => run_limits(opts),
    }
}
