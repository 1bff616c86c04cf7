//! Monte-Carlo checks of the limit theorems against their analytic values.
//!
//! Every check reads a batch and returns a [`TestReport`]. Cells compare a
//! replica mean with its target through a z-score; several cells in one
//! check share a Bonferroni-corrected critical value, never below 3.

use crate::analytic::{
    age_intensity_mass, conjecture_scale_i, large_family_scale_ii, old_family_limit,
    supercritical_clonal_scale, AnalyticModel,
};
use crate::error::{Error, Result};
use crate::model::{Criticality, MutationMechanism};
use crate::simulate::partition::is_full_age;
use crate::stats::batch::{OldFamilyBatch, ReplicaBatch};
use crate::stats::gof::{chi_square, ks_test, ChiSquare, Geometric};
use crate::stats::report::{Cell, Outcome, TestReport};
use crate::stats::summary::{bonferroni_z, covariance, floored_se, ratio_of_means, two_sided_p, Moments};
use crate::stats::LEVEL;

/// Bins of a chi-square test expect at least this many observations.
pub const MIN_EXPECTED: f64 = 5.0;
pub const MIN_SURVIVORS_GEOMETRIC: usize = 1000;
pub const MIN_SAMPLE: usize = 100;

fn report_for(name: &str, batch: &ReplicaBatch) -> TestReport {
    TestReport::new(name, batch.settings.seed, batch.len(), batch.total_attempts())
}

fn report_for_old(name: &str, batch: &OldFamilyBatch) -> TestReport {
    TestReport::new(name, batch.settings.seed, batch.len(), batch.total_attempts())
}

/// Fills in the z-statistic of `report` from its cells.
fn judge_cells(report: &mut TestReport) {
    let m = report.cells.len();
    let crit = bonferroni_z(LEVEL, m);
    let worst = report.max_abs_z();
    report.statistic = worst;
    report.statistic_kind = "max|z|";
    report.p_value = Some((m as f64 * two_sided_p(worst)).min(1.0));
    report.critical_z = Some(crit);
    report.outcome = Outcome::from_pass(report.cells.iter().all(|c| c.z().abs() <= crit));
}

fn require_conditioned(conditioned: bool, test: &str) -> Result<()> {
    if conditioned {
        Ok(())
    } else {
        Err(Error::UnsupportedRegime(format!("{test} needs replicas conditioned on Z(t) > 0")))
    }
}

fn require_sample(test: &'static str, needed: usize, got: usize) -> Result<()> {
    if got >= needed {
        Ok(())
    } else {
        Err(Error::InsufficientSample { test, needed, got })
    }
}

fn survivors(batch: &ReplicaBatch) -> Vec<u64> {
    batch.populations().into_iter().filter(|&z| z > 0).collect()
}

fn chi_note(label: &str, chi: &ChiSquare) -> String {
    format!("{label}: chi2={:.4} dof={} p={:.4} bins={}", chi.statistic, chi.dof, chi.p_value, chi.bins.len())
}

fn geometric_marginal_with(batch: &ReplicaBatch, name: &str, w: f64) -> Result<(TestReport, ChiSquare)> {
    let alive = survivors(batch);
    require_sample("geometric marginal", MIN_SURVIVORS_GEOMETRIC, alive.len())?;
    let chi = chi_square(&alive, &Geometric { success: 1.0 / w, start: 1 }, MIN_EXPECTED)?;
    let mut report = report_for(name, batch);
    report.statistic = chi.statistic;
    report.statistic_kind = "chi2";
    report.p_value = Some(chi.p_value);
    report.notes.push(format!("W(t)={w:.10} survivors={}", alive.len()));
    report.notes.push(chi_note("conditioned Z(t)", &chi));
    Ok((report, chi))
}

/// `Z(t) | Z(t) > 0` against geometric(`1/W(t)`), and the extinction
/// frequency against `1 − W'(t)/(bW(t))` when the batch is unconditioned.
pub fn test_geometric_marginal(batch: &ReplicaBatch) -> Result<TestReport> {
    let model = AnalyticModel::new(batch.params.clone())?;
    let w = model.scale().value(batch.t);
    let (mut report, chi) = geometric_marginal_with(batch, "geometric_marginal", w)?;
    if !batch.settings.conditioned {
        let n = batch.len();
        let zeros = batch.replicas.iter().filter(|r| r.population == 0).count() as f64 / n as f64;
        let se = floored_se((zeros * (1.0 - zeros) / n as f64).sqrt(), n);
        report.cells.push(Cell::new("P(Z(t)=0)", zeros, se, 1.0 - model.alive_probability(batch.t)?));
    }
    report.critical_z = Some(bonferroni_z(LEVEL, 1));
    let cells_ok = report.cells.iter().all(|c| c.z().abs() <= 3.0);
    report.outcome = Outcome::from_pass(chi.p_value > LEVEL && cells_ok);
    Ok(report)
}

/// Negative control: the same chi-square against geometric(`1/(factor·W(t))`)
/// passes when it rejects.
pub fn test_geometric_marginal_perturbed(batch: &ReplicaBatch, factor: f64) -> Result<TestReport> {
    let model = AnalyticModel::new(batch.params.clone())?;
    let w = factor * model.scale().value(batch.t);
    let (mut report, chi) = geometric_marginal_with(batch, "geometric_marginal_negative_control", w)?;
    report.notes.push(format!("W(t) scaled by {factor}; passes when p < {LEVEL}"));
    report.outcome = Outcome::from_pass(chi.p_value < LEVEL);
    Ok(report)
}

fn exponential_limit_with(batch: &ReplicaBatch, name: &str, rate_factor: f64) -> Result<TestReport> {
    require_conditioned(batch.settings.conditioned, name)?;
    let model = AnalyticModel::new(batch.params.clone())?;
    let r = model.malthusian();
    if !(r > 0.0) {
        return Err(Error::UnsupportedRegime("the exponential limit needs r > 0".into()));
    }
    let rate = rate_factor * model.psi_prime_r();
    let scale = (-r * batch.t).exp();
    let xs: Vec<f64> = survivors(batch).into_iter().map(|z| z as f64 * scale).collect();
    require_sample("exponential limit", MIN_SAMPLE, xs.len())?;
    let ks = ks_test(&xs, |x| -(-rate * x.max(0.0)).exp_m1())?;
    let mut report = report_for(name, batch);
    report.statistic = ks.statistic;
    report.statistic_kind = "KS";
    report.p_value = Some(ks.p_value);
    let m = Moments::of(&xs);
    report.cells.push(Cell::new("mean e^{-rt}Z(t)", m.mean, m.se(), 1.0 / rate));
    report.notes.push(format!("r={r:.10} rate={rate:.10}"));
    report.notes.push("conditioned on Z(t) > 0 rather than on ultimate survival".into());
    report.outcome = Outcome::from_pass(ks.p_value > LEVEL);
    Ok(report)
}

/// KS test of `e^{−rt}Z(t)` given `Z(t) > 0` against `Exp(ψ'(r))`.
pub fn test_exponential_limit(batch: &ReplicaBatch) -> Result<TestReport> {
    exponential_limit_with(batch, "exponential_limit", 1.0)
}

/// Negative control: rate `factor·ψ'(r)`; passes when the KS test rejects.
pub fn test_exponential_limit_perturbed(batch: &ReplicaBatch, factor: f64) -> Result<TestReport> {
    let mut report = exponential_limit_with(batch, "exponential_limit_negative_control", factor)?;
    report.notes.push(format!("rate scaled by {factor}; passes when p < {LEVEL}"));
    report.outcome = Outcome::from_pass(report.p_value.is_some_and(|p| p < LEVEL));
    Ok(report)
}

/// Replica means of `M_t^{i,a}` with standard errors, paired with the
/// closed form (divided by `P(Z(t) > 0)` for conditioned batches).
pub fn mc_expected_spectrum(batch: &ReplicaBatch, i_grid: &[u64], a_grid: &[f64]) -> Result<Vec<Cell>> {
    require_sample("expected spectrum", 2, batch.len())?;
    let model = AnalyticModel::new(batch.params.clone())?;
    let norm = if batch.settings.conditioned { model.alive_probability(batch.t)? } else { 1.0 };
    let n = batch.len();
    let mut cells = Vec::new();
    for &a in a_grid {
        let k = batch
            .age_index(a)
            .ok_or(Error::InvalidParameter { name: "a", value: a, reason: "not on the batch's age grid" })?;
        for &i in i_grid {
            if i == 0 || i > batch.grid.i_max {
                return Err(Error::InvalidParameter { name: "i", value: i as f64, reason: "outside 1..=i_max" });
            }
            let xs: Vec<f64> = batch.replicas.iter().map(|r| r.spectrum[k][i as usize - 1] as f64).collect();
            let m = Moments::of(&xs);
            let target = model.expected_spectrum(i, a.min(batch.t), batch.t)? / norm;
            cells.push(Cell::new(format!("t={},i={i},a={a}", batch.t), m.mean, floored_se(m.se(), n), target));
        }
    }
    Ok(cells)
}

/// Expected spectrum at every `(i, a)`, over one or more batches.
pub fn test_expected_spectrum(
    name: &str,
    batches: &[&ReplicaBatch],
    i_grid: &[u64],
    a_grid: &[f64],
) -> Result<TestReport> {
    let first = batches.first().ok_or(Error::InsufficientSample { test: "expected spectrum", needed: 1, got: 0 })?;
    let mut report = report_for(name, first);
    report.replicas = batches.iter().map(|b| b.len()).sum();
    report.attempts = batches.iter().map(|b| b.total_attempts()).sum();
    for b in batches {
        report.cells.extend(mc_expected_spectrum(b, i_grid, a_grid)?);
    }
    judge_cells(&mut report);
    Ok(report)
}

fn full_age_index(batch: &ReplicaBatch) -> Result<usize> {
    batch
        .grid
        .ages
        .iter()
        .position(|&a| is_full_age(a, batch.t))
        .ok_or(Error::InvalidParameter { name: "a", value: batch.t, reason: "the age grid must contain t" })
}

/// Pathwise `M_t^{i,t}/M_t` over surviving replicas.
fn type_ratios(batch: &ReplicaBatch, i: u64) -> Result<Vec<f64>> {
    let k = full_age_index(batch)?;
    Ok(batch
        .replicas
        .iter()
        .filter(|r| r.type_count > 0)
        .map(|r| r.spectrum[k][i as usize - 1] as f64 / r.type_count as f64)
        .collect())
}

/// Limits of the spectrum after scaling by `e^{−rt}` on the later batch,
/// and shrinking dispersion of `M_t^{i,t}/M_t` from the earlier batch.
pub fn test_spectrum_limits(early: &ReplicaBatch, late: &ReplicaBatch, i_grid: &[u64]) -> Result<TestReport> {
    require_conditioned(early.settings.conditioned && late.settings.conditioned, "spectrum limits")?;
    if early.params != late.params || !(early.t < late.t) {
        return Err(Error::UnsupportedRegime("spectrum limits need one model at two horizons t1 < t2".into()));
    }
    require_sample("spectrum limits", MIN_SAMPLE, late.len().min(early.len()))?;
    let model = AnalyticModel::new(late.params.clone())?;
    let r = model.malthusian();
    if !(r > 0.0) {
        return Err(Error::UnsupportedRegime("spectrum limits need r > 0".into()));
    }
    let slope = model.psi_prime_r();
    let j = model.j_total()?;
    let n = late.len();
    let scale = (-r * late.t).exp();
    let mut report = report_for("spectrum_limits", late);
    report.attempts += early.total_attempts();
    for (k, &a) in late.grid.ages.iter().enumerate() {
        let a_lim = if is_full_age(a, late.t) { f64::INFINITY } else { a };
        for &i in i_grid {
            let xs: Vec<f64> = late.replicas.iter().map(|s| s.spectrum[k][i as usize - 1] as f64 * scale).collect();
            let m = Moments::of(&xs);
            let target = model.limit_spectrum_j(i, a_lim)? / slope;
            let label = if a_lim.is_infinite() { format!("e^-rt M^(i={i},t)") } else { format!("e^-rt M^(i={i},a={a})") };
            report.cells.push(Cell::new(label, m.mean, m.se().max(scale / n as f64), target));
        }
    }
    let xs: Vec<f64> = late.replicas.iter().map(|s| s.type_count as f64 * scale).collect();
    let m = Moments::of(&xs);
    report.cells.push(Cell::new("e^-rt M_t", m.mean, m.se().max(scale / n as f64), j / slope));
    let mut shrinks = true;
    for &i in i_grid {
        let late_ratios = type_ratios(late, i)?;
        let early_ratios = type_ratios(early, i)?;
        let (ml, me) = (Moments::of(&late_ratios), Moments::of(&early_ratios));
        let target = model.limit_spectrum_j(i, f64::INFINITY)? / j;
        report.cells.push(Cell::new(format!("M^(i={i},t)/M_t"), ml.mean, floored_se(ml.se(), n), target));
        shrinks &= ml.sd() < me.sd();
        report.notes.push(format!(
            "sd of M^(i={i},t)/M_t: {:.6} at t={} vs {:.6} at t={}",
            me.sd(),
            early.t,
            ml.sd(),
            late.t
        ));
    }
    judge_cells(&mut report);
    if !shrinks {
        report.outcome = Outcome::Fail;
        report.notes.push("dispersion did not shrink".into());
    }
    Ok(report)
}

fn old_family_preconditions(batch: &OldFamilyBatch) -> Result<()> {
    require_conditioned(batch.settings.conditioned, "old families")?;
    require_sample("old families", MIN_SAMPLE, batch.len())?;
    for &a in &batch.offsets {
        let age = a + batch.centre;
        if !(age >= 0.0 && age < batch.t) {
            return Err(Error::InvalidParameter { name: "a", value: a, reason: "a + c_t must lie in [0, t)" });
        }
    }
    Ok(())
}

fn old_family_chi(batch: &OldFamilyBatch, j: usize, mixture_factor: f64) -> Result<ChiSquare> {
    let limit = old_family_limit(&batch.params, batch.offsets[j])?;
    let mean = mixture_factor * limit.conditional_mean();
    chi_square(&batch.counts(j), &Geometric { success: 1.0 / (1.0 + mean), start: 0 }, MIN_EXPECTED)
}

/// Mean of `O_t(a + c_t)` against `L(a)`, and its conditioned law against
/// geometric(`q(a)`).
///
/// `L(a)` is an unconditional expectation; it is estimated as the sum of
/// counts over all simulations, extinct ones included, divided by their
/// number.
pub fn test_old_families(batch: &OldFamilyBatch) -> Result<TestReport> {
    old_family_preconditions(batch)?;
    let mut report = report_for_old("old_families", batch);
    let attempts: Vec<f64> = batch.attempts.iter().map(|&k| k as f64).collect();
    let m = batch.offsets.len();
    let mut chi_ok = true;
    let mut worst: Option<(f64, f64)> = None;
    for (j, &a) in batch.offsets.iter().enumerate() {
        let limit = old_family_limit(&batch.params, a)?;
        let counts: Vec<f64> = batch.counts(j).into_iter().map(|c| c as f64).collect();
        let (mean, se) = ratio_of_means(&counts, &attempts);
        let total = batch.total_attempts() as usize;
        report.cells.push(Cell::new(format!("E[O(a+c_t)], a={a}"), mean, floored_se(se, total), limit.mean));
        let chi = old_family_chi(batch, j, 1.0)?;
        chi_ok &= chi.p_value > LEVEL / m as f64;
        report.notes.push(chi_note(&format!("a={a} vs geometric({:.6})", limit.success), &chi));
        if worst.is_none_or(|(_, p)| chi.p_value < p) {
            worst = Some((chi.statistic, chi.p_value));
        }
    }
    judge_cells(&mut report);
    let (stat, p) = worst.expect("offsets are non-empty");
    report.statistic = stat;
    report.statistic_kind = "chi2";
    report.p_value = Some((p * m as f64).min(1.0));
    report.notes.push(format!("c_t={:.6}; chi-square level {LEVEL}/{m}", batch.centre));
    if !chi_ok {
        report.outcome = Outcome::Fail;
    }
    Ok(report)
}

/// Negative control: the mixture mean `(b/r)L(a)` scaled by `factor`;
/// passes when every chi-square rejects.
pub fn test_old_families_perturbed(batch: &OldFamilyBatch, factor: f64) -> Result<TestReport> {
    old_family_preconditions(batch)?;
    let mut report = report_for_old("old_families_negative_control", batch);
    let mut all_reject = true;
    let mut worst_p: f64 = 0.0;
    for (j, &a) in batch.offsets.iter().enumerate() {
        let chi = old_family_chi(batch, j, factor)?;
        all_reject &= chi.p_value < LEVEL;
        if chi.p_value >= worst_p {
            worst_p = chi.p_value;
            report.statistic = chi.statistic;
        }
        report.notes.push(chi_note(&format!("a={a}"), &chi));
    }
    report.statistic_kind = "chi2";
    report.p_value = Some(worst_p);
    report.notes.push(format!("mixture mean scaled by {factor}; passes when p < {LEVEL}"));
    report.outcome = Outcome::from_pass(all_reject);
    Ok(report)
}

/// Counts of recentred ages `A_t^k − c_t` in `[o_j, o_{j+1})` and in the
/// last half-line against the mixed Poisson moments: mean `μ_j`, variance
/// `μ_j + μ_j²`, covariance `μ_j μ_k`. Each half-line `[o_j, ∞)` is also
/// tested as geometric.
pub fn test_age_point_process(batch: &OldFamilyBatch) -> Result<TestReport> {
    old_family_preconditions(batch)?;
    let o = &batch.offsets;
    if o.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter { name: "offsets", value: f64::NAN, reason: "must be increasing" });
    }
    let m = o.len();
    let n = batch.len();
    let mut report = report_for_old("age_point_process", batch);
    let half_lines: Vec<Vec<f64>> = (0..m).map(|j| batch.counts(j).into_iter().map(|c| c as f64).collect()).collect();
    let intervals: Vec<Vec<f64>> = (0..m)
        .map(|j| match half_lines.get(j + 1) {
            Some(next) => half_lines[j].iter().zip(next).map(|(a, b)| a - b).collect(),
            None => half_lines[j].clone(),
        })
        .collect();
    let mut mu = Vec::new();
    for j in 0..m {
        let hi = o.get(j + 1).copied().unwrap_or(f64::INFINITY);
        mu.push(age_intensity_mass(&batch.params, o[j], hi)?);
        let label = if hi.is_finite() { format!("[{},{})", o[j], hi) } else { format!("[{},inf)", o[j]) };
        let mo = Moments::of(&intervals[j]);
        report.cells.push(Cell::new(format!("mean {label}"), mo.mean, floored_se(mo.se(), n), mu[j]));
        let mean = mo.mean;
        let sq: Vec<f64> = intervals[j].iter().map(|x| (x - mean).powi(2)).collect();
        let ms = Moments::of(&sq);
        report.cells.push(Cell::new(format!("var {label}"), mo.variance, floored_se(ms.se(), n), mu[j] + mu[j] * mu[j]));
    }
    for j in 0..m.saturating_sub(1) {
        let (x, y) = (&intervals[j], &intervals[j + 1]);
        let (mx, my) = (Moments::of(x).mean, Moments::of(y).mean);
        let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
        let se = floored_se(Moments::of(&products).se(), n);
        report.cells.push(Cell::new(format!("cov intervals {j},{}", j + 1), covariance(x, y), se, mu[j] * mu[j + 1]));
    }
    judge_cells(&mut report);
    let mut chi_ok = true;
    for (j, start) in o.iter().enumerate() {
        let chi = old_family_chi(batch, j, 1.0)?;
        chi_ok &= chi.p_value > LEVEL / m as f64;
        report.notes.push(chi_note(&format!("half-line [{start},inf)"), &chi));
    }
    if !chi_ok {
        report.outcome = Outcome::Fail;
    }
    Ok(report)
}

/// Reports from [`test_large_families_ii`].
#[derive(Debug, Clone, PartialEq)]
pub struct LargeFamilyReports {
    /// `E[L(n+c+1)]/E[L(n+c)]` against `b/(θ+d)`.
    pub profile: TestReport,
    /// Ratios of consecutive atoms of the ranked-size point measure.
    pub atoms: TestReport,
    /// The same ratios against their exact values at this horizon.
    pub finite_horizon: TestReport,
    /// The constant `A`, fitted from `E[L(n+c₀)] = A ρ^{c₀−1}`.
    pub fitted_a: f64,
}

/// `Σ_{i ≥ x} E[M_t^{i,t}]`.
fn expected_large(model: &AnalyticModel, t: f64, x: u64) -> Result<f64> {
    let mut sum = 0.0;
    for i in x.max(1).. {
        let term = model.expected_spectrum(i, t, t)?;
        sum += term;
        if i > x + 50 && term < 1e-15 * sum {
            break;
        }
    }
    Ok(sum)
}

/// Large families of Model II at a horizon `t_n` with `x_{t_n} = n`.
///
/// The unknown constant `A` is fitted at the reference offset `c₀` (0 if
/// present, else the first offset) and only reported. Off the subsequence
/// the reports are skipped.
pub fn test_large_families_ii(batch: &ReplicaBatch, n: u64, offsets: &[i64]) -> Result<LargeFamilyReports> {
    let MutationMechanism::ModelII { theta } = batch.params.mutation else {
        return Err(Error::UnsupportedRegime("large-family profile needs Model II".into()));
    };
    let clone = batch.params.clonal_params()?;
    if clone.class != Criticality::Subcritical {
        return Err(Error::UnsupportedRegime("large-family profile needs a subcritical clone".into()));
    }
    require_conditioned(batch.settings.conditioned, "large families")?;
    require_sample("large families", MIN_SAMPLE, batch.len())?;
    if offsets.is_empty() {
        return Err(Error::InsufficientSample { test: "large families", needed: 1, got: 0 });
    }
    let (b, d) = batch.params.lifespan.exponential_rates().ok_or(Error::NotExponential)?;
    let rho = b / (theta + d);
    let mut profile = report_for("large_families_ii_profile", batch);
    let mut atoms = report_for("large_families_ii_atoms", batch);
    let mut finite = report_for("large_families_ii_finite_horizon", batch);
    let x_t = large_family_scale_ii(&batch.params, batch.t)?;
    if (x_t - n as f64).abs() > 1e-6 {
        for r in [&mut profile, &mut atoms, &mut finite] {
            r.outcome = Outcome::Skipped;
            r.notes.push(format!("x_t = {x_t:.6} is not on the subsequence x_t = {n}; fractional parts would enter"));
        }
        return Ok(LargeFamilyReports { profile, atoms, finite_horizon: finite, fitted_a: f64::NAN });
    }
    let level = |c: i64| -> Result<Vec<f64>> {
        let x = n as i64 + c;
        let k = batch.size_index(x as f64).ok_or(Error::InvalidParameter {
            name: "sizes",
            value: x as f64,
            reason: "the size grid must contain n + c for the offsets and their successors",
        })?;
        Ok(batch.replicas.iter().map(|r| r.large_families[k] as f64).collect())
    };
    let model = AnalyticModel::new(batch.params.clone())?;
    let reference = if offsets.contains(&0) { 0 } else { offsets[0] };
    let fitted_a = Moments::of(&level(reference)?).mean / rho.powi(reference as i32 - 1);
    for &c in offsets {
        let (lo, hi) = (level(c)?, level(c + 1)?);
        let (ratio, se) = ratio_of_means(&hi, &lo);
        let se = floored_se(se, batch.len());
        let label = format!("E[L(n+{})]/E[L(n+{c})]", c + 1);
        profile.cells.push(Cell::new(label.clone(), ratio, se, rho));
        let x = (n as i64 + c) as u64;
        let exact = expected_large(&model, batch.t, x + 1)? / expected_large(&model, batch.t, x)?;
        finite.cells.push(Cell::new(label, ratio, se, exact));

        let next = level(c + 2)?;
        let atom_lo: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a - b).collect();
        let atom_hi: Vec<f64> = hi.iter().zip(&next).map(|(a, b)| a - b).collect();
        let (ratio, se) = ratio_of_means(&atom_hi, &atom_lo);
        atoms.cells.push(Cell::new(format!("atom {}/atom {c}", c + 1), ratio, floored_se(se, batch.len()), rho));
    }
    judge_cells(&mut profile);
    judge_cells(&mut atoms);
    judge_cells(&mut finite);
    finite.outcome = Outcome::Exploratory;
    profile.notes.push(format!("t_n={:.6} n={n} rho={rho:.6} fitted A={fitted_a:.6} at c0={reference}", batch.t));
    for c in &finite.cells {
        profile.notes.push(format!("exact ratio at this t: {} = {:.6}", c.label, c.target));
    }
    Ok(LargeFamilyReports { profile, atoms, finite_horizon: finite, fitted_a })
}

/// Trajectory of `L_t(x_t)` across horizons; never passes or fails.
///
/// `x_t` is `(2/σ²)(rt² − t ln t)` for a critical Model I clone and
/// `e^{r⋆t}` for a supercritical clone. Each batch's size grid must start
/// with its `x_t`.
pub fn probe_conjecture(batches: &[&ReplicaBatch]) -> Result<TestReport> {
    let first = batches.first().ok_or(Error::InsufficientSample { test: "probe", needed: 1, got: 0 })?;
    let mut report = report_for("conjecture_probe", first);
    report.replicas = batches.iter().map(|b| b.len()).sum();
    report.attempts = batches.iter().map(|b| b.total_attempts()).sum();
    report.statistic_kind = "none";
    for b in batches {
        let clone = b.params.clonal_params()?;
        let x_t = match (b.params.mutation, clone.class) {
            (MutationMechanism::ModelI { .. }, Criticality::Critical) => conjecture_scale_i(&b.params, b.t)?,
            (_, Criticality::Supercritical) => supercritical_clonal_scale(&b.params, b.t)?,
            _ => return Err(Error::UnsupportedRegime("probe needs a critical Model I or supercritical clone".into())),
        };
        let k = b.size_index(x_t).ok_or(Error::InvalidParameter {
            name: "sizes",
            value: x_t,
            reason: "the size grid must contain x_t",
        })?;
        let xs: Vec<f64> = b.replicas.iter().filter(|r| r.population > 0).map(|r| r.large_families[k] as f64).collect();
        let m = Moments::of(&xs);
        report.cells.push(Cell::new(format!("t={},x_t={x_t:.4}", b.t), m.mean, m.se(), f64::NAN));
        let mut hist = [0usize; 7];
        for &x in &xs {
            hist[(x as usize).min(6)] += 1;
        }
        report.notes.push(format!(
            "t={} mean={:.6} variance={:.6} histogram 0..5,>5: {:?}",
            b.t,
            m.mean,
            m.variance,
            hist
        ));
    }
    report.outcome = Outcome::Exploratory;
    Ok(report)
}
