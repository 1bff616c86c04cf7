//! The four subcommands. Each writes CSV files into the output directory,
//! every one of them starting with the same two-line header:
//!
//! ```text
//! # splitree <version>
//! # command=<name> <resolved key=value pairs>
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use splitree::analytic::{
    old_family_limit, old_family_scale, tail_critical, tail_supercritical, AnalyticModel,
};
use splitree::simulate::{allelic_partition, simulate_tree, snapshot_statistics, write_snapshot_csv, StatisticsGrid};
use splitree::stats::{run_suite, write_reports_csv, Outcome, Suite, SuiteOptions};
use splitree::{Criticality, Error};

use crate::config::{
    list, pick_float, pick_floats, pick_usize, Common, CommonArgs, ConfigError, FileConfig, ModelArgs, ResolvedModel,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a finished command asks the process to exit with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    TestsFailed,
}

fn header(echo: &str) -> String {
    format!("# splitree {VERSION}\n# {echo}\n")
}

fn create(dir: &Path, name: &str, header: &str) -> Result<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    out.write_all(header.as_bytes())?;
    Ok((out, path))
}

fn finish(mut out: BufWriter<File>, path: PathBuf) -> Result<()> {
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn horizon(flag: Option<f64>, file: &FileConfig) -> Result<f64, ConfigError> {
    let t = pick_float(flag, file, &["t"])?.ok_or_else(|| ConfigError::Missing("the horizon --t is required".into()))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(ConfigError::Invalid(format!("invalid value {t} for --t: must be positive and finite")));
    }
    Ok(t)
}

fn i_max(flag: Option<usize>, file: &FileConfig, default: usize) -> Result<u64, ConfigError> {
    let n = pick_usize(flag, file, "i_max")?.unwrap_or(default);
    if n == 0 {
        return Err(ConfigError::Invalid("invalid value 0 for --i-max: must be at least 1".into()));
    }
    Ok(n as u64)
}

fn ages(flag: &[f64], file: &FileConfig, t: f64) -> Result<Vec<f64>, ConfigError> {
    let ages = pick_floats(flag, file, "ages")?.unwrap_or_else(|| vec![t]);
    if let Some(a) = ages.iter().find(|&&a| !(a > 0.0 && a <= t)) {
        return Err(ConfigError::Invalid(format!("invalid age {a} in --ages: must lie in (0, t]")));
    }
    Ok(ages)
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Horizon t.
    #[arg(long = "t", visible_alias = "horizon")]
    pub t: Option<f64>,
    /// Largest family size tabulated [default: 10].
    #[arg(long)]
    pub i_max: Option<usize>,
    /// Family ages a of the spectrum table [default: t].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ages: Vec<f64>,
    /// Recentred ages of the old-family table [default: -2,-1,0,1,2].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub offsets: Vec<f64>,
}

/// `spectrum.csv` (i, a, t, E[M_t^{i,a}]), `tails.csv` (i, J^i, asymptote,
/// ratio) and `old_families.csv` (a, L(a), q(a)); the last two are skipped
/// with a warning where the model has no such limit.
pub fn analytic(args: &AnalyticArgs) -> Result<Status> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let common = Common::resolve(&args.common, &file)?;
    let model = ResolvedModel::resolve(&args.model, &file)?;
    let t = horizon(args.t, &file)?;
    let i_max = i_max(args.i_max, &file, 10)?;
    let ages = ages(&args.ages, &file, t)?;
    let offsets = pick_floats(&args.offsets, &file, "offsets")?.unwrap_or_else(|| vec![-2.0, -1.0, 0.0, 1.0, 2.0]);

    let mut echo = format!("command=analytic {} t={t} i_max={i_max} ages={} offsets={}", model.echo, list(&ages), list(&offsets));
    common.echo(&mut echo);
    let head = header(&echo);
    let params = &model.params;
    let analytic = AnalyticModel::new(params.clone())?;

    let (mut out, path) = create(&common.out_dir, "spectrum.csv", &head)?;
    writeln!(out, "i,a,t,expected_spectrum")?;
    for &a in &ages {
        for i in 1..=i_max {
            writeln!(out, "{i},{a},{t},{}", analytic.expected_spectrum(i, a, t)?)?;
        }
    }
    finish(out, path)?;

    match analytic.limit_spectrum_j(1, f64::INFINITY) {
        Err(e) => eprintln!("warning: tails.csv skipped: {e}"),
        Ok(_) => {
            let class = params.clonal_params().ok().map(|c| c.class);
            let (mut out, path) = create(&common.out_dir, "tails.csv", &head)?;
            writeln!(out, "i,j_i,tail_asymptote,ratio")?;
            for i in 1..=i_max {
                let j = analytic.limit_spectrum_j(i, f64::INFINITY)?;
                let asymptote = match class {
                    Some(Criticality::Supercritical) => tail_supercritical(params, i).ok(),
                    Some(Criticality::Critical) => tail_critical(params, i).ok(),
                    _ => None,
                };
                match asymptote {
                    Some(v) => writeln!(out, "{i},{j},{v},{}", j / v)?,
                    None => writeln!(out, "{i},{j},,")?,
                }
            }
            finish(out, path)?;
        }
    }

    match old_family_scale(params, t).and_then(|c| old_family_limit(params, 0.0).map(|_| c)) {
        Err(e) => eprintln!("warning: old_families.csv skipped: {e}"),
        Ok(centre) => {
            let (mut out, path) = create(&common.out_dir, "old_families.csv", &head)?;
            writeln!(out, "# c_t,{centre}")?;
            writeln!(out, "a,mean_l,success_q")?;
            for &a in &offsets {
                let limit = old_family_limit(params, a)?;
                writeln!(out, "{a},{},{}", limit.mean, limit.success)?;
            }
            finish(out, path)?;
        }
    }
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Horizon t.
    #[arg(long = "t", visible_alias = "horizon")]
    pub t: Option<f64>,
    /// Largest family size in the spectrum [default: 10].
    #[arg(long)]
    pub i_max: Option<usize>,
    /// Ages a for the spectrum and the old-family counts [default: t].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ages: Vec<f64>,
    /// Thresholds x for the large-family counts.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<f64>,
}

/// One tree: `snapshot.csv` and `statistics.csv` (statistic, i, x, value).
pub fn simulate(args: &SimulateArgs) -> Result<Status> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let common = Common::resolve(&args.common, &file)?;
    let model = ResolvedModel::resolve(&args.model, &file)?;
    let t = horizon(args.t, &file)?;
    let i_max = i_max(args.i_max, &file, 10)?;
    let ages = ages(&args.ages, &file, t)?;
    let sizes = pick_floats(&args.sizes, &file, "sizes")?.unwrap_or_default();

    let mut echo = format!("command=simulate {} t={t} i_max={i_max} ages={} sizes={}", model.echo, list(&ages), list(&sizes));
    common.echo(&mut echo);
    let head = header(&echo);

    let snapshot = simulate_tree(&model.params, t, common.seed, common.caps).map_err(|e| match e {
        Error::PopulationCapExceeded { .. } | Error::EventCapExceeded { .. } => {
            anyhow::anyhow!("{e} (see --t, --max-particles and --max-events)")
        }
        other => other.into(),
    })?;
    let partition = allelic_partition(&snapshot);
    let grid = StatisticsGrid { i_max, ages: ages.clone(), old_ages: ages.clone(), sizes: sizes.clone(), ranked_len: 5 };
    let stats = snapshot_statistics(&partition, &grid);

    let (mut out, path) = create(&common.out_dir, "snapshot.csv", &head)?;
    write_snapshot_csv(&snapshot, &mut out)?;
    finish(out, path)?;

    let (mut out, path) = create(&common.out_dir, "statistics.csv", &head)?;
    writeln!(out, "statistic,i,x,value")?;
    writeln!(out, "population,,,{}", stats.population)?;
    writeln!(out, "types,,,{}", stats.type_count)?;
    for (a, row) in ages.iter().zip(&stats.spectrum) {
        for (i, m) in row.iter().enumerate() {
            writeln!(out, "spectrum,{},{a},{m}", i + 1)?;
        }
    }
    for (a, o) in ages.iter().zip(&stats.old_families) {
        writeln!(out, "old_families,,{a},{o}")?;
    }
    for (x, l) in sizes.iter().zip(&stats.large_families) {
        writeln!(out, "large_families,,{x},{l}")?;
    }
    for (k, age) in stats.ranked_ages.iter().enumerate() {
        writeln!(out, "ranked_age,{},,{age}", k + 1)?;
    }
    for (k, size) in stats.ranked_sizes.iter().enumerate() {
        writeln!(out, "ranked_size,{},,{size}", k + 1)?;
    }
    finish(out, path)?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Suites to run: marginals, spectrum, limits or all.
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Replicas per batch, replacing the documented sample sizes.
    #[arg(long)]
    pub replicas: Option<usize>,
}

fn suites(names: &[String]) -> Result<Vec<Suite>, ConfigError> {
    let mut out = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            out.extend([Suite::Marginals, Suite::Spectrum, Suite::Limits]);
        } else {
            out.push(name.parse().map_err(|e: Error| {
                ConfigError::Invalid(format!("{e}; expected marginals, spectrum, limits or all"))
            })?);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::Missing("--suite is required".into()));
    }
    out.dedup();
    Ok(out)
}

/// `validate_<suite>.csv` and `validate_<suite>.txt` per suite; the summary
/// also goes to stdout.
pub fn validate(args: &ValidateArgs) -> Result<Status> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let common = Common::resolve(&args.common, &file)?;
    let names = if args.suite.is_empty() { file.strings("suite")?.unwrap_or_default() } else { args.suite.clone() };
    let suites = suites(&names)?;
    let replicas = pick_usize(args.replicas, &file, "replicas")?;
    if replicas == Some(0) {
        return Err(ConfigError::Invalid("invalid value 0 for --replicas: must be at least 1".into()).into());
    }

    let mut status = Status::Ok;
    for suite in suites {
        let mut echo = format!("command=validate suite={}", suite.name());
        if let Some(n) = replicas {
            let _ = write!(echo, " replicas={n}");
        }
        common.echo(&mut echo);
        let head = header(&echo);
        let opts = SuiteOptions { seed: common.seed, replicas, threads: common.threads, caps: common.caps };
        let reports = run_suite(suite, &opts)?;

        let (mut out, path) = create(&common.out_dir, &format!("validate_{}.csv", suite.name()), &head)?;
        write_reports_csv(suite.name(), &reports, &mut out)?;
        finish(out, path)?;

        let mut text = String::new();
        for r in &reports {
            text += &r.summary();
            text.push('\n');
        }
        let failed = reports.iter().filter(|r| r.outcome.is_failure()).count();
        let passed = reports.iter().filter(|r| r.outcome == Outcome::Pass).count();
        let _ = writeln!(text, "{}: {passed} passed, {failed} failed, {} not judged", suite.name(), reports.len() - passed - failed);
        print!("{text}");
        let (mut out, path) = create(&common.out_dir, &format!("validate_{}.txt", suite.name()), &head)?;
        out.write_all(text.as_bytes())?;
        finish(out, path)?;
        if failed > 0 {
            status = Status::TestsFailed;
        }
    }
    Ok(status)
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Horizon t.
    #[arg(long = "t", visible_alias = "horizon")]
    pub t: Option<f64>,
    /// Largest family size in the spectrum columns [default: 5].
    #[arg(long)]
    pub i_max: Option<usize>,
    /// Parameter to vary: b, d, p, theta or t.
    #[arg(long)]
    pub param: Option<String>,
    /// Values taken by the parameter.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
}

/// `scan.csv`: one row of analytic summaries per parameter value.
pub fn scan(args: &ScanArgs) -> Result<Status> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let common = Common::resolve(&args.common, &file)?;
    let param = match &args.param {
        Some(p) => p.clone(),
        None => file.string("param")?.ok_or_else(|| ConfigError::Missing("--param is required".into()))?,
    };
    let values = pick_floats(&args.values, &file, "values")?
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ConfigError::Missing("--values is required".into()))?;
    let i_max = i_max(args.i_max, &file, 5)?;
    if !["b", "d", "p", "theta", "t"].contains(&param.as_str()) {
        return Err(ConfigError::Invalid(format!("invalid value `{param}` for --param: expected b, d, p, theta or t")).into());
    }

    let mut rows = Vec::new();
    let mut base_echo = None;
    for &v in &values {
        let mut m = args.model.clone();
        let mut t_flag = args.t;
        match param.as_str() {
            "b" => m.b = Some(v),
            "d" => m.d = Some(v),
            "p" => m.p = Some(v),
            "theta" => m.theta = Some(v),
            _ => t_flag = Some(v),
        }
        let model = ResolvedModel::resolve(&m, &file)?;
        let t = horizon(t_flag, &file)?;
        base_echo.get_or_insert_with(|| {
            let fixed = format!("{} t={t}", model.echo);
            let prefix = format!("{param}=");
            fixed
                .split(' ')
                .map(|kv| if kv.starts_with(&prefix) { format!("{param}=scanned") } else { kv.to_string() })
                .collect::<Vec<_>>()
                .join(" ")
        });
        let a = AnalyticModel::new(model.params.clone())?;
        let r = a.malthusian();
        let scaled_types = if r > 0.0 { Some(a.j_total()? / a.psi_prime_r()) } else { None };
        let mut row = format!(
            "{param},{v},{r},{},{},{},{}",
            a.survival_probability(),
            a.alive_probability(t)?,
            a.expected_population(t)?,
            scaled_types.map(|x| x.to_string()).unwrap_or_default()
        );
        for i in 1..=i_max {
            let _ = write!(row, ",{}", a.expected_spectrum(i, t, t)?);
        }
        rows.push(row);
    }

    let mut echo = format!(
        "command=scan {} param={param} values={} i_max={i_max}",
        base_echo.unwrap_or_default(),
        list(&values)
    );
    common.echo(&mut echo);
    let (mut out, path) = create(&common.out_dir, "scan.csv", &header(&echo))?;
    let spectrum_cols: Vec<String> = (1..=i_max).map(|i| format!("m{i}")).collect();
    writeln!(
        out,
        "param,value,malthusian,survival_probability,alive_probability,expected_population,scaled_types_limit,{}",
        spectrum_cols.join(",")
    )?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    finish(out, path)?;
    Ok(Status::Ok)
}
