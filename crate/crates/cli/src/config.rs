//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! File keys mirror the long flags with `-` replaced by `_`; a flag given on
//! the command line wins over the file. The output directory is taken from
//! `--out-dir`, then `SPLITREE_OUT_DIR`, then the file, then `.`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use splitree::simulate::Caps;
use splitree::{LifespanMeasure, ModelParams, MutationMechanism, TabulatedTail};

pub const OUT_DIR_ENV: &str = "SPLITREE_OUT_DIR";

/// How a bad configuration should be reported.
#[derive(Debug)]
pub enum ConfigError {
    /// A required value is missing.
    Missing(String),
    /// A value is present but out of range or malformed.
    Invalid(String),
    /// The config file or a referenced file could not be read or parsed.
    File(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Missing(m) | Self::Invalid(m) | Self::File(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Birth rate b.
    #[arg(long = "b", visible_alias = "birth-rate", value_name = "RATE")]
    pub b: Option<f64>,
    /// Death rate d of the exponential lifespan.
    #[arg(long = "d", visible_alias = "death-rate", value_name = "RATE")]
    pub d: Option<f64>,
    /// Two-column `y,tail` CSV of the lifespan tail, instead of --d.
    #[arg(long, value_name = "PATH")]
    pub tail_file: Option<PathBuf>,
    /// Mutation model: I (at birth) or II (along lifelines).
    #[arg(long, value_name = "I|II")]
    pub model: Option<String>,
    /// Probability that a newborn is a mutant (Model I).
    #[arg(long = "p", visible_alias = "mutation-probability")]
    pub p: Option<f64>,
    /// Mutation rate θ of Model II.
    #[arg(long = "theta", visible_alias = "mutation-rate")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file of defaults; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replica batches.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub max_particles: Option<usize>,
    #[arg(long)]
    pub max_events: Option<usize>,
}

/// The parsed TOML file, if any.
#[derive(Debug, Default)]
pub struct FileConfig {
    path: Option<PathBuf>,
    table: toml::Table,
}

const KNOWN_KEYS: &[&str] = &[
    "b", "birth_rate", "d", "death_rate", "tail_file", "model", "p", "theta", "t", "i_max", "ages", "offsets",
    "sizes", "seed", "replicas", "threads", "out_dir", "max_particles", "max_events", "suite", "param", "values",
];

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::File(format!("config {}: {e}", path.display())))?;
        let table: toml::Table =
            text.parse().map_err(|e| ConfigError::File(format!("config {}: {e}", path.display())))?;
        if let Some(bad) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(ConfigError::File(format!("config {}: unknown key `{bad}`", path.display())));
        }
        Ok(Self { path: Some(path.to_path_buf()), table })
    }

    fn wrong(&self, key: &str, expected: &str, found: &toml::Value) -> ConfigError {
        let path = self.path.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
        ConfigError::File(format!("config {path}: field `{key}`: expected {expected}, found {}", found.type_str()))
    }

    fn lookup<'k>(&self, keys: &[&'k str]) -> Option<(&'k str, &toml::Value)> {
        keys.iter().find_map(|&k| self.table.get(k).map(|v| (k, v)))
    }

    pub fn float(&self, keys: &[&str]) -> Result<Option<f64>> {
        match self.lookup(keys) {
            None => Ok(None),
            Some((_, toml::Value::Float(x))) => Ok(Some(*x)),
            Some((_, toml::Value::Integer(n))) => Ok(Some(*n as f64)),
            Some((k, v)) => Err(self.wrong(k, "a number", v)),
        }
    }

    pub fn int(&self, key: &str) -> Result<Option<u64>> {
        match self.lookup(&[key]) {
            None => Ok(None),
            Some((_, toml::Value::Integer(n))) if *n >= 0 => Ok(Some(*n as u64)),
            Some((k, v)) => Err(self.wrong(k, "a non-negative integer", v)),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.lookup(&[key]) {
            None => Ok(None),
            Some((_, toml::Value::String(s))) => Ok(Some(s.clone())),
            Some((k, v)) => Err(self.wrong(k, "a string", v)),
        }
    }

    pub fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.lookup(&[key]) {
            None => Ok(None),
            Some((k, toml::Value::Array(items))) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(n) => Ok(*n as f64),
                    other => Err(self.wrong(k, "an array of numbers", other)),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some((k, v)) => Err(self.wrong(k, "an array of numbers", v)),
        }
    }

    pub fn strings(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.lookup(&[key]) {
            None => Ok(None),
            Some((_, toml::Value::String(s))) => Ok(Some(vec![s.clone()])),
            Some((k, toml::Value::Array(items))) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    other => Err(self.wrong(k, "an array of strings", other)),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some((k, v)) => Err(self.wrong(k, "a string or an array of strings", v)),
        }
    }

    /// Relative paths in the file are taken relative to the file.
    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(|s| {
            let p = PathBuf::from(s);
            match self.path.as_deref().and_then(Path::parent) {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        }))
    }
}

/// Settings shared by every subcommand, fully resolved.
#[derive(Debug, Clone)]
pub struct Common {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub caps: Caps,
}

impl Common {
    pub fn resolve(args: &CommonArgs, file: &FileConfig) -> Result<Self> {
        let out_dir = match args.out_dir.clone() {
            Some(dir) => dir,
            None => match std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
                Some(dir) => PathBuf::from(dir),
                None => file.path("out_dir")?.unwrap_or_else(|| PathBuf::from(".")),
            },
        };
        let threads = match args.threads {
            Some(n) => Some(n),
            None => file.int("threads")?.map(|n| n as usize),
        };
        if threads == Some(0) {
            return Err(ConfigError::Invalid("invalid value 0 for --threads: must be at least 1".into()));
        }
        let defaults = Caps::default();
        let caps = Caps {
            max_particles: pick_usize(args.max_particles, file, "max_particles")?.unwrap_or(defaults.max_particles),
            max_events: pick_usize(args.max_events, file, "max_events")?.unwrap_or(defaults.max_events),
        };
        let seed = match args.seed {
            Some(s) => s,
            None => file.int("seed")?.unwrap_or(1),
        };
        Ok(Self { out_dir, seed, threads, caps })
    }

    pub fn echo(&self, out: &mut String) {
        let _ = write!(out, " seed={}", self.seed);
        if let Some(n) = self.threads {
            let _ = write!(out, " threads={n}");
        }
        let _ = write!(out, " max_particles={} max_events={}", self.caps.max_particles, self.caps.max_events);
    }
}

pub fn pick_usize(flag: Option<usize>, file: &FileConfig, key: &str) -> Result<Option<usize>> {
    Ok(match flag {
        Some(v) => Some(v),
        None => file.int(key)?.map(|n| n as usize),
    })
}

pub fn pick_float(flag: Option<f64>, file: &FileConfig, keys: &[&str]) -> Result<Option<f64>> {
    Ok(match flag {
        Some(v) => Some(v),
        None => file.float(keys)?,
    })
}

pub fn pick_floats(flag: &[f64], file: &FileConfig, key: &str) -> Result<Option<Vec<f64>>> {
    if flag.is_empty() {
        file.floats(key)
    } else {
        Ok(Some(flag.to_vec()))
    }
}

/// Model parameters together with the values they were built from.
#[derive(Debug, Clone)]
pub struct ResolvedModel {
    pub params: ModelParams,
    pub echo: String,
}

impl ResolvedModel {
    pub fn resolve(args: &ModelArgs, file: &FileConfig) -> Result<Self> {
        let b = pick_float(args.b, file, &["b", "birth_rate"])?
            .ok_or_else(|| ConfigError::Missing("the birth rate --b is required".into()))?;
        let tail_file = match args.tail_file.clone() {
            Some(p) => Some(p),
            None => file.path("tail_file")?,
        };
        let d = pick_float(args.d, file, &["d", "death_rate"])?;
        let mut echo = format!("b={b}");
        let lifespan = match (d, &tail_file) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid("give either --d or --tail-file, not both".into()));
            }
            (Some(d), None) => {
                let _ = write!(echo, " d={d}");
                LifespanMeasure::exponential(b, d).map_err(range)?
            }
            (None, Some(path)) => {
                let _ = write!(echo, " tail_file={}", path.display());
                let f = File::open(path)
                    .map_err(|e| ConfigError::File(format!("tail file {}: {e}", path.display())))?;
                let tail = TabulatedTail::from_csv(BufReader::new(f))
                    .map_err(|e| ConfigError::File(format!("tail file {}: {e}", path.display())))?;
                if (tail.eval(0.0) - b).abs() > 1e-9 * b {
                    return Err(ConfigError::Invalid(format!(
                        "tail file {}: tail at 0 is {}, but --b is {b}",
                        path.display(),
                        tail.eval(0.0)
                    )));
                }
                LifespanMeasure::tabulated(tail)
            }
            (None, None) => {
                return Err(ConfigError::Missing("the death rate --d (or --tail-file) is required".into()));
            }
        };
        let model = match &args.model {
            Some(m) => m.clone(),
            None => file
                .string("model")?
                .ok_or_else(|| ConfigError::Missing("the mutation model --model I|II is required".into()))?,
        };
        let p = pick_float(args.p, file, &["p"])?;
        let theta = pick_float(args.theta, file, &["theta"])?;
        let mutation = match model.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => {
                let p = p.ok_or_else(|| ConfigError::Missing("--model I requires --p".into()))?;
                if theta.is_some() {
                    return Err(ConfigError::Invalid("--theta applies to Model II only".into()));
                }
                let _ = write!(echo, " model=I p={p}");
                MutationMechanism::model_i(p).map_err(range)?
            }
            "II" | "2" => {
                let theta = theta.ok_or_else(|| ConfigError::Missing("--model II requires --theta".into()))?;
                if p.is_some() {
                    return Err(ConfigError::Invalid("--p applies to Model I only".into()));
                }
                let _ = write!(echo, " model=II theta={theta}");
                MutationMechanism::model_ii(theta).map_err(range)?
            }
            other => return Err(ConfigError::Invalid(format!("invalid value `{other}` for --model: expected I or II"))),
        };
        Ok(Self { params: ModelParams::new(lifespan, mutation), echo })
    }
}

fn range(e: splitree::Error) -> ConfigError {
    match e {
        splitree::Error::InvalidParameter { name, value, reason } => {
            ConfigError::Invalid(format!("invalid value {value} for --{name}: {reason}"))
        }
        other => ConfigError::Invalid(other.to_string()),
    }
}

/// Joins numbers as `x;y;z` so a list stays one token in the header.
pub fn list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}
