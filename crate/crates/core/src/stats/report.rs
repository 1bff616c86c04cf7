//! Test reports and their CSV and text renderings.

use std::fmt;
use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Preconditions not met; neither pass nor fail.
    Skipped,
    /// Reported for inspection only.
    Exploratory,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        self == Self::Fail
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Skipped => "SKIP",
            Self::Exploratory => "INFO",
        })
    }
}

/// One compared quantity: a Monte-Carlo estimate against its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
}

impl Cell {
    pub fn new(label: impl Into<String>, estimate: f64, se: f64, target: f64) -> Self {
        Self { label: label.into(), estimate, se, target }
    }

    pub fn z(&self) -> f64 {
        (self.estimate - self.target) / self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    /// `max |z|`, a chi-square or a KS distance, as `statistic_kind` says.
    pub statistic: f64,
    pub statistic_kind: &'static str,
    pub p_value: Option<f64>,
    /// Critical `|z|` for the cells, when cells are tested.
    pub critical_z: Option<f64>,
    pub level: f64,
    pub outcome: Outcome,
    pub replicas: usize,
    pub attempts: u64,
    pub seed: u64,
    pub cells: Vec<Cell>,
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, seed: u64, replicas: usize, attempts: u64) -> Self {
        Self {
            name: name.into(),
            statistic: f64::NAN,
            statistic_kind: "",
            p_value: None,
            critical_z: None,
            level: super::LEVEL,
            outcome: Outcome::Exploratory,
            replicas,
            attempts,
            seed,
            cells: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z().abs()).fold(0.0, f64::max)
    }

    pub fn summary_line(&self) -> String {
        let p = self.p_value.map(|p| format!(" p={p:.4}")).unwrap_or_default();
        let z = self
            .critical_z
            .map(|z| format!(" max|z|={:.3} (crit {z:.3})", self.max_abs_z()))
            .unwrap_or_default();
        let stat = if self.statistic.is_nan() {
            String::new()
        } else {
            format!(" {}={:.6}", self.statistic_kind, self.statistic)
        };
        format!(
            "[{}] {}:{stat}{p}{z} n={} attempts={} seed={}",
            self.outcome, self.name, self.replicas, self.attempts, self.seed
        )
    }

    pub fn summary(&self) -> String {
        let mut s = self.summary_line();
        for c in &self.cells {
            s += &format!(
                "\n    {:<32} est={:.6} se={:.6} target={:.6} z={:+.3}",
                c.label,
                c.estimate,
                c.se,
                c.target,
                c.z()
            );
        }
        for n in &self.notes {
            s += &format!("\n    note: {n}");
        }
        s
    }
}

pub const CSV_HEADER: &str =
    "suite,test,cell,estimate,se,target,z,statistic,statistic_kind,p_value,critical_z,outcome,replicas,attempts,seed";

/// One summary row per report (cell `*`), then one row per cell.
pub fn write_reports_csv(suite: &str, reports: &[TestReport], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in reports {
        let tail = format!(
            "{},{},{},{},{},{},{},{}",
            r.statistic,
            r.statistic_kind,
            opt(r.p_value),
            opt(r.critical_z),
            r.outcome,
            r.replicas,
            r.attempts,
            r.seed
        );
        writeln!(out, "{suite},{},*,,,,,{tail}", r.name)?;
        for c in &r.cells {
            writeln!(
                out,
                "{suite},{},{},{},{},{},{},{tail}",
                r.name,
                c.label.replace(',', ";"),
                c.estimate,
                c.se,
                c.target,
                c.z()
            )?;
        }
    }
    Ok(())
}
