//! Batch MAR sweeps over antenna counts, rate targets and interferer counts.
//!
//! A sweep is described by a flat `key = value` text file; list values are
//! comma separated and `#` starts a comment:
//!
//! ```text
//! scenario = perfect, imperfect
//! M = 10, 20, 40, 80, 160, 320, 640, 1280
//! K = 10
//! N_u = 100
//! N_c = 200
//! betas = equal:1
//! R = 10
//! R_prime = 9, 9.5, 9.9
//! I = 2
//! ```
//!
//! `fractional_loss = 0.1, 0.05` may replace `R_prime`. Other keys: `trials`,
//! `seed`, `out`, `format` (`csv` or `json`), `reopt_tau` (`true`/`false`),
//! `sinr_form` (`exact` or `five-term`) and `validate_max_M`.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::SinrForm;
use crate::error::{Error, Result};
use crate::solve::{mar, SolverSettings};
use crate::system::{RateTarget, Scenario, SystemConfig};
use crate::units::{from_db, to_db};

/// CSV header of an emitted sweep table.
pub const CSV_HEADER: &str =
    "M,scenario,R,R_prime,I,gamma_star_db,gamma_b_db,tau_star,r_b_db,sqrtM_rb";

/// Antenna counts used when a spec does not list any.
pub const DEFAULT_ANTENNAS: [usize; 8] = [10, 20, 40, 80, 160, 320, 640, 1280];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format `{other}`"))),
        }
    }
}

impl FromStr for SinrForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(SinrForm::Exact),
            "five-term" | "five_term" | "fiveterm" => Ok(SinrForm::FiveTerm),
            other => Err(Error::InvalidConfig(format!("unknown SINR form `{other}`"))),
        }
    }
}

/// Large-scale gains of the users.
#[derive(Debug, Clone, PartialEq)]
pub enum Betas {
    /// Every user has the same gain.
    Equal(f64),
    List(Vec<f64>),
}

/// How the rates with interference are given.
#[derive(Debug, Clone, PartialEq)]
pub enum RatePrimes {
    Absolute(Vec<f64>),
    FractionalLoss(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenarios: Vec<Scenario>,
    pub antennas: Vec<usize>,
    pub users: usize,
    pub uplink_len: usize,
    pub coherence_len: usize,
    pub betas: Betas,
    pub rate: f64,
    pub rate_primes: RatePrimes,
    pub interferers: Vec<usize>,
    /// Trials per checkpoint of the simulation pass.
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub reoptimize_tau: bool,
    pub form: SinrForm,
    /// Largest antenna count the simulation pass visits.
    pub validate_max_antennas: usize,
}

impl Default for SweepSpec {
    /// Ten unit-gain users, a 100-symbol uplink slot in a 200-symbol
    /// coherence interval, `R = 10` bpcu, `R' = 9` bpcu, two interferers.
    fn default() -> Self {
        SweepSpec {
            scenarios: vec![Scenario::PerfectCsi, Scenario::ImperfectCsi],
            antennas: DEFAULT_ANTENNAS.to_vec(),
            users: 10,
            uplink_len: 100,
            coherence_len: 200,
            betas: Betas::Equal(1.0),
            rate: 10.0,
            rate_primes: RatePrimes::Absolute(vec![9.0]),
            interferers: vec![2],
            trials: crate::montecarlo::DEFAULT_TRIALS,
            seed: 1,
            out: None,
            format: OutputFormat::Csv,
            reoptimize_tau: false,
            form: SinrForm::Exact,
            validate_max_antennas: 128,
        }
    }
}

fn parse_list<T: FromStr>(value: &str, line: usize) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>().map_err(|e| Error::Parse {
                line,
                message: format!("`{s}`: {e}"),
            })
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str, line: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    let mut v = parse_list(value, line)?;
    if v.len() != 1 {
        return Err(Error::Parse {
            line,
            message: format!("expected a single value, got `{value}`"),
        });
    }
    Ok(v.remove(0))
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::Parse {
            line,
            message: format!("expected a boolean, got `{other}`"),
        }),
    }
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SweepSpec::default();
        let mut users: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let value = value.trim();
            match key.trim() {
                "scenario" | "scenarios" => spec.scenarios = parse_list(value, line)?,
                "M" | "antennas" => spec.antennas = parse_list(value, line)?,
                "K" | "users" => users = Some(parse_one(value, line)?),
                "N_u" | "uplink_len" => spec.uplink_len = parse_one(value, line)?,
                "N_c" | "coherence_len" => spec.coherence_len = parse_one(value, line)?,
                "betas" | "beta" => {
                    spec.betas = match value.strip_prefix("equal:") {
                        Some(b) => Betas::Equal(parse_one(b, line)?),
                        None => Betas::List(parse_list(value, line)?),
                    }
                }
                "R" | "rate" => spec.rate = parse_one(value, line)?,
                "R_prime" | "rate_prime" => {
                    spec.rate_primes = RatePrimes::Absolute(parse_list(value, line)?)
                }
                "fractional_loss" => {
                    spec.rate_primes = RatePrimes::FractionalLoss(parse_list(value, line)?)
                }
                "I" | "interferers" => spec.interferers = parse_list(value, line)?,
                "trials" => spec.trials = parse_one(value, line)?,
                "seed" => spec.seed = parse_one(value, line)?,
                "out" => spec.out = Some(PathBuf::from(value)),
                "format" => spec.format = parse_one(value, line)?,
                "reopt_tau" => spec.reoptimize_tau = parse_bool(value, line)?,
                "sinr_form" => spec.form = parse_one(value, line)?,
                "validate_max_M" => spec.validate_max_antennas = parse_one(value, line)?,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        spec.users = match (&spec.betas, users) {
            (Betas::List(b), Some(k)) if b.len() != k => {
                return Err(Error::InvalidConfig(format!(
                    "K = {k} but {} large-scale gains listed",
                    b.len()
                )))
            }
            (Betas::List(b), _) => b.len(),
            (Betas::Equal(_), Some(k)) => k,
            (Betas::Equal(_), None) => spec.users,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn beta_values(&self) -> Vec<f64> {
        match &self.betas {
            Betas::Equal(b) => vec![*b; self.users],
            Betas::List(b) => b.clone(),
        }
    }

    pub fn targets(&self) -> Result<Vec<RateTarget>> {
        match &self.rate_primes {
            RatePrimes::Absolute(r) => r.iter().map(|&rp| RateTarget::new(self.rate, rp)).collect(),
            RatePrimes::FractionalLoss(l) => l
                .iter()
                .map(|&loss| RateTarget::from_fractional_loss(self.rate, loss))
                .collect(),
        }
    }

    pub fn config(&self, antennas: usize) -> Result<SystemConfig> {
        SystemConfig::new(
            antennas,
            self.uplink_len,
            self.coherence_len,
            self.beta_values(),
        )
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            form: self.form,
            reoptimize_tau: self.reoptimize_tau,
            ..SolverSettings::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.antennas.is_empty() || self.interferers.is_empty() {
            return Err(Error::InvalidConfig(
                "scenario, M and I lists must be non-empty".into(),
            ));
        }
        for &m in &self.antennas {
            self.config(m)?;
        }
        if self.targets()?.is_empty() {
            return Err(Error::InvalidConfig("no rate targets given".into()));
        }
        if self.interferers.contains(&0) {
            return Err(Error::InvalidConfig(
                "interferer counts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One line of a sweep table. Value columns are empty when the point could
/// not be solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub antennas: usize,
    pub scenario: Scenario,
    #[serde(rename = "R")]
    pub rate: f64,
    #[serde(rename = "R_prime")]
    pub rate_prime: f64,
    #[serde(rename = "I")]
    pub interferers: usize,
    pub gamma_star_db: Option<f64>,
    pub gamma_b_db: Option<f64>,
    pub tau_star: Option<usize>,
    pub r_b_db: Option<f64>,
    #[serde(rename = "sqrtM_rb")]
    pub sqrt_m_rb: Option<f64>,
}

impl SweepRow {
    pub fn gamma_star(&self) -> Option<f64> {
        self.gamma_star_db.map(from_db)
    }

    pub fn gamma_b(&self) -> Option<f64> {
        self.gamma_b_db.map(from_db)
    }

    pub fn r_b_linear(&self) -> Option<f64> {
        self.r_b_db.map(from_db)
    }

    pub fn is_solved(&self) -> bool {
        self.r_b_db.is_some()
    }
}

/// A sweep point that failed, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub antennas: usize,
    pub scenario: Scenario,
    pub rate_prime: f64,
    pub interferers: usize,
    pub error: Error,
}

impl fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} scenario={} R'={} I={}: {}",
            self.antennas, self.scenario, self.rate_prime, self.interferers, self.error
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepReport {
    pub fn all_solved(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Solves every `(M, scenario, R', I)` combination of the spec. Rows come
/// back ordered by scenario, `R'`, `I`, then `M`; failures are reported
/// beside the (empty) rows instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let targets = spec.targets()?;
    let settings = spec.settings();
    let mut points = Vec::new();
    for &scenario in &spec.scenarios {
        for target in &targets {
            for &interferers in &spec.interferers {
                for &antennas in &spec.antennas {
                    points.push((scenario, *target, interferers, antennas));
                }
            }
        }
    }

    let mut solved: Vec<(SweepRow, Option<SweepFailure>)> = points
        .par_iter()
        .map(|&(scenario, target, interferers, antennas)| {
            let mut row = SweepRow {
                antennas,
                scenario,
                rate: target.rate(),
                rate_prime: target.rate_prime(),
                interferers,
                gamma_star_db: None,
                gamma_b_db: None,
                tau_star: None,
                r_b_db: None,
                sqrt_m_rb: None,
            };
            let result = spec
                .config(antennas)
                .and_then(|cfg| mar(&cfg, scenario, &target, interferers, &settings));
            match result {
                Ok(r) => {
                    row.gamma_star_db = Some(to_db(r.gamma_star));
                    row.gamma_b_db = Some(to_db(r.gamma_b_star));
                    row.tau_star = r.tau_star;
                    row.r_b_db = Some(r.r_b_db);
                    row.sqrt_m_rb = Some((antennas as f64).sqrt() * r.r_b_linear);
                    (row, None)
                }
                Err(error) => {
                    let failure = SweepFailure {
                        antennas,
                        scenario,
                        rate_prime: target.rate_prime(),
                        interferers,
                        error,
                    };
                    (row, Some(failure))
                }
            }
        })
        .collect();

    solved.sort_by(|(a, _), (b, _)| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.rate_prime.total_cmp(&b.rate_prime))
            .then(a.interferers.cmp(&b.interferers))
            .then(a.antennas.cmp(&b.antennas))
    });
    let mut rows = Vec::with_capacity(solved.len());
    let mut failures = Vec::new();
    for (row, failure) in solved {
        rows.push(row);
        failures.extend(failure);
    }
    Ok(SweepReport { rows, failures })
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Io(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_json<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_rows<W: Write>(rows: &[SweepRow], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}
