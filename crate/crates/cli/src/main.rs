use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mimo_bpf::sweep::{write_rows, OutputFormat};
use mimo_bpf::{
    attenuation_budget, mar, run_sweep, solve_gamma, to_db, validate, SweepRow, SweepSpec,
    ValidateOptions,
};
use serde::Serialize;

/// Bandpass-filter requirements for a massive-MIMO uplink under aliased
/// out-of-band interference.
#[derive(Parser)]
#[command(name = "mimo-bpf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every (M, scenario, R', I) combination and emit a table.
    Sweep(Params),
    /// Maximum aliasing ratio at a single point.
    Mar(Params),
    /// Transmit SNR that meets the sum-rate target without interference.
    Solve(Params),
    /// Compare closed-form and simulated SINR at the sweep points.
    Validate(Params),
    /// Filter attenuation needed for a given MAR and interference excess.
    Budget(BudgetArgs),
}

/// Settings shared by the sweep verbs. Flags override the config file.
#[derive(Args, Default)]
struct Params {
    /// Flat `key = value` sweep description.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Re-optimize the training length in the presence of interference.
    #[arg(long)]
    reopt_tau: bool,
    /// perfect, imperfect or both (comma separated).
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Antenna counts.
    #[arg(short = 'M', long = "antennas", value_delimiter = ',')]
    antennas: Vec<usize>,
    /// Number of users.
    #[arg(short = 'K', long = "users")]
    users: Option<usize>,
    /// Uplink slot length in channel uses.
    #[arg(long)]
    uplink_len: Option<usize>,
    /// Coherence interval in channel uses.
    #[arg(long)]
    coherence_len: Option<usize>,
    /// `equal:<beta>` or a comma-separated list.
    #[arg(long)]
    betas: Option<String>,
    /// Sum-rate target without interference, bpcu.
    #[arg(short = 'R', long)]
    rate: Option<f64>,
    /// Sum-rate targets with interference, bpcu.
    #[arg(long, value_delimiter = ',', conflicts_with = "fractional_loss")]
    rate_prime: Vec<f64>,
    /// Tolerated fractional rate losses.
    #[arg(long, value_delimiter = ',')]
    fractional_loss: Vec<f64>,
    /// Interferer counts.
    #[arg(short = 'I', long, value_delimiter = ',')]
    interferers: Vec<usize>,
    /// Simulation trials per checkpoint.
    #[arg(long)]
    trials: Option<usize>,
    /// exact or five-term.
    #[arg(long)]
    sinr_form: Option<String>,
    /// Largest antenna count visited by `validate`.
    #[arg(long)]
    validate_max_m: Option<usize>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximum aliasing ratio in dB (normally negative).
    #[arg(long, allow_hyphen_values = true)]
    mar_db: f64,
    /// Interference power above the wanted signal, dB.
    #[arg(long, allow_hyphen_values = true)]
    excess_db: f64,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl Params {
    fn spec(&self) -> anyhow::Result<SweepSpec> {
        let mut text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => String::new(),
        };
        let mut set = |key: &str, value: String| {
            text.push_str(&format!("\n{key} = {value}"));
        };
        if !self.scenario.is_empty() {
            set("scenario", join(&self.scenario));
        }
        if !self.antennas.is_empty() {
            set("M", join(&self.antennas));
        }
        if let Some(k) = self.users {
            set("K", k.to_string());
        }
        if let Some(n) = self.uplink_len {
            set("N_u", n.to_string());
        }
        if let Some(n) = self.coherence_len {
            set("N_c", n.to_string());
        }
        if let Some(b) = &self.betas {
            set("betas", b.clone());
        }
        if let Some(r) = self.rate {
            set("R", r.to_string());
        }
        if !self.rate_prime.is_empty() {
            set("R_prime", join(&self.rate_prime));
        }
        if !self.fractional_loss.is_empty() {
            set("fractional_loss", join(&self.fractional_loss));
        }
        if !self.interferers.is_empty() {
            set("I", join(&self.interferers));
        }
        if let Some(t) = self.trials {
            set("trials", t.to_string());
        }
        if let Some(s) = self.seed {
            set("seed", s.to_string());
        }
        if let Some(o) = &self.out {
            set("out", o.display().to_string());
        }
        if let Some(f) = &self.format {
            set("format", f.clone());
        }
        if self.reopt_tau {
            set("reopt_tau", "true".into());
        }
        if let Some(f) = &self.sinr_form {
            set("sinr_form", f.clone());
        }
        if let Some(m) = self.validate_max_m {
            set("validate_max_M", m.to_string());
        }
        Ok(SweepSpec::parse(&text)?)
    }
}

fn output(spec: &SweepSpec) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &spec.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn single<'a, T>(what: &str, xs: &'a [T]) -> anyhow::Result<&'a T> {
    match xs {
        [x] => Ok(x),
        _ => bail!("{what} takes a single value here, got {}; use `sweep` for lists", xs.len()),
    }
}

fn cmd_sweep(params: &Params) -> anyhow::Result<bool> {
    let spec = params.spec()?;
    let report = run_sweep(&spec)?;
    let mut out = output(&spec)?;
    write_rows(&report.rows, spec.format, &mut out)?;
    out.flush()?;
    for f in &report.failures {
        eprintln!("failed: {f}");
    }
    Ok(report.all_solved())
}

fn cmd_mar(params: &Params) -> anyhow::Result<bool> {
    let spec = params.spec()?;
    let m = *single("M", &spec.antennas)?;
    let scenario = *single("scenario", &spec.scenarios)?;
    let interferers = *single("I", &spec.interferers)?;
    let targets = spec.targets()?;
    let target = single("R_prime", &targets)?;
    let r = mar(&spec.config(m)?, scenario, target, interferers, &spec.settings())?;
    let row = SweepRow {
        antennas: m,
        scenario,
        rate: target.rate(),
        rate_prime: target.rate_prime(),
        interferers,
        gamma_star_db: Some(to_db(r.gamma_star)),
        gamma_b_db: Some(to_db(r.gamma_b_star)),
        tau_star: r.tau_star,
        r_b_db: Some(r.r_b_db),
        sqrt_m_rb: Some((m as f64).sqrt() * r.r_b_linear),
    };
    let mut out = output(&spec)?;
    write_rows(&[row], spec.format, &mut out)?;
    out.flush()?;
    Ok(true)
}

#[derive(Serialize)]
struct SolveRow {
    #[serde(rename = "M")]
    antennas: usize,
    scenario: mimo_bpf::Scenario,
    #[serde(rename = "R")]
    rate: f64,
    gamma_star: f64,
    gamma_star_db: f64,
    tau_star: Option<usize>,
}

fn cmd_solve(params: &Params) -> anyhow::Result<bool> {
    let spec = params.spec()?;
    let m = *single("M", &spec.antennas)?;
    let scenario = *single("scenario", &spec.scenarios)?;
    let sol = solve_gamma(&spec.config(m)?, scenario, spec.rate, &spec.settings())?;
    let row = SolveRow {
        antennas: m,
        scenario,
        rate: spec.rate,
        gamma_star: sol.gamma,
        gamma_star_db: to_db(sol.gamma),
        tau_star: sol.tau,
    };
    let mut out = output(&spec)?;
    match spec.format {
        OutputFormat::Csv => {
            writeln!(out, "M,scenario,R,gamma_star,gamma_star_db,tau_star")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                row.antennas,
                row.scenario,
                row.rate,
                row.gamma_star,
                row.gamma_star_db,
                row.tau_star.map_or(String::new(), |t| t.to_string())
            )?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &row)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(true)
}

fn cmd_validate(params: &Params) -> anyhow::Result<bool> {
    let spec = params.spec()?;
    let report = validate(&spec, &ValidateOptions::default())?;
    let mut out = output(&spec)?;
    out.write_all(report.to_text().as_bytes())?;
    out.flush()?;
    log::info!("{} checkpoints", report.checkpoints.len());
    Ok(report.passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Sweep(p) => cmd_sweep(&p),
        Command::Mar(p) => cmd_mar(&p),
        Command::Solve(p) => cmd_solve(&p),
        Command::Validate(p) => cmd_validate(&p),
        Command::Budget(b) => {
            println!("{}", attenuation_budget(b.mar_db, b.excess_db));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
