//! Simulation pass over a sweep: at each solved operating point, compare the
//! closed-form SINR of every user with the simulated one.

use std::fmt;

use crate::closed_form::{
    icsi_five_term, icsi_terms, pcsi_terms, SinrForm, SinrTerms, TermGroup,
};
use crate::error::Result;
use crate::montecarlo::empirical_sinr;
use crate::solve::{mar, solve_gamma};
use crate::sweep::SweepSpec;
use crate::system::{InterferenceProfile, OperatingPoint, Scenario, SystemConfig};

/// Relative tolerance floor; the acceptance band is the larger of this and
/// [`SIGMA_MULTIPLE`] standard errors.
pub const REL_TOL: f64 = 0.02;
pub const SIGMA_MULTIPLE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidateOptions {
    /// Multiply one closed-form group by a factor before comparing. Used to
    /// confirm that the check can fail.
    pub perturb: Option<(TermGroup, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub scenario: Scenario,
    pub antennas: usize,
    /// `None` for the interference-free point.
    pub rate_prime: Option<f64>,
    pub interferers: usize,
    pub tau: Option<usize>,
    pub gamma: f64,
    pub gamma_b: f64,
    /// User with the largest deviation in units of the allowed band.
    pub worst_user: usize,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub rel_dev: f64,
    pub max_bl_power: f64,
    pub pass: bool,
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let target = match self.rate_prime {
            Some(rp) => format!("R'={rp}"),
            None => "R'=-".to_owned(),
        };
        let tau = self.tau.map_or("-".to_owned(), |t| t.to_string());
        write!(
            f,
            "{} {} M={} {} I={} tau={} user={} closed={:.6} empirical={:.6} se={:.2e} rel={:+.4} bl={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.scenario,
            self.antennas,
            target,
            self.interferers,
            tau,
            self.worst_user,
            self.closed_form,
            self.empirical,
            self.std_err,
            self.rel_dev,
            self.max_bl_power,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checkpoints: Vec<Checkpoint>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.pass)
    }

    /// One line per checkpoint.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checkpoints {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s
    }
}

/// Closed-form SINR of user `k` in the requested form, optionally with one
/// group perturbed.
pub fn closed_form_sinr(
    cfg: &SystemConfig,
    op: &OperatingPoint,
    intf: &InterferenceProfile,
    form: SinrForm,
    k: usize,
    perturb: Option<(TermGroup, f64)>,
) -> Result<f64> {
    let terms: SinrTerms = match (op.tau, form) {
        (None, _) => pcsi_terms(cfg, k, op.gamma, intf)?,
        (Some(tau), SinrForm::Exact) => icsi_terms(cfg, tau, k, op.gamma, intf)?,
        (Some(tau), SinrForm::FiveTerm) => {
            let g = icsi_five_term(cfg, tau, k, op.gamma, intf)?;
            SinrTerms {
                own_symbol: g.self_bracket + g.estimation_error,
                other_users: g.multi_user,
                interference: g.beam,
                noise: g.noise,
            }
        }
    };
    Ok(match perturb {
        Some((group, factor)) => terms.scaled(group, factor).sinr(),
        None => terms.sinr(),
    })
}

fn check_point(
    cfg: &SystemConfig,
    op: &OperatingPoint,
    intf: &InterferenceProfile,
    rate_prime: Option<f64>,
    spec: &SweepSpec,
    opts: &ValidateOptions,
) -> Result<Checkpoint> {
    let scenario = op.scenario();
    let empirical = empirical_sinr(cfg, op, intf, scenario, spec.trials, spec.seed)?;
    let mut worst: Option<(f64, usize, f64, f64, f64, f64)> = None;
    let mut pass = true;
    let mut max_bl = 0.0f64;
    for b in &empirical {
        let cf = closed_form_sinr(cfg, op, intf, spec.form, b.user, opts.perturb)?;
        let band = (REL_TOL * cf).max(SIGMA_MULTIPLE * b.sinr_std_err);
        let dev = b.sinr - cf;
        let score = dev.abs() / band;
        pass &= dev.abs() <= band;
        max_bl = max_bl.max(b.powers.bl);
        if worst.is_none_or(|w| score > w.0) {
            worst = Some((score, b.user, cf, b.sinr, b.sinr_std_err, dev / cf));
        }
    }
    let (_, user, cf, emp, se, rel) = worst.expect("at least one user");
    Ok(Checkpoint {
        scenario,
        antennas: cfg.antennas(),
        rate_prime,
        interferers: intf.count(),
        tau: op.tau,
        gamma: op.gamma,
        gamma_b: intf.total(),
        worst_user: user,
        closed_form: cf,
        empirical: emp,
        std_err: se,
        rel_dev: rel,
        max_bl_power: max_bl,
        pass,
    })
}

/// Runs the simulator at every sweep point with `M <= validate_max_M`: once
/// without interference at the solved transmit SNR, and once per `(R', I)`
/// with the solved interference split evenly. Points that cannot be solved
/// are skipped.
pub fn validate(spec: &SweepSpec, opts: &ValidateOptions) -> Result<ValidationReport> {
    spec.validate()?;
    let settings = spec.settings();
    let targets = spec.targets()?;
    let mut report = ValidationReport::default();
    for &scenario in &spec.scenarios {
        for &antennas in spec
            .antennas
            .iter()
            .filter(|&&m| m <= spec.validate_max_antennas)
        {
            let cfg = spec.config(antennas)?;
            let Ok(clean) = solve_gamma(&cfg, scenario, spec.rate, &settings) else {
                log::info!("skipping {scenario} M={antennas}: target not solvable");
                continue;
            };
            let op = OperatingPoint {
                gamma: clean.gamma,
                tau: clean.tau,
            };
            report.checkpoints.push(check_point(
                &cfg,
                &op,
                &InterferenceProfile::empty(),
                None,
                spec,
                opts,
            )?);
            for target in &targets {
                for &interferers in &spec.interferers {
                    let Ok(r) = mar(&cfg, scenario, target, interferers, &settings) else {
                        continue;
                    };
                    let op = OperatingPoint {
                        gamma: r.gamma_star,
                        tau: r.tau_star,
                    };
                    let intf = InterferenceProfile::uniform(r.gamma_b_star, interferers)?;
                    report.checkpoints.push(check_point(
                        &cfg,
                        &op,
                        &intf,
                        Some(target.rate_prime()),
                        spec,
                        opts,
                    )?);
                }
            }
        }
    }
    Ok(report)
}
