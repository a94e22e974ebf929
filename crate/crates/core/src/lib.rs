/*!
Closed-form and simulated SINR of a massive-MIMO uplink with maximum-ratio
combining, when out-of-band interferers alias into the band through an
imperfect bandpass filter, and the *maximum aliasing ratio* (MAR) such a
receiver can tolerate.

The crate covers four layers:

* [`closed_form`]: per-user SINR and sum rate with perfect channel
  knowledge or LMMSE channel estimates, and their large-array limits.
* [`solve`]: the transmit SNR that meets a sum-rate target, the largest
  aggregate interference that keeps a lower target, the MAR, and the
  asymptotic constants of the `1/√M` scaling law.
* [`montecarlo`]: a link-level simulator that draws channels, pilots and
  interferers, runs LMMSE estimation and MRC, and measures every term of
  the combiner output.
* [`sweep`], [`validate`] and [`budget`]: batch sweeps with CSV/JSON output,
  a simulation pass over a sweep and the filter attenuation budget.

All powers are normalised to a unit noise power.

```
use mimo_bpf::{mar, RateTarget, Scenario, SolverSettings, SystemConfig};

let cfg = SystemConfig::equal_gains(160, 10, 100, 200, 1.0)?;
let target = RateTarget::new(10.0, 9.0)?;
let r = mar(&cfg, Scenario::PerfectCsi, &target, 2, &SolverSettings::default())?;
assert!(r.r_b_db < 0.0);
# Ok::<(), mimo_bpf::Error>(())
```
*/

pub mod budget;
pub mod closed_form;
pub mod error;
pub mod montecarlo;
pub mod solve;
pub mod sweep;
pub mod system;
pub mod units;
pub mod validate;

pub use budget::attenuation_budget;
pub use closed_form::{
    icsi_five_term, icsi_terms, pcsi_terms, sinr_icsi, sinr_icsi_limit, sinr_pcsi,
    sumrate_icsi, sumrate_icsi_opt, sumrate_pcsi, sumrate_sup, FiveTermGroups, SinrForm,
    SinrTerms, TermGroup,
};
pub use error::{Error, Result};
pub use montecarlo::{empirical_sinr, empirical_sinr_with, McOptions, SinrBreakdown};
pub use solve::{
    asymptotic_icsi, asymptotic_pcsi, mar, solve_gamma, solve_gamma_b, AsymptoticConstants,
    GammaBSolution, GammaSolution, MarResult, SolverSettings,
};
pub use sweep::{run_sweep, SweepReport, SweepRow, SweepSpec};
pub use system::{
    BpfModel, InterferenceProfile, OperatingPoint, RateTarget, Scenario, SystemConfig,
};
pub use units::{from_db, to_db};
pub use validate::{validate, ValidateOptions, ValidationReport};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/closed-forms.md")]
    mod closed_forms {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
