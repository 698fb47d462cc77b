//! Thin delegation to the core acceptance checklist plus helpers shared
//! by the verify subcommands.

use anyhow::Result;
use dbar2_core::domain::{C2, DomainSpec};
use dbar2_core::suite::{self, CheckResult, Resolution};

pub fn run_suite(quick: bool, seed: u64) -> Result<Vec<CheckResult>> {
    Ok(suite::run_all(Resolution { quick }, seed))
}

pub fn default_queries() -> Vec<C2> {
    suite::default_queries()
}

pub fn shell_interior_pairs(d: &DomainSpec, n: usize, seed: u64) -> Vec<(C2, C2)> {
    suite::shell_interior_pairs(d, n, seed)
}

pub fn h11_ratio_pair(eta: f64, seed: u64) -> Result<(f64, f64, f64)> {
    Ok(suite::h11_ratio_pair(eta, seed)?)
}

pub fn gain_check(seed: u64) -> Result<(bool, bool)> {
    let (a, b, _) = suite::gain_bands(Resolution { quick: true }, seed)?;
    Ok((a, b))
}
