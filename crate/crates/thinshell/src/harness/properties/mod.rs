//! Property suite: operator identities, inequalities, adjointness and
//! energy ledgers, run with fixed seeds.

mod dynamics;
mod shell;
mod sphere;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::sphere::{coeff_len, DivFreeSpectral, SpectralScalar};

/// Selectors accepted by [`run_property_suite`], besides "all".
pub const SELECTORS: &[&str] = &[
    "operators",
    "inequalities",
    "poincare",
    "norm_equivalence",
    "ladyzhenskaya",
    "identities",
    "sphere",
    "noise",
    "dynamics",
    "stochastic",
    "moment",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub eps_list: Vec<f64>,
    pub moment_p: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 2024, eps_list: vec![0.4, 0.2, 0.1, 0.05], moment_p: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub group: String,
    pub name: String,
    pub passed: bool,
    /// Worst observed residual, ratio or statistic.
    pub value: f64,
    /// Pass threshold for `value` (upper bound unless stated in `detail`).
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub selector: String,
    pub checks: Vec<CheckResult>,
    /// Empirical constants that are reported rather than asserted.
    pub reported: BTreeMap<String, f64>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn group(&self, group: &str) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.group == group).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {:<18} {:<56} {:>11.3e} <= {:<9.1e} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.group,
                c.name,
                c.value,
                c.tolerance,
                c.detail
            );
        }
        for (k, v) in &self.reported {
            let _ = writeln!(s, "info {k} = {v:.6e}");
        }
        s
    }
}

/// Accumulates checks for one group.
pub(crate) struct Recorder<'a> {
    group: &'static str,
    report: &'a mut SuiteReport,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(group: &'static str, report: &'a mut SuiteReport) -> Self {
        Recorder { group, report }
    }

    /// Passes when `value ≤ tol` (NaN fails).
    pub(crate) fn le(&mut self, name: impl Into<String>, value: f64, tol: f64, detail: impl Into<String>) {
        self.push(name.into(), value <= tol, value, tol, detail.into());
    }

    /// Passes when `value ≥ tol`.
    pub(crate) fn ge(&mut self, name: impl Into<String>, value: f64, tol: f64, detail: impl Into<String>) {
        let d = detail.into();
        let d = if d.is_empty() { "lower bound".to_string() } else { format!("lower bound; {d}") };
        self.push(name.into(), value >= tol, value, tol, d);
    }

    pub(crate) fn flag(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.push(name.into(), ok, if ok { 0.0 } else { 1.0 }, 0.0, detail.into());
    }

    pub(crate) fn report(&mut self, key: impl Into<String>, value: f64) {
        self.report.reported.insert(format!("{}.{}", self.group, key.into()), value);
    }

    fn push(&mut self, name: String, passed: bool, value: f64, tolerance: f64, detail: String) {
        self.report.checks.push(CheckResult {
            group: self.group.to_string(),
            name,
            passed: passed && !value.is_nan(),
            value,
            tolerance,
            detail,
        });
    }
}

/// Running maximum of a residual.
#[derive(Default)]
pub(crate) struct Worst(pub f64);

impl Worst {
    pub(crate) fn see(&mut self, v: f64) {
        if v.is_nan() || v > self.0 {
            self.0 = if v.is_nan() { f64::NAN } else { v };
        }
    }
}

pub(crate) fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub(crate) fn random_scalar(rng: &mut ChaCha8Rng, lmax: usize) -> SpectralScalar {
    let c = (0..coeff_len(lmax)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SpectralScalar::from_coeffs(lmax, c).expect("finite coefficients")
}

/// Random divergence-free field with spectrum decaying like 1/l².
pub(crate) fn random_divfree(rng: &mut ChaCha8Rng, lmax: usize) -> DivFreeSpectral {
    let s = random_scalar(rng, lmax).map_degree(|l| 1.0 / ((l * l) as f64).max(1.0));
    DivFreeSpectral::from_stream(s)
}

pub(crate) fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Run the checks named by `selector` ("all" or one of [`SELECTORS`]).
pub fn run_property_suite(selector: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    if selector != "all" && !SELECTORS.contains(&selector) {
        return usage(format!("unknown selector {selector:?}; expected all or one of {}", SELECTORS.join(", ")));
    }
    let mut report = SuiteReport { selector: selector.to_string(), ..Default::default() };
    let want = |s: &str| selector == "all" || selector == s;
    let inequalities = selector == "inequalities";
    if want("operators") {
        shell::operators(opts, &mut report)?;
    }
    if want("poincare") || inequalities {
        shell::poincare(opts, &mut report)?;
    }
    if want("norm_equivalence") || inequalities {
        shell::norm_equivalence(opts, &mut report)?;
    }
    if want("ladyzhenskaya") || inequalities {
        shell::ladyzhenskaya(opts, &mut report)?;
    }
    if want("identities") {
        shell::identities(opts, &mut report)?;
    }
    if want("sphere") {
        sphere::sphere(opts, &mut report)?;
    }
    if want("noise") {
        sphere::noise(opts, &mut report)?;
    }
    if want("dynamics") {
        dynamics::dynamics(opts, &mut report)?;
    }
    if want("stochastic") {
        dynamics::stochastic(opts, &mut report)?;
    }
    if want("moment") {
        dynamics::moment(opts, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_selector_is_usage_error() {
        assert!(run_property_suite("nope", &SuiteOptions::default()).is_err());
    }

    #[test]
    fn worst_keeps_nan() {
        let mut w = Worst::default();
        w.see(1.0);
        w.see(f64::NAN);
        w.see(2.0);
        assert!(w.0.is_nan());
    }
}
