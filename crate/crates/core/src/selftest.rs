//! The fixture suite plus the acceptance criteria, as one report.

use serde::Serialize;

use crate::acceptance::{criteria, Clause, Criterion};
use crate::error::Result;
use crate::fixtures::{fixture, IDS};
use crate::report::{run_scenario, to_json, ScenarioReport};
use crate::scenario::{Overrides, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationOutcome {
    pub check: String,
    pub expected: Verdict,
    pub actual: Verdict,
    pub provenance: String,
    pub residual: f64,
    pub tolerance: f64,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureOutcome {
    pub id: String,
    pub passed: bool,
    pub expectations: Vec<ExpectationOutcome>,
    pub report: ScenarioReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub fixtures: Vec<FixtureOutcome>,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Runs a fixture and compares every check with its expected verdict.
pub fn run_fixture(id: &str) -> Result<FixtureOutcome> {
    let s = fixture(id)?;
    let report = run_scenario(&s, &Overrides::default(), false)?;
    let expectations: Vec<ExpectationOutcome> = s
        .expected
        .iter()
        .map(|e| {
            let c = report
                .checks
                .iter()
                .find(|c| c.key() == e.check)
                .expect("validated: every expectation names a check");
            ExpectationOutcome {
                check: e.check.clone(),
                expected: e.verdict,
                actual: c.verdict,
                provenance: e.provenance.clone(),
                residual: c.residual,
                tolerance: c.tolerance,
                matches: c.verdict == e.verdict,
            }
        })
        .collect();
    let unexpected = report.checks.len() != expectations.len();
    Ok(FixtureOutcome {
        id: id.into(),
        passed: !unexpected && expectations.iter().all(|e| e.matches),
        expectations,
        report,
    })
}

/// Fixtures and criteria 1-10.
pub fn selftest() -> Result<SelftestReport> {
    let fixtures = IDS
        .iter()
        .map(|id| run_fixture(id))
        .collect::<Result<Vec<_>>>()?;
    let criteria = criteria();
    Ok(SelftestReport {
        passed: fixtures.iter().all(|f| f.passed) && criteria.iter().all(|c| c.passed),
        fixtures,
        criteria,
    })
}

/// Criterion 11: two serialized self-test reports are byte-identical.
pub fn determinism(first: &str, second: &str) -> Criterion {
    let first_diff = first
        .bytes()
        .zip(second.bytes())
        .position(|(a, b)| a != b)
        .unwrap_or(first.len().min(second.len()));
    let same = first == second;
    Criterion {
        id: 11,
        title: "selftest reports are byte-identical across runs".into(),
        passed: same,
        clauses: vec![Clause::holds("reports identical", same)],
        diagnostics: [
            ("report_bytes".to_string(), first.len() as f64),
            (
                "first_differing_byte".to_string(),
                if same { -1.0 } else { first_diff as f64 },
            ),
        ]
        .into_iter()
        .collect(),
        error: None,
    }
}

/// Runs the self-test twice and appends criterion 11 to the first report.
pub fn selftest_with_determinism() -> Result<SelftestReport> {
    let mut report = selftest()?;
    let again = selftest()?;
    let c11 = determinism(&report.to_json(), &again.to_json());
    report.passed &= c11.passed;
    report.criteria.push(c11);
    Ok(report)
}
