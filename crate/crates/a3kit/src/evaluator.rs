//! Metrics over generated tests and their execution results.
//!
//! A test is *correct* when its run record is a Pass whose covered focal ids
//! include the test's own focal method. A focal method is *covered* when at
//! least one Pass record lists it. Percentages are reported per project and
//! pooled over raw counts (never by averaging percentages), rendered with two
//! decimals, halves up.
//!
//! Execution itself happens outside this crate (a JVM runs the tests and a
//! coverage tool attributes them); results arrive as run reports. For
//! desk-scale runs without a JVM, [`desk_run`] fabricates a report from
//! static checks: a test "passes" when it is well-formed (balanced, canonical
//! declaration, no hard assertion-arity defect) and mentions its focal method
//! by name.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focal_extract::FocalMethod;
use crate::generator::TestCase;
use crate::java_tokens::{lex, method_name_token, TokenKind};
use crate::verifier::{delimiters_balanced, lint_assertions, LintKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Fail,
    CompileError,
}

/// Outcome of executing one generated test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test_id: String,
    pub status: RunStatus,
    #[serde(default)]
    pub covered_focal_ids: Vec<String>,
}

/// All execution outcomes of a run. Tests absent from the report are treated
/// as not executed (and therefore not correct).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<RunRecord>,
}

impl RunReport {
    /// Enforce the report's structural invariants: unique test ids, and no
    /// coverage attributed to a test that failed to compile.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.test_id.as_str()) {
                return Err(Error::DuplicateTestId(r.test_id.clone()));
            }
            if r.status == RunStatus::CompileError && !r.covered_focal_ids.is_empty() {
                return Err(Error::CoveredCompileError(r.test_id.clone()));
            }
        }
        Ok(())
    }
}

/// One row of the summary: percentages plus the raw counts they came from,
/// so any row (and the totals) can be re-derived from the counts alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub correct_pct: f64,
    pub coverage_pct: f64,
    pub n_tests: usize,
    pub n_focal: usize,
    pub n_correct: usize,
    pub n_covered: usize,
}

/// Per-project rows plus a pooled totals row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub per_project: BTreeMap<String, MetricsRow>,
    pub totals: MetricsRow,
}

/// Round to two decimals, halves away from zero-ward ties upward
/// (40.053 → 40.05, 14.0909 → 14.09, 2.675 → 2.68).
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

/// Fraction of generated tests that pass and cover their own focal method.
pub fn correct_test_pct(tests: &[TestCase], report: &RunReport) -> Result<f64> {
    if tests.is_empty() {
        return Err(Error::NoTests);
    }
    report.validate()?;
    let known: HashSet<&str> = tests.iter().map(|t| t.id.as_str()).collect();
    for r in &report.records {
        if !known.contains(r.test_id.as_str()) {
            return Err(Error::UnknownTestId(r.test_id.clone()));
        }
    }
    Ok(count_correct(tests, report) as f64 / tests.len() as f64)
}

fn count_correct(tests: &[TestCase], report: &RunReport) -> usize {
    let by_id: HashMap<&str, &RunRecord> =
        report.records.iter().map(|r| (r.test_id.as_str(), r)).collect();
    tests
        .iter()
        .filter(|t| {
            by_id.get(t.id.as_str()).is_some_and(|r| {
                r.status == RunStatus::Pass && r.covered_focal_ids.contains(&t.focal_id)
            })
        })
        .count()
}

/// Fraction of focal methods covered by at least one passing test.
pub fn focal_coverage_pct(focal: &[FocalMethod], report: &RunReport) -> Result<f64> {
    if focal.is_empty() {
        return Err(Error::NoFocalMethods);
    }
    report.validate()?;
    Ok(count_covered(focal, report) as f64 / focal.len() as f64)
}

fn count_covered(focal: &[FocalMethod], report: &RunReport) -> usize {
    let covered: HashSet<&str> = report
        .records
        .iter()
        .filter(|r| r.status == RunStatus::Pass)
        .flat_map(|r| r.covered_focal_ids.iter().map(String::as_str))
        .collect();
    focal.iter().filter(|f| covered.contains(f.id.as_str())).count()
}

/// Relative percentage change of a measure against a baseline:
/// `(new − old) / old × 100`.
pub fn relative_improvement(m_new: f64, m_old: f64) -> Result<f64> {
    if m_old <= 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((m_new - m_old) / m_old * 100.0)
}

/// Per-project metric rows plus a totals row pooled from raw counts.
///
/// Rows carry two-decimal percentages. A project with focal methods but no
/// generated tests reports 0% correct rather than failing the whole summary;
/// the all-projects preconditions (some tests, some focal methods, ids
/// consistent) still error.
pub fn summarize(
    focal: &[FocalMethod],
    tests: &[TestCase],
    report: &RunReport,
) -> Result<MetricsSummary> {
    if tests.is_empty() {
        return Err(Error::NoTests);
    }
    if focal.is_empty() {
        return Err(Error::NoFocalMethods);
    }
    report.validate()?;
    let known: HashSet<&str> = tests.iter().map(|t| t.id.as_str()).collect();
    for r in &report.records {
        if !known.contains(r.test_id.as_str()) {
            return Err(Error::UnknownTestId(r.test_id.clone()));
        }
    }
    let project_of: HashMap<&str, &str> =
        focal.iter().map(|f| (f.id.as_str(), f.project.as_str())).collect();
    for t in tests {
        if !project_of.contains_key(t.focal_id.as_str()) {
            return Err(Error::UnknownFocalId(t.id.clone(), t.focal_id.clone()));
        }
    }

    let mut projects: BTreeMap<&str, (Vec<&FocalMethod>, Vec<&TestCase>)> = BTreeMap::new();
    for f in focal {
        projects.entry(f.project.as_str()).or_default().0.push(f);
    }
    for t in tests {
        projects.entry(project_of[t.focal_id.as_str()]).or_default().1.push(t);
    }

    let row = |focals: &[&FocalMethod], tests: &[&TestCase]| -> MetricsRow {
        let owned_f: Vec<FocalMethod> = focals.iter().map(|f| (*f).clone()).collect();
        let owned_t: Vec<TestCase> = tests.iter().map(|t| (*t).clone()).collect();
        let n_correct = count_correct(&owned_t, report);
        let n_covered = count_covered(&owned_f, report);
        MetricsRow {
            correct_pct: pct(n_correct, owned_t.len()),
            coverage_pct: pct(n_covered, owned_f.len()),
            n_tests: owned_t.len(),
            n_focal: owned_f.len(),
            n_correct,
            n_covered,
        }
    };

    let per_project: BTreeMap<String, MetricsRow> = projects
        .iter()
        .map(|(p, (fs, ts))| (p.to_string(), row(fs, ts)))
        .collect();
    let all_f: Vec<&FocalMethod> = focal.iter().collect();
    let all_t: Vec<&TestCase> = tests.iter().collect();
    let totals = row(&all_f, &all_t);
    Ok(MetricsSummary { per_project, totals })
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        round2(num as f64 / den as f64 * 100.0)
    }
}

/// Static stand-in for JVM execution at desk scale. A test passes when it is
/// well-formed — balanced delimiters, a canonical `@Test public void test…`
/// declaration, no hard assertion-arity defect — and its body mentions the
/// focal method's name; well-formed tests that never mention it fail; the
/// rest are compile errors. Coverage is attributed accordingly.
pub fn desk_run(tests: &[TestCase], focal: &[FocalMethod]) -> RunReport {
    let name_of: HashMap<&str, Option<String>> =
        focal.iter().map(|f| (f.id.as_str(), f.name())).collect();
    let records = tests
        .iter()
        .map(|t| {
            let status = desk_status(t, name_of.get(t.focal_id.as_str()).cloned().flatten());
            let covered_focal_ids = match status {
                RunStatus::Pass => vec![t.focal_id.clone()],
                _ => Vec::new(),
            };
            RunRecord { test_id: t.id.clone(), status, covered_focal_ids }
        })
        .collect();
    RunReport { records }
}

fn desk_status(test: &TestCase, focal_name: Option<String>) -> RunStatus {
    if !delimiters_balanced(&test.text) {
        return RunStatus::CompileError;
    }
    let stream = lex(&test.text);
    let Some(name_idx) = method_name_token(&stream) else {
        return RunStatus::CompileError;
    };
    let texts: Vec<&str> = stream.tokens.iter().map(|t| t.text.as_str()).collect();
    let canonical = name_idx >= 3
        && texts[name_idx - 3..name_idx] == ["@Test", "public", "void"]
        && texts[name_idx].to_lowercase().starts_with("test");
    if !canonical {
        return RunStatus::CompileError;
    }
    let hard_arity = lint_assertions(test)
        .iter()
        .any(|l| l.kind == LintKind::AssertionArity && !l.message.contains("possible"));
    if hard_arity {
        return RunStatus::CompileError;
    }
    let Some(name) = focal_name else {
        return RunStatus::Fail;
    };
    let mentions = stream.tokens[name_idx + 1..]
        .iter()
        .any(|t| t.kind == TokenKind::Identifier && t.text == name);
    if mentions {
        RunStatus::Pass
    } else {
        RunStatus::Fail
    }
}
