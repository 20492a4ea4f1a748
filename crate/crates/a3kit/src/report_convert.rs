//! Best-effort conversion of JVM harness XML into run reports.
//!
//! A real execution harness runs the generated tests on a JVM and reports
//! outcomes as JUnit XML (statuses) and JaCoCo XML (coverage). This module
//! converts those into [`RunReport`] records:
//!
//! - Each JUnit `<testcase>` becomes one record: `Pass`, or `Fail` when a
//!   `<failure>`/`<error>` child is present. `<skipped>` cases are omitted.
//!   Compile errors never appear in JUnit XML (the harness fails before
//!   producing it), so the converter never emits `CompileError`.
//! - Test identity: with a [`NameResolver`] (built from the generated test
//!   cases), the XML `name` attribute is matched against each test's declared
//!   method name; unresolvable or ambiguous names are skipped with a warning.
//!   Without a resolver, ids pass through as `classname::name`.
//! - Coverage: a passing resolved test is credited with covering its own
//!   focal method. When a JaCoCo covered-method set is supplied, that credit
//!   is kept only if the focal method's name appears in the set.
//!
//! Anything beyond this — per-test JaCoCo sessions, cross-focal coverage —
//! needs a richer harness, which can write run-record JSONL directly.

use std::collections::{BTreeSet, HashMap, HashSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::evaluator::{RunRecord, RunReport, RunStatus};
use crate::focal_extract::FocalMethod;
use crate::generator::TestCase;
use crate::java_tokens::{lex, method_name_token};

/// Looks up generated tests by their declared method name.
#[derive(Debug, Default)]
pub struct NameResolver {
    by_name: HashMap<String, Vec<ResolvedTest>>,
}

#[derive(Debug, Clone)]
struct ResolvedTest {
    test_id: String,
    focal_id: String,
    focal_name: Option<String>,
}

impl NameResolver {
    /// Index tests by method name; `focal` supplies focal-method names for
    /// coverage filtering and may be empty.
    pub fn new(tests: &[TestCase], focal: &[FocalMethod]) -> Self {
        let focal_names: HashMap<&str, Option<String>> =
            focal.iter().map(|f| (f.id.as_str(), f.name())).collect();
        let mut by_name: HashMap<String, Vec<ResolvedTest>> = HashMap::new();
        for t in tests {
            let stream = lex(&t.text);
            let Some(idx) = method_name_token(&stream) else { continue };
            by_name.entry(stream.tokens[idx].text.clone()).or_default().push(ResolvedTest {
                test_id: t.id.clone(),
                focal_id: t.focal_id.clone(),
                focal_name: focal_names.get(t.focal_id.as_str()).cloned().flatten(),
            });
        }
        NameResolver { by_name }
    }
}

/// Parse JUnit XML into a report. Returns the report plus one warning per
/// skipped testcase (unresolvable, ambiguous, or duplicated).
pub fn convert_junit_xml(
    xml: &str,
    resolver: Option<&NameResolver>,
    covered_methods: Option<&BTreeSet<String>>,
) -> Result<(RunReport, Vec<String>)> {
    let mut reader = Reader::from_str(xml);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut saw_suite = false;
    // Some while inside an open <testcase> element: (name, classname)
    let mut case: Option<(String, String)> = None;
    let mut failed = false;
    let mut skipped = false;

    loop {
        match reader.read_event() {
            Err(e) => {
                return Err(Error::SchemaMismatch {
                    path: "<junit xml>".to_string(),
                    message: format!("XML parse error: {e}"),
                })
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(el)) => match el.name().as_ref() {
                b"testsuite" | b"testsuites" => saw_suite = true,
                b"testcase" => {
                    case = Some(case_attrs(&el));
                    failed = false;
                    skipped = false;
                }
                b"failure" | b"error" if case.is_some() => failed = true,
                b"skipped" if case.is_some() => skipped = true,
                _ => {}
            },
            Ok(Event::Empty(el)) => match el.name().as_ref() {
                b"testsuite" | b"testsuites" => saw_suite = true,
                // self-closing testcase: no children, so it passed
                b"testcase" => {
                    let (name, classname) = case_attrs(&el);
                    finish_case(
                        &name, &classname, false, false, resolver, covered_methods,
                        &mut records, &mut warnings, &mut seen_ids,
                    );
                }
                b"failure" | b"error" if case.is_some() => failed = true,
                b"skipped" if case.is_some() => skipped = true,
                _ => {}
            },
            Ok(Event::End(el)) => {
                if el.name().as_ref() == b"testcase" {
                    if let Some((name, classname)) = case.take() {
                        finish_case(
                            &name, &classname, failed, skipped, resolver, covered_methods,
                            &mut records, &mut warnings, &mut seen_ids,
                        );
                    }
                }
            }
            Ok(_) => {}
        }
    }

    if !saw_suite && records.is_empty() {
        return Err(Error::SchemaMismatch {
            path: "<junit xml>".to_string(),
            message: "no <testsuite> or <testcase> elements found".to_string(),
        });
    }
    Ok((RunReport { records }, warnings))
}

fn case_attrs(el: &BytesStart) -> (String, String) {
    (
        attr(el, b"name").unwrap_or_default(),
        attr(el, b"classname").unwrap_or_default(),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_case(
    name: &str,
    classname: &str,
    failed: bool,
    skipped: bool,
    resolver: Option<&NameResolver>,
    covered_methods: Option<&BTreeSet<String>>,
    records: &mut Vec<RunRecord>,
    warnings: &mut Vec<String>,
    seen_ids: &mut HashSet<String>,
) {
    if skipped {
        return;
    }
    let status = if failed { RunStatus::Fail } else { RunStatus::Pass };
    let (test_id, focal) = match resolver {
        None => {
            let id = if classname.is_empty() {
                name.to_string()
            } else {
                format!("{classname}::{name}")
            };
            (id, None)
        }
        Some(r) => match r.by_name.get(name) {
            Some(matches) if matches.len() == 1 => {
                (matches[0].test_id.clone(), Some(matches[0].clone()))
            }
            Some(matches) => {
                warnings.push(format!(
                    "testcase \"{name}\" matches {} generated tests; skipped",
                    matches.len()
                ));
                return;
            }
            None => {
                warnings.push(format!(
                    "testcase \"{name}\" matches no generated test; skipped"
                ));
                return;
            }
        },
    };
    if !seen_ids.insert(test_id.clone()) {
        warnings.push(format!("duplicate testcase for id {test_id}; keeping the first"));
        return;
    }
    let covered_focal_ids = match (&status, &focal) {
        (RunStatus::Pass, Some(f)) => {
            let credit = match (covered_methods, &f.focal_name) {
                (None, _) => true,
                (Some(set), Some(focal_name)) => set.contains(focal_name),
                (Some(_), None) => false,
            };
            if credit {
                vec![f.focal_id.clone()]
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    };
    records.push(RunRecord { test_id, status, covered_focal_ids });
}

fn attr(el: &BytesStart, key: &[u8]) -> Option<String> {
    el.attributes()
        .flatten()
        .find(|a| a.key.as_ref() == key)
        .map(|a| String::from_utf8_lossy(&a.value).into_owned())
}

/// Names of methods a JaCoCo report marks as covered (METHOD counter > 0).
pub fn jacoco_covered_methods(xml: &str) -> Result<BTreeSet<String>> {
    let mut reader = Reader::from_str(xml);
    let mut covered = BTreeSet::new();
    let mut saw_report = false;
    let mut method: Option<String> = None;
    loop {
        match reader.read_event() {
            Err(e) => {
                return Err(Error::SchemaMismatch {
                    path: "<jacoco xml>".to_string(),
                    message: format!("XML parse error: {e}"),
                })
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(el)) | Ok(Event::Empty(el)) => match el.name().as_ref() {
                b"report" => saw_report = true,
                b"method" => method = attr(&el, b"name"),
                b"counter" => {
                    if let Some(name) = &method {
                        let is_method_counter =
                            attr(&el, b"type").is_some_and(|t| t == "METHOD");
                        let covered_count = attr(&el, b"covered")
                            .and_then(|v| v.parse::<u64>().ok())
                            .unwrap_or(0);
                        if is_method_counter && covered_count > 0 {
                            covered.insert(name.clone());
                        }
                    }
                }
                _ => {}
            },
            Ok(Event::End(el)) => {
                if el.name().as_ref() == b"method" {
                    method = None;
                }
            }
            Ok(_) => {}
        }
    }
    if !saw_report {
        return Err(Error::SchemaMismatch {
            path: "<jacoco xml>".to_string(),
            message: "no <report> element found".to_string(),
        });
    }
    Ok(covered)
}
