//! Command-line plumbing: every pipeline stage as a subcommand.
//!
//! Configuration comes from a TOML file (`--config`) overridden by flags;
//! all randomness flows from one seed. Stage outputs are written atomically,
//! JSONL with a schema header. Errors leave as one JSON object on stderr and
//! map to the exit taxonomy: 1 usage, 2 bad input data or format, 3 stage
//! failure. `A3KIT_WORKERS` caps stage-internal parallelism; output order is
//! the input order regardless of worker count.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::corpus_prep::{mask_pair, split_corpus, AssertPair, MaskedPair};
use crate::error::{Error, Result};
use crate::evaluator::{desk_run, summarize, MetricsSummary, RunRecord, RunReport};
use crate::focal_extract::{extract_focal_methods, FocalMethod};
use crate::generator::{beam_search, exec_generator, train_ngram, TestCase};
use crate::jsonl::{kinds, read_jsonl, write_json, write_jsonl};
use crate::report_convert::{convert_junit_xml, jacoco_covered_methods, NameResolver};
use crate::verifier::{verify, RepairReport};

#[derive(Debug, Parser)]
#[command(name = "a3kit", version, about = "Generate, repair, and score Java unit tests")]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed for every stage's randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract focal methods from Java source files.
    Extract {
        /// A .java file or a directory tree of them.
        #[arg(long)]
        input: PathBuf,
        /// Focal-method JSONL to write.
        #[arg(long)]
        output: PathBuf,
        /// Project label stored on each method (default: input file stem).
        #[arg(long)]
        project: Option<String>,
    },
    /// Mask focal/assertion pairs for masked-token pre-training.
    PrepMask {
        /// Assert-pair JSONL.
        #[arg(long)]
        input: PathBuf,
        /// Masked-pair JSONL to write.
        #[arg(long)]
        output: PathBuf,
        /// Fraction of maskable tokens to hide per pair.
        #[arg(long, value_name = "RATIO")]
        mask_ratio: Option<f64>,
    },
    /// Shuffle a corpus into train/valid/holdout id partitions.
    PrepSplit {
        /// JSONL (ids from each record's "id" field) or plain text (one
        /// record per line, ids minted from line numbers).
        #[arg(long)]
        input: PathBuf,
        /// Split-manifest JSON to write.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train_frac: f64,
        #[arg(long, default_value_t = 0.1)]
        valid_frac: f64,
    },
    /// Generate candidate tests for extracted focal methods.
    Generate {
        /// Focal-method JSONL.
        #[arg(long)]
        input: PathBuf,
        /// Test-case JSONL to write.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        gen: GenerateArgs,
    },
    /// Repair malformed tests and lint their assertions.
    Verify {
        /// Test-case JSONL.
        #[arg(long)]
        input: PathBuf,
        /// Repaired test-case JSONL to write.
        #[arg(long)]
        output: PathBuf,
        /// Also write one repair report per test here.
        #[arg(long)]
        repairs: Option<PathBuf>,
    },
    /// Score tests for correctness and focal-method coverage.
    Evaluate {
        /// Test-case JSONL.
        #[arg(long)]
        input: PathBuf,
        /// Focal-method JSONL.
        #[arg(long)]
        focal: PathBuf,
        /// Run-record JSONL from an execution harness; without it, outcomes
        /// come from the built-in static desk runner.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Metrics-summary JSON to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Run extract → generate → verify → evaluate in one go.
    Pipeline {
        /// A .java file or a directory tree of them.
        #[arg(long)]
        input: PathBuf,
        /// Directory for stage outputs (created if missing).
        #[arg(long)]
        output: PathBuf,
        /// Project label stored on each method (default: input file stem).
        #[arg(long)]
        project: Option<String>,
        /// Skip the verification stage.
        #[arg(long)]
        no_verify: bool,
        /// Run-record JSONL from an execution harness; without it, outcomes
        /// come from the built-in static desk runner.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        gen: GenerateArgs,
    },
    /// Convert JUnit (and optionally JaCoCo) XML into a run report.
    ConvertReport {
        /// JUnit XML file.
        #[arg(long)]
        input: PathBuf,
        /// Run-record JSONL to write.
        #[arg(long)]
        output: PathBuf,
        /// Generated test-case JSONL; testcase names resolve against it.
        #[arg(long)]
        tests: Option<PathBuf>,
        /// Focal-method JSONL (with --tests) for coverage naming.
        #[arg(long)]
        focal: Option<PathBuf>,
        /// JaCoCo XML; restricts coverage credit to methods it marks covered.
        #[arg(long)]
        coverage: Option<PathBuf>,
    },
}

/// Generation knobs shared by `generate` and `pipeline`.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Training corpus for the n-gram backend: one token sequence per line.
    #[arg(long)]
    pub train_corpus: Option<PathBuf>,
    /// Backend: "ngram" or "exec:<command>".
    #[arg(long)]
    pub generator: Option<String>,
    /// Beam width.
    #[arg(long)]
    pub beam: Option<usize>,
    /// Candidates kept per focal method.
    #[arg(long)]
    pub attempts: Option<usize>,
    /// Longest generated token sequence, end marker included.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Seconds allowed per exec-backend invocation.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorKind {
    Ngram,
    Exec(String),
}

pub fn parse_generator(s: &str) -> Result<GeneratorKind> {
    if s == "ngram" {
        return Ok(GeneratorKind::Ngram);
    }
    if let Some(cmd) = s.strip_prefix("exec:") {
        if !cmd.trim().is_empty() {
            return Ok(GeneratorKind::Exec(cmd.to_string()));
        }
    }
    Err(Error::InvalidConfig(format!(
        "generator must be \"ngram\" or \"exec:<command>\", got \"{s}\""
    )))
}

/// Entry point behind `main`: parse, dispatch, map errors to exit codes.
pub fn main_impl() -> ExitCode {
    init_workers();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "code": e.code(), "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}

/// Cap rayon's pool at $A3KIT_WORKERS when set; ignored if unparsable.
fn init_workers() {
    if let Ok(v) = std::env::var("A3KIT_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Extract { input, output, project } => {
            let focal = stage_extract(&input, project.as_deref())?;
            write_jsonl(&output, kinds::FOCAL_METHODS, &focal)
        }
        Command::PrepMask { input, output, mask_ratio } => {
            let ratio = mask_ratio.unwrap_or(config.mask_ratio);
            let pairs: Vec<AssertPair> = read_jsonl(&input, kinds::ASSERT_PAIRS)?;
            let masked = stage_mask(&pairs, ratio, config.seed)?;
            write_jsonl(&output, kinds::MASKED_PAIRS, &masked)
        }
        Command::PrepSplit { input, output, train_frac, valid_frac } => {
            let text = read_text(&input)?;
            let ids = record_ids(&text);
            let manifest = split_corpus(&ids, (train_frac, valid_frac), config.seed)?;
            write_json(&output, &manifest)
        }
        Command::Generate { input, output, gen } => {
            let focal: Vec<FocalMethod> = read_jsonl(&input, kinds::FOCAL_METHODS)?;
            let tests = stage_generate(&focal, &gen, &config)?;
            write_jsonl(&output, kinds::TEST_CASES, &tests)
        }
        Command::Verify { input, output, repairs } => {
            let tests: Vec<TestCase> = read_jsonl(&input, kinds::TEST_CASES)?;
            let (verified, reports) = stage_verify(&tests);
            write_jsonl(&output, kinds::TEST_CASES, &verified)?;
            match repairs {
                Some(path) => write_jsonl(&path, kinds::REPAIR_REPORTS, &reports),
                None => Ok(()),
            }
        }
        Command::Evaluate { input, focal, report, output } => {
            let tests: Vec<TestCase> = read_jsonl(&input, kinds::TEST_CASES)?;
            let focal: Vec<FocalMethod> = read_jsonl(&focal, kinds::FOCAL_METHODS)?;
            let report = load_or_desk_run(report.as_deref(), &tests, &focal)?;
            let summary = summarize(&focal, &tests, &report)?;
            write_json(&output, &summary)?;
            print_totals(&summary);
            Ok(())
        }
        Command::Pipeline { input, output, project, no_verify, report, gen } => {
            cmd_pipeline(&input, &output, project.as_deref(), no_verify, report.as_deref(), &gen, &config)
        }
        Command::ConvertReport { input, output, tests, focal, coverage } => {
            cmd_convert_report(
                &input,
                &output,
                tests.as_deref(),
                focal.as_deref(),
                coverage.as_deref(),
            )
        }
    }
}

// ---- stage bodies ----

fn stage_extract(input: &Path, project: Option<&str>) -> Result<Vec<FocalMethod>> {
    let project = match project {
        Some(p) => p.to_string(),
        None => input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".to_string()),
    };
    let mut focal = Vec::new();
    for path in java_files(input)? {
        let source = read_text(&path)?;
        let extraction = extract_focal_methods(&source, &project);
        for d in &extraction.diagnostics {
            eprintln!("warning: {}: {d}", path.display());
        }
        focal.extend(extraction.methods);
    }
    Ok(focal)
}

/// The .java files under `input` in sorted order, or `input` itself.
fn java_files(input: &Path) -> Result<Vec<PathBuf>> {
    let wrap = |source: std::io::Error| Error::ReadInput {
        path: input.display().to_string(),
        source,
    };
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    let mut stack = vec![input.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(wrap)? {
            let path = entry.map_err(wrap)?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "java") {
                files.push(path);
            }
        }
    }
    files.sort();
    Ok(files)
}

fn stage_mask(pairs: &[AssertPair], ratio: f64, seed: u64) -> Result<Vec<MaskedPair>> {
    let mut masked = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        match mask_pair(pair, ratio, seed.wrapping_add(i as u64)) {
            Ok(m) => masked.push(m),
            Err(Error::EmptyMaskable(msg)) => {
                eprintln!("warning: pair {i} skipped: {msg}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(masked)
}

/// One id per record: the "id" field when a line is a JSON object carrying
/// one, else the zero-padded record number. A leading schema header line is
/// not a record.
fn record_ids(text: &str) -> Vec<String> {
    let mut ids = Vec::new();
    let mut first = true;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: Option<serde_json::Value> = serde_json::from_str(line).ok();
        if std::mem::take(&mut first) {
            if let Some(serde_json::Value::Object(map)) = &value {
                if map.contains_key("schema_version") {
                    continue;
                }
            }
        }
        let id = value
            .as_ref()
            .and_then(|v| v.get("id"))
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("{:08}", ids.len()));
        ids.push(id);
    }
    ids
}

fn stage_generate(
    focal: &[FocalMethod],
    gen: &GenerateArgs,
    config: &PipelineConfig,
) -> Result<Vec<TestCase>> {
    let beam = gen.beam.unwrap_or(config.beam_width);
    let attempts = gen.attempts.unwrap_or(config.attempts);
    let max_len = gen.max_len.unwrap_or(config.max_len);
    if beam == 0 || attempts == 0 || max_len == 0 {
        return Err(Error::InvalidConfig(
            "beam, attempts, and max-len must be at least 1".to_string(),
        ));
    }
    let kind = match &gen.generator {
        Some(s) => parse_generator(s)?,
        None => GeneratorKind::Ngram,
    };
    match kind {
        GeneratorKind::Ngram => {
            let corpus_path = gen
                .train_corpus
                .clone()
                .or_else(|| config.path("train_corpus").map(Path::to_path_buf))
                .ok_or_else(|| {
                    Error::InvalidConfig(
                        "the ngram backend needs --train-corpus (or a train_corpus path in the config)"
                            .to_string(),
                    )
                })?;
            let corpus = load_token_corpus(&corpus_path)?;
            let model = train_ngram(&corpus, config.ngram_order)?;
            // beam must be wide enough to keep `attempts` candidates
            let k = beam.max(attempts);
            let per_focal: Vec<Vec<TestCase>> = focal
                .par_iter()
                .map(|f| beam_search(&model, f, k, max_len))
                .collect::<Result<_>>()?;
            Ok(per_focal.into_iter().flat_map(|v| v.into_iter().take(attempts)).collect())
        }
        GeneratorKind::Exec(cmd) => {
            let timeout = Duration::from_secs(gen.timeout);
            let mut tests = Vec::new();
            let mut failures = 0usize;
            let mut last_error = None;
            for f in focal {
                match exec_generator(&cmd, f, attempts, timeout) {
                    Ok(mut got) => tests.append(&mut got),
                    Err(e) => {
                        eprintln!("warning: {e}");
                        failures += 1;
                        last_error = Some(e);
                    }
                }
            }
            // partial failures are warnings; a total failure is a stage error
            if failures > 0 && tests.is_empty() {
                return Err(last_error.expect("failures imply an error"));
            }
            Ok(tests)
        }
    }
}

/// One whitespace-separated token sequence per non-empty line.
fn load_token_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn stage_verify(tests: &[TestCase]) -> (Vec<TestCase>, Vec<RepairReport>) {
    tests.par_iter().map(verify).unzip()
}

fn load_or_desk_run(
    report: Option<&Path>,
    tests: &[TestCase],
    focal: &[FocalMethod],
) -> Result<RunReport> {
    match report {
        Some(path) => {
            let records: Vec<RunRecord> = read_jsonl(path, kinds::RUN_RECORDS)?;
            Ok(RunReport { records })
        }
        None => Ok(desk_run(tests, focal)),
    }
}

fn print_totals(summary: &MetricsSummary) {
    let t = &summary.totals;
    println!(
        "correct: {}/{} ({:.2}%), coverage: {}/{} ({:.2}%)",
        t.n_correct, t.n_tests, t.correct_pct, t.n_covered, t.n_focal, t.coverage_pct
    );
}

#[allow(clippy::too_many_arguments)]
fn cmd_pipeline(
    input: &Path,
    output: &Path,
    project: Option<&str>,
    no_verify: bool,
    report: Option<&Path>,
    gen: &GenerateArgs,
    config: &PipelineConfig,
) -> Result<()> {
    fs::create_dir_all(output).map_err(|source| Error::WriteOutput {
        path: output.display().to_string(),
        source,
    })?;
    let stage_path = |stage: &str, default_name: &str| -> PathBuf {
        config
            .path(stage)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| output.join(default_name))
    };

    let focal = stage_extract(input, project)?;
    if focal.is_empty() {
        return Err(Error::NoFocalMethods);
    }
    write_jsonl(&stage_path("focal", "focal.jsonl"), kinds::FOCAL_METHODS, &focal)?;
    eprintln!("extract: {} focal methods", focal.len());

    let raw = stage_generate(&focal, gen, config)?;
    write_jsonl(&stage_path("tests_raw", "tests_raw.jsonl"), kinds::TEST_CASES, &raw)?;
    eprintln!("generate: {} candidate tests", raw.len());

    let tests = if no_verify {
        raw
    } else {
        let (verified, reports) = stage_verify(&raw);
        write_jsonl(&stage_path("repairs", "repairs.jsonl"), kinds::REPAIR_REPORTS, &reports)?;
        let repaired = reports.iter().filter(|r| !r.applied.is_empty()).count();
        eprintln!("verify: {repaired} of {} tests repaired", verified.len());
        verified
    };
    write_jsonl(&stage_path("tests", "tests.jsonl"), kinds::TEST_CASES, &tests)?;

    let run = load_or_desk_run(report, &tests, &focal)?;
    write_jsonl(&stage_path("report", "report.jsonl"), kinds::RUN_RECORDS, &run.records)?;

    let summary = summarize(&focal, &tests, &run)?;
    write_json(&stage_path("metrics", "metrics.json"), &summary)?;
    print_totals(&summary);
    Ok(())
}

fn cmd_convert_report(
    input: &Path,
    output: &Path,
    tests: Option<&Path>,
    focal: Option<&Path>,
    coverage: Option<&Path>,
) -> Result<()> {
    let resolver = match tests {
        Some(tests_path) => {
            let tests: Vec<TestCase> = read_jsonl(tests_path, kinds::TEST_CASES)?;
            let focal: Vec<FocalMethod> = match focal {
                Some(p) => read_jsonl(p, kinds::FOCAL_METHODS)?,
                None => Vec::new(),
            };
            Some(NameResolver::new(&tests, &focal))
        }
        None => None,
    };
    let covered = match coverage {
        Some(path) => {
            if resolver.is_none() {
                eprintln!("warning: --coverage ignored without --tests");
                None
            } else {
                Some(jacoco_covered_methods(&read_text(path)?)?)
            }
        }
        None => None,
    };
    let xml = read_text(input)?;
    let (report, warnings) = convert_junit_xml(&xml, resolver.as_ref(), covered.as_ref())?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    write_jsonl(output, kinds::RUN_RECORDS, &report.records)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|source| Error::ReadInput { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_values_parse_or_reject() {
        assert_eq!(parse_generator("ngram").unwrap(), GeneratorKind::Ngram);
        assert_eq!(
            parse_generator("exec:python3 gen.py --fast").unwrap(),
            GeneratorKind::Exec("python3 gen.py --fast".to_string())
        );
        assert_eq!(parse_generator("exec:").unwrap_err().code(), "invalid_config");
        assert_eq!(parse_generator("neural").unwrap_err().code(), "invalid_config");
    }

    #[test]
    fn record_ids_prefer_the_id_field_and_skip_headers() {
        let text = "{\"schema_version\":1,\"kind\":\"rows\"}\n\
                    {\"id\":\"alpha\",\"n\":1}\n\
                    {\"n\":2}\n\
                    plain text line\n";
        assert_eq!(record_ids(text), ["alpha", "00000001", "00000002"]);
    }

    #[test]
    fn record_ids_number_plain_corpus_lines_from_zero() {
        assert_eq!(record_ids("a b c\n\nd e f\n"), ["00000000", "00000001"]);
    }

    #[test]
    fn flags_override_config_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "seed = 3\nbeam_width = 9\n").unwrap();
        let cli = Cli::try_parse_from([
            "a3kit",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "42",
            "prep-split",
            "--input",
            "x",
            "--output",
            "y",
        ])
        .unwrap();
        let mut config = PipelineConfig::load(cli.config.as_deref().unwrap()).unwrap();
        assert_eq!(config.seed, 3);
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        assert_eq!(config.seed, 42);
        assert_eq!(config.beam_width, 9);
    }

    #[test]
    fn java_files_walks_directories_in_sorted_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("B.java"), "class B {}").unwrap();
        fs::write(dir.path().join("sub/A.java"), "class A {}").unwrap();
        fs::write(dir.path().join("notes.txt"), "not java").unwrap();
        let files = java_files(dir.path()).unwrap();
        let names: Vec<_> = files
            .iter()
            .map(|p| p.strip_prefix(dir.path()).unwrap().to_str().unwrap())
            .collect();
        assert_eq!(names, ["B.java", "sub/A.java"]);
    }

    #[test]
    fn empty_maskable_pairs_are_skipped_not_fatal() {
        let pairs = vec![
            AssertPair {
                focal_method: "int add(int a){ return a; }".to_string(),
                assertion: "assertEquals(1, add(1));".to_string(),
            },
            AssertPair {
                // comments lex to tokens but none are maskable
                focal_method: "// nothing".to_string(),
                assertion: "/* still nothing */".to_string(),
            },
        ];
        let masked = stage_mask(&pairs, 0.2, 7).unwrap();
        assert_eq!(masked.len(), 1);
    }
}
