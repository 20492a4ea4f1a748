//! Crate-wide error taxonomy.
//!
//! Every variant carries a stable machine-readable `code` (used verbatim in
//! the CLI's JSON error output) and maps onto one of two classes: data/format
//! problems in the inputs, or stage failures while doing the work. The CLI
//! turns those classes into exit codes 2 and 3 respectively.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // ---- data / format problems (CLI exit 2) ----
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("pair has no maskable tokens: {0}")]
    EmptyMaskable(String),
    #[error("invalid split fractions: train={0}, valid={1} (each must be > 0 and sum to <= 1)")]
    InvalidFractions(f64, f64),
    #[error("mask ratio {0} is outside (0, 1]")]
    InvalidMaskRatio(f64),
    #[error("no test cases supplied")]
    NoTests,
    #[error("no focal methods supplied")]
    NoFocalMethods,
    #[error("baseline metric is zero; relative improvement is undefined")]
    ZeroBaseline,
    #[error("report references unknown test id: {0}")]
    UnknownTestId(String),
    #[error("duplicate test id in report: {0}")]
    DuplicateTestId(String),
    #[error("test {0} references unknown focal id: {1}")]
    UnknownFocalId(String, String),
    #[error("compile-error record {0} must have empty covered_focal_ids")]
    CoveredCompileError(String),
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord { path: String, line: usize, message: String },
    #[error("{path}: unsupported schema header: {message}")]
    SchemaMismatch { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    ReadInput { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // ---- stage failures (CLI exit 3) ----
    #[error("scoring model returned an empty distribution for prefix of length {0}")]
    ModelDegenerate(usize),
    #[error("generator command failed: {0}")]
    ExecGenerator(String),
    #[error("cannot write {path}: {source}")]
    WriteOutput { path: String, source: std::io::Error },
}

impl Error {
    /// Stable machine-readable code for the CLI's JSON error channel.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyCorpus => "empty_corpus",
            Error::EmptyMaskable(_) => "empty_maskable",
            Error::InvalidFractions(_, _) => "invalid_fractions",
            Error::InvalidMaskRatio(_) => "invalid_mask_ratio",
            Error::NoTests => "no_tests",
            Error::NoFocalMethods => "no_focal_methods",
            Error::ZeroBaseline => "division_by_zero_baseline",
            Error::UnknownTestId(_) => "unknown_test_id",
            Error::DuplicateTestId(_) => "duplicate_test_id",
            Error::UnknownFocalId(_, _) => "unknown_focal_id",
            Error::CoveredCompileError(_) => "covered_compile_error",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::ReadInput { .. } => "read_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ModelDegenerate(_) => "model_degenerate",
            Error::ExecGenerator(_) => "exec_generator",
            Error::WriteOutput { .. } => "write_output",
        }
    }

    /// True for errors caused by input data or formats (CLI exit 2), false
    /// for failures within a stage (CLI exit 3).
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::ModelDegenerate(_) | Error::ExecGenerator(_) | Error::WriteOutput { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
