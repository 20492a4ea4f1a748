//! Subprocess adapter: lets an external program (typically a fine-tuned
//! neural model behind a thin script) act as the candidate generator.
//!
//! Protocol, one invocation per focal method:
//! - request: a single line of UTF-8 JSON on the child's standard input:
//!   `{"focal": <FocalMethod>}`
//! - response: UTF-8 JSON on standard output: `{"candidates": ["...", ...]}`
//!
//! Any failure — spawn error, nonzero exit, malformed JSON, timeout — is
//! reported as an error for *this* focal method; callers record it and move
//! on to the next one.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::focal_extract::FocalMethod;

use super::TestCase;

pub const EXEC_GENERATOR_ID: &str = "exec";

#[derive(Deserialize)]
struct Response {
    candidates: Vec<String>,
}

/// Run `command` (program plus whitespace-separated arguments) for one focal
/// method and wrap at most `k` returned candidates as TestCases. The child is
/// killed when `timeout` elapses.
pub fn exec_generator(
    command: &str,
    focal: &FocalMethod,
    k: usize,
    timeout: Duration,
) -> Result<Vec<TestCase>> {
    let fail = |message: String| Error::ExecGenerator(format!("{}: {message}", focal.id));

    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| fail("empty command".to_string()))?;
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| fail(format!("spawn `{program}` failed: {e}")))?;

    let request = json!({ "focal": focal }).to_string();
    {
        let mut stdin = child.stdin.take().expect("stdin was piped");
        // a child that exits without reading produces EPIPE here; its exit
        // status is the interesting error, so don't fail on the write
        let _ = writeln!(stdin, "{request}");
    }

    let mut stdout = child.stdout.take().expect("stdout was piped");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut stdout, &mut buf).map(|_| buf)
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait().map_err(|e| fail(format!("wait failed: {e}")))? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(fail(format!("timed out after {:.1}s", timeout.as_secs_f64())));
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };

    let output = reader
        .join()
        .map_err(|_| fail("output reader panicked".to_string()))?
        .map_err(|e| fail(format!("reading output failed: {e}")))?;

    if !status.success() {
        return Err(fail(format!("exited with {status}")));
    }

    let response: Response = serde_json::from_slice(&output)
        .map_err(|e| fail(format!("malformed response JSON: {e}")))?;

    Ok(response
        .candidates
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(rank, text)| TestCase {
            id: format!("{}::{}::{}", focal.id, EXEC_GENERATOR_ID, rank),
            focal_id: focal.id.clone(),
            text,
            generator_id: EXEC_GENERATOR_ID.to_string(),
            logprob: None,
        })
        .collect())
}
