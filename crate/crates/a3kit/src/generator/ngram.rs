//! Reference scoring backend: an n-gram language model with add-one
//! smoothing, so the pipeline runs end to end at desk scale without any
//! neural machinery.
//!
//! Conventions:
//! - every training sentence is terminated with the end-of-sequence token
//!   (appended when absent) and left-padded with `n-1` begin-of-sequence
//!   markers;
//! - the emission vocabulary is the set of distinct corpus tokens plus
//!   end-of-sequence; the begin marker is never emitted;
//! - `P(tok | ctx) = (count(ctx, tok) + 1) / (count(ctx) + |V|)`;
//! - a context never seen in training yields the uniform distribution
//!   `1 / |V|`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::focal_extract::FocalMethod;
use crate::SEQUENCE_BOUNDARY;

use super::ScoringModel;

const BOS: &str = "<s>";

/// Add-one-smoothed n-gram model over test-method token sequences.
#[derive(Debug)]
pub struct NgramModel {
    order: usize,
    /// sorted emission vocabulary (distinct corpus tokens + end-of-sequence)
    vocab: Vec<String>,
    /// context (n-1 tokens, joined) → emitted token → count
    counts: HashMap<String, HashMap<String, u64>>,
    /// context → total emissions observed
    totals: HashMap<String, u64>,
}

/// Count n-grams over the corpus. Sentences are token sequences of whole
/// test methods; empty sentences contribute a bare end-of-sequence emission.
pub fn train_ngram(corpus: &[Vec<String>], order: usize) -> Result<NgramModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if order < 2 {
        return Err(Error::InvalidConfig(format!(
            "n-gram order must be at least 2, got {order}"
        )));
    }

    let mut vocab: Vec<String> = corpus
        .iter()
        .flatten()
        .filter(|t| t.as_str() != SEQUENCE_BOUNDARY)
        .cloned()
        .collect();
    vocab.push(SEQUENCE_BOUNDARY.to_string());
    vocab.sort_unstable();
    vocab.dedup();

    let mut counts: HashMap<String, HashMap<String, u64>> = HashMap::new();
    let mut totals: HashMap<String, u64> = HashMap::new();
    for sentence in corpus {
        let mut padded: Vec<&str> = vec![BOS; order - 1];
        padded.extend(sentence.iter().map(String::as_str));
        if padded.last() != Some(&SEQUENCE_BOUNDARY) {
            padded.push(SEQUENCE_BOUNDARY);
        }
        for window in padded.windows(order) {
            let ctx = window[..order - 1].join(" ");
            let tok = window[order - 1];
            *counts.entry(ctx.clone()).or_default().entry(tok.to_string()).or_default() += 1;
            *totals.entry(ctx).or_default() += 1;
        }
    }

    Ok(NgramModel { order, vocab, counts, totals })
}

impl NgramModel {
    /// The last `order-1` tokens of the prefix, left-padded with the begin
    /// marker when the prefix is shorter than the context window.
    fn context_key(&self, prefix: &[String]) -> String {
        let ctx_len = self.order - 1;
        let mut ctx: Vec<&str> = Vec::with_capacity(ctx_len);
        for _ in prefix.len()..ctx_len {
            ctx.push(BOS);
        }
        let start = prefix.len().saturating_sub(ctx_len);
        ctx.extend(prefix[start..].iter().map(String::as_str));
        ctx.join(" ")
    }

    /// Smoothed probability of `tok` after `prefix`.
    pub fn probability(&self, prefix: &[String], tok: &str) -> f64 {
        let v = self.vocab.len() as f64;
        let ctx = self.context_key(prefix);
        match self.totals.get(&ctx) {
            None => 1.0 / v,
            Some(&total) => {
                let c = self
                    .counts
                    .get(&ctx)
                    .and_then(|m| m.get(tok))
                    .copied()
                    .unwrap_or(0);
                (c as f64 + 1.0) / (total as f64 + v)
            }
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

impl ScoringModel for NgramModel {
    fn next_token_logprobs(&self, prefix: &[String], _focal: &FocalMethod) -> Vec<(String, f64)> {
        self.vocab
            .iter()
            .map(|tok| (tok.clone(), self.probability(prefix, tok).ln()))
            .collect()
    }

    fn generator_id(&self) -> String {
        format!("ngram{}", self.order)
    }
}
