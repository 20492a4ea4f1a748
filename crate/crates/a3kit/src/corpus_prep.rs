//! Training-corpus preparation: masked-token pairs and corpus splits.
//!
//! Masking contract:
//! - the unit being masked is the token pair "focal method ++ separator ++
//!   assertion", joined with the literal [`crate::SEQUENCE_BOUNDARY`] token;
//! - `masked_indices` address tokens in that combined sequence (the separator
//!   occupies index `len(focal tokens)`);
//! - maskable tokens are every kind except comments and pre-existing masks;
//!   the separator itself is never maskable;
//! - the number of masked tokens is `max(1, round-half-up(ratio × maskable))`,
//!   a single shared budget across both halves;
//! - sampling is uniform without replacement and fully determined by `seed`
//!   (a fixed-increment Fisher–Yates over a ChaCha stream, so reruns are
//!   byte-identical across platforms);
//! - everything that is not masked — whitespace, comments, literals — is
//!   reproduced byte-for-byte, so `masked_input` differs from `target`
//!   exactly at the masked positions.
//!
//! Splitting contract: a seeded shuffle followed by contiguous slicing with
//! `floor(fraction × n)` sizes for train/valid and the remainder as holdout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::java_tokens::{lex, TokenKind, TokenStream};
use crate::SEQUENCE_BOUNDARY;

/// A focal method and one assertion (or whole test method) that exercises it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertPair {
    pub focal_method: String,
    pub assertion: String,
}

/// A masked training example. `target` is the unmasked join of the pair;
/// `masked_input` is the same text with the sampled tokens replaced by
/// `[MASK]`; `masked_indices` are the sampled token positions in the combined
/// token sequence, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPair {
    pub masked_input: String,
    pub target: String,
    pub masked_indices: Vec<usize>,
    pub seed: u64,
}

/// Disjoint id partitions covering the input corpus exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train_ids: Vec<String>,
    pub valid_ids: Vec<String>,
    pub holdout_ids: Vec<String>,
    pub seed: u64,
}

/// Round to the nearest integer, halves up.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `floor(fraction × n)`, guarded against IEEE under-representation
/// (`0.7 × 10` evaluates to `6.999…`, which must still floor to 7).
fn floor_fraction(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// How many tokens of a combined sequence with `maskable` maskable tokens get
/// masked at `ratio`. At least one, whenever anything is maskable at all.
pub fn mask_count(ratio: f64, maskable: usize) -> usize {
    round_half_up(ratio * maskable as f64).max(1)
}

/// Mask a uniform random sample of the pair's maskable tokens.
pub fn mask_pair(pair: &AssertPair, mask_ratio: f64, seed: u64) -> Result<MaskedPair> {
    if !(mask_ratio > 0.0 && mask_ratio <= 1.0) {
        return Err(Error::InvalidMaskRatio(mask_ratio));
    }
    let focal = lex(&pair.focal_method);
    let assertion = lex(&pair.assertion);
    let sep_index = focal.tokens.len();

    // combined-sequence indices that may be masked
    let mut maskable: Vec<usize> = Vec::new();
    let is_maskable = |k: TokenKind| !matches!(k, TokenKind::Comment | TokenKind::Mask);
    for (i, t) in focal.tokens.iter().enumerate() {
        if is_maskable(t.kind) {
            maskable.push(i);
        }
    }
    for (j, t) in assertion.tokens.iter().enumerate() {
        if is_maskable(t.kind) {
            maskable.push(sep_index + 1 + j);
        }
    }
    if maskable.is_empty() {
        return Err(Error::EmptyMaskable(
            "neither side lexes to any maskable token".to_string(),
        ));
    }

    let count = mask_count(mask_ratio, maskable.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = sample_without_replacement(&mut rng, &mut maskable, count);
    indices.sort_unstable();

    let target = format!("{} {SEQUENCE_BOUNDARY} {}", pair.focal_method, pair.assertion);
    let masked_focal = splice_masks(&focal, indices.iter().copied().filter(|&i| i < sep_index));
    let masked_assertion = splice_masks(
        &assertion,
        indices.iter().copied().filter(|&i| i > sep_index).map(|i| i - sep_index - 1),
    );
    let masked_input = format!("{masked_focal} {SEQUENCE_BOUNDARY} {masked_assertion}");

    Ok(MaskedPair { masked_input, target, masked_indices: indices, seed })
}

/// Partial Fisher–Yates: the first `count` slots end up holding a uniform
/// sample without replacement. Written out (rather than using a library
/// sampler) so the byte-exact output is pinned by this code alone.
fn sample_without_replacement(rng: &mut ChaCha8Rng, pool: &mut [usize], count: usize) -> Vec<usize> {
    let n = pool.len();
    let count = count.min(n);
    for i in 0..count {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool[..count].to_vec()
}

/// Reproduce a lexed string byte-for-byte, substituting `[MASK]` for the
/// tokens at the given (local) indices.
fn splice_masks(stream: &TokenStream, masked: impl Iterator<Item = usize>) -> String {
    let masked: std::collections::HashSet<usize> = masked.collect();
    let mut out = String::with_capacity(stream.source.len());
    let mut prev_end = 0;
    for (i, tok) in stream.tokens.iter().enumerate() {
        out.push_str(&stream.source[prev_end..tok.byte_offset]);
        if masked.contains(&i) {
            out.push_str(crate::java_tokens::MASK_TOKEN);
        } else {
            out.push_str(&tok.text);
        }
        prev_end = tok.byte_offset + tok.text.len();
    }
    out.push_str(&stream.source[prev_end..]);
    out
}

/// Split ids into train/valid/holdout by seeded shuffle and contiguous
/// slicing. Sizes are `floor(train × n)` and `floor(valid × n)`; every
/// remaining id lands in holdout.
pub fn split_corpus(ids: &[String], fractions: (f64, f64), seed: u64) -> Result<SplitManifest> {
    let (train, valid) = fractions;
    if ids.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(train > 0.0 && valid > 0.0 && train + valid <= 1.0) {
        return Err(Error::InvalidFractions(train, valid));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher–Yates, spelled out for cross-version stability
    for i in (1..shuffled.len()).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }
    let n = shuffled.len();
    let n_train = floor_fraction(train, n);
    let n_valid = floor_fraction(valid, n);
    let holdout_ids = shuffled.split_off(n_train + n_valid);
    let valid_ids = shuffled.split_off(n_train);
    Ok(SplitManifest { train_ids: shuffled, valid_ids, holdout_ids, seed })
}
