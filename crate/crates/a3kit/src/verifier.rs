//! Post-generation verification: three textual repair passes over generated
//! tests — delimiter balancing, test-name prefixing, declaration-signature
//! canonicalization — plus an assertion-arity lint.
//!
//! The passes are ordered parens → name → signature: balancing first makes
//! the declaration locatable, and the name must be final before the
//! signature pass rebuilds the declaration prefix around it. `verify` repeats
//! the cycle until a fixpoint (adversarial inputs exist where one pass's fix
//! exposes work for an earlier pass — e.g. dropping an unbalanced annotation
//! argument list strands a previously appended closer), so its output always
//! re-verifies clean. Ordinary inputs settle in one round.
//!
//! Guarantees on the output:
//! - delimiter tokens balance, with every prefix closing no more than it
//!   opened (string/char literals and comments shielded by the lexer);
//! - when a method declaration is found, its name starts with `test`
//!   (case-insensitive check, conservative rewrite) and the declaration
//!   opens with exactly `@Test public void` — unless the method declares a
//!   non-void return type, which is kept and noted rather than broken;
//! - everything from the declaration's name token onward is preserved
//!   byte-for-byte by the name and signature passes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::generator::TestCase;
use crate::java_tokens::{lex, method_name_token, Token, TokenKind, TokenStream};

/// Which repair passes changed the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    ParenRepair,
    NameRepair,
    SignatureRepair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintKind {
    AssertionArity,
    UnknownAssertion,
    /// Reserved for callers that cross-check generated tests against focal
    /// visibility; the textual passes here never emit it.
    PrivateAccessSuspect,
}

/// A diagnostic anchored to a token of the (repaired) test text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lint {
    pub kind: LintKind,
    pub message: String,
    pub token_offset: usize,
}

/// What `verify` did to one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub test_id: String,
    pub applied: Vec<RepairKind>,
    pub diagnostics: Vec<Lint>,
    /// human-readable remarks: dropped tokens, kept non-void return types,
    /// undetectable declarations
    pub notes: Vec<String>,
    pub before: String,
    pub after: String,
}

// ---------------------------------------------------------------------------
// pass 1: delimiter balance
// ---------------------------------------------------------------------------

/// Balance `(` `[` `{` via push-pop over the lexed delimiter tokens:
/// unmatched closers are deleted, unmatched openers get closers appended at
/// the end in LIFO order. Balanced input comes back byte-identical.
pub fn repair_parentheses(test: &TestCase) -> TestCase {
    with_text(test, paren_pass(&test.text, &mut Vec::new()))
}

fn closer_for(open: &str) -> &'static str {
    match open {
        "(" => ")",
        "[" => "]",
        "{" => "}",
        _ => unreachable!("only open delimiters are stacked"),
    }
}

fn paren_pass(text: &str, notes: &mut Vec<String>) -> String {
    let mut current = text.to_string();

    // Deleting a closer can merge surrounding characters into a new comment
    // that swallows later delimiters, so re-scan until no deletions remain.
    let stack = loop {
        let stream = lex(&current);
        let mut stack: Vec<usize> = Vec::new(); // indices of open delimiters
        let mut doomed: Vec<usize> = Vec::new(); // indices of unmatched closers
        for (i, t) in stream.tokens.iter().enumerate() {
            if t.kind != TokenKind::Delimiter {
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => stack.push(i),
                closer => {
                    let matches = stack
                        .last()
                        .is_some_and(|&o| closer_for(&stream.tokens[o].text) == closer);
                    if matches {
                        stack.pop();
                    } else {
                        doomed.push(i);
                    }
                }
            }
        }
        if doomed.is_empty() {
            break stack.iter().map(|&o| stream.tokens[o].text.clone()).collect::<Vec<_>>();
        }
        current = splice_excluding(&stream, &doomed.into_iter().collect());
    };

    if stack.is_empty() {
        return current;
    }

    // Appended closers must not land inside a trailing comment or literal.
    match tail_state(&lex(&current)) {
        Tail::Clean => {}
        Tail::NeedsNewline => {
            current.push('\n');
            notes.push(
                "started a new line so appended delimiters escape a trailing comment or literal"
                    .to_string(),
            );
        }
        Tail::NeedsCommentSeal => {
            current.push_str("*/");
            notes.push("sealed an unterminated block comment before appending delimiters".to_string());
        }
    }
    for open in stack.iter().rev() {
        current.push_str(closer_for(open));
    }
    current
}

/// Whether the text's delimiter tokens nest correctly (every closer matches
/// the most recent opener, nothing left open). Literals and comments are
/// shielded by the lexer. This is `repair_parentheses`'s postcondition.
pub fn delimiters_balanced(text: &str) -> bool {
    let mut stack: Vec<&'static str> = Vec::new();
    for t in lex(text).tokens {
        if t.kind != TokenKind::Delimiter {
            continue;
        }
        match t.text.as_str() {
            open @ ("(" | "[" | "{") => stack.push(closer_for(open)),
            closer => {
                if stack.pop() != Some(closer) {
                    return false;
                }
            }
        }
    }
    stack.is_empty()
}

enum Tail {
    Clean,
    NeedsNewline,
    NeedsCommentSeal,
}

/// Would text appended at the end be swallowed by the final token?
fn tail_state(stream: &TokenStream) -> Tail {
    let Some(last) = stream.tokens.last() else {
        return Tail::Clean;
    };
    if last.byte_offset + last.text.len() != stream.source.len() {
        return Tail::Clean; // a gap (some whitespace) already ends the token
    }
    match last.kind {
        TokenKind::Comment if last.text.starts_with("//") => Tail::NeedsNewline,
        TokenKind::Comment if last.text.len() < 4 || !last.text.ends_with("*/") => {
            Tail::NeedsCommentSeal
        }
        TokenKind::StringLit | TokenKind::CharLit if !quoted_is_terminated(&last.text) => {
            Tail::NeedsNewline
        }
        _ => Tail::Clean,
    }
}

/// The lexer stops a quoted literal at the first unescaped closing quote, so
/// finding one after the opener means the literal is closed.
fn quoted_is_terminated(text: &str) -> bool {
    let mut chars = text.chars();
    let Some(quote) = chars.next() else {
        return true;
    };
    let mut escaped = false;
    for c in chars {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// pass 2: name prefix
// ---------------------------------------------------------------------------

/// Ensure the declared method name starts with `test` (case-insensitive):
/// a non-conforming name is rewritten to `test<OriginalName>` at the
/// declaration site only — call sites in the body keep their spelling.
pub fn repair_name(test: &TestCase) -> TestCase {
    with_text(test, name_pass(&test.text, &mut Vec::new()))
}

fn name_pass(text: &str, notes: &mut Vec<String>) -> String {
    let stream = lex(text);
    let Some(idx) = method_name_token(&stream) else {
        notes.push("no method declaration found; name not checked".to_string());
        return text.to_string();
    };
    let name = &stream.tokens[idx].text;
    let head: String = name.chars().take(4).flat_map(char::to_lowercase).collect();
    if head == "test" {
        return text.to_string();
    }
    splice_replace(&stream, idx, &format!("test{name}"))
}

// ---------------------------------------------------------------------------
// pass 3: declaration signature
// ---------------------------------------------------------------------------

/// Canonicalize everything before the declaration's name token to
/// `@Test public void` (the return type survives if it is not void, with a
/// note). Leading comments, extra annotations, and extra modifiers are
/// dropped with notes; bytes from the name token onward are untouched.
pub fn repair_signature(test: &TestCase) -> TestCase {
    with_text(test, signature_pass(&test.text, &mut Vec::new()))
}

const DROPPED_MODIFIERS: &[&str] =
    &["static", "final", "abstract", "synchronized", "native", "strictfp", "default"];

fn signature_pass(text: &str, notes: &mut Vec<String>) -> String {
    let stream = lex(text);
    let Some(name_idx) = method_name_token(&stream) else {
        notes.push("no method declaration found; signature not checked".to_string());
        return text.to_string();
    };

    // classify the declaration prefix
    let mut return_type: Vec<&Token> = Vec::new();
    let mut saw_test_annotation = false;
    let mut i = 0;
    while i < name_idx {
        let t = &stream.tokens[i];
        match t.kind {
            TokenKind::Comment => {
                notes.push("dropped a comment before the declaration".to_string());
            }
            TokenKind::Annotation => {
                if t.text.eq_ignore_ascii_case("@Test") {
                    saw_test_annotation = true;
                } else {
                    notes.push(format!("dropped annotation `{}` from the declaration", t.text));
                }
                // an argument list belongs to the annotation; consume it too
                if let Some(skipped) = annotation_arguments(&stream.tokens, i + 1, name_idx) {
                    if t.text.eq_ignore_ascii_case("@Test") {
                        notes.push("dropped arguments of the @Test annotation".to_string());
                    }
                    i = skipped;
                    continue;
                }
            }
            TokenKind::Keyword if t.text == "public" => {}
            TokenKind::Keyword if t.text == "private" || t.text == "protected" => {
                notes.push(format!("replaced `{}` with `public`", t.text));
            }
            TokenKind::Keyword if DROPPED_MODIFIERS.contains(&t.text.as_str()) => {
                notes.push(format!("dropped modifier `{}` from the declaration", t.text));
            }
            TokenKind::Keyword if t.text == "void" => return_type.push(t),
            TokenKind::Keyword | TokenKind::Identifier | TokenKind::Operator => {
                // return type tokens: primitive keywords, type names, generics
                return_type.push(t);
            }
            TokenKind::Delimiter if t.text == "[" || t.text == "]" => return_type.push(t),
            _ => notes.push(format!("dropped `{}` from the declaration", t.text)),
        }
        i += 1;
    }

    let type_texts: Vec<&str> = return_type.iter().map(|t| t.text.as_str()).collect();
    let keeps_nonvoid = !type_texts.is_empty() && type_texts != ["void"];
    if keeps_nonvoid {
        notes.push(format!(
            "kept non-void return type `{}` (forcing void would break the body)",
            type_span(&stream, &return_type)
        ));
    }

    // already canonical? leave the bytes alone
    let leading: Vec<&str> =
        stream.tokens[..name_idx].iter().map(|t| t.text.as_str()).collect();
    let mut canonical: Vec<&str> = vec!["@Test", "public"];
    let type_str = if type_texts.is_empty() { "void".to_string() } else { type_span(&stream, &return_type) };
    if keeps_nonvoid {
        canonical.push(&type_str);
    } else {
        canonical.push("void");
    }
    let mut expected: Vec<&str> = vec!["@Test", "public"];
    if type_texts.is_empty() {
        expected.push("void");
    } else {
        expected.extend(&type_texts);
    }
    if leading == expected && saw_test_annotation {
        return text.to_string();
    }

    let name_tok = &stream.tokens[name_idx];
    format!("{} {}", canonical.join(" "), &stream.source[name_tok.byte_offset..])
}

/// If the tokens starting at `from` open an annotation argument list, return
/// the index just past its matching closer (capped at `limit`).
fn annotation_arguments(tokens: &[Token], from: usize, limit: usize) -> Option<usize> {
    let first = tokens.get(from)?;
    if first.kind != TokenKind::Delimiter || first.text != "(" {
        return None;
    }
    let mut depth = 0i64;
    for (i, t) in tokens.iter().enumerate().take(limit).skip(from) {
        if t.kind != TokenKind::Delimiter {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            _ => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
        }
    }
    Some(limit) // unclosed argument list: consume up to the name
}

/// Original bytes spanning a run of consecutive tokens (so `List<String>`
/// keeps its spelling); non-consecutive picks are space-joined.
fn type_span(stream: &TokenStream, tokens: &[&Token]) -> String {
    let consecutive = tokens.windows(2).all(|w| {
        w[0].byte_offset + w[0].text.len() <= w[1].byte_offset
    });
    let contiguous_in_stream = {
        let mut idxs: Vec<usize> = tokens
            .iter()
            .map(|t| stream.tokens.iter().position(|s| std::ptr::eq(s, *t)).unwrap())
            .collect();
        idxs.dedup();
        idxs.windows(2).all(|w| w[1] == w[0] + 1)
    };
    if consecutive && contiguous_in_stream && !tokens.is_empty() {
        let first = tokens[0];
        let last = tokens[tokens.len() - 1];
        stream.source[first.byte_offset..last.byte_offset + last.text.len()].to_string()
    } else {
        tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }
}

// ---------------------------------------------------------------------------
// lint
// ---------------------------------------------------------------------------

/// Known JUnit4 assertions whose canonical form takes two arguments; the
/// three-argument form exists (message or floating-point delta) but cannot be
/// told apart textually, so it is flagged as merely "possible".
const BINARY_ASSERTS: &[&str] =
    &["assertEquals", "assertNotEquals", "assertSame", "assertNotSame", "assertArrayEquals"];
/// Assertions taking one argument, or two with a leading message.
const UNARY_ASSERTS: &[&str] = &["assertTrue", "assertFalse", "assertNull", "assertNotNull"];

/// Flag assertion calls with impossible argument counts, the deprecated
/// `assertThat`, and `assert…` calls that are not in the JUnit4 API.
pub fn lint_assertions(test: &TestCase) -> Vec<Lint> {
    lint_text(&test.text)
}

fn lint_text(text: &str) -> Vec<Lint> {
    let stream = lex(text);
    let toks = &stream.tokens;
    let mut lints = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Identifier {
            continue;
        }
        let Some(open) = toks[i + 1..]
            .iter()
            .position(|n| n.kind != TokenKind::Comment)
            .map(|p| i + 1 + p)
            .filter(|&p| toks[p].kind == TokenKind::Delimiter && toks[p].text == "(")
        else {
            continue;
        };
        let name = t.text.as_str();
        let lint = |kind: LintKind, message: String| Lint { kind, message, token_offset: i };

        if name == "assertThat" {
            lints.push(lint(
                LintKind::UnknownAssertion,
                "assertThat is deprecated in JUnit 4; prefer specific assertions".to_string(),
            ));
        } else if BINARY_ASSERTS.contains(&name) {
            match count_call_args(toks, open) {
                2 => {}
                3 => lints.push(lint(
                    LintKind::AssertionArity,
                    format!(
                        "possible arity problem: {name} with 3 arguments is only valid \
                         as the message or floating-point-delta form"
                    ),
                )),
                n => lints.push(lint(
                    LintKind::AssertionArity,
                    format!("{name} expects 2 arguments, found {n}"),
                )),
            }
        } else if UNARY_ASSERTS.contains(&name) {
            let n = count_call_args(toks, open);
            if n != 1 && n != 2 {
                lints.push(lint(
                    LintKind::AssertionArity,
                    format!("{name} expects 1 argument (or 2 with a message), found {n}"),
                ));
            }
        } else if name == "fail" {
            let n = count_call_args(toks, open);
            if n > 1 {
                lints.push(lint(
                    LintKind::AssertionArity,
                    format!("fail expects at most 1 argument, found {n}"),
                ));
            }
        } else if name.starts_with("assert") {
            lints.push(lint(
                LintKind::UnknownAssertion,
                format!("{name} is not a JUnit 4 assertion"),
            ));
        }
    }
    lints
}

/// Top-level argument count of a call, given the index of its opening paren.
/// Commas nested in any bracket pair don't count; an unclosed call is counted
/// to end of input.
fn count_call_args(toks: &[Token], open: usize) -> usize {
    let mut depth = 1i64;
    let mut commas = 0usize;
    let mut any = false;
    for t in &toks[open + 1..] {
        match (t.kind, t.text.as_str()) {
            (TokenKind::Delimiter, "(" | "[" | "{") => {
                depth += 1;
                any = true;
            }
            (TokenKind::Delimiter, _) => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
                any = true;
            }
            (TokenKind::Operator, ",") if depth == 1 => {
                commas += 1;
                any = true;
            }
            (TokenKind::Comment, _) => {}
            _ => any = true,
        }
    }
    if any {
        commas + 1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// composite
// ---------------------------------------------------------------------------

/// Run all three repairs (to a fixpoint) and the lint; the report records
/// which passes changed the text, every lint, and explanatory notes.
pub fn verify(test: &TestCase) -> (TestCase, RepairReport) {
    let before = test.text.clone();
    let mut current = before.clone();
    let mut applied: Vec<RepairKind> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let record = |applied: &mut Vec<RepairKind>, kind: RepairKind| {
        if !applied.contains(&kind) {
            applied.push(kind);
        }
    };

    for _round in 0..8 {
        let mut changed = false;
        let pass_sequence: [(RepairKind, fn(&str, &mut Vec<String>) -> String); 3] = [
            (RepairKind::ParenRepair, paren_pass),
            (RepairKind::NameRepair, name_pass),
            (RepairKind::SignatureRepair, signature_pass),
        ];
        for (kind, pass) in pass_sequence {
            let next = pass(&current, &mut notes);
            if next != current {
                record(&mut applied, kind);
                current = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut seen = HashSet::new();
    notes.retain(|n| seen.insert(n.clone()));

    let diagnostics = lint_text(&current);
    let repaired = TestCase { text: current.clone(), ..test.clone() };
    let report = RepairReport {
        test_id: test.id.clone(),
        applied,
        diagnostics,
        notes,
        before,
        after: current,
    };
    (repaired, report)
}

fn with_text(test: &TestCase, text: String) -> TestCase {
    TestCase { text, ..test.clone() }
}

/// Rebuild the source, skipping the given token indices (bytes between
/// tokens are preserved).
fn splice_excluding(stream: &TokenStream, drop: &HashSet<usize>) -> String {
    let mut out = String::with_capacity(stream.source.len());
    let mut prev_end = 0;
    for (i, tok) in stream.tokens.iter().enumerate() {
        out.push_str(&stream.source[prev_end..tok.byte_offset]);
        if !drop.contains(&i) {
            out.push_str(&tok.text);
        }
        prev_end = tok.byte_offset + tok.text.len();
    }
    out.push_str(&stream.source[prev_end..]);
    out
}

/// Rebuild the source with one token's text replaced.
fn splice_replace(stream: &TokenStream, index: usize, replacement: &str) -> String {
    let tok = &stream.tokens[index];
    let mut out = String::with_capacity(stream.source.len() + replacement.len());
    out.push_str(&stream.source[..tok.byte_offset]);
    out.push_str(replacement);
    out.push_str(&stream.source[tok.byte_offset + tok.text.len()..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tc(text: &str) -> TestCase {
        TestCase {
            id: "p/C/void f()::ngram3::0".to_string(),
            focal_id: "p/C/void f()".to_string(),
            text: text.to_string(),
            generator_id: "ngram3".to_string(),
            logprob: None,
        }
    }

    /// Delimiter sequence is balanced, with no prefix closing more than it
    /// opened (the oracle used to freeze the paren-repair expectations).
    fn balanced(text: &str) -> bool {
        let mut stack: Vec<&str> = Vec::new();
        for t in lex(text).tokens {
            if t.kind != TokenKind::Delimiter {
                continue;
            }
            match t.text.as_str() {
                "(" | "[" | "{" => stack.push(match t.text.as_str() {
                    "(" => ")",
                    "[" => "]",
                    _ => "}",
                }),
                closer => {
                    if stack.pop() != Some(closer) {
                        return false;
                    }
                }
            }
        }
        stack.is_empty()
    }

    // ---- paren repair ----

    #[test]
    fn appends_one_missing_brace() {
        let out = repair_parentheses(&tc("@Test public void testSum(){ assertEquals(30, r);"));
        assert_eq!(out.text, "@Test public void testSum(){ assertEquals(30, r);}");
    }

    #[test]
    fn balanced_input_is_untouched() {
        let text = "@Test\npublic void testSum(){\n    double r = c.sum(1, 2);\n    assertEquals(3, r); // checks the sum\n}";
        assert_eq!(repair_parentheses(&tc(text)).text, text);
    }

    #[test]
    fn lifo_closers_for_nested_openers() {
        assert_eq!(repair_parentheses(&tc("f(( {")).text, "f(( {}))");
    }

    #[test]
    fn unmatched_closers_are_deleted() {
        assert_eq!(repair_parentheses(&tc("f());")).text, "f();");
        assert_eq!(repair_parentheses(&tc("} x()")).text, " x()");
        // mismatched pair: the closer goes, the opener gets its mate
        assert_eq!(repair_parentheses(&tc("( }")).text, "( )");
    }

    #[test]
    fn literals_and_comments_shield_delimiters() {
        let text = "void t(){ String s = \"(((\"; // ))) not delimiters\n}";
        assert_eq!(repair_parentheses(&tc(text)).text, text);
    }

    #[test]
    fn appended_closers_escape_a_trailing_line_comment() {
        let out = repair_parentheses(&tc("void t(){ // truncated"));
        assert_eq!(out.text, "void t(){ // truncated\n}");
        assert!(balanced(&out.text));
    }

    #[test]
    fn appended_closers_escape_an_unterminated_string() {
        let out = repair_parentheses(&tc("void t(){ String s = \"oops"));
        assert!(balanced(&out.text));
        assert!(out.text.ends_with("\n}"));
    }

    #[test]
    fn unterminated_block_comment_is_sealed_before_appending() {
        let out = repair_parentheses(&tc("void t(){ /* cut off"));
        assert!(balanced(&out.text));
        assert!(out.text.contains("*/"));
    }

    // ---- name repair ----

    #[test]
    fn read_becomes_testread() {
        let out = repair_name(&tc("public void read(){ obj.read(); }"));
        assert_eq!(out.text, "public void testread(){ obj.read(); }");
    }

    #[test]
    fn already_prefixed_names_pass() {
        for text in [
            "public void testAddition(){}",
            "public void TestRead(){}",
            "public void TESTread(){}",
            "public void tEsTy(){}",
        ] {
            assert_eq!(repair_name(&tc(text)).text, text);
        }
    }

    #[test]
    fn short_names_get_the_prefix() {
        assert_eq!(repair_name(&tc("void go(){}")).text, "void testgo(){}");
    }

    #[test]
    fn no_declaration_means_no_rename() {
        let text = "int x = read();"; // depth-0 '{' never appears, but read( is a call...
        // a statement list has no top-level declaration: lexer sees read( at depth 0
        // and treats it as the declaration candidate; a bare expression keeps its name
        let out = repair_name(&tc("x + y"));
        assert_eq!(out.text, "x + y");
        let _ = text;
    }

    // ---- signature repair ----

    #[test]
    fn missing_public_is_inserted() {
        let out = repair_signature(&tc("@Test void testisLenient(){}"));
        assert_eq!(out.text, "@Test public void testisLenient(){}");
    }

    #[test]
    fn canonical_declaration_is_untouched() {
        let text = "@Test public void testRead(){}";
        assert_eq!(repair_signature(&tc(text)).text, text);
    }

    #[test]
    fn missing_annotation_is_prepended() {
        let out = repair_signature(&tc("public void testRead(){}"));
        assert_eq!(out.text, "@Test public void testRead(){}");
    }

    #[test]
    fn private_becomes_public() {
        let out = repair_signature(&tc("@Test private void testX(){}"));
        assert_eq!(out.text, "@Test public void testX(){}");
    }

    #[test]
    fn modifiers_are_dropped_with_a_note() {
        let test = tc("@Test public static final void testX(){}");
        let (out, report) = verify(&test);
        assert_eq!(out.text, "@Test public void testX(){}");
        assert!(report.notes.iter().any(|n| n.contains("static")));
        assert!(report.notes.iter().any(|n| n.contains("final")));
    }

    #[test]
    fn nonvoid_return_type_is_kept_with_a_note() {
        let test = tc("String testName(){ return \"x\"; }");
        let (out, report) = verify(&test);
        assert_eq!(out.text, "@Test public String testName(){ return \"x\"; }");
        assert!(report.notes.iter().any(|n| n.contains("non-void")));
    }

    #[test]
    fn lowercase_test_annotation_is_normalized() {
        let out = repair_signature(&tc("@test public void testX(){}"));
        assert_eq!(out.text, "@Test public void testX(){}");
    }

    #[test]
    fn foreign_annotations_are_dropped() {
        let test = tc("@Ignore @Test public void testX(){}");
        let (out, report) = verify(&test);
        assert_eq!(out.text, "@Test public void testX(){}");
        assert!(report.notes.iter().any(|n| n.contains("@Ignore")));
    }

    #[test]
    fn annotation_arguments_are_consumed_with_the_annotation() {
        let out = repair_signature(&tc("@Tag(\"slow\") public void testX(){}"));
        assert_eq!(out.text, "@Test public void testX(){}");
    }

    // ---- lint ----

    fn lint_kinds(text: &str) -> Vec<LintKind> {
        lint_text(text).into_iter().map(|l| l.kind).collect()
    }

    #[test]
    fn four_argument_assert_equals_is_flagged() {
        let lints = lint_text("@Test public void testX(){ assertEquals(a, b, c, d); }");
        assert_eq!(lints.len(), 1);
        assert_eq!(lints[0].kind, LintKind::AssertionArity);
        assert!(lints[0].message.contains("found 4"));
        assert!(!lints[0].message.contains("possible"));
    }

    #[test]
    fn canonical_two_argument_form_is_silent() {
        assert!(lint_text("@Test public void testX(){ assertEquals(30, result); }").is_empty());
    }

    #[test]
    fn three_argument_form_is_flagged_as_possible() {
        let lints = lint_text("assertEquals(1.0, res, 0.001);");
        assert_eq!(lints.len(), 1);
        assert!(lints[0].message.contains("possible"));
    }

    #[test]
    fn assert_that_is_deprecated() {
        let lints = lint_text("assertThat(x, is(y));");
        assert_eq!(lints.len(), 1);
        assert_eq!(lints[0].kind, LintKind::UnknownAssertion);
        assert!(lints[0].message.contains("deprecated"));
    }

    #[test]
    fn unknown_assert_calls_are_flagged() {
        assert_eq!(lint_kinds("assertWidget(a);"), vec![LintKind::UnknownAssertion]);
        // non-assert calls stay silent
        assert!(lint_text("doStuff(a, b, c, d);").is_empty());
    }

    #[test]
    fn unary_asserts_allow_message_form() {
        assert!(lint_text("assertTrue(x); assertNull(\"msg\", y); fail(); fail(\"m\");").is_empty());
        let lints = lint_text("assertTrue(a, b, c); fail(a, b);");
        assert_eq!(lints.len(), 2);
    }

    #[test]
    fn nested_commas_do_not_count() {
        assert!(lint_text("assertEquals(f(a, b), g(c, d));").is_empty());
    }

    #[test]
    fn token_offset_addresses_the_call_identifier() {
        let text = "x; assertEquals(a, b, c, d);";
        let lints = lint_text(text);
        let toks = lex(text).tokens;
        assert_eq!(toks[lints[0].token_offset].text, "assertEquals");
    }

    // ---- composite ----

    #[test]
    fn all_three_defects_repair_in_one_verify() {
        // unbalanced + unprefixed name + missing annotation and visibility
        let (out, report) = verify(&tc("void read(){ obj.read();"));
        assert_eq!(out.text, "@Test public void testread(){ obj.read();}");
        assert_eq!(
            report.applied,
            vec![RepairKind::ParenRepair, RepairKind::NameRepair, RepairKind::SignatureRepair]
        );
        assert_eq!(report.before, "void read(){ obj.read();");
        assert_eq!(report.after, out.text);
    }

    #[test]
    fn reported_composite_vector() {
        let (out, report) = verify(&tc("@Test void isLenient(){"));
        assert_eq!(out.text, "@Test public void testisLenient(){}");
        assert!(report.applied.contains(&RepairKind::ParenRepair));
        assert!(report.applied.contains(&RepairKind::NameRepair));
        assert!(report.applied.contains(&RepairKind::SignatureRepair));
    }

    #[test]
    fn clean_input_is_a_fixpoint() {
        let text = "@Test public void testSum(){ assertEquals(3, c.sum(1, 2)); }";
        let (out, report) = verify(&tc(text));
        assert_eq!(out.text, text);
        assert!(report.applied.is_empty());
        assert_eq!(report.before, report.after);
        assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn applied_is_empty_iff_text_unchanged() {
        for text in [
            "@Test public void testX(){}",
            "void x(){",
            "}}}((",
            "@test static int Name(){ return 1; }",
            "",
            "// just a comment",
        ] {
            let (_, report) = verify(&tc(text));
            assert_eq!(
                report.applied.is_empty(),
                report.before == report.after,
                "input {text:?}"
            );
        }
    }

    #[test]
    fn verify_output_reverifies_clean() {
        for text in [
            "@Test void isLenient(){",
            "void read(){ obj.read();",
            "@Foo(x public void testA(){}",
            "}}}(( void f(){ /* trailing",
            "private static String Name(){ return \"}\"; // tricky",
        ] {
            let (out, _) = verify(&tc(text));
            let (again, report) = verify(&out);
            assert_eq!(again.text, out.text, "input {text:?}");
            assert!(report.applied.is_empty(), "input {text:?}: {:?}", report.applied);
        }
    }

    // ---- properties ----

    /// Canonical test bodies the mutation fuzzer starts from.
    fn base_tests() -> Vec<&'static str> {
        vec![
            "@Test public void testSum(){ Calculator c = new Calculator(); assertEquals(30, c.sum(10, 20)); }",
            "@Test public void testRead(){ assertTrue(reader.read()); }",
            "@Test public void testEmpty(){ assertNull(map.get(\"k\")); }",
        ]
    }

    /// Break a canonical test in the ways truncation and decoding actually
    /// do: drop delimiters (never the declaration's opening paren), drop
    /// declaration keywords, strip the name's `test` prefix.
    fn mutate(base: &str, choices: &[u8]) -> String {
        let mut text = base.to_string();
        for &c in choices {
            let stream = lex(&text);
            match c % 5 {
                0 => {
                    // delete the last closing delimiter
                    if let Some((i, _)) = stream
                        .tokens
                        .iter()
                        .enumerate()
                        .rev()
                        .find(|(_, t)| t.kind == TokenKind::Delimiter && matches!(t.text.as_str(), ")" | "}" | "]"))
                    {
                        let drop: HashSet<usize> = [i].into_iter().collect();
                        text = splice_excluding(&stream, &drop);
                    }
                }
                1 => text = text.replacen("@Test ", "", 1),
                2 => text = text.replacen("public ", "", 1),
                3 => text = text.replacen("void ", "", 1),
                4 => text = text.replacen("void test", "void ", 1),
                _ => unreachable!(),
            }
        }
        text
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn verify_invariants_on_mutated_tests(
            base_idx in 0usize..3,
            choices in proptest::collection::vec(0u8..5, 0..6),
        ) {
            let base = base_tests()[base_idx];
            let broken = mutate(base, &choices);
            let (out, report) = verify(&tc(&broken));

            // balance
            prop_assert!(balanced(&out.text), "unbalanced: {:?}", out.text);

            // canonical prefix
            let stream = lex(&out.text);
            let texts: Vec<&str> = stream.tokens.iter().map(|t| t.text.as_str()).collect();
            if let Some(idx) = method_name_token(&stream) {
                prop_assert!(idx >= 3);
                prop_assert_eq!(&texts[idx - 3..idx], &["@Test", "public", "void"]);
                let head: String =
                    texts[idx].chars().take(4).flat_map(char::to_lowercase).collect();
                prop_assert_eq!(head, "test");
            }

            // idempotence
            let (again, second) = verify(&out);
            prop_assert_eq!(&again.text, &out.text);
            prop_assert!(second.applied.is_empty());

            // report coherence
            prop_assert_eq!(report.applied.is_empty(), report.before == report.after);
        }

        #[test]
        fn paren_repair_balances_arbitrary_soup(text in "[ a-z(){}\\[\\]\"'/*;,@0-9.+=-]{0,80}") {
            let out = paren_pass(&text, &mut Vec::new());
            prop_assert!(balanced(&out), "input {:?} gave {:?}", text, out);
            // and it is idempotent on its own output
            let again = paren_pass(&out, &mut Vec::new());
            prop_assert_eq!(&again, &out);
        }

        #[test]
        fn verify_is_idempotent_on_arbitrary_soup(text in "[ a-zA-Z(){}\"'/*;,@0-9]{0,60}") {
            let (out, _) = verify(&tc(&text));
            let (again, report) = verify(&out);
            prop_assert_eq!(again.text, out.text);
            prop_assert!(report.applied.is_empty());
        }
    }

    #[test]
    fn body_is_preserved_from_the_opening_brace() {
        // everything from the first top-level '{' must survive name/signature
        let broken = "static int Sum(){ int x = compute(1, 2); return x; }";
        let (out, _) = verify(&tc(broken));
        let body = "{ int x = compute(1, 2); return x; }";
        assert!(out.text.ends_with(body));
    }
}
