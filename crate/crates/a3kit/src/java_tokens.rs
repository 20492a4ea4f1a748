//! Lossless Java-level lexer for test-method analysis.
//!
//! This is not a compiler front end: the goal is a token stream that is
//! precise enough for signature repair, delimiter balancing, and masking,
//! while never rejecting input. Invariants:
//!
//! - `lex` never fails; unknown characters become one-character [`TokenKind::Operator`] tokens.
//! - Every token's `text` is exactly `&source[byte_offset..byte_offset + text.len()]`,
//!   so concatenating tokens with the original inter-token whitespace reproduces
//!   the input byte for byte (see [`TokenStream::reconstruct`]).
//! - String/char literals and comments are single tokens, which shields any
//!   delimiter or keyword characters inside them from downstream passes.
//! - `[MASK]` lexes as a single [`TokenKind::Mask`] token.
//! - `@Name` lexes as a single [`TokenKind::Annotation`] token; annotation
//!   arguments lex normally after it.
//! - Generic angle brackets are [`TokenKind::Operator`], never delimiters.
//! - An unterminated string or char literal extends to the end of its line;
//!   an unterminated block comment extends to end of input.

/// Classification of a lexed token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Annotation,
    Delimiter,
    Operator,
    StringLit,
    CharLit,
    NumberLit,
    Comment,
    Mask,
}

/// One lexed token. `byte_offset` addresses the first byte of `text` in the
/// original source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub byte_offset: usize,
}

/// A lexed source string together with its tokens, in source order.
#[derive(Debug, Clone)]
pub struct TokenStream {
    pub source: String,
    pub tokens: Vec<Token>,
}

/// The `[MASK]` placeholder recognized as a single token.
pub const MASK_TOKEN: &str = "[MASK]";

/// Java reserved words, plus the `true`/`false`/`null` literals which we
/// classify as keywords. `var` is deliberately absent (it is a reserved type
/// name, not a reserved word).
const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "false", "final", "finally",
    "float", "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "null", "package", "private", "protected", "public", "return", "short",
    "static", "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient",
    "true", "try", "void", "volatile", "while",
];

fn is_keyword(text: &str) -> bool {
    KEYWORDS.binary_search(&text).is_ok()
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Lex `source` into a [`TokenStream`]. Total: accepts any string.
pub fn lex(source: &str) -> TokenStream {
    let bytes = source.as_bytes();
    let n = bytes.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let c = source[i..].chars().next().expect("i is on a char boundary");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let (kind, end) = if source[i..].starts_with("//") {
            let end = source[i..].find('\n').map_or(n, |j| i + j);
            (TokenKind::Comment, end)
        } else if source[i..].starts_with("/*") {
            let end = source[i + 2..].find("*/").map_or(n, |j| i + 2 + j + 2);
            (TokenKind::Comment, end)
        } else if c == '"' || c == '\'' {
            let kind = if c == '"' { TokenKind::StringLit } else { TokenKind::CharLit };
            (kind, scan_quoted(source, i, c))
        } else if source[i..].starts_with(MASK_TOKEN) {
            (TokenKind::Mask, i + MASK_TOKEN.len())
        } else if c == '@' && source[i + 1..].chars().next().is_some_and(is_ident_start) {
            let mut j = i + 1;
            for ch in source[i + 1..].chars() {
                if is_ident_part(ch) {
                    j += ch.len_utf8();
                } else {
                    break;
                }
            }
            (TokenKind::Annotation, j)
        } else if is_ident_start(c) {
            let mut j = i;
            for ch in source[i..].chars() {
                if is_ident_part(ch) {
                    j += ch.len_utf8();
                } else {
                    break;
                }
            }
            let kind = if is_keyword(&source[i..j]) { TokenKind::Keyword } else { TokenKind::Identifier };
            (kind, j)
        } else if c.is_ascii_digit() {
            (TokenKind::NumberLit, scan_number(source, i))
        } else if matches!(c, '(' | ')' | '{' | '}' | '[' | ']') {
            (TokenKind::Delimiter, i + 1)
        } else {
            // anything else, including unknown characters, is a one-char operator
            (TokenKind::Operator, i + c.len_utf8())
        };
        tokens.push(Token { kind, text: source[start..end].to_string(), byte_offset: start });
        i = end;
    }
    TokenStream { source: source.to_string(), tokens }
}

/// Scan a string/char literal starting at the opening quote. Backslash
/// escapes the next character; a bare newline ends an unterminated literal.
fn scan_quoted(source: &str, start: usize, quote: char) -> usize {
    let n = source.len();
    let mut i = start + 1;
    while i < n {
        let c = source[i..].chars().next().expect("char boundary");
        if c == quote {
            return i + 1;
        }
        if c == '\n' {
            return i; // unterminated: extend to end of line, newline excluded
        }
        if c == '\\' {
            i += 1;
            if let Some(next) = source[i..].chars().next() {
                if next == '\n' {
                    return i; // dangling escape at end of line
                }
                i += next.len_utf8();
            }
        } else {
            i += c.len_utf8();
        }
    }
    n
}

/// Scan a numeric literal: digits, letters (hex/suffixes/exponents), `_`, `.`,
/// and a sign immediately after an exponent marker. Loose on purpose; numeric
/// precision is not needed for signature analysis.
fn scan_number(source: &str, start: usize) -> usize {
    let mut i = start;
    let mut prev = '\0';
    for c in source[i..].chars() {
        let take = c.is_ascii_alphanumeric()
            || c == '_'
            || c == '.'
            || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E'));
        if !take {
            break;
        }
        prev = c;
        i += c.len_utf8();
    }
    i
}

impl TokenStream {
    /// Token texts in source order.
    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Rebuild the source from the tokens plus the original inter-token gaps.
    /// Equal to `self.source` by construction; exposed so tests can assert the
    /// losslessness invariant instead of trusting it.
    pub fn reconstruct(&self) -> String {
        let mut out = String::with_capacity(self.source.len());
        let mut prev_end = 0;
        for tok in &self.tokens {
            out.push_str(&self.source[prev_end..tok.byte_offset]);
            out.push_str(&tok.text);
            prev_end = tok.byte_offset + tok.text.len();
        }
        out.push_str(&self.source[prev_end..]);
        out
    }
}

/// The declared method name: the identifier immediately preceding the first
/// `(` at delimiter depth zero, scanning no further than the first top-level
/// `{` (where a body would begin). Comments are skipped when looking at the
/// preceding token. A `(` preceded by something other than an identifier
/// (for example annotation arguments, `if (`) does not name a method; the
/// scan continues past its balanced extent.
pub fn method_name(stream: &TokenStream) -> Option<String> {
    method_name_token(stream).map(|i| stream.tokens[i].text.clone())
}

/// Index of the token `method_name` reads the name from: the Identifier
/// immediately before the first top-level `(` (comments skipped).
pub fn method_name_token(stream: &TokenStream) -> Option<usize> {
    let mut depth: i64 = 0;
    let toks = &stream.tokens;
    for (i, tok) in toks.iter().enumerate() {
        if tok.kind != TokenKind::Delimiter {
            continue;
        }
        match tok.text.as_str() {
            "(" | "[" => {
                if depth == 0 && tok.text == "(" {
                    let prev = toks[..i]
                        .iter()
                        .enumerate()
                        .rev()
                        .find(|(_, t)| t.kind != TokenKind::Comment);
                    if let Some((j, p)) = prev {
                        if p.kind == TokenKind::Identifier {
                            return Some(j);
                        }
                    }
                }
                depth += 1;
            }
            ")" | "]" => depth -= 1,
            "{" => {
                if depth == 0 {
                    return None; // body reached without a named parameter list
                }
                depth += 1;
            }
            "}" => depth -= 1,
            _ => {}
        }
    }
    None
}
