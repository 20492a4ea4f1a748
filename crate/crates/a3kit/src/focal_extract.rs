//! Focal-method extraction from Java source files.
//!
//! A *focal method* is a public, non-abstract method of the file's top-level
//! class — the unit a generated test is meant to exercise. Extraction is
//! token-based (no full parse) and best-effort by design: files that do not
//! contain a top-level `class` yield an empty result plus a diagnostic rather
//! than an error. Nested and anonymous classes are skipped entirely; their
//! methods are neither focal methods nor siblings.
//!
//! Alongside each focal method we capture the class context a generator can
//! condition on: constructor signatures, the signatures of every *other*
//! method declared by the class (any visibility), and field declarations.

use serde::{Deserialize, Serialize};

use crate::java_tokens::{lex, Token, TokenKind};

/// Constructors, sibling method signatures, and fields of the declaring class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalContext {
    pub constructors: Vec<String>,
    pub sibling_signatures: Vec<String>,
    pub fields: Vec<String>,
}

/// One public, non-abstract method of a top-level class.
///
/// `id` is `project/class_name/signature` and is unique within a run as long
/// as inputs are sane (Java forbids two methods with identical signatures in
/// one class). `body` is a verbatim substring of the source file, spanning
/// the declaration (leading annotations included) through its closing brace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalMethod {
    pub id: String,
    pub project: String,
    pub class_name: String,
    pub signature: String,
    pub body: String,
    pub context: FocalContext,
}

impl FocalMethod {
    /// The declared method name, recovered from the signature.
    pub fn name(&self) -> Option<String> {
        crate::java_tokens::method_name(&lex(&self.signature))
    }
}

/// Result of extracting one source file: focal methods in source order, plus
/// diagnostics for anything the extractor had to skip or could not interpret.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub methods: Vec<FocalMethod>,
    pub diagnostics: Vec<String>,
}

const MODIFIERS: &[&str] = &[
    "abstract", "default", "final", "native", "private", "protected", "public", "static",
    "strictfp", "synchronized", "transient", "volatile",
];

/// A member-level declaration inside the class body.
#[derive(Debug)]
struct Member<'a> {
    /// Tokens of the declaration, leading comments stripped.
    tokens: &'a [Token],
    /// Byte range of the full member in the source (through `}` or `;`).
    span: (usize, usize),
    /// Byte offset where the body `{` begins, if the member has a body.
    body_start: Option<usize>,
}

/// Extract all focal methods of `source`'s top-level class.
pub fn extract_focal_methods(source: &str, project: &str) -> Extraction {
    let stream = lex(source);
    let toks = &stream.tokens;
    let mut out = Extraction::default();

    let Some((class_name, body_open)) = top_level_class(toks) else {
        out.diagnostics.push("no top-level class declaration found".to_string());
        return out;
    };

    let members = split_members(toks, body_open);

    // First pass: collect class-wide context shared by every focal method.
    let mut constructors = Vec::new();
    let mut fields = Vec::new();
    let mut method_sigs: Vec<(String, bool)> = Vec::new(); // (signature, is_focal)
    let mut parsed: Vec<(MemberKind, &Member)> = Vec::new();
    for member in &members {
        let kind = classify(member, &class_name, source);
        match &kind {
            MemberKind::Constructor(sig) => constructors.push(sig.clone()),
            MemberKind::Field(decl) => fields.push(decl.clone()),
            MemberKind::Method { signature, public, abstract_or_bodyless, .. } => {
                method_sigs.push((signature.clone(), *public && !abstract_or_bodyless));
            }
            MemberKind::NestedType => {
                out.diagnostics.push(format!(
                    "skipped nested type declaration at byte {}",
                    member.span.0
                ));
            }
            MemberKind::Other => {}
        }
        parsed.push((kind, member));
    }

    // Second pass: emit focal methods in source order with their contexts.
    let mut method_index = 0usize;
    for (kind, member) in &parsed {
        if let MemberKind::Method { signature, public, abstract_or_bodyless, .. } = kind {
            let this_index = method_index;
            method_index += 1;
            if !*public || *abstract_or_bodyless {
                continue;
            }
            let sibling_signatures = method_sigs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != this_index)
                .map(|(_, (sig, _))| sig.clone())
                .collect();
            let body = source[member.span.0..member.span.1].to_string();
            out.methods.push(FocalMethod {
                id: format!("{project}/{class_name}/{signature}"),
                project: project.to_string(),
                class_name: class_name.clone(),
                signature: signature.clone(),
                body,
                context: FocalContext {
                    constructors: constructors.clone(),
                    sibling_signatures,
                    fields: fields.clone(),
                },
            });
        }
    }
    out
}

/// Find the first top-level `class` keyword and return the class name and the
/// token index of its body-opening `{`.
fn top_level_class(toks: &[Token]) -> Option<(String, usize)> {
    let mut depth = 0i64;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokenKind::Delimiter => match t.text.as_str() {
                "{" | "(" | "[" => depth += 1,
                "}" | ")" | "]" => depth -= 1,
                _ => {}
            },
            TokenKind::Keyword if depth == 0 && t.text == "class" => {
                let name = toks[i + 1..]
                    .iter()
                    .find(|t| t.kind != TokenKind::Comment)
                    .filter(|t| t.kind == TokenKind::Identifier)?
                    .text
                    .clone();
                // body opens at the next top-level '{' (past extends/implements)
                for (j, t2) in toks.iter().enumerate().skip(i + 1) {
                    if t2.kind == TokenKind::Delimiter && t2.text == "{" {
                        return Some((name, j));
                    }
                }
                return None;
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Split the class body (opened by the `{` at token index `body_open`) into
/// member declarations. A member runs to its `;`, or through its balanced
/// `{...}` body; `= { ... }` array initializers in fields do not end a member.
fn split_members(toks: &[Token], body_open: usize) -> Vec<Member<'_>> {
    let mut members = Vec::new();
    let mut i = body_open + 1;
    let mut start = i;
    let mut depth = 0i64; // relative to member level
    let mut seen_eq = false;
    let mut body_start: Option<usize> = None;
    while i < toks.len() {
        let t = &toks[i];
        match (t.kind, t.text.as_str()) {
            (TokenKind::Delimiter, "(") | (TokenKind::Delimiter, "[") => depth += 1,
            (TokenKind::Delimiter, ")") | (TokenKind::Delimiter, "]") => depth -= 1,
            (TokenKind::Operator, "=") if depth == 0 => seen_eq = true,
            (TokenKind::Operator, ";") if depth == 0 => {
                members.push(make_member(toks, start, i, body_start));
                start = i + 1;
                seen_eq = false;
                body_start = None;
            }
            (TokenKind::Delimiter, "{") => {
                if depth == 0 && !seen_eq {
                    // a real body: consume it and close the member
                    if body_start.is_none() {
                        body_start = Some(t.byte_offset);
                    }
                    let close = matching_brace(toks, i);
                    members.push(make_member(toks, start, close, body_start));
                    i = close;
                    start = i + 1;
                    seen_eq = false;
                    body_start = None;
                } else {
                    depth += 1;
                }
            }
            (TokenKind::Delimiter, "}") => {
                if depth == 0 {
                    break; // end of class body
                }
                depth -= 1;
            }
            _ => {}
        }
        i += 1;
    }
    members
}

fn make_member(toks: &[Token], start: usize, end_inclusive: usize, body_start: Option<usize>) -> Member<'_> {
    let mut s = start;
    while s < end_inclusive && toks[s].kind == TokenKind::Comment {
        s += 1;
    }
    let end_tok = &toks[end_inclusive];
    Member {
        tokens: &toks[s..=end_inclusive],
        span: (toks[s].byte_offset, end_tok.byte_offset + end_tok.text.len()),
        body_start,
    }
}

/// Index of the `}` matching the `{` at token index `open`, or the last token
/// if the source is truncated.
fn matching_brace(toks: &[Token], open: usize) -> usize {
    let mut depth = 0i64;
    for (j, t) in toks.iter().enumerate().skip(open) {
        if t.kind == TokenKind::Delimiter {
            match t.text.as_str() {
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth == 0 {
                        return j;
                    }
                }
                _ => {}
            }
        }
    }
    toks.len() - 1
}

#[derive(Debug)]
enum MemberKind {
    Method { signature: String, public: bool, abstract_or_bodyless: bool },
    Constructor(String),
    Field(String),
    NestedType,
    Other,
}

fn classify(member: &Member, class_name: &str, source: &str) -> MemberKind {
    // skip leading annotations (and any comments interleaved with them)
    let toks: Vec<&Token> = member
        .tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .collect();
    let mut i = 0;
    while i < toks.len() && toks[i].kind == TokenKind::Annotation {
        i += 1;
    }
    let decl = &toks[i..];
    if decl.is_empty() {
        return MemberKind::Other;
    }
    if decl.iter().any(|t| {
        t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "class" | "interface" | "enum")
    }) {
        return MemberKind::NestedType;
    }

    // the declaration's parameter list: first '(' at member level before any '='
    let mut paren: Option<usize> = None;
    let mut depth = 0i64;
    for (j, t) in decl.iter().enumerate() {
        match (t.kind, t.text.as_str()) {
            (TokenKind::Operator, "=") if depth == 0 => break,
            (TokenKind::Delimiter, "(") if depth == 0 => {
                paren = Some(j);
                break;
            }
            (TokenKind::Delimiter, "(") | (TokenKind::Delimiter, "[") | (TokenKind::Delimiter, "{") => depth += 1,
            (TokenKind::Delimiter, ")") | (TokenKind::Delimiter, "]") | (TokenKind::Delimiter, "}") => depth -= 1,
            _ => {}
        }
    }

    let Some(p) = paren else {
        // no parameter list: a field (or a bare initializer block, which has
        // no identifier before its '{' and no ';' terminator worth keeping)
        if decl[0].kind == TokenKind::Keyword && decl[0].text == "static" && decl.len() == 1 {
            return MemberKind::Other;
        }
        let text = declaration_text(decl, source, member.body_start, member.span.1);
        if text.is_empty() {
            return MemberKind::Other;
        }
        return MemberKind::Field(text.trim_end_matches(';').trim_end().to_string());
    };
    if p == 0 {
        return MemberKind::Other; // '(' with no name before it
    }
    let name = &decl[p - 1];
    if name.kind != TokenKind::Identifier {
        return MemberKind::Other;
    }
    let signature = declaration_text(decl, source, member.body_start, member.span.1);

    // constructor: named after the class, with nothing but modifiers before it
    let only_modifiers_before = decl[..p - 1]
        .iter()
        .all(|t| t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.text.as_str()));
    if name.text == class_name && only_modifiers_before {
        return MemberKind::Constructor(signature);
    }

    let public = decl[..p]
        .iter()
        .any(|t| t.kind == TokenKind::Keyword && t.text == "public");
    let abstract_mod = decl[..p]
        .iter()
        .any(|t| t.kind == TokenKind::Keyword && t.text == "abstract");
    MemberKind::Method {
        signature,
        public,
        abstract_or_bodyless: abstract_mod || member.body_start.is_none(),
    }
}

/// The declaration text: from the first non-annotation token up to the body
/// `{` (or the end of the member for bodyless declarations), with whitespace
/// runs collapsed to single spaces.
fn declaration_text(decl: &[&Token], source: &str, body_start: Option<usize>, span_end: usize) -> String {
    if decl.is_empty() {
        return String::new();
    }
    let from = decl[0].byte_offset;
    let to = body_start.unwrap_or(span_end).max(from);
    normalize_ws(source[from..to].trim_end_matches(';'))
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
