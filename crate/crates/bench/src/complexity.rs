//! Lexical code-complexity metrics for Python-like source.
//!
//! Counting rules:
//! - LOC: physical lines. LLOC: lines that are neither blank nor comment-only.
//! - Operators: keywords (except `True`, `False`, `None`) and punctuation.
//!   Closing brackets are not counted, so a bracket pair is one operator.
//! - Operands: identifiers, number literals, string literals, `True`/`False`/`None`.
//! - Halstead volume `V = (N1 + N2) * log2(n1 + n2)`.
//! - Cyclomatic complexity `1 +` occurrences of
//!   `if elif for while except case and or`.
//! - Maintainability index
//!   `clamp((171 - 5.2 ln V - 0.23 CC - 16.2 ln LLOC) * 100 / 171, 0, 100)`,
//!   where a logarithm term is dropped when its argument is not positive.
//!   Code with no logical lines reports all zeros and MI 100.

use std::collections::HashSet;

use serde::Serialize;

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];
const CONSTANTS: &[&str] = &["True", "False", "None"];
const SOFT_KEYWORDS: &[&str] = &["match", "case"];
const BRANCHES: &[&str] = &["if", "elif", "for", "while", "except", "case", "and", "or"];

const OPERATORS_3: &[&str] = &["**=", "//=", ">>=", "<<=", "..."];
const OPERATORS_2: &[&str] = &[
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", ":=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=",
];
const OPERATORS_1: &str = "+-*/%@&|^~<>=.,:;([{";
const CLOSERS: &str = ")]}";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Operator(String),
    Operand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub loc: usize,
    pub lloc: usize,
    /// Distinct operators (n1).
    pub distinct_operators: usize,
    /// Distinct operands (n2).
    pub distinct_operands: usize,
    /// Total operators (N1).
    pub total_operators: usize,
    /// Total operands (N2).
    pub total_operands: usize,
    pub volume: f64,
    pub cyclomatic: usize,
    pub maintainability: f64,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn string_prefix_len(rest: &str) -> Option<usize> {
    let prefix: String = rest.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    if prefix.len() > 2 {
        return None;
    }
    let lower = prefix.to_ascii_lowercase();
    let ok = matches!(
        lower.as_str(),
        "" | "r" | "b" | "u" | "f" | "rb" | "br" | "fr" | "rf"
    );
    let next = rest[prefix.len()..].chars().next();
    (ok && matches!(next, Some('"' | '\''))).then_some(prefix.len())
}

/// Byte length of the string literal starting at `rest` (quote first).
fn string_len(rest: &str) -> usize {
    let quote = rest.as_bytes()[0];
    let triple = rest.len() >= 3 && rest.as_bytes()[1] == quote && rest.as_bytes()[2] == quote;
    let delim_len = if triple { 3 } else { 1 };
    let bytes = rest.as_bytes();
    let mut i = delim_len;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' if !triple => return i,
            b if b == quote => {
                if !triple {
                    return i + 1;
                }
                if bytes[i..].starts_with(&[quote; 3]) {
                    return i + 3;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    bytes.len()
}

/// Splits source into Halstead tokens. Comments and whitespace are dropped.
pub fn tokenize(code: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line_start = true;
    let mut i = 0;
    while i < code.len() {
        let rest = &code[i..];
        let c = rest.chars().next().expect("non-empty");
        if c == '\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() || c == '\\' {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            i += rest.find('\n').unwrap_or(rest.len());
            continue;
        }
        let at_line_start = std::mem::replace(&mut line_start, false);
        if let Some(prefix) = string_prefix_len(rest) {
            let len = prefix + string_len(&rest[prefix..]);
            tokens.push(Token::Operand(rest[..len].to_string()));
            i += len;
            continue;
        }
        if is_ident_start(c) {
            let len = rest
                .char_indices()
                .find(|&(_, ch)| !is_ident_char(ch))
                .map_or(rest.len(), |(j, _)| j);
            let word = &rest[..len];
            let soft = at_line_start
                && SOFT_KEYWORDS.contains(&word)
                && rest[len..].lines().next().is_some_and(|l| {
                    let l = l.split('#').next().unwrap_or("").trim_end();
                    l.ends_with(':') && !l[..l.len() - 1].trim().is_empty()
                });
            if (KEYWORDS.contains(&word) || soft) && !CONSTANTS.contains(&word) {
                tokens.push(Token::Operator(word.to_string()));
            } else {
                tokens.push(Token::Operand(word.to_string()));
            }
            i += len;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            let bytes = rest.as_bytes();
            let mut len = 0;
            while len < bytes.len() {
                let b = bytes[len];
                let exp_sign = (b == b'+' || b == b'-')
                    && len > 0
                    && matches!(bytes[len - 1], b'e' | b'E')
                    && !rest.starts_with("0x")
                    && !rest.starts_with("0X");
                if b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || exp_sign {
                    len += 1;
                } else {
                    break;
                }
            }
            tokens.push(Token::Operand(rest[..len].to_string()));
            i += len;
            continue;
        }
        if let Some(op) = OPERATORS_3
            .iter()
            .chain(OPERATORS_2)
            .find(|op| rest.starts_with(**op))
        {
            tokens.push(Token::Operator(op.to_string()));
            i += op.len();
            continue;
        }
        if OPERATORS_1.contains(c) {
            tokens.push(Token::Operator(c.to_string()));
        } else if !CLOSERS.contains(c) {
            // Stray characters such as `$` or `!` still count as operators.
            tokens.push(Token::Operator(c.to_string()));
        }
        i += c.len_utf8();
    }
    tokens
}

pub fn loc(code: &str) -> usize {
    code.lines().count()
}

pub fn lloc(code: &str) -> usize {
    code.lines()
        .filter(|l| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .count()
}

pub fn complexity(code: &str) -> ComplexityReport {
    let loc = loc(code);
    let lloc = lloc(code);
    if lloc == 0 {
        return ComplexityReport {
            loc,
            lloc,
            distinct_operators: 0,
            distinct_operands: 0,
            total_operators: 0,
            total_operands: 0,
            volume: 0.0,
            cyclomatic: 0,
            maintainability: 100.0,
        };
    }
    let tokens = tokenize(code);
    let mut operators = HashSet::new();
    let mut operands = HashSet::new();
    let (mut total_operators, mut total_operands, mut branches) = (0, 0, 0);
    for t in &tokens {
        match t {
            Token::Operator(op) => {
                total_operators += 1;
                if BRANCHES.contains(&op.as_str()) {
                    branches += 1;
                }
                operators.insert(op.as_str());
            }
            Token::Operand(v) => {
                total_operands += 1;
                operands.insert(v.as_str());
            }
        }
    }
    let vocabulary = operators.len() + operands.len();
    let length = total_operators + total_operands;
    let volume = if vocabulary > 0 {
        length as f64 * (vocabulary as f64).log2()
    } else {
        0.0
    };
    let cyclomatic = 1 + branches;
    ComplexityReport {
        loc,
        lloc,
        distinct_operators: operators.len(),
        distinct_operands: operands.len(),
        total_operators,
        total_operands,
        volume,
        cyclomatic,
        maintainability: maintainability_index(volume, cyclomatic, lloc),
    }
}

pub fn maintainability_index(volume: f64, cyclomatic: usize, lloc: usize) -> f64 {
    let ln = |x: f64| if x > 0.0 { x.ln() } else { 0.0 };
    let raw = 171.0 - 5.2 * ln(volume) - 0.23 * cyclomatic as f64 - 16.2 * ln(lloc as f64);
    (raw * 100.0 / 171.0).clamp(0.0, 100.0)
}
