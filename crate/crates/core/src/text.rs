//! Byte-bounded text helpers shared by the executor, reviewer and prompt builder.
//!
//! All caps in this crate are measured in UTF-8 bytes, which also bounds the
//! character count.

use std::sync::LazyLock;

use regex::Regex;

/// Largest char boundary `<= idx`.
pub fn floor_boundary(s: &str, idx: usize) -> usize {
    if idx >= s.len() {
        return s.len();
    }
    let mut i = idx;
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// Smallest char boundary `>= idx`.
pub fn ceil_boundary(s: &str, idx: usize) -> usize {
    if idx >= s.len() {
        return s.len();
    }
    let mut i = idx;
    while !s.is_char_boundary(i) {
        i += 1;
    }
    i
}

/// Marker inserted where the middle of a long text was dropped.
pub fn truncation_marker(omitted: usize) -> String {
    format!("\n[... {omitted} bytes truncated ...]\n")
}

/// Keeps the head and tail of `text` so that the result fits in `cap` bytes.
///
/// The tail gets the larger share because tracebacks end up there.
pub fn truncate_middle(text: &str, cap: usize) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    // The marker length depends on the digit count of the omitted size, which
    // is at most text.len().
    let marker_len = truncation_marker(text.len()).len();
    if cap <= marker_len {
        let start = ceil_boundary(text, text.len() - cap);
        return text[start..].to_string();
    }
    let budget = cap - marker_len;
    let head_len = floor_boundary(text, budget / 3);
    let tail_start = ceil_boundary(text, text.len() - (budget - head_len));
    let omitted = tail_start - head_len;
    let mut out = String::with_capacity(cap);
    out.push_str(&text[..head_len]);
    out.push_str(&truncation_marker(omitted));
    out.push_str(&text[tail_start..]);
    debug_assert!(out.len() <= cap);
    out
}

/// Keeps the beginning of `text`, appending `suffix` when anything was cut.
pub fn truncate_head(text: &str, cap: usize, suffix: &str) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    if suffix.len() >= cap {
        return String::new();
    }
    let end = floor_boundary(text, cap - suffix.len());
    format!("{}{suffix}", &text[..end])
}

/// First line of `text`, trimmed and cut to `max` bytes.
pub fn one_line(text: &str, max: usize) -> String {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    truncate_head(line, max, "...")
}

static ERROR_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(error|exception|traceback|fatal|panic|killed|segmentation fault|not found)")
        .expect("static regex")
});

/// Hint line for a failed execution: the last line mentioning an error, or
/// else the final non-empty line.
pub fn error_hint(term_out: &str) -> Option<String> {
    let lines: Vec<&str> = term_out
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    lines
        .iter()
        .rev()
        .find(|l| ERROR_LINE.is_match(l) && !l.starts_with("Traceback"))
        .or_else(|| lines.last())
        .map(|l| l.to_string())
}
