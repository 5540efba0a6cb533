//! Answer normalization and matching.
//!
//! Each [`AnswerKind`] has a fixed canonicalization chain. Datasets that need
//! different rules can supply their own [`AnswerMatcher`].

use std::sync::LazyLock;

use regex::Regex;

use crate::error::NormalizeError;
use crate::types::{AnswerKind, QuestionRecord};

static WS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());
static NUMERIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"-?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?(?:\s*/\s*-?(?:\d+(?:\.\d*)?|\.\d+))?").unwrap()
});
static BARE_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\(?([A-Za-z])\)?[.):]?$").unwrap());
static STANDALONE_UPPER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^A-Za-z0-9])\(?([A-Z])\)?(?:[^A-Za-z0-9]|$)").unwrap());
static FRAC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\[dt]?frac\s*\{([^{}]*)\}\s*\{([^{}]*)\}").unwrap());

/// Relative tolerance for numeric equality.
pub const NUMERIC_REL_TOL: f64 = 1e-9;

fn collapse_ws(s: &str) -> String {
    WS.replace_all(s.trim(), " ").into_owned()
}

fn normalize_free_text(raw: &str) -> String {
    let folded = collapse_ws(&raw.to_lowercase());
    folded
        .trim_end_matches(|c: char| c.is_ascii_punctuation() && !matches!(c, ')' | ']' | '}' | '%'))
        .trim_end()
        .to_string()
}

/// Parses the first number (optionally a fraction `a/b`) found in `raw`.
pub fn parse_number(raw: &str) -> Option<f64> {
    let cleaned = raw.replace([',', '$'], "");
    let m = NUMERIC.find(&cleaned)?;
    let text: String = m.as_str().chars().filter(|c| !c.is_whitespace()).collect();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let den: f64 = den.parse().ok()?;
            if den == 0.0 {
                return None;
            }
            num.parse::<f64>().ok()? / den
        }
        None => text.parse().ok()?,
    };
    value.is_finite().then_some(value)
}

fn canonical_decimal(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn normalize_numeric(raw: &str) -> Result<String, NormalizeError> {
    parse_number(raw)
        .map(canonical_decimal)
        .ok_or_else(|| NormalizeError::UnparsableNumeric(raw.to_string()))
}

fn choice_labels(choices: &[String]) -> Vec<char> {
    let n = if choices.is_empty() { 26 } else { choices.len().min(26) };
    (0..n).map(|i| (b'A' + i as u8) as char).collect()
}

fn normalize_choice(raw: &str, choices: &[String]) -> String {
    let trimmed = raw.trim();
    let labels = choice_labels(choices);
    if let Some(c) = BARE_LABEL.captures(trimmed) {
        let letter = c[1].chars().next().unwrap().to_ascii_uppercase();
        if labels.contains(&letter) {
            return letter.to_ascii_lowercase().to_string();
        }
    }
    // The text of one of the options.
    let folded = normalize_free_text(trimmed);
    if let Some(i) = choices.iter().position(|c| normalize_free_text(c) == folded) {
        return labels[i].to_ascii_lowercase().to_string();
    }
    // A standalone capital letter inside a sentence; the last one wins.
    let found = STANDALONE_UPPER
        .captures_iter(trimmed)
        .filter_map(|c| c[1].chars().next())
        .filter(|l| labels.contains(l))
        .last();
    match found {
        Some(l) => l.to_ascii_lowercase().to_string(),
        None => folded,
    }
}

/// Replaces `\boxed{...}` by its (brace-balanced) content.
fn strip_boxed(s: &str) -> String {
    let mut out = s.to_string();
    while let Some(pos) = out.find("\\boxed") {
        let rest = &out[pos + "\\boxed".len()..];
        let Some(open_rel) = rest.find('{') else { break };
        if !rest[..open_rel].trim().is_empty() {
            break;
        }
        let open = pos + "\\boxed".len() + open_rel;
        let mut depth = 0usize;
        let mut close = None;
        for (i, ch) in out[open..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(open + i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let Some(close) = close else { break };
        out = format!("{}{}{}", &out[..pos], &out[open + 1..close], &out[close + 1..]);
    }
    out
}

fn normalize_latex(raw: &str) -> String {
    let mut s = strip_boxed(raw);
    s = s.replace('$', "");
    loop {
        let next = FRAC.replace_all(&s, "$1/$2").into_owned();
        if next == s {
            break;
        }
        s = next;
    }
    collapse_ws(&s)
}

/// Canonical form of `raw` for the given answer kind.
///
/// `choices` is consulted only for multiple-choice answers.
pub fn normalize_answer(
    raw: &str,
    kind: AnswerKind,
    choices: &[String],
) -> Result<String, NormalizeError> {
    if raw.trim().is_empty() {
        return Err(NormalizeError::Empty);
    }
    let norm = match kind {
        AnswerKind::FreeText => normalize_free_text(raw),
        AnswerKind::Numeric => normalize_numeric(raw)?,
        AnswerKind::MultipleChoice => normalize_choice(raw, choices),
        AnswerKind::LatexMath => normalize_latex(raw),
    };
    // Punctuation-only answers fold to nothing.
    if norm.is_empty() {
        return Err(NormalizeError::Empty);
    }
    Ok(norm)
}

/// Normalization that never fails: unparsable numerics fall back to
/// free-text folding.
pub fn normalize_lenient(raw: &str, kind: AnswerKind, choices: &[String]) -> String {
    normalize_answer(raw, kind, choices).unwrap_or_else(|_| normalize_free_text(raw))
}

fn numbers_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= NUMERIC_REL_TOL * a.abs().max(b.abs())
}

/// True when both answers normalize to the same canonical form (numeric
/// answers also match within a relative tolerance of 1e-9).
pub fn answers_match(a: &str, b: &str, kind: AnswerKind, choices: &[String]) -> bool {
    if kind == AnswerKind::Numeric {
        if let (Some(x), Some(y)) = (parse_number(a), parse_number(b)) {
            return numbers_close(x, y);
        }
    }
    normalize_lenient(a, kind, choices) == normalize_lenient(b, kind, choices)
}

/// Pluggable answer comparison used by the engine and metrics.
pub trait AnswerMatcher: Send + Sync {
    fn normalize(&self, raw: &str, question: &QuestionRecord) -> String;
    fn matches(&self, a: &str, b: &str, question: &QuestionRecord) -> bool;
}

/// The built-in per-kind rules.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardMatcher;

impl AnswerMatcher for StandardMatcher {
    fn normalize(&self, raw: &str, q: &QuestionRecord) -> String {
        normalize_lenient(raw, q.answer_kind, q.choices())
    }

    fn matches(&self, a: &str, b: &str, q: &QuestionRecord) -> bool {
        answers_match(a, b, q.answer_kind, q.choices())
    }
}
