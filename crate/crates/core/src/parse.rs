//! Extraction of the `Reason:` / `Answer:` / `Confidence score:` fields from
//! agent completions.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::ParseError;
use crate::types::{ParsedTurn, TurnFlag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Reason,
    Answer,
    Confidence,
}

impl Label {
    fn from_match(s: &str) -> Label {
        let s = s.to_ascii_lowercase();
        if s.starts_with("reason") {
            Label::Reason
        } else if s.starts_with("answer") {
            Label::Answer
        } else {
            Label::Confidence
        }
    }

    fn name(self) -> &'static str {
        match self {
            Label::Reason => "Reason",
            Label::Answer => "Answer",
            Label::Confidence => "Confidence score",
        }
    }
}

// Markdown emphasis and list markers around labels are tolerated.
static LINE_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?im)^[ \t]*(?:[-#>][ \t]*)*[*_]*[ \t]*(reasoning|reason|answer|confidence[ \t]+score|confidence)[ \t]*[*_]*[ \t]*:[*_]*",
    )
    .unwrap()
});

static INLINE_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:^|[\s*_])(reasoning|reason|answer|confidence[ \t]+score|confidence)[ \t]*[*_]*[ \t]*:[*_]*")
        .unwrap()
});

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap());

#[derive(Debug, Clone, Copy)]
struct LabelHit {
    label: Label,
    /// Start of the label text.
    start: usize,
    /// First byte after the colon.
    value_start: usize,
}

fn label_hits(raw: &str) -> Vec<LabelHit> {
    let mut hits: Vec<LabelHit> = LINE_LABEL
        .captures_iter(raw)
        .map(|c| LabelHit {
            label: Label::from_match(c.get(1).unwrap().as_str()),
            start: c.get(0).unwrap().start(),
            value_start: c.get(0).unwrap().end(),
        })
        .collect();

    // Labels that never start a line may still appear inline, as in
    // "Reasoning: ... Answer: 14 7". Only the last inline occurrence counts.
    for wanted in [Label::Reason, Label::Answer, Label::Confidence] {
        if hits.iter().any(|h| h.label == wanted) {
            continue;
        }
        let inline = INLINE_LABEL
            .captures_iter(raw)
            .filter(|c| Label::from_match(c.get(1).unwrap().as_str()) == wanted)
            .last();
        if let Some(c) = inline {
            let m = c.get(1).unwrap();
            hits.push(LabelHit {
                label: wanted,
                start: m.start(),
                value_start: c.get(0).unwrap().end(),
            });
        }
    }
    hits.sort_by_key(|h| h.start);
    hits
}

/// Byte range of the first occurrence of `label`'s value, ending at the next label.
fn field_range(raw: &str, hits: &[LabelHit], label: Label) -> Option<(usize, usize)> {
    let idx = hits.iter().position(|h| h.label == label)?;
    let start = hits[idx].value_start;
    let end = hits
        .iter()
        .map(|h| h.start)
        .find(|&s| s >= start)
        .unwrap_or(raw.len());
    Some((start, end))
}

fn clean_field(s: &str) -> &str {
    let t = s.trim();
    match t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) if !inner.contains('[') && !inner.contains(']') => inner.trim(),
        _ => t,
    }
}

/// Byte range of the cleaned answer value inside `raw`, if an answer label exists.
pub(crate) fn answer_value_range(raw: &str) -> Option<(usize, usize)> {
    let hits = label_hits(raw);
    let (s, e) = field_range(raw, &hits, Label::Answer)?;
    let field = &raw[s..e];
    let cleaned = clean_field(field);
    if cleaned.is_empty() {
        return None;
    }
    let offset = field.find(cleaned)?;
    Some((s + offset, s + offset + cleaned.len()))
}

fn parse_confidence(field: &str) -> Result<(u8, Vec<TurnFlag>), ParseError> {
    let m = NUMBER
        .find(field)
        .ok_or_else(|| ParseError::MalformedConfidence(field.to_string()))?;
    let text = m.as_str();
    let mut flags = Vec::new();
    let value: f64 = text
        .parse()
        .map_err(|_| ParseError::MalformedConfidence(field.to_string()))?;
    if value < 0.0 {
        return Err(ParseError::MalformedConfidence(field.to_string()));
    }
    if text.contains('.') && value.fract() != 0.0 {
        flags.push(TurnFlag::ConfidenceTruncated);
    }
    let mut int = value.trunc();
    if int > 100.0 {
        flags.push(TurnFlag::ConfidenceClamped);
        int = 100.0;
    }
    Ok((int as u8, flags))
}

/// Extracts reason, answer and (optionally) the verbalized confidence from a
/// completion. Labels are matched case-insensitively; each field runs up to
/// the next label or the end of the text.
pub fn parse_turn(raw: &str, expect_sv_confidence: bool) -> Result<ParsedTurn, ParseError> {
    let hits = label_hits(raw);
    let mut flags = Vec::new();

    let reason = match field_range(raw, &hits, Label::Reason) {
        Some((s, e)) => clean_field(&raw[s..e]).to_string(),
        None => return Err(ParseError::MissingField(Label::Reason.name().into())),
    };
    if reason.is_empty() {
        tracing::warn!("agent output has an empty reason");
        flags.push(TurnFlag::EmptyReason);
    }

    let answer = field_range(raw, &hits, Label::Answer)
        .map(|(s, e)| clean_field(&raw[s..e]).to_string())
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ParseError::MissingField(Label::Answer.name().into()))?;

    let sv_confidence = if expect_sv_confidence {
        let (s, e) = field_range(raw, &hits, Label::Confidence)
            .ok_or_else(|| ParseError::MissingField(Label::Confidence.name().into()))?;
        let (value, conf_flags) = parse_confidence(clean_field(&raw[s..e]))?;
        if !conf_flags.is_empty() {
            tracing::warn!(?conf_flags, "verbalized confidence adjusted");
        }
        flags.extend(conf_flags);
        Some(value)
    } else {
        None
    };

    Ok(ParsedTurn {
        reason,
        answer,
        sv_confidence,
        flags,
    })
}

/// Renders fields in the strict output format agents are asked to follow.
pub fn render_turn(reason: &str, answer: &str, sv_confidence: Option<u8>) -> String {
    let mut out = format!("Reason: {reason}\nAnswer: {answer}");
    if let Some(c) = sv_confidence {
        out.push_str(&format!("\nConfidence score: {c}"));
    }
    out
}
