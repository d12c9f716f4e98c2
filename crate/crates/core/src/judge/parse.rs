//! Extracting scores from judge responses.
//!
//! Prompts instruct the judge to end with machine-readable `label: <n>`
//! lines; the parser takes the last such occurrence per label. When a
//! single-score response carries no labeled line, the final integer in the
//! response is used instead, so bare answers like "4" still parse.

use regex::Regex;
use std::sync::OnceLock;

use super::{JudgeError, JudgeVerdict, PromptKind};

fn label_regex(label: &'static str) -> Regex {
    Regex::new(&format!(r"(?i){label}\s*(?:score)?\s*[:=]\s*([0-9]+)")).expect("static regex")
}

fn regexes() -> &'static [(&'static str, Regex); 3] {
    static RE: OnceLock<[(&'static str, Regex); 3]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            ("relevance", label_regex("relevance")),
            ("unexpectedness", label_regex("unexpectedness")),
            ("serendipity", label_regex("serendipity")),
        ]
    })
}

fn last_labeled(text: &str, label: &'static str) -> Option<i64> {
    let re = &regexes().iter().find(|(l, _)| *l == label).expect("known label").1;
    re.captures_iter(text)
        .last()
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().parse().ok())
}

fn last_integer(text: &str) -> Option<i64> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"-?[0-9]+").expect("static regex"));
    re.find_iter(text).last().and_then(|m| m.as_str().parse().ok())
}

fn validate(label: &'static str, value: Option<i64>) -> Result<u8, JudgeError> {
    let value = value.ok_or(JudgeError::Unparseable(label))?;
    if !(1..=5).contains(&value) {
        return Err(JudgeError::OutOfRange { label, value });
    }
    Ok(value as u8)
}

/// Parse one score, preferring the labeled form, falling back to the last
/// integer in the response.
fn single_score(text: &str, label: &'static str) -> Result<u8, JudgeError> {
    validate(label, last_labeled(text, label).or_else(|| last_integer(text)))
}

/// Parse the responses of one judging call into a verdict.
///
/// Base/LS read a single serendipity score; CoT requires all three labeled
/// scores in one response; LtM reads one score from each of its three
/// chained responses.
pub fn parse_verdict(
    kind: PromptKind,
    responses: &[String],
    model_id: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let expected = kind.sequence_count();
    if responses.len() != expected {
        return Err(JudgeError::ResponseCount {
            kind: kind.label(),
            expected,
            got: responses.len(),
        });
    }
    let verdict = match kind {
        PromptKind::Base | PromptKind::Ls => JudgeVerdict {
            serendipity: single_score(&responses[0], "serendipity")?,
            relevance: None,
            unexpectedness: None,
            raw_responses: responses.to_vec(),
            model_id: model_id.to_string(),
            kind,
        },
        PromptKind::Cot => {
            // All three must be present; a missing label is a parse error,
            // not a fallback case.
            let text = &responses[0];
            let relevance = validate("relevance", last_labeled(text, "relevance"))?;
            let unexpectedness = validate("unexpectedness", last_labeled(text, "unexpectedness"))?;
            let serendipity = validate("serendipity", last_labeled(text, "serendipity"))?;
            JudgeVerdict {
                serendipity,
                relevance: Some(relevance),
                unexpectedness: Some(unexpectedness),
                raw_responses: responses.to_vec(),
                model_id: model_id.to_string(),
                kind,
            }
        }
        PromptKind::Ltm => JudgeVerdict {
            relevance: Some(single_score(&responses[0], "relevance")?),
            unexpectedness: Some(single_score(&responses[1], "unexpectedness")?),
            serendipity: single_score(&responses[2], "serendipity")?,
            raw_responses: responses.to_vec(),
            model_id: model_id.to_string(),
            kind,
        },
    };
    Ok(verdict)
}
