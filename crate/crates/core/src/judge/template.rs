//! Prompt templates and rendering.
//!
//! The exact wording ships as editable text files with `{history}`,
//! `{candidate}`, `{examples}` and `{scale}` placeholders; the structural
//! constraints (which kinds carry the Likert scale, the three CoT steps,
//! the three chained LtM sequences, the 10-shot block, history + candidate
//! at the end) live in the shipped defaults and are what the tests pin.
//! LtM sequences 2 and 3 keep a literal `{previous}` slot that the runner
//! fills with the prior response at call time.

use std::path::Path;

use super::bank::{ExampleBank, FewShotExample};
use super::{ChatMessage, JudgeError, JudgeRequest, PromptKind, Role};
use crate::corpus::serialize_item_text;

pub const PREVIOUS_PLACEHOLDER: &str = "{previous}";

/// Order in which history items appear in the prompt; oldest-first is
/// the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryOrder {
    #[default]
    OldestFirst,
    NewestFirst,
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub system: String,
    pub scale: String,
    pub base: String,
    pub ls: String,
    pub cot: String,
    pub ltm_relevance: String,
    pub ltm_unexpectedness: String,
    pub ltm_serendipity: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            system: include_str!("../../templates/system.txt").to_string(),
            scale: include_str!("../../templates/scale.txt").to_string(),
            base: include_str!("../../templates/base.txt").to_string(),
            ls: include_str!("../../templates/ls.txt").to_string(),
            cot: include_str!("../../templates/cot.txt").to_string(),
            ltm_relevance: include_str!("../../templates/ltm_relevance.txt").to_string(),
            ltm_unexpectedness: include_str!("../../templates/ltm_unexpectedness.txt").to_string(),
            ltm_serendipity: include_str!("../../templates/ltm_serendipity.txt").to_string(),
        }
    }
}

/// Which score lines an example shows, matching the task of the sequence
/// it is embedded in.
#[derive(Debug, Clone, Copy)]
enum ExampleMode {
    SerendipityOnly,
    ThreeScores,
    RelevanceOnly,
    UnexpectednessOnly,
}

impl TemplateSet {
    /// Start from the shipped defaults and override any template file
    /// present in `dir` (same file names as `templates/`).
    pub fn from_dir(dir: &Path) -> Result<Self, JudgeError> {
        let mut set = Self::default();
        let load = |name: &str, slot: &mut String| -> Result<(), JudgeError> {
            let path = dir.join(name);
            if path.exists() {
                *slot = std::fs::read_to_string(&path)
                    .map_err(|e| JudgeError::InvalidTemplate(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        };
        load("system.txt", &mut set.system)?;
        load("scale.txt", &mut set.scale)?;
        load("base.txt", &mut set.base)?;
        load("ls.txt", &mut set.ls)?;
        load("cot.txt", &mut set.cot)?;
        load("ltm_relevance.txt", &mut set.ltm_relevance)?;
        load("ltm_unexpectedness.txt", &mut set.ltm_unexpectedness)?;
        load("ltm_serendipity.txt", &mut set.ltm_serendipity)?;
        Ok(set)
    }

    /// Render the message sequences for a request: one sequence for
    /// Base/LS/CoT, three for LtM. Rendering is deterministic; identical
    /// inputs give byte-identical text.
    pub fn render(
        &self,
        request: &JudgeRequest,
        bank: &ExampleBank,
        order: HistoryOrder,
    ) -> Result<Vec<Vec<ChatMessage>>, JudgeError> {
        if request.history.is_empty() {
            return Err(JudgeError::EmptyHistory);
        }
        if request.history.len() > super::MAX_HISTORY {
            return Err(JudgeError::HistoryTooLong(request.history.len()));
        }
        bank.validate()?;

        let mut items: Vec<String> = request.history.iter().map(serialize_item_text).collect();
        if order == HistoryOrder::NewestFirst {
            items.reverse();
        }
        let history = items
            .iter()
            .enumerate()
            .map(|(i, text)| format!("{}. {}", i + 1, text))
            .collect::<Vec<_>>()
            .join("\n");
        let candidate = serialize_item_text(&request.candidate);

        let fill = |template: &str, mode: ExampleMode| -> String {
            template
                .replace("{scale}", self.scale.trim_end())
                .replace("{examples}", &render_examples(&bank.examples, mode))
                .replace("{history}", &history)
                .replace("{candidate}", &candidate)
        };

        let user_bodies = match request.kind {
            PromptKind::Base => vec![fill(&self.base, ExampleMode::SerendipityOnly)],
            PromptKind::Ls => vec![fill(&self.ls, ExampleMode::SerendipityOnly)],
            PromptKind::Cot => vec![fill(&self.cot, ExampleMode::ThreeScores)],
            PromptKind::Ltm => vec![
                fill(&self.ltm_relevance, ExampleMode::RelevanceOnly),
                fill(&self.ltm_unexpectedness, ExampleMode::UnexpectednessOnly),
                fill(&self.ltm_serendipity, ExampleMode::SerendipityOnly),
            ],
        };
        Ok(user_bodies
            .into_iter()
            .map(|body| {
                vec![
                    ChatMessage::new(Role::System, self.system.trim_end()),
                    ChatMessage::new(Role::User, body),
                ]
            })
            .collect())
    }
}

fn render_examples(examples: &[FewShotExample], mode: ExampleMode) -> String {
    let mut blocks = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let mut block = format!("Example {}:\nHistory:\n", i + 1);
        for text in &ex.history_texts {
            block.push_str("- ");
            block.push_str(text);
            block.push('\n');
        }
        block.push_str("Candidate:\n");
        block.push_str(&ex.candidate_text);
        block.push('\n');
        let mut line = |label: &str, value: Option<u8>| {
            if let Some(v) = value {
                block.push_str(&format!("{label}: {v}\n"));
            }
        };
        match mode {
            ExampleMode::SerendipityOnly => line("serendipity", Some(ex.serendipity)),
            ExampleMode::RelevanceOnly => line("relevance", ex.relevance),
            ExampleMode::UnexpectednessOnly => line("unexpectedness", ex.unexpectedness),
            ExampleMode::ThreeScores => {
                line("relevance", ex.relevance);
                line("unexpectedness", ex.unexpectedness);
                line("serendipity", Some(ex.serendipity));
            }
        }
        blocks.push(block.trim_end().to_string());
    }
    blocks.join("\n\n")
}

/// Substitute the prior response into an LtM follow-up sequence.
pub(crate) fn fill_previous(sequence: &[ChatMessage], previous: &str) -> Vec<ChatMessage> {
    sequence
        .iter()
        .map(|m| ChatMessage::new(m.role, m.content.replace(PREVIOUS_PLACEHOLDER, previous)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ItemRecord;

    fn request(kind: PromptKind) -> JudgeRequest {
        let history = vec![
            ItemRecord::new("h1", "Harbor Lights", vec!["Drama".into()]),
            ItemRecord::new("h2", "Paper Lanterns", vec!["Drama".into(), "Romance".into()]),
        ];
        let candidate = ItemRecord::new("c", "Signal to Noise", vec!["Sci-Fi".into()]);
        JudgeRequest::new("u1".into(), history, candidate, kind).unwrap()
    }

    fn joined(sequences: &[Vec<ChatMessage>]) -> String {
        sequences
            .iter()
            .flat_map(|seq| seq.iter().map(|m| m.content.clone()))
            .collect::<Vec<_>>()
            .join("\n---\n")
    }

    #[test]
    fn sequence_counts_per_kind() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        for kind in PromptKind::ALL {
            let seqs = templates.render(&request(kind), &bank, HistoryOrder::OldestFirst).unwrap();
            assert_eq!(seqs.len(), kind.sequence_count());
        }
    }

    #[test]
    fn base_lacks_scale_others_include_it() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        let anchor = "not at all serendipitous";
        let base = joined(&templates.render(&request(PromptKind::Base), &bank, HistoryOrder::OldestFirst).unwrap());
        assert!(!base.contains(anchor));
        for kind in [PromptKind::Ls, PromptKind::Cot, PromptKind::Ltm] {
            let text = joined(&templates.render(&request(kind), &bank, HistoryOrder::OldestFirst).unwrap());
            assert!(text.contains(anchor), "{kind} should include the scale");
        }
    }

    #[test]
    fn cot_names_three_steps_and_three_scores() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        let text = joined(&templates.render(&request(PromptKind::Cot), &bank, HistoryOrder::OldestFirst).unwrap());
        for step in ["step 1 - relevance", "step 2 - unexpectedness", "step 3 - serendipity"] {
            assert!(text.contains(step));
        }
        for line in ["relevance: <score>", "unexpectedness: <score>", "serendipity: <score>"] {
            assert!(text.contains(line));
        }
    }

    #[test]
    fn every_sequence_embeds_ten_examples_and_ends_with_candidate() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        for kind in PromptKind::ALL {
            let seqs = templates.render(&request(kind), &bank, HistoryOrder::OldestFirst).unwrap();
            for seq in &seqs {
                let user = &seq.last().unwrap().content;
                assert_eq!(user.matches("Example 1:").count(), 1);
                assert_eq!(user.matches("Example 10:").count(), 1);
                assert_eq!(user.matches("Example ").count(), 10);
                // Ends with the serialized history + candidate.
                assert!(user.trim_end().ends_with("Signal to Noise (Sci-Fi)"));
                assert_eq!(user.matches("Signal to Noise (Sci-Fi)").count(), 1);
                assert_eq!(user.matches("Harbor Lights (Drama)").count(), 1);
                assert_eq!(user.matches("Paper Lanterns (Drama, Romance)").count(), 1);
            }
        }
    }

    #[test]
    fn ltm_followups_carry_previous_placeholder() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        let seqs = templates.render(&request(PromptKind::Ltm), &bank, HistoryOrder::OldestFirst).unwrap();
        assert!(!joined(&seqs[..1]).contains(PREVIOUS_PLACEHOLDER));
        assert!(joined(&seqs[1..2]).contains(PREVIOUS_PLACEHOLDER));
        assert!(joined(&seqs[2..3]).contains(PREVIOUS_PLACEHOLDER));
        let filled = fill_previous(&seqs[1], "relevance: 4");
        assert!(!filled.iter().any(|m| m.content.contains(PREVIOUS_PLACEHOLDER)));
        assert!(filled.iter().any(|m| m.content.contains("relevance: 4")));
    }

    #[test]
    fn rendering_is_deterministic() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        for kind in PromptKind::ALL {
            let a = templates.render(&request(kind), &bank, HistoryOrder::OldestFirst).unwrap();
            let b = templates.render(&request(kind), &bank, HistoryOrder::OldestFirst).unwrap();
            assert_eq!(joined(&a), joined(&b));
        }
    }

    #[test]
    fn history_order_flips_enumeration() {
        let templates = TemplateSet::default();
        let bank = ExampleBank::default_bank();
        let oldest = joined(&templates.render(&request(PromptKind::Base), &bank, HistoryOrder::OldestFirst).unwrap());
        let newest = joined(&templates.render(&request(PromptKind::Base), &bank, HistoryOrder::NewestFirst).unwrap());
        assert!(oldest.contains("1. Harbor Lights (Drama)"));
        assert!(newest.contains("1. Paper Lanterns (Drama, Romance)"));
        assert_ne!(oldest, newest);
    }

    #[test]
    fn dir_overrides_fall_back_to_defaults() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.txt"), "custom {candidate}\n").unwrap();
        let set = TemplateSet::from_dir(dir.path()).unwrap();
        assert_eq!(set.base, "custom {candidate}\n");
        assert_eq!(set.cot, TemplateSet::default().cot);
    }
}
