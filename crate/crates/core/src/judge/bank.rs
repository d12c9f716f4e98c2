//! The 10-shot example bank: two solved examples per serendipity level.
//!
//! The shipped bank is hand-authored and generic; per-dataset banks can be
//! supplied as JSON files. The `provenance` and `source_user_ids` fields
//! let a calibration run exclude any users the examples were drawn from.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::JudgeError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FewShotExample {
    pub history_texts: Vec<String>,
    pub candidate_text: String,
    pub serendipity: u8,
    #[serde(default)]
    pub relevance: Option<u8>,
    #[serde(default)]
    pub unexpectedness: Option<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleBank {
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub source_user_ids: Vec<String>,
    pub examples: Vec<FewShotExample>,
}

impl ExampleBank {
    pub fn default_bank() -> Self {
        let bank: Self = serde_json::from_str(include_str!("../../bank/default_bank.json"))
            .expect("shipped bank parses");
        bank.validate().expect("shipped bank is valid");
        bank
    }

    pub fn from_file(path: &Path) -> Result<Self, JudgeError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| JudgeError::InvalidBank(format!("{}: {e}", path.display())))?;
        let bank: Self = serde_json::from_str(&body)
            .map_err(|e| JudgeError::InvalidBank(format!("{}: {e}", path.display())))?;
        bank.validate()?;
        Ok(bank)
    }

    /// Exactly 10 examples, two per serendipity level, all scores in 1..=5.
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.examples.len() != 10 {
            return Err(JudgeError::InvalidBank(format!(
                "expected exactly 10 examples, got {}",
                self.examples.len()
            )));
        }
        let mut per_level = [0usize; 5];
        for (i, ex) in self.examples.iter().enumerate() {
            if !(1..=5).contains(&ex.serendipity) {
                return Err(JudgeError::InvalidBank(format!(
                    "example {i}: serendipity {} out of range",
                    ex.serendipity
                )));
            }
            for (label, score) in [("relevance", ex.relevance), ("unexpectedness", ex.unexpectedness)] {
                if let Some(s) = score {
                    if !(1..=5).contains(&s) {
                        return Err(JudgeError::InvalidBank(format!(
                            "example {i}: {label} {s} out of range"
                        )));
                    }
                }
            }
            if ex.history_texts.is_empty() {
                return Err(JudgeError::InvalidBank(format!("example {i}: empty history")));
            }
            per_level[(ex.serendipity - 1) as usize] += 1;
        }
        if per_level != [2, 2, 2, 2, 2] {
            return Err(JudgeError::InvalidBank(format!(
                "expected two examples per level, got {per_level:?}"
            )));
        }
        Ok(())
    }
}
