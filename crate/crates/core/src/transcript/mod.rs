//! Dialogue data model: speaker-tagged utterances with optional gold
//! annotations, plus ingestion, validation, and synthetic-corpus
//! generation.

pub mod generate;
mod io;
mod topics;

pub use generate::{generate_corpus, GenSpec};
pub use io::{load_transcripts, write_transcripts, LoadError, LoadOutcome, SkippedRecord, WriteError};
pub use topics::{builtin_topics, topic_by_id, BuiltinTopic};

use crate::taxonomy::{ChatbotDA, SwdaTag, UserDA};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Three-way appropriateness label on a chatbot response. The declaration
/// order is the fixed class order used everywhere (confusion matrices,
/// vote tie-breaking).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Appropriateness {
    Inappropriate,
    Neutral,
    Appropriate,
}

impl Appropriateness {
    pub const ALL: &'static [Appropriateness] = &[
        Appropriateness::Inappropriate,
        Appropriateness::Neutral,
        Appropriateness::Appropriate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Appropriateness::Inappropriate => "Inappropriate",
            Appropriateness::Neutral => "Neutral",
            Appropriateness::Appropriate => "Appropriate",
        }
    }
}

impl fmt::Display for Appropriateness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Chatbot,
}

/// One turn of a dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    /// 0-based position within the dialogue; derived from record order,
    /// not serialized.
    #[serde(skip)]
    pub turn_index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub swda_tag: Option<SwdaTag>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub user_da: Option<UserDA>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chatbot_da: Option<ChatbotDA>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gold_label: Option<Appropriateness>,
}

impl Utterance {
    pub fn user(text: impl Into<String>) -> Self {
        Utterance {
            speaker: Speaker::User,
            text: text.into(),
            turn_index: 0,
            swda_tag: None,
            user_da: None,
            chatbot_da: None,
            gold_label: None,
        }
    }

    pub fn chatbot(text: impl Into<String>) -> Self {
        Utterance {
            speaker: Speaker::Chatbot,
            text: text.into(),
            turn_index: 0,
            swda_tag: None,
            user_da: None,
            chatbot_da: None,
            gold_label: None,
        }
    }
}

/// The interview topic a dialogue belongs to: one of the built-in topics
/// or any custom (id, question) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicRef {
    pub topic_id: String,
    pub question_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub topic: TopicRef,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("dialogue `{id}` is empty")]
    EmptyDialogue { id: String },
    #[error("dialogue `{id}` contains no chatbot utterance")]
    NoChatbotUtterance { id: String },
    #[error("dialogue `{id}` has an empty topic question_text")]
    EmptyQuestionText { id: String },
    #[error("dialogue `{id}` utterance {turn}: field `{field}` is not valid for a {speaker} turn")]
    FieldSpeakerMismatch {
        id: String,
        turn: usize,
        field: &'static str,
        speaker: &'static str,
    },
}

impl Dialogue {
    pub fn new(id: impl Into<String>, topic: TopicRef, utterances: Vec<Utterance>) -> Self {
        let mut d = Dialogue {
            id: id.into(),
            topic,
            utterances,
        };
        d.reindex();
        d
    }

    /// Reassigns consecutive turn indices from 0.
    pub fn reindex(&mut self) {
        for (i, u) in self.utterances.iter_mut().enumerate() {
            u.turn_index = i;
        }
    }

    /// Structural validation. Returns the conversational-convention
    /// warnings (non-fatal) on success.
    pub fn validate(&self) -> Result<Vec<String>, TranscriptError> {
        if self.utterances.is_empty() {
            return Err(TranscriptError::EmptyDialogue {
                id: self.id.clone(),
            });
        }
        if self.topic.question_text.trim().is_empty() {
            return Err(TranscriptError::EmptyQuestionText {
                id: self.id.clone(),
            });
        }
        if !self
            .utterances
            .iter()
            .any(|u| u.speaker == Speaker::Chatbot)
        {
            return Err(TranscriptError::NoChatbotUtterance {
                id: self.id.clone(),
            });
        }
        for u in &self.utterances {
            match u.speaker {
                Speaker::User => {
                    if u.chatbot_da.is_some() {
                        return Err(TranscriptError::FieldSpeakerMismatch {
                            id: self.id.clone(),
                            turn: u.turn_index,
                            field: "chatbot_da",
                            speaker: "user",
                        });
                    }
                    if u.gold_label.is_some() {
                        return Err(TranscriptError::FieldSpeakerMismatch {
                            id: self.id.clone(),
                            turn: u.turn_index,
                            field: "gold_label",
                            speaker: "user",
                        });
                    }
                }
                Speaker::Chatbot => {
                    if u.user_da.is_some() {
                        return Err(TranscriptError::FieldSpeakerMismatch {
                            id: self.id.clone(),
                            turn: u.turn_index,
                            field: "user_da",
                            speaker: "chatbot",
                        });
                    }
                }
            }
        }
        let mut warnings = Vec::new();
        let first = &self.utterances[0];
        if first.speaker != Speaker::Chatbot || !first.text.trim_end().ends_with('?') {
            warnings.push(format!(
                "dialogue `{}`: first utterance is not the chatbot's interview question",
                self.id
            ));
        }
        Ok(warnings)
    }

    /// Iterator over (turn_index, utterance) for chatbot turns.
    pub fn chatbot_turns(&self) -> impl Iterator<Item = (usize, &Utterance)> {
        self.utterances
            .iter()
            .enumerate()
            .filter(|(_, u)| u.speaker == Speaker::Chatbot)
    }
}
