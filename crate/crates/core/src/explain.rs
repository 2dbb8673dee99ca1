//! Dialogue-act mismatch explanations for classified chatbot responses,
//! plus grouped Markdown / JSON reporting.

use crate::forest::Prediction;
use crate::taxonomy::{is_compatible, ChatbotDA, CompatibilityMatrix, UserDA};
use crate::transcript::{Appropriateness, Dialogue, Speaker};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Turns of context shown before the explained response.
pub const CONTEXT_WINDOW: usize = 2;
/// Example cap per mismatch group in the report.
pub const EXAMPLES_PER_GROUP: usize = 5;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("dialogue `{dialogue_id}` has no turn {turn_index}")]
    NoSuchTurn {
        dialogue_id: String,
        turn_index: usize,
    },
    #[error("turn {turn_index} of dialogue `{dialogue_id}` is not a chatbot turn")]
    NotAChatbotTurn {
        dialogue_id: String,
        turn_index: usize,
    },
    #[error("turn {turn_index} of dialogue `{dialogue_id}` has no chatbot dialogue act; annotate first")]
    MissingChatbotDA {
        dialogue_id: String,
        turn_index: usize,
    },
    #[error("user turn {turn_index} of dialogue `{dialogue_id}` has no user dialogue act; annotate first")]
    MissingUserDA {
        dialogue_id: String,
        turn_index: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextLine {
    pub speaker: Speaker,
    pub turn_index: usize,
    pub text: String,
}

/// Why one chatbot response received its label, stated in dialogue-act
/// terms.
#[derive(Debug, Clone, Serialize)]
pub struct Explanation {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub predicted: Appropriateness,
    pub votes: [u64; 3],
    pub vote_margin: u64,
    pub chatbot_da: ChatbotDA,
    /// Act of the most recent preceding user turn, if any.
    pub user_da: Option<UserDA>,
    pub compatible: bool,
    /// Chatbot acts the compatibility matrix would have accepted here.
    pub expected_das: Vec<ChatbotDA>,
    /// The explained turn plus up to [`CONTEXT_WINDOW`] preceding turns.
    pub context: Vec<ContextLine>,
    pub narrative: String,
}

impl Explanation {
    /// Stable key naming the (user act, chatbot act) exchange.
    pub fn pair_key(&self) -> String {
        match self.user_da {
            Some(u) => format!("{} / {}", u.code(), self.chatbot_da.code()),
            None => format!("(no user context) / {}", self.chatbot_da.code()),
        }
    }
}

/// Builds the mismatch explanation for one annotated chatbot turn.
pub fn explain_response(
    dialogue: &Dialogue,
    turn_index: usize,
    prediction: &Prediction,
    matrix: &CompatibilityMatrix,
) -> Result<Explanation, ExplainError> {
    let utterance =
        dialogue
            .utterances
            .get(turn_index)
            .ok_or_else(|| ExplainError::NoSuchTurn {
                dialogue_id: dialogue.id.clone(),
                turn_index,
            })?;
    if utterance.speaker != Speaker::Chatbot {
        return Err(ExplainError::NotAChatbotTurn {
            dialogue_id: dialogue.id.clone(),
            turn_index,
        });
    }
    let chatbot_da = utterance
        .chatbot_da
        .ok_or_else(|| ExplainError::MissingChatbotDA {
            dialogue_id: dialogue.id.clone(),
            turn_index,
        })?;

    let prev_user = dialogue.utterances[..turn_index]
        .iter()
        .enumerate()
        .rev()
        .find(|(_, u)| u.speaker == Speaker::User);
    let user_da = match prev_user {
        Some((i, u)) => Some(u.user_da.ok_or_else(|| ExplainError::MissingUserDA {
            dialogue_id: dialogue.id.clone(),
            turn_index: i,
        })?),
        None => None,
    };

    let (compatible, expected_das) = match user_da {
        // no user context to contradict, so the act is vacuously compatible
        None => (true, Vec::new()),
        Some(u) => (
            is_compatible(u, chatbot_da, matrix),
            matrix.allowed(u).to_vec(),
        ),
    };

    let context_start = turn_index.saturating_sub(CONTEXT_WINDOW);
    let context = dialogue.utterances[context_start..=turn_index]
        .iter()
        .map(|u| ContextLine {
            speaker: u.speaker,
            turn_index: u.turn_index,
            text: u.text.clone(),
        })
        .collect();

    let narrative = match user_da {
        None => format!(
            "The response was tagged `{}`. No user turn precedes it, so there \
             is no user context to contradict and the act is treated as compatible.",
            chatbot_da.code()
        ),
        Some(u) if compatible => format!(
            "The response was tagged `{}`, which is a compatible reply to the \
             preceding user act `{}`.",
            chatbot_da.code(),
            u.code()
        ),
        Some(u) => {
            let expected = expected_das
                .iter()
                .map(|d| format!("`{}`", d.code()))
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "The response was tagged `{}`, which is not a valid reply to the \
                 preceding user act `{}`. Expected one of: {}.",
                chatbot_da.code(),
                u.code(),
                expected
            )
        }
    };

    Ok(Explanation {
        dialogue_id: dialogue.id.clone(),
        turn_index,
        predicted: prediction.label,
        votes: prediction.votes,
        vote_margin: prediction.margin(),
        chatbot_da,
        user_da,
        compatible,
        expected_das,
        context,
        narrative,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportGroup {
    pub pair: String,
    pub count: usize,
    pub compatible: bool,
    /// Up to [`EXAMPLES_PER_GROUP`] representative explanations.
    pub examples: Vec<Explanation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub total_responses: usize,
    /// Responses per predicted label, in fixed class order.
    pub label_counts: [usize; 3],
    pub incompatible_responses: usize,
    /// One group per observed exchange pair; every explained response
    /// belongs to exactly one group.
    pub groups: Vec<ReportGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

/// Groups explanations by exchange pair: incompatible pairs first,
/// descending frequency, then pair name for determinism.
pub fn build_report(explanations: &[Explanation]) -> Report {
    let mut label_counts = [0usize; 3];
    for e in explanations {
        label_counts[e.predicted.index()] += 1;
    }
    let mut by_pair: BTreeMap<String, Vec<&Explanation>> = BTreeMap::new();
    for e in explanations {
        by_pair.entry(e.pair_key()).or_default().push(e);
    }
    let mut groups: Vec<ReportGroup> = by_pair
        .into_iter()
        .map(|(pair, members)| ReportGroup {
            pair,
            count: members.len(),
            compatible: members[0].compatible,
            examples: members
                .iter()
                .take(EXAMPLES_PER_GROUP)
                .map(|e| (*e).clone())
                .collect(),
        })
        .collect();
    groups.sort_by(|a, b| {
        a.compatible
            .cmp(&b.compatible)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.pair.cmp(&b.pair))
    });
    Report {
        total_responses: explanations.len(),
        label_counts,
        incompatible_responses: explanations.iter().filter(|e| !e.compatible).count(),
        groups,
    }
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes")
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            writeln!(out, "# Response appropriateness report").unwrap();
            writeln!(out).unwrap();
            writeln!(out, "Responses analyzed: {}", report.total_responses).unwrap();
            for (i, class) in Appropriateness::ALL.iter().enumerate() {
                writeln!(out, "- {}: {}", class.name(), report.label_counts[i]).unwrap();
            }
            writeln!(
                out,
                "- Dialogue-act mismatches: {}",
                report.incompatible_responses
            )
            .unwrap();
            for group in &report.groups {
                writeln!(out).unwrap();
                let kind = if group.compatible {
                    "compatible"
                } else {
                    "mismatch"
                };
                writeln!(
                    out,
                    "## {} — {} response(s) ({})",
                    group.pair, group.count, kind
                )
                .unwrap();
                for e in &group.examples {
                    writeln!(out).unwrap();
                    writeln!(
                        out,
                        "### `{}` turn {} — predicted {} (votes {:?}, margin {})",
                        e.dialogue_id, e.turn_index, e.predicted, e.votes, e.vote_margin
                    )
                    .unwrap();
                    for line in &e.context {
                        let who = match line.speaker {
                            Speaker::User => "User",
                            Speaker::Chatbot => "Chatbot",
                        };
                        writeln!(out, "> {}: {}", who, line.text).unwrap();
                    }
                    writeln!(out).unwrap();
                    writeln!(out, "{}", e.narrative).unwrap();
                }
            }
            out
        }
    }
}
