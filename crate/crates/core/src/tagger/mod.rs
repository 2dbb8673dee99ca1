//! Two-stage cascading DA auto-annotation.
//!
//! Stage 1 assigns a Switchboard-DAMSL-style tag to each user utterance,
//! either from surface heuristics or carried in from an external tagger
//! (PreTagged mode). Relevance against the interview topic and the
//! positional context then feed the stage-2 rule mapping into user DAs.
//! Chatbot turns without designer-provided labels get a heuristic
//! chatbot DA.

mod lexicons;

pub use lexicons::Lexicons;

use crate::taxonomy::{
    apply_mapping, ChatbotDA, MappingRule, PositionContext, Relevance, SwdaTag, UserDA,
};
use crate::text::{content_tokens, cosine, count_vector, normalized_similarity, tokenize};
use crate::transcript::{topic_by_id, Dialogue, Speaker, TopicRef, Utterance};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("dialogue `{id}` utterance {turn}: PreTagged mode requires swda_tag on every user utterance")]
    MissingPreTag { id: String, turn: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaggerMode {
    Heuristic,
    PreTagged,
}

#[derive(Debug, Clone)]
pub struct TaggerConfig {
    pub mode: TaggerMode,
    /// Fraction of non-whitespace characters that are non-alphabetic at or
    /// above which an utterance counts as gibberish.
    pub gibberish_nonalpha_threshold: f64,
    /// Fraction of alphabetic tokens outside the known-word list at or
    /// above which an utterance counts as gibberish.
    pub gibberish_oov_threshold: f64,
    /// Cosine similarity at or above which an utterance is topic-relevant.
    pub relevance_threshold: f64,
    /// Normalized edit similarity at or above which a chatbot turn counts
    /// as a repeat of an earlier one.
    pub repeat_similarity_threshold: f64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            mode: TaggerMode::Heuristic,
            gibberish_nonalpha_threshold: 0.5,
            gibberish_oov_threshold: 0.8,
            relevance_threshold: 0.15,
            repeat_similarity_threshold: 0.9,
        }
    }
}

/// Gibberish surface checks shared by stage 1 and the relevance gate.
pub fn looks_gibberish(text: &str, config: &TaggerConfig, lexicons: &Lexicons) -> bool {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return true;
    }
    let nonalpha = chars.iter().filter(|c| !c.is_alphabetic()).count();
    if nonalpha as f64 / chars.len() as f64 >= config.gibberish_nonalpha_threshold {
        return true;
    }
    let tokens: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| t.chars().all(|c| c.is_alphabetic()))
        .collect();
    if tokens.is_empty() {
        return false;
    }
    let oov = tokens
        .iter()
        .filter(|t| !lexicons.wordlist.contains(t.as_str()))
        .count();
    oov as f64 / tokens.len() as f64 >= config.gibberish_oov_threshold
}

const WH_WORDS: &[&str] = &["what", "who", "whom", "whose", "where", "when", "why", "how", "which"];

fn heuristic_tag(text: &str, config: &TaggerConfig, lexicons: &Lexicons) -> SwdaTag {
    if looks_gibberish(text, config, lexicons) {
        return SwdaTag::Abandoned;
    }
    let tokens = tokenize(text);
    let first = tokens.first().map(String::as_str).unwrap_or("");
    if text.trim_end().ends_with('?') {
        return if WH_WORDS.contains(&first) {
            SwdaTag::WhQuestion
        } else {
            SwdaTag::YesNoQuestion
        };
    }
    if lexicons.imperative_verbs.contains(first) {
        return SwdaTag::ActionDirective;
    }
    if tokens.iter().any(|t| lexicons.thanks.contains(t.as_str())) {
        return SwdaTag::Thanking;
    }
    if tokens.iter().any(|t| lexicons.apologies.contains(t.as_str())) {
        return SwdaTag::Apology;
    }
    if tokens.iter().any(|t| lexicons.greetings.contains(t.as_str())) {
        return SwdaTag::ConventionalClosing;
    }
    if tokens.len() <= 3 && !tokens.is_empty() {
        if tokens.iter().all(|t| lexicons.agreement.contains(t.as_str())) {
            return SwdaTag::Agree;
        }
        if tokens
            .iter()
            .all(|t| lexicons.acknowledgments.contains(t.as_str()))
        {
            return SwdaTag::Backchannel;
        }
    }
    SwdaTag::StatementNonOpinion
}

/// Stage-1 tag for a user utterance. In PreTagged mode the carried tag is
/// returned verbatim; Heuristic mode applies the ordered surface rules.
pub fn tag_stage1(
    utterance: &Utterance,
    dialogue: &Dialogue,
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> Result<SwdaTag, TaggerError> {
    debug_assert_eq!(utterance.speaker, Speaker::User);
    match config.mode {
        TaggerMode::PreTagged => utterance.swda_tag.ok_or_else(|| TaggerError::MissingPreTag {
            id: dialogue.id.clone(),
            turn: utterance.turn_index,
        }),
        TaggerMode::Heuristic => Ok(heuristic_tag(&utterance.text, config, lexicons)),
    }
}

/// Positional context of the turn at `turn_index`: what the most recent
/// preceding chatbot utterance was. With no preceding chatbot turn the
/// utterance is not a reply, which we fold into `AfterStatement`.
pub fn position_context(dialogue: &Dialogue, turn_index: usize) -> PositionContext {
    dialogue.utterances[..turn_index]
        .iter()
        .rev()
        .find(|u| u.speaker == Speaker::Chatbot)
        .map(|u| {
            if u.text.trim_end().ends_with('?') {
                PositionContext::AfterQuestion
            } else {
                PositionContext::AfterStatement
            }
        })
        .unwrap_or(PositionContext::AfterStatement)
}

/// Topic vector support: seed keywords for built-in topics.
fn topic_keywords(topic: &TopicRef) -> &'static [&'static str] {
    topic_by_id(&topic.topic_id)
        .map(|t| t.seed_keywords)
        .unwrap_or(&[])
}

/// Scores how topical an utterance is. The score is the larger of the
/// cosine against the interview question itself and the cosine against
/// the topic's support vocabulary (seed keywords plus accumulated
/// on-topic answers from earlier in the dialogue), so an utterance equal
/// to the question scores 1.0 while short keyword answers still clear
/// the threshold.
pub fn score_relevance(
    text: &str,
    topic: &TopicRef,
    accumulated_answers: &[String],
    config: &TaggerConfig,
) -> (f64, Relevance) {
    let utterance_vec = count_vector(content_tokens(text).iter().map(String::as_str));
    let question_tokens = content_tokens(&topic.question_text);
    let question_vec = count_vector(question_tokens.iter().map(String::as_str));

    let mut support_tokens: Vec<String> = topic_keywords(topic)
        .iter()
        .map(|s| s.to_string())
        .collect();
    for answer in accumulated_answers {
        support_tokens.extend(content_tokens(answer));
    }
    let support_vec = count_vector(support_tokens.iter().map(String::as_str));

    let score = cosine(&utterance_vec, &question_vec).max(cosine(&utterance_vec, &support_vec));
    let relevance = if score >= config.relevance_threshold {
        Relevance::Relevant
    } else {
        Relevance::Irrelevant
    };
    (score, relevance)
}

/// The (tag, relevance, context, mapped DA) decision for one user turn.
#[derive(Debug, Clone, Copy)]
pub struct UserDecision {
    pub tag: SwdaTag,
    pub relevance: Relevance,
    pub context: PositionContext,
    pub da: UserDA,
}

/// Runs the full cascade over every user turn without touching the
/// dialogue; returns one decision per user turn in order.
pub fn infer_user_das(
    dialogue: &Dialogue,
    rules: &[MappingRule],
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> Result<Vec<(usize, UserDecision)>, TaggerError> {
    let mut decisions = Vec::new();
    let mut accumulated: Vec<String> = Vec::new();
    for (i, u) in dialogue.utterances.iter().enumerate() {
        if u.speaker != Speaker::User {
            continue;
        }
        let tag = tag_stage1(u, dialogue, config, lexicons)?;
        let context = position_context(dialogue, i);
        let relevance = if looks_gibberish(&u.text, config, lexicons) {
            Relevance::NotApplicable
        } else if context == PositionContext::AfterQuestion {
            score_relevance(&u.text, &dialogue.topic, &accumulated, config).1
        } else if tag == SwdaTag::Abandoned {
            // pre-tagged abandoned turn that does not look like gibberish:
            // keep it out of the gibberish mapping cell
            Relevance::Irrelevant
        } else {
            Relevance::NotApplicable
        };
        let da = apply_mapping(tag, relevance, context, rules);
        let effective = u.user_da.unwrap_or(da);
        if effective == UserDA::AnswerRelevant {
            accumulated.push(u.text.clone());
        }
        decisions.push((
            i,
            UserDecision {
                tag,
                relevance,
                context,
                da,
            },
        ));
    }
    Ok(decisions)
}

/// Fills `user_da` (and the stage-1 `swda_tag` in heuristic mode) on every
/// user turn that lacks one. Idempotent; chatbot turns are untouched.
pub fn annotate_user_das(
    dialogue: &Dialogue,
    rules: &[MappingRule],
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> Result<Dialogue, TaggerError> {
    let decisions = infer_user_das(dialogue, rules, config, lexicons)?;
    let mut out = dialogue.clone();
    for (i, decision) in decisions {
        let u = &mut out.utterances[i];
        if u.swda_tag.is_none() {
            u.swda_tag = Some(decision.tag);
        }
        if u.user_da.is_none() {
            u.user_da = Some(decision.da);
        }
    }
    Ok(out)
}

/// Heuristic chatbot DA for the turn at `turn_index`, ignoring any label
/// already present.
pub fn infer_chatbot_da(
    dialogue: &Dialogue,
    turn_index: usize,
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> ChatbotDA {
    let u = &dialogue.utterances[turn_index];
    debug_assert_eq!(u.speaker, Speaker::Chatbot);
    let text_lower = u.text.to_lowercase();

    let repeats_earlier = dialogue.utterances[..turn_index]
        .iter()
        .filter(|e| e.speaker == Speaker::Chatbot)
        .any(|e| normalized_similarity(&e.text, &u.text) >= config.repeat_similarity_threshold);
    if repeats_earlier {
        return ChatbotDA::Repeat;
    }
    if lexicons
        .fallback_phrases
        .iter()
        .any(|p| text_lower.contains(p))
    {
        return ChatbotDA::RespondDefaultFallback;
    }
    let after_user = turn_index > 0 && dialogue.utterances[turn_index - 1].speaker == Speaker::User;
    if after_user && u.text.trim_end().ends_with('?') {
        return ChatbotDA::AskFollowup;
    }
    let tokens = tokenize(&u.text);
    if !tokens.is_empty()
        && tokens.len() <= 3
        && tokens
            .iter()
            .all(|t| lexicons.acknowledgments.contains(t.as_str()))
    {
        return ChatbotDA::Acknowledge;
    }
    for (da, phrases) in &lexicons.handler_phrases {
        if phrases.iter().any(|p| text_lower.contains(p)) {
            return *da;
        }
    }
    ChatbotDA::Other
}

/// Fills `chatbot_da` on chatbot turns that lack one. Designer-provided
/// labels are never overwritten.
pub fn annotate_chatbot_das(
    dialogue: &Dialogue,
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> Dialogue {
    let mut out = dialogue.clone();
    for i in 0..out.utterances.len() {
        if out.utterances[i].speaker != Speaker::Chatbot || out.utterances[i].chatbot_da.is_some() {
            continue;
        }
        out.utterances[i].chatbot_da = Some(infer_chatbot_da(dialogue, i, config, lexicons));
    }
    out
}

/// Full annotation pass: user DAs then chatbot DAs.
pub fn annotate_dialogue(
    dialogue: &Dialogue,
    rules: &[MappingRule],
    config: &TaggerConfig,
    lexicons: &Lexicons,
) -> Result<Dialogue, TaggerError> {
    let with_user = annotate_user_das(dialogue, rules, config, lexicons)?;
    Ok(annotate_chatbot_das(&with_user, config, lexicons))
}
