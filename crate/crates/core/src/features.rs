//! Three-level feature extraction for chatbot responses.
//!
//! Linguistic level: unigram bag of words over the interview question and
//! the target response. Intentional level: one-hot / multi-hot DA blocks
//! for the target and its surrounding turns. Attentional level: the
//! user-chatbot exchange DA pair and the target's ordinal index.
//!
//! Block layout (fixed; total dimension `259 + |V|`):
//!
//! | offset  | width  | content                                  |
//! |---------|--------|------------------------------------------|
//! | 0       | 14     | target chatbot DA (one-hot)              |
//! | 14      | 14     | previous chatbot DAs (multi-hot)         |
//! | 28      | 14     | following chatbot DAs (multi-hot)        |
//! | 42      | 12     | most recent prior user DA (one-hot)      |
//! | 54      | 12     | previous user DAs (multi-hot)            |
//! | 66      | 12     | next user DA (one-hot)                   |
//! | 78      | 12     | following user DAs (multi-hot)           |
//! | 90      | 168    | exchange pair (one-hot, `12*c + u`)      |
//! | 258     | 1      | ordinal index of the target (1-based)    |
//! | 259     | \|V\|  | bag-of-words counts                      |

use crate::taxonomy::{ChatbotDA, UserDA};
use crate::transcript::{Appropriateness, Dialogue, Speaker};
use crate::text::tokenize;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from an empty training split")]
    EmptyTrainingSplit,
    #[error("dialogue `{id}` turn {turn} is not a chatbot utterance")]
    NotAChatbotTurn { id: String, turn: usize },
    #[error("dialogue `{id}` turn {turn} lacks a DA annotation; annotate before extracting")]
    Unannotated { id: String, turn: usize },
}

/// Ordered unigram vocabulary with a dense index map. Built from the
/// training split's topic questions and chatbot response texts only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn empty() -> Self {
        Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Rebuilds the index map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// Builds the vocabulary over topic question texts and chatbot response
/// texts (user text excluded). Order: descending count, ties alphabetical.
/// An opener turn that restates the topic question counts under both
/// sources.
pub fn build_vocabulary(
    dialogues: &[Dialogue],
    min_count: usize,
    max_size: usize,
) -> Result<Vocabulary, FeatureError> {
    if dialogues.is_empty() {
        return Err(FeatureError::EmptyTrainingSplit);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for d in dialogues {
        for token in tokenize(&d.topic.question_text) {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (_, u) in d.chatbot_turns() {
            for token in tokenize(&u.text) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .collect();
    // descending count; BTreeMap iteration already gives alphabetical ties
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    Ok(Vocabulary::from_tokens(
        ranked.into_iter().map(|(t, _)| t).collect(),
    ))
}

const N_USER: usize = 12;

pub const TARGET_DA_OFFSET: usize = 0;
pub const PREV_CHATBOT_OFFSET: usize = 14;
pub const FOLLOWING_CHATBOT_OFFSET: usize = 28;
pub const RECENT_USER_OFFSET: usize = 42;
pub const PREV_USER_OFFSET: usize = 54;
pub const NEXT_USER_OFFSET: usize = 66;
pub const FOLLOWING_USER_OFFSET: usize = 78;
pub const PAIR_OFFSET: usize = 90;
pub const ORDINAL_OFFSET: usize = 258;
pub const BOW_OFFSET: usize = 259;

/// Index of the (user DA, chatbot DA) exchange pair inside its block.
pub fn pair_index(user: UserDA, chatbot: ChatbotDA) -> usize {
    N_USER * chatbot.index() + user.index()
}

/// Feature layout bound to a vocabulary, with a content fingerprint that
/// prediction uses to refuse mismatched vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    vocab_len: usize,
    fingerprint: String,
}

impl FeatureSchema {
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"chatcheck-schema-v1:3x14+4x12+168+1+bow;");
        for token in vocab.tokens() {
            hasher.update(token.as_bytes());
            hasher.update(b"\n");
        }
        let fingerprint = format!("{:x}", hasher.finalize());
        FeatureSchema {
            vocab_len: vocab.len(),
            fingerprint,
        }
    }

    pub fn dimension(&self) -> usize {
        BOW_OFFSET + self.vocab_len
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Column name for each feature index, used by the matrix export.
    pub fn column_name(&self, index: usize, vocab: &Vocabulary) -> String {
        let chatbot = |i: usize| ChatbotDA::ALL[i].code();
        let user = |i: usize| UserDA::ALL[i].code();
        match index {
            i if i < PREV_CHATBOT_OFFSET => format!("target_{}", chatbot(i)),
            i if i < FOLLOWING_CHATBOT_OFFSET => {
                format!("prev_chatbot_{}", chatbot(i - PREV_CHATBOT_OFFSET))
            }
            i if i < RECENT_USER_OFFSET => {
                format!("following_chatbot_{}", chatbot(i - FOLLOWING_CHATBOT_OFFSET))
            }
            i if i < PREV_USER_OFFSET => format!("recent_user_{}", user(i - RECENT_USER_OFFSET)),
            i if i < NEXT_USER_OFFSET => format!("prev_user_{}", user(i - PREV_USER_OFFSET)),
            i if i < FOLLOWING_USER_OFFSET => format!("next_user_{}", user(i - NEXT_USER_OFFSET)),
            i if i < PAIR_OFFSET => format!("following_user_{}", user(i - FOLLOWING_USER_OFFSET)),
            i if i < ORDINAL_OFFSET => {
                let p = i - PAIR_OFFSET;
                format!("x_pair_{}__{}", user(p % N_USER), chatbot(p / N_USER))
            }
            ORDINAL_OFFSET => "ordinal_index".to_string(),
            i => format!("bow_{}", vocab.tokens()[i - BOW_OFFSET]),
        }
    }
}

/// Sparse feature vector for one chatbot response.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: BTreeMap<usize, f64>,
    pub label: Option<Appropriateness>,
    pub dialogue_id: String,
    pub turn_index: usize,
}

impl FeatureVector {
    pub fn get(&self, index: usize) -> f64 {
        self.values.get(&index).copied().unwrap_or(0.0)
    }

    /// Dense expansion to the schema dimension.
    pub fn to_dense(&self, dimension: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dimension];
        for (&i, &v) in &self.values {
            dense[i] = v;
        }
        dense
    }
}

/// Extracts the feature vector for the chatbot utterance at `target_index`.
pub fn extract(
    dialogue: &Dialogue,
    target_index: usize,
    vocab: &Vocabulary,
    schema: &FeatureSchema,
) -> Result<FeatureVector, FeatureError> {
    let target = dialogue
        .utterances
        .get(target_index)
        .filter(|u| u.speaker == Speaker::Chatbot)
        .ok_or_else(|| FeatureError::NotAChatbotTurn {
            id: dialogue.id.clone(),
            turn: target_index,
        })?;
    let unannotated = |turn: usize| FeatureError::Unannotated {
        id: dialogue.id.clone(),
        turn,
    };
    let target_da = target.chatbot_da.ok_or_else(|| unannotated(target_index))?;

    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    values.insert(TARGET_DA_OFFSET + target_da.index(), 1.0);

    let mut recent_user: Option<UserDA> = None;
    for (i, u) in dialogue.utterances.iter().enumerate() {
        if i == target_index {
            continue;
        }
        match u.speaker {
            Speaker::Chatbot => {
                let da = u.chatbot_da.ok_or_else(|| unannotated(i))?;
                let offset = if i < target_index {
                    PREV_CHATBOT_OFFSET
                } else {
                    FOLLOWING_CHATBOT_OFFSET
                };
                values.insert(offset + da.index(), 1.0);
            }
            Speaker::User => {
                let da = u.user_da.ok_or_else(|| unannotated(i))?;
                if i < target_index {
                    recent_user = Some(da);
                    values.insert(PREV_USER_OFFSET + da.index(), 1.0);
                } else {
                    if !values.keys().any(|&k| (NEXT_USER_OFFSET..NEXT_USER_OFFSET + N_USER).contains(&k)) {
                        values.insert(NEXT_USER_OFFSET + da.index(), 1.0);
                    }
                    values.insert(FOLLOWING_USER_OFFSET + da.index(), 1.0);
                }
            }
        }
    }
    if let Some(user_da) = recent_user {
        values.insert(RECENT_USER_OFFSET + user_da.index(), 1.0);
        values.insert(PAIR_OFFSET + pair_index(user_da, target_da), 1.0);
    }

    let ordinal = dialogue
        .chatbot_turns()
        .position(|(i, _)| i == target_index)
        .expect("target is a chatbot turn")
        + 1;
    values.insert(ORDINAL_OFFSET, ordinal as f64);

    for token in tokenize(&dialogue.topic.question_text)
        .into_iter()
        .chain(tokenize(&target.text))
    {
        if let Some(i) = vocab.index_of(&token) {
            *values.entry(BOW_OFFSET + i).or_insert(0.0) += 1.0;
        }
    }

    debug_assert!(values.keys().all(|&k| k < schema.dimension()));
    Ok(FeatureVector {
        values,
        label: target.gold_label,
        dialogue_id: dialogue.id.clone(),
        turn_index: target_index,
    })
}

/// One vector per chatbot response, in dialogue order.
pub fn extract_all(
    dialogues: &[Dialogue],
    vocab: &Vocabulary,
    schema: &FeatureSchema,
) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut dataset = Vec::new();
    for d in dialogues {
        for (i, _) in d.chatbot_turns() {
            dataset.push(extract(d, i, vocab, schema)?);
        }
    }
    Ok(dataset)
}

/// Writes the dataset as delimiter-separated values with named columns,
/// label last.
pub fn export_matrix<W: std::io::Write>(
    dataset: &[FeatureVector],
    vocab: &Vocabulary,
    schema: &FeatureSchema,
    out: &mut W,
) -> std::io::Result<()> {
    let dim = schema.dimension();
    let header: Vec<String> = (0..dim)
        .map(|i| schema.column_name(i, vocab))
        .chain(std::iter::once("label".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for v in dataset {
        let mut row: Vec<String> = v.to_dense(dim).iter().map(|x| format!("{x}")).collect();
        row.push(
            v.label
                .map(|l| l.name().to_lowercase())
                .unwrap_or_default(),
        );
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcript::{topic_by_id, Dialogue, Utterance};

    fn annotated_dialogue() -> Dialogue {
        let mut q = Utterance::chatbot("What hobbies or interests do you have?");
        q.chatbot_da = Some(ChatbotDA::Other);
        let mut a = Utterance::user("dance");
        a.user_da = Some(UserDA::AnswerRelevant);
        let mut r = Utterance::chatbot("I wish I could... but I have no feet :-)");
        r.chatbot_da = Some(ChatbotDA::HandleUserRequest);
        r.gold_label = Some(Appropriateness::Inappropriate);
        let mut follow = Utterance::user("ok");
        follow.user_da = Some(UserDA::Acknowledge);
        Dialogue::new(
            "dance",
            topic_by_id("hobbies").unwrap().topic_ref(),
            vec![q, a, r, follow],
        )
    }

    #[test]
    fn vocabulary_threshold_and_ranking() {
        let d1 = annotated_dialogue();
        // every token unique within one dialogue -> count 1 each
        let v = build_vocabulary(&[d1.clone()], 2, 5000).unwrap();
        // tokens appearing twice across the duplicated corpus survive
        let mut d2 = d1.clone();
        d2.id = "dance-copy".into();
        let v2 = build_vocabulary(&[d1.clone(), d2], 2, 5000).unwrap();
        assert!(v.is_empty() || v.len() < v2.len());
        assert!(v2.index_of("hobbies").is_some());

        let v3 = build_vocabulary(&[d1], 1, 3).unwrap();
        // the opener restates the question, so question tokens count twice:
        // "have" x3 and "i" x3, then the count-2 ties resolve alphabetically
        assert_eq!(v3.tokens(), ["have", "i", "do"]);
    }

    #[test]
    fn empty_split_is_an_error() {
        assert!(matches!(
            build_vocabulary(&[], 2, 100),
            Err(FeatureError::EmptyTrainingSplit)
        ));
    }

    #[test]
    fn dimension_formula() {
        for size in [0usize, 100] {
            let tokens: Vec<String> = (0..size).map(|i| format!("tok{i:03}")).collect();
            let vocab = Vocabulary::from_tokens(tokens);
            let schema = FeatureSchema::new(&vocab);
            assert_eq!(schema.dimension(), 259 + size);
        }
    }

    #[test]
    fn first_turn_target_encodes_absence() {
        let d = annotated_dialogue();
        let vocab = Vocabulary::empty();
        let schema = FeatureSchema::new(&vocab);
        let v = extract(&d, 0, &vocab, &schema).unwrap();
        // no prior context: recent-user, prev blocks, and pair block all zero
        for i in PREV_CHATBOT_OFFSET..FOLLOWING_CHATBOT_OFFSET {
            assert_eq!(v.get(i), 0.0);
        }
        for i in RECENT_USER_OFFSET..NEXT_USER_OFFSET {
            assert_eq!(v.get(i), 0.0);
        }
        for i in PAIR_OFFSET..ORDINAL_OFFSET {
            assert_eq!(v.get(i), 0.0);
        }
        assert_eq!(v.get(ORDINAL_OFFSET), 1.0);
    }

    #[test]
    fn dance_mismatch_pair_encoding() {
        let d = annotated_dialogue();
        let vocab = Vocabulary::empty();
        let schema = FeatureSchema::new(&vocab);
        let v = extract(&d, 2, &vocab, &schema).unwrap();
        // pair index = 12 * chatbot_index + user_index within the pair block
        let expected = PAIR_OFFSET
            + 12 * ChatbotDA::HandleUserRequest.index()
            + UserDA::AnswerRelevant.index();
        assert_eq!(v.get(expected), 1.0);
        let pair_l0: f64 = (PAIR_OFFSET..ORDINAL_OFFSET).map(|i| v.get(i)).sum();
        assert_eq!(pair_l0, 1.0);
        assert_eq!(v.get(ORDINAL_OFFSET), 2.0);
        assert_eq!(v.label, Some(Appropriateness::Inappropriate));
        // next user DA block
        assert_eq!(v.get(NEXT_USER_OFFSET + UserDA::Acknowledge.index()), 1.0);
    }

    #[test]
    fn one_hot_blocks_have_l0_at_most_one() {
        let d = annotated_dialogue();
        let vocab = build_vocabulary(&[d.clone()], 1, 5000).unwrap();
        let schema = FeatureSchema::new(&vocab);
        for (i, _) in d.chatbot_turns() {
            let v = extract(&d, i, &vocab, &schema).unwrap();
            for (start, end) in [
                (TARGET_DA_OFFSET, PREV_CHATBOT_OFFSET),
                (RECENT_USER_OFFSET, PREV_USER_OFFSET),
                (NEXT_USER_OFFSET, FOLLOWING_USER_OFFSET),
                (PAIR_OFFSET, ORDINAL_OFFSET),
            ] {
                let l0 = (start..end).filter(|&i| v.get(i) != 0.0).count();
                assert!(l0 <= 1, "block at {start} has L0 {l0}");
            }
        }
    }

    #[test]
    fn bow_counts_in_vocabulary_tokens() {
        let d = annotated_dialogue();
        let vocab = build_vocabulary(&[d.clone()], 1, 5000).unwrap();
        let schema = FeatureSchema::new(&vocab);
        let v = extract(&d, 2, &vocab, &schema).unwrap();
        let bow_sum: f64 = v
            .values
            .iter()
            .filter(|(&k, _)| k >= BOW_OFFSET)
            .map(|(_, &x)| x)
            .sum();
        let expected = tokenize(&d.topic.question_text)
            .into_iter()
            .chain(tokenize(&d.utterances[2].text))
            .filter(|t| vocab.index_of(t).is_some())
            .count();
        assert_eq!(bow_sum, expected as f64);
    }

    #[test]
    fn extract_all_counts_and_errors() {
        let d = annotated_dialogue();
        let vocab = Vocabulary::empty();
        let schema = FeatureSchema::new(&vocab);
        let dataset = extract_all(&[d.clone()], &vocab, &schema).unwrap();
        assert_eq!(dataset.len(), 2);
        assert!(extract_all(&[], &vocab, &schema).unwrap().is_empty());

        // user turn as target is rejected
        assert!(matches!(
            extract(&d, 1, &vocab, &schema),
            Err(FeatureError::NotAChatbotTurn { .. })
        ));
        // unannotated dialogue is rejected
        let mut bare = d.clone();
        bare.utterances[1].user_da = None;
        assert!(matches!(
            extract(&bare, 2, &vocab, &schema),
            Err(FeatureError::Unannotated { turn: 1, .. })
        ));
    }

    #[test]
    fn export_has_named_columns() {
        let d = annotated_dialogue();
        let vocab = build_vocabulary(&[d.clone()], 1, 5000).unwrap();
        let schema = FeatureSchema::new(&vocab);
        let dataset = extract_all(&[d], &vocab, &schema).unwrap();
        let mut buf = Vec::new();
        export_matrix(&dataset, &vocab, &schema, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains("x_pair_user-request__chatbot-repeat"));
        assert!(header.contains("bow_hobbies"));
        assert!(header.ends_with("label"));
        assert_eq!(text.lines().count(), 3);
    }
}
