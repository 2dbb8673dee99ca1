//! Seeded synthetic-corpus generation from taxonomy template banks.
//!
//! Every generated utterance carries its gold DA and every chatbot turn a
//! gold appropriateness label. A chosen fraction of chatbot replies is
//! planted with a DA that is incompatible with the preceding user DA and
//! labeled `Inappropriate`; filler acknowledgments and the opening
//! interview question get `Neutral`; everything else `Appropriate`.

use super::topics::builtin_topics;
use super::{Appropriateness, Dialogue, Speaker, Utterance};
use crate::taxonomy::{default_ruleset, ChatbotDA, UserDA};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub n_dialogues: usize,
    pub seed: u64,
    /// Fraction of chatbot responses planted with an incompatible DA.
    pub mismatch_rate: f64,
}

const USER_DA_WEIGHTS: &[(UserDA, u32)] = &[
    (UserDA::AnswerRelevant, 40),
    (UserDA::QuestionRelevant, 6),
    (UserDA::RespondIrrelevant, 8),
    (UserDA::QuestionIrrelevant, 6),
    (UserDA::Excuses, 6),
    (UserDA::Acknowledge, 8),
    (UserDA::Request, 6),
    (UserDA::Command, 6),
    (UserDA::Complain, 4),
    (UserDA::SocialObligations, 6),
    (UserDA::Gibberish, 4),
];

fn user_texts(da: UserDA, topic_id: &str) -> &'static [&'static str] {
    match da {
        UserDA::AnswerRelevant => match topic_id {
            "living" => &[
                "I work as an engineer at a small company.",
                "I am a student at the university.",
                "I teach at a local school.",
                "I run my own business.",
            ],
            "friend-qualities" => &[
                "I am loyal and honest.",
                "My friends say I am a good listener.",
                "I am supportive and caring.",
                "I am patient and trustworthy.",
            ],
            "challenge" => &[
                "I failed an exam but studied hard and overcame it.",
                "I struggled with an injury and fought to recover.",
                "It was tough but I managed to push through.",
            ],
            // hobbies and custom topics
            _ => &[
                "I like swimming and reading.",
                "I enjoy playing chess.",
                "I love hiking and photography.",
                "Mostly music and video games.",
            ],
        },
        UserDA::QuestionRelevant => &[
            "Why are you asking?",
            "What do you mean by that?",
            "Can you explain the question?",
        ],
        UserDA::RespondIrrelevant => &[
            "I like blue most.",
            "The weather is nice today.",
            "My cat is sleeping.",
        ],
        UserDA::QuestionIrrelevant => &[
            "What are your capabilities?",
            "What is your favorite color?",
            "Who made you?",
        ],
        UserDA::Excuses => &[
            "This is personal.",
            "I would rather not say.",
            "Sorry, that is private.",
        ],
        UserDA::Acknowledge => &["Got it!", "Okay.", "I see."],
        UserDA::Request => &[
            "Tell me a joke.",
            "Give me a fun fact.",
            "Show me something interesting.",
        ],
        UserDA::Command => &["Next question.", "Skip this one.", "Stop the chat."],
        UserDA::Complain => &[
            "You didn't listen. I just answered it.",
            "You already asked me that.",
            "This chat is not going well.",
        ],
        UserDA::SocialObligations => &["Thank you!", "Thanks a lot.", "Sorry about that."],
        UserDA::Gibberish => &["blea blahe", "asdf qwer", "zxcv mnbp", "5"],
        UserDA::Other => &["Wow."],
    }
}

fn chatbot_texts(da: ChatbotDA) -> &'static [&'static str] {
    match da {
        ChatbotDA::RespondRelevant => &[
            "Thanks for sharing. That sounds wonderful.",
            "That is really interesting, thanks for telling me.",
            "I appreciate you sharing that with me.",
        ],
        ChatbotDA::Acknowledge => &["Okay.", "I see.", "Alright."],
        ChatbotDA::AskFollowup => &[
            "Do you mind saying a bit more?",
            "Could you tell me more about that?",
            "What makes you say that?",
        ],
        ChatbotDA::HandleUserQuestionIrrelevant => &[
            "Thank you for asking. I feel great!",
            "Good question, but let's stay on topic for now.",
        ],
        ChatbotDA::HandleUserExcuses => &[
            "I understand. We'll continue then.",
            "No worries, we can move on.",
        ],
        ChatbotDA::HandleUserRequest => &[
            "Why was the math book sad? Because it had too many problems.",
            "Here you go, happy to help with that.",
        ],
        ChatbotDA::HandleUserCommand => &[
            "That's okay. Let's move on then.",
            "Sure, moving on to the next question.",
        ],
        ChatbotDA::EchoUserRespondIrrelevant => &[
            "I'd love to cheer you up if I could.",
            "That may be off topic, but I hear you.",
        ],
        ChatbotDA::HandleUserComplain => &[
            "Sorry, I must have missed it.",
            "My apologies, let me try to do better.",
        ],
        ChatbotDA::SocialObligations => &[
            "You're most welcome.",
            "My pleasure, thank you for chatting.",
        ],
        ChatbotDA::RespondDefaultFallback => &[
            "My bad, I didn't recognize your inputs. Let's try again.",
            "Hmm, I didn't quite catch that. Let's try again.",
        ],
        // repeat text is the topic question, handled at the call site
        ChatbotDA::Repeat => &[],
        ChatbotDA::HandleGibberish => &[
            "Sorry I didn't understand. Please use English.",
            "I couldn't read that. Please use English words.",
        ],
        ChatbotDA::Other => &[
            "Sorry I got disconnected. Let's continue.",
            "One moment please.",
        ],
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, options: &'a [&'a str]) -> &'a str {
    options[rng.gen_range(0..options.len())]
}

fn pick_user_da(rng: &mut ChaCha8Rng) -> UserDA {
    let total: u32 = USER_DA_WEIGHTS.iter().map(|(_, w)| w).sum();
    let mut roll = rng.gen_range(0..total);
    for (da, w) in USER_DA_WEIGHTS {
        if roll < *w {
            return *da;
        }
        roll -= w;
    }
    unreachable!()
}

fn reply_text(da: ChatbotDA, question_text: &str, rng: &mut ChaCha8Rng) -> String {
    if da == ChatbotDA::Repeat {
        question_text.to_string()
    } else {
        pick(rng, chatbot_texts(da)).to_string()
    }
}

/// Deterministically generates a labeled corpus from the template banks.
/// Pure function of `spec`: the same spec yields byte-identical output.
pub fn generate_corpus(spec: &GenSpec) -> Vec<Dialogue> {
    let rate = spec.mismatch_rate.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let matrix = default_ruleset().compatibility;
    let topics = builtin_topics();

    let mut dialogues = Vec::with_capacity(spec.n_dialogues);
    // (dialogue index, turn index) of reply slots eligible for mismatch
    let mut eligible: Vec<(usize, usize)> = Vec::new();
    let mut labeled_responses = 0usize;

    for d in 0..spec.n_dialogues {
        let topic = &topics[rng.gen_range(0..topics.len())];
        let mut utterances = Vec::new();

        let mut opener = Utterance::chatbot(topic.question_text);
        opener.chatbot_da = Some(ChatbotDA::Other);
        opener.gold_label = Some(Appropriateness::Neutral);
        utterances.push(opener);
        labeled_responses += 1;

        let n_exchanges = rng.gen_range(2..=5);
        for _ in 0..n_exchanges {
            let user_da = pick_user_da(&mut rng);
            let mut user = Utterance::user(pick(&mut rng, user_texts(user_da, topic.topic_id)));
            user.user_da = Some(user_da);
            utterances.push(user);

            let row = matrix.allowed(user_da);
            let reply_da = row[rng.gen_range(0..row.len())];
            let mut reply =
                Utterance::chatbot(reply_text(reply_da, topic.question_text, &mut rng));
            reply.chatbot_da = Some(reply_da);
            reply.gold_label = Some(if reply_da == ChatbotDA::Acknowledge {
                Appropriateness::Neutral
            } else {
                Appropriateness::Appropriate
            });
            eligible.push((d, utterances.len()));
            utterances.push(reply);
            labeled_responses += 1;
        }

        dialogues.push(Dialogue::new(
            format!("dlg-{d:05}"),
            topic.topic_ref(),
            utterances,
        ));
    }

    // Plant mismatches on a seeded selection of reply slots so the overall
    // Inappropriate fraction tracks mismatch_rate over all labeled responses.
    let planted = ((rate * labeled_responses as f64).round() as usize).min(eligible.len());
    eligible.shuffle(&mut rng);
    for &(d, turn) in eligible.iter().take(planted) {
        let dialogue = &mut dialogues[d];
        let user_da = dialogue.utterances[turn - 1]
            .user_da
            .expect("reply slots follow a user turn");
        let row = matrix.allowed(user_da);
        let incompatible: Vec<ChatbotDA> = ChatbotDA::ALL
            .iter()
            .copied()
            .filter(|da| !row.contains(da))
            .collect();
        let bad_da = incompatible[rng.gen_range(0..incompatible.len())];
        let question = dialogue.topic.question_text.clone();
        let reply = &mut dialogue.utterances[turn];
        reply.text = reply_text(bad_da, &question, &mut rng);
        reply.chatbot_da = Some(bad_da);
        reply.gold_label = Some(Appropriateness::Inappropriate);
        debug_assert_eq!(reply.speaker, Speaker::Chatbot);
    }

    dialogues
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dialogues_is_empty() {
        let spec = GenSpec {
            n_dialogues: 0,
            seed: 1,
            mismatch_rate: 0.2,
        };
        assert!(generate_corpus(&spec).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec {
            n_dialogues: 100,
            seed: 7,
            mismatch_rate: 0.15,
        };
        let a = generate_corpus(&spec);
        let b = generate_corpus(&spec);
        assert_eq!(a, b);
    }

    #[test]
    fn mismatch_fraction_tracks_rate() {
        let spec = GenSpec {
            n_dialogues: 800,
            seed: 7,
            mismatch_rate: 0.15,
        };
        let corpus = generate_corpus(&spec);
        let mut total = 0usize;
        let mut inappropriate = 0usize;
        for d in &corpus {
            for (_, u) in d.chatbot_turns() {
                total += 1;
                if u.gold_label == Some(Appropriateness::Inappropriate) {
                    inappropriate += 1;
                }
            }
        }
        let frac = inappropriate as f64 / total as f64;
        assert!((frac - 0.15).abs() <= 0.03, "fraction {frac}");
    }

    #[test]
    fn every_turn_carries_gold_annotations() {
        let spec = GenSpec {
            n_dialogues: 50,
            seed: 3,
            mismatch_rate: 0.1,
        };
        for d in generate_corpus(&spec) {
            d.validate().unwrap();
            for u in &d.utterances {
                match u.speaker {
                    Speaker::User => assert!(u.user_da.is_some()),
                    Speaker::Chatbot => {
                        assert!(u.chatbot_da.is_some());
                        assert!(u.gold_label.is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn planted_labels_agree_with_compatibility() {
        use crate::taxonomy::is_compatible;
        let matrix = default_ruleset().compatibility;
        let spec = GenSpec {
            n_dialogues: 60,
            seed: 11,
            mismatch_rate: 0.25,
        };
        for d in generate_corpus(&spec) {
            for (turn, u) in d.chatbot_turns() {
                if turn == 0 {
                    continue;
                }
                let user_da = d.utterances[turn - 1].user_da.unwrap();
                let compatible = is_compatible(user_da, u.chatbot_da.unwrap(), &matrix);
                match u.gold_label.unwrap() {
                    Appropriateness::Inappropriate => assert!(!compatible),
                    _ => assert!(compatible),
                }
            }
        }
    }
}
