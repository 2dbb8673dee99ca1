//! Registry of the built-in interview topics.

use super::TopicRef;

/// A registered interview topic: the question the chatbot opens with and
/// a small bank of seed keywords used when scoring answer relevance.
#[derive(Debug, Clone)]
pub struct BuiltinTopic {
    pub topic_id: &'static str,
    pub question_text: &'static str,
    pub seed_keywords: &'static [&'static str],
}

impl BuiltinTopic {
    pub fn topic_ref(&self) -> TopicRef {
        TopicRef {
            topic_id: self.topic_id.to_string(),
            question_text: self.question_text.to_string(),
        }
    }
}

const TOPICS: &[BuiltinTopic] = &[
    BuiltinTopic {
        topic_id: "hobbies",
        question_text: "What hobbies or interests do you have?",
        seed_keywords: &[
            "like", "enjoy", "love", "play", "playing", "reading", "swimming", "hiking",
            "music", "sports", "games", "gaming", "cooking", "painting", "drawing",
            "dancing", "running", "chess", "movies", "travel", "traveling", "photography",
            "gardening", "fishing", "writing", "singing", "guitar", "soccer", "basketball",
        ],
    },
    BuiltinTopic {
        topic_id: "living",
        question_text: "What do you do now for a living?",
        seed_keywords: &[
            "work", "working", "job", "student", "study", "studying", "teacher", "engineer",
            "nurse", "company", "office", "school", "university", "business", "manager",
            "developer", "designer", "freelance", "retired", "unemployed", "career", "teach", "run",
        ],
    },
    BuiltinTopic {
        topic_id: "friend-qualities",
        question_text: "What are your strongest qualities as a friend?",
        seed_keywords: &[
            "loyal", "loyalty", "honest", "honesty", "kind", "kindness", "listener",
            "listening", "supportive", "support", "caring", "patient", "patience", "funny",
            "trustworthy", "reliable", "generous", "empathetic", "friendly", "helpful",
            "friends", "friend", "good",
        ],
    },
    BuiltinTopic {
        topic_id: "challenge",
        question_text: "Tell me about a time when you didn't know if you would make it. How did you overcome that challenge?",
        seed_keywords: &[
            "overcame", "overcome", "struggled", "struggle", "difficult", "hard", "failed",
            "failure", "exam", "illness", "injury", "persevered", "persevere", "managed",
            "survived", "tough", "challenge", "fight", "fought", "recovered", "recover",
            "pushed", "push",
        ],
    },
];

/// All registered built-in topics.
pub fn builtin_topics() -> &'static [BuiltinTopic] {
    TOPICS
}

/// Looks up a built-in topic by id.
pub fn topic_by_id(topic_id: &str) -> Option<&'static BuiltinTopic> {
    TOPICS.iter().find(|t| t.topic_id == topic_id)
}
