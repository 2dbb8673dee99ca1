//! Dialogue-act label spaces and the rule machinery that connects them.
//!
//! Three taxonomies live here: the 43 Switchboard-DAMSL dialogue-behavior
//! tags used for pre-annotation, the 12 context-aware user DAs, and the
//! 14 interview-chatbot DAs. A priority-ordered rule set maps
//! (SwDA tag, relevance, position) cells onto user DAs, and a
//! compatibility matrix records which chatbot DAs count as appropriate
//! replies to each user DA.

mod ruleset;

pub use ruleset::{
    default_ruleset, load_ruleset, parse_ruleset, CompatibilityMatrix, ContextCondition,
    MappingRule, RelevanceCondition, Ruleset, RulesetError, TagPattern,
};

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $code:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            pub fn from_code(code: &str) -> Option<Self> {
                match code {
                    $($code => Some($name::$variant),)+
                    _ => None,
                }
            }

            /// Dense index in `ALL` order, used for one-hot feature layouts.
            pub fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).unwrap()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.code())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let code = String::deserialize(d)?;
                $name::from_code(&code).ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        concat!("unknown ", stringify!($name), " code `{}`"),
                        code
                    ))
                })
            }
        }
    };
}

string_enum! {
    /// The 12 context-aware user dialogue acts.
    UserDA {
        AnswerRelevant => "user-answer-relevant",
        QuestionRelevant => "user-question-relevant",
        RespondIrrelevant => "user-respond-irrelevant",
        QuestionIrrelevant => "user-question-irrelevant",
        Excuses => "user-excuses",
        Acknowledge => "user-acknowledge",
        Request => "user-request",
        Command => "user-command",
        Complain => "user-complain",
        SocialObligations => "user-social-obligations",
        Gibberish => "user-gibberish",
        Other => "user-other",
    }
}

string_enum! {
    /// The 14 context-aware interview-chatbot dialogue acts.
    ChatbotDA {
        RespondRelevant => "chatbot-respond-relevant",
        Acknowledge => "chatbot-acknowledge",
        AskFollowup => "chatbot-ask-followup",
        HandleUserQuestionIrrelevant => "chatbot-handle-user-question-irrelevant",
        HandleUserExcuses => "chatbot-handle-user-excuses",
        HandleUserRequest => "chatbot-handle-user-request",
        HandleUserCommand => "chatbot-handle-user-command",
        EchoUserRespondIrrelevant => "chatbot-echo-user-respond-irrelevant",
        HandleUserComplain => "chatbot-handle-user-complain",
        SocialObligations => "chatbot-social-obligations",
        RespondDefaultFallback => "chatbot-respond-default-fallback",
        Repeat => "chatbot-repeat",
        HandleGibberish => "chatbot-handle-gibberish",
        Other => "chatbot-other",
    }
}

string_enum! {
    /// The 43 clustered Switchboard-DAMSL dialogue-behavior tags.
    SwdaTag {
        StatementNonOpinion => "sd",
        Backchannel => "b",
        StatementOpinion => "sv",
        Agree => "aa",
        Abandoned => "%",
        Appreciation => "ba",
        YesNoQuestion => "qy",
        NonVerbal => "x",
        YesAnswer => "ny",
        ConventionalClosing => "fc",
        WhQuestion => "qw",
        NoAnswer => "nn",
        ResponseAcknowledgement => "bk",
        Hedge => "h",
        DeclarativeYesNoQuestion => "qy^d",
        OtherForwardFunction => "o",
        BackchannelQuestion => "bh",
        Quotation => "^q",
        SummarizeReformulate => "bf",
        AffirmativeNonYesAnswer => "na",
        ActionDirective => "ad",
        CollaborativeCompletion => "^2",
        RepeatPhrase => "b^m",
        OpenQuestion => "qo",
        RhetoricalQuestion => "qh",
        HoldBeforeAnswer => "^h",
        Reject => "ar",
        NegativeNonNoAnswer => "ng",
        SignalNonUnderstanding => "br",
        OtherAnswer => "no",
        ConventionalOpening => "fp",
        OrClause => "qrr",
        DispreferredAnswer => "arp_nd",
        ThirdPartyTalk => "t3",
        OffersOptionsCommits => "oo_co_cc",
        SelfTalk => "t1",
        Downplayer => "bd",
        MaybeAcceptPart => "aap_am",
        TagQuestion => "^g",
        DeclarativeWhQuestion => "qw^d",
        Apology => "fa",
        Thanking => "ft",
        Continuation => "+",
    }
}

impl SwdaTag {
    /// Lenient parse for externally pre-tagged input: unknown codes fall
    /// back to the abandoned/non-verbal tag and report a warning string.
    pub fn from_code_lenient(code: &str) -> (Self, Option<String>) {
        match Self::from_code(code) {
            Some(tag) => (tag, None),
            None => (
                SwdaTag::Abandoned,
                Some(format!("unknown SwDA tag `{code}`, treating as `%`")),
            ),
        }
    }

    /// True for the question-form tag cluster.
    pub fn is_question(self) -> bool {
        matches!(
            self,
            SwdaTag::YesNoQuestion
                | SwdaTag::WhQuestion
                | SwdaTag::OpenQuestion
                | SwdaTag::RhetoricalQuestion
                | SwdaTag::DeclarativeYesNoQuestion
                | SwdaTag::DeclarativeWhQuestion
                | SwdaTag::OrClause
                | SwdaTag::TagQuestion
                | SwdaTag::BackchannelQuestion
        )
    }
}

/// Relevance of an utterance to the active interview topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relevance {
    Relevant,
    Irrelevant,
    /// The utterance is not positioned as a reply to an interview question
    /// (or is gibberish, where topical relevance is meaningless).
    NotApplicable,
}

impl Relevance {
    pub const ALL: &'static [Relevance] = &[
        Relevance::Relevant,
        Relevance::Irrelevant,
        Relevance::NotApplicable,
    ];
}

/// Positional context of a user utterance: what kind of chatbot turn
/// most recently preceded it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionContext {
    AfterQuestion,
    AfterStatement,
}

impl PositionContext {
    pub const ALL: &'static [PositionContext] =
        &[PositionContext::AfterQuestion, PositionContext::AfterStatement];
}

/// Looks up the highest-priority rule matching the cell and returns its
/// result. The rule set is validated for totality at load time, so a
/// match always exists.
pub fn apply_mapping(
    tag: SwdaTag,
    relevance: Relevance,
    context: PositionContext,
    rules: &[MappingRule],
) -> UserDA {
    rules
        .iter()
        .filter(|r| r.matches(tag, relevance, context))
        .max_by_key(|r| r.priority)
        .map(|r| r.result)
        .unwrap_or(UserDA::Other)
}

/// True iff `chatbot_da` is an appropriate reply to `user_da` under the
/// given matrix.
pub fn is_compatible(
    user_da: UserDA,
    chatbot_da: ChatbotDA,
    matrix: &CompatibilityMatrix,
) -> bool {
    matrix.allowed(user_da).contains(&chatbot_da)
}
