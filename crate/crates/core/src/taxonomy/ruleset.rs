//! Loading and validation of the stage-2 mapping rules and the
//! user↔chatbot compatibility matrix.

use super::{ChatbotDA, PositionContext, Relevance, SwdaTag, UserDA};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RulesetError {
    #[error("failed to read ruleset file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ruleset: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("no rule covers cell (tag={tag}, relevance={relevance:?}, context={context:?}); a catch-all rule is required")]
    UncoveredCell {
        tag: SwdaTag,
        relevance: Relevance,
        context: PositionContext,
    },
    #[error("ambiguous rules: cell (tag={tag}, relevance={relevance:?}, context={context:?}) is covered by more than one rule at priority {priority}")]
    AmbiguousCell {
        tag: SwdaTag,
        relevance: Relevance,
        context: PositionContext,
        priority: i32,
    },
    #[error("compatibility matrix is missing or empty for row `{0}`")]
    EmptyMatrixRow(UserDA),
    #[error("compatibility row for `user-other` must allow every chatbot DA")]
    IncompleteCatchAllRow,
}

/// Which SwDA tags a rule applies to: one concrete tag or any tag
/// (the latter is how the mandatory catch-all is expressed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPattern {
    Tag(SwdaTag),
    Any,
}

impl TagPattern {
    fn matches(self, tag: SwdaTag) -> bool {
        match self {
            TagPattern::Tag(t) => t == tag,
            TagPattern::Any => true,
        }
    }
}

impl Serialize for TagPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TagPattern::Tag(t) => s.serialize_str(t.code()),
            TagPattern::Any => s.serialize_str("any"),
        }
    }
}

impl<'de> Deserialize<'de> for TagPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        if code == "any" {
            return Ok(TagPattern::Any);
        }
        SwdaTag::from_code(&code)
            .map(TagPattern::Tag)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown SwDA tag `{code}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelevanceCondition {
    RequiresRelevant,
    RequiresIrrelevant,
    Any,
}

impl RelevanceCondition {
    fn matches(self, relevance: Relevance) -> bool {
        match self {
            RelevanceCondition::RequiresRelevant => relevance == Relevance::Relevant,
            RelevanceCondition::RequiresIrrelevant => relevance == Relevance::Irrelevant,
            RelevanceCondition::Any => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextCondition {
    AfterInterviewQuestion,
    AfterChatbotStatement,
    Any,
}

impl ContextCondition {
    fn matches(self, context: PositionContext) -> bool {
        match self {
            ContextCondition::AfterInterviewQuestion => context == PositionContext::AfterQuestion,
            ContextCondition::AfterChatbotStatement => context == PositionContext::AfterStatement,
            ContextCondition::Any => true,
        }
    }
}

/// One edge of the stage-2 rule tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingRule {
    pub tag: TagPattern,
    pub relevance: RelevanceCondition,
    pub context: ContextCondition,
    pub result: UserDA,
    pub priority: i32,
}

impl MappingRule {
    pub fn matches(&self, tag: SwdaTag, relevance: Relevance, context: PositionContext) -> bool {
        self.tag.matches(tag) && self.relevance.matches(relevance) && self.context.matches(context)
    }
}

/// For each user DA, the set of chatbot DAs considered appropriate replies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompatibilityMatrix {
    rows: BTreeMap<UserDA, Vec<ChatbotDA>>,
}

impl CompatibilityMatrix {
    pub fn allowed(&self, user_da: UserDA) -> &[ChatbotDA] {
        self.rows.get(&user_da).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Mapping rules plus compatibility matrix, as loaded from one JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ruleset {
    pub mapping_rules: Vec<MappingRule>,
    pub compatibility: CompatibilityMatrix,
}

impl Ruleset {
    /// Totality and matrix validation. Every (tag, relevance, context) cell
    /// must be covered by exactly one highest-priority rule, every user DA
    /// needs a non-empty matrix row, and the `user-other` row must span the
    /// full chatbot DA set.
    pub fn validate(&self) -> Result<(), RulesetError> {
        for &tag in SwdaTag::ALL {
            for &relevance in Relevance::ALL {
                for &context in PositionContext::ALL {
                    let top = self
                        .mapping_rules
                        .iter()
                        .filter(|r| r.matches(tag, relevance, context))
                        .map(|r| r.priority)
                        .max()
                        .ok_or(RulesetError::UncoveredCell {
                            tag,
                            relevance,
                            context,
                        })?;
                    let at_top = self
                        .mapping_rules
                        .iter()
                        .filter(|r| r.matches(tag, relevance, context) && r.priority == top)
                        .count();
                    if at_top > 1 {
                        return Err(RulesetError::AmbiguousCell {
                            tag,
                            relevance,
                            context,
                            priority: top,
                        });
                    }
                }
            }
        }
        for &da in UserDA::ALL {
            if self.compatibility.allowed(da).is_empty() {
                return Err(RulesetError::EmptyMatrixRow(da));
            }
        }
        let other_row = self.compatibility.allowed(UserDA::Other);
        if ChatbotDA::ALL.iter().any(|da| !other_row.contains(da)) {
            return Err(RulesetError::IncompleteCatchAllRow);
        }
        Ok(())
    }
}

/// Parses and validates a ruleset from JSON text.
pub fn parse_ruleset(json: &str) -> Result<Ruleset, RulesetError> {
    let ruleset: Ruleset = serde_json::from_str(json)?;
    ruleset.validate()?;
    Ok(ruleset)
}

/// Loads and validates a ruleset file.
pub fn load_ruleset(path: &Path) -> Result<Ruleset, RulesetError> {
    let json = std::fs::read_to_string(path).map_err(|source| RulesetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ruleset(&json)
}

const DEFAULT_RULESET_JSON: &str = include_str!("../../data/default_ruleset.json");

/// The bundled default rule set covering every tag/relevance/position
/// cell; ship your own file to override it.
pub fn default_ruleset() -> Ruleset {
    parse_ruleset(DEFAULT_RULESET_JSON).expect("bundled default ruleset is valid")
}
