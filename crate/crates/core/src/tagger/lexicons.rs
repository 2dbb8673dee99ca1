//! Word and phrase lists backing the heuristic taggers. Bundled defaults
//! are compiled in; any list can be overridden by a plain-text file
//! (one entry per line, `#` comments allowed) in a lexicon directory.

use crate::taxonomy::ChatbotDA;
use std::collections::HashSet;
use std::path::Path;

macro_rules! bundled {
    ($name:literal) => {
        include_str!(concat!("../../data/lexicons/", $name))
    };
}

const BUNDLED_WORDLIST: &str = include_str!("../../data/wordlist.txt");

fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

#[derive(Debug, Clone)]
pub struct Lexicons {
    /// Known English words for the out-of-vocabulary gibberish check.
    pub wordlist: HashSet<String>,
    pub imperative_verbs: HashSet<String>,
    pub thanks: HashSet<String>,
    pub apologies: HashSet<String>,
    pub greetings: HashSet<String>,
    pub agreement: HashSet<String>,
    pub acknowledgments: HashSet<String>,
    /// Substring phrases marking default-fallback chatbot messages.
    pub fallback_phrases: Vec<String>,
    /// Substring phrase lists for the handler-style chatbot DAs, checked
    /// in order.
    pub handler_phrases: Vec<(ChatbotDA, Vec<String>)>,
}

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons {
            wordlist: parse_lines(BUNDLED_WORDLIST).into_iter().collect(),
            imperative_verbs: parse_lines(bundled!("imperative_verbs.txt")).into_iter().collect(),
            thanks: parse_lines(bundled!("thanks.txt")).into_iter().collect(),
            apologies: parse_lines(bundled!("apologies.txt")).into_iter().collect(),
            greetings: parse_lines(bundled!("greetings.txt")).into_iter().collect(),
            agreement: parse_lines(bundled!("agreement.txt")).into_iter().collect(),
            acknowledgments: parse_lines(bundled!("acknowledgments.txt")).into_iter().collect(),
            fallback_phrases: parse_lines(bundled!("fallback_phrases.txt")),
            handler_phrases: vec![
                (ChatbotDA::HandleGibberish, parse_lines(bundled!("handler_gibberish.txt"))),
                (
                    ChatbotDA::HandleUserQuestionIrrelevant,
                    parse_lines(bundled!("handler_question_irrelevant.txt")),
                ),
                (ChatbotDA::HandleUserExcuses, parse_lines(bundled!("handler_excuses.txt"))),
                (ChatbotDA::HandleUserRequest, parse_lines(bundled!("handler_request.txt"))),
                (ChatbotDA::HandleUserCommand, parse_lines(bundled!("handler_command.txt"))),
                (ChatbotDA::HandleUserComplain, parse_lines(bundled!("handler_complain.txt"))),
                (ChatbotDA::SocialObligations, parse_lines(bundled!("handler_social.txt"))),
                (
                    ChatbotDA::EchoUserRespondIrrelevant,
                    parse_lines(bundled!("handler_echo_irrelevant.txt")),
                ),
                (ChatbotDA::RespondRelevant, parse_lines(bundled!("respond_relevant.txt"))),
            ],
        }
    }
}

impl Lexicons {
    /// Loads a lexicon set from a directory, falling back to the bundled
    /// defaults for any file that is absent.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut lex = Lexicons::default();
        let load_set = |name: &str, target: &mut HashSet<String>| -> std::io::Result<()> {
            let path = dir.join(name);
            if path.exists() {
                *target = parse_lines(&std::fs::read_to_string(path)?).into_iter().collect();
            }
            Ok(())
        };
        load_set("wordlist.txt", &mut lex.wordlist)?;
        load_set("imperative_verbs.txt", &mut lex.imperative_verbs)?;
        load_set("thanks.txt", &mut lex.thanks)?;
        load_set("apologies.txt", &mut lex.apologies)?;
        load_set("greetings.txt", &mut lex.greetings)?;
        load_set("agreement.txt", &mut lex.agreement)?;
        load_set("acknowledgments.txt", &mut lex.acknowledgments)?;
        let fallback = dir.join("fallback_phrases.txt");
        if fallback.exists() {
            lex.fallback_phrases = parse_lines(&std::fs::read_to_string(fallback)?);
        }
        let handler_files = [
            (ChatbotDA::HandleGibberish, "handler_gibberish.txt"),
            (ChatbotDA::HandleUserQuestionIrrelevant, "handler_question_irrelevant.txt"),
            (ChatbotDA::HandleUserExcuses, "handler_excuses.txt"),
            (ChatbotDA::HandleUserRequest, "handler_request.txt"),
            (ChatbotDA::HandleUserCommand, "handler_command.txt"),
            (ChatbotDA::HandleUserComplain, "handler_complain.txt"),
            (ChatbotDA::SocialObligations, "handler_social.txt"),
            (ChatbotDA::EchoUserRespondIrrelevant, "handler_echo_irrelevant.txt"),
            (ChatbotDA::RespondRelevant, "respond_relevant.txt"),
        ];
        for (da, file) in handler_files {
            let path = dir.join(file);
            if path.exists() {
                let phrases = parse_lines(&std::fs::read_to_string(path)?);
                if let Some(entry) = lex.handler_phrases.iter_mut().find(|(d, _)| *d == da) {
                    entry.1 = phrases;
                }
            }
        }
        Ok(lex)
    }
}
