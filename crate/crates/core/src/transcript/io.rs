//! Line-delimited JSON ingestion and emission of dialogue transcripts.
//!
//! One dialogue per line: `{"id", "topic_id", "question_text",
//! "utterances": [{"speaker", "text", "swda_tag"?, "user_da"?,
//! "chatbot_da"?, "gold_label"?}]}`. The field names are a contract.

use super::{Dialogue, TopicRef, Utterance};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot open transcript file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: duplicate dialogue id `{id}`")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("cannot write transcript file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid dialogue: {0}")]
    Invalid(#[from] super::TranscriptError),
}

/// A record skipped in non-strict mode.
#[derive(Debug)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

/// Result of loading a transcript file: the valid dialogues plus the
/// records skipped (non-strict mode only) and validation warnings.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub dialogues: Vec<Dialogue>,
    pub skipped: Vec<SkippedRecord>,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DialogueRecord {
    id: String,
    topic_id: String,
    question_text: String,
    utterances: Vec<Utterance>,
}

/// Loads dialogues from a line-delimited JSON file. In strict mode the
/// first malformed record aborts with its line number; otherwise
/// malformed records are skipped and reported in the outcome.
pub fn load_transcripts(path: &Path, strict: bool) -> Result<LoadOutcome, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut outcome = LoadOutcome::default();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, line_no, &mut seen_ids) {
            Ok((dialogue, warnings)) => {
                outcome.warnings.extend(warnings);
                outcome.dialogues.push(dialogue);
            }
            Err(err) => {
                if strict {
                    return Err(err);
                }
                outcome.skipped.push(SkippedRecord {
                    line: line_no,
                    reason: err.to_string(),
                });
            }
        }
    }
    Ok(outcome)
}

fn parse_record(
    line: &str,
    line_no: usize,
    seen_ids: &mut HashSet<String>,
) -> Result<(Dialogue, Vec<String>), LoadError> {
    let record: DialogueRecord =
        serde_json::from_str(line).map_err(|e| LoadError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
    if !seen_ids.insert(record.id.clone()) {
        return Err(LoadError::DuplicateId {
            line: line_no,
            id: record.id,
        });
    }
    let dialogue = Dialogue::new(
        record.id,
        TopicRef {
            topic_id: record.topic_id,
            question_text: record.question_text,
        },
        record.utterances,
    );
    let warnings = dialogue.validate().map_err(|e| LoadError::MalformedRecord {
        line: line_no,
        reason: e.to_string(),
    })?;
    Ok((dialogue, warnings))
}

/// Writes dialogues as line-delimited JSON; the output round-trips
/// losslessly through `load_transcripts`.
pub fn write_transcripts(dialogues: &[Dialogue], path: &Path) -> Result<(), WriteError> {
    for d in dialogues {
        d.validate()?;
    }
    let file = File::create(path).map_err(|source| WriteError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    for d in dialogues {
        let record = DialogueRecord {
            id: d.id.clone(),
            topic_id: d.topic.topic_id.clone(),
            question_text: d.topic.question_text.clone(),
            utterances: d.utterances.clone(),
        };
        let json = serde_json::to_string(&record).expect("dialogue record serializes");
        writeln!(writer, "{json}").map_err(|source| WriteError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    writer.flush().map_err(|source| WriteError::Io {
        path: path.display().to_string(),
        source,
    })
}
