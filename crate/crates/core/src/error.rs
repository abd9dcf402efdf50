use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed lexicon at line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("note contains no usable segment")]
    EmptyNote,

    #[error("note is {0} characters long, limit is 10000")]
    NoteTooLong(usize),

    #[error("note id is empty")]
    EmptyNoteId,

    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("tree has no subject noun phrase")]
    NoPatientNode,

    #[error("attachment anchor {0} not found in graph fragment")]
    DanglingAttachment(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown concept: {0}")]
    UnknownConcept(String),

    #[error("rule set is not stratified: {0}")]
    NonStratified(String),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid answer {answer:?} for question {question}")]
    InvalidAnswer { question: u8, answer: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedLexicon {
            line,
            reason: reason.into(),
        }
    }
}
