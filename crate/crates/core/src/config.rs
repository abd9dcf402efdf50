//! Run configuration loaded from TOML.
//!
//! Every path is optional; missing entries fall back to the bundled data.
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::qa::encode::{OnsetTable, SeverityTable};
use crate::reconstruct::{parse_stopwords, stopwords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Unexpandable sentences are kept as unparsed segments.
    #[default]
    Lenient,
    /// Any unparsed segment fails the note.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub extra_lexicons: Vec<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub severity_classes: Option<PathBuf>,
    pub onset_bins: Option<PathBuf>,
    #[serde(default = "one")]
    pub parallel: usize,
    #[serde(default)]
    pub strictness: Strictness,
}

fn one() -> usize {
    1
}

impl Default for Config {
    fn default() -> Self {
        Config {
            lexicon: None,
            extra_lexicons: Vec::new(),
            stopwords: None,
            severity_classes: None,
            onset_bins: None,
            parallel: 1,
            strictness: Strictness::Lenient,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.lexicon.iter_mut().for_each(fix);
        self.extra_lexicons.iter_mut().for_each(fix);
        self.stopwords.iter_mut().for_each(fix);
        self.severity_classes.iter_mut().for_each(fix);
        self.onset_bins.iter_mut().for_each(fix);
    }

    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        self.lexicon
            .iter()
            .chain(&self.extra_lexicons)
            .chain(&self.stopwords)
            .chain(&self.severity_classes)
            .chain(&self.onset_bins)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parallel == 0 {
            return Err(Error::Config("parallel must be at least 1".into()));
        }
        if let Some(p) = self.paths().find(|p| !p.exists()) {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
        Ok(())
    }

    /// Base lexicon (bundled unless overridden) merged with the extras.
    pub fn load_lexicon(&self) -> Result<Lexicon> {
        match (&self.lexicon, self.extra_lexicons.is_empty()) {
            (None, true) => Ok(Lexicon::bundled()),
            (Some(p), _) => {
                let mut all = vec![p.clone()];
                all.extend(self.extra_lexicons.iter().cloned());
                Lexicon::load_all(&all)
            }
            (None, false) => Lexicon::bundled_with(&self.extra_lexicons),
        }
    }

    pub fn load_stopwords(&self) -> Result<BTreeSet<String>> {
        match &self.stopwords {
            None => Ok(stopwords().clone()),
            Some(p) => Ok(parse_stopwords(
                &std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            )),
        }
    }

    pub fn load_severity(&self) -> Result<SeverityTable> {
        self.severity_classes
            .as_ref()
            .map_or_else(|| Ok(SeverityTable::bundled()), SeverityTable::load)
    }

    pub fn load_onset(&self) -> Result<OnsetTable> {
        self.onset_bins
            .as_ref()
            .map_or_else(|| Ok(OnsetTable::bundled()), OnsetTable::load)
    }
}
