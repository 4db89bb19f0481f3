//! Phrase normalization: lowercase, tokenize on non-alphanumeric
//! boundaries, drop stopwords, lemmatize, stem.
//!
//! The stopword list and the irregular-lemma table ship as versioned data
//! files under `data/`. Editing them changes every word-type count computed
//! downstream, so treat such edits as breaking.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};

use crate::embedding::EmbeddingSpace;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const DEFAULT_LEMMAS: &str = include_str!("../data/lemmas_en.tsv");

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `surface<TAB>lemma`")]
    MalformedLemma { path: String, line: usize },
}

/// One content token of a phrase at each pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased surface form.
    pub surface: String,
    pub lemma: String,
    /// Final normalized word type.
    pub stem: String,
}

pub struct Normalizer {
    stopwords: HashSet<String>,
    lemmas: HashMap<String, String>,
    stemmer: Stemmer,
}

impl fmt::Debug for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Normalizer")
            .field("stopwords", &self.stopwords.len())
            .field("lemmas", &self.lemmas.len())
            .finish()
    }
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::from_tables(DEFAULT_STOPWORDS, DEFAULT_LEMMAS, "<builtin>")
            .expect("builtin lemma table is well formed")
    }
}

impl Normalizer {
    /// Builds a normalizer from stopword and lemma table contents.
    ///
    /// Lines starting with `#` and blank lines are ignored in both tables.
    pub fn from_tables(stopwords: &str, lemmas: &str, origin: &str) -> Result<Self, TextError> {
        let stopwords = data_lines(stopwords).map(|(_, l)| l.to_lowercase()).collect();
        let mut table = HashMap::new();
        for (n, line) in data_lines(lemmas) {
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(l), None) if !s.trim().is_empty() && !l.trim().is_empty() => {
                    table.insert(s.trim().to_lowercase(), l.trim().to_lowercase());
                }
                _ => {
                    return Err(TextError::MalformedLemma {
                        path: origin.to_string(),
                        line: n,
                    })
                }
            }
        }
        Ok(Self {
            stopwords,
            lemmas: table,
            stemmer: Stemmer::create(Algorithm::English),
        })
    }

    /// Loads custom tables; either path may be omitted to keep the builtin one.
    pub fn from_files(
        stopwords: Option<&Path>,
        lemmas: Option<&Path>,
    ) -> Result<Self, TextError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| TextError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let sw = match stopwords {
            Some(p) => read(p)?,
            None => DEFAULT_STOPWORDS.to_string(),
        };
        let (lm, origin) = match lemmas {
            Some(p) => (read(p)?, p.display().to_string()),
            None => (DEFAULT_LEMMAS.to_string(), "<builtin>".to_string()),
        };
        Self::from_tables(&sw, &lm, &origin)
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Lowercased alphanumeric runs of `phrase`, stopwords included.
    pub fn tokenize(phrase: &str) -> Vec<String> {
        phrase
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    }

    pub fn lemmatize(&self, word: &str) -> String {
        if let Some(lemma) = self.lemmas.get(word) {
            return lemma.clone();
        }
        if word.chars().any(|c| c.is_ascii_digit()) || word.len() <= 3 {
            return word.to_string();
        }
        if let Some(stem) = word.strip_suffix("ies") {
            if word.len() > 4 {
                return format!("{stem}y");
            }
        }
        if word.ends_with("sses") {
            return word[..word.len() - 2].to_string();
        }
        for suffix in ["ches", "shes", "xes", "zes"] {
            if word.ends_with(suffix) {
                return word[..word.len() - 2].to_string();
            }
        }
        if word.ends_with('s') && !(word.ends_with("ss") || word.ends_with("us") || word.ends_with("is")) {
            return word[..word.len() - 1].to_string();
        }
        word.to_string()
    }

    pub fn stem(&self, word: &str) -> String {
        self.stemmer.stem(word).into_owned()
    }

    /// Runs the full pipeline, keeping each stage of every content token.
    pub fn tokens(&self, phrase: &str) -> Vec<Token> {
        Self::tokenize(phrase)
            .into_iter()
            .filter(|t| !self.is_stopword(t))
            .map(|surface| {
                let lemma = self.lemmatize(&surface);
                let stem = self.stem(&lemma);
                Token {
                    surface,
                    lemma,
                    stem,
                }
            })
            .collect()
    }

    /// Normalized word types of `phrase` in order, duplicates retained.
    pub fn normalize_phrase(&self, phrase: &str) -> Vec<String> {
        self.tokens(phrase).into_iter().map(|t| t.stem).collect()
    }

    /// Embedding-facing words of `phrase`: for each content token the surface
    /// form if `space` knows it, else the lemma if known, else nothing.
    pub fn embeddable_words(&self, phrase: &str, space: &EmbeddingSpace) -> Vec<String> {
        self.tokens(phrase)
            .into_iter()
            .filter_map(|t| {
                if space.contains(&t.surface) {
                    Some(t.surface)
                } else if space.contains(&t.lemma) {
                    Some(t.lemma)
                } else {
                    None
                }
            })
            .collect()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}
