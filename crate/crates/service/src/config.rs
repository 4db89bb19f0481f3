//! Service configuration: one TOML or JSON file plus environment overrides.

use std::fs::File;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use hintbandit::arms::DEFAULT_HINT_SIZE;
use hintbandit::session::{DEFAULT_DURATION_SECS, DEFAULT_HORIZON};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for {var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("{what} {path} is not readable: {source}")]
    Unreadable {
        what: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Defaults applied to every session the service creates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionDefaults {
    pub duration_secs: u64,
    pub horizon: u32,
    pub hint_size: usize,
}

impl Default for SessionDefaults {
    fn default() -> Self {
        Self {
            duration_secs: DEFAULT_DURATION_SECS,
            horizon: DEFAULT_HORIZON,
            hint_size: DEFAULT_HINT_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    /// Word vectors, one `word v1 v2 ...` line per word.
    pub embeddings: PathBuf,
    /// Corpus counts, one `word<TAB>count` line per word.
    pub frequencies: PathBuf,
    /// Replaces the builtin stopword list.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Replaces the builtin lemma table.
    #[serde(default)]
    pub lemmas: Option<PathBuf>,
    /// Finished records are appended to `sessions.jsonl` in this directory.
    #[serde(default = "default_corpus_dir")]
    pub corpus_dir: PathBuf,
    /// Directory served at `/`; the builtin page is used when unset.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    #[serde(default)]
    pub sessions: SessionDefaults,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_corpus_dir() -> PathBuf {
    PathBuf::from("corpus")
}

impl ServiceConfig {
    pub fn new(embeddings: impl Into<PathBuf>, frequencies: impl Into<PathBuf>) -> Self {
        Self {
            bind: default_bind(),
            embeddings: embeddings.into(),
            frequencies: frequencies.into(),
            stopwords: None,
            lemmas: None,
            corpus_dir: default_corpus_dir(),
            static_dir: None,
            sessions: SessionDefaults::default(),
        }
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.display().to_string(),
            message,
        };
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
        }
    }

    /// Applies `HINTBANDIT_*` variables from `lookup` (normally the process
    /// environment) on top of the file values.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = lookup("HINTBANDIT_BIND") {
            self.bind = v.parse().map_err(|e: std::net::AddrParseError| ConfigError::Env {
                var: "HINTBANDIT_BIND",
                message: e.to_string(),
            })?;
        }
        let paths: [(&str, &mut PathBuf); 3] = [
            ("HINTBANDIT_EMBEDDINGS", &mut self.embeddings),
            ("HINTBANDIT_FREQUENCIES", &mut self.frequencies),
            ("HINTBANDIT_CORPUS_DIR", &mut self.corpus_dir),
        ];
        for (var, slot) in paths {
            if let Some(v) = lookup(var) {
                *slot = PathBuf::from(v);
            }
        }
        if let Some(v) = lookup("HINTBANDIT_STATIC_DIR") {
            self.static_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = lookup("HINTBANDIT_SESSION_SECS") {
            self.sessions.duration_secs = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                var: "HINTBANDIT_SESSION_SECS",
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Checks everything that can be checked before loading: input files
    /// readable, static directory present, corpus directory creatable,
    /// session defaults positive.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let readable = |what: &'static str, path: &Path| {
            File::open(path).map(drop).map_err(|source| ConfigError::Unreadable {
                what,
                path: path.display().to_string(),
                source,
            })
        };
        readable("embeddings file", &self.embeddings)?;
        readable("frequency file", &self.frequencies)?;
        if let Some(p) = &self.stopwords {
            readable("stopword file", p)?;
        }
        if let Some(p) = &self.lemmas {
            readable("lemma file", p)?;
        }
        if let Some(dir) = &self.static_dir {
            if !dir.is_dir() {
                return Err(ConfigError::Invalid(format!(
                    "static directory {} does not exist",
                    dir.display()
                )));
            }
        }
        std::fs::create_dir_all(&self.corpus_dir).map_err(|source| ConfigError::Unreadable {
            what: "corpus directory",
            path: self.corpus_dir.display().to_string(),
            source,
        })?;
        if self.bind.port() == 0 && self.bind.ip().is_unspecified() {
            return Err(ConfigError::Invalid("bind address 0.0.0.0:0 is not usable".into()));
        }
        let s = &self.sessions;
        if s.duration_secs == 0 || s.horizon == 0 || s.hint_size == 0 {
            return Err(ConfigError::Invalid(
                "session duration, horizon and hint size must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn corpus_file(&self) -> PathBuf {
        self.corpus_dir.join("sessions.jsonl")
    }
}

/// Loads, overrides from the process environment, and validates.
pub fn load(path: &Path) -> Result<ServiceConfig, ConfigError> {
    let mut config = ServiceConfig::from_file(path)?;
    config.apply_env(|k| std::env::var(k).ok())?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn toml_with_defaults() {
        let c: ServiceConfig = toml::from_str(
            r#"
            embeddings = "e.txt"
            frequencies = "f.tsv"
            [sessions]
            duration_secs = 10
            "#,
        )
        .unwrap();
        assert_eq!(c.bind.port(), 8080);
        assert_eq!(c.sessions.duration_secs, 10);
        assert_eq!(c.sessions.hint_size, DEFAULT_HINT_SIZE);
        assert_eq!(c.corpus_dir, PathBuf::from("corpus"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ServiceConfig>("embeddings = 'e'\nfrequencies = 'f'\nport = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn env_overrides() {
        let mut c = ServiceConfig::new("e", "f");
        let env: HashMap<&str, &str> = [
            ("HINTBANDIT_BIND", "0.0.0.0:9000"),
            ("HINTBANDIT_EMBEDDINGS", "/data/vec.txt"),
            ("HINTBANDIT_SESSION_SECS", "10"),
        ]
        .into();
        c.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.bind.port(), 9000);
        assert_eq!(c.embeddings, PathBuf::from("/data/vec.txt"));
        assert_eq!(c.frequencies, PathBuf::from("f"));
        assert_eq!(c.sessions.duration_secs, 10);

        let bad = c.apply_env(|k| (k == "HINTBANDIT_BIND").then(|| "nope".to_string()));
        assert!(matches!(bad, Err(ConfigError::Env { var: "HINTBANDIT_BIND", .. })));
    }

    #[test]
    fn missing_files_fail_fast() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ServiceConfig::new(dir.path().join("missing.txt"), dir.path().join("f.tsv"));
        c.corpus_dir = dir.path().join("out");
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("embeddings file"), "{err}");
    }
}
