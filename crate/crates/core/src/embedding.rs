//! Word vectors, corpus frequencies and the candidate vocabulary hints are
//! drawn from.
//!
//! Everything here is immutable once loaded and can be shared across
//! sessions behind an `Arc`. Words are case-folded at the boundary: on load
//! and on every query.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("failed to open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} contains no entries")]
    Empty(String),
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("embedding and frequency vocabularies do not intersect")]
    EmptyIntersection,
}

/// Index of a word inside an [`EmbeddingSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordId(pub u32);

/// Read-only map from lowercased word to a dense vector of fixed length.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, WordId>,
    data: Vec<f32>,
}

impl EmbeddingSpace {
    /// Builds a space from in-memory entries. Later duplicates of a
    /// (case-folded) word are ignored.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self, StoreError> {
        let mut space = Self::with_dim(dim);
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(StoreError::Dimension {
                    line: i + 1,
                    expected: dim,
                    found: vector.len(),
                });
            }
            space.push(&word, &vector, i + 1)?;
        }
        if space.is_empty() {
            return Err(StoreError::Empty("entry list".into()));
        }
        Ok(space)
    }

    fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    fn push(&mut self, word: &str, vector: &[f32], line: usize) -> Result<(), StoreError> {
        let word = word.to_lowercase();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(StoreError::Malformed {
                line,
                message: format!("invalid word {word:?}"),
            });
        }
        if self.index.contains_key(&word) {
            return Ok(());
        }
        let id = WordId(self.words.len() as u32);
        self.index.insert(word.clone(), id);
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Loads a word2vec-style text file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file)).map_err(|e| match e {
            StoreError::Empty(_) => StoreError::Empty(path.display().to_string()),
            other => other,
        })
    }

    /// Parses `[<count> <dim>\n] (word v1 .. vdim\n)*`.
    pub fn parse(reader: impl BufRead) -> Result<Self, StoreError> {
        let mut space: Option<Self> = None;
        let mut header_dim = None;
        for (i, line) in reader.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| StoreError::Malformed {
                line: n,
                message: e.to_string(),
            })?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if n == 1 && rest.len() == 1 {
                if let (Ok(_), Ok(dim)) = (word.parse::<u64>(), rest[0].parse::<usize>()) {
                    header_dim = Some(dim);
                    continue;
                }
            }
            let mut vector = Vec::with_capacity(rest.len());
            for v in &rest {
                vector.push(v.parse::<f32>().map_err(|_| StoreError::Malformed {
                    line: n,
                    message: format!("not a number: {v:?}"),
                })?);
            }
            let space = space.get_or_insert_with(|| Self::with_dim(header_dim.unwrap_or(vector.len())));
            if vector.len() != space.dim || vector.is_empty() {
                return Err(StoreError::Dimension {
                    line: n,
                    expected: space.dim,
                    found: vector.len(),
                });
            }
            space.push(word, &vector, n)?;
        }
        space.ok_or_else(|| StoreError::Empty("input".into()))
    }

    /// Writes the space in the same text format [`parse`](Self::parse) reads.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(out, "{word}")?;
            for v in self.vector_by_id(WordId(i as u32)) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        match self.index.get(word) {
            Some(id) => Some(*id),
            None => self.index.get(&word.to_lowercase()).copied(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.id(word).is_some()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id.0 as usize]
    }

    /// `None` for absent words; a present zero vector is `Some(&[0.0, ..])`.
    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.id(word).map(|id| self.vector_by_id(id))
    }

    pub fn vector_by_id(&self, id: WordId) -> &[f32] {
        let start = id.0 as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn squared_distance_ids(&self, a: WordId, b: WordId) -> f64 {
        squared_distance(self.vector_by_id(a), self.vector_by_id(b))
    }

    pub fn distance_ids(&self, a: WordId, b: WordId) -> f64 {
        self.squared_distance_ids(a, b).sqrt()
    }

    /// Euclidean distance between two words.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64, StoreError> {
        let ia = self.id(a).ok_or_else(|| StoreError::UnknownWord(a.to_string()))?;
        let ib = self.id(b).ok_or_else(|| StoreError::UnknownWord(b.to_string()))?;
        Ok(self.distance_ids(ia, ib))
    }
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Corpus word counts.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    /// Repeated (case-folded) words have their counts summed.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Result<Self, StoreError> {
        let mut table = Self::default();
        for (i, (word, count)) in counts.into_iter().enumerate() {
            table.insert(&word, count, i + 1)?;
        }
        if table.counts.is_empty() {
            return Err(StoreError::Empty("count list".into()));
        }
        Ok(table)
    }

    fn insert(&mut self, word: &str, count: u64, line: usize) -> Result<(), StoreError> {
        let word = word.trim().to_lowercase();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(StoreError::Malformed {
                line,
                message: format!("invalid word {word:?}"),
            });
        }
        if count == 0 {
            return Err(StoreError::Malformed {
                line,
                message: "count must be positive".into(),
            });
        }
        *self.counts.entry(word).or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    /// Loads `word<TAB>count` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file)).map_err(|e| match e {
            StoreError::Empty(_) => StoreError::Empty(path.display().to_string()),
            other => other,
        })
    }

    pub fn parse(reader: impl BufRead) -> Result<Self, StoreError> {
        let mut table = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| StoreError::Malformed {
                line: n,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| StoreError::Malformed {
                line: n,
                message: "expected word<TAB>count".into(),
            })?;
            let count = count.trim().parse::<u64>().map_err(|_| StoreError::Malformed {
                line: n,
                message: format!("invalid count {count:?}"),
            })?;
            table.insert(word, count, n)?;
        }
        if table.counts.is_empty() {
            return Err(StoreError::Empty("input".into()));
        }
        Ok(table)
    }

    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort();
        for (w, c) in rows {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        match self.counts.get(word) {
            Some(c) => Some(*c),
            None => self.counts.get(&word.to_lowercase()).copied(),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

/// Words present in both the embedding space and the frequency table, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct CandidateVocabulary {
    words: Vec<String>,
    ids: Vec<WordId>,
    counts: Vec<u64>,
    position: HashMap<String, usize>,
}

impl CandidateVocabulary {
    pub fn build(space: &EmbeddingSpace, freq: &FrequencyTable) -> Result<Self, StoreError> {
        let mut words: Vec<String> = freq
            .words()
            .filter(|w| space.contains(w))
            .map(str::to_string)
            .collect();
        if words.is_empty() {
            return Err(StoreError::EmptyIntersection);
        }
        words.sort();
        let ids = words.iter().map(|w| space.id(w).expect("filtered")).collect();
        let counts = words.iter().map(|w| freq.count(w).expect("filtered")).collect();
        let position = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Self {
            words,
            ids,
            counts,
            position,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.position.contains_key(word)
    }

    /// Lexicographic rank of `word` in the vocabulary.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.position.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn word_id(&self, i: usize) -> WordId {
        self.ids[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }
}

/// Free-function form of [`CandidateVocabulary::build`].
pub fn build_candidates(
    space: &EmbeddingSpace,
    freq: &FrequencyTable,
) -> Result<CandidateVocabulary, StoreError> {
    CandidateVocabulary::build(space, freq)
}

/// The loaded resources hint generation runs against.
#[derive(Debug, Clone)]
pub struct WordStore {
    space: EmbeddingSpace,
    freq: FrequencyTable,
    candidates: CandidateVocabulary,
}

#[derive(Clone, Copy)]
struct Neighbor {
    dist: f64,
    rank: usize,
}

impl PartialEq for Neighbor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Neighbor {}
impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.rank.cmp(&other.rank))
    }
}

impl WordStore {
    pub fn new(space: EmbeddingSpace, freq: FrequencyTable) -> Result<Self, StoreError> {
        let candidates = CandidateVocabulary::build(&space, &freq)?;
        Ok(Self {
            space,
            freq,
            candidates,
        })
    }

    pub fn load(
        embeddings: impl AsRef<Path>,
        frequencies: impl AsRef<Path>,
    ) -> Result<Self, StoreError> {
        Self::new(EmbeddingSpace::load(embeddings)?, FrequencyTable::load(frequencies)?)
    }

    pub fn space(&self) -> &EmbeddingSpace {
        &self.space
    }

    pub fn frequencies(&self) -> &FrequencyTable {
        &self.freq
    }

    pub fn candidates(&self) -> &CandidateVocabulary {
        &self.candidates
    }

    /// The `k` candidates closest to `query`, excluding `query` itself and
    /// every word in `exclude`. Ascending by distance, ties broken
    /// lexicographically.
    pub fn nearest_neighbors(
        &self,
        query: &str,
        k: usize,
        exclude: &BTreeSet<String>,
    ) -> Result<Vec<String>, StoreError> {
        self.nearest_neighbors_where(query, k, |w| exclude.contains(w))
    }

    /// Like [`nearest_neighbors`](Self::nearest_neighbors) with an arbitrary
    /// exclusion predicate.
    pub fn nearest_neighbors_where(
        &self,
        query: &str,
        k: usize,
        excluded: impl Fn(&str) -> bool,
    ) -> Result<Vec<String>, StoreError> {
        let qid = self
            .space
            .id(query)
            .ok_or_else(|| StoreError::UnknownWord(query.to_string()))?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let q = self.space.vector_by_id(qid);
        // Max-heap of the best k seen so far; the root is the worst kept.
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        for rank in 0..self.candidates.len() {
            let id = self.candidates.word_id(rank);
            if id == qid || excluded(self.candidates.word(rank)) {
                continue;
            }
            let n = Neighbor {
                dist: squared_distance(q, self.space.vector_by_id(id)),
                rank,
            };
            if heap.len() < k {
                heap.push(n);
            } else if let Some(worst) = heap.peek() {
                if n < *worst {
                    heap.pop();
                    heap.push(n);
                }
            }
        }
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|n| self.candidates.word(n.rank).to_string())
            .collect())
    }
}
