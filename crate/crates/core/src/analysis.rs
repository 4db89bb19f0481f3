//! Metrics over corpora of session records.
//!
//! All functions here are pure: the same corpus gives byte-identical
//! output. Records are visited sorted by participant id, then concept, then
//! start time. Practice and incomplete sessions are skipped unless a
//! function says otherwise.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::arms::ArmId;
use crate::bandit::Loss;
use crate::embedding::EmbeddingSpace;
use crate::session::{Condition, FeatureEvent, SessionEvent, SessionRecord};
use crate::stats::{self, StatsError};
use crate::text::Normalizer;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid session record: {message}")]
    Schema { line: usize, message: String },
    #[error("record has no features; type density is undefined")]
    EmptyRecord,
    #[error("baseline for concept `{concept}` has {n} usable features; need at least 2 with nonzero spread")]
    BaselineTooSmall { concept: String, n: usize },
    #[error("no hinted sessions for concept `{0}`")]
    NoTargets(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AnalysisError {
    pub fn is_schema_error(&self) -> bool {
        matches!(self, AnalysisError::Schema { .. })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<SessionRecord>,
}

impl Corpus {
    /// Sorts records into the canonical reduction order.
    pub fn new(mut records: Vec<SessionRecord>) -> Self {
        records.sort_by(|a, b| {
            (&a.config.participant_id, &a.config.concept, a.started_at_ms).cmp(&(
                &b.config.participant_id,
                &b.config.concept,
                b.started_at_ms,
            ))
        });
        Self { records }
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| AnalysisError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_jsonl(BufReader::new(file))
    }

    /// One record per non-blank line.
    pub fn parse_jsonl(reader: impl BufRead) -> Result<Self, AnalysisError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| AnalysisError::Schema {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SessionRecord =
                serde_json::from_str(&line).map_err(|e| AnalysisError::Schema {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            validate_record(&record).map_err(|message| AnalysisError::Schema {
                line: i + 1,
                message,
            })?;
            records.push(record);
        }
        Ok(Self::new(records))
    }

    pub fn all(&self) -> &[SessionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records that count toward analysis: not practice, not incomplete.
    pub fn analyzable(&self) -> impl Iterator<Item = &SessionRecord> {
        self.records.iter().filter(|r| !r.config.practice && !r.incomplete)
    }

    /// Drops records whose feature count exceeds the mean by more than 3.5
    /// sample standard deviations, computed over the analyzable records.
    pub fn filter_outliers(&self) -> Corpus {
        let counts: Vec<f64> = self.analyzable().map(|r| feature_count(r) as f64).collect();
        if counts.len() < 2 {
            return self.clone();
        }
        let cutoff = stats::mean(&counts) + 3.5 * stats::sample_sd(&counts);
        Corpus {
            records: self
                .records
                .iter()
                .filter(|r| (feature_count(r) as f64) <= cutoff)
                .cloned()
                .collect(),
        }
    }
}

/// Structural checks beyond what deserialization enforces.
fn validate_record(record: &SessionRecord) -> Result<(), String> {
    let mut last = record.started_at_ms;
    let mut ended = false;
    for (i, event) in record.events.iter().enumerate() {
        if ended {
            return Err("events after end event".into());
        }
        if event.at_ms() < last {
            return Err(format!("event {i} is out of time order"));
        }
        last = event.at_ms();
        match event {
            SessionEvent::Hint(_) if record.config.condition == Condition::Unhinted => {
                return Err("unhinted record contains hint events".into());
            }
            SessionEvent::End(_) => ended = true,
            _ => {}
        }
    }
    if record.config.condition == Condition::Hinted && record.bandit_final.is_none() && !record.incomplete {
        return Err("hinted record lacks bandit state".into());
    }
    Ok(())
}

fn fresh_features(record: &SessionRecord) -> impl Iterator<Item = &FeatureEvent> {
    record.features().filter(|f| !f.is_duplicate)
}

/// Number of non-duplicate features.
pub fn feature_count(record: &SessionRecord) -> usize {
    fresh_features(record).count()
}

/// Distinct normalized word types across non-duplicate features.
pub fn word_type_count(record: &SessionRecord) -> usize {
    fresh_features(record)
        .flat_map(|f| f.word_types.iter())
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn token_count(record: &SessionRecord) -> usize {
    fresh_features(record).map(|f| f.word_types.len()).sum()
}

/// Distinct word types divided by word tokens.
pub fn type_density(record: &SessionRecord) -> Result<f64, AnalysisError> {
    let tokens = token_count(record);
    if tokens == 0 {
        return Err(AnalysisError::EmptyRecord);
    }
    Ok(word_type_count(record) as f64 / tokens as f64)
}

/// Smallest embedding distance between any word of `a` and any word of
/// `b`. Words missing from `space` are ignored; `None` if either side has
/// no embeddable word.
pub fn min_linkage_distance<A, B>(a: &[A], b: &[B], space: &EmbeddingSpace) -> Option<f64>
where
    A: AsRef<str>,
    B: AsRef<str>,
{
    let ids_a: Vec<_> = a.iter().filter_map(|w| space.id(w.as_ref())).collect();
    let ids_b: Vec<_> = b.iter().filter_map(|w| space.id(w.as_ref())).collect();
    let mut best: Option<f64> = None;
    for &x in &ids_a {
        for &y in &ids_b {
            let d = space.distance_ids(x, y);
            best = Some(best.map_or(d, |m: f64| m.min(d)));
        }
    }
    best
}

/// `(d - mean) / sd` against a baseline sample.
pub fn z_score(d: f64, baseline_mean: f64, baseline_sd: f64) -> f64 {
    (d - baseline_mean) / baseline_sd
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    /// 0 is the first feature after the hint, -1 the last one before it.
    pub offset: i32,
    pub mean_z: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelatednessCurve {
    pub concept: String,
    pub points: Vec<CurvePoint>,
}

impl RelatednessCurve {
    pub fn at(&self, offset: i32) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.offset == offset)
    }
}

pub const DEFAULT_WINDOW: (i32, i32) = (-5, 10);

/// How strongly features around each hint relate to that hint, relative to
/// how related the hint is to features produced without hints.
///
/// For every hint in a hinted session of `concept`, the baseline is the
/// min-linkage distance from the hint to every feature of every unhinted
/// session of the same concept. Each feature within `window` of the hint
/// gets a z-score against that baseline; the curve averages z per offset
/// over all hints, overlapping windows included.
pub fn relatedness_curve(
    corpus: &Corpus,
    concept: &str,
    space: &EmbeddingSpace,
    normalizer: &Normalizer,
    window: (i32, i32),
) -> Result<RelatednessCurve, AnalysisError> {
    let concept = concept.to_lowercase();
    let wanted = concept.as_str();
    let of_concept = |c: Condition| {
        corpus
            .analyzable()
            .filter(move |r| r.config.concept == wanted && r.config.condition == c)
    };
    let embed = |f: &FeatureEvent| normalizer.embeddable_words(&f.raw_phrase, space);

    let baseline_features: Vec<Vec<String>> = of_concept(Condition::Unhinted)
        .flat_map(fresh_features)
        .map(embed)
        .filter(|w| !w.is_empty())
        .collect();

    let (lo, hi) = window;
    let width = (hi - lo + 1).max(0) as usize;
    let mut sums = vec![0.0; width];
    let mut counts = vec![0usize; width];
    let mut targets = 0;

    for record in of_concept(Condition::Hinted) {
        targets += 1;
        // Features in order, with the index of the first feature following
        // each hint.
        let mut features: Vec<Vec<String>> = Vec::new();
        let mut hints: Vec<(usize, &[String])> = Vec::new();
        for event in &record.events {
            match event {
                SessionEvent::Feature(f) if !f.is_duplicate => features.push(embed(f)),
                SessionEvent::Hint(h) => hints.push((features.len(), &h.words)),
                _ => {}
            }
        }
        for (first_after, words) in hints {
            let baseline: Vec<f64> = baseline_features
                .iter()
                .filter_map(|f| min_linkage_distance(f, words, space))
                .collect();
            if baseline.len() < 2 {
                return Err(AnalysisError::BaselineTooSmall {
                    concept: record.config.concept.clone(),
                    n: baseline.len(),
                });
            }
            let (m, sd) = (stats::mean(&baseline), stats::sample_sd(&baseline));
            if sd == 0.0 {
                return Err(AnalysisError::BaselineTooSmall {
                    concept: record.config.concept.clone(),
                    n: baseline.len(),
                });
            }
            for offset in lo..=hi {
                let idx = first_after as i64 + offset as i64;
                if idx < 0 || idx >= features.len() as i64 {
                    continue;
                }
                if let Some(d) = min_linkage_distance(&features[idx as usize], words, space) {
                    let slot = (offset - lo) as usize;
                    sums[slot] += z_score(d, m, sd);
                    counts[slot] += 1;
                }
            }
        }
    }
    if targets == 0 {
        return Err(AnalysisError::NoTargets(concept.to_string()));
    }
    let points = (lo..=hi)
        .zip(sums.iter().zip(&counts))
        .map(|(offset, (s, &n))| CurvePoint {
            offset,
            mean_z: (n > 0).then(|| s / n as f64),
            n,
        })
        .collect();
    Ok(RelatednessCurve {
        concept: concept.to_string(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordPreference {
    pub participant_id: String,
    pub concept: String,
    /// Normalized final weights in `ArmPreference::arms` order.
    pub final_weights: Vec<f64>,
    /// Pulled arm with strictly the lowest total loss, if unique.
    pub least_loss: Option<ArmId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmPreference {
    pub arms: Vec<ArmId>,
    pub mean_final_weight: Vec<f64>,
    pub wins: Vec<usize>,
    /// One-sided binomial p-value of each arm's win count under equal
    /// chances among the unique-winner records.
    pub win_p_value: Vec<Option<f64>>,
    pub records: Vec<RecordPreference>,
}

impl ArmPreference {
    pub fn unique_winners(&self) -> usize {
        self.wins.iter().sum()
    }
}

fn final_weight(record: &SessionRecord, arm: ArmId) -> Option<f64> {
    let bandit = record.bandit_final.as_ref()?;
    let i = bandit.arms.iter().position(|a| a == arm.as_str())?;
    bandit.probabilities.get(i).copied()
}

fn resolved_pulls(record: &SessionRecord) -> impl Iterator<Item = (ArmId, Loss)> + '_ {
    record.hints().filter_map(|h| h.loss.map(|l| (h.arm, l)))
}

/// Mean final arm weights, and per record the arm with the lowest
/// cumulative loss among the arms it pulled.
pub fn arm_preference_summary(corpus: &Corpus) -> ArmPreference {
    let arms = ArmId::ALL.to_vec();
    let mut records = Vec::new();
    for record in corpus.analyzable() {
        if record.config.condition != Condition::Hinted || resolved_pulls(record).next().is_none() {
            continue;
        }
        let final_weights: Vec<f64> = arms
            .iter()
            .map(|a| final_weight(record, *a).unwrap_or(0.0))
            .collect();
        let mut totals: Vec<Option<f64>> = vec![None; arms.len()];
        for (arm, loss) in resolved_pulls(record) {
            let i = arms.iter().position(|a| *a == arm).expect("known arm");
            *totals[i].get_or_insert(0.0) += loss.value();
        }
        let best = totals.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let at_best: Vec<usize> = (0..arms.len()).filter(|&i| totals[i] == Some(best)).collect();
        let least_loss = (at_best.len() == 1).then(|| arms[at_best[0]]);
        records.push(RecordPreference {
            participant_id: record.config.participant_id.clone(),
            concept: record.config.concept.clone(),
            final_weights,
            least_loss,
        });
    }
    let n = records.len();
    let mean_final_weight = (0..arms.len())
        .map(|i| {
            if n == 0 {
                0.0
            } else {
                records.iter().map(|r| r.final_weights[i]).sum::<f64>() / n as f64
            }
        })
        .collect();
    let wins: Vec<usize> = arms
        .iter()
        .map(|a| records.iter().filter(|r| r.least_loss == Some(*a)).count())
        .collect();
    let total_wins: usize = wins.iter().sum();
    let win_p_value = wins
        .iter()
        .map(|&w| {
            stats::binomial_upper_tail(w as u64, total_wins as u64, 1.0 / arms.len() as f64).ok()
        })
        .map(|p| if total_wins == 0 { None } else { p })
        .collect();
    ArmPreference {
        arms,
        mean_final_weight,
        wins,
        win_p_value,
        records,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation between the final weight on `arm` and the feature
/// count, across hinted records.
pub fn weight_performance_correlation(
    corpus: &Corpus,
    arm: ArmId,
) -> Result<Correlation, AnalysisError> {
    let (weights, counts): (Vec<f64>, Vec<f64>) = corpus
        .analyzable()
        .filter(|r| r.config.condition == Condition::Hinted)
        .filter_map(|r| final_weight(r, arm).map(|w| (w, feature_count(r) as f64)))
        .unzip();
    let (r, test) = stats::pearson(&weights, &counts)?;
    Ok(Correlation {
        r,
        p_value: test.p_value,
        n: weights.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRow {
    pub participant_id: String,
    pub source: String,
    pub concept: String,
    pub condition: String,
    pub block: Option<u8>,
    pub feature_count: usize,
    pub type_count: usize,
    pub token_count: usize,
    pub type_density: Option<f64>,
    pub hint_count: usize,
    pub w_semantic: Option<f64>,
    pub w_frequency: Option<f64>,
    pub w_diversity: Option<f64>,
}

impl SessionRow {
    pub fn of(record: &SessionRecord) -> Self {
        Self {
            participant_id: record.config.participant_id.clone(),
            source: serde_json::to_value(record.source)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            concept: record.config.concept.clone(),
            condition: record.config.condition.to_string(),
            block: record.config.block,
            feature_count: feature_count(record),
            type_count: word_type_count(record),
            token_count: token_count(record),
            type_density: type_density(record).ok(),
            hint_count: record.hints().count(),
            w_semantic: final_weight(record, ArmId::Semantic),
            w_frequency: final_weight(record, ArmId::Frequency),
            w_diversity: final_weight(record, ArmId::Diversity),
        }
    }
}

/// One CSV row per analyzable session; header only for an empty corpus.
pub fn write_sessions_csv(corpus: &Corpus, out: impl Write) -> Result<(), AnalysisError> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record([
        "participant_id",
        "source",
        "concept",
        "condition",
        "block",
        "feature_count",
        "type_count",
        "token_count",
        "type_density",
        "hint_count",
        "w_semantic",
        "w_frequency",
        "w_diversity",
    ])?;
    for record in corpus.analyzable() {
        writer.serialize(SessionRow::of(record))?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_csv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_sessions_csv(corpus, file)
}

/// Metrics selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Counts,
    Types,
    Density,
    Curve,
    Arms,
    Corr,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "counts" => Metric::Counts,
            "types" => Metric::Types,
            "density" => Metric::Density,
            "curve" => Metric::Curve,
            "arms" => Metric::Arms,
            "corr" => Metric::Corr,
            other => return Err(format!("unknown metric `{other}`")),
        })
    }
}

pub struct ReportOptions<'a> {
    pub metric: Metric,
    /// Restricts curve and per-session metrics to one concept.
    pub concept: Option<&'a str>,
    pub window: (i32, i32),
}

/// Writes the CSV for one metric.
pub fn write_report(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    normalizer: &Normalizer,
    options: &ReportOptions<'_>,
    out: impl Write,
) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let concept_ok =
        |r: &SessionRecord| options.concept.is_none_or(|c| r.config.concept == c.to_lowercase());
    match options.metric {
        Metric::Counts | Metric::Types | Metric::Density => {
            let column = match options.metric {
                Metric::Counts => "feature_count",
                Metric::Types => "type_count",
                _ => "type_density",
            };
            w.write_record(["participant_id", "concept", "condition", column])?;
            for r in corpus.analyzable().filter(|r| concept_ok(r)) {
                let value = match options.metric {
                    Metric::Counts => feature_count(r).to_string(),
                    Metric::Types => word_type_count(r).to_string(),
                    _ => type_density(r).map(|d| d.to_string()).unwrap_or_default(),
                };
                w.write_record([
                    r.config.participant_id.as_str(),
                    r.config.concept.as_str(),
                    &r.config.condition.to_string(),
                    &value,
                ])?;
            }
        }
        Metric::Curve => {
            let concept = options.concept.unwrap_or("penguin");
            let curve = relatedness_curve(corpus, concept, space, normalizer, options.window)?;
            w.write_record(["concept", "offset", "mean_z", "n"])?;
            for p in &curve.points {
                w.write_record([
                    curve.concept.clone(),
                    p.offset.to_string(),
                    p.mean_z.map(|z| z.to_string()).unwrap_or_default(),
                    p.n.to_string(),
                ])?;
            }
        }
        Metric::Arms => {
            let pref = arm_preference_summary(corpus);
            w.write_record(["arm", "mean_final_weight", "wins", "win_p_value", "records"])?;
            for (i, arm) in pref.arms.iter().enumerate() {
                w.write_record([
                    arm.as_str().to_string(),
                    pref.mean_final_weight[i].to_string(),
                    pref.wins[i].to_string(),
                    pref.win_p_value[i].map(|p| p.to_string()).unwrap_or_default(),
                    pref.records.len().to_string(),
                ])?;
            }
        }
        Metric::Corr => {
            w.write_record(["arm", "r", "p_value", "n"])?;
            for arm in ArmId::ALL {
                let row = match weight_performance_correlation(corpus, arm) {
                    Ok(c) => [arm.to_string(), c.r.to_string(), c.p_value.to_string(), c.n.to_string()],
                    Err(AnalysisError::Stats(_)) => {
                        [arm.to_string(), String::new(), String::new(), String::new()]
                    }
                    Err(e) => return Err(e),
                };
                w.write_record(row)?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
