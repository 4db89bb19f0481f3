//! Independent reference implementations the library is checked against.
//! They favor obviousness over speed and share no code with the crate.

#![allow(dead_code)]

pub mod scenarios;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use hintbandit::{EmbeddingSpace, Engine, FrequencyTable, Normalizer, WordStore};

/// EXP3 written out directly with plain (not log) weights.
pub struct NaiveExp3 {
    pub eta: f64,
    pub w: Vec<f64>,
}

impl NaiveExp3 {
    pub fn new(k: usize, horizon: u32) -> Self {
        let eta = (2.0 * (k as f64).ln() / (horizon as f64 * k as f64)).sqrt();
        Self { eta, w: vec![1.0; k] }
    }

    pub fn probs(&self) -> Vec<f64> {
        let s: f64 = self.w.iter().sum();
        self.w.iter().map(|x| x / s).collect()
    }

    /// Arm whose cumulative probability first exceeds `u`.
    pub fn choose(&self, u: f64) -> usize {
        let p = self.probs();
        let mut acc = 0.0;
        for (i, pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return i;
            }
        }
        p.len() - 1
    }

    pub fn update(&mut self, arm: usize, loss: f64) {
        let p = self.probs()[arm];
        self.w[arm] *= (-self.eta * loss / p).exp();
    }
}

/// Full sort of every candidate by (distance, word).
pub fn brute_force_knn(
    space: &EmbeddingSpace,
    candidates: &[String],
    query: &str,
    k: usize,
    exclude: &BTreeSet<String>,
) -> Vec<String> {
    let q = space.vector(query).unwrap();
    let mut all: Vec<(f64, &String)> = candidates
        .iter()
        .filter(|w| w.as_str() != query && !exclude.contains(*w))
        .map(|w| {
            let v = space.vector(w).unwrap();
            let d: f64 = q
                .iter()
                .zip(v)
                .map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2))
                .sum();
            (d, w)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    all.into_iter().take(k).map(|(_, w)| w.clone()).collect()
}

/// Exact distribution of the ordered word sequence produced by the
/// sequential squared-distance sampling process: every ordered tuple of
/// `size` distinct pool words with its probability.
pub fn enumerate_density_process(
    points: &BTreeMap<String, Vec<f64>>,
    known: &[&str],
    size: usize,
) -> BTreeMap<Vec<String>, f64> {
    fn sq(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }
    fn go(
        points: &BTreeMap<String, Vec<f64>>,
        known: Vec<String>,
        prefix: Vec<String>,
        p: f64,
        left: usize,
        out: &mut BTreeMap<Vec<String>, f64>,
    ) {
        if left == 0 {
            out.insert(prefix, p);
            return;
        }
        let pool: Vec<&String> = points.keys().filter(|w| !known.contains(w)).collect();
        let d: Vec<f64> = pool
            .iter()
            .map(|w| {
                known
                    .iter()
                    .map(|k| sq(&points[*w], &points[k]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d.iter().sum();
        for (w, dw) in pool.iter().zip(&d) {
            let pw = if total > 0.0 { dw / total } else { 1.0 / pool.len() as f64 };
            if pw == 0.0 {
                continue;
            }
            let mut known = known.clone();
            known.push((*w).clone());
            let mut prefix = prefix.clone();
            prefix.push((*w).clone());
            go(points, known, prefix, p * pw, left - 1, out);
        }
    }
    let mut out = BTreeMap::new();
    go(
        points,
        known.iter().map(|s| s.to_string()).collect(),
        Vec::new(),
        1.0,
        size,
        &mut out,
    );
    out
}

pub fn space_from(rows: &[(&str, Vec<f32>)]) -> EmbeddingSpace {
    EmbeddingSpace::from_entries(
        rows[0].1.len(),
        rows.iter().map(|(w, v)| (w.to_string(), v.clone())),
    )
    .unwrap()
}

pub fn store_from(rows: &[(&str, Vec<f32>)], counts: &[u64]) -> WordStore {
    let freq = FrequencyTable::from_counts(
        rows.iter()
            .zip(counts)
            .map(|((w, _), c)| (w.to_string(), *c)),
    )
    .unwrap();
    WordStore::new(space_from(rows), freq).unwrap()
}

/// Eighteen words on a 2-d grid around "penguin" at the origin, with a
/// second concept "journalist" far away.
pub fn grid_engine() -> Engine {
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    rows.push(("penguin".into(), vec![0.0, 0.0]));
    rows.push(("journalist".into(), vec![50.0, 50.0]));
    let names = [
        "feather", "beak", "egg", "fish", "ice", "swim", "wing", "cold", "black", "white", "colony",
        "krill", "flipper", "dive", "snow", "sea",
    ];
    for (i, n) in names.iter().enumerate() {
        let x = (i % 4) as f32 + 1.0;
        let y = (i / 4) as f32 + 1.0;
        rows.push((n.to_string(), vec![x, y * 1.5]));
    }
    let counts = (0..rows.len() as u64).map(|i| 1000 - 37 * i);
    let freq = FrequencyTable::from_counts(rows.iter().map(|(w, _)| w.clone()).zip(counts)).unwrap();
    let space = EmbeddingSpace::from_entries(2, rows).unwrap();
    Engine::new(
        Arc::new(WordStore::new(space, freq).unwrap()),
        Arc::new(Normalizer::default()),
    )
}

pub const T0: u64 = 1_700_000_000_000;
