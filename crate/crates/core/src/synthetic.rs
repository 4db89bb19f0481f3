//! Generated embedding worlds with known cluster structure.
//!
//! Real embedding files are large and not redistributable, so tests,
//! examples and the mock simulant run against a synthetic world: Gaussian
//! clusters of made-up words (`w0000`, `w0001`, ...) with Zipf-like corpus
//! frequencies. The study concepts sit exactly at the centers of the first
//! clusters, so "properties of penguin" are the words of cluster 0.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::{EmbeddingSpace, FrequencyTable, StoreError, WordStore};
use crate::simulant::{KnowledgeItem, MockProfile};

/// Concepts placed at the centers of clusters 0, 1, 2, ... in this order.
pub const CONCEPTS: [&str; 4] = ["penguin", "journalist", "tiger", "desk"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub clusters: usize,
    pub words_per_cluster: usize,
    pub dim: usize,
    /// Standard deviation of cluster centers around the origin.
    pub cluster_scale: f64,
    /// Standard deviation of words around their cluster center.
    pub word_scale: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            clusters: 40,
            words_per_cluster: 100,
            dim: 12,
            cluster_scale: 4.0,
            word_scale: 0.5,
            seed: 7,
        }
    }
}

/// A generated space plus the cluster each word was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    spec: WorldSpec,
    space: EmbeddingSpace,
    frequencies: FrequencyTable,
    /// Generated words of each cluster, concepts excluded.
    clusters: Vec<Vec<String>>,
    centers: Vec<Vec<f32>>,
}

impl SyntheticWorld {
    pub fn generate(spec: WorldSpec) -> Self {
        assert!(spec.clusters >= CONCEPTS.len(), "need a cluster per concept");
        assert!(spec.words_per_cluster > 0 && spec.dim > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let gauss = |scale: f64, rng: &mut ChaCha8Rng| -> f64 {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        };

        let centers: Vec<Vec<f64>> = (0..spec.clusters)
            .map(|_| (0..spec.dim).map(|_| gauss(spec.cluster_scale, &mut rng)).collect())
            .collect();

        let mut entries = Vec::new();
        let mut clusters = Vec::with_capacity(spec.clusters);
        for (c, center) in centers.iter().enumerate() {
            let mut members = Vec::with_capacity(spec.words_per_cluster);
            for j in 0..spec.words_per_cluster {
                let word = format!("w{:04}", c * spec.words_per_cluster + j);
                let v: Vec<f32> = center
                    .iter()
                    .map(|x| (x + gauss(spec.word_scale, &mut rng)) as f32)
                    .collect();
                entries.push((word.clone(), v));
                members.push(word);
            }
            clusters.push(members);
        }
        for (c, concept) in CONCEPTS.iter().enumerate() {
            let v = centers[c].iter().map(|&x| x as f32).collect();
            entries.push((concept.to_string(), v));
        }

        // Zipf-like counts over a random rank order; concepts are common words.
        let mut words: Vec<String> = entries.iter().map(|(w, _)| w.clone()).collect();
        words.shuffle(&mut rng);
        let counts = words
            .into_iter()
            .enumerate()
            .map(|(rank, w)| (w, (1_000_000.0 / (rank as f64 + 1.0)).ceil() as u64));

        let space = EmbeddingSpace::from_entries(spec.dim, entries).expect("consistent dimensions");
        let frequencies = FrequencyTable::from_counts(counts).expect("positive counts");
        let centers = centers
            .into_iter()
            .map(|c| c.into_iter().map(|x| x as f32).collect())
            .collect();
        Self {
            spec,
            space,
            frequencies,
            clusters,
            centers,
        }
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn space(&self) -> &EmbeddingSpace {
        &self.space
    }

    pub fn frequencies(&self) -> &FrequencyTable {
        &self.frequencies
    }

    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    pub fn center(&self, cluster: usize) -> &[f32] {
        &self.centers[cluster]
    }

    /// Cluster indices ordered by the distance of their center to `point`.
    pub fn clusters_near(&self, point: &[f32]) -> Vec<usize> {
        let d = |c: usize| crate::embedding::squared_distance(point, &self.centers[c]);
        let mut order: Vec<usize> = (0..self.centers.len()).collect();
        order.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
        order
    }

    /// Cluster index of a concept, if it is one of [`CONCEPTS`].
    pub fn concept_cluster(concept: &str) -> Option<usize> {
        CONCEPTS.iter().position(|c| c.eq_ignore_ascii_case(concept))
    }

    pub fn word_store(&self) -> WordStore {
        WordStore::new(self.space.clone(), self.frequencies.clone()).expect("shared vocabulary")
    }

    /// Writes `embeddings.txt` and `frequencies.tsv` into `dir`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), StoreError> {
        let dir = dir.as_ref();
        let emb = dir.join("embeddings.txt");
        let freq = dir.join("frequencies.tsv");
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| StoreError::Io { path, source }
        };
        let mut out = BufWriter::new(File::create(&emb).map_err(io(&emb))?);
        self.space.write_text(&mut out).map_err(io(&emb))?;
        out.flush().map_err(io(&emb))?;
        let mut out = BufWriter::new(File::create(&freq).map_err(io(&freq))?);
        self.frequencies.write_tsv(&mut out).map_err(io(&freq))?;
        out.flush().map_err(io(&freq))?;
        Ok((emb, freq))
    }

    /// Picks `per_cluster` distinct words from each listed cluster, as
    /// phrases of the form `"is w0123"`.
    pub fn knowledge(
        &self,
        clusters: &[usize],
        per_cluster: usize,
        rng: &mut impl Rng,
    ) -> Vec<KnowledgeItem> {
        let mut items = Vec::new();
        for &c in clusters {
            let picked = self.clusters[c].choose_multiple(rng, per_cluster);
            for w in picked {
                items.push(KnowledgeItem {
                    phrase: format!("is {w}"),
                    position: self.space.vector(w).expect("generated word").to_vec(),
                });
            }
        }
        items
    }

    /// The desk-scale participant: 10 facts around the concept and 30 more
    /// split over three other random clusters, recalled within radius 5
    /// of the active cue, stuck after 10 features on one cue.
    pub fn desk_profile(&self, concept: &str, seed: u64) -> MockProfile {
        let home = Self::concept_cluster(concept).unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut others: Vec<usize> = (0..self.spec.clusters).filter(|&c| c != home).collect();
        others.shuffle(&mut rng);
        let mut knowledge = self.knowledge(&[home], 10, &mut rng);
        knowledge.extend(self.knowledge(&others[..3], 10, &mut rng));
        MockProfile {
            knowledge,
            recall_radius: 5.0,
            stuck_after: 10,
            hint_attention: 1.0,
            copy_hint_words: 0,
            max_failed_hints: 5,
        }
    }

    /// A participant whose knowledge is all "about" the concept:
    /// `per_cluster` facts from each of the `clusters` clusters nearest to
    /// it, recalled nearest-first from the cue with no radius limit, stuck
    /// after 10 features on one cue and always following hints.
    pub fn focused_profile(&self, concept: &str, clusters: usize, per_cluster: usize, seed: u64) -> MockProfile {
        let home = Self::concept_cluster(concept).unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut near = self.clusters_near(&self.centers[home]);
        near.truncate(clusters);
        MockProfile {
            knowledge: self.knowledge(&near, per_cluster, &mut rng),
            recall_radius: f64::INFINITY,
            stuck_after: 10,
            hint_attention: 1.0,
            copy_hint_words: 0,
            max_failed_hints: 5,
        }
    }
}
