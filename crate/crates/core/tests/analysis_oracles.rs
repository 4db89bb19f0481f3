//! Analysis metrics against independently computed expectations.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{grid_engine, NaiveExp3, T0};
use hintbandit::analysis::{
    arm_preference_summary, feature_count, min_linkage_distance, relatedness_curve, type_density,
    weight_performance_correlation, word_type_count, write_report, Corpus, Metric, ReportOptions,
};
use hintbandit::bandit::{BanditSnapshot, PullSnapshot};
use hintbandit::session::{EndEvent, EndReason, FeatureEvent, HintEvent, Resolution, SessionEvent, Source};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{ArmId, Condition, Engine, Loss, Normalizer, SessionConfig, SessionRecord};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A hand-built record: one feature per phrase, then the given hints, then
/// an end event. `bandit` supplies the final probabilities in arm order.
fn record(
    pid: &str,
    condition: Condition,
    phrases: &[String],
    hints: &[(ArmId, Loss)],
    probabilities: Option<[f64; 3]>,
) -> SessionRecord {
    let normalizer = Normalizer::default();
    let mut events = Vec::new();
    let mut seq = 0;
    let mut at = T0;
    for p in phrases {
        seq += 1;
        at += 1000;
        events.push(SessionEvent::Feature(FeatureEvent {
            seq,
            at_ms: at,
            raw_phrase: p.clone(),
            word_types: normalizer.normalize_phrase(p),
            is_duplicate: false,
            said_added: Vec::new(),
        }));
    }
    for (t, (arm, loss)) in hints.iter().enumerate() {
        seq += 1;
        at += 1000;
        events.push(SessionEvent::Hint(HintEvent {
            seq,
            at_ms: at,
            t: t as u64 + 1,
            arm: *arm,
            words: vec!["feather".into()],
            probs: vec![1.0 / 3.0; 3],
            skipped: Vec::new(),
            loss: Some(*loss),
            resolved_by: Some(Resolution::NextHint),
        }));
    }
    events.push(SessionEvent::End(EndEvent {
        seq: seq + 1,
        at_ms: at + 1000,
        reason: EndReason::Finished,
    }));
    let bandit_final = probabilities.map(|p| BanditSnapshot {
        arms: ArmId::ALL.iter().map(|a| a.to_string()).collect(),
        eta: 0.1,
        weights: p.to_vec(),
        log_weights: p.iter().map(|x| x.ln()).collect(),
        probabilities: p.to_vec(),
        pulls: Vec::<PullSnapshot>::new(),
    });
    SessionRecord {
        schema_version: 1,
        config: SessionConfig::new(pid, "penguin", condition, 0),
        started_at_ms: T0,
        events,
        bandit_final,
        source: Source::Mock,
        incomplete: false,
        transcript: Vec::new(),
    }
}

fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sx * sy)
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    v.iter().map(|a| (a - m) / s).collect()
}

#[test]
fn recovers_a_constructed_correlation() {
    let target = 0.33;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    // Integer feature counts, then weights built so that their correlation
    // with the counts is exactly the target: mix the standardized counts
    // with noise orthogonalized against them.
    let counts: Vec<f64> = (0..36).map(|_| rng.random_range(10..50) as f64).collect();
    let y = standardize(&counts);
    let noise: Vec<f64> = (0..36).map(|_| rng.random::<f64>() - 0.5).collect();
    let beta = noise.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / y.iter().map(|b| b * b).sum::<f64>();
    let resid: Vec<f64> = noise.iter().zip(&y).map(|(a, b)| a - beta * b).collect();
    let z = standardize(&resid);
    let x: Vec<f64> = y
        .iter()
        .zip(&z)
        .map(|(a, b)| target * a + (1.0 - target * target).sqrt() * b)
        .collect();
    let span = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let weights: Vec<f64> = x.iter().map(|v| 0.4 + 0.3 * v / span).collect();
    assert!((sample_correlation(&weights, &counts) - target).abs() < 1e-9);

    let records = (0..36)
        .map(|i| {
            let phrases: Vec<String> = (0..counts[i] as usize).map(|j| format!("thing{j}")).collect();
            let w = weights[i];
            record(
                &format!("p{i:02}"),
                Condition::Hinted,
                &phrases,
                &[(ArmId::Semantic, Loss::Zero)],
                Some([w, (1.0 - w) / 2.0, (1.0 - w) / 2.0]),
            )
        })
        .collect();
    let c = weight_performance_correlation(&Corpus::new(records), ArmId::Semantic).unwrap();
    assert_eq!(c.n, 36);
    assert!((c.r - target).abs() < 0.01, "r = {}", c.r);
    // t = r sqrt(34 / (1 - r^2)) = 2.0384 → two-sided p just under 0.05.
    assert!(c.p_value > 0.045 && c.p_value < 0.05, "p = {}", c.p_value);
}

/// Final probabilities of a bandit driven through a known loss sequence,
/// computed by the plain-weight oracle.
fn replayed(losses: &[(usize, f64)]) -> [f64; 3] {
    let mut b = NaiveExp3::new(3, 20);
    for &(arm, loss) in losses {
        b.update(arm, loss);
    }
    let p = b.probs();
    [p[0], p[1], p[2]]
}

#[test]
fn arm_preference_reproduces_an_engineered_fixture() {
    let (s, f, d) = (ArmId::Semantic, ArmId::Frequency, ArmId::Diversity);
    // Record a: every pull succeeds, weights stay uniform, no unique winner.
    let a_losses = [(s, Loss::Zero), (f, Loss::Zero)];
    let a = replayed(&[(0, 0.0), (1, 0.0)]);
    // Record b: frequency and diversity each fail once; semantic wins.
    let b_losses = [(f, Loss::One), (d, Loss::One), (s, Loss::Zero)];
    let b = replayed(&[(1, 1.0), (2, 1.0), (0, 0.0)]);
    let phrases = vec!["has feathers".to_string()];
    let corpus = Corpus::new(vec![
        record("a", Condition::Hinted, &phrases, &a_losses, Some(a)),
        record("b", Condition::Hinted, &phrases, &b_losses, Some(b)),
        // Unhinted records never enter the summary.
        record("c", Condition::Unhinted, &phrases, &[], None),
    ]);
    let pref = arm_preference_summary(&corpus);
    let expected: Vec<f64> = (0..3).map(|i| (a[i] + b[i]) / 2.0).collect();
    for i in 0..3 {
        assert!((pref.mean_final_weight[i] - expected[i]).abs() < 1e-9);
    }
    // Shape: semantic ≈ 0.40, the other two ≈ 0.30.
    assert!((pref.mean_final_weight[0] - 0.40).abs() < 0.01, "{:?}", pref.mean_final_weight);
    assert!((pref.mean_final_weight[1] - 0.30).abs() < 0.01);
    assert!((pref.mean_final_weight[2] - 0.30).abs() < 0.01);
    assert_eq!(pref.records.len(), 2);
    assert_eq!(pref.records[0].least_loss, None);
    assert_eq!(pref.records[1].least_loss, Some(ArmId::Semantic));
    assert_eq!(pref.wins, vec![1, 0, 0]);
    assert!((pref.win_p_value[0].unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

/// Twenty scripted sessions with random phrases from the grid vocabulary,
/// a few of them repeated.
fn twenty_sessions(engine: &Engine) -> Vec<SessionRecord> {
    let words = [
        "feather", "beak", "egg", "fish", "ice", "swim", "wing", "cold", "black", "white", "colony",
        "krill", "flipper", "dive", "snow", "sea", "the", "big",
    ];
    (0..20)
        .map(|i| {
            let condition = if i % 2 == 0 { Condition::Hinted } else { Condition::Unhinted };
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let mut s = engine
                .start(SessionConfig::new(&format!("p{i:02}"), "penguin", condition, i), T0)
                .unwrap();
            let mut now = T0;
            for _ in 0..rng.random_range(3..15) {
                now += 1000;
                let len = rng.random_range(1..4);
                let phrase: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
                s.submit_feature(&phrase.join(" "), now).unwrap();
                if condition == Condition::Hinted && rng.random_bool(0.4) {
                    let _ = s.request_hint(now + 300);
                    // Sometimes ask again at once, failing the first hint.
                    if rng.random_bool(0.4) {
                        let _ = s.request_hint(now + 600);
                    }
                }
            }
            s.finalize(now + 1000).unwrap()
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
}

#[test]
fn per_session_medians_match_a_hand_tally() {
    let engine = grid_engine();
    let corpus = Corpus::new(twenty_sessions(&engine));
    // The tally reads the raw JSON, never the typed accessors.
    let mut tally: Vec<(String, f64, f64, f64)> = Vec::new();
    for r in corpus.all() {
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        let mut n = 0.0;
        let mut types = BTreeSet::new();
        let mut tokens = 0.0;
        for e in v["events"].as_array().unwrap() {
            if e["type"] == "feature" && e["is_duplicate"] == false {
                n += 1.0;
                for w in e["word_types"].as_array().unwrap() {
                    types.insert(w.as_str().unwrap().to_string());
                    tokens += 1.0;
                }
            }
        }
        let cond = v["config"]["condition"].as_str().unwrap().to_string();
        tally.push((cond, n, types.len() as f64, types.len() as f64 / tokens));
    }
    for cond in [Condition::Hinted, Condition::Unhinted] {
        let ours: Vec<&SessionRecord> = corpus.all().iter().filter(|r| r.config.condition == cond).collect();
        let theirs: Vec<&(String, f64, f64, f64)> = tally.iter().filter(|t| t.0 == cond.to_string()).collect();
        assert_eq!(ours.len(), 10);
        let m = |f: &dyn Fn(&&(String, f64, f64, f64)) -> f64| median(theirs.iter().map(f).collect());
        assert_eq!(median(ours.iter().map(|r| feature_count(r) as f64).collect()), m(&|t| t.1));
        assert_eq!(median(ours.iter().map(|r| word_type_count(r) as f64).collect()), m(&|t| t.2));
        let dens = median(ours.iter().map(|r| type_density(r).unwrap()).collect());
        assert!((dens - m(&|t| t.3)).abs() < 1e-12);
    }
}

#[test]
fn min_linkage_matches_exhaustive_pairs() {
    let world = SyntheticWorld::generate(WorldSpec {
        clusters: 5,
        words_per_cluster: 30,
        ..WorldSpec::default()
    });
    let space = world.space();
    let words: Vec<&str> = space.words().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let a: Vec<&str> = (0..rng.random_range(1..=6)).map(|_| *words.choose(&mut rng).unwrap()).collect();
        let b: Vec<&str> = (0..rng.random_range(1..=5)).map(|_| *words.choose(&mut rng).unwrap()).collect();
        let mut best = f64::INFINITY;
        for x in &a {
            for y in &b {
                let (vx, vy) = (space.vector(x).unwrap(), space.vector(y).unwrap());
                let d = vx
                    .iter()
                    .zip(vy)
                    .map(|(p, q)| (f64::from(*p) - f64::from(*q)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        let got = min_linkage_distance(&a, &b, space).unwrap();
        assert!((got - best).abs() < 1e-9, "{got} vs {best}");
        assert_eq!(got, min_linkage_distance(&b, &a, space).unwrap());
    }
    assert_eq!(min_linkage_distance(&["nope"], &["w0001"], space), None);
}

#[test]
fn features_unrelated_to_hints_score_near_zero() {
    let world = SyntheticWorld::generate(WorldSpec {
        clusters: 8,
        words_per_cluster: 40,
        ..WorldSpec::default()
    });
    let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));
    // Baseline and hinted features alike are drawn from one pool, so
    // the relatedness of a feature to a hint does not depend on the hint.
    let pool: Vec<&String> = world.clusters()[..4].iter().flatten().collect();
    let mut records = Vec::new();
    for i in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let mut s = engine
            .start(SessionConfig::new(&format!("u{i:02}"), "penguin", Condition::Unhinted, i), T0)
            .unwrap();
        for j in 0..30 {
            s.submit_feature(&format!("is {}", pool.choose(&mut rng).unwrap()), T0 + j * 1000).unwrap();
        }
        records.push(s.finalize(T0 + 60_000).unwrap());
    }
    for i in 0..140u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let mut s = engine
            .start(SessionConfig::new(&format!("h{i:02}"), "penguin", Condition::Hinted, i), T0)
            .unwrap();
        let mut now = T0;
        for j in 0..60 {
            now += 1000;
            s.submit_feature(&format!("is {}", pool.choose(&mut rng).unwrap()), now).unwrap();
            if j % 6 == 5 {
                s.request_hint(now + 500).unwrap();
            }
        }
        records.push(s.finalize(now + 1000).unwrap());
    }
    let corpus = Corpus::new(records);
    let curve = relatedness_curve(&corpus, "penguin", world.space(), &Normalizer::default(), (-5, 5)).unwrap();
    for p in &curve.points {
        assert!(p.n >= 1000, "offset {} has n = {}", p.offset, p.n);
        let z = p.mean_z.unwrap();
        assert!(z.abs() < 0.1, "offset {}: z = {z}", p.offset);
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Set `UPDATE_GOLDEN=1` to rewrite the corpus and reports after
/// inspecting a change.
#[test]
fn reports_match_golden_csv() {
    let engine = grid_engine();
    let corpus_path = fixture("analysis_corpus.jsonl");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    if update {
        let lines: String = twenty_sessions(&engine).iter().map(|r| r.to_json_line() + "\n").collect();
        std::fs::write(&corpus_path, lines).unwrap();
    }
    let corpus = Corpus::load_jsonl(&corpus_path).unwrap();
    assert_eq!(corpus.len(), 20);
    let metrics = [
        (Metric::Counts, "report_counts.csv"),
        (Metric::Types, "report_types.csv"),
        (Metric::Density, "report_density.csv"),
        (Metric::Curve, "report_curve.csv"),
        (Metric::Arms, "report_arms.csv"),
        (Metric::Corr, "report_corr.csv"),
    ];
    for (metric, name) in metrics {
        let mut out = Vec::new();
        let options = ReportOptions {
            metric,
            concept: Some("penguin"),
            window: (-2, 2),
        };
        write_report(&corpus, engine.store().space(), engine.normalizer(), &options, &mut out).unwrap();
        if update {
            std::fs::write(fixture(name), &out).unwrap();
        }
        let golden = std::fs::read(fixture(name)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), String::from_utf8(golden).unwrap(), "{name}");
    }
}
