use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::Instant;

use courtbias_core::embed::*;
use courtbias_core::synth::two_community_corpus;
use courtbias_core::Error;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct OracleCase {
    vectors: BTreeMap<String, Vec<f64>>,
    #[serde(rename = "X")]
    x: Vec<String>,
    #[serde(rename = "Y")]
    y: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<String>,
    #[serde(rename = "B")]
    b: Vec<String>,
    score: f64,
    sigma: BTreeMap<String, f64>,
}

fn oracle_cases() -> Vec<(EmbeddingModel, WeatSpec, f64, BTreeMap<String, f64>)> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/weat_oracle.json"
    );
    let cases: Vec<OracleCase> = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    cases
        .into_iter()
        .map(|c| {
            let model = EmbeddingModel::from_rows(c.vectors.into_iter().collect()).unwrap();
            let spec = WeatSpec::new(c.x, c.y, c.a, c.b);
            (model, spec, c.score, c.sigma)
        })
        .collect()
}

#[test]
fn weat_matches_independent_oracle_on_100_models() {
    let cases = oracle_cases();
    assert_eq!(cases.len(), 100);
    let start = Instant::now();
    for (i, (model, spec, score, sigmas)) in cases.iter().enumerate() {
        spec.validate().unwrap();
        let r = weat(spec, model).unwrap();
        assert!(
            (r.score - score).abs() < 1e-9,
            "case {i}: {} vs {score}",
            r.score
        );
        for (w, s) in sigmas {
            assert!((r.per_word_sigma[w] - s).abs() < 1e-12, "case {i} word {w}");
        }
        let flipped = weat(&spec.swapped_attributes(), model).unwrap();
        assert!(
            (flipped.score + r.score).abs() < 1e-12,
            "case {i} antisymmetry"
        );
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn weat_is_scale_invariant() {
    for (model, spec, _, _) in oracle_cases().iter().take(20) {
        let base = weat(spec, model).unwrap().score;
        for factor in [1e-3, 0.5, 7.0, 1e4] {
            let scaled = weat(spec, &model.scaled(factor)).unwrap().score;
            assert!((scaled - base).abs() < 1e-12, "{scaled} vs {base}");
        }
    }
}

#[test]
fn two_communities_separate_and_training_is_deterministic() {
    let (a, b, corpus) = two_community_corpus(10, 400, 8, 17);
    let config = EmbeddingConfig {
        dimension: 20,
        min_count: 1,
        epochs: 5,
        seed: 5,
        subsample: 0.0,
        ..Default::default()
    };
    let model = train_skipgram(&corpus, &config).unwrap();
    let mean_cos = |xs: &[String], ys: &[String], same: bool| {
        let mut total = 0.0;
        let mut n = 0;
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                if same && i == j {
                    continue;
                }
                total += cosine(model.vector(x).unwrap(), model.vector(y).unwrap()).unwrap();
                n += 1;
            }
        }
        total / n as f64
    };
    let intra = (mean_cos(&a, &a, true) + mean_cos(&b, &b, true)) / 2.0;
    let inter = mean_cos(&a, &b, false);
    assert!(intra - inter >= 0.2, "intra {intra} inter {inter}");
    assert_eq!(model, train_skipgram(&corpus, &config).unwrap());
}

#[test]
fn repeated_runs_report_their_mean() {
    let (a, b, corpus) = two_community_corpus(6, 120, 6, 3);
    let config = EmbeddingConfig {
        dimension: 10,
        min_count: 1,
        epochs: 2,
        seed: 11,
        ..Default::default()
    };
    let spec = WeatSpec::new(a[2..].to_vec(), vec![], a[..1].to_vec(), b[..1].to_vec());
    let r = weat_repeated(&corpus, &config, &spec, 3).unwrap();
    let runs = r.runs.clone().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(r.mean.unwrap(), runs.iter().sum::<f64>() / 3.0);
    for (i, s) in runs.iter().enumerate() {
        let cfg = EmbeddingConfig {
            seed: 11 + i as u64,
            ..config.clone()
        };
        assert_eq!(
            *s,
            weat(&spec, &train_skipgram(&corpus, &cfg).unwrap())
                .unwrap()
                .score
        );
    }
    assert_eq!(r, weat_repeated(&corpus, &config, &spec, 3).unwrap());
}

#[test]
fn out_of_vocabulary_target_is_an_error() {
    let (model, mut spec, _, _) = oracle_cases().swap_remove(0);
    spec.x.insert("nope".into());
    assert!(matches!(weat(&spec, &model), Err(Error::OutOfVocabulary(t)) if t == "nope"));
}

#[test]
fn saved_vectors_reload_with_same_scores_to_six_decimals() {
    let (model, spec, _, _) = oracle_cases().swap_remove(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.txt");
    save_vectors(&model, &path).unwrap();
    let back = load_vectors(&path).unwrap();
    save_vectors(&back, &dir.path().join("again.txt")).unwrap();
    assert_eq!(
        fs::read(&path).unwrap(),
        fs::read(dir.path().join("again.txt")).unwrap()
    );
    let s1 = weat(&spec, &model).unwrap().score;
    let s2 = weat(&spec, &back).unwrap().score;
    assert!((s1 - s2).abs() < 1e-4);
}

fn small_model() -> impl Strategy<Value = (EmbeddingModel, Vec<String>, Vec<String>, Vec<String>)> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 10).prop_filter_map(
        "zero vector",
        |rows| {
            if rows.iter().any(|r| r.iter().all(|x| x.abs() < 1e-6)) {
                return None;
            }
            let named: Vec<(String, Vec<f64>)> = rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| (format!("t{i}"), r))
                .collect();
            let model = EmbeddingModel::from_rows(named).ok()?;
            let names: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
            Some((
                model,
                names[..5].to_vec(),
                names[5..7].to_vec(),
                names[7..].to_vec(),
            ))
        },
    )
}

proptest! {
    #[test]
    fn sigma_is_difference_of_mean_cosines((model, x, a, b) in small_model()) {
        let aset: BTreeSet<String> = a.iter().cloned().collect();
        let bset: BTreeSet<String> = b.iter().cloned().collect();
        for w in &x {
            let v = model.vector(w).unwrap();
            let ma = a.iter().map(|t| cosine(v, model.vector(t).unwrap()).unwrap()).sum::<f64>() / a.len() as f64;
            let mb = b.iter().map(|t| cosine(v, model.vector(t).unwrap()).unwrap()).sum::<f64>() / b.len() as f64;
            let s = sigma(w, &aset, &bset, &model).unwrap();
            prop_assert!((s - (ma - mb)).abs() < 1e-12);
            prop_assert_eq!(sigma(w, &bset, &aset, &model).unwrap(), -s);
        }
    }

    #[test]
    fn shuffled_sets_give_identical_scores((model, x, a, b) in small_model(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = weat(&WeatSpec::new(x.clone(), vec![], a.clone(), b.clone()), &model);
        let (mut x2, mut a2, mut b2) = (x.clone(), a.clone(), b.clone());
        x2.shuffle(&mut rng);
        a2.shuffle(&mut rng);
        b2.shuffle(&mut rng);
        let shuffled = weat(&WeatSpec::new(x2, vec![], a2, b2), &model);
        match (base, shuffled) {
            (Ok(r1), Ok(r2)) => prop_assert_eq!(r1.score.to_bits(), r2.score.to_bits()),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "one ordering failed"),
        }
    }

    #[test]
    fn swapping_attributes_negates_score((model, x, a, b) in small_model()) {
        let spec = WeatSpec::new(x, vec![], a, b);
        if let Ok(r) = weat(&spec, &model) {
            let f = weat(&spec.swapped_attributes(), &model).unwrap();
            prop_assert!((f.score + r.score).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(a in prop::collection::vec(-5.0f64..5.0, 6), b in prop::collection::vec(-5.0f64..5.0, 6)) {
        if let (Ok(c1), Ok(c2)) = (cosine(&a, &b), cosine(&b, &a)) {
            prop_assert_eq!(c1, c2);
            prop_assert!((-1.0..=1.0).contains(&c1));
        }
    }
}

#[test]
fn inflected_targets_collect_frequent_forms() {
    let line = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let corpus = vec![
        line("he tortured her and beat her"),
        line("she tortured him"),
        line("they torture nobody"),
        line("he beaten beat"),
    ];
    let verbs = vec!["torture".to_string(), "beat".to_string()];
    let got = inflected_targets(&corpus, &verbs, 2).unwrap();
    assert_eq!(
        got.into_iter().collect::<Vec<_>>(),
        vec!["beat", "tortured"]
    );
    let all = inflected_targets(&corpus, &verbs, 1).unwrap();
    assert_eq!(all.len(), 4);
    assert!(inflected_targets(&corpus, &["slap".to_string()], 1).is_err());
}
