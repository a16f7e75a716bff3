use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use courtbias_core::backend::{BackendClient, Label, MockBackend, NliPolicy, NliRule, Verdict};
use courtbias_core::entail::{flip_subcorpus, FlipLexicon, Premise, SubCorpus};
use courtbias_core::roletag::SentenceRef;
use courtbias_core::sampling::*;
use courtbias_core::Error;
use proptest::prelude::*;
use serde::Deserialize;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

#[derive(Deserialize)]
struct FixturePremise {
    verb: String,
    text: String,
    flipped: String,
}

#[derive(Deserialize)]
struct Planted {
    premise: String,
    hypothesis: String,
    kind: InconsistencyKind,
}

#[derive(Deserialize)]
struct PlantedFixture {
    premises: Vec<FixturePremise>,
    mock: MockBackend,
    planted: Vec<Planted>,
}

fn planted_fixture() -> PlantedFixture {
    serde_json::from_str(
        &std::fs::read_to_string(format!("{FIXTURES}/planted_faults.json")).unwrap(),
    )
    .unwrap()
}

fn corpus(verb: &str, texts: &[String]) -> SubCorpus {
    SubCorpus {
        verb: verb.to_string(),
        premises: texts
            .iter()
            .enumerate()
            .map(|(i, t)| Premise {
                text: t.clone(),
                source: SentenceRef {
                    doc_id: format!("doc-{verb}"),
                    sent_idx: i,
                },
                parse: None,
            })
            .collect(),
    }
}

fn fixture_corpora(f: &PlantedFixture) -> (Vec<SubCorpus>, Vec<SubCorpus>) {
    let lex = FlipLexicon::bundled();
    let verbs: BTreeSet<&str> = f.premises.iter().map(|p| p.verb.as_str()).collect();
    let originals: Vec<SubCorpus> = verbs
        .iter()
        .map(|v| {
            let texts: Vec<String> = f
                .premises
                .iter()
                .filter(|p| p.verb == *v)
                .map(|p| p.text.clone())
                .collect();
            corpus(v, &texts)
        })
        .collect();
    let flipped: Vec<SubCorpus> = originals.iter().map(|c| flip_subcorpus(c, &lex)).collect();
    for (o, fl) in originals.iter().zip(&flipped) {
        for (p, q) in o.premises.iter().zip(&fl.premises) {
            let want = &f
                .premises
                .iter()
                .find(|x| x.text == p.text)
                .unwrap()
                .flipped;
            assert_eq!(&q.text, want);
        }
    }
    (originals, flipped)
}

#[test]
fn planted_faults_are_found_exactly() {
    let f = planted_fixture();
    assert_eq!(f.premises.len(), 20);
    let (orig, flipped) = fixture_corpora(&f);
    let client = BackendClient::mock(f.mock.clone());
    let found = detect_inconsistencies(&client, &orig, &flipped, DetectOptions::default()).unwrap();
    let got: BTreeSet<(String, String, InconsistencyKind)> = found
        .iter()
        .map(|p| (p.premise.clone(), p.hypothesis.clone(), p.kind))
        .collect();
    let want: BTreeSet<(String, String, InconsistencyKind)> = f
        .planted
        .iter()
        .filter(|p| p.kind != InconsistencyKind::ContradictionMismatch)
        .map(|p| (p.premise.clone(), p.hypothesis.clone(), p.kind))
        .collect();
    assert_eq!(found.len(), 4);
    assert_eq!(got, want);
    for p in &found {
        let lex = FlipLexicon::bundled();
        assert_eq!(
            courtbias_core::entail::flip_gender(&p.premise, &lex, None),
            p.flipped_premise
        );
    }

    let extended = detect_inconsistencies(
        &client,
        &orig,
        &flipped,
        DetectOptions {
            contradiction_mismatch: true,
        },
    )
    .unwrap();
    assert_eq!(extended.len(), 5);
}

#[test]
fn symmetric_backend_has_no_inconsistencies() {
    let f = planted_fixture();
    let (orig, flipped) = fixture_corpora(&f);
    let client = BackendClient::mock(MockBackend::default());
    let opts = DetectOptions {
        contradiction_mismatch: true,
    };
    assert!(detect_inconsistencies(&client, &orig, &flipped, opts)
        .unwrap()
        .is_empty());
}

#[test]
fn worked_pair_must_transfer() {
    let premise = "Continuously her husband used to harass and torture her everyday".to_string();
    let lex = FlipLexicon::bundled();
    let orig = vec![corpus("torture", std::slice::from_ref(&premise))];
    let flipped: Vec<SubCorpus> = orig.iter().map(|c| flip_subcorpus(c, &lex)).collect();
    assert_eq!(
        flipped[0].premises[0].text,
        "Continuously his wife used to harass and torture him everyday"
    );
    let table = |flipped_label: Label| {
        BackendClient::mock(MockBackend {
            nli: NliPolicy::Table {
                rules: vec![
                    NliRule {
                        premise: premise.clone(),
                        hypothesis: "A man tortures a woman".into(),
                        label: Label::Entailment,
                    },
                    NliRule {
                        premise: flipped[0].premises[0].text.clone(),
                        hypothesis: "A woman tortures a man".into(),
                        label: flipped_label,
                    },
                ],
                default: Label::Neutral,
            },
            ..Default::default()
        })
    };
    let consistent = detect_inconsistencies(
        &table(Label::Entailment),
        &orig,
        &flipped,
        DetectOptions::default(),
    )
    .unwrap();
    assert!(consistent.is_empty());
    let broken = detect_inconsistencies(
        &table(Label::Neutral),
        &orig,
        &flipped,
        DetectOptions::default(),
    )
    .unwrap();
    assert_eq!(broken.len(), 1);
    assert_eq!(broken[0].kind, InconsistencyKind::EntailDrop);
    assert_eq!(broken[0].flipped_hypothesis, "A woman tortures a man");
}

fn fake_pair(verb: &str, i: usize) -> InconsistentPair {
    let premise = format!("The husband {verb}ed her ({i}).");
    let v = Verdict::new(Label::Neutral);
    InconsistentPair {
        pair_id: pair_id(verb, &premise, "h"),
        verb: verb.to_string(),
        source: SentenceRef {
            doc_id: verb.to_string(),
            sent_idx: i,
        },
        flipped_premise: format!("The wife {verb}ed him ({i})."),
        premise,
        hypothesis: format!("A man {verb}s a woman"),
        flipped_hypothesis: format!("A woman {verb}s a man"),
        verdicts: QuadVerdicts {
            premise_fv: Verdict::new(Label::Entailment),
            premise_mv: v.clone(),
            flipped_fv: v.clone(),
            flipped_mv: v,
        },
        kind: InconsistencyKind::EntailDrop,
    }
}

fn ten_verbs() -> Vec<String> {
    courtbias_core::lexicon::unpleasant_verbs()
}

fn pool(sizes: &[usize]) -> Vec<InconsistentPair> {
    let verbs = ten_verbs();
    let mut out = Vec::new();
    for (v, &n) in verbs.iter().zip(sizes) {
        out.extend((0..n).map(|i| fake_pair(v, i)));
    }
    out
}

fn counts(batch: &[InconsistentPair]) -> Vec<usize> {
    ten_verbs()
        .iter()
        .map(|v| batch.iter().filter(|p| &p.verb == v).count())
        .collect()
}

#[test]
fn batch_of_sixty_is_six_per_verb() {
    let pool = pool(&[8, 6, 12, 9, 7, 6, 20, 10, 11, 6]);
    let a = sample_batch(&pool, 60, &ten_verbs(), 11).unwrap();
    assert_eq!(a.len(), 60);
    assert_eq!(counts(&a), vec![6; 10]);
    let b = sample_batch(&pool, 60, &ten_verbs(), 11).unwrap();
    assert_eq!(a, b);
    let ids: BTreeSet<&str> = a.iter().map(|p| p.pair_id.as_str()).collect();
    assert_eq!(ids.len(), 60);
}

#[test]
fn small_pools_are_exhausted_and_shortfall_redistributed() {
    let small = pool(&[1, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
    assert_eq!(sample_batch(&small, 60, &ten_verbs(), 0).unwrap().len(), 10);
    let one_empty = pool(&[0, 10, 10, 10, 10, 10, 10, 10, 10, 10]);
    let batch = sample_batch(&one_empty, 60, &ten_verbs(), 0).unwrap();
    assert_eq!(batch.len(), 60);
    assert_eq!(counts(&batch), vec![0, 7, 7, 7, 7, 7, 7, 6, 6, 6]);
    assert!(matches!(
        sample_batch(&[], 60, &ten_verbs(), 0),
        Err(Error::EmptyCorpus(_))
    ));
    assert!(sample_batch(&small, 0, &ten_verbs(), 0).is_err());
}

fn fixed_clock() -> Clock {
    Arc::new(|| Utc.with_ymd_and_hms(2024, 1, 2, 3, 4, 5).unwrap())
}

fn annotators() -> [String; 2] {
    ["ann1".to_string(), "ann2".to_string()]
}

fn store_with_batch(dir: &std::path::Path, pairs: usize) -> (AnnotationStore, Vec<AnnotationItem>) {
    let mut store = AnnotationStore::open_with_clock(dir, annotators(), fixed_clock()).unwrap();
    let pairs: Vec<InconsistentPair> = (0..pairs).map(|i| fake_pair("beat", i)).collect();
    let items = store.add_batch(1, &pairs).unwrap();
    (store, items)
}

#[test]
fn labels_are_journaled_and_reloaded() {
    let dir = tempfile::tempdir().unwrap();
    let (mut store, items) = store_with_batch(dir.path(), 2);
    assert_eq!(items.len(), 4);
    assert_eq!(items[0].partner, items[1].item_id);
    let id = items[0].item_id.clone();
    store.record_label(&id, "ann1", Label::Entailment).unwrap();
    store.record_label(&id, "ann2", Label::Neutral).unwrap();
    store.record_label(&id, "ann2", Label::Entailment).unwrap();
    assert!(matches!(
        store.record_label(&id, "ann3", Label::Neutral),
        Err(Error::UnknownAnnotator(_))
    ));
    assert!(matches!(
        store.record_label("nope", "ann1", Label::Neutral),
        Err(Error::UnknownItem(_))
    ));
    let journal = std::fs::read_to_string(dir.path().join(LABELS_FILE)).unwrap();
    assert_eq!(journal.lines().count(), 3);

    let reopened =
        AnnotationStore::open_with_clock(dir.path(), annotators(), fixed_clock()).unwrap();
    assert_eq!(
        reopened.label(&id, "ann2").unwrap().label,
        Label::Entailment
    );
    assert_eq!(
        reopened.next_item("ann1", None).unwrap().unwrap().item_id,
        items[1].item_id
    );
    assert_eq!(reopened.items(None).count(), 4);
    assert!(reopened.disagreements(None).is_empty());
}

#[test]
fn next_item_runs_out() {
    let dir = tempfile::tempdir().unwrap();
    let (mut store, items) = store_with_batch(dir.path(), 1);
    for i in &items {
        store
            .record_label(&i.item_id, "ann1", Label::Neutral)
            .unwrap();
    }
    assert!(store.next_item("ann1", None).unwrap().is_none());
    assert!(store.next_item("ann2", None).unwrap().is_some());
    assert!(store.next_item("ann9", None).is_err());
}

#[derive(Deserialize)]
struct KappaFixture {
    a: Vec<Label>,
    b: Vec<Label>,
    p_o: f64,
    p_e: f64,
    kappa: f64,
}

#[test]
fn kappa_matches_direct_formula() {
    let f: KappaFixture = serde_json::from_str(
        &std::fs::read_to_string(format!("{FIXTURES}/kappa_20.json")).unwrap(),
    )
    .unwrap();
    let k = cohen_kappa_labels(&f.a, &f.b).unwrap();
    assert!((k.kappa - f.kappa).abs() <= 1e-12);
    assert!((k.observed - f.p_o).abs() <= 1e-12);
    assert!((k.expected - f.p_e).abs() <= 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let (mut store, items) = store_with_batch(dir.path(), 10);
    for ((item, a), b) in items.iter().zip(&f.a).zip(&f.b) {
        store.record_label(&item.item_id, "ann1", *a).unwrap();
        store.record_label(&item.item_id, "ann2", *b).unwrap();
    }
    assert!((store.kappa(1).unwrap().kappa - f.kappa).abs() <= 1e-12);
    assert!(matches!(store.kappa(2), Err(Error::NoDoubleAnnotations(2))));
    assert_eq!(cohen_kappa_labels(&f.a, &f.a).unwrap().kappa, 1.0);
}

#[test]
fn export_requires_resolved_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (mut store, items) = store_with_batch(dir.path(), 2);
    for i in &items {
        store
            .record_label(&i.item_id, "ann1", Label::Entailment)
            .unwrap();
    }
    assert!(matches!(store.export_training_set(1), Err(Error::Unlabeled(ids)) if ids.len() == 4));
    for i in &items[1..] {
        store
            .record_label(&i.item_id, "ann2", Label::Entailment)
            .unwrap();
    }
    store
        .record_label(&items[0].item_id, "ann2", Label::Contradiction)
        .unwrap();
    match store.export_training_set(1) {
        Err(Error::Unadjudicated(ids)) => assert_eq!(ids, vec![items[0].item_id.clone()]),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(store.disagreements(Some(1)).len(), 1);
    store
        .record_adjudication(&items[0].item_id, Label::Neutral, "adjudicator")
        .unwrap();
    let records = store.export_training_set(1).unwrap();
    assert_eq!(records.len(), 4);
    let adjudicated = records
        .iter()
        .find(|r| r.item_id == items[0].item_id)
        .unwrap();
    assert_eq!(adjudicated.label, Label::Neutral);
    assert!(records.windows(2).all(|w| w[0].item_id < w[1].item_id));

    let path = store.write_export(1).unwrap();
    let first = std::fs::read(&path).unwrap();
    let reopened = AnnotationStore::open(dir.path(), annotators()).unwrap();
    reopened.write_export(1).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn agreed_batch_exports_without_adjudication() {
    let dir = tempfile::tempdir().unwrap();
    let (mut store, items) = store_with_batch(dir.path(), 1);
    for i in &items {
        for a in ["ann1", "ann2"] {
            store
                .record_label(&i.item_id, a, Label::Contradiction)
                .unwrap();
        }
    }
    let records = store.export_training_set(1).unwrap();
    assert!(records
        .iter()
        .all(|r| r.label == Label::Contradiction && r.iteration == 1));
    assert!(!dir.path().join(ADJUDICATIONS_FILE).exists());
}

#[test]
fn store_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    assert!(AnnotationStore::open(dir.path(), ["a".into(), "a".into()]).is_err());
    let (mut store, _) = store_with_batch(dir.path(), 1);
    assert!(store.add_batch(1, &[fake_pair("slap", 0)]).is_err());
}

fn label() -> impl Strategy<Value = Label> {
    prop::sample::select(Label::ALL.to_vec())
}

proptest! {
    #[test]
    fn kappa_is_symmetric_and_relabel_invariant(pairs in prop::collection::vec((label(), label()), 1..40), perm in Just(Label::ALL.to_vec()).prop_shuffle()) {
        let (a, b): (Vec<Label>, Vec<Label>) = pairs.into_iter().unzip();
        let k = cohen_kappa_labels(&a, &b).unwrap();
        let k2 = cohen_kappa_labels(&b, &a).unwrap();
        prop_assert!((k.kappa - k2.kappa).abs() <= 1e-12);
        let map = |l: &Label| perm[Label::ALL.iter().position(|x| x == l).unwrap()];
        let pa: Vec<Label> = a.iter().map(map).collect();
        let pb: Vec<Label> = b.iter().map(map).collect();
        let k3 = cohen_kappa_labels(&pa, &pb).unwrap();
        prop_assert!((k.kappa - k3.kappa).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&k.kappa));
    }

    #[test]
    fn batches_are_balanced_and_deterministic(sizes in prop::collection::vec(0usize..15, 10), size in 1usize..80, seed in any::<u64>()) {
        let pool = pool(&sizes);
        prop_assume!(!pool.is_empty());
        let a = sample_batch(&pool, size, &ten_verbs(), seed).unwrap();
        prop_assert_eq!(&a, &sample_batch(&pool, size, &ten_verbs(), seed).unwrap());
        prop_assert_eq!(a.len(), size.min(pool.len()));
        if sizes.iter().all(|&n| n >= size.div_ceil(10)) {
            let c = counts(&a);
            prop_assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
        }
    }
}
