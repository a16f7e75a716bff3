use std::collections::BTreeMap;

use chrono::NaiveDate;
use courtbias_core::backend::{BackendClient, Label, MockBackend};
use courtbias_core::entail::*;
use courtbias_core::ingest::{Document, RoleGenderMap};
use courtbias_core::roletag::{parse_conllu, SentenceRef};
use courtbias_core::text::Gender;
use proptest::prelude::*;
use serde::Deserialize;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

#[derive(Deserialize)]
struct TablePremise {
    verb: String,
    text: String,
    flipped: String,
}

#[derive(Deserialize)]
struct VerbExpect {
    n: usize,
    ent_fv: f64,
    ent_mv: f64,
    gap: f64,
    flipped_ent_fv: f64,
    flipped_ent_mv: f64,
    flipped_gap: f64,
    term: f64,
}

#[derive(Deserialize)]
struct Expect {
    per_verb: BTreeMap<String, VerbExpect>,
    bias: f64,
}

#[derive(Deserialize)]
struct TableFixture {
    verbs: Vec<String>,
    premises: Vec<TablePremise>,
    mock: MockBackend,
    expected: Expect,
}

fn table_fixture() -> TableFixture {
    let text = std::fs::read_to_string(format!("{FIXTURES}/entail_table.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn subcorpus(verb: &str, texts: &[String]) -> SubCorpus {
    SubCorpus {
        verb: verb.to_string(),
        premises: texts
            .iter()
            .enumerate()
            .map(|(i, t)| Premise {
                text: t.clone(),
                source: SentenceRef {
                    doc_id: verb.to_string(),
                    sent_idx: i,
                },
                parse: None,
            })
            .collect(),
    }
}

fn table_corpora(f: &TableFixture) -> Vec<SubCorpus> {
    f.verbs
        .iter()
        .map(|v| {
            let texts: Vec<String> = f
                .premises
                .iter()
                .filter(|p| &p.verb == v)
                .map(|p| p.text.clone())
                .collect();
            subcorpus(v, &texts)
        })
        .collect()
}

#[test]
fn table_fixture_matches_hand_counts() {
    let f = table_fixture();
    assert_eq!(f.premises.len(), 50);
    let lex = FlipLexicon::bundled();
    for p in &f.premises {
        assert_eq!(
            flip_gender(&p.text, &lex, None),
            p.flipped,
            "flip of {:?}",
            p.text
        );
    }
    let client = BackendClient::mock(f.mock.clone());
    let corpora = table_corpora(&f);
    for c in &corpora {
        let want = &f.expected.per_verb[&c.verb];
        let hyp = HypothesisPair::new(&c.verb);
        assert_eq!(
            entailment_ratio(&client, &c.texts(), &hyp.fv).unwrap(),
            want.ent_fv
        );
        assert_eq!(
            entailment_ratio(&client, &c.texts(), &hyp.mv).unwrap(),
            want.ent_mv
        );
        let g = entailment_gap(&client, c).unwrap();
        assert_eq!(
            (g.n_premises, g.ent_fv, g.ent_mv, g.gap),
            (want.n, want.ent_fv, want.ent_mv, want.gap)
        );
    }
    let report = nli_bias(&client, &corpora, &lex).unwrap();
    assert_eq!(report.bias, f.expected.bias);
    assert_eq!(report.effective_verbs, 5);
    for v in &report.verbs {
        let want = &f.expected.per_verb[&v.verb];
        assert_eq!(v.flipped.ent_fv, want.flipped_ent_fv);
        assert_eq!(v.flipped.ent_mv, want.flipped_ent_mv);
        assert_eq!(v.flipped.gap, want.flipped_gap);
        assert_eq!(v.term, want.term);
    }
}

#[test]
fn ratio_of_five_premises_with_three_entailed() {
    let texts: Vec<String> = (0..5)
        .map(|i| format!("The husband beat her ({i})."))
        .collect();
    let rules = (0..3)
        .map(|i| courtbias_core::backend::NliRule {
            premise: texts[i].clone(),
            hypothesis: "A man beats a woman".into(),
            label: Label::Entailment,
        })
        .collect();
    let client = BackendClient::mock(MockBackend {
        nli: courtbias_core::backend::NliPolicy::Table {
            rules,
            default: Label::Contradiction,
        },
        ..Default::default()
    });
    assert_eq!(
        entailment_ratio(&client, &texts, "A man beats a woman").unwrap(),
        0.6
    );
}

#[test]
fn symmetric_mock_has_zero_bias() {
    let f = table_fixture();
    let client = BackendClient::mock(MockBackend::named("symmetric").unwrap());
    let report = nli_bias(&client, &table_corpora(&f), &FlipLexicon::bundled()).unwrap();
    for v in &report.verbs {
        assert!(
            (v.original.gap + v.flipped.gap).abs() <= 1e-12,
            "{}",
            v.verb
        );
    }
    assert!(report.bias.abs() <= 1e-12);
}

#[test]
fn fv_only_mock_reaches_the_maximum() {
    let f = table_fixture();
    let client = BackendClient::mock(MockBackend::named("fv-only").unwrap());
    let report = nli_bias(&client, &table_corpora(&f), &FlipLexicon::bundled()).unwrap();
    assert_eq!(report.bias, 2.0);
}

#[test]
fn worked_examples_flip_as_printed() {
    let lex = FlipLexicon::bundled();
    assert_eq!(
        flip_gender(
            "The wife tortured the husband both mentally and physically",
            &lex,
            None
        ),
        "The husband tortured the wife both mentally and physically"
    );
    assert_eq!(
        flip_gender(
            "Continuously her husband used to harass and torture her everyday",
            &lex,
            None
        ),
        "Continuously his wife used to harass and torture him everyday"
    );
    assert_eq!(
        flip_gender("her husband used to harass and torture her", &lex, None),
        "his wife used to harass and torture him"
    );
}

fn fixture_lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(format!("{FIXTURES}/{name}"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn bijective_flip_is_an_involution() {
    let lex = FlipLexicon::bundled();
    let lines = fixture_lines("flip_bijective_200.txt");
    assert_eq!(lines.len(), 200);
    for s in &lines {
        let once = flip_gender(s, &lex, None);
        assert_ne!(&once, s);
        assert_eq!(&flip_gender(&once, &lex, None), s);
    }
}

#[test]
fn triple_flip_equals_flip_with_pronouns() {
    let lex = FlipLexicon::bundled();
    let lines = fixture_lines("flip_pronouns_80.txt");
    assert!(lines
        .iter()
        .any(|l| l.split_whitespace().any(|w| w == "her")));
    for s in &lines {
        let f1 = flip_gender(s, &lex, None);
        let f3 = flip_gender(&flip_gender(&f1, &lex, None), &lex, None);
        assert_eq!(f3, f1, "{s}");
    }
}

fn doc(sentences: &[&str]) -> Document {
    Document {
        id: "d1".into(),
        court_group: "g".into(),
        date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
        sentences: sentences.iter().map(|s| s.to_string()).collect(),
        role_map: RoleGenderMap {
            plaintiff_gender: Gender::Female,
            defendant_gender: Gender::Male,
            evidence: Vec::new(),
        },
        rewrites: Vec::new(),
    }
}

const SUB_CONLLU: &str = "# doc_id = d1
# sent_idx = 0
1	the	the	DET	_	_	2	det	_	_
2	husband	husband	NOUN	_	_	3	nsubj	_	_
3	tortured	torture	VERB	_	_	0	root	_	_
4	her	she	PRON	_	_	3	obj	_	_

# doc_id = d1
# sent_idx = 1
1	the	the	DET	_	_	2	det	_	_
2	torture	torture	NOUN	_	_	4	nsubj	_	_
3	was	be	AUX	_	_	4	cop	_	_
4	unbearable	unbearable	ADJ	_	_	0	root	_	_
5	said	say	VERB	_	_	4	parataxis	_	_
6	wife	wife	NOUN	_	_	5	nsubj	_	_

# doc_id = d1
# sent_idx = 2
1	he	he	PRON	_	_	2	nsubj	_	_
2	tortured	torture	VERB	_	_	0	root	_	_
3	the	the	DET	_	_	4	det	_	_
4	dog	dog	NOUN	_	_	2	obj	_	_

";

#[test]
fn subcorpus_requires_spouse_and_verb_use() {
    let docs = vec![doc(&[
        "the husband tortured her",
        "the torture was unbearable said wife",
        "he tortured the dog",
        "the wife tortured him",
    ])];
    let parses = parse_conllu(SUB_CONLLU.as_bytes()).unwrap();
    let c = build_subcorpus(&docs, &parses, "tortures");
    assert_eq!(c.verb, "torture");
    assert_eq!(c.texts(), vec!["the husband tortured her".to_string()]);
    assert!(build_subcorpus(&docs, &parses, "burn").is_empty());
}

#[test]
fn flipped_corpora_round_trip_through_disk() {
    let f = table_fixture();
    let dir = tempfile::tempdir().unwrap();
    let corpora = table_corpora(&f);
    let lex = FlipLexicon::bundled();
    let flipped = materialize_flipped(&dir.path().join("flipped"), &corpora, &lex).unwrap();
    for (c, fl) in corpora.iter().zip(&flipped) {
        let back = read_flipped(
            &dir.path().join(format!("flipped/{}.jsonl", c.verb)),
            &c.verb,
        )
        .unwrap();
        assert_eq!(&back, fl);
    }
    let client = BackendClient::mock(f.mock.clone());
    let report = nli_bias_with(&client, &corpora, &flipped).unwrap();
    assert_eq!(report.bias, f.expected.bias);
    let paths = write_bias_outputs(dir.path(), &report).unwrap();
    let csv = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("verb,ent_FV,ent_MV,gap,n\nabuse,"));
}

fn word() -> impl Strategy<Value = String> {
    let lex = FlipLexicon::bundled();
    let mut pool: Vec<String> = lex.bijective_tokens().map(str::to_string).collect();
    pool.extend(
        [
            "her",
            "his",
            "him",
            "hers",
            "the",
            "court",
            "everyday",
            "badly",
            "jewellery",
            "and",
        ]
        .map(String::from),
    );
    (prop::sample::select(pool), 0..3u8).prop_map(|(w, case)| match case {
        0 => w,
        1 => w.to_uppercase(),
        _ => {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect())
                .unwrap_or_default()
        }
    })
}

proptest! {
    #[test]
    fn flip_cubed_is_flip(words in prop::collection::vec(word(), 1..12), seps in prop::collection::vec(prop::sample::select(vec![" ", ", ", ". ", " - "]), 12)) {
        let mut s = String::new();
        for (i, w) in words.iter().enumerate() {
            if i > 0 { s.push_str(seps[i]); }
            s.push_str(w);
        }
        let lex = FlipLexicon::bundled();
        let f1 = flip_gender(&s, &lex, None);
        let f3 = flip_gender(&flip_gender(&f1, &lex, None), &lex, None);
        prop_assert_eq!(f3, f1);
    }

    #[test]
    fn ratio_ignores_premise_order(mut texts in prop::collection::vec("[a-z ]{0,12}(husband|wife|he|she)[a-z ]{0,12}", 1..20), seed in any::<u64>()) {
        let client = BackendClient::mock(MockBackend::default());
        let a = entailment_ratio(&client, &texts, "A man hits a woman").unwrap();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        texts.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, entailment_ratio(&client, &texts, "A man hits a woman").unwrap());
    }

    #[test]
    fn bias_stays_within_bounds(labels in prop::collection::vec(0..3usize, 8)) {
        let texts: Vec<String> = vec!["The husband hit her.".into(), "The wife hit him.".into()];
        let all = ["entailment", "contradiction", "neutral"];
        let lex = FlipLexicon::bundled();
        let c = subcorpus("hit", &texts);
        let flipped: Vec<String> = texts.iter().map(|t| flip_gender(t, &lex, None)).collect();
        let mut rules = Vec::new();
        let mut k = 0;
        for p in texts.iter().chain(&flipped) {
            for h in ["A man hits a woman", "A woman hits a man"] {
                rules.push(courtbias_core::backend::NliRule { premise: p.clone(), hypothesis: h.into(), label: all[labels[k]].parse().unwrap() });
                k += 1;
            }
        }
        let client = BackendClient::mock(MockBackend { nli: courtbias_core::backend::NliPolicy::Table { rules, default: Label::Neutral }, ..Default::default() });
        let r = nli_bias(&client, &[c], &lex).unwrap();
        prop_assert!((0.0..=2.0).contains(&r.bias));
        for v in &r.verbs { prop_assert_eq!(v.original.gap, v.original.ent_fv - v.original.ent_mv); }
    }
}
