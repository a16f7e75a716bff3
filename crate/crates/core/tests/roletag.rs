use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use chrono::NaiveDate;
use courtbias_core::ingest::{Document, Evidence, Party, RoleGenderMap, RuleId};
use courtbias_core::lexicon::unpleasant_verbs;
use courtbias_core::roletag::*;
use courtbias_core::text::Gender;
use courtbias_core::Error;
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn verbs() -> BTreeSet<String> {
    unpleasant_verbs().into_iter().collect()
}

fn fixture_sentences() -> Vec<ParsedSentence> {
    let text = fs::read_to_string(fixture("roletag_30.conllu")).unwrap();
    parse_conllu(text.as_bytes()).unwrap()
}

fn swap_gender(sent: &ParsedSentence) -> ParsedSentence {
    let mut out = sent.clone();
    for t in &mut out.tokens {
        let (form, lemma) = match (t.form.as_str(), t.deprel.as_str()) {
            ("husband", _) => ("wife", "wife"),
            ("wife", _) => ("husband", "husband"),
            ("husbands", _) => ("wives", "wife"),
            ("wives", _) => ("husbands", "husband"),
            ("he", _) => ("she", "she"),
            ("she", _) => ("he", "he"),
            ("him", _) => ("her", "she"),
            ("his", _) => ("her", "she"),
            ("her", "nmod:poss") => ("his", "he"),
            ("her", _) => ("him", "he"),
            ("himself", _) => ("herself", "herself"),
            ("herself", _) => ("himself", "himself"),
            _ => continue,
        };
        t.form = form.into();
        t.lemma = lemma.into();
    }
    out
}

fn slots(sent: &ParsedSentence) -> Vec<(usize, RoleSlot)> {
    classify_roles(sent, &verbs())
        .iter()
        .flat_map(|a| a.slots())
        .collect()
}

fn document(id: &str, sentences: &[&str]) -> Document {
    Document {
        id: id.into(),
        court_group: "g".into(),
        date: NaiveDate::from_ymd_opt(2016, 3, 1).unwrap(),
        sentences: sentences.iter().map(|s| s.to_string()).collect(),
        role_map: RoleGenderMap {
            plaintiff_gender: Gender::Female,
            defendant_gender: Gender::Male,
            evidence: vec![Evidence {
                rule: RuleId::Salutation,
                party: Party::Plaintiff,
                gender: Gender::Female,
                start: 0,
                end: 3,
                cue: "smt".into(),
            }],
        },
        rewrites: vec![],
    }
}

#[test]
fn thirty_sentence_fixture_matches_hand_labels() {
    let sentences = fixture_sentences();
    assert_eq!(sentences.len(), 30);
    let expected = fs::read_to_string(fixture("roletag_30.expected")).unwrap();
    let expected: Vec<&str> = expected.lines().collect();
    let sentinels = Sentinels::default();
    for (i, (s, want)) in sentences.iter().zip(&expected).enumerate() {
        let (tokens, _) = rewrite_sentence(s, &verbs(), &sentinels).unwrap();
        assert_eq!(tokens.join(" "), *want, "sentence {i}");
    }
}

#[test]
fn fixture_sentinel_counts() {
    let sentences = fixture_sentences();
    let lines: Vec<String> = sentences
        .iter()
        .map(|s| s.forms().collect::<Vec<_>>().join(" "))
        .collect();
    let lines: Vec<&str> = lines.iter().map(String::as_str).collect();
    let doc = document("fixture", &lines);
    let corpus =
        build_replaced_corpus(&[doc], &sentences, &verbs(), &Sentinels::default()).unwrap();
    assert_eq!(corpus.counts.total(RoleSlot::MalePerpetrator), 16);
    assert_eq!(corpus.counts.total(RoleSlot::FemalePerpetrator), 5);
    assert_eq!(corpus.counts.total(RoleSlot::MaleVictim), 7);
    assert_eq!(corpus.counts.total(RoleSlot::FemaleVictim), 15);
    let csv = corpus.counts.to_csv(&Sentinels::default());
    assert!(csv.starts_with("verb,slot,sentinel,count\n"));
    assert!(csv.contains("all,MP,zmaleperpz,16\n"));
    assert!(csv.contains("torture,FV,zfemalevictz,"));
}

#[test]
fn fixture_is_gender_swap_equivariant() {
    for (i, s) in fixture_sentences().iter().enumerate() {
        let swapped: Vec<(usize, RoleSlot)> = slots(s)
            .into_iter()
            .map(|(t, slot)| (t, slot.swapped()))
            .collect();
        assert_eq!(slots(&swap_gender(s)), swapped, "sentence {i}");
    }
}

#[test]
fn active_and_passive_forms_agree_on_referents() {
    let sentences = fixture_sentences();
    // (active, passive) pairs with the same referents
    for (a, p) in [(0, 1), (2, 3), (4, 13)] {
        let by_gender = |s: &ParsedSentence| -> BTreeMap<Gender, RoleSlot> {
            classify_roles(s, &verbs())
                .iter()
                .flat_map(|r| {
                    r.agent
                        .map(|x| (x.gender, RoleSlot::perpetrator(x.gender)))
                        .into_iter()
                        .chain(r.theme.map(|x| (x.gender, RoleSlot::victim(x.gender))))
                })
                .collect()
        };
        assert_eq!(
            by_gender(&sentences[a]),
            by_gender(&sentences[p]),
            "pair {a}/{p}"
        );
        let voices: Vec<Voice> = classify_roles(&sentences[p], &verbs())
            .iter()
            .map(|r| r.voice)
            .collect();
        assert_eq!(voices, vec![Voice::Passive]);
    }
}

#[test]
fn corpus_without_target_verbs_is_unchanged() {
    let sentences = fixture_sentences();
    let plain = [6, 7, 8, 19, 26];
    let parses: Vec<ParsedSentence> = plain
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let mut p = sentences[i].clone();
            p.source = Some(SentenceRef {
                doc_id: "d".into(),
                sent_idx: k,
            });
            p
        })
        .collect();
    let lines: Vec<String> = parses
        .iter()
        .map(|p| p.forms().collect::<Vec<_>>().join(" "))
        .collect();
    let lines: Vec<&str> = lines.iter().map(String::as_str).collect();
    let corpus = build_replaced_corpus(
        &[document("d", &lines)],
        &parses,
        &verbs(),
        &Sentinels::default(),
    )
    .unwrap();
    assert_eq!(corpus.sentences, corpus.baseline);
    assert_eq!(corpus.sentences, lines);
    assert!(RoleSlot::ALL.iter().all(|&s| corpus.counts.total(s) == 0));
}

#[test]
fn sentinel_already_in_corpus_is_fatal() {
    let sentences = fixture_sentences();
    let doc = document("fixture", &["The zfemalevictz appeared."]);
    assert!(matches!(
        build_replaced_corpus(&[doc], &sentences[..1], &verbs(), &Sentinels::default()),
        Err(Error::SentinelCollision(w)) if w == "zfemalevictz"
    ));
}

#[test]
fn missing_parse_is_reported() {
    let sentences = fixture_sentences();
    let doc = document("fixture", &["one", "two"]);
    let err = build_replaced_corpus(&[doc], &sentences[1..2], &verbs(), &Sentinels::default())
        .unwrap_err();
    assert!(
        matches!(err, Error::MissingParse { sent_idx: 0, .. }),
        "{err}"
    );
}

#[test]
fn rewriting_rewritten_sentences_changes_nothing() {
    let sentinels = Sentinels::default();
    for s in fixture_sentences() {
        let (tokens, _) = rewrite_sentence(&s, &verbs(), &sentinels).unwrap();
        let mut again = s.clone();
        for (t, form) in again.tokens.iter_mut().zip(&tokens) {
            if *form != t.form {
                t.form = form.clone();
                t.lemma = form.clone();
            }
        }
        let (tokens2, assignments) = rewrite_sentence(&again, &verbs(), &sentinels).unwrap();
        assert_eq!(tokens2, tokens);
        assert!(assignments.is_empty());
    }
}

const WORDS: &[(&str, &str, &str)] = &[
    ("the", "the", "DET"),
    ("husband", "husband", "NOUN"),
    ("wife", "wife", "NOUN"),
    ("he", "he", "PRON"),
    ("she", "she", "PRON"),
    ("him", "he", "PRON"),
    ("her", "she", "PRON"),
    ("mother", "mother", "NOUN"),
    ("tortured", "torture", "VERB"),
    ("beaten", "beat", "VERB"),
    ("abused", "abuse", "VERB"),
    ("met", "meet", "VERB"),
    ("was", "be", "AUX"),
    ("by", "by", "ADP"),
    ("and", "and", "CCONJ"),
];

const RELS: &[&str] = &[
    "nsubj",
    "nsubj:pass",
    "obj",
    "obl",
    "obl:agent",
    "aux:pass",
    "case",
    "conj",
    "xcomp",
    "det",
    "cc",
];

fn random_sentence() -> impl Strategy<Value = ParsedSentence> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0..WORDS.len(), n),
            prop::collection::vec(0..RELS.len(), n),
            prop::collection::vec(any::<prop::sample::Index>(), n),
        )
            .prop_map(move |(words, rels, heads)| {
                let tokens = (0..n)
                    .map(|i| {
                        let (form, lemma, upos) = WORDS[words[i]];
                        // token 0 is the root, every other token attaches to an earlier one
                        let head = if i == 0 { 0 } else { heads[i].index(i) + 1 };
                        ConlluToken {
                            form: form.into(),
                            lemma: lemma.into(),
                            upos: upos.into(),
                            head,
                            deprel: if i == 0 {
                                "root".into()
                            } else {
                                RELS[rels[i]].into()
                            },
                        }
                    })
                    .collect();
                ParsedSentence {
                    tokens,
                    source: None,
                }
            })
    })
}

proptest! {
    #[test]
    fn sentinels_keep_length_and_other_tokens(s in random_sentence()) {
        let assignments = classify_roles(&s, &verbs());
        let out = apply_sentinels(&s, &assignments, &Sentinels::default()).unwrap();
        prop_assert_eq!(out.len(), s.tokens.len());
        let args: BTreeSet<usize> = assignments.iter().flat_map(|a| a.slots()).map(|(t, _)| t).collect();
        for (i, t) in s.tokens.iter().enumerate() {
            if !args.contains(&i) {
                prop_assert_eq!(&out[i], &t.form);
            }
        }
        for a in &assignments {
            prop_assert!(a.agent.is_some() || a.theme.is_some());
        }
    }

    #[test]
    fn swapping_genders_swaps_slots(s in random_sentence()) {
        let swapped: Vec<(usize, RoleSlot)> =
            slots(&s).into_iter().map(|(t, slot)| (t, slot.swapped())).collect();
        prop_assert_eq!(slots(&swap_gender(&s)), swapped);
    }

    #[test]
    fn conllu_round_trip(s in random_sentence()) {
        let text = write_conllu(std::slice::from_ref(&s));
        let back = parse_conllu(text.as_bytes()).unwrap();
        prop_assert_eq!(back, vec![s]);
    }
}
