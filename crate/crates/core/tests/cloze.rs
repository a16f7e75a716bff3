use std::collections::BTreeMap;

use courtbias_core::backend::{BackendClient, ClozePolicy, MockBackend};
use courtbias_core::cloze::*;
use courtbias_core::lexicon::unpleasant_verbs;
use proptest::prelude::*;

fn table_client(entries: BTreeMap<String, BTreeMap<String, f64>>) -> BackendClient {
    BackendClient::mock(MockBackend {
        cloze: ClozePolicy::Table {
            entries,
            default: BTreeMap::new(),
        },
        ..Default::default()
    })
}

fn probs(man: f64, woman: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([("man".to_string(), man), ("woman".to_string(), woman)])
}

/// Table giving P(man | womanAsTheme), P(woman | manAsTheme),
/// P(man | womanAsAgent), P(woman | manAsAgent) for each verb.
fn four_prob_table(rows: &[(&str, [f64; 4])]) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut entries = BTreeMap::new();
    for (verb, [a, b, c, d]) in rows {
        let t = make_templates(verb);
        entries.insert(t[0].text.clone(), probs(*a, 0.1));
        entries.insert(t[1].text.clone(), probs(0.1, *b));
        entries.insert(t[3].text.clone(), probs(*c, 0.1));
        entries.insert(t[2].text.clone(), probs(0.1, *d));
    }
    entries
}

#[test]
fn single_verb_fixture() {
    let client = table_client(four_prob_table(&[("torture", [0.6, 0.4, 0.3, 0.3])]));
    let r = bias_measures(&client, &["torture".to_string()], "single").unwrap();
    assert!((r.bias_agent - 0.2).abs() < 1e-15);
    assert_eq!(r.bias_theme, 0.0);
    assert_eq!(r.effective_verbs, 1);
    let p = r.per_verb["torture"];
    assert_eq!(
        (
            p.man_given_woman_as_theme,
            p.woman_given_man_as_theme,
            p.man_given_woman_as_agent,
            p.woman_given_man_as_agent
        ),
        (0.6, 0.4, 0.3, 0.3)
    );
}

#[test]
fn cloze_prob_returns_table_value() {
    let client = table_client(four_prob_table(&[("inspire", [0.20, 0.16, 0.5, 0.5])]));
    let t = make_templates("inspire");
    assert_eq!(cloze_prob(&client, &t[0], "man").unwrap(), 0.20);
    assert_eq!(cloze_prob(&client, &t[1], "woman").unwrap(), 0.16);
}

#[test]
fn symmetric_mock_has_no_bias() {
    let client = BackendClient::mock(MockBackend::default());
    let r = bias_measures(&client, &unpleasant_verbs(), "unpleasant").unwrap();
    assert_eq!(r.effective_verbs, 10);
    assert_eq!(r.bias_agent, 0.0);
    assert_eq!(r.bias_theme, 0.0);
}

#[test]
fn failing_verbs_are_excluded() {
    let client = table_client(four_prob_table(&[("beat", [0.5, 0.25, 0.5, 0.5])]));
    let verbs = vec!["beat".to_string(), "slap".to_string()];
    let r = bias_measures(&client, &verbs, "two").unwrap();
    assert_eq!(r.effective_verbs, 1);
    assert_eq!(r.excluded.len(), 1);
    assert_eq!(r.excluded[0].verb, "slap");
    assert_eq!(r.bias_agent, 0.25);
    assert!(bias_measures(&client, &["slap".to_string()], "none").is_err());
}

#[test]
fn out_of_range_probability_is_rejected() {
    let client = table_client(four_prob_table(&[("beat", [1.5, 0.25, 0.5, 0.5])]));
    assert!(bias_measures(&client, &["beat".to_string()], "bad").is_err());
}

#[test]
fn outputs_are_written() {
    let client = table_client(four_prob_table(&[("torture", [0.6, 0.4, 0.3, 0.3])]));
    let r = bias_measures(&client, &["torture".to_string()], "single").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_outputs(dir.path(), &r).unwrap();
    let csv = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(
        csv,
        "verb,p_man_womanAsTheme,p_woman_manAsTheme,p_man_womanAsAgent,p_woman_manAsAgent\ntorture,0.6,0.4,0.3,0.3\n"
    );
    let back: BiasReport =
        serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
    assert_eq!(back, r);
}

fn swap_words(text: &str) -> String {
    text.split(' ')
        .map(|w| match w {
            "man" => "woman",
            "woman" => "man",
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

proptest! {
    #[test]
    fn swapping_genders_negates_both_measures(rows in prop::collection::vec(prop::array::uniform4(0.0f64..=1.0), 1..6)) {
        let verbs = ["abuse", "beat", "burn", "cheat", "slap", "rape"];
        let named: Vec<(&str, [f64; 4])> = rows.iter().enumerate().map(|(i, r)| (verbs[i], *r)).collect();
        let table = four_prob_table(&named);
        let swapped: BTreeMap<String, BTreeMap<String, f64>> = table
            .iter()
            .map(|(text, p)| (swap_words(text), p.iter().map(|(c, v)| (swap_words(c), *v)).collect()))
            .collect();
        let list: Vec<String> = named.iter().map(|(v, _)| v.to_string()).collect();
        let a = bias_measures(&table_client(table), &list, "x").unwrap();
        let b = bias_measures(&table_client(swapped), &list, "x").unwrap();
        prop_assert_eq!(a.bias_agent, -b.bias_agent);
        prop_assert_eq!(a.bias_theme, -b.bias_theme);
        prop_assert!(a.bias_agent.abs() <= 1.0 && a.bias_theme.abs() <= 1.0);
        let (agent, theme) = a.recompose();
        prop_assert!((agent - a.bias_agent).abs() <= 1e-12 && (theme - a.bias_theme).abs() <= 1e-12);
    }
}
