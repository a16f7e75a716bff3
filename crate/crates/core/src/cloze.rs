//! Four-template masked-word probes and the agent/theme bias measures.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::BackendClient;
use crate::error::{Error, Result};
use crate::verbs::{third_person_singular, verb_lemma};

pub const MASK: &str = "[MASK]";
pub const CANDIDATES: [&str; 2] = ["man", "woman"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Agent,
    Theme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noun {
    Man,
    Woman,
}

impl Noun {
    pub fn as_str(self) -> &'static str {
        match self {
            Noun::Man => "man",
            Noun::Woman => "woman",
        }
    }

    pub fn opposite(self) -> Noun {
        match self {
            Noun::Man => Noun::Woman,
            Noun::Woman => Noun::Man,
        }
    }
}

/// Which template: the masked slot and the gender noun filling the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateKind {
    /// `A [MASK] v a woman`
    #[serde(rename = "womanAsTheme")]
    WomanAsTheme,
    /// `A [MASK] v a man`
    #[serde(rename = "manAsTheme")]
    ManAsTheme,
    /// `A man v a [MASK]`
    #[serde(rename = "manAsAgent")]
    ManAsAgent,
    /// `A woman v a [MASK]`
    #[serde(rename = "womanAsAgent")]
    WomanAsAgent,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::WomanAsTheme,
        TemplateKind::ManAsTheme,
        TemplateKind::ManAsAgent,
        TemplateKind::WomanAsAgent,
    ];

    pub fn masked_slot(self) -> Slot {
        match self {
            TemplateKind::WomanAsTheme | TemplateKind::ManAsTheme => Slot::Agent,
            TemplateKind::ManAsAgent | TemplateKind::WomanAsAgent => Slot::Theme,
        }
    }

    pub fn fixed_gender(self) -> Noun {
        match self {
            TemplateKind::WomanAsTheme | TemplateKind::WomanAsAgent => Noun::Woman,
            TemplateKind::ManAsTheme | TemplateKind::ManAsAgent => Noun::Man,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::WomanAsTheme => "womanAsTheme",
            TemplateKind::ManAsTheme => "manAsTheme",
            TemplateKind::ManAsAgent => "manAsAgent",
            TemplateKind::WomanAsAgent => "womanAsAgent",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeTemplate {
    pub verb: String,
    pub kind: TemplateKind,
    pub slot: Slot,
    pub fixed_gender: Noun,
    pub text: String,
}

/// The four templates for `verb`, in [`TemplateKind::ALL`] order. Inflected
/// input is reduced to its lemma first.
pub fn make_templates(verb: &str) -> [ClozeTemplate; 4] {
    let lemma = verb_lemma(verb);
    let v = third_person_singular(&lemma);
    TemplateKind::ALL.map(|kind| {
        let g = kind.fixed_gender().as_str();
        let text = match kind.masked_slot() {
            Slot::Agent => format!("A {MASK} {v} a {g}"),
            Slot::Theme => format!("A {g} {v} a {MASK}"),
        };
        ClozeTemplate {
            verb: lemma.clone(),
            kind,
            slot: kind.masked_slot(),
            fixed_gender: kind.fixed_gender(),
            text,
        }
    })
}

fn checked(probs: &BTreeMap<String, f64>, word: &str, text: &str) -> Result<f64> {
    let p = *probs
        .get(word)
        .ok_or_else(|| Error::Protocol(format!("no probability for `{word}` in `{text}`")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Protocol(format!(
            "probability {p} for `{word}` in `{text}` is outside [0, 1]"
        )));
    }
    Ok(p)
}

/// Raw completion probability of `word` at the mask of `template`.
pub fn cloze_prob(client: &BackendClient, template: &ClozeTemplate, word: &str) -> Result<f64> {
    let probs = client.cloze(&[(template.text.clone(), vec![word.to_string()])])?;
    checked(&probs[0], word, &template.text)
}

/// The four probabilities used by the bias measures for one verb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerbProbs {
    /// P(man | A [MASK] v a woman)
    pub man_given_woman_as_theme: f64,
    /// P(woman | A [MASK] v a man)
    pub woman_given_man_as_theme: f64,
    /// P(man | A woman v a [MASK])
    pub man_given_woman_as_agent: f64,
    /// P(woman | A man v a [MASK])
    pub woman_given_man_as_agent: f64,
}

impl VerbProbs {
    pub fn agent_difference(&self) -> f64 {
        self.man_given_woman_as_theme - self.woman_given_man_as_theme
    }

    pub fn theme_difference(&self) -> f64 {
        self.man_given_woman_as_agent - self.woman_given_man_as_agent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedVerb {
    pub verb: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub verb_set_name: String,
    pub backend: String,
    pub bias_agent: f64,
    pub bias_theme: f64,
    pub effective_verbs: usize,
    pub per_verb: BTreeMap<String, VerbProbs>,
    pub excluded: Vec<ExcludedVerb>,
}

impl BiasReport {
    /// Recomputes both means from `per_verb`.
    pub fn recompose(&self) -> (f64, f64) {
        means(self.per_verb.values())
    }
}

fn means<'a>(probs: impl Iterator<Item = &'a VerbProbs>) -> (f64, f64) {
    let (mut agent, mut theme, mut n) = (0.0, 0.0, 0usize);
    for p in probs {
        agent += p.agent_difference();
        theme += p.theme_difference();
        n += 1;
    }
    (agent / n as f64, theme / n as f64)
}

fn probe_verb(client: &BackendClient, verb: &str) -> Result<VerbProbs> {
    let templates = make_templates(verb);
    let candidates: Vec<String> = CANDIDATES.iter().map(|c| c.to_string()).collect();
    let items: Vec<(String, Vec<String>)> = templates
        .iter()
        .map(|t| (t.text.clone(), candidates.clone()))
        .collect();
    let probs = client.cloze(&items)?;
    let get = |kind: TemplateKind, word: &str| {
        let i = TemplateKind::ALL
            .iter()
            .position(|k| *k == kind)
            .expect("listed");
        checked(&probs[i], word, &templates[i].text)
    };
    Ok(VerbProbs {
        man_given_woman_as_theme: get(TemplateKind::WomanAsTheme, "man")?,
        woman_given_man_as_theme: get(TemplateKind::ManAsTheme, "woman")?,
        man_given_woman_as_agent: get(TemplateKind::WomanAsAgent, "man")?,
        woman_given_man_as_agent: get(TemplateKind::ManAsAgent, "woman")?,
    })
}

/// `bias_agent` = mean over verbs of P(man | A [MASK] v a woman) −
/// P(woman | A [MASK] v a man); `bias_theme` = mean of
/// P(man | A woman v a [MASK]) − P(woman | A man v a [MASK]).
///
/// A verb whose probe fails is excluded and listed. If every verb fails the
/// last error is returned.
pub fn bias_measures(
    client: &BackendClient,
    verbs: &[String],
    verb_set_name: &str,
) -> Result<BiasReport> {
    if verbs.is_empty() {
        return Err(Error::InvalidArgument("empty verb set".into()));
    }
    let mut per_verb = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut last_error = None;
    for verb in verbs {
        let lemma = verb_lemma(verb);
        if per_verb.contains_key(&lemma) {
            continue;
        }
        match probe_verb(client, &lemma) {
            Ok(p) => {
                per_verb.insert(lemma, p);
            }
            Err(e) => {
                log::warn!("cloze probe for `{lemma}` failed: {e}");
                excluded.push(ExcludedVerb {
                    verb: lemma,
                    error: e.to_string(),
                });
                last_error = Some(e);
            }
        }
    }
    if per_verb.is_empty() {
        return Err(last_error.expect("at least one verb"));
    }
    let (bias_agent, bias_theme) = means(per_verb.values());
    Ok(BiasReport {
        verb_set_name: verb_set_name.to_string(),
        backend: client.describe(),
        bias_agent,
        bias_theme,
        effective_verbs: per_verb.len(),
        per_verb,
        excluded,
    })
}

pub fn cloze_csv(report: &BiasReport) -> String {
    let mut out = String::from(
        "verb,p_man_womanAsTheme,p_woman_manAsTheme,p_man_womanAsAgent,p_woman_manAsAgent\n",
    );
    for (verb, p) in &report.per_verb {
        let _ = writeln!(
            out,
            "{verb},{},{},{},{}",
            p.man_given_woman_as_theme,
            p.woman_given_man_as_theme,
            p.man_given_woman_as_agent,
            p.woman_given_man_as_agent
        );
    }
    out
}

/// Writes `cloze_bias.csv` and `bias_report.json`.
pub fn write_outputs(dir: &Path, report: &BiasReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("cloze_bias.csv");
    fs::write(&csv, cloze_csv(report)).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join("bias_report.json");
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n")
        .map_err(|e| Error::io(&json, e))?;
    Ok(vec![csv, json])
}
