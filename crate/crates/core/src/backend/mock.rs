use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::{word_tokens, Gender};

use super::{Label, Request, Response, Task};

/// Answers single requests; implemented by scripted mocks.
pub trait Responder: Send + Sync {
    fn respond(&self, request: &Request) -> Response;

    fn name(&self) -> String {
        "responder".into()
    }
}

/// Gender of the first gendered word in `text`.
fn first_gender(text: &str) -> Option<Gender> {
    word_tokens(text).iter().find_map(|w| match w.as_str() {
        "man" | "men" | "husband" | "husbands" | "he" | "him" | "his" | "himself" | "boy"
        | "father" | "son" | "brother" | "mr" | "shri" => Some(Gender::Male),
        "woman" | "women" | "wife" | "wives" | "she" | "her" | "hers" | "herself" | "girl"
        | "mother" | "daughter" | "sister" | "mrs" | "smt" => Some(Gender::Female),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliRule {
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum NliPolicy {
    /// Same label for everything.
    Constant { label: Label },
    /// Entailment exactly when the hypothesis agent is male.
    FvOnly,
    /// Entailment when the first gendered word of the premise has the same
    /// gender as the hypothesis agent, neutral otherwise. Invariant under
    /// flipping premise and hypothesis together.
    Symmetric,
    /// Exact `(premise, hypothesis)` lookup.
    Table {
        rules: Vec<NliRule>,
        #[serde(default = "default_label")]
        default: Label,
    },
}

fn default_label() -> Label {
    Label::Neutral
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ClozePolicy {
    /// Same probabilities for every template.
    Constant { probs: BTreeMap<String, f64> },
    /// Probabilities depend on the template with `man`/`woman` masked out and
    /// on whether the candidate is the gender already present, so swapping
    /// the genders of template and candidate gives the same value.
    Symmetric,
    /// Exact template-text lookup.
    Table {
        entries: BTreeMap<String, BTreeMap<String, f64>>,
        #[serde(default)]
        default: BTreeMap<String, f64>,
    },
}

/// Deterministic scripted backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockBackend {
    #[serde(default = "symmetric_nli")]
    pub nli: NliPolicy,
    #[serde(default = "symmetric_cloze")]
    pub cloze: ClozePolicy,
}

fn symmetric_nli() -> NliPolicy {
    NliPolicy::Symmetric
}

fn symmetric_cloze() -> ClozePolicy {
    ClozePolicy::Symmetric
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend {
            nli: NliPolicy::Symmetric,
            cloze: ClozePolicy::Symmetric,
        }
    }
}

impl MockBackend {
    pub const NAMES: [&'static str; 4] = ["symmetric", "fv-only", "entail-all", "entail-none"];

    pub fn named(name: &str) -> Option<Self> {
        let nli = match name {
            "symmetric" => NliPolicy::Symmetric,
            "fv-only" => NliPolicy::FvOnly,
            "entail-all" => NliPolicy::Constant {
                label: Label::Entailment,
            },
            "entail-none" => NliPolicy::Constant {
                label: Label::Neutral,
            },
            _ => return None,
        };
        Some(MockBackend {
            nli,
            cloze: ClozePolicy::Symmetric,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
            location: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn nli_label(&self, premise: &str, hypothesis: &str) -> Label {
        match &self.nli {
            NliPolicy::Constant { label } => *label,
            NliPolicy::FvOnly => {
                if first_gender(hypothesis) == Some(Gender::Male) {
                    Label::Entailment
                } else {
                    Label::Contradiction
                }
            }
            NliPolicy::Symmetric => match (first_gender(premise), first_gender(hypothesis)) {
                (Some(p), Some(h)) if p == h => Label::Entailment,
                _ => Label::Neutral,
            },
            NliPolicy::Table { rules, default } => rules
                .iter()
                .find(|r| r.premise == premise && r.hypothesis == hypothesis)
                .map_or(*default, |r| r.label),
        }
    }

    pub fn cloze_probs(&self, text: &str, candidates: &[String]) -> BTreeMap<String, f64> {
        match &self.cloze {
            ClozePolicy::Constant { probs } => pick(probs, candidates),
            ClozePolicy::Table { entries, default } => {
                pick(entries.get(text).unwrap_or(default), candidates)
            }
            ClozePolicy::Symmetric => {
                let present = first_gender(text);
                let neutral: String = text
                    .split_whitespace()
                    .map(|w| match w {
                        "man" | "woman" => "_",
                        other => other,
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let digest = Sha256::digest(neutral.as_bytes());
                let unit = |i: usize| {
                    u32::from_be_bytes([digest[i], digest[i + 1], digest[i + 2], digest[i + 3]])
                        as f64
                        / u32::MAX as f64
                };
                let opposite = 0.05 + 0.45 * unit(0);
                let same = 0.05 + 0.45 * unit(4);
                candidates
                    .iter()
                    .map(|c| {
                        let g = first_gender(c);
                        let p = match (g, present) {
                            (Some(g), Some(t)) if g == t => same,
                            (Some(_), _) => opposite,
                            (None, _) => 0.0,
                        };
                        (c.clone(), p)
                    })
                    .collect()
            }
        }
    }
}

/// Candidates missing from `probs` are left out of the reply.
fn pick(probs: &BTreeMap<String, f64>, candidates: &[String]) -> BTreeMap<String, f64> {
    candidates
        .iter()
        .filter_map(|c| probs.get(c).map(|p| (c.clone(), *p)))
        .collect()
}

impl Responder for MockBackend {
    fn respond(&self, request: &Request) -> Response {
        match &request.task {
            Task::Nli {
                premise,
                hypothesis,
            } => Response {
                id: request.id.clone(),
                label: Some(self.nli_label(premise, hypothesis)),
                ..Default::default()
            },
            Task::Cloze { text, candidates } => Response {
                id: request.id.clone(),
                probs: Some(self.cloze_probs(text, candidates)),
                ..Default::default()
            },
        }
    }

    fn name(&self) -> String {
        "mock".into()
    }
}

/// Serves requests read line by line from `input`, one response line each.
/// Unparseable lines get `{"id": "", "error": …}`.
pub fn serve_stdio<R: Responder, I: BufRead, O: Write>(
    responder: &R,
    input: I,
    mut output: O,
) -> Result<()> {
    for line in input.lines() {
        let line = line.map_err(|e| Error::Transport(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Ok(req) => serde_json::to_string(&responder.respond(&req))?,
            Err(e) => serde_json::json!({"id": "", "error": e.to_string()}).to_string(),
        };
        writeln!(output, "{reply}")
            .and_then(|_| output.flush())
            .map_err(|e| Error::Transport(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_nli_is_flip_invariant() {
        let m = MockBackend::default();
        assert_eq!(
            m.nli_label("The husband beat her.", "A man beats a woman"),
            Label::Entailment
        );
        assert_eq!(
            m.nli_label("The wife beat him.", "A woman beats a man"),
            Label::Entailment
        );
        assert_eq!(
            m.nli_label("The husband beat her.", "A woman beats a man"),
            Label::Neutral
        );
        assert_eq!(
            m.nli_label("Nothing gendered.", "A man beats a woman"),
            Label::Neutral
        );
    }

    #[test]
    fn symmetric_cloze_swaps_with_gender() {
        let m = MockBackend::default();
        let c = vec!["man".to_string(), "woman".to_string()];
        let a = m.cloze_probs("A [MASK] tortures a woman", &c);
        let b = m.cloze_probs("A [MASK] tortures a man", &c);
        assert_eq!(a["man"], b["woman"]);
        assert_eq!(a["woman"], b["man"]);
        assert!(a.values().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn policies_round_trip_through_json() {
        let m = MockBackend {
            nli: NliPolicy::Table {
                rules: vec![NliRule {
                    premise: "p".into(),
                    hypothesis: "h".into(),
                    label: Label::Contradiction,
                }],
                default: Label::Entailment,
            },
            cloze: ClozePolicy::Constant {
                probs: BTreeMap::from([("man".into(), 0.5)]),
            },
        };
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MockBackend>(&json).unwrap(), m);
        assert_eq!(m.nli_label("p", "h"), Label::Contradiction);
        assert_eq!(m.nli_label("p", "x"), Label::Entailment);
        let parsed: MockBackend = serde_json::from_str(r#"{"nli":{"policy":"fv_only"}}"#).unwrap();
        assert_eq!(parsed.cloze, ClozePolicy::Symmetric);
    }

    #[test]
    fn stdio_server_answers_each_line() {
        let input = "{\"id\":\"a\",\"task\":\"nli\",\"premise\":\"he\",\"hypothesis\":\"A man x a woman\"}\nnot json\n";
        let mut out = Vec::new();
        serve_stdio(&MockBackend::default(), input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"id":"a","label":"entailment"}"#);
        assert!(lines[1].contains("\"error\""));
    }
}
