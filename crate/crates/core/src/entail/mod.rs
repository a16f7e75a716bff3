//! Entailment ratios and gaps over per-verb sub-corpora, counterfactual
//! gender flipping, and the NLI bias score of a backend.

mod flip;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{BackendClient, Label};
use crate::error::{Error, Result};
use crate::ingest::Document;
use crate::roletag::{ParsedSentence, SentenceRef};
use crate::text::word_tokens;
use crate::verbs::{third_person_singular, verb_lemma};

pub use flip::{flip_gender, AmbiguousRule, FlipLexicon};

/// The two hypotheses for a verb: `H_FV` has a male agent and female
/// victim, `H_MV` the reverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub verb: String,
    pub fv: String,
    pub mv: String,
}

impl HypothesisPair {
    pub fn new(verb: &str) -> Self {
        let lemma = verb_lemma(verb);
        let v = third_person_singular(&lemma);
        HypothesisPair {
            fv: format!("A man {v} a woman"),
            mv: format!("A woman {v} a man"),
            verb: lemma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Premise {
    pub text: String,
    pub source: SentenceRef,
    #[serde(skip)]
    pub parse: Option<ParsedSentence>,
}

/// Sentences mentioning a spouse and using `verb` as a verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCorpus {
    pub verb: String,
    pub premises: Vec<Premise>,
}

impl SubCorpus {
    pub fn len(&self) -> usize {
        self.premises.len()
    }

    pub fn is_empty(&self) -> bool {
        self.premises.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.premises.iter().map(|p| p.text.clone()).collect()
    }
}

fn mentions_spouse(text: &str) -> bool {
    word_tokens(text).iter().any(|w| {
        let w = w.trim_end_matches("'s").trim_end_matches("’s");
        matches!(w, "husband" | "husbands" | "wife" | "wives")
    })
}

fn uses_verb(parse: &ParsedSentence, lemma: &str) -> bool {
    parse.tokens.iter().any(|t| {
        t.upos == "VERB" && {
            let l = if t.lemma.is_empty() || t.lemma == "_" {
                &t.form
            } else {
                &t.lemma
            };
            verb_lemma(l) == lemma
        }
    })
}

/// Collects, in corpus order, the sentences that mention `husband` or
/// `wife` and whose parse has a `VERB` token with the lemma of `verb`.
/// Sentences without a parse are skipped.
pub fn build_subcorpus(docs: &[Document], parses: &[ParsedSentence], verb: &str) -> SubCorpus {
    let lemma = verb_lemma(verb);
    let index: HashMap<&SentenceRef, &ParsedSentence> = parses
        .iter()
        .filter_map(|p| p.source.as_ref().map(|s| (s, p)))
        .collect();
    let mut premises = Vec::new();
    let mut unparsed = 0usize;
    for doc in docs {
        for (sent_idx, text) in doc.sentences.iter().enumerate() {
            if !mentions_spouse(text) {
                continue;
            }
            let source = SentenceRef {
                doc_id: doc.id.clone(),
                sent_idx,
            };
            match index.get(&source) {
                Some(parse) if uses_verb(parse, &lemma) => premises.push(Premise {
                    text: text.clone(),
                    source,
                    parse: Some((*parse).clone()),
                }),
                Some(_) => {}
                None => unparsed += 1,
            }
        }
    }
    if unparsed > 0 {
        log::debug!("{unparsed} spouse sentences without a parse skipped for `{lemma}`");
    }
    SubCorpus {
        verb: lemma,
        premises,
    }
}

/// Fraction of `premises` the backend labels as entailing `hypothesis`.
pub fn entailment_ratio(
    client: &BackendClient,
    premises: &[String],
    hypothesis: &str,
) -> Result<f64> {
    if premises.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no premises for `{hypothesis}`"
        )));
    }
    let pairs: Vec<(String, String)> = premises
        .iter()
        .map(|p| (p.clone(), hypothesis.to_string()))
        .collect();
    let verdicts = client.nli(&pairs)?;
    let hits = verdicts
        .iter()
        .filter(|v| v.label == Label::Entailment)
        .count();
    Ok(hits as f64 / premises.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub verb: String,
    pub ent_fv: f64,
    pub ent_mv: f64,
    pub gap: f64,
    pub n_premises: usize,
}

/// `ent(D, H_FV) − ent(D, H_MV)`; positive when the man is more often
/// described as the perpetrator.
pub fn entailment_gap(client: &BackendClient, corpus: &SubCorpus) -> Result<GapReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "sub-corpus for `{}` is empty",
            corpus.verb
        )));
    }
    let hyp = HypothesisPair::new(&corpus.verb);
    let n = corpus.len();
    let mut pairs = Vec::with_capacity(2 * n);
    for h in [&hyp.fv, &hyp.mv] {
        pairs.extend(corpus.premises.iter().map(|p| (p.text.clone(), h.clone())));
    }
    let verdicts = client.nli(&pairs)?;
    let count =
        |vs: &[crate::backend::Verdict]| vs.iter().filter(|v| v.label == Label::Entailment).count();
    let ent_fv = count(&verdicts[..n]) as f64 / n as f64;
    let ent_mv = count(&verdicts[n..]) as f64 / n as f64;
    Ok(GapReport {
        verb: hyp.verb,
        ent_fv,
        ent_mv,
        gap: ent_fv - ent_mv,
        n_premises: n,
    })
}

/// Applies [`flip_gender`] to every premise, using its parse when present.
pub fn flip_subcorpus(corpus: &SubCorpus, lex: &FlipLexicon) -> SubCorpus {
    SubCorpus {
        verb: corpus.verb.clone(),
        premises: corpus
            .premises
            .iter()
            .map(|p| Premise {
                text: flip_gender(&p.text, lex, p.parse.as_ref()),
                source: p.source.clone(),
                parse: None,
            })
            .collect(),
    }
}

#[derive(Debug, Serialize)]
struct FlippedLine<'a> {
    doc_id: &'a str,
    sent_idx: usize,
    premise: &'a str,
    flipped: &'a str,
}

/// Flips each sub-corpus and writes `<dir>/<verb>.jsonl`, one line per
/// premise with the original and flipped text.
pub fn materialize_flipped(
    dir: &Path,
    corpora: &[SubCorpus],
    lex: &FlipLexicon,
) -> Result<Vec<SubCorpus>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::with_capacity(corpora.len());
    for corpus in corpora {
        let flipped = flip_subcorpus(corpus, lex);
        let mut body = String::new();
        for (p, f) in corpus.premises.iter().zip(&flipped.premises) {
            let line = FlippedLine {
                doc_id: &p.source.doc_id,
                sent_idx: p.source.sent_idx,
                premise: &p.text,
                flipped: &f.text,
            };
            body.push_str(&serde_json::to_string(&line)?);
            body.push('\n');
        }
        let path = dir.join(format!("{}.jsonl", corpus.verb));
        fs::write(&path, body).map_err(|e| Error::io(path, e))?;
        out.push(flipped);
    }
    Ok(out)
}

/// Reads a file written by [`materialize_flipped`].
pub fn read_flipped(path: &Path, verb: &str) -> Result<SubCorpus> {
    #[derive(Deserialize)]
    struct Line {
        doc_id: String,
        sent_idx: usize,
        flipped: String,
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut premises = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let l: Line = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            location: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        premises.push(Premise {
            text: l.flipped,
            source: SentenceRef {
                doc_id: l.doc_id,
                sent_idx: l.sent_idx,
            },
            parse: None,
        });
    }
    Ok(SubCorpus {
        verb: verb.to_string(),
        premises,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbBias {
    pub verb: String,
    pub original: GapReport,
    pub flipped: GapReport,
    /// `|gap(D_v) + gap(D_v flipped)|`
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliBiasReport {
    pub backend: String,
    pub bias: f64,
    pub effective_verbs: usize,
    pub verbs: Vec<VerbBias>,
    pub excluded: Vec<String>,
}

/// Mean over verbs of `|gap(D_v) + gap(flip(D_v))|`. `flipped[i]` must be
/// the flip of `originals[i]`. Verbs with an empty sub-corpus are excluded
/// and listed in the report; if every verb is excluded the result is an
/// error.
pub fn nli_bias_with(
    client: &BackendClient,
    originals: &[SubCorpus],
    flipped: &[SubCorpus],
) -> Result<NliBiasReport> {
    if originals.len() != flipped.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sub-corpora but {} flipped sub-corpora",
            originals.len(),
            flipped.len()
        )));
    }
    let mut verbs = Vec::new();
    let mut excluded = Vec::new();
    for (orig, flip) in originals.iter().zip(flipped) {
        if orig.is_empty() || flip.is_empty() {
            log::warn!(
                "no premises for `{}`, excluded from the bias score",
                orig.verb
            );
            excluded.push(orig.verb.clone());
            continue;
        }
        let original = entailment_gap(client, orig)?;
        let flipped = entailment_gap(client, flip)?;
        verbs.push(VerbBias {
            verb: orig.verb.clone(),
            term: (original.gap + flipped.gap).abs(),
            original,
            flipped,
        });
    }
    if verbs.is_empty() {
        return Err(Error::EmptyCorpus(
            "every verb has an empty sub-corpus".into(),
        ));
    }
    let bias = verbs.iter().map(|v| v.term).sum::<f64>() / verbs.len() as f64;
    Ok(NliBiasReport {
        backend: client.describe(),
        bias,
        effective_verbs: verbs.len(),
        verbs,
        excluded,
    })
}

/// [`nli_bias_with`] on sub-corpora flipped in memory.
pub fn nli_bias(
    client: &BackendClient,
    originals: &[SubCorpus],
    lex: &FlipLexicon,
) -> Result<NliBiasReport> {
    let flipped: Vec<SubCorpus> = originals.iter().map(|c| flip_subcorpus(c, lex)).collect();
    nli_bias_with(client, originals, &flipped)
}

/// Sub-corpora for each verb in `verbs`, in the given order with duplicates
/// removed.
pub fn build_subcorpora(
    docs: &[Document],
    parses: &[ParsedSentence],
    verbs: &[String],
) -> Vec<SubCorpus> {
    let mut seen = BTreeSet::new();
    verbs
        .iter()
        .map(|v| verb_lemma(v))
        .filter(|v| seen.insert(v.clone()))
        .map(|v| build_subcorpus(docs, parses, &v))
        .collect()
}

/// `verb,ent_FV,ent_MV,gap,n` for each gap.
pub fn gaps_csv(gaps: &[GapReport]) -> String {
    let mut out = String::from("verb,ent_FV,ent_MV,gap,n\n");
    for g in gaps {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            g.verb, g.ent_fv, g.ent_mv, g.gap, g.n_premises
        );
    }
    out
}

/// Writes `gaps.csv`, `nli_bias.json` and returns their paths.
pub fn write_bias_outputs(dir: &Path, report: &NliBiasReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gaps: Vec<GapReport> = report.verbs.iter().map(|v| v.original.clone()).collect();
    let csv = dir.join("gaps.csv");
    fs::write(&csv, gaps_csv(&gaps)).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join("nli_bias.json");
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n")
        .map_err(|e| Error::io(&json, e))?;
    Ok(vec![csv, json])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;

    fn corpus(texts: &[&str]) -> SubCorpus {
        SubCorpus {
            verb: "torture".into(),
            premises: texts
                .iter()
                .enumerate()
                .map(|(i, t)| Premise {
                    text: t.to_string(),
                    source: SentenceRef {
                        doc_id: "d".into(),
                        sent_idx: i,
                    },
                    parse: None,
                })
                .collect(),
        }
    }

    #[test]
    fn hypotheses_use_third_person() {
        let h = HypothesisPair::new("tortured");
        assert_eq!(h.verb, "torture");
        assert_eq!(h.fv, "A man tortures a woman");
        assert_eq!(h.mv, "A woman tortures a man");
    }

    #[test]
    fn ratios_of_constant_mocks() {
        let p = corpus(&["The husband beat her.", "The wife left."]).texts();
        let all = BackendClient::mock(MockBackend::named("entail-all").unwrap());
        let none = BackendClient::mock(MockBackend::named("entail-none").unwrap());
        assert_eq!(
            entailment_ratio(&all, &p, "A man beats a woman").unwrap(),
            1.0
        );
        assert_eq!(
            entailment_ratio(&none, &p, "A man beats a woman").unwrap(),
            0.0
        );
        assert!(matches!(
            entailment_ratio(&all, &[], "h"),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn gap_extremes() {
        let c = corpus(&[
            "The husband tortured her.",
            "The wife tortured him.",
            "They argued, said the wife.",
        ]);
        let fv = BackendClient::mock(MockBackend::named("fv-only").unwrap());
        let g = entailment_gap(&fv, &c).unwrap();
        assert_eq!(
            (g.ent_fv, g.ent_mv, g.gap, g.n_premises),
            (1.0, 0.0, 1.0, 3)
        );
        let all = BackendClient::mock(MockBackend::named("entail-all").unwrap());
        assert_eq!(entailment_gap(&all, &c).unwrap().gap, 0.0);
    }

    #[test]
    fn empty_verbs_are_excluded() {
        let client = BackendClient::mock(MockBackend::named("fv-only").unwrap());
        let lex = FlipLexicon::bundled();
        let mut empty = corpus(&[]);
        empty.verb = "burn".into();
        let report = nli_bias(
            &client,
            &[corpus(&["The husband tortured her."]), empty],
            &lex,
        )
        .unwrap();
        assert_eq!(report.excluded, vec!["burn".to_string()]);
        assert_eq!(report.effective_verbs, 1);
        assert_eq!(report.bias, 2.0);
        assert!(nli_bias(&client, &[corpus(&[])], &lex).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = GapReport {
            verb: "beat".into(),
            ent_fv: 0.5,
            ent_mv: 0.25,
            gap: 0.25,
            n_premises: 4,
        };
        assert_eq!(
            gaps_csv(&[g]),
            "verb,ent_FV,ent_MV,gap,n\nbeat,0.5,0.25,0.25,4\n"
        );
    }
}
