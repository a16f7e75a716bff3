use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{train_skipgram, EmbeddingConfig, EmbeddingModel};
use crate::verbs::verb_lemma;

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn mean_cosine<'a>(
    w: &[f64],
    set: impl IntoIterator<Item = &'a String>,
    model: &EmbeddingModel,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in set {
        sum += cosine(w, model.vector(t)?)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidArgument("attribute set is empty".into()));
    }
    Ok(sum / n as f64)
}

/// Mean cosine of `w` to `a` minus mean cosine of `w` to `b`.
pub fn sigma(
    w: &str,
    a: &BTreeSet<String>,
    b: &BTreeSet<String>,
    model: &EmbeddingModel,
) -> Result<f64> {
    let v = model.vector(w)?;
    Ok(mean_cosine(v, a, model)? - mean_cosine(v, b, model)?)
}

/// Target sets `x`, `y` (possibly empty) and attribute sets `a`, `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatSpec {
    #[serde(rename = "X")]
    pub x: BTreeSet<String>,
    #[serde(rename = "Y", default)]
    pub y: BTreeSet<String>,
    #[serde(rename = "A")]
    pub a: BTreeSet<String>,
    #[serde(rename = "B")]
    pub b: BTreeSet<String>,
}

fn to_set<S: Into<String>>(items: impl IntoIterator<Item = S>) -> BTreeSet<String> {
    items.into_iter().map(Into::into).collect()
}

impl WeatSpec {
    pub fn new<S: Into<String>>(
        x: impl IntoIterator<Item = S>,
        y: impl IntoIterator<Item = S>,
        a: impl IntoIterator<Item = S>,
        b: impl IntoIterator<Item = S>,
    ) -> Self {
        WeatSpec {
            x: to_set(x),
            y: to_set(y),
            a: to_set(a),
            b: to_set(b),
        }
    }

    /// Non-empty `x`, `a`, `b`; `a` and `b` disjoint.
    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::InvalidArgument("target set X is empty".into()));
        }
        if self.a.is_empty() || self.b.is_empty() {
            return Err(Error::InvalidArgument(
                "attribute sets must be non-empty".into(),
            ));
        }
        if let Some(t) = self.a.intersection(&self.b).next() {
            return Err(Error::InvalidArgument(format!("`{t}` is in both A and B")));
        }
        Ok(())
    }

    /// Every token of the spec absent from `model`.
    pub fn missing(&self, model: &EmbeddingModel) -> Vec<String> {
        [&self.x, &self.y, &self.a, &self.b]
            .into_iter()
            .flatten()
            .filter(|t| !model.contains(t))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn swapped_attributes(&self) -> Self {
        WeatSpec {
            x: self.x.clone(),
            y: self.y.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    pub score: f64,
    pub per_word_sigma: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
fn pstdev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `(mean_X σ − mean_Y σ) / stddev_{X∪Y} σ`. With `Y` empty the `Y` mean is
/// dropped and the deviation is taken over `X` alone.
pub fn weat(spec: &WeatSpec, model: &EmbeddingModel) -> Result<WeatResult> {
    if spec.x.is_empty() {
        return Err(Error::InvalidArgument("target set X is empty".into()));
    }
    let mut per_word_sigma = BTreeMap::new();
    let mut sx = Vec::with_capacity(spec.x.len());
    for w in &spec.x {
        let s = sigma(w, &spec.a, &spec.b, model)?;
        per_word_sigma.insert(w.clone(), s);
        sx.push(s);
    }
    let mut sy = Vec::with_capacity(spec.y.len());
    for w in &spec.y {
        let s = sigma(w, &spec.a, &spec.b, model)?;
        per_word_sigma.insert(w.clone(), s);
        sy.push(s);
    }
    let all: Vec<f64> = sx.iter().chain(&sy).copied().collect();
    let sd = pstdev(&all);
    let max_abs = all.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if sd == 0.0 || sd <= 1e-12 * max_abs {
        return Err(Error::DegenerateSpread);
    }
    let numerator = if sy.is_empty() {
        mean(&sx)
    } else {
        mean(&sx) - mean(&sy)
    };
    Ok(WeatResult {
        score: numerator / sd,
        per_word_sigma,
        runs: None,
        mean: None,
        stddev: None,
    })
}

/// Surface forms of the verb `lemmas` that reach `min_count` in `corpus`,
/// so that a lemma target set can be scored on an unlemmatized corpus.
/// Fails naming the lemmas with no qualifying form.
pub fn inflected_targets(
    corpus: &[Vec<String>],
    lemmas: &[String],
    min_count: usize,
) -> Result<BTreeSet<String>> {
    let wanted: BTreeSet<String> = lemmas.iter().map(|l| l.to_lowercase()).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in corpus {
        for t in s {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut found = BTreeSet::new();
    let mut covered = BTreeSet::new();
    for (token, count) in counts {
        if count < min_count {
            continue;
        }
        let lemma = verb_lemma(token);
        if wanted.contains(&lemma) {
            found.insert(token.to_string());
            covered.insert(lemma);
        }
    }
    let missing: Vec<String> = wanted.difference(&covered).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::OutOfVocabulary(missing.join(", ")));
    }
    Ok(found)
}

/// Trains `runs` models with seeds `config.seed + i` and aggregates their
/// scores. `per_word_sigma` is averaged across runs.
pub fn weat_repeated(
    corpus: &[Vec<String>],
    config: &EmbeddingConfig,
    spec: &WeatSpec,
    runs: usize,
) -> Result<WeatResult> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let results: Vec<WeatResult> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let cfg = EmbeddingConfig {
                seed: config.seed.wrapping_add(i as u64),
                ..config.clone()
            };
            let model = train_skipgram(corpus, &cfg)?;
            weat(spec, &model)
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = results.iter().map(|r| r.score).collect();
    let mut per_word_sigma = BTreeMap::new();
    for w in results[0].per_word_sigma.keys() {
        let values: Vec<f64> = results.iter().map(|r| r.per_word_sigma[w]).collect();
        per_word_sigma.insert(w.clone(), mean(&values));
    }
    let m = mean(&scores);
    Ok(WeatResult {
        score: m,
        per_word_sigma,
        mean: Some(m),
        stddev: Some(pstdev(&scores)),
        runs: Some(scores),
    })
}
