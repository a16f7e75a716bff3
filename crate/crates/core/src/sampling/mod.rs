//! Counterfactual inconsistency detection, balanced annotation batches, the
//! two-annotator label store, agreement, and training-set export.

mod kappa;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{BackendClient, Label, Verdict};
use crate::entail::{HypothesisPair, SubCorpus};
use crate::error::{Error, Result};
use crate::roletag::SentenceRef;

pub use kappa::{cohen_kappa_labels, Kappa};
pub use store::{
    read_jsonl, write_jsonl, AdjudicationRecord, AnnotationItem, AnnotationRecord, AnnotationStore,
    Clock, Disagreement, ExportRecord, ItemSide, IterationPolicy, ADJUDICATIONS_FILE, LABELS_FILE,
    POOL_FILE,
};

pub const DEFAULT_BATCH: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InconsistencyKind {
    /// The original pair is entailed, the flipped pair is not.
    EntailDrop,
    /// The flipped pair is entailed, the original pair is not.
    EntailGain,
    /// Exactly one of the two pairs is a contradiction, and neither is
    /// entailed.
    ContradictionMismatch,
}

/// Verdicts for a premise and its flip against both hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadVerdicts {
    pub premise_fv: Verdict,
    pub premise_mv: Verdict,
    pub flipped_fv: Verdict,
    pub flipped_mv: Verdict,
}

/// A premise/hypothesis pair whose verdict does not carry over to the
/// flipped premise and the flipped hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistentPair {
    pub pair_id: String,
    pub verb: String,
    pub source: SentenceRef,
    pub premise: String,
    pub flipped_premise: String,
    pub hypothesis: String,
    pub flipped_hypothesis: String,
    pub verdicts: QuadVerdicts,
    pub kind: InconsistencyKind,
}

pub fn pair_id(verb: &str, premise: &str, hypothesis: &str) -> String {
    let mut h = Sha256::new();
    for part in [verb, premise, hypothesis] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..6])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Also report contradiction mismatches.
    #[serde(default)]
    pub contradiction_mismatch: bool,
}

fn classify(original: Label, flipped: Label, options: DetectOptions) -> Option<InconsistencyKind> {
    use Label::*;
    match (original, flipped) {
        (Entailment, Entailment) => None,
        (Entailment, _) => Some(InconsistencyKind::EntailDrop),
        (_, Entailment) => Some(InconsistencyKind::EntailGain),
        (Contradiction, Neutral) | (Neutral, Contradiction) if options.contradiction_mismatch => {
            Some(InconsistencyKind::ContradictionMismatch)
        }
        _ => None,
    }
}

/// Queries `(P, H_FV)`, `(P, H_MV)`, `(P_flip, H_FV)` and `(P_flip, H_MV)`
/// for every premise and reports each pair `(P, H)` whose verdict differs
/// from that of `(P_flip, H_flip)`. `flipped[i]` must be the flip of
/// `corpora[i]`. Repeated premise texts yield one pair, at the first
/// occurrence.
pub fn detect_inconsistencies(
    client: &BackendClient,
    corpora: &[SubCorpus],
    flipped: &[SubCorpus],
    options: DetectOptions,
) -> Result<Vec<InconsistentPair>> {
    if corpora.len() != flipped.len() {
        return Err(Error::InvalidArgument(
            "sub-corpora and flipped sub-corpora differ in number".into(),
        ));
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (orig, flip) in corpora.iter().zip(flipped) {
        if orig.len() != flip.len() {
            return Err(Error::InvalidArgument(format!(
                "flipped sub-corpus for `{}` has {} premises, expected {}",
                orig.verb,
                flip.len(),
                orig.len()
            )));
        }
        if orig.is_empty() {
            continue;
        }
        let hyp = HypothesisPair::new(&orig.verb);
        let mut queries = Vec::with_capacity(4 * orig.len());
        for (p, f) in orig.premises.iter().zip(&flip.premises) {
            for (premise, h) in [
                (&p.text, &hyp.fv),
                (&p.text, &hyp.mv),
                (&f.text, &hyp.fv),
                (&f.text, &hyp.mv),
            ] {
                queries.push((premise.clone(), h.clone()));
            }
        }
        let verdicts = client.nli(&queries)?;
        for (i, (p, f)) in orig.premises.iter().zip(&flip.premises).enumerate() {
            let v = &verdicts[4 * i..4 * i + 4];
            let quad = QuadVerdicts {
                premise_fv: v[0].clone(),
                premise_mv: v[1].clone(),
                flipped_fv: v[2].clone(),
                flipped_mv: v[3].clone(),
            };
            let checks = [
                (&hyp.fv, &hyp.mv, v[0].label, v[3].label),
                (&hyp.mv, &hyp.fv, v[1].label, v[2].label),
            ];
            for (h, hf, original, flipped) in checks {
                if let Some(kind) = classify(original, flipped, options) {
                    let id = pair_id(&orig.verb, &p.text, h);
                    if !seen.insert(id.clone()) {
                        continue;
                    }
                    out.push(InconsistentPair {
                        pair_id: id,
                        verb: orig.verb.clone(),
                        source: p.source.clone(),
                        premise: p.text.clone(),
                        flipped_premise: f.text.clone(),
                        hypothesis: h.clone(),
                        flipped_hypothesis: hf.clone(),
                        verdicts: quad.clone(),
                        kind,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Per-verb allocation for `size` items: an equal share with the remainder
/// handed out in verb order, then any shortfall from small pools handed
/// out one at a time, in verb order, to verbs that still have items.
pub fn allocate(available: &[usize], size: usize) -> Vec<usize> {
    let k = available.len();
    if k == 0 {
        return Vec::new();
    }
    let mut alloc: Vec<usize> = (0..k)
        .map(|i| (size / k + usize::from(i < size % k)).min(available[i]))
        .collect();
    let mut left = size - alloc.iter().sum::<usize>();
    while left > 0 {
        let mut progressed = false;
        for i in 0..k {
            if left > 0 && alloc[i] < available[i] {
                alloc[i] += 1;
                left -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// Draws a batch with equal weight per verb. Items of each verb are drawn
/// uniformly without replacement; the batch lists verbs in `verbs` order
/// and keeps pool order within a verb. Pool items for verbs outside
/// `verbs` are ignored.
pub fn sample_batch(
    pool: &[InconsistentPair],
    size: usize,
    verbs: &[String],
    seed: u64,
) -> Result<Vec<InconsistentPair>> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    let mut by_verb: BTreeMap<&str, Vec<&InconsistentPair>> = BTreeMap::new();
    for p in pool {
        by_verb.entry(p.verb.as_str()).or_default().push(p);
    }
    let mut order: Vec<&str> = Vec::new();
    for v in verbs {
        if !order.contains(&v.as_str()) {
            order.push(v);
        }
    }
    let groups: Vec<Vec<&InconsistentPair>> = order
        .iter()
        .map(|v| by_verb.remove(v).unwrap_or_default())
        .collect();
    if groups.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus(
            "no inconsistent pairs to sample from".into(),
        ));
    }
    let alloc = allocate(&groups.iter().map(Vec::len).collect::<Vec<_>>(), size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = Vec::with_capacity(size);
    for (group, take) in groups.iter().zip(alloc) {
        let mut picked = rand::seq::index::sample(&mut rng, group.len(), take).into_vec();
        picked.sort_unstable();
        batch.extend(picked.into_iter().map(|i| group[i].clone()));
    }
    Ok(batch)
}
