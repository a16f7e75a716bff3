//! Perpetrator/victim tagging of unpleasant-verb arguments and the sentinel
//! corpus built from it.

mod conllu;
mod roles;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use conllu::{parse_conllu, write_conllu, ConlluToken, ParsedSentence, SentenceRef};
pub use roles::{
    apply_sentinels, classify_roles, word_gender, RoleArgument, RoleAssignment, RoleSlot,
    Sentinels, Voice,
};

use crate::error::{Error, Result};
use crate::ingest::Document;
use crate::text::word_tokens;

/// Per-verb counts of each sentinel written.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub by_verb: BTreeMap<String, BTreeMap<RoleSlot, usize>>,
}

impl RoleCounts {
    pub fn add(&mut self, verb: &str, slot: RoleSlot) {
        *self
            .by_verb
            .entry(verb.to_string())
            .or_default()
            .entry(slot)
            .or_insert(0) += 1;
    }

    pub fn total(&self, slot: RoleSlot) -> usize {
        self.by_verb.values().filter_map(|m| m.get(&slot)).sum()
    }

    /// `verb,slot,sentinel,count` rows, one per verb and slot, then the totals
    /// under verb `all`.
    pub fn to_csv(&self, sentinels: &Sentinels) -> String {
        let mut out = String::from("verb,slot,sentinel,count\n");
        for (verb, slots) in &self.by_verb {
            for slot in RoleSlot::ALL {
                let n = slots.get(&slot).copied().unwrap_or(0);
                let _ = writeln!(out, "{verb},{slot},{},{n}", sentinels.get(slot));
            }
        }
        for slot in RoleSlot::ALL {
            let _ = writeln!(
                out,
                "all,{slot},{},{}",
                sentinels.get(slot),
                self.total(slot)
            );
        }
        out
    }
}

/// The rewritten corpus together with its untouched baseline.
///
/// Both are one sentence per entry, tokens joined by single spaces in parse
/// order, so a sentence without tagged arguments is identical in the two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentinelCorpus {
    pub sentences: Vec<String>,
    pub baseline: Vec<String>,
    pub sentinels: Sentinels,
    pub counts: RoleCounts,
}

/// Rewrites one parsed sentence, returning the tokens and assignments.
pub fn rewrite_sentence(
    sent: &ParsedSentence,
    verbs: &BTreeSet<String>,
    sentinels: &Sentinels,
) -> Result<(Vec<String>, Vec<RoleAssignment>)> {
    let assignments = classify_roles(sent, verbs);
    let tokens = apply_sentinels(sent, &assignments, sentinels)?;
    Ok((tokens, assignments))
}

/// Fails if any sentinel already occurs as a word of the documents or as a
/// form or lemma of the parses.
pub fn check_sentinel_collisions(
    docs: &[Document],
    parses: &[ParsedSentence],
    sentinels: &Sentinels,
) -> Result<()> {
    let reserved: BTreeSet<&str> = sentinels.all().iter().map(|(_, w)| *w).collect();
    let hit = |w: &str| {
        reserved
            .get(w.to_lowercase().as_str())
            .map(|s| s.to_string())
    };
    for doc in docs {
        for s in &doc.sentences {
            if let Some(w) = word_tokens(s).iter().find_map(|t| hit(t)) {
                return Err(Error::SentinelCollision(w));
            }
        }
    }
    for p in parses {
        for t in &p.tokens {
            if let Some(w) = hit(&t.form).or_else(|| hit(&t.lemma)) {
                return Err(Error::SentinelCollision(w));
            }
        }
    }
    Ok(())
}

/// Builds the sentinel corpus for `docs`, in document and sentence order.
///
/// Every document sentence must have a parse carrying its provenance. The
/// collision scan over the whole input runs before anything is rewritten.
pub fn build_replaced_corpus(
    docs: &[Document],
    parses: &[ParsedSentence],
    verbs: &BTreeSet<String>,
    sentinels: &Sentinels,
) -> Result<SentinelCorpus> {
    sentinels.validate()?;
    check_sentinel_collisions(docs, parses, sentinels)?;
    let mut index: HashMap<&SentenceRef, &ParsedSentence> = HashMap::new();
    let mut unsourced = 0usize;
    for p in parses {
        match &p.source {
            Some(src) => {
                index.insert(src, p);
            }
            None => unsourced += 1,
        }
    }
    if unsourced > 0 {
        log::warn!("{unsourced} parsed sentences have no doc_id/sent_idx and are ignored");
    }

    let mut corpus = SentinelCorpus {
        sentences: Vec::new(),
        baseline: Vec::new(),
        sentinels: sentinels.clone(),
        counts: RoleCounts::default(),
    };
    for doc in docs {
        for sent_idx in 0..doc.sentences.len() {
            let key = SentenceRef {
                doc_id: doc.id.clone(),
                sent_idx,
            };
            let parse = index.get(&key).ok_or_else(|| Error::MissingParse {
                doc_id: doc.id.clone(),
                sent_idx,
            })?;
            let (tokens, assignments) = rewrite_sentence(parse, verbs, sentinels)?;
            for a in &assignments {
                for (_, slot) in a.slots() {
                    corpus.counts.add(&a.verb_lemma, slot);
                }
            }
            corpus.sentences.push(tokens.join(" "));
            corpus
                .baseline
                .push(parse.forms().collect::<Vec<_>>().join(" "));
        }
    }
    Ok(corpus)
}
