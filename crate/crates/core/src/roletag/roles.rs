use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Gender;

use super::conllu::ParsedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

/// An argument of a target verb: its token index (0-based) and gender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleArgument {
    pub token: usize,
    pub gender: Gender,
}

/// Perpetrator (`agent`) and victim (`theme`) of one unpleasant-verb occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub verb_lemma: String,
    pub verb_token: usize,
    pub agent: Option<RoleArgument>,
    pub theme: Option<RoleArgument>,
    pub voice: Voice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleSlot {
    MalePerpetrator,
    FemalePerpetrator,
    MaleVictim,
    FemaleVictim,
}

impl RoleSlot {
    pub const ALL: [RoleSlot; 4] = [
        RoleSlot::MalePerpetrator,
        RoleSlot::FemalePerpetrator,
        RoleSlot::MaleVictim,
        RoleSlot::FemaleVictim,
    ];

    pub fn perpetrator(gender: Gender) -> Self {
        match gender {
            Gender::Male => RoleSlot::MalePerpetrator,
            Gender::Female => RoleSlot::FemalePerpetrator,
        }
    }

    pub fn victim(gender: Gender) -> Self {
        match gender {
            Gender::Male => RoleSlot::MaleVictim,
            Gender::Female => RoleSlot::FemaleVictim,
        }
    }

    /// Same role, other gender.
    pub fn swapped(self) -> Self {
        match self {
            RoleSlot::MalePerpetrator => RoleSlot::FemalePerpetrator,
            RoleSlot::FemalePerpetrator => RoleSlot::MalePerpetrator,
            RoleSlot::MaleVictim => RoleSlot::FemaleVictim,
            RoleSlot::FemaleVictim => RoleSlot::MaleVictim,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            RoleSlot::MalePerpetrator => "MP",
            RoleSlot::FemalePerpetrator => "FP",
            RoleSlot::MaleVictim => "MV",
            RoleSlot::FemaleVictim => "FV",
        }
    }
}

impl fmt::Display for RoleSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl RoleAssignment {
    /// `(token, slot)` for every argument present.
    pub fn slots(&self) -> Vec<(usize, RoleSlot)> {
        let mut out = Vec::with_capacity(2);
        if let Some(a) = self.agent {
            out.push((a.token, RoleSlot::perpetrator(a.gender)));
        }
        if let Some(t) = self.theme {
            out.push((t.token, RoleSlot::victim(t.gender)));
        }
        out
    }
}

/// The four reserved replacement words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sentinels {
    pub male_perpetrator: String,
    pub female_perpetrator: String,
    pub male_victim: String,
    pub female_victim: String,
}

impl Default for Sentinels {
    fn default() -> Self {
        Sentinels {
            male_perpetrator: "zmaleperpz".into(),
            female_perpetrator: "zfemaleperpz".into(),
            male_victim: "zmalevictz".into(),
            female_victim: "zfemalevictz".into(),
        }
    }
}

impl Sentinels {
    pub fn get(&self, slot: RoleSlot) -> &str {
        match slot {
            RoleSlot::MalePerpetrator => &self.male_perpetrator,
            RoleSlot::FemalePerpetrator => &self.female_perpetrator,
            RoleSlot::MaleVictim => &self.male_victim,
            RoleSlot::FemaleVictim => &self.female_victim,
        }
    }

    pub fn all(&self) -> [(RoleSlot, &str); 4] {
        RoleSlot::ALL.map(|s| (s, self.get(s)))
    }

    /// Sentinels must be distinct, non-empty single lowercase words.
    pub fn validate(&self) -> Result<()> {
        let words: BTreeSet<&str> = self.all().iter().map(|(_, w)| *w).collect();
        if words.len() != 4 {
            return Err(Error::InvalidArgument(
                "sentinel words must be distinct".into(),
            ));
        }
        for w in words {
            if w.is_empty() || w.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
                return Err(Error::InvalidArgument(format!(
                    "sentinel `{w}` must be a non-empty lowercase word"
                )));
            }
        }
        Ok(())
    }
}

/// Gender of a spouse noun or personal pronoun; other words have none.
pub fn word_gender(word: &str) -> Option<Gender> {
    match word.to_lowercase().as_str() {
        "husband" | "husbands" | "he" | "him" | "his" | "himself" => Some(Gender::Male),
        "wife" | "wives" | "she" | "her" | "hers" | "herself" => Some(Gender::Female),
        _ => None,
    }
}

fn token_gender(sent: &ParsedSentence, index: usize) -> Option<Gender> {
    let t = &sent.tokens[index];
    word_gender(&t.lemma).or_else(|| word_gender(&t.form))
}

fn base_rel(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

fn is_active_subject(deprel: &str) -> bool {
    deprel == "nsubj"
}

fn is_passive_subject(deprel: &str) -> bool {
    matches!(deprel, "nsubj:pass" | "nsubjpass")
}

fn is_object(deprel: &str) -> bool {
    matches!(deprel, "obj" | "dobj")
}

fn is_passive_aux(deprel: &str) -> bool {
    matches!(deprel, "aux:pass" | "auxpass")
}

fn is_agent_oblique(sent: &ParsedSentence, index: usize) -> bool {
    let rel = sent.tokens[index].deprel.as_str();
    if matches!(rel, "obl:agent" | "nmod:agent" | "agent") {
        return true;
    }
    matches!(base_rel(rel), "obl" | "nmod")
        && sent.children(index).any(|c| {
            let t = &sent.tokens[c];
            t.deprel == "case" && t.lemma.eq_ignore_ascii_case("by")
        })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SubjectKind {
    Active,
    Passive,
}

/// The subject of `verb`, looking through `conj` and `xcomp` heads when the
/// verb has none of its own.
fn subject_of(sent: &ParsedSentence, verb: usize, depth: usize) -> Option<(usize, SubjectKind)> {
    for c in sent.children(verb) {
        let rel = sent.tokens[c].deprel.as_str();
        if is_active_subject(rel) {
            return Some((c, SubjectKind::Active));
        }
        if is_passive_subject(rel) {
            return Some((c, SubjectKind::Passive));
        }
    }
    if depth == 0 {
        return None;
    }
    let head = sent.parent(verb)?;
    match base_rel(&sent.tokens[verb].deprel) {
        "conj" => subject_of(sent, head, depth - 1),
        "xcomp" => {
            if let Some(obj) = sent
                .children(head)
                .find(|&c| is_object(&sent.tokens[c].deprel))
            {
                return Some((obj, SubjectKind::Active));
            }
            subject_of(sent, head, depth - 1).map(|(s, _)| (s, SubjectKind::Active))
        }
        _ => None,
    }
}

/// First gendered token among `head` and its `conj` descendants.
fn gendered_conjunct(sent: &ParsedSentence, head: usize) -> Option<RoleArgument> {
    let mut group = vec![head];
    let mut frontier = vec![head];
    while let Some(n) = frontier.pop() {
        for c in sent.children(n) {
            if base_rel(&sent.tokens[c].deprel) == "conj" {
                group.push(c);
                frontier.push(c);
            }
        }
    }
    group.sort_unstable();
    group
        .into_iter()
        .find_map(|i| token_gender(sent, i).map(|gender| RoleArgument { token: i, gender }))
}

const INHERIT_DEPTH: usize = 4;

/// Role assignments for every `VERB` token whose lemma is in `verbs`.
///
/// Active voice: subject is perpetrator, direct object is victim. Passive
/// voice: passive subject is victim, the `by` oblique is perpetrator. Verbs
/// are visited left to right and a token already assigned to an earlier verb
/// is not assigned again; verbs left with no argument are dropped.
pub fn classify_roles(sent: &ParsedSentence, verbs: &BTreeSet<String>) -> Vec<RoleAssignment> {
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    for (v, tok) in sent.tokens.iter().enumerate() {
        if tok.upos != "VERB" || !verbs.contains(&tok.lemma.to_lowercase()) {
            continue;
        }
        let children: Vec<usize> = sent.children(v).collect();
        let own_passive_aux = children
            .iter()
            .any(|&c| is_passive_aux(&sent.tokens[c].deprel));
        let object = children
            .iter()
            .copied()
            .find(|&c| is_object(&sent.tokens[c].deprel));
        let subject = subject_of(sent, v, INHERIT_DEPTH);
        let passive = own_passive_aux
            || matches!(subject, Some((_, SubjectKind::Passive)) if object.is_none());

        let (agent_head, theme_head) = if passive {
            let by = children
                .iter()
                .copied()
                .find(|&c| is_agent_oblique(sent, c));
            (by, subject.map(|(s, _)| s))
        } else {
            (subject.map(|(s, _)| s), object)
        };

        let mut take = |head: Option<usize>| {
            let arg = gendered_conjunct(sent, head?)?;
            claimed.insert(arg.token).then_some(arg)
        };
        let agent = take(agent_head);
        let theme = take(theme_head);
        if agent.is_none() && theme.is_none() {
            continue;
        }
        out.push(RoleAssignment {
            verb_lemma: tok.lemma.to_lowercase(),
            verb_token: v,
            agent,
            theme,
            voice: if passive {
                Voice::Passive
            } else {
                Voice::Active
            },
        });
    }
    out
}

/// Token forms with each classified argument replaced by its sentinel.
pub fn apply_sentinels(
    sent: &ParsedSentence,
    assignments: &[RoleAssignment],
    sentinels: &Sentinels,
) -> Result<Vec<String>> {
    let mut out: Vec<String> = sent.tokens.iter().map(|t| t.form.clone()).collect();
    let mut seen = HashSet::new();
    for a in assignments {
        for (token, slot) in a.slots() {
            if token >= out.len() {
                return Err(Error::InvalidArgument(format!(
                    "assignment token {token} outside sentence of {} tokens",
                    out.len()
                )));
            }
            if !seen.insert(token) {
                return Err(Error::OverlappingAssignment {
                    sentence: out.join(" "),
                    token,
                });
            }
            out[token] = sentinels.get(slot).to_string();
        }
    }
    Ok(out)
}
