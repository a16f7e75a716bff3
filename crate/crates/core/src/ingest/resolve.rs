use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::lexicon::GenderLexicons;
use crate::text::{term_regex, Gender};

use super::mentions::{MentionFinder, PartyMention};
use super::RawDocument;

/// Maximum word distance between a cue and the party mention it describes.
const BINDING_WINDOW: usize = 8;
/// A mention this close after a dependence phrase is the related person
/// ("wife of the respondent"), not the described one.
const DEPENDENCE_OBJECT_GAP: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Plaintiff,
    Defendant,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Plaintiff => f.write_str("plaintiff"),
            Party::Defendant => f.write_str("defendant"),
        }
    }
}

/// Resolution rules, in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    /// `respondent/wife`, `petitioner-husband`, `respondent aggrieved wife`
    RoleGenderCompound,
    Salutation,
    DependencePhrase,
    NameMarker,
}

/// One gender cue. Only the cue itself is recorded, never the litigant name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: RuleId,
    pub party: Party,
    pub gender: Gender,
    pub start: usize,
    pub end: usize,
    pub cue: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleGenderMap {
    pub plaintiff_gender: Gender,
    pub defendant_gender: Gender,
    pub evidence: Vec<Evidence>,
}

impl RoleGenderMap {
    pub fn gender_of(&self, party: Party) -> Gender {
        match party {
            Party::Plaintiff => self.plaintiff_gender,
            Party::Defendant => self.defendant_gender,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnresolvedReason {
    NoEvidence,
    ConflictingEvidence { party: Party },
    SameGender,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unresolved {
    pub reason: UnresolvedReason,
    pub diagnostics: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Resolved(RoleGenderMap),
    Unresolved(Unresolved),
}

impl Resolution {
    pub fn resolved(self) -> Option<RoleGenderMap> {
        match self {
            Resolution::Resolved(map) => Some(map),
            Resolution::Unresolved(_) => None,
        }
    }
}

/// Assigns a gender to each litigant from lexicon cues.
///
/// For each party the highest-priority rule with any evidence decides; if
/// that rule supports both genders the document is unresolved. A party with
/// no evidence takes the gender opposite to the other party.
pub fn resolve_litigant_genders(doc: &RawDocument, lex: &GenderLexicons) -> Resolution {
    let text = &doc.text;
    let mentions = MentionFinder::new(lex).find(text);
    let words = WordIndex::new(text);

    let mut evidence: Vec<Evidence> = mentions
        .iter()
        .filter_map(|m| {
            m.compound_gender.map(|gender| Evidence {
                rule: RuleId::RoleGenderCompound,
                party: m.party,
                gender,
                start: m.start,
                end: m.end,
                cue: text[m.start..m.end].to_lowercase(),
            })
        })
        .collect();

    let dependence_ends: Vec<usize> = term_regex(lex.dependence_phrases.keys())
        .find_iter(text)
        .map(|m| words.index_at(m.end().saturating_sub(1)))
        .collect();
    let cue_tables = [
        (RuleId::Salutation, &lex.salutations),
        (RuleId::DependencePhrase, &lex.dependence_phrases),
        (RuleId::NameMarker, &lex.name_markers),
    ];
    for (rule, table) in cue_tables {
        let re = term_regex(table.keys());
        for cue in re.find_iter(text) {
            if mentions
                .iter()
                .any(|m| cue.start() < m.end && m.start < cue.end())
            {
                continue;
            }
            if rule != RuleId::DependencePhrase {
                // names right after "w/o", "son of" belong to the related person
                let first = words.index_at(cue.start());
                if dependence_ends
                    .iter()
                    .any(|&end| first > end && first - end <= DEPENDENCE_OBJECT_GAP)
                {
                    continue;
                }
            }
            let key = normalize_cue(cue.as_str());
            let Some(gender) = lookup(table, &key) else {
                continue;
            };
            if let Some(mention) = bind(rule, cue.start(), cue.end(), &mentions, &words) {
                evidence.push(Evidence {
                    rule,
                    party: mention.party,
                    gender,
                    start: cue.start(),
                    end: cue.end(),
                    cue: key,
                });
            }
        }
    }
    evidence.sort_by_key(|e| (e.rule, e.start));

    let plaintiff = decide(Party::Plaintiff, &evidence);
    let defendant = decide(Party::Defendant, &evidence);
    let unresolved = |reason| {
        Resolution::Unresolved(Unresolved {
            reason,
            diagnostics: evidence.clone(),
        })
    };
    let (plaintiff_gender, defendant_gender, rules) = match (plaintiff, defendant) {
        (Decision::Conflict, _) => {
            return unresolved(UnresolvedReason::ConflictingEvidence {
                party: Party::Plaintiff,
            })
        }
        (_, Decision::Conflict) => {
            return unresolved(UnresolvedReason::ConflictingEvidence {
                party: Party::Defendant,
            })
        }
        (Decision::None, Decision::None) => return unresolved(UnresolvedReason::NoEvidence),
        (Decision::Gender(p, rp), Decision::Gender(d, rd)) => {
            if p == d {
                return unresolved(UnresolvedReason::SameGender);
            }
            (p, d, vec![(Party::Plaintiff, rp), (Party::Defendant, rd)])
        }
        (Decision::Gender(p, rp), Decision::None) => {
            (p, p.opposite(), vec![(Party::Plaintiff, rp)])
        }
        (Decision::None, Decision::Gender(d, rd)) => {
            (d.opposite(), d, vec![(Party::Defendant, rd)])
        }
    };
    let mut kept: Vec<Evidence> = evidence
        .into_iter()
        .filter(|e| rules.contains(&(e.party, e.rule)))
        .collect();
    kept.sort_by_key(|e| e.start);
    Resolution::Resolved(RoleGenderMap {
        plaintiff_gender,
        defendant_gender,
        evidence: kept,
    })
}

enum Decision {
    None,
    Gender(Gender, RuleId),
    Conflict,
}

fn decide(party: Party, evidence: &[Evidence]) -> Decision {
    let Some(top) = evidence
        .iter()
        .filter(|e| e.party == party)
        .map(|e| e.rule)
        .min()
    else {
        return Decision::None;
    };
    let mut genders = evidence
        .iter()
        .filter(|e| e.party == party && e.rule == top)
        .map(|e| e.gender);
    let first = genders.next().expect("top rule has evidence");
    if genders.all(|g| g == first) {
        Decision::Gender(first, top)
    } else {
        Decision::Conflict
    }
}

fn normalize_cue(cue: &str) -> String {
    cue.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn lookup(table: &std::collections::BTreeMap<String, Gender>, key: &str) -> Option<Gender> {
    table
        .get(key)
        .or_else(|| table.get(key.trim_end_matches('.')))
        .copied()
}

/// Picks the nearest party mention within the window; ties go to the mention
/// preceding the cue.
fn bind<'a>(
    rule: RuleId,
    cue_start: usize,
    cue_end: usize,
    mentions: &'a [PartyMention],
    words: &WordIndex,
) -> Option<&'a PartyMention> {
    let cue_first = words.index_at(cue_start);
    let cue_last = words.index_at(cue_end.saturating_sub(1));
    let mut best: Option<(usize, bool, &PartyMention)> = None;
    for m in mentions {
        let m_first = words.index_at(m.start);
        let m_last = words.index_at(m.end.saturating_sub(1));
        let (distance, before) = if m_last < cue_first {
            (cue_first - m_last, true)
        } else if m_first > cue_last {
            let gap = m_first - cue_last;
            if rule == RuleId::DependencePhrase && gap <= DEPENDENCE_OBJECT_GAP {
                continue;
            }
            (gap, false)
        } else {
            continue;
        };
        if distance > BINDING_WINDOW {
            continue;
        }
        let (lo, hi) = if before {
            (m_last, cue_first)
        } else {
            (cue_last, m_first)
        };
        if words.separator_between(lo, hi) {
            continue;
        }
        let better = match best {
            None => true,
            Some((d, b, _)) => distance < d || (distance == d && before && !b),
        };
        if better {
            best = Some((distance, before, m));
        }
    }
    best.map(|(_, _, m)| m)
}

/// Tokens that separate the two sides of a cause title ("X versus Y").
const SIDE_SEPARATORS: &[&str] = &["versus", "vs", "vs.", "v.", "v/s", "v/s."];

/// Maps byte offsets to word positions.
struct WordIndex {
    starts: Vec<usize>,
    separators: Vec<usize>,
}

impl WordIndex {
    fn new(text: &str) -> Self {
        use std::sync::OnceLock;
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| Regex::new(r"\S+").unwrap());
        let mut starts = Vec::new();
        let mut separators = Vec::new();
        for (i, m) in re.find_iter(text).enumerate() {
            starts.push(m.start());
            let word = m.as_str().to_lowercase();
            if SIDE_SEPARATORS.contains(&word.trim_end_matches(',')) {
                separators.push(i);
            }
        }
        WordIndex { starts, separators }
    }

    fn separator_between(&self, lo: usize, hi: usize) -> bool {
        self.separators.iter().any(|&s| lo < s && s < hi)
    }

    fn index_at(&self, offset: usize) -> usize {
        self.starts
            .partition_point(|&s| s <= offset)
            .saturating_sub(1)
    }
}
