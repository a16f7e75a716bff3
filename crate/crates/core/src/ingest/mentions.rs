use regex::Regex;

use crate::lexicon::GenderLexicons;
use crate::text::{term_regex, Gender};

use super::resolve::Party;

/// Words that may not sit between a party term and a spouse noun in a
/// compound mention ("petitioner and wife" is two people, "respondent
/// aggrieved wife" is one).
const NON_MODIFIERS: &[&str] = &[
    "and", "or", "of", "the", "a", "an", "his", "her", "their", "its", "with", "to", "against",
    "by", "for", "from", "vs", "versus", "v", "is", "was", "were", "are", "be", "being", "been",
    "has", "had", "have", "that", "who", "whom", "whose", "which", "no", "nor", "but", "as", "at",
    "in", "on", "s", "said", "not",
];

/// A party mention found in raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct PartyMention {
    pub party: Party,
    pub start: usize,
    pub end: usize,
    /// Gender stated by a compound such as `respondent-wife`.
    pub compound_gender: Option<Gender>,
}

pub(crate) struct MentionFinder {
    plain: Regex,
    forward: Regex,
    reverse: Regex,
    plaintiff_terms: Vec<String>,
}

impl MentionFinder {
    pub fn new(lex: &GenderLexicons) -> Self {
        let plain = term_regex(lex.all_party_terms());
        let mut terms: Vec<String> = lex.all_party_terms().map(|t| t.to_lowercase()).collect();
        terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let alternation = terms
            .iter()
            .map(|t| {
                t.split_whitespace()
                    .map(regex::escape)
                    .collect::<Vec<_>>()
                    .join(r"\s+")
            })
            .collect::<Vec<_>>()
            .join("|");
        let forward = Regex::new(&format!(
            r"(?i)\b({alternation})(?:\s*[/\-]\s*|\s+(?:([\p{{L}}]+)\s+)?)(husband|wife)\b"
        ))
        .expect("valid compound regex");
        let reverse = Regex::new(&format!(
            r"(?i)\b(husband|wife)\s*[/\-]\s*({alternation})\b"
        ))
        .expect("valid compound regex");
        MentionFinder {
            plain,
            forward,
            reverse,
            plaintiff_terms: lex.party_terms.plaintiff.iter().cloned().collect(),
        }
    }

    fn party_of(&self, term: &str) -> Party {
        let lower = term
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        if self.plaintiff_terms.contains(&lower) {
            Party::Plaintiff
        } else {
            Party::Defendant
        }
    }

    /// All party mentions, compounds first claiming their spans, in text order.
    pub fn find(&self, text: &str) -> Vec<PartyMention> {
        let mut mentions: Vec<PartyMention> = Vec::new();
        for caps in self.forward.captures_iter(text) {
            if let Some(modifier) = caps.get(2) {
                if NON_MODIFIERS.contains(&modifier.as_str().to_lowercase().as_str()) {
                    continue;
                }
            }
            let whole = caps.get(0).unwrap();
            mentions.push(PartyMention {
                party: self.party_of(&caps[1]),
                start: whole.start(),
                end: whole.end(),
                compound_gender: Some(spouse_gender(&caps[3])),
            });
        }
        for caps in self.reverse.captures_iter(text) {
            let whole = caps.get(0).unwrap();
            if overlaps(&mentions, whole.start(), whole.end()) {
                continue;
            }
            mentions.push(PartyMention {
                party: self.party_of(&caps[2]),
                start: whole.start(),
                end: whole.end(),
                compound_gender: Some(spouse_gender(&caps[1])),
            });
        }
        for m in self.plain.find_iter(text) {
            if overlaps(&mentions, m.start(), m.end()) {
                continue;
            }
            mentions.push(PartyMention {
                party: self.party_of(m.as_str()),
                start: m.start(),
                end: m.end(),
                compound_gender: None,
            });
        }
        mentions.sort_by_key(|m| m.start);
        mentions
    }
}

fn overlaps(mentions: &[PartyMention], start: usize, end: usize) -> bool {
    mentions.iter().any(|m| start < m.end && m.start < end)
}

fn spouse_gender(noun: &str) -> Gender {
    if noun.eq_ignore_ascii_case("husband") {
        Gender::Male
    } else {
        Gender::Female
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find(text: &str) -> Vec<(Party, String, Option<Gender>)> {
        let finder = MentionFinder::new(&GenderLexicons::bundled());
        finder
            .find(text)
            .into_iter()
            .map(|m| (m.party, text[m.start..m.end].to_string(), m.compound_gender))
            .collect()
    }

    #[test]
    fn finds_compounds_in_all_separator_styles() {
        let found =
            find("The respondent/wife, the petitioner-husband and respondent aggrieved wife.");
        assert_eq!(
            found,
            vec![
                (
                    Party::Defendant,
                    "respondent/wife".into(),
                    Some(Gender::Female)
                ),
                (
                    Party::Plaintiff,
                    "petitioner-husband".into(),
                    Some(Gender::Male)
                ),
                (
                    Party::Defendant,
                    "respondent aggrieved wife".into(),
                    Some(Gender::Female)
                ),
            ]
        );
    }

    #[test]
    fn conjunctions_do_not_form_compounds() {
        let found = find("the petitioner and wife of the respondent");
        assert_eq!(
            found,
            vec![
                (Party::Plaintiff, "petitioner".into(), None),
                (Party::Defendant, "respondent".into(), None),
            ]
        );
    }

    #[test]
    fn reverse_compounds_and_multiword_terms() {
        let found = find("the wife-appellant sued the Opposite  Party");
        assert_eq!(
            found[0],
            (
                Party::Plaintiff,
                "wife-appellant".into(),
                Some(Gender::Female)
            )
        );
        assert_eq!(found[1], (Party::Defendant, "Opposite  Party".into(), None));
    }

    #[test]
    fn non_applicant_is_a_defendant() {
        let found = find("the non-applicant");
        assert_eq!(
            found,
            vec![(Party::Defendant, "non-applicant".into(), None)]
        );
    }
}
