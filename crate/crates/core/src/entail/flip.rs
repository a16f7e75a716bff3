use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::BUNDLED_FLIP;
use crate::roletag::ParsedSentence;
use crate::text::match_case;

/// Replacement for a pronoun whose opposite depends on its syntactic role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguousRule {
    pub possessive: String,
    pub other: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FlipSource {
    pairs: Vec<(String, String)>,
    #[serde(default)]
    directed: BTreeMap<String, String>,
    #[serde(default)]
    ambiguous: BTreeMap<String, AmbiguousRule>,
}

/// Word-level gender flip table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipLexicon {
    bijective: BTreeMap<String, String>,
    directed: BTreeMap<String, String>,
    ambiguous: BTreeMap<String, AmbiguousRule>,
}

impl FlipLexicon {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_FLIP).expect("bundled flip lexicon is valid")
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let src: FlipSource = serde_json::from_str(source)?;
        let mut bijective = BTreeMap::new();
        for (a, b) in src.pairs {
            let (a, b) = (a.to_lowercase(), b.to_lowercase());
            if a == b {
                return Err(Error::InvalidLexicon(format!(
                    "`{a}` is paired with itself"
                )));
            }
            for w in [&a, &b] {
                if bijective.contains_key(w) {
                    return Err(Error::InvalidLexicon(format!(
                        "`{w}` appears in two flip pairs"
                    )));
                }
            }
            bijective.insert(a.clone(), b.clone());
            bijective.insert(b, a);
        }
        let directed: BTreeMap<String, String> = src
            .directed
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
            .collect();
        let ambiguous: BTreeMap<String, AmbiguousRule> = src
            .ambiguous
            .into_iter()
            .map(|(k, r)| {
                (
                    k.to_lowercase(),
                    AmbiguousRule {
                        possessive: r.possessive.to_lowercase(),
                        other: r.other.to_lowercase(),
                    },
                )
            })
            .collect();
        for (k, r) in &ambiguous {
            if r.possessive.is_empty() || r.other.is_empty() {
                return Err(Error::InvalidLexicon(format!(
                    "ambiguous rule for `{k}` is incomplete"
                )));
            }
        }
        for k in directed.keys().chain(ambiguous.keys()) {
            if bijective.contains_key(k) {
                return Err(Error::InvalidLexicon(format!(
                    "`{k}` is both paired and rule-mapped"
                )));
            }
        }
        if let Some(k) = directed.keys().find(|k| ambiguous.contains_key(*k)) {
            return Err(Error::InvalidLexicon(format!(
                "`{k}` has both a directed and an ambiguous rule"
            )));
        }
        Ok(FlipLexicon {
            bijective,
            directed,
            ambiguous,
        })
    }

    /// Lowercased tokens of the bijective pairs.
    pub fn bijective_tokens(&self) -> impl Iterator<Item = &str> {
        self.bijective.keys().map(String::as_str)
    }

    pub fn partner(&self, word: &str) -> Option<&str> {
        self.bijective.get(word).map(String::as_str)
    }

    fn is_trigger(&self, word: &str) -> bool {
        self.bijective.contains_key(word)
            || self.directed.contains_key(word)
            || self.ambiguous.contains_key(word)
    }
}

impl Default for FlipLexicon {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Words that cannot be the head noun after a possessive. Every pronoun is
/// listed so the decision is the same before and after a flip.
const NON_NOUNS: &[&str] = &[
    "a",
    "an",
    "the",
    "this",
    "that",
    "these",
    "those",
    "and",
    "or",
    "but",
    "nor",
    "so",
    "yet",
    "if",
    "because",
    "as",
    "than",
    "when",
    "while",
    "where",
    "whether",
    "since",
    "until",
    "till",
    "though",
    "although",
    "unless",
    "after",
    "before",
    "to",
    "of",
    "in",
    "on",
    "at",
    "by",
    "for",
    "from",
    "with",
    "without",
    "into",
    "onto",
    "upon",
    "about",
    "against",
    "over",
    "under",
    "through",
    "during",
    "between",
    "among",
    "towards",
    "toward",
    "within",
    "across",
    "behind",
    "beyond",
    "despite",
    "via",
    "per",
    "up",
    "down",
    "out",
    "off",
    "away",
    "back",
    "around",
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "you",
    "your",
    "yours",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "who",
    "whom",
    "whose",
    "which",
    "what",
    "is",
    "am",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "has",
    "have",
    "had",
    "do",
    "does",
    "did",
    "will",
    "would",
    "shall",
    "should",
    "can",
    "could",
    "may",
    "might",
    "must",
    "not",
    "no",
    "never",
    "also",
    "too",
    "very",
    "again",
    "always",
    "often",
    "sometimes",
    "ever",
    "even",
    "still",
    "just",
    "only",
    "then",
    "there",
    "here",
    "now",
    "today",
    "tonight",
    "yesterday",
    "tomorrow",
    "everyday",
    "daily",
    "once",
    "twice",
    "thrice",
    "further",
    "more",
    "most",
    "much",
    "many",
    "all",
    "both",
    "each",
    "every",
    "any",
    "some",
    "several",
    "such",
    "same",
    "else",
    "however",
    "thereafter",
    "therefore",
    "thus",
    "hence",
    "soon",
    "later",
    "already",
    "together",
    "alone",
    "badly",
    "well",
];

fn non_nouns() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| NON_NOUNS.iter().copied().collect())
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{L}+(?:-\p{L}+)*").unwrap())
}

/// Whether `next` can follow a possessive determiner as its noun phrase.
fn looks_nominal(next: &str) -> bool {
    let w = next.to_lowercase();
    w.chars().all(|c| c.is_alphabetic() || c == '-')
        && !non_nouns().contains(w.as_str())
        && !w.ends_with("ly")
}

/// Swaps gendered words for their opposite, keeping capitalization.
///
/// `her` and `his` have two possible opposites. With a parse, a token whose
/// relation is possessive (`nmod:poss`, `poss`, `det:poss`) takes the
/// possessive form. Without one, or when the parse does not line up with
/// the text, the word counts as possessive when the next word follows it
/// directly and looks like the start of a noun phrase.
pub fn flip_gender(text: &str, lex: &FlipLexicon, parse: Option<&ParsedSentence>) -> String {
    let words: Vec<regex::Match> = word_regex().find_iter(text).collect();
    let mut roles: BTreeMap<String, Option<Vec<bool>>> = BTreeMap::new();
    if let Some(parse) = parse {
        for trigger in lex.ambiguous.keys() {
            let from_parse: Vec<bool> = parse
                .tokens
                .iter()
                .filter(|t| t.form.to_lowercase() == *trigger)
                .map(|t| t.deprel == "nmod:poss" || t.deprel == "poss" || t.deprel == "det:poss")
                .collect();
            let in_text = words
                .iter()
                .filter(|m| m.as_str().to_lowercase() == *trigger)
                .count();
            let aligned = (from_parse.len() == in_text).then_some(from_parse);
            roles.insert(trigger.clone(), aligned);
        }
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = String::with_capacity(text.len() + 8);
    let mut last = 0;
    for (i, m) in words.iter().enumerate() {
        let word = m.as_str();
        let lower = word.to_lowercase();
        if !lex.is_trigger(&lower) {
            continue;
        }
        let replacement = if let Some(p) = lex.bijective.get(&lower) {
            p.clone()
        } else if let Some(d) = lex.directed.get(&lower) {
            d.clone()
        } else {
            let rule = &lex.ambiguous[&lower];
            let k = seen.entry(lower.clone()).or_insert(0);
            let from_parse = roles.get(&lower).and_then(|r| r.as_ref()).map(|r| r[*k]);
            *k += 1;
            let possessive = from_parse.unwrap_or_else(|| {
                words.get(i + 1).is_some_and(|next| {
                    text[m.end()..next.start()].chars().all(char::is_whitespace)
                        && looks_nominal(next.as_str())
                })
            });
            if possessive {
                rule.possessive.clone()
            } else {
                rule.other.clone()
            }
        };
        out.push_str(&text[last..m.start()]);
        out.push_str(&match_case(word, &replacement));
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roletag::parse_conllu;

    #[test]
    fn bundled_lexicon_is_involutive() {
        let lex = FlipLexicon::bundled();
        for w in lex.bijective_tokens() {
            assert_eq!(lex.partner(lex.partner(w).unwrap()), Some(w));
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(FlipLexicon::from_json(r#"{"pairs": [["a", "b"], ["b", "c"]]}"#).is_err());
        assert!(FlipLexicon::from_json(r#"{"pairs": [["a", "a"]]}"#).is_err());
        assert!(
            FlipLexicon::from_json(r#"{"pairs": [["a", "b"]], "directed": {"a": "c"}}"#).is_err()
        );
        assert!(FlipLexicon::from_json(
            r#"{"pairs": [], "ambiguous": {"her": {"possessive": "", "other": "him"}}}"#
        )
        .is_err());
    }

    #[test]
    fn keeps_case_and_punctuation() {
        let lex = FlipLexicon::bundled();
        assert_eq!(
            flip_gender("Mr. Rao met Smt. Devi.", &lex, None),
            "Mrs. Rao met Shri. Devi."
        );
        assert_eq!(
            flip_gender("HUSBAND's father-in-law", &lex, None),
            "WIFE's mother-in-law"
        );
        assert_eq!(
            flip_gender("She hit him, and he left her.", &lex, None),
            "He hit her, and she left him."
        );
    }

    #[test]
    fn possessive_fallback() {
        let lex = FlipLexicon::bundled();
        assert_eq!(flip_gender("her jewellery", &lex, None), "his jewellery");
        assert_eq!(flip_gender("beat her badly", &lex, None), "beat him badly");
        assert_eq!(
            flip_gender("beat her mercilessly", &lex, None),
            "beat him mercilessly"
        );
        assert_eq!(flip_gender("beat her, then", &lex, None), "beat him, then");
        assert_eq!(
            flip_gender("the house is his", &lex, None),
            "the house is hers"
        );
        assert_eq!(flip_gender("his house", &lex, None), "her house");
    }

    #[test]
    fn parse_roles_take_precedence() {
        let conllu = "1\tThey\tthey\tPRON\t_\t_\t2\tnsubj\t_\t_\n\
                      2\tmade\tmake\tVERB\t_\t_\t0\troot\t_\t_\n\
                      3\ther\tshe\tPRON\t_\t_\t4\tnsubj\t_\t_\n\
                      4\tcry\tcry\tVERB\t_\t_\t2\txcomp\t_\t_\n\n";
        let parse = &parse_conllu(conllu.as_bytes()).unwrap()[0];
        let lex = FlipLexicon::bundled();
        assert_eq!(
            flip_gender("They made her cry", &lex, None),
            "They made his cry"
        );
        assert_eq!(
            flip_gender("They made her cry", &lex, Some(parse)),
            "They made him cry"
        );
        // a parse that does not line up with the text is ignored
        assert_eq!(
            flip_gender("her bag and her", &lex, Some(parse)),
            "his bag and him"
        );
    }
}
