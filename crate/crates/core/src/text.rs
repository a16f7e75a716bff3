//! Shared text utilities: gender tags, term matching, sentence splitting.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn opposite(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    /// The litigant noun used after normalization.
    pub fn spouse_noun(self) -> &'static str {
        match self {
            Gender::Male => "husband",
            Gender::Female => "wife",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gender::Male => f.write_str("male"),
            Gender::Female => f.write_str("female"),
        }
    }
}

/// Builds a case-insensitive regex matching any of `terms` on word boundaries.
///
/// Longer terms are tried first so that `non-applicant` wins over `applicant`.
/// Word boundaries are only asserted on sides where the term starts or ends
/// with a word character, so `mr.` and `smt.` match as written.
pub fn term_regex<I, S>(terms: I) -> Regex
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut terms: Vec<String> = terms
        .into_iter()
        .map(|t| t.as_ref().trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect();
    terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    terms.dedup();
    let alternation = terms
        .iter()
        .map(|t| bounded(t))
        .collect::<Vec<_>>()
        .join("|");
    let pattern = if alternation.is_empty() {
        // matches nothing
        r"[^\s\S]".to_string()
    } else {
        format!("(?i)(?:{alternation})")
    };
    Regex::new(&pattern).expect("escaped term alternation is a valid regex")
}

fn bounded(term: &str) -> String {
    let mut out = String::new();
    if term.chars().next().is_some_and(is_word_char) {
        out.push_str(r"\b");
    }
    // internal whitespace in phrases matches any whitespace run
    let parts: Vec<String> = term.split_whitespace().map(regex::escape).collect();
    out.push_str(&parts.join(r"\s+"));
    if term.chars().last().is_some_and(is_word_char) {
        out.push_str(r"\b");
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Applies the capitalization pattern of `original` to `replacement`.
pub fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    match letters.first() {
        Some(c) if c.is_uppercase() => {
            let mut chars = replacement.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => replacement.to_lowercase(),
    }
}

/// Lowercased word tokens (letters, digits, apostrophes and inner hyphens).
pub fn word_tokens(text: &str) -> Vec<String> {
    static_word_regex()
        .find_iter(text)
        .map(|m| m.as_str().to_lowercase())
        .collect()
}

fn static_word_regex() -> &'static Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*").unwrap())
}

/// Abbreviations that end in a period without ending the sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "smt", "shri", "sri", "sh", "kum", "km", "dr", "no", "nos", "sec", "secs",
    "s", "u/s", "vs", "v", "viz", "i.e", "e.g", "etc", "hon'ble", "honble", "st", "co", "ltd",
    "rs", "art", "arts", "cl", "ch", "para", "paras", "ors", "anr", "p", "pp", "j", "jj", "govt",
    "dt", "dtd", "adv", "addl", "spl", "crl", "cr", "ipc", "crpc", "r/o", "s/o", "d/o", "w/o",
    "inr", "approx", "yrs", "gm", "gms",
];

/// Splits text into sentences on terminal punctuation followed by whitespace,
/// keeping abbreviations (`Smt.`, `No.`, `Sec.`) and initials intact. Blank
/// lines are always boundaries. Whitespace inside a sentence is collapsed.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    for block in text.split("\n\n") {
        split_block(block, &mut sentences);
    }
    sentences
}

fn split_block(block: &str, out: &mut Vec<String>) {
    let words: Vec<&str> = block.split_whitespace().collect();
    let mut current: Vec<&str> = Vec::new();
    for (i, word) in words.iter().enumerate() {
        current.push(word);
        let is_last = i + 1 == words.len();
        if is_last || ends_sentence(word) {
            out.push(current.join(" "));
            current.clear();
        }
    }
}

fn ends_sentence(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', ')', ']', '’', '”']);
    let Some(last) = trimmed.chars().last() else {
        return false;
    };
    match last {
        '!' | '?' => true,
        '.' => {
            let stem = trimmed.trim_end_matches('.');
            let stem = stem.trim_start_matches(['(', '"', '\'', '[', '‘', '“']);
            if stem.is_empty() {
                return false;
            }
            let lower = stem.to_lowercase();
            if ABBREVIATIONS.contains(&lower.as_str()) {
                return false;
            }
            // single-letter initials such as "A." in "A. K. Sharma"
            let mut chars = stem.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                if c.is_uppercase() {
                    return false;
                }
            }
            true
        }
        _ => false,
    }
}
