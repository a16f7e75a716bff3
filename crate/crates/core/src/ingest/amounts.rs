use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimKind {
    /// Rupees.
    Cash,
    /// Grams of gold.
    Gold,
}

/// Byte range inside one sentence of a [`Document`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryClaim {
    pub kind: ClaimKind,
    pub amount: f64,
    pub span: ClaimSpan,
}

const NUMBER: &str = r"(\d{1,3}(?:,\d{2,3})+(?:\.\d+)?|\d+(?:\.\d+)?)";
const MULTIPLIER: &str = r"(lakhs?|lacs?|crores?)";
/// Words searched after (and before) a mass for the `gold` keyword.
const GOLD_WINDOW_AFTER: usize = 3;
const GOLD_WINDOW_BEFORE: usize = 4;

fn currency_first() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)(?:\brs\.?|\binr\b|₹|\brupees\b)\s*{NUMBER}(?:\s*/-)?(?:\s*{MULTIPLIER}\b)?"
        ))
        .unwrap()
    })
}

fn number_first() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"(?i)\b{NUMBER}(?:\s*{MULTIPLIER})?\s*(?:/-\s*)?(?:rupees\b|rs\b\.?)"
        ))
        .unwrap()
    })
}

fn gold_mass() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"(?i)\b{NUMBER}\s*(?:grams?|gms?|gm|g)\b\.?")).unwrap())
}

fn words() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}]+").unwrap())
}

fn parse_number(digits: &str, multiplier: Option<&str>) -> Option<f64> {
    let base: f64 = digits.replace(',', "").parse().ok()?;
    let factor = match multiplier.map(str::to_lowercase).as_deref() {
        Some(m) if m.starts_with("la") => 100_000.0,
        Some(m) if m.starts_with("cr") => 10_000_000.0,
        _ => 1.0,
    };
    Some(base * factor)
}

/// Best-effort extraction of demanded cash amounts and gold masses.
///
/// Cash needs a currency marker (`Rs.`, `INR`, `₹`, `rupees`) next to the
/// number; `lakh`/`crore` multiply by 1e5/1e7. Gold needs a gram unit and the
/// word `gold` nearby. Claims are reported per sentence without deduplication.
pub fn extract_amounts(doc: &Document) -> Vec<MonetaryClaim> {
    let mut claims = Vec::new();
    for (index, sentence) in doc.sentences.iter().enumerate() {
        let mut cash: Vec<MonetaryClaim> = Vec::new();
        for re in [currency_first(), number_first()] {
            for caps in re.captures_iter(sentence) {
                let whole = caps.get(0).unwrap();
                if cash
                    .iter()
                    .any(|c| whole.start() < c.span.end && c.span.start < whole.end())
                {
                    continue;
                }
                let Some(amount) = parse_number(&caps[1], caps.get(2).map(|m| m.as_str())) else {
                    continue;
                };
                cash.push(MonetaryClaim {
                    kind: ClaimKind::Cash,
                    amount,
                    span: ClaimSpan {
                        sentence: index,
                        start: whole.start(),
                        end: whole.end(),
                    },
                });
            }
        }
        cash.sort_by_key(|c| c.span.start);
        claims.extend(cash);

        for caps in gold_mass().captures_iter(sentence) {
            let whole = caps.get(0).unwrap();
            let after = words()
                .find_iter(&sentence[whole.end()..])
                .take(GOLD_WINDOW_AFTER)
                .any(|w| w.as_str().eq_ignore_ascii_case("gold"));
            let before_words: Vec<&str> = words()
                .find_iter(&sentence[..whole.start()])
                .map(|m| m.as_str())
                .collect();
            let before = before_words
                .iter()
                .rev()
                .take(GOLD_WINDOW_BEFORE)
                .any(|w| w.eq_ignore_ascii_case("gold"));
            if !(after || before) {
                continue;
            }
            if let Some(amount) = parse_number(&caps[1], None) {
                claims.push(MonetaryClaim {
                    kind: ClaimKind::Gold,
                    amount,
                    span: ClaimSpan {
                        sentence: index,
                        start: whole.start(),
                        end: whole.end(),
                    },
                });
            }
        }
    }
    claims
}
