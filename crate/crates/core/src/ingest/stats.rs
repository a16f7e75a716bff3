use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Document;

/// Key used for the single row when statistics are not grouped.
pub const ALL_GROUP: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    CourtGroup,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub hit_count: usize,
    pub total_count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: BTreeMap<String, StatsRow>,
}

impl StatsTable {
    /// Merges per-group counts; fractions are recomputed from the sums.
    pub fn merge(&mut self, other: &StatsTable) {
        for (key, row) in &other.rows {
            let entry = self.rows.entry(key.clone()).or_insert(StatsRow {
                hit_count: 0,
                total_count: 0,
                fraction: 0.0,
            });
            entry.hit_count += row.hit_count;
            entry.total_count += row.total_count;
            entry.fraction = fraction(entry.hit_count, entry.total_count);
        }
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Case-insensitive word-boundary matcher for keywords. Where a keyword
/// switches between digits and letters ("498-A") the separator is optional
/// and may be a hyphen or a space, so `498A` and `498 A` also match.
pub fn keyword_regex<S: AsRef<str>>(tokens: &[S]) -> Regex {
    let mut alternatives: Vec<String> = tokens
        .iter()
        .map(|t| keyword_pattern(t.as_ref()))
        .filter(|p| !p.is_empty())
        .collect();
    alternatives.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    if alternatives.is_empty() {
        return Regex::new(r"[^\s\S]").unwrap();
    }
    Regex::new(&format!(r"(?i)\b(?:{})\b", alternatives.join("|"))).expect("valid keyword regex")
}

fn keyword_pattern(token: &str) -> String {
    let chars: Vec<char> = token.trim().to_lowercase().chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if (c == '-' || c == ' ') && i > 0 && i + 1 < chars.len() {
            let (prev, next) = (chars[i - 1], chars[i + 1]);
            if prev.is_ascii_digit() != next.is_ascii_digit() {
                out.push_str(r"[-\s]?");
            } else if c == ' ' {
                out.push_str(r"\s+");
            } else {
                out.push_str(&regex::escape("-"));
            }
            i += 1;
            continue;
        }
        out.push_str(&regex::escape(&c.to_string()));
        if let Some(&next) = chars.get(i + 1) {
            if next.is_alphanumeric() && c.is_ascii_digit() != next.is_ascii_digit() {
                out.push_str(r"[-\s]?");
            }
        }
        i += 1;
    }
    out
}

/// Per group, the fraction of documents with at least one occurrence of any
/// of `tokens`.
pub fn keyword_stats<S: AsRef<str>>(
    docs: &[Document],
    tokens: &[S],
    group_by: GroupBy,
) -> Result<StatsTable> {
    if tokens.is_empty() {
        return Err(Error::InvalidArgument(
            "keyword set must be non-empty".into(),
        ));
    }
    let re = keyword_regex(tokens);
    let mut table = StatsTable::default();
    for doc in docs {
        let key = match group_by {
            GroupBy::CourtGroup => doc.court_group.clone(),
            GroupBy::None => ALL_GROUP.to_string(),
        };
        let hit = doc.sentences.iter().any(|s| re.is_match(s));
        let row = table.rows.entry(key).or_insert(StatsRow {
            hit_count: 0,
            total_count: 0,
            fraction: 0.0,
        });
        row.total_count += 1;
        row.hit_count += usize::from(hit);
    }
    for row in table.rows.values_mut() {
        row.fraction = fraction(row.hit_count, row.total_count);
    }
    Ok(table)
}

/// Pearson correlation of the per-group fractions of two tables.
pub fn correlate(a: &StatsTable, b: &StatsTable) -> Result<f64> {
    if !a.rows.keys().eq(b.rows.keys()) {
        return Err(Error::InvalidArgument(
            "tables have different group keys".into(),
        ));
    }
    if a.rows.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two groups".into(),
        ));
    }
    let xs: Vec<f64> = a.rows.values().map(|r| r.fraction).collect();
    let ys: Vec<f64> = b.rows.values().map(|r| r.fraction).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance("first table is constant".into()));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("second table is constant".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
