//! Corpus loading, relevance filtering, litigant gender resolution, mention
//! normalization and keyword statistics.

mod amounts;
mod mentions;
mod normalize;
mod resolve;
mod stats;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::term_regex;

pub use amounts::{extract_amounts, ClaimKind, ClaimSpan, MonetaryClaim};
pub use normalize::{normalize_mentions, Document, MentionRewrite};
pub use resolve::{
    resolve_litigant_genders, Evidence, Party, Resolution, RoleGenderMap, RuleId, Unresolved,
    UnresolvedReason,
};
pub use stats::{correlate, keyword_regex, keyword_stats, GroupBy, StatsRow, StatsTable};

/// One court proceeding as loaded from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub court_group: String,
    pub date: NaiveDate,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with `id`, `court_group`, `date`, `text`.
    Jsonl,
    /// A directory of `.txt` files plus a `manifest.json` sidecar mapping
    /// each file stem to `{court_group, date}`.
    Directory,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRecord {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub documents: Vec<RawDocument>,
    /// Records dropped in lenient mode.
    pub skipped: Vec<SkippedRecord>,
}

/// Loads a corpus. In strict mode the first malformed record is an error;
/// otherwise it is skipped and reported in [`LoadedCorpus::skipped`].
pub fn load_corpus(path: &Path, format: CorpusFormat, strict: bool) -> Result<LoadedCorpus> {
    let records = match format {
        CorpusFormat::Jsonl => read_jsonl_records(path)?,
        CorpusFormat::Directory => read_directory_records(path)?,
    };
    let mut corpus = LoadedCorpus::default();
    let mut ids = HashSet::new();
    for (location, record) in records {
        let parsed = record.and_then(|doc| {
            if ids.contains(&doc.id) {
                Err(format!("duplicate id `{}`", doc.id))
            } else {
                Ok(doc)
            }
        });
        match parsed {
            Ok(doc) => {
                ids.insert(doc.id.clone());
                corpus.documents.push(doc);
            }
            Err(message) if strict => {
                return Err(Error::MalformedRecord { location, message });
            }
            Err(message) => {
                log::warn!("skipping {location}: {message}");
                corpus.skipped.push(SkippedRecord { location, message });
            }
        }
    }
    Ok(corpus)
}

type RecordResult = std::result::Result<RawDocument, String>;

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<String>,
    court_group: Option<String>,
    date: Option<String>,
    text: Option<String>,
}

fn read_jsonl_records(path: &Path) -> Result<Vec<(String, RecordResult)>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("{}:{}", path.display(), i + 1);
        let record = serde_json::from_str::<JsonRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| build_document(r.id, r.court_group, r.date.as_deref(), r.text));
        out.push((location, record));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ManifestEntry {
    court_group: String,
    date: String,
}

fn read_directory_records(dir: &Path) -> Result<Vec<(String, RecordResult)>> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Ok(Vec::new());
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: BTreeMap<String, ManifestEntry> = if manifest_path.exists() {
        let body = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        serde_json::from_str(&body).map_err(|e| Error::MalformedRecord {
            location: manifest_path.display().to_string(),
            message: e.to_string(),
        })?
    } else {
        BTreeMap::new()
    };
    let mut out = Vec::new();
    for file in files {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let record = match manifest.get(&id) {
            Some(entry) => build_document(
                Some(id.clone()),
                Some(entry.court_group.clone()),
                Some(&entry.date),
                Some(text),
            ),
            None => Err(format!("no `{MANIFEST_FILE}` entry for `{id}`")),
        };
        out.push((file.display().to_string(), record));
    }
    Ok(out)
}

fn build_document(
    id: Option<String>,
    court_group: Option<String>,
    date: Option<&str>,
    text: Option<String>,
) -> RecordResult {
    let id = id.filter(|s| !s.is_empty()).ok_or("missing field `id`")?;
    let court_group = court_group.ok_or("missing field `court_group`")?;
    let date = date.ok_or("missing field `date`")?;
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map_err(|e| format!("invalid date `{date}`: {e}"))?;
    let text = text.ok_or("missing field `text`")?;
    if text.trim().is_empty() {
        return Err("empty `text`".into());
    }
    Ok(RawDocument {
        id,
        court_group,
        date,
        text,
    })
}

/// Keyword heuristic that separates divorce proceedings from documents that
/// merely mention divorce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivorceFilter {
    pub anchor: String,
    pub support_terms: Vec<String>,
    pub threshold: usize,
}

impl Default for DivorceFilter {
    fn default() -> Self {
        DivorceFilter {
            anchor: "divorce".into(),
            support_terms: vec![
                "husband".into(),
                "wife".into(),
                "marriage".into(),
                "decree of divorce".into(),
            ],
            threshold: 5,
        }
    }
}

impl DivorceFilter {
    /// Number of support-term occurrences in `text`.
    pub fn support_count(&self, text: &str) -> usize {
        term_regex(&self.support_terms).find_iter(text).count()
    }

    pub fn keeps(&self, text: &str) -> bool {
        term_regex([&self.anchor]).is_match(text) && self.support_count(text) >= self.threshold
    }
}

/// Keeps documents containing the anchor whose support-term occurrences
/// reach the threshold.
pub fn filter_divorce(docs: Vec<RawDocument>, filter: &DivorceFilter) -> Result<Vec<RawDocument>> {
    if filter.threshold == 0 {
        return Err(Error::InvalidArgument(
            "threshold must be at least 1".into(),
        ));
    }
    let anchor = term_regex([&filter.anchor]);
    let support = term_regex(&filter.support_terms);
    Ok(docs
        .into_iter()
        .filter(|d| {
            anchor.is_match(&d.text) && support.find_iter(&d.text).count() >= filter.threshold
        })
        .collect())
}
