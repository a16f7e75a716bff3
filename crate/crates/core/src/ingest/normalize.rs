use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::lexicon::GenderLexicons;
use crate::text::{match_case, split_sentences};

use super::mentions::MentionFinder;
use super::{RawDocument, RoleGenderMap};

/// Audit record for one rewritten litigant mention (offsets into the raw text).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRewrite {
    pub start: usize,
    pub end: usize,
    pub original: String,
    pub replacement: String,
}

/// A resolved proceeding with litigant mentions rewritten to `husband`/`wife`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub court_group: String,
    pub date: NaiveDate,
    pub sentences: Vec<String>,
    pub role_map: RoleGenderMap,
    #[serde(default)]
    pub rewrites: Vec<MentionRewrite>,
}

/// Replaces every party-term mention (including compounds such as
/// `plaintiff/wife`) with the litigant's spouse noun, then splits sentences.
pub fn normalize_mentions(
    doc: &RawDocument,
    map: &RoleGenderMap,
    lex: &GenderLexicons,
) -> Document {
    let text = &doc.text;
    let mentions = MentionFinder::new(lex).find(text);
    let mut out = String::with_capacity(text.len());
    let mut rewrites = Vec::with_capacity(mentions.len());
    let mut cursor = 0;
    for m in mentions {
        let original = &text[m.start..m.end];
        let replacement = match_case(original, map.gender_of(m.party).spouse_noun());
        out.push_str(&text[cursor..m.start]);
        out.push_str(&replacement);
        cursor = m.end;
        rewrites.push(MentionRewrite {
            start: m.start,
            end: m.end,
            original: original.to_string(),
            replacement,
        });
    }
    out.push_str(&text[cursor..]);
    if rewrites.is_empty() {
        log::debug!("document {} has no party-term mentions", doc.id);
    }
    Document {
        id: doc.id.clone(),
        court_group: doc.court_group.clone(),
        date: doc.date,
        sentences: split_sentences(&out),
        role_map: map.clone(),
        rewrites,
    }
}

impl Document {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}
