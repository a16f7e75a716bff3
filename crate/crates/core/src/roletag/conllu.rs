//! Reader for the 10-column CoNLL-U dependency format.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One syntactic word. `head` is 1-based with 0 for the root, as in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub head: usize,
    pub deprel: String,
}

/// Where a parsed sentence came from in the normalized corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub sent_idx: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub tokens: Vec<ConlluToken>,
    pub source: Option<SentenceRef>,
}

impl ParsedSentence {
    /// Indices (0-based) of the dependents of token `index`.
    pub fn children(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.head == index + 1)
            .map(|(i, _)| i)
    }

    /// Parent token index, or `None` for the root.
    pub fn parent(&self, index: usize) -> Option<usize> {
        self.tokens[index].head.checked_sub(1)
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

#[derive(Default)]
struct Pending {
    tokens: Vec<ConlluToken>,
    ranges: Vec<(usize, usize, usize)>,
    doc_id: Option<String>,
    sent_idx: Option<usize>,
    start_line: usize,
}

/// Parses a CoNLL-U stream. Multiword-token ranges and empty nodes are
/// validated and skipped; `# doc_id =` and `# sent_idx =` comments set the
/// sentence provenance.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<ParsedSentence>> {
    let mut sentences = Vec::new();
    let mut pending = Pending::default();
    let mut line_no = 0;
    for line in reader.lines() {
        line_no += 1;
        let line = line.map_err(|e| Error::Conllu {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !pending.tokens.is_empty() || !pending.ranges.is_empty() {
                sentences.push(finish(std::mem::take(&mut pending), line_no)?);
            } else {
                pending = Pending::default();
            }
            continue;
        }
        if pending.tokens.is_empty() && pending.ranges.is_empty() && pending.start_line == 0 {
            pending.start_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            parse_comment(comment, &mut pending, line_no)?;
            continue;
        }
        parse_token_line(line, &mut pending, line_no)?;
    }
    if !pending.tokens.is_empty() || !pending.ranges.is_empty() {
        sentences.push(finish(pending, line_no + 1)?);
    }
    Ok(sentences)
}

fn parse_comment(comment: &str, pending: &mut Pending, line: usize) -> Result<()> {
    let Some((key, value)) = comment.split_once('=') else {
        return Ok(());
    };
    match key.trim() {
        "doc_id" => pending.doc_id = Some(value.trim().to_string()),
        "sent_idx" => {
            let idx = value.trim().parse().map_err(|_| Error::Conllu {
                line,
                message: format!("invalid sent_idx `{}`", value.trim()),
            })?;
            pending.sent_idx = Some(idx);
        }
        _ => {}
    }
    Ok(())
}

fn parse_token_line(line: &str, pending: &mut Pending, line_no: usize) -> Result<()> {
    let err = |message: String| Error::Conllu {
        line: line_no,
        message,
    };
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(err(format!(
            "expected 10 tab-separated columns, found {}",
            cols.len()
        )));
    }
    let id = cols[0];
    if id.contains('.') {
        // empty node of an enhanced graph
        return Ok(());
    }
    if let Some((a, b)) = id.split_once('-') {
        let a: usize = a
            .parse()
            .map_err(|_| err(format!("invalid range id `{id}`")))?;
        let b: usize = b
            .parse()
            .map_err(|_| err(format!("invalid range id `{id}`")))?;
        if a == 0 || b < a {
            return Err(err(format!("invalid range `{id}`")));
        }
        if a != pending.tokens.len() + 1 {
            return Err(err(format!(
                "range `{id}` does not start at the next word id {}",
                pending.tokens.len() + 1
            )));
        }
        pending.ranges.push((a, b, line_no));
        return Ok(());
    }
    let id: usize = id.parse().map_err(|_| err(format!("invalid id `{id}`")))?;
    if id != pending.tokens.len() + 1 {
        return Err(err(format!(
            "word id {id} out of sequence, expected {}",
            pending.tokens.len() + 1
        )));
    }
    let head = cols[6]
        .parse()
        .map_err(|_| err(format!("invalid head `{}`", cols[6])))?;
    pending.tokens.push(ConlluToken {
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        head,
        deprel: cols[7].to_string(),
    });
    Ok(())
}

fn finish(pending: Pending, line: usize) -> Result<ParsedSentence> {
    let n = pending.tokens.len();
    let err = |line: usize, message: String| Error::Conllu { line, message };
    for &(a, b, range_line) in &pending.ranges {
        if b > n {
            return Err(err(
                range_line,
                format!("range {a}-{b} declares words beyond the sentence's {n} words"),
            ));
        }
    }
    if n == 0 {
        return Err(err(line, "sentence has no words".into()));
    }
    let mut roots = 0;
    for (i, t) in pending.tokens.iter().enumerate() {
        if t.head > n {
            return Err(err(
                pending.start_line,
                format!("word {} has head {} outside 0..={n}", i + 1, t.head),
            ));
        }
        if t.head == i + 1 {
            return Err(err(
                pending.start_line,
                format!("word {} is its own head", i + 1),
            ));
        }
        if t.head == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(err(
            pending.start_line,
            format!("expected exactly one root, found {roots}"),
        ));
    }
    let source = match (pending.doc_id, pending.sent_idx) {
        (Some(doc_id), Some(sent_idx)) => Some(SentenceRef { doc_id, sent_idx }),
        _ => None,
    };
    Ok(ParsedSentence {
        tokens: pending.tokens,
        source,
    })
}

/// Serializes sentences back to CoNLL-U (unused columns written as `_`).
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        if let Some(src) = &s.source {
            out.push_str(&format!(
                "# doc_id = {}\n# sent_idx = {}\n",
                src.doc_id, src.sent_idx
            ));
        }
        let text: Vec<&str> = s.forms().collect();
        out.push_str(&format!("# text = {}\n", text.join(" ")));
        for (i, t) in s.tokens.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_\n",
                i + 1,
                t.form,
                t.lemma,
                t.upos,
                t.head,
                t.deprel
            ));
        }
        out.push('\n');
    }
    out
}
