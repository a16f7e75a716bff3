use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backend::Label;
use crate::error::{Error, Result};

use super::kappa::{cohen_kappa_labels, Kappa};
use super::InconsistentPair;

pub const LABELS_FILE: &str = "labels.jsonl";
pub const ADJUDICATIONS_FILE: &str = "adjudications.jsonl";
pub const POOL_FILE: &str = "pool.jsonl";

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemSide {
    Original,
    Flipped,
}

/// One premise/hypothesis pair shown to annotators. Each inconsistent pair
/// yields two items, the original and its flip, linked by `partner`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub item_id: String,
    pub pair_id: String,
    pub iteration: u32,
    pub verb: String,
    pub premise: String,
    pub hypothesis: String,
    pub side: ItemSide,
    pub partner: String,
}

impl AnnotationItem {
    pub fn from_pair(pair: &InconsistentPair, iteration: u32) -> [AnnotationItem; 2] {
        let id = |side: &str| format!("{}-{}-{side}", iteration, pair.pair_id);
        let (o, f) = (id("o"), id("f"));
        [
            AnnotationItem {
                item_id: o.clone(),
                pair_id: pair.pair_id.clone(),
                iteration,
                verb: pair.verb.clone(),
                premise: pair.premise.clone(),
                hypothesis: pair.hypothesis.clone(),
                side: ItemSide::Original,
                partner: f.clone(),
            },
            AnnotationItem {
                item_id: f,
                pair_id: pair.pair_id.clone(),
                iteration,
                verb: pair.verb.clone(),
                premise: pair.flipped_premise.clone(),
                hypothesis: pair.flipped_hypothesis.clone(),
                side: ItemSide::Flipped,
                partner: o,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub annotator_id: String,
    pub label: Label,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationRecord {
    pub item_id: String,
    pub final_label: Label,
    pub resolved_by: String,
    pub timestamp: DateTime<Utc>,
}

/// One line of a training export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub item_id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    pub verb: String,
    pub iteration: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub item_id: String,
    pub labels: BTreeMap<String, Label>,
    pub adjudicated: Option<Label>,
}

/// Stops after `max_iterations` rounds or once the bias score improves by
/// no more than `min_improvement`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationPolicy {
    pub max_iterations: u32,
    pub min_improvement: f64,
}

impl Default for IterationPolicy {
    fn default() -> Self {
        IterationPolicy {
            max_iterations: 3,
            min_improvement: 0.01,
        }
    }
}

impl IterationPolicy {
    /// `history` holds the bias score before the first round followed by
    /// the score after each completed round.
    pub fn should_continue(&self, history: &[f64]) -> bool {
        let rounds = history.len().saturating_sub(1);
        if rounds >= self.max_iterations as usize {
            return false;
        }
        match history {
            [.., prev, last] => prev - last > self.min_improvement,
            _ => true,
        }
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut body = String::new();
    for item in items {
        body.push_str(&serde_json::to_string(item)?);
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                location: format!("{}:{}", path.display(), i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

fn append_line<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    let line = serde_json::to_string(record)? + "\n";
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(line.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

fn batch_file(iteration: u32) -> String {
    format!("batch_{iteration}.jsonl")
}

/// Append-only journal of batches, labels and adjudications for exactly two
/// annotators. State is rebuilt from the files on open; the latest label of
/// an annotator for an item wins and earlier ones stay in the journal.
pub struct AnnotationStore {
    dir: PathBuf,
    annotators: [String; 2],
    items: Vec<AnnotationItem>,
    index: HashMap<String, usize>,
    labels: BTreeMap<(String, String), AnnotationRecord>,
    adjudications: BTreeMap<String, AdjudicationRecord>,
    clock: Clock,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore")
            .field("dir", &self.dir)
            .field("annotators", &self.annotators)
            .field("items", &self.items.len())
            .finish()
    }
}

impl AnnotationStore {
    pub fn open(dir: &Path, annotators: [String; 2]) -> Result<Self> {
        Self::open_with_clock(dir, annotators, Arc::new(Utc::now))
    }

    pub fn open_with_clock(dir: &Path, annotators: [String; 2], clock: Clock) -> Result<Self> {
        if annotators[0].is_empty() || annotators[1].is_empty() || annotators[0] == annotators[1] {
            return Err(Error::InvalidArgument(
                "two distinct, non-empty annotator ids are required".into(),
            ));
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut store = AnnotationStore {
            dir: dir.to_path_buf(),
            annotators,
            items: Vec::new(),
            index: HashMap::new(),
            labels: BTreeMap::new(),
            adjudications: BTreeMap::new(),
            clock,
        };
        let mut batches: Vec<(u32, PathBuf)> = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            if let Some(iter) = name
                .strip_prefix("batch_")
                .and_then(|n| n.strip_suffix(".jsonl"))
            {
                if let Ok(i) = iter.parse() {
                    batches.push((i, path));
                }
            }
        }
        batches.sort();
        for (_, path) in batches {
            for item in read_jsonl::<AnnotationItem>(&path)? {
                store.insert_item(item)?;
            }
        }
        let labels_path = dir.join(LABELS_FILE);
        if labels_path.exists() {
            for (i, r) in read_jsonl::<AnnotationRecord>(&labels_path)?
                .into_iter()
                .enumerate()
            {
                store
                    .check(&r.item_id, &r.annotator_id)
                    .map_err(|e| Error::MalformedRecord {
                        location: format!("{}:{}", labels_path.display(), i + 1),
                        message: e.to_string(),
                    })?;
                store
                    .labels
                    .insert((r.item_id.clone(), r.annotator_id.clone()), r);
            }
        }
        let adj_path = dir.join(ADJUDICATIONS_FILE);
        if adj_path.exists() {
            for r in read_jsonl::<AdjudicationRecord>(&adj_path)? {
                if !store.index.contains_key(&r.item_id) {
                    return Err(Error::UnknownItem(r.item_id));
                }
                store.adjudications.insert(r.item_id.clone(), r);
            }
        }
        Ok(store)
    }

    fn insert_item(&mut self, item: AnnotationItem) -> Result<()> {
        if self.index.contains_key(&item.item_id) {
            return Err(Error::InvalidArgument(format!(
                "duplicate item `{}`",
                item.item_id
            )));
        }
        self.index.insert(item.item_id.clone(), self.items.len());
        self.items.push(item);
        Ok(())
    }

    fn check(&self, item_id: &str, annotator: &str) -> Result<()> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return Err(Error::UnknownAnnotator(annotator.to_string()));
        }
        if !self.index.contains_key(item_id) {
            return Err(Error::UnknownItem(item_id.to_string()));
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn annotators(&self) -> &[String; 2] {
        &self.annotators
    }

    pub fn iterations(&self) -> Vec<u32> {
        let mut its: Vec<u32> = self.items.iter().map(|i| i.iteration).collect();
        its.dedup();
        its
    }

    /// Queues both sides of each pair as iteration `iteration` and writes
    /// `batch_<iteration>.jsonl`.
    pub fn add_batch(
        &mut self,
        iteration: u32,
        pairs: &[InconsistentPair],
    ) -> Result<Vec<AnnotationItem>> {
        if self.items.iter().any(|i| i.iteration == iteration) {
            return Err(Error::InvalidArgument(format!(
                "iteration {iteration} already has a batch"
            )));
        }
        if let Some(last) = self.items.last() {
            if iteration < last.iteration {
                return Err(Error::InvalidArgument(format!(
                    "iteration {iteration} is older than the latest batch ({})",
                    last.iteration
                )));
            }
        }
        let mut new: Vec<AnnotationItem> = Vec::with_capacity(2 * pairs.len());
        for pair in pairs {
            for item in AnnotationItem::from_pair(pair, iteration) {
                if self.index.contains_key(&item.item_id)
                    || new.iter().any(|n| n.item_id == item.item_id)
                {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate item `{}`",
                        item.item_id
                    )));
                }
                new.push(item);
            }
        }
        write_jsonl(&self.dir.join(batch_file(iteration)), &new)?;
        for item in &new {
            self.insert_item(item.clone())?;
        }
        Ok(new)
    }

    pub fn item(&self, item_id: &str) -> Result<&AnnotationItem> {
        self.index
            .get(item_id)
            .map(|&i| &self.items[i])
            .ok_or_else(|| Error::UnknownItem(item_id.to_string()))
    }

    pub fn items(&self, iteration: Option<u32>) -> impl Iterator<Item = &AnnotationItem> {
        self.items
            .iter()
            .filter(move |i| iteration.is_none_or(|it| i.iteration == it))
    }

    pub fn record_label(
        &mut self,
        item_id: &str,
        annotator: &str,
        label: Label,
    ) -> Result<AnnotationRecord> {
        self.check(item_id, annotator)?;
        let record = AnnotationRecord {
            item_id: item_id.to_string(),
            annotator_id: annotator.to_string(),
            label,
            timestamp: (self.clock)(),
        };
        append_line(&self.dir.join(LABELS_FILE), &record)?;
        self.labels
            .insert((item_id.to_string(), annotator.to_string()), record.clone());
        Ok(record)
    }

    pub fn label(&self, item_id: &str, annotator: &str) -> Option<&AnnotationRecord> {
        self.labels
            .get(&(item_id.to_string(), annotator.to_string()))
    }

    /// First item, in batch order, the annotator has not labeled yet.
    pub fn next_item(
        &self,
        annotator: &str,
        iteration: Option<u32>,
    ) -> Result<Option<&AnnotationItem>> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return Err(Error::UnknownAnnotator(annotator.to_string()));
        }
        Ok(self
            .items(iteration)
            .find(|i| self.label(&i.item_id, annotator).is_none()))
    }

    pub fn record_adjudication(
        &mut self,
        item_id: &str,
        final_label: Label,
        resolved_by: &str,
    ) -> Result<AdjudicationRecord> {
        self.item(item_id)?;
        if resolved_by.is_empty() {
            return Err(Error::InvalidArgument(
                "adjudication needs a resolver id".into(),
            ));
        }
        let record = AdjudicationRecord {
            item_id: item_id.to_string(),
            final_label,
            resolved_by: resolved_by.to_string(),
            timestamp: (self.clock)(),
        };
        append_line(&self.dir.join(ADJUDICATIONS_FILE), &record)?;
        self.adjudications
            .insert(item_id.to_string(), record.clone());
        Ok(record)
    }

    fn both_labels(&self, item_id: &str) -> Option<(Label, Label)> {
        let a = self.label(item_id, &self.annotators[0])?;
        let b = self.label(item_id, &self.annotators[1])?;
        Some((a.label, b.label))
    }

    pub fn disagreements(&self, iteration: Option<u32>) -> Vec<Disagreement> {
        self.items(iteration)
            .filter_map(|item| {
                let (a, b) = self.both_labels(&item.item_id)?;
                (a != b).then(|| Disagreement {
                    item_id: item.item_id.clone(),
                    labels: BTreeMap::from([
                        (self.annotators[0].clone(), a),
                        (self.annotators[1].clone(), b),
                    ]),
                    adjudicated: self.adjudications.get(&item.item_id).map(|r| r.final_label),
                })
            })
            .collect()
    }

    /// Agreement between the two annotators on the doubly-labeled items of
    /// `iteration`.
    pub fn kappa(&self, iteration: u32) -> Result<Kappa> {
        let (a, b): (Vec<Label>, Vec<Label>) = self
            .items(Some(iteration))
            .filter_map(|i| self.both_labels(&i.item_id))
            .unzip();
        if a.is_empty() {
            return Err(Error::NoDoubleAnnotations(iteration));
        }
        cohen_kappa_labels(&a, &b)
    }

    /// Adjudication if any, else the label both annotators agree on.
    pub fn final_label(&self, item_id: &str) -> Option<Label> {
        if let Some(r) = self.adjudications.get(item_id) {
            return Some(r.final_label);
        }
        match self.both_labels(item_id)? {
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }

    /// One record per item of `iteration`, sorted by item id. Every item
    /// needs both labels and every disagreement an adjudication.
    pub fn export_training_set(&self, iteration: u32) -> Result<Vec<ExportRecord>> {
        let mut items: Vec<&AnnotationItem> = self.items(Some(iteration)).collect();
        if items.is_empty() {
            return Err(Error::EmptyCorpus(format!(
                "no items in iteration {iteration}"
            )));
        }
        items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        let unlabeled: Vec<String> = items
            .iter()
            .filter(|i| self.both_labels(&i.item_id).is_none())
            .map(|i| i.item_id.clone())
            .collect();
        if !unlabeled.is_empty() {
            return Err(Error::Unlabeled(unlabeled));
        }
        let unresolved: Vec<String> = items
            .iter()
            .filter(|i| self.final_label(&i.item_id).is_none())
            .map(|i| i.item_id.clone())
            .collect();
        if !unresolved.is_empty() {
            return Err(Error::Unadjudicated(unresolved));
        }
        Ok(items
            .into_iter()
            .map(|i| ExportRecord {
                item_id: i.item_id.clone(),
                premise: i.premise.clone(),
                hypothesis: i.hypothesis.clone(),
                label: self.final_label(&i.item_id).expect("checked"),
                verb: i.verb.clone(),
                iteration,
            })
            .collect())
    }

    /// Writes `train_export_<iteration>.jsonl` and returns its path.
    pub fn write_export(&self, iteration: u32) -> Result<PathBuf> {
        let records = self.export_training_set(iteration)?;
        let path = self.dir.join(format!("train_export_{iteration}.jsonl"));
        write_jsonl(&path, &records)?;
        Ok(path)
    }
}
