//! Client for external inference backends speaking newline-delimited JSON.
//!
//! A request is `{"id", "task": "nli", "premise", "hypothesis"}` or
//! `{"id", "task": "cloze", "text", "candidates"}`; the backend answers each
//! with a line echoing the id and carrying either `label` (plus optional
//! `scores`) or `probs`. Transports move whole batches; the client splits,
//! retries and reassembles them.

mod mock;
mod transport;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mock::{serve_stdio, ClozePolicy, MockBackend, NliPolicy, NliRule, Responder};
pub use transport::{HttpTransport, InProcessTransport, SubprocessTransport, Transport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entailment" => Ok(Label::Entailment),
            "contradiction" => Ok(Label::Contradiction),
            "neutral" => Ok(Label::Neutral),
            other => Err(Error::InvalidArgument(format!("unknown label `{other}`"))),
        }
    }
}

/// An NLI decision with optional class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<Label, f64>>,
}

impl Verdict {
    pub fn new(label: Label) -> Self {
        Verdict {
            label,
            scores: None,
        }
    }

    /// Scores, when present, sum to 1 within 1e-6 and peak at the label.
    pub fn validate(&self) -> Result<()> {
        let Some(scores) = &self.scores else {
            return Ok(());
        };
        if scores.values().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Protocol("score outside [0, 1]".into()));
        }
        let total: f64 = scores.values().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Protocol(format!("scores sum to {total}, not 1")));
        }
        let best = scores
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(l, p)| (*l, *p))
            .expect("non-empty scores");
        let label_score = scores.get(&self.label).copied().unwrap_or(-1.0);
        if label_score < best.1 {
            return Err(Error::Protocol(format!(
                "label {} does not have the highest score ({} does)",
                self.label, best.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Task {
    Nli {
        premise: String,
        hypothesis: String,
    },
    Cloze {
        text: String,
        candidates: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    #[serde(flatten)]
    pub task: Task,
}

/// One response line. Unknown fields are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<Label, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<BTreeMap<String, f64>>,
}

pub fn encode_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_responses(body: &str) -> Result<Vec<Response>> {
    body.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str::<Response>(l)
                .map_err(|e| Error::Protocol(format!("bad response line `{l}`: {e}")))
        })
        .collect()
}

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

/// Batching, retrying front end over a [`Transport`].
pub struct BackendClient {
    transport: Box<dyn Transport>,
    pub batch_size: usize,
    pub max_attempts: usize,
}

impl fmt::Debug for BackendClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendClient")
            .field("transport", &self.transport.describe())
            .field("batch_size", &self.batch_size)
            .field("max_attempts", &self.max_attempts)
            .finish()
    }
}

impl BackendClient {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        BackendClient {
            transport,
            batch_size: DEFAULT_BATCH_SIZE,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn mock(mock: MockBackend) -> Self {
        Self::new(Box::new(InProcessTransport::new(mock)))
    }

    pub fn describe(&self) -> String {
        self.transport.describe()
    }

    fn exchange_batch(&self, batch: &[Request]) -> Result<Vec<Response>> {
        let mut last = None;
        for attempt in 1..=self.max_attempts.max(1) {
            match self
                .transport
                .exchange(batch)
                .and_then(|r| match_ids(batch, r))
            {
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::warn!(
                        "backend batch of {} failed (attempt {attempt}/{}): {e}",
                        batch.len(),
                        self.max_attempts
                    );
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Sends `tasks` in batches and returns responses in task order.
    pub fn run(&self, tasks: Vec<Task>) -> Result<Vec<Response>> {
        let requests: Vec<Request> = tasks
            .into_iter()
            .enumerate()
            .map(|(i, task)| Request {
                id: format!("q{i}"),
                task,
            })
            .collect();
        let batches: Vec<Vec<Response>> = requests
            .par_chunks(self.batch_size.max(1))
            .map(|chunk| self.exchange_batch(chunk))
            .collect::<Result<_>>()?;
        Ok(batches.into_iter().flatten().collect())
    }

    pub fn nli(&self, pairs: &[(String, String)]) -> Result<Vec<Verdict>> {
        let tasks = pairs
            .iter()
            .map(|(p, h)| Task::Nli {
                premise: p.clone(),
                hypothesis: h.clone(),
            })
            .collect();
        self.run(tasks)?
            .into_iter()
            .map(|r| {
                let label = r
                    .label
                    .ok_or_else(|| Error::Protocol(format!("response `{}` has no label", r.id)))?;
                let v = Verdict {
                    label,
                    scores: r.scores,
                };
                v.validate()?;
                Ok(v)
            })
            .collect()
    }

    pub fn nli_query(&self, premise: &str, hypothesis: &str) -> Result<Verdict> {
        let mut v = self.nli(&[(premise.to_string(), hypothesis.to_string())])?;
        Ok(v.remove(0))
    }

    /// Raw completion probabilities of each candidate at the mask.
    pub fn cloze(&self, items: &[(String, Vec<String>)]) -> Result<Vec<BTreeMap<String, f64>>> {
        let tasks = items
            .iter()
            .map(|(text, candidates)| Task::Cloze {
                text: text.clone(),
                candidates: candidates.clone(),
            })
            .collect();
        self.run(tasks)?
            .into_iter()
            .zip(items)
            .map(|(r, (_, candidates))| {
                let probs = r
                    .probs
                    .ok_or_else(|| Error::Protocol(format!("response `{}` has no probs", r.id)))?;
                for c in candidates {
                    match probs.get(c) {
                        Some(p) if (0.0..=1.0).contains(p) => {}
                        Some(p) => {
                            return Err(Error::Protocol(format!(
                                "probability {p} for `{c}` outside [0, 1]"
                            )))
                        }
                        None => return Err(Error::Protocol(format!("no probability for `{c}`"))),
                    }
                }
                Ok(probs)
            })
            .collect()
    }
}

fn match_ids(batch: &[Request], responses: Vec<Response>) -> Result<Vec<Response>> {
    let mut by_id: HashMap<String, Response> = HashMap::with_capacity(responses.len());
    for r in responses {
        let id = r.id.clone();
        if by_id.insert(id.clone(), r).is_some() {
            return Err(Error::Protocol(format!("duplicate response id `{id}`")));
        }
    }
    let mut out = Vec::with_capacity(batch.len());
    for req in batch {
        out.push(
            by_id
                .remove(&req.id)
                .ok_or_else(|| Error::Protocol(format!("no response for id `{}`", req.id)))?,
        );
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(Error::Protocol(format!("unexpected response id `{extra}`")));
    }
    Ok(out)
}

/// Where to find a backend: `cmd:<program> [args…]`, an `http(s)://` base
/// URL, or `mock:<policy>` where the policy is `symmetric`, `fv-only`,
/// `entail-all`, `entail-none` or a path to a mock JSON file.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Command(Vec<String>),
    Http(String),
    Mock(MockSource),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockSource {
    Named(String),
    File(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(cmd) = s.strip_prefix("cmd:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(Error::InvalidArgument(
                    "backend `cmd:` needs a program".into(),
                ));
            }
            return Ok(BackendSpec::Command(argv));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(BackendSpec::Http(s.trim_end_matches('/').to_string()));
        }
        if let Some(name) = s.strip_prefix("mock:") {
            return Ok(BackendSpec::Mock(if MockBackend::named(name).is_some() {
                MockSource::Named(name.to_string())
            } else {
                MockSource::File(PathBuf::from(name))
            }));
        }
        Err(Error::InvalidArgument(format!(
            "backend `{s}` must start with cmd:, http://, https:// or mock:"
        )))
    }
}

impl BackendSpec {
    pub fn connect(&self) -> Result<BackendClient> {
        Ok(match self {
            BackendSpec::Command(argv) => {
                BackendClient::new(Box::new(SubprocessTransport::new(argv.clone())?))
            }
            BackendSpec::Http(url) => BackendClient::new(Box::new(HttpTransport::new(url))),
            BackendSpec::Mock(MockSource::Named(name)) => {
                BackendClient::mock(MockBackend::named(name).expect("checked when parsed"))
            }
            BackendSpec::Mock(MockSource::File(path)) => {
                BackendClient::mock(MockBackend::load(path)?)
            }
        })
    }
}
