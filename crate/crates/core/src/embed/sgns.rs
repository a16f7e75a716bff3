use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::EmbeddingModel;

fn default_dimension() -> usize {
    100
}
fn default_window() -> usize {
    5
}
fn default_negative() -> usize {
    5
}
fn default_epochs() -> usize {
    5
}
fn default_min_count() -> usize {
    5
}
fn default_learning_rate() -> f64 {
    0.025
}
fn default_subsample() -> f64 {
    1e-3
}
fn default_buckets() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_negative")]
    pub negative_samples: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Character n-gram lengths `(min_n, max_n)`; `None` trains plain words.
    #[serde(default)]
    pub subword_ngrams: Option<(usize, usize)>,
    #[serde(default = "default_buckets")]
    pub subword_buckets: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Frequent-word downsampling threshold; 0 disables it.
    #[serde(default = "default_subsample")]
    pub subsample: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dimension: default_dimension(),
            window: default_window(),
            negative_samples: default_negative(),
            epochs: default_epochs(),
            min_count: default_min_count(),
            seed: 0,
            subword_ngrams: None,
            subword_buckets: default_buckets(),
            learning_rate: default_learning_rate(),
            subsample: default_subsample(),
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dimension < 2 {
            return bad("dimension must be at least 2");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.min_count < 1 {
            return bad("min_count must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.subsample.is_nan() || self.subsample < 0.0 {
            return bad("subsample must be non-negative");
        }
        if let Some((lo, hi)) = self.subword_ngrams {
            if lo < 1 || hi < lo {
                return bad("subword_ngrams must satisfy 1 <= min_n <= max_n");
            }
            if self.subword_buckets < 1 {
                return bad("subword_buckets must be positive");
            }
        }
        Ok(())
    }
}

/// Whitespace tokenization of one sentence per line, lowercased.
pub fn tokenize_lines(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| {
            l.split_whitespace()
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

/// Tokens with count at least `min_count`, most frequent first, ties by token.
fn build_vocab(corpus: &[Vec<String>], min_count: usize) -> Vec<(String, u64)> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in corpus {
        for t in s {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count as u64)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    vocab
}

const UNIGRAM_TABLE: usize = 1_000_000;
const UNIGRAM_POWER: f64 = 0.75;

fn unigram_table(counts: &[u64]) -> Vec<u32> {
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64).powf(UNIGRAM_POWER))
        .collect();
    let total: f64 = weights.iter().sum();
    let size = UNIGRAM_TABLE.max(counts.len());
    let mut table = Vec::with_capacity(size);
    let mut word = 0;
    let mut cumulative = weights[0] / total;
    for i in 0..size {
        table.push(word as u32);
        if (i + 1) as f64 / size as f64 > cumulative && word + 1 < counts.len() {
            word += 1;
            cumulative += weights[word] / total;
        }
    }
    table
}

fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 2_166_136_261;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(16_777_619);
    }
    h
}

/// Hashed character n-grams of `<word>` with lengths in `min_n..=max_n`.
fn subword_ids(word: &str, min_n: usize, max_n: usize, buckets: usize) -> Vec<usize> {
    let chars: Vec<char> = format!("<{word}>").chars().collect();
    let mut ids = Vec::new();
    for n in min_n..=max_n {
        if n > chars.len() {
            break;
        }
        for start in 0..=chars.len() - n {
            if n == chars.len() {
                // the whole bracketed word is already represented by its own row
                continue;
            }
            let gram: String = chars[start..start + n].iter().collect();
            ids.push(fnv1a(gram.as_bytes()) as usize % buckets);
        }
    }
    ids
}

fn sigmoid(x: f32) -> f32 {
    if x > 6.0 {
        1.0
    } else if x < -6.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// Skip-gram with negative sampling on a single thread.
///
/// The result depends only on the corpus and `config` (including its seed).
pub fn train_skipgram(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus("no tokens to train on".into()));
    }
    let vocab = build_vocab(corpus, config.min_count);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    let index: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (t.as_str(), i as u32))
        .collect();
    let sentences: Vec<Vec<u32>> = corpus
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();
    let counts: Vec<u64> = vocab.iter().map(|(_, c)| *c).collect();
    let total_words: u64 = counts.iter().sum();

    let v = vocab.len();
    let d = config.dimension;
    let components: Vec<Vec<usize>> = match config.subword_ngrams {
        None => (0..v).map(|i| vec![i]).collect(),
        Some((lo, hi)) => vocab
            .iter()
            .enumerate()
            .map(|(i, (t, _))| {
                let mut c = vec![i];
                c.extend(
                    subword_ids(t, lo, hi, config.subword_buckets)
                        .into_iter()
                        .map(|b| v + b),
                );
                c
            })
            .collect(),
    };
    let input_rows = match config.subword_ngrams {
        None => v,
        Some(_) => v + config.subword_buckets,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut syn0: Vec<f32> = (0..input_rows * d)
        .map(|_| (rng.gen::<f32>() - 0.5) / d as f32)
        .collect();
    let mut syn1 = vec![0f32; v * d];
    let table = unigram_table(&counts);

    let keep_prob: Vec<f32> = counts
        .iter()
        .map(|&c| {
            if config.subsample <= 0.0 {
                return 1.0;
            }
            let threshold = config.subsample * total_words as f64;
            let f = c as f64;
            (((f / threshold).sqrt() + 1.0) * threshold / f).min(1.0) as f32
        })
        .collect();

    let alpha0 = config.learning_rate as f32;
    let planned = (config.epochs as u64 * total_words).max(1) as f32;
    let mut processed: u64 = 0;
    let mut hidden = vec![0f32; d];
    let mut grad = vec![0f32; d];
    let mut kept: Vec<u32> = Vec::new();

    for _ in 0..config.epochs {
        for sentence in &sentences {
            processed += sentence.len() as u64;
            kept.clear();
            for &w in sentence {
                if keep_prob[w as usize] >= 1.0 || rng.gen::<f32>() < keep_prob[w as usize] {
                    kept.push(w);
                }
            }
            let alpha = (alpha0 * (1.0 - processed as f32 / (planned + 1.0))).max(alpha0 * 1e-4);
            for (pos, &center) in kept.iter().enumerate() {
                let reduced = rng.gen_range(0..config.window);
                let span = config.window - reduced;
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept.len() - 1);
                let rows = &components[center as usize];
                let scale = 1.0 / rows.len() as f32;
                for (ctx_pos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    hidden.iter_mut().for_each(|h| *h = 0.0);
                    for &r in rows {
                        for (h, x) in hidden.iter_mut().zip(&syn0[r * d..(r + 1) * d]) {
                            *h += x;
                        }
                    }
                    if rows.len() > 1 {
                        hidden.iter_mut().for_each(|h| *h *= scale);
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=config.negative_samples {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let t = table[rng.gen_range(0..table.len())];
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut syn1[target as usize * d..(target as usize + 1) * d];
                        let dot: f32 = hidden.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(dot)) * alpha;
                        for ((gr, o), h) in grad.iter_mut().zip(out.iter_mut()).zip(&hidden) {
                            *gr += g * *o;
                            *o += g * h;
                        }
                    }
                    for &r in rows {
                        for (x, g) in syn0[r * d..(r + 1) * d].iter_mut().zip(&grad) {
                            *x += g * scale;
                        }
                    }
                }
            }
        }
    }

    let mut vectors = Vec::with_capacity(v * d);
    for rows in &components {
        let mut acc = vec![0f64; d];
        for &r in rows {
            for (a, x) in acc.iter_mut().zip(&syn0[r * d..(r + 1) * d]) {
                *a += *x as f64;
            }
        }
        let n = rows.len() as f64;
        vectors.extend(acc.into_iter().map(|a| a / n));
    }
    let tokens: Vec<String> = vocab.into_iter().map(|(t, _)| t).collect();
    EmbeddingModel::from_flat(tokens, d, vectors, config.clone())
}
