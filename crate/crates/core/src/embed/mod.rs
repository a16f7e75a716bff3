//! Skip-gram word vectors and the WEAT association score.

mod sgns;
mod store;
mod weat;

use std::collections::HashMap;

pub use sgns::{tokenize_lines, train_skipgram, EmbeddingConfig};
pub use store::{load_vectors, read_vectors, save_vectors, write_vectors};
pub use weat::{cosine, inflected_targets, sigma, weat, weat_repeated, WeatResult, WeatSpec};

use crate::error::{Error, Result};

/// A vocabulary with one dense vector per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dimension: usize,
    vectors: Vec<f64>,
    pub config: EmbeddingConfig,
}

impl EmbeddingModel {
    /// Builds a model from `tokens.len() * dimension` row-major values.
    pub fn from_flat(
        tokens: Vec<String>,
        dimension: usize,
        vectors: Vec<f64>,
        config: EmbeddingConfig,
    ) -> Result<Self> {
        if dimension == 0 || vectors.len() != tokens.len() * dimension {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill {} rows of dimension {dimension}",
                vectors.len(),
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token `{t}`")));
            }
        }
        for (t, row) in tokens.iter().zip(vectors.chunks(dimension)) {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "vector for `{t}` is not finite"
                )));
            }
        }
        Ok(EmbeddingModel {
            tokens,
            index,
            dimension,
            vectors,
            config,
        })
    }

    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dimension = rows.first().map_or(0, |(_, v)| v.len());
        if rows.iter().any(|(_, v)| v.len() != dimension) {
            return Err(Error::InvalidArgument(
                "rows have different dimensions".into(),
            ));
        }
        let (tokens, values): (Vec<String>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        let config = EmbeddingConfig {
            dimension,
            ..Default::default()
        };
        Self::from_flat(tokens, dimension, values.concat(), config)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in row order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Result<&[f64]> {
        let i = *self
            .index
            .get(token)
            .ok_or_else(|| Error::OutOfVocabulary(token.to_string()))?;
        Ok(&self.vectors[i * self.dimension..(i + 1) * self.dimension])
    }

    /// Multiplies every vector by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|x| *x *= factor);
        out
    }
}
