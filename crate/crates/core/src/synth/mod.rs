//! Deterministic synthetic data used by the fixtures and the demo pipeline.

mod divorce;

pub use divorce::{
    bundled_corpus, divorce_corpus, render_parse, write_corpus, SyntheticCorpus, CORPUS_FILE,
    PARSES_FILE, SYNTHETIC_DOCUMENTS, SYNTHETIC_SEED,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sentences drawn from one of two disjoint token communities (`a0…` and
/// `b0…`), so tokens only co-occur with their own community.
pub fn two_community_corpus(
    community_size: usize,
    sentences: usize,
    sentence_len: usize,
    seed: u64,
) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let a: Vec<String> = (0..community_size).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..community_size).map(|i| format!("b{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus = (0..sentences)
        .map(|i| {
            let pool = if i % 2 == 0 { &a } else { &b };
            (0..sentence_len)
                .map(|_| pool.choose(&mut rng).unwrap().clone())
                .collect()
        })
        .collect();
    (a, b, corpus)
}
