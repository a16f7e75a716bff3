//! Measuring gender inequality in court proceedings and auditing the gender
//! bias of the inference models used to measure it.
//!
//! The pipeline runs in stages: [`ingest`] resolves litigant genders and
//! normalizes mentions, [`roletag`] marks perpetrators and victims of
//! unpleasant verbs, [`embed`] trains skip-gram vectors and computes WEAT
//! scores, [`entail`] and [`cloze`] query an external [`backend`], and
//! [`sampling`] drives the annotation loop used to reduce model bias.

pub mod backend;
pub mod cloze;
pub mod embed;
pub mod entail;
pub mod error;
pub mod ingest;
pub mod lexicon;
pub mod roletag;
pub mod sampling;
pub mod synth;
pub mod text;
pub mod verbs;

pub use error::{Error, Result};
