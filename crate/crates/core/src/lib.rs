//! Synthetic derived languages and cross-lingual transfer analysis.
//!
//! The crate builds counterpart languages from a corpus by inverting,
//! permuting, transliterating or syntactically reordering its sentences,
//! carries downstream task datasets through the same transformations, and
//! computes the quantities used to compare an original language with its
//! derived twin: sub-word overlap, embedding alignment, score differences
//! between bilingual and monolingual fine-tuning, and rank correlation.

pub mod analysis;
pub mod bpe;
pub mod conllu;
pub mod corpus;
pub mod datasets;
pub mod embedding;
pub mod ordering;
pub mod rng;
pub mod sgns;
pub mod transform;
pub mod translit;

pub use corpus::{Corpus, Sentence};
pub use transform::{TransformKind, TransformSpec, Transformer};
