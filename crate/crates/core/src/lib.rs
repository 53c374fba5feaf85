//! Alignment and comparison of representation spaces produced by
//! independently trained language models.
//!
//! The crate fits orthogonal maps between embedding spaces (word,
//! contextual word and sentence level), evaluates them by translation and
//! sentence retrieval, profiles layer similarity with linear CKA and builds
//! code-switched corpora from bilingual lexicons.

// NaN must fail threshold checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anchors;
pub mod cka;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod preprocess;
pub mod procrustes;
pub mod retrieval;

pub use error::{Error, Result};
