//! Sentiment polarity classification for developer-authored text.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the whole algorithmic
//! pipeline: markup stripping and tokenization ([`corpus`]), sentiment lexicon
//! lookup ([`lexicon`]), a lexicon-driven sentence scorer used as baseline
//! ([`baseline`]), word embeddings with polarity prototypes ([`dsm`]), the
//! lexicon/keyword/semantic feature extractors ([`features`]), a linear SVM
//! trained by dual coordinate descent ([`learner`]), and the evaluation and
//! gold-standard construction math ([`evalkit`]).
//!
//! File formats, IO and the command line live in the `devsent` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod corpus;
pub mod dsm;
pub mod evalkit;
pub mod features;
pub mod learner;
pub mod lexicon;
mod polarity;
mod util;

pub use polarity::{ParsePolarityError, Polarity};
