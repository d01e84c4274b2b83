//! File formats, pipeline drivers and the command-line interface around
//! [`devsent_core`].
//!
//! | format | reader | writer |
//! |---|---|---|
//! | posts CSV `id,post_type,text[,label]` | [`formats::read_posts`] | [`formats::write_posts`] |
//! | token-line corpus | [`formats::read_corpus`] | [`formats::write_corpus`] |
//! | lexicon directory | [`formats::load_lexicon`] | — |
//! | word vectors | [`formats::read_vectors`] | [`formats::write_vectors`] |
//! | schema / model JSON | [`formats::read_json`] | [`formats::write_json`] |
//! | sparse features | [`formats::read_sparse`] | [`formats::write_sparse`] |
//! | annotations CSV | [`formats::read_annotations`] | [`formats::write_annotations`] |

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod report;

pub use devsent_core as core;
pub use error::{Error, Result};
