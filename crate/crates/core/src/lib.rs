//! Core algorithms for a graph-refined embedding topic model.
//!
//! Documents are turned into TF-IDF-weighted word-embedding vectors, linked
//! into a cosine KNN graph, refined by a small graph convolutional network
//! trained with a joint hinge + contrastive loss, and decomposed with
//! non-negative matrix factorization. Topic words are recovered from the
//! documents that load most strongly on each factor. The crate also carries
//! the NPMI, C_V, topic diversity and inverted RBO evaluation measures and a
//! classical NMF-on-TF-IDF baseline.
//!
//! Everything here is `no_std` + `alloc`; file formats, IO and the CLI live
//! in the `ghtm` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod factorize;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod seed;
pub mod vectorize;

mod math;

pub use crate::error::{Error, Result};
pub use crate::linalg::{CsrMatrix, Matrix};
