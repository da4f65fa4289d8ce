//! Offline toolkit for web-application directory discovery research.
//!
//! Reconstructs filesystem trees from crawl data, trains a word-level LSTM
//! language model over directory sequences, and simulates four directory
//! brute-forcing strategies (breadth-first, depth-first, weighted-tree
//! probabilistic, and language-model driven) against reconstructed site
//! trees under a request budget. No live attacks: the only network code is
//! the opt-in crawl-index client used to fetch historical crawl records.

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod fstree;
pub mod lm;
pub mod strategies;
pub mod url_model;
