//! Identify the sending financial institution of a money transfer from its
//! description string.
//!
//! Transfer descriptions are produced by deterministic formatter programs:
//! the sender renders a template over the transaction attributes, and the
//! receiver applies a light transform (prefix, truncation, casing) before the
//! string is observed. This crate provides:
//!
//! - [`corpus`] — seeded synthetic corpora built from simulated sender
//!   templates and receiver transforms over a head-heavy institution
//!   population, plus CSV/JSON persistence.
//! - [`textproc`] — digit masking, tokenization, capped vocabularies,
//!   fixed-length encoding, hand-crafted string features, bag-of-tokens.
//! - [`linmodel`] — multinomial logistic regression over bag-of-tokens
//!   (optionally with the dense features) and the majority baseline.
//! - [`nn`] — from-scratch LSTM/GRU classifiers: embedding, one recurrent
//!   layer, two dense layers, softmax, backpropagation through time, Adam.
//! - [`eval`] — train/test splitting, the three experiment harnesses
//!   (class-count sweep, learning curve, token-distribution clustering),
//!   and report files.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod linmodel;
pub mod math;
pub mod nn;
pub mod textproc;

pub use error::{Error, Result};
