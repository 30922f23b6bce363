//! Detection of software-release "micro-events" in forum message streams.
//!
//! Messages are bucketed into labeled 7-day time steps, described by LDA
//! topic proportions and lexicon sentiment, pooled per step, and classified
//! with logistic regression, random forests and gradient-boosted trees.
//! Performance is judged by mean PR-AUC with permutation tests; the
//! logistic model additionally gets a battery of goodness-of-fit
//! diagnostics. [`synthlab`] reproduces the detectability-threshold
//! experiment on generated corpora.

pub mod corpus;
pub mod error;
pub mod features;
pub mod learners;
pub mod matrix;
pub mod runner;
pub mod seed;
pub mod sentiment;
pub mod stats;
pub mod synthlab;
pub mod textprep;
pub mod timegrid;
pub mod topics;
pub mod tuning;

pub use corpus::{EventKind, Message, ReleaseEvent};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use timegrid::{StepDataset, StepDesign, StepLabel, TimeStep};
