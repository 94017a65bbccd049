//! Predicting metamorphic relations of matrix functions from their
//! control-flow graphs.
//!
//! The pipeline: functions become [`cfg::Cfg`]s (read from graph files or
//! compiled from the bundled mini-language), a random walk graph kernel
//! compares them, and a precomputed-kernel SVM predicts whether each function
//! satisfies the Permutative, Additive and Multiplicative relations. Labels
//! come from a metamorphic testing harness that executes the relations.

pub mod cfg;
pub mod eval;
pub mod corpus;
pub mod kernel;
pub mod matrix;
pub mod minilang;
pub mod mt;
pub mod svm;
