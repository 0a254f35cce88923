//! Translated-vs-original text classification with lexical and
//! unlexicalized syntactic features.
//!
//! The pipeline reads pre-parsed documents ([`corpus`]), extracts feature
//! counts ([`features`]), ranks features by information gain
//! ([`selection`]), and runs genre-stratified cross-validation with a linear
//! SVM ([`classify`]). [`treequery`] searches corpora for tree fragments and
//! [`synth`] generates synthetic two-class corpora from a pair of PCFGs.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod features;
pub mod selection;
pub mod synth;
pub mod treequery;
