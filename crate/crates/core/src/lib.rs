//! Cognate vs. false friend detection.
//!
//! Building blocks for a classification pipeline over cross-lingual word
//! pairs: dataset handling ([`corpus`]), orthographic similarity
//! ([`lexsim`]), phonetic vectors ([`phonetics`]), cross-lingual embeddings
//! and orthogonal alignment ([`xling`]), eye-tracking features and
//! significance tests ([`gaze`], [`stats`]), from-scratch learners and
//! evaluation ([`learn`]), and the experiment orchestrator ([`pipeline`]).

pub mod corpus;
pub mod error;
pub mod gaze;
pub mod learn;
pub mod lexsim;
pub mod phonetics;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod xling;

pub use error::{Error, Result};
