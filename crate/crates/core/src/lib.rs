//! Train, evaluate and compare semantic code-clone detectors on functionalities
//! absent from their training data.

pub mod cli;
pub mod contrastive;
pub mod corpus;
pub mod encoder;
pub mod llmclient;
pub mod error;
pub mod protocols;
pub mod rng;

pub use error::{Error, Result};
