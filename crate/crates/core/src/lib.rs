//! Skill-challenge flow model of assistance and agency, a simulated
//! shooting-game experiment, and the statistics used to analyse it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod flow_plane;
pub mod fulfillment;
pub mod game;
pub mod optimize;
pub mod output;
pub mod perception;
pub mod protocol;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{ModelError, Result};
pub use flow_plane::{FlowBand, PredictionErrors, PsychStateLabel};
pub use fulfillment::{fulfillment, FulfillmentParams};
pub use perception::{PerceivedPoint, PerceptionParams};
pub use rng::Stream;
