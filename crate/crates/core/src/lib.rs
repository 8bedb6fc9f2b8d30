//! Hiring games between firms that rank candidates with a shared algorithm
//! or with independent human evaluations.
//!
//! Candidates are indexed from 0 by decreasing value internally; anything
//! shown to a user is 1-based.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod game;
pub mod models;
pub mod output;
mod quad;
pub mod reproduce;
pub mod sequential;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use models::{DiscreteNoise, Family, MallowsModel, Noise, RankingModel};
pub use types::{CandidateDistribution, CandidatePool, CandidateSet, PartialRanking, Permutation};
