//! Learnable Wundt-curve persuasiveness scoring and clustering-based
//! storyline selection for promotional videos.
//!
//! The numeric core ([`model`], [`training`], [`clustering`], [`sequencer`],
//! [`oracle`]) is generic over a [`Scalar`] (`f32` or `f64`). Pixel work in
//! [`features`] is done in `f64`. The aliases at the bottom of this file pin
//! the common `f64` instantiation.

// `!(a > b)` is used deliberately so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod error;
pub mod features;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod seed;
pub mod sequencer;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LwcModel = model::LwcModel<f64>;
pub type LwcModelF32 = model::LwcModel<f32>;
pub type WundtParams = model::WundtParams<f64>;
pub type AccumulatorParams = model::AccumulatorParams<f64>;
pub type FeatureSequence = model::FeatureSequence<f64>;
pub type Step = model::Step<f64>;
pub type TrainingExample = training::TrainingExample<f64>;
pub type TrainConfig = training::TrainConfig<f64>;
pub type GradientVector = training::GradientVector<f64>;
pub type ClusterAssignment = clustering::ClusterAssignment<f64>;
pub type BestSequenceRow = sequencer::BestSequenceRow<f64>;
pub type KnapsackSolution = sequencer::KnapsackSolution<f64>;
pub type Storyline = sequencer::Storyline<f64>;
pub type RevenueInput = oracle::RevenueInput<f64>;
