//! Rated training sequences.
//!
//! ```json
//! { "version": "wbp-ratings-v1",
//!   "examples": [ { "steps": [[1.0, 0.4, 0.7], [0.2, 0.5, 0.1]], "rating": 2.5 },
//!                 { "order": ["m1", "m3"], "rating": 3.0 } ] }
//! ```
//!
//! Ratings are raw `[0, 4]` scores. `order` records need a manifest to turn
//! ids into feature triples.

use serde::{Deserialize, Serialize};
use wbp_core::features::{sequence_features, MaterialSet};
use wbp_core::model::{FeatureSequence, Step};
use wbp_core::training::{TrainingExample, RATING_MAX};

use crate::Failure;

pub const RATINGS_VERSION: &str = "wbp-ratings-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingsDoc {
    pub version: String,
    pub examples: Vec<RatedDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatedDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    pub rating: f64,
}

impl RatingsDoc {
    pub fn from_examples(data: &[TrainingExample<f64>]) -> Self {
        Self {
            version: RATINGS_VERSION.to_string(),
            examples: data
                .iter()
                .map(|ex| RatedDoc {
                    steps: Some(ex.seq.steps().iter().map(|s| s.channels()).collect()),
                    order: None,
                    rating: ex.target * RATING_MAX,
                })
                .collect(),
        }
    }
}

pub fn parse_ratings(
    text: &str,
    set: Option<&MaterialSet>,
    incentive: f64,
) -> Result<Vec<TrainingExample<f64>>, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: RatingsDoc =
        serde::Deserialize::deserialize(de).map_err(|e| Failure::usage(format!("ratings: {e}")))?;
    if doc.version != RATINGS_VERSION {
        return Err(Failure::usage(format!(
            "ratings: version `{}`, expected `{RATINGS_VERSION}`",
            doc.version
        )));
    }
    if doc.examples.is_empty() {
        return Err(Failure::usage("ratings: no examples"));
    }
    doc.examples
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let at = |e: wbp_core::Error| Failure::usage(format!("ratings: examples[{i}]: {e}"));
            let seq = match (&r.steps, &r.order) {
                (Some(steps), None) => FeatureSequence::new(
                    steps.iter().map(|&[d, a, e]| Step::new(d, a, e)).collect(),
                    incentive,
                )
                .map_err(at)?,
                (None, Some(order)) => {
                    let set = set.ok_or_else(|| {
                        Failure::usage(format!("ratings: examples[{i}] uses `order`, which needs --manifest"))
                    })?;
                    sequence_features(order, set, incentive).map_err(at)?
                }
                _ => {
                    return Err(Failure::usage(format!(
                        "ratings: examples[{i}] needs exactly one of `steps` or `order`"
                    )))
                }
            };
            TrainingExample::from_rating(seq, r.rating).map_err(at)
        })
        .collect()
}
