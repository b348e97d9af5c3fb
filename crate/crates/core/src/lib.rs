//! Skeletal-keypoint yoga pose and hand-mudra recognition.
//!
//! Frames of 2-D landmarks are turned into joint-angle feature vectors
//! ([`geometry`]), classified by one of the models in [`classifiers`], and
//! checked against per-pose reference angles by [`correction`]. The
//! [`session`] module serves all of this over a line-delimited stream and
//! keeps per-day activity logs.

pub mod skeleton;
pub mod geometry;
pub mod dataset;
pub mod classifiers;
pub mod metrics;
pub mod correction;
pub mod session;
pub mod benchmark;
