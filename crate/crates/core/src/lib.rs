//! Step-size resolution for mini-batch SGD by gradient-only and
//! function-value line searches, on small sigmoid MLPs.
//!
//! The pieces, bottom-up:
//!
//! - [`net`]: one- and two-hidden-layer sigmoid MLPs, scaled MSE loss, backprop.
//! - [`data`]: CSV datasets, 3:1:1 splits, mini-batch sampling.
//! - [`probe`]: objectives and the directional view `F(alpha)`, `F'(alpha)`.
//! - [`linesearch`]: the [`StepResolver`](linesearch::StepResolver) family and its registry.
//! - [`trainer`]: SGD with a pluggable resolver, per-iteration traces.
//! - [`analysis`]: line scans, local-minimum and sign-change counting, ball estimates.

pub mod analysis;
pub mod data;
pub mod linesearch;
pub mod net;
pub mod probe;
pub mod trainer;
