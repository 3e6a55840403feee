//! Weakly-supervised channel charting in real-world coordinates.
//!
//! The crate covers the full desk-scale experiment loop for multipoint
//! SIMO-OFDM systems:
//!
//! - [`scenario`]: deployment geometry (UE grid, trajectory timestamps,
//!   access-point layout) and the train/test split;
//! - [`chansim`]: a parametric multipath channel simulator producing
//!   frequency-domain CSI tensors with distance-dependent power;
//! - [`csi_features`]: delay-domain magnitude feature extraction and
//!   per-AP relative powers;
//! - [`neural_chart`]: a fully-connected chart network with manual
//!   forward/backward passes and an Adam optimizer;
//! - [`objectives`]: the five training losses (triplet, bilateration,
//!   combined, MSE, triplet + partial MSE) and AP-pair diagnostics;
//! - [`chart_metrics`]: latent-space quality metrics (trustworthiness,
//!   continuity, Kruskal stress, Rajski distance) and positioning errors;
//! - [`runner`]: experiment orchestration behind the `chanchart` CLI.

pub mod chansim;
pub mod chart_metrics;
pub mod config;
pub mod csi_features;
pub mod error;
pub mod gradcheck;
pub mod neural_chart;
pub mod objectives;
pub mod plot;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod storage;
pub mod train;

pub use error::{Error, Result};
