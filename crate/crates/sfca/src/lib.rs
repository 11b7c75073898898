//! Segmented functional classification analysis.
//!
//! Turns scalar-on-function prediction problems whose outcome lives in the
//! predictor's time domain into balanced binary classification problems:
//! trajectories are discretised into day segments, stacked wide-to-tall,
//! outcomes thresholded into boolean segment labels, learned with tree
//! ensembles or penalized linear models, and per-segment scores decoded back
//! into continuous event times. A LOOCV harness benchmarks the transformed
//! methods against untransformed regression baselines.

pub mod config;
pub mod dct;
pub mod decode;
pub mod eval;
pub mod error;
pub mod features;
pub mod grid;
pub mod io;
pub mod learners;
pub mod report;
pub mod smooth;
pub mod spline;
pub mod synth;
pub mod trajectory;
pub mod transform;
pub mod wavelet;

pub use error::{Result, SfcaError};
pub use grid::{Dow, SegmentGrid};
