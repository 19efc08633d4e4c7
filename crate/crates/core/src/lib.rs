//! Distributional nearest neighbors (DNN) regression and its two-scale
//! bias-corrected variant, with stratified bootstrap inference for
//! heterogeneous treatment effects.
//!
//! The DNN estimator averages 1-nearest-neighbor predictions over every
//! size-`s` subsample; sorting the sample by distance to the query point
//! reduces it to a weighted average of ordered responses with closed-form
//! weights. Combining two scales cancels the leading `s^(-2/d)` bias term.
//!
//! ```
//! use dnn::{data::{Dataset, QueryPoint}, two_scale::two_scale_estimate};
//!
//! let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0]).collect();
//! let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0]).collect();
//! let data = Dataset::from_rows(&rows, y).unwrap();
//! let x = QueryPoint::new(vec![0.5]).unwrap();
//! let est = two_scale_estimate(&data, &x, 3, 1).unwrap();
//! assert!((est - 1.0).abs() < 0.1);
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod neighbors;
pub mod rng;
pub mod screening;
pub mod simlab;
pub mod theory;
pub mod two_scale;

pub use error::{Error, Result};
