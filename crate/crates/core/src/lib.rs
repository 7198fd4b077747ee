//! Tooling for webly-supervised action recognition that does not involve
//! network training: random-walk outlier filtering of web samples,
//! multi-source training-set assembly, two-stream probability fusion,
//! temporal action localization and the matching evaluation metrics.

pub mod assembly;
pub mod bench;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod graph;
pub mod io;
pub mod localization;
pub mod walk;

pub use error::{Error, Result};
