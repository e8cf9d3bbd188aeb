//! Detect, measure and remove skewness in multivariate numeric data.
//!
//! * [`moments`]: third raw, central and standardized moment matrices.
//! * [`measures`]: Fisher, Mardia, partial and directional skewness with
//!   chi-square p-values.
//! * [`projpursuit`]: orthogonal projections of maximal skewness.
//! * [`symmetrize`]: projections that remove or reduce skewness.
//! * [`bootstrap`]: bootstrap distributions and p-values.
//! * [`cli`]: the `multiskew` command-line front end.
//!
//! Sample moments use weight `1/n` throughout; standardization uses the
//! symmetric inverse square root of the covariance.
//!
//! ```
//! use multiskew::{ingest::DataMatrix, measures};
//!
//! let data = DataMatrix::from_rows(&[
//!     vec![0.0, 1.0], vec![1.0, 0.5], vec![4.0, 2.0], vec![0.5, 3.0], vec![1.0, 1.0],
//! ]).unwrap();
//! let report = measures::mardia_skewness(&data).unwrap();
//! assert!(report.scalar().unwrap() >= 0.0);
//! ```

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod format;
pub mod ingest;
pub mod measures;
pub mod moments;
pub mod par;
pub mod projpursuit;
pub mod symmetrize;

pub use error::{Result, SkewError};
pub use ingest::DataMatrix;
pub use par::Parallelism;
