//! Sparse-signal and image recovery from few random linear measurements.
//!
//! The crate covers the full pipeline: generating seeded random observation
//! matrices ([`sensing`]), orthonormal DCT/Haar bases ([`transforms`]),
//! fixed-step / steepest-descent / Newton iteration engines ([`solvers`]),
//! l1 and total-variation penalties ([`regularizers`]), problem assembly
//! and column-by-column image recovery ([`recovery`]), and synthetic test
//! images with PGM I/O and PSNR ([`imaging`]).
//!
//! Every random draw comes from the documented generator in [`rng`], so
//! identical seeds reproduce identical numbers on any platform.

pub mod error;
pub mod imaging;
pub mod linalg;
pub mod recovery;
pub mod regularizers;
pub mod rng;
pub mod sensing;
pub mod solvers;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use regularizers::ImageGrid;
