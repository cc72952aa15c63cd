//! Sum-of-outer-products (SOUP) dictionary learning with aggregate ℓ0 / ℓ1
//! sparsity penalties, and dictionary-blind compressed-sensing MRI
//! reconstruction built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: complex dense / sparse primitives.
//! - [`thresholding`]: closed-form sparse-coding steps (hard / soft thresholding).
//! - [`learn`]: SOUP-DILLO (ℓ0) and OS-DL (ℓ1) block coordinate descent.
//! - [`patches`]: patch extraction and its adjoint on 2-D images.
//! - [`sensing`]: undersampled unitary Fourier encoding and sampling masks.
//! - [`recon`]: the image update and the outer reconstruction loops.
//! - [`baselines`]: orthogonal matching pursuit.
//! - [`metrics`]: NSRE, sparsity factor and PSNR.
//! - [`formats`]: binary and text file formats shared by the CLI and bindings.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod formats;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod patches;
pub mod recon;
pub mod sensing;
pub mod thresholding;

pub use error::{Error, Result};
pub use linalg::{CoefMatrix, DenseMatrix, Dictionary, SparseColumn, C64};
