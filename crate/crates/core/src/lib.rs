//! Anisotropic spherical Gaussian reflectance lobes approximated by
//! symmetric von Mises–Fisher mixtures.
//!
//! The crate covers the whole chain from material controls `(κ, e, φ)` to
//! the integrated directional encoding fed to a directional network:
//!
//! - [`geometry`]: unit vectors, tangent frames, reflections, rotations and
//!   hemisphere quadrature grids.
//! - [`distributions`]: ASG and vMF densities, the symmetric mixture and its
//!   `3L + 2` parameter vector.
//! - [`divergence`] and [`fit`]: KL/JS on gridded distributions and the
//!   direct per-target mixture fit.
//! - [`amortizer`]: the small network mapping log-bandwidths to mixture
//!   parameters, with hand-written backpropagation and weight files.
//! - [`sh`] and [`ide`]: spherical harmonics and the integrated directional
//!   encoding of single lobes and rotated mixtures.
//! - [`losses`]: volume-rendering weights and the training losses.
//! - [`render`]: an analytic renderer for material editing and lobe maps.
//! - [`gradcheck`]: registry of analytic-vs-finite-difference checks.

pub mod amortizer;
pub mod distributions;
pub mod divergence;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod gradcheck;
pub mod ide;
pub mod losses;
pub mod optim;
pub mod render;
pub mod rng;
pub mod sh;

pub use error::{Error, Result, WeightsError};
