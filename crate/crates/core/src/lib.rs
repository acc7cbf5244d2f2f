//! Spectral node identification on graphs.
//!
//! This crate implements the numerical machinery behind anchor-based node
//! identification on (random regular) graphs:
//!
//! - [`graph`]: simple undirected graphs, a pairing-model generator for
//!   random r-regular graphs, BFS distances and ball queries.
//! - [`spectral`]: normalized Laplacians, dense symmetric eigendecomposition
//!   with eigenspace grouping, and the sign-/basis-invariant positional
//!   encoding built from squared and absolute eigenvector products.
//! - [`diffusion`]: heat kernels, diffusion distances and embeddings, and the
//!   radial heat kernel of the infinite r-regular tree via a Poissonized
//!   birth-death recursion, together with the hop-to-diffusion link ψ.
//! - [`trilateration`]: recovery of an m-dimensional embedding coordinate
//!   from m+1 anchor distances by a difference-of-spheres linear system,
//!   plus nearest-neighbor decoding back to a vertex.
//! - [`identify`]: the two identification pipelines (bucket-exact WL decoder
//!   and the spectral anchor pipeline) and the separation experiment runner.
//! - [`randomwave`]: Monte Carlo checks of spectral injectivity under a
//!   Gaussian random-wave surrogate.
//!
//! All randomized operations take explicit 64-bit seeds and are deterministic:
//! identical inputs produce identical outputs, byte for byte.

pub mod diffusion;
pub mod error;
mod features;
pub mod graph;
pub mod identify;
pub mod randomwave;
pub mod spectral;
pub mod trilateration;

pub use error::{Error, Result};
