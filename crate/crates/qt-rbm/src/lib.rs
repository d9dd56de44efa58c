//! Query-trained inference networks for binary RBMs.
//!
//! A probabilistic query asks for the distribution of some visible
//! variables given evidence on the others. Instead of learning an
//! undirected model by maximum likelihood and answering queries with
//! slow iterative inference, this crate unrolls parallel message passing
//! into a fixed-depth network and trains its weights (and a message
//! temperature) directly to answer queries, randomizing the query mask
//! during stochastic training so one parameterization generalizes to
//! unseen queries.
//!
//! The crate ships:
//!
//! - [`model`]: RBM parameters in the network-friendly and standard
//!   parameterizations, exact conversions, checkpoint files;
//! - [`qtnn`]: evidence encoding, the temperature-interpolated transfer
//!   function and the unrolled forward pass;
//! - [`grad`]: the hand-rolled reverse pass plus a finite-difference
//!   verifier;
//! - [`training`]: query sampling, Adam, the training loop with early
//!   stopping;
//! - [`oracle`]: exact enumeration for small models (the test oracle);
//! - [`baselines`]: persistent contrastive divergence and conditional
//!   Gibbs inference;
//! - [`eval`]: the normalized cross-entropy harness over pluggable
//!   inference backends;
//! - [`data_io`]: dataset files, splits and synthetic generators;
//! - [`cli`]: the `qt-rbm` command-line tool.

pub mod baselines;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod eval;
pub mod grad;
pub mod model;
pub mod oracle;
pub mod qtnn;
pub mod rng;
pub mod training;

pub use error::{QtError, Result};
