//! Construction and certification of unitary and state k-designs.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkit`]: dense complex matrices, pure states, density matrices and the
//!   usual quantum-information primitives (partial trace, entropies, norms).
//! - [`haar`]: Haar sampling and the exact low-degree Haar moments that every
//!   design is compared against.
//! - [`ensembles`]: Pauli, Clifford, random-circuit and iterated ensembles.
//! - [`certify`]: monomial, state-design and tensor-product-expander measures
//!   of how close an ensemble is to a k-design.
//! - [`bounds`]: closed-form large-deviation bound evaluators, all in log space.
//! - [`experiments`]: seeded Monte Carlo harnesses producing empirical tail
//!   curves that are checked against the evaluators.

// `!(x > 0.0)` is how argument checks reject NaN alongside bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

pub mod bounds;
pub mod certify;
pub mod ensembles;
mod error;
pub mod experiments;
pub mod haar;
pub mod numkit;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::RngStream;
