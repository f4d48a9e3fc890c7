//! Computation engine for congruences of k-regular partition counts.
//!
//! The crate is organized bottom-up:
//! - [`series`]: truncated q-series on the 1/24 exponent lattice, with exact
//!   integer or fixed-modulus coefficient rings.
//! - [`eta`]: eta-function expansions, eta quotients, and the k-regular
//!   partition generating function together with an independent counting
//!   oracle.
//! - [`operators`]: Kronecker characters and the U, V, and Hecke operators.
//! - [`theorems`]: construction of the congruence-carrying cusp forms and
//!   verification of the statements they satisfy.
//! - [`search`]: Hecke annihilation scans, assembly of arithmetic-progression
//!   congruences, residue censuses, and direct verification against the
//!   oracle.
//! - [`certs`]: reproducible verification certificates (canonical JSON with a
//!   digest over the checked coefficient window) and re-checking.
//! - [`config`]: engine defaults shared by the CLI and the certificate
//!   checker.

pub mod certs;
pub mod config;
pub mod error;
pub mod eta;
pub mod operators;
pub mod search;
pub mod series;
pub mod theorems;

pub use error::Error;
pub use series::{Ring, Series};

/// Engine version stamped into certificates.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
