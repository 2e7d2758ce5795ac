//! Exact computation engine for the dynamics of automorphisms of totally
//! disconnected locally compact groups, over four desk-scale model families:
//! p-adic toral groups, shift groups over a finite alphabet, finite tower
//! models, and products of regular-tree automorphism groups.
//!
//! The model layer ([`model`]) supplies exact element arithmetic and an
//! exactly-computable algebra of closed-subgroup descriptors. The engines
//! ([`tidy`], [`contraction`], [`flat`], [`residual`]) are written against
//! that uniform interface and report graded certificates ([`cert`]).

pub mod catalog;
pub mod cert;
pub mod family;
pub mod contraction;
pub mod error;
pub mod fingroup;
pub mod flat;
pub mod handle;
pub mod model;
pub mod residual;
pub mod tidy;

pub use cert::{Certificate, Grade, Verdict};
pub use error::{Error, Result};
