//! Model Kähler metrics built from profile functions Q(φ), and finite-difference
//! verification of the identities satisfied by their special Kähler-Ricci potentials.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod error;
pub mod exec;
pub mod numeric;
pub mod profiles;
pub mod reparam;
pub mod tensor;
pub mod models;
pub mod verify;

pub use error::{Error, Result};
