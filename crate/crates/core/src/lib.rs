//! Tensor calculus on coordinate charts carrying an integrable nilpotent
//! structure `f` (`f² = 0`).
//!
//! The crate parses metric and structure components from a small expression
//! language, computes Christoffel symbols and curvature symbolically, and
//! certifies purity and hybridity statements by seeded pointwise sampling.
//! Curves (geodesics, PH-curves, parallel transport) are integrated with a
//! fixed-step fourth-order Runge–Kutta scheme.
//!
//! Run `cargo run --example <name>` for a tour; each example under
//! `examples/` exercises one capability.

pub mod cli;
pub mod connection;
pub mod curvature;
pub mod curves;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod manifest;
pub mod manifold;
pub mod report;
pub mod sampling;
pub mod tensor;
pub mod verify;

pub use connection::Connection;
pub use curvature::Curvature;
pub use error::{Error, Result};
pub use expr::{parse, Expression};
pub use manifold::{adapted_f, ChartManifold};
pub use report::{CheckReport, Detail};
pub use sampling::Sampling;
pub use tensor::{Signature, Slot, TensorField, TensorValue};
