//! Numerical kernels for flag-relative factorizations over involutive
//! algebras with continuous inversion.
//!
//! The crate provides four concrete instance families (dense standard,
//! dense indefinite, matrix loops on a sampled circle, block matrices over
//! another instance), idempotent flags with diagonal truncation, the three
//! flag-relative decompositions (block Gauss g = xdy, the Gram
//! factorization s*s = b*db, and s = uab), and the flag-manifold chart and
//! orbit operations built on top of them.

pub mod algebra;
pub mod dense;
pub mod error;
pub mod factor;
pub mod flags;
pub mod manifold;
pub mod sample;
pub mod serial;
pub mod sweep;
pub mod tol;

pub use algebra::{AlgebraInstance, AlgebraKind, Element, SpectrumApprox};
pub use error::{FlagFactError, Result};
pub use flags::{Flag, Idempotent};
pub use tol::ToleranceConfig;
