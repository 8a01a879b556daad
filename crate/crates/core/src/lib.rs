//! Executable jet calculus.
//!
//! Truncated jets of smooth functions, Whitney's Taylor condition checked on
//! finite jet families, constructive smooth extensions (cone gluing,
//! separated points, convergent sequences), and a probe engine that detects
//! the order of black-box local operators and reconstructs the finite-order
//! operator they factor through.

// builders named after arithmetic take two owned operands on purpose;
// `!(a <= b)` comparisons are written so that NaN counts as a failure
#![allow(clippy::should_implement_trait, clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod jet;
pub mod whitney;
pub mod operator;
pub mod peetre;
pub mod cli;
