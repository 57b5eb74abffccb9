// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codec;
pub mod construct;
pub mod degdist;
pub mod error;
pub mod exitchart;
pub mod gf2;
pub mod harness;
pub mod optimizer;
pub mod quad;
pub mod rng;
