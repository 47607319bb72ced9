//! Unary predicates and binary relations over stores, the agreement forms,
//! the encoding of relations as predicates over doubled variables, and
//! substitution.

mod ast;
mod check;
mod normal;
pub mod parse;

pub use ast::*;
pub use check::{
    implies_bounded, implies_bounded_r, implies_bounded_u, rel_footprints, unary_footprint,
    Entailment,
};
pub use crate::semantics::ENUM_BUDGET;
pub use normal::{equivalent, normalize};
pub use parse::{parse_formula, Arity};
