//! Relational verification over product automata.
//!
//! This crate implements a small labelled while-language, its small-step
//! semantics and Floyd automata, product automata for aligning two programs,
//! annotation/verification-condition checking by bounded enumeration, Hoare
//! and relational Hoare proof checking, and extraction algorithms that turn
//! a valid annotated (product) automaton into a derivation the checker
//! accepts.
//!
//! Everything that quantifies over stores is bounded by an explicit integer
//! interval; verdicts are always relative to the declared bounds.

pub mod annotation;
pub mod assertion;
pub mod automaton;
pub mod corpus;
pub mod extract;
pub mod lang;
pub mod logic;
mod par;
pub mod product;
pub mod semantics;
