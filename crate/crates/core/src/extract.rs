//! Proof extraction from valid annotated automata.
