//! Judgments, rule catalog, derivations, and the derivation checker.
