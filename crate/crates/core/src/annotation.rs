//! Annotations, VC generation, and bounded validity checking.
