//! Small example programs shared by tests and the command-line tool.

use crate::lang::{parse_program, Program};

/// `z := x!` by repeated multiplication.
pub const FACTORIAL_SRC: &str = "fin 6\n\
    y := x; z := 1;\n\
    while y != 0 do z := z * y; y := y - 1 od\n";

/// `z := 2^x` by repeated doubling.
pub const POW2_SRC: &str = "fin 6\n\
    y := x; z := 1;\n\
    while y != 0 do z := z * 2; y := y - 1 od\n";

/// Factorial variant that counts down to 4 and only multiplies on even
/// ticks of `w`; maintains `x! * 4! = z * y!` with `z` starting at 24.
pub const GATED_FACTORIAL_SRC: &str = "fin 0\n\
    y := x; z := 24; w := 0;\n\
    while y != 4 do\n\
      if w % 2 = 0 then z := z * y; y := y - 1 else skip fi;\n\
      w := w + 1\n\
    od\n";

/// Doubling variant gated on multiples of 3; maintains `2^x * 16 = z * 2^y`
/// with `z` starting at 16.
pub const GATED_POW2_SRC: &str = "fin 0\n\
    y := x; z := 16; w := 0;\n\
    while y != 4 do\n\
      if w % 3 = 0 then z := z * 2; y := y - 1 else skip fi;\n\
      w := w + 1\n\
    od\n";

/// Branching example: decrement into y when positive.
pub const BRANCH_SRC: &str = "fin 5\n\
    if x > 0 then x := x - 1; y := x else skip fi\n";

/// Monotone-in-x output; satisfies the relational spec x <= x' -> y <= y'.
pub const MONOTONE_SRC: &str = "fin 3\nif x > 0 then y := x + 1 else y := x fi\n";

/// Nondeterministic increment: x grows by 1 or 2.
pub const CHOICE_INCREMENT_SRC: &str = "fin 4\nchoice x := x + 1 or x := x + 2 end\n";

/// Nondeterministic scratch write before a deterministic increment.
pub const CHOICE_THEN_INC_SRC: &str = "fin 5\nchoice y := 0 or y := 1 end; x := x + 1\n";

/// Swap through a temporary.
pub const SWAP_SRC: &str = "fin 4\nt := x; x := y; y := t\n";

/// Count down to zero.
pub const COUNTDOWN_SRC: &str = "fin 3\nwhile y != 0 do y := y - 1 od\n";

/// Context with a two-assignment hole in the then-branch.
pub const HOLE_THEN_SRC: &str = "fin 5\n1: if x > y then 2: y := y; 3: x := 0 else 4: skip fi\n";

/// Same context shape with a one-assignment replacement and an equivalent
/// test.
pub const HOLE_THEN_ALT_SRC: &str = "fin 5\n1: if y <= x - 1 then 2: x := 0 else 4: skip fi\n";

pub fn factorial() -> Program {
    parse_program(FACTORIAL_SRC).unwrap()
}

pub fn pow2() -> Program {
    parse_program(POW2_SRC).unwrap()
}

pub fn gated_factorial() -> Program {
    parse_program(GATED_FACTORIAL_SRC).unwrap()
}

pub fn gated_pow2() -> Program {
    parse_program(GATED_POW2_SRC).unwrap()
}

pub fn branch() -> Program {
    parse_program(BRANCH_SRC).unwrap()
}

pub fn monotone() -> Program {
    parse_program(MONOTONE_SRC).unwrap()
}

pub fn choice_increment() -> Program {
    parse_program(CHOICE_INCREMENT_SRC).unwrap()
}

pub fn choice_then_inc() -> Program {
    parse_program(CHOICE_THEN_INC_SRC).unwrap()
}

pub fn swap() -> Program {
    parse_program(SWAP_SRC).unwrap()
}

pub fn countdown() -> Program {
    parse_program(COUNTDOWN_SRC).unwrap()
}

pub fn hole_then() -> Program {
    parse_program(HOLE_THEN_SRC).unwrap()
}

pub fn hole_then_alt() -> Program {
    parse_program(HOLE_THEN_ALT_SRC).unwrap()
}

/// Every corpus program, for sweep-style tests.
pub fn all() -> Vec<(&'static str, Program)> {
    vec![
        ("factorial", factorial()),
        ("pow2", pow2()),
        ("gated_factorial", gated_factorial()),
        ("gated_pow2", gated_pow2()),
        ("branch", branch()),
        ("monotone", monotone()),
        ("choice_increment", choice_increment()),
        ("choice_then_inc", choice_then_inc()),
        ("swap", swap()),
        ("countdown", countdown()),
        ("hole_then", hole_then()),
        ("hole_then_alt", hole_then_alt()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses_ok() {
        for (name, p) in all() {
            assert!(p.check_ok().is_ok(), "{name} not ok");
        }
    }

    #[test]
    fn gated_pair_has_same_labels() {
        assert_eq!(gated_factorial().body.labs(), gated_pow2().body.labs());
    }
}
