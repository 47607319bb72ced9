//! Concrete syntax, labelling, and the structural label functions over
//! labelled commands.

mod ast;
pub mod parse;
mod print;

pub use ast::*;
pub use parse::{parse_cmd_str, parse_program};
pub use print::{cmd_to_string, expr_to_string, program_to_string};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LangError {
    #[error("syntax error at {0}: {1}")]
    Syntax(parse::Pos, String),
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("negative label {0}")]
    NegativeLabel(Label),
    #[error("labels are not unique and non-negative")]
    NotOk,
    #[error("final label {0} occurs in the body")]
    FinInBody(Label),
    #[error("no subcommand with label {0}")]
    NoSuchLabel(Label),
    #[error("not a subterm of the program")]
    NotASubterm,
}

#[cfg(test)]
mod tests {
    use super::*;

    const C0: &str = "fin 6\ny := x; z := 1; while y != 0 do z := z * y; y := y - 1 od\n";

    fn c0() -> Program {
        parse_program(C0).unwrap()
    }

    #[test]
    fn auto_labels_are_preorder() {
        let p = c0();
        let body = &p.body;
        assert_eq!(p.fin, Label(6));
        assert_eq!(body.lab(), Label(1));
        let labs: Vec<i64> = body.labs().iter().map(|l| l.0).collect();
        assert_eq!(labs, vec![1, 2, 3, 4, 5]);
        assert!(matches!(body.sub(Label(2)).unwrap(), Cmd::Assign(Label(2), x, Expr::Int(1)) if x == "z"));
        assert!(matches!(body.sub(Label(3)).unwrap(), Cmd::While(Label(3), _, _)));
        assert!(matches!(body.sub(Label(4)).unwrap(), Cmd::Assign(Label(4), x, _) if x == "z"));
        assert!(matches!(body.sub(Label(5)).unwrap(), Cmd::Assign(Label(5), x, _) if x == "y"));
    }

    #[test]
    fn gated_program_gets_nine_labels() {
        let src = "fin 0\n\
            y := x; z := 24; w := 0;\n\
            while y != 4 do\n\
              if w % 2 = 0 then z := z * y; y := y - 1 else skip fi; w := w + 1\n\
            od\n";
        let p = parse_program(src).unwrap();
        let labs: Vec<i64> = p.body.labs().iter().map(|l| l.0).collect();
        assert_eq!(labs, (1..=9).collect::<Vec<_>>());
        assert!(matches!(p.body.sub(Label(5)).unwrap(), Cmd::If(_, _, _, _)));
        assert!(matches!(p.body.sub(Label(8)).unwrap(), Cmd::Skip(_)));
        assert!(matches!(p.body.sub(Label(9)).unwrap(), Cmd::Assign(_, w, _) if w == "w"));
    }

    #[test]
    fn single_skip_defaults() {
        let p = parse_program("skip").unwrap();
        assert_eq!(p.body, Cmd::Skip(Label(1)));
        assert_eq!(p.fin, Label(0));
    }

    #[test]
    fn ok_rejects_duplicates_and_negatives() {
        assert!(!Cmd::seq(Cmd::Skip(Label(1)), Cmd::Skip(Label(1))).ok());
        assert!(!Cmd::Skip(Label(-3)).ok());
        assert!(c0().body.ok());
    }

    #[test]
    fn explicit_labels_honored_and_checked() {
        let p = parse_program("fin 0\n7: x := 1; 3: skip").unwrap();
        let labs: Vec<i64> = p.body.labs().iter().map(|l| l.0).collect();
        assert_eq!(labs, vec![3, 7]);
        assert!(parse_program("2: skip; 2: skip").is_err());
        assert!(matches!(
            parse_program("fin 1\n1: skip"),
            Err(LangError::FinInBody(_))
        ));
    }

    #[test]
    fn mixed_labels_fill_fresh() {
        let p = parse_program("fin 0\nx := 1; 1: skip; y := 2").unwrap();
        // Explicit 1 is taken; unlabelled nodes get 2 and 3 in preorder.
        // Sequencing is left-associated.
        let shape: Vec<i64> = match &p.body {
            Cmd::Seq(rest, c) => match &**rest {
                Cmd::Seq(a, b) => vec![a.lab().0, b.lab().0, c.lab().0],
                _ => panic!(),
            },
            _ => panic!(),
        };
        assert_eq!(shape, vec![2, 1, 3]);
    }

    #[test]
    fn fsuc_on_factorial_and_branch() {
        let p = c0();
        assert_eq!(fsuc(Label(3), &p.body, Label(6)).unwrap(), Label(6));
        assert_eq!(fsuc(Label(5), &p.body, Label(6)).unwrap(), Label(3));
        assert_eq!(fsuc(Label(1), &p.body, Label(6)).unwrap(), Label(2));
        assert_eq!(fsuc(Label(4), &p.body, Label(6)).unwrap(), Label(5));

        let branch =
            parse_program("fin 5\nif x > 0 then x := x - 1; y := x else skip fi").unwrap();
        let c = &branch.body;
        assert_eq!(fsuc(Label(2), c, Label(5)).unwrap(), Label(3));
        for n in [1, 3, 4] {
            assert_eq!(fsuc(Label(n), c, Label(5)).unwrap(), Label(5));
        }
    }

    #[test]
    fn fsuc_rejects_bad_label() {
        let p = c0();
        assert!(fsuc(Label(9), &p.body, Label(6)).is_err());
    }

    #[test]
    fn elab_of_sequences() {
        let p = c0();
        let c = &p.body;
        assert_eq!(elab(c.sub(Label(3)).unwrap(), c, Label(6)).unwrap(), Label(6));
        let body = Cmd::seq(
            c.sub(Label(4)).unwrap().clone(),
            c.sub(Label(5)).unwrap().clone(),
        );
        assert_eq!(elab(&body, c, Label(6)).unwrap(), Label(3));
        assert_eq!(elab(c, c, Label(6)).unwrap(), Label(6));
        let alien = Cmd::Skip(Label(77));
        assert!(elab(&alien, c, Label(6)).is_err());
    }

    #[test]
    fn fsuc_lands_in_points() {
        let p = c0();
        for n in p.body.labs() {
            let m = fsuc(n, &p.body, p.fin).unwrap();
            assert!(p.points().contains(&m), "fsuc({n}) = {m} not a point");
        }
    }

    #[test]
    fn pretty_print_round_trip() {
        for src in [
            C0,
            "fin 0\nchoice x := 1 or 2: skip end",
            "fin 9\nif x = 0 then skip else while y > 0 do y := y - 1 od fi",
            "x := -3 + 2 * (y - 1); z := x mod 2 and 1 or 0",
        ] {
            let p = parse_program(src).unwrap();
            let printed = program_to_string(&p);
            let again = parse_program(&printed).unwrap();
            assert_eq!(p, again, "round trip failed for {printed}");
        }
    }

    #[test]
    fn sub_is_head_of_subterm() {
        let p = c0();
        let c = &p.body;
        // For every labelled subcommand b, sub(lab(b), c) is b's head node.
        for n in c.labs() {
            let b = c.sub(n).unwrap();
            assert_eq!(b.lab(), n);
        }
        // For a sequence, sub(lab) returns its head command, not the sequence.
        let whole = c.sub(Label(1)).unwrap();
        assert!(matches!(whole, Cmd::Assign(Label(1), _, _)));
    }

    #[test]
    fn dotted_rename() {
        let p = c0();
        let d = dot_cmd(&p.body);
        assert!(d.vars().iter().all(|v| v.ends_with('\'')));
        assert_eq!(d.labs(), p.body.labs());
        assert!(p.body.eq_mod_labels(&p.body.clone()));
        assert!(!p.body.eq_mod_labels(&d));
    }
}
