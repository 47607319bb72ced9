//! Pretty-printing with explicit labels; `parse(pretty(p)) == p`.

use std::fmt::Write;

use super::ast::*;

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Mod => 5,
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    match e {
        Expr::Var(x) => out.push_str(x),
        Expr::Int(k) => {
            let _ = write!(out, "{k}");
        }
        Expr::Not(a) => {
            out.push('!');
            write_expr(out, a, 6);
        }
        Expr::Bin(op, a, b) => {
            let p = prec(*op);
            if p < min {
                out.push('(');
            }
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            // Left-associative: the right operand needs strictly higher binding.
            write_expr(out, b, p + 1);
            if p < min {
                out.push(')');
            }
        }
    }
}

pub fn cmd_to_string(c: &Cmd) -> String {
    let mut s = String::new();
    write_cmd(&mut s, c);
    s
}

fn write_cmd(out: &mut String, c: &Cmd) {
    match c {
        Cmd::Skip(n) => {
            let _ = write!(out, "{n}: skip");
        }
        Cmd::Assign(n, x, e) => {
            let _ = write!(out, "{n}: {x} := {}", expr_to_string(e));
        }
        Cmd::Seq(a, b) => {
            write_cmd(out, a);
            out.push_str("; ");
            write_cmd(out, b);
        }
        Cmd::Choice(n, a, b) => {
            let _ = write!(out, "{n}: choice ");
            write_cmd(out, a);
            out.push_str(" or ");
            write_cmd(out, b);
            out.push_str(" end");
        }
        Cmd::If(n, e, a, b) => {
            let _ = write!(out, "{n}: if {} then ", expr_to_string(e));
            write_cmd(out, a);
            out.push_str(" else ");
            write_cmd(out, b);
            out.push_str(" fi");
        }
        Cmd::While(n, e, a) => {
            let _ = write!(out, "{n}: while {} do ", expr_to_string(e));
            write_cmd(out, a);
            out.push_str(" od");
        }
    }
}

pub fn program_to_string(p: &Program) -> String {
    format!("fin {}\n{}\n", p.fin, cmd_to_string(&p.body))
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&expr_to_string(self))
    }
}

impl std::fmt::Display for Cmd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&cmd_to_string(self))
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&program_to_string(self))
    }
}
