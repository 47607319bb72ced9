//! Lexer and recursive-descent parser for program files.
//!
//! Grammar (`#` starts a line comment, labels are optional `n:` prefixes):
//!
//! ```text
//! program := ['fin' NUM] cmd
//! cmd     := atom (';' atom)*
//! atom    := [NUM ':'] base
//! base    := 'skip' | IDENT ':=' expr
//!          | 'if' expr 'then' cmd 'else' cmd 'fi'
//!          | 'while' expr 'do' cmd 'od'
//!          | 'choice' cmd 'or' cmd 'end'
//! ```

use std::collections::BTreeSet;

use super::ast::*;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", "!=", "<>", "==", "->", "&&", "||", "..", "(", ")", ";", ":", ",", "+",
    "-", "*", "%", "=", "<", ">", "!",
];

/// Tokenize `src`. Identifiers may end in primes (`x'`), which the program
/// parser rejects but the formula parser uses for the second store.
pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = bytes[start..i].iter().collect();
            let value = text
                .parse::<i64>()
                .map_err(|_| LangError::Syntax(pos, format!("integer out of range: {text}")))?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            while i < bytes.len() && bytes[i] == '\'' {
                i += 1;
            }
            let text: String = bytes[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(text),
                pos,
            });
            continue;
        }
        let mut matched = false;
        for sym in SYMBOLS {
            if src_starts_with(&bytes, i, sym) {
                out.push(Token {
                    tok: Tok::Sym(sym),
                    pos,
                });
                i += sym.len();
                col += sym.len();
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(LangError::Syntax(pos, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

fn src_starts_with(chars: &[char], at: usize, s: &str) -> bool {
    s.chars()
        .enumerate()
        .all(|(k, c)| chars.get(at + k) == Some(&c))
}

/// Token cursor shared by the program and formula parsers.
pub struct Cursor {
    toks: Vec<Token>,
    pub pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Cursor {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    pub fn here(&self) -> Pos {
        self.toks
            .get(self.pos)
            .map(|t| t.pos)
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|t| t.pos)
                    .unwrap_or(Pos { line: 1, col: 1 })
            })
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(sym_of(s))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(w)) = self.peek() {
            if w == kw {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(LangError::Syntax(
                self.here(),
                format!("expected `{s}`, found {}", self.describe()),
            ))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(LangError::Syntax(
                self.here(),
                format!("expected `{kw}`, found {}", self.describe()),
            ))
        }
    }

    pub fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(w)) => format!("`{w}`"),
            Some(Tok::Int(k)) => format!("`{k}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn sym_of(s: &str) -> &'static str {
    SYMBOLS.iter().find(|t| **t == s).expect("known symbol")
}

const KEYWORDS: &[&str] = &[
    "skip", "if", "then", "else", "fi", "while", "do", "od", "choice", "or", "end", "fin",
    "and", "not", "mod", "true", "false", "agree", "bagree", "left", "right", "pre", "post",
    "domain",
];

/// Commands as parsed, before label resolution.
enum PCmd {
    Skip(Option<i64>),
    Assign(Option<i64>, VarName, Expr),
    Seq(Box<PCmd>, Box<PCmd>),
    Choice(Option<i64>, Box<PCmd>, Box<PCmd>),
    If(Option<i64>, Expr, Box<PCmd>, Box<PCmd>),
    While(Option<i64>, Expr, Box<PCmd>),
}

/// Parse a program file. Explicit labels are honored verbatim; nodes without
/// one get the smallest unused non-negative label in preorder, starting the
/// search at 1 so a fully unlabelled source is numbered 1, 2, ... and `fin`
/// defaults to 0.
pub fn parse_program(src: &str) -> Result<Program, LangError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(toks);
    let mut fin: Option<i64> = None;
    if cur.eat_kw("fin") {
        fin = Some(parse_int(&mut cur)?);
    }
    let pcmd = parse_cmd(&mut cur)?;
    if !cur.at_end() {
        return Err(LangError::Syntax(
            cur.here(),
            format!("unexpected trailing input: {}", cur.describe()),
        ));
    }
    resolve_labels(pcmd, fin)
}

/// Parse a bare command (no `fin` header), auto-labelling as in
/// [`parse_program`] with following label `fin`.
pub fn parse_cmd_str(src: &str, fin: i64) -> Result<Cmd, LangError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(toks);
    let pcmd = parse_cmd(&mut cur)?;
    if !cur.at_end() {
        return Err(LangError::Syntax(
            cur.here(),
            format!("unexpected trailing input: {}", cur.describe()),
        ));
    }
    Ok(resolve_labels(pcmd, Some(fin))?.body)
}

/// Parse a bare expression, panicking on error. Test and fixture helper.
pub fn quick_expr(src: &str) -> Expr {
    let toks = lex(src).expect("lex");
    let mut cur = Cursor::new(toks);
    let e = parse_expr(&mut cur).expect("expr");
    assert!(cur.at_end(), "trailing input in expression {src:?}");
    e
}

fn parse_int(cur: &mut Cursor) -> Result<i64, LangError> {
    let neg = cur.eat_sym("-");
    match cur.bump() {
        Some(Tok::Int(k)) => Ok(if neg { -k } else { k }),
        _ => Err(LangError::Syntax(cur.here(), "expected integer".into())),
    }
}

fn parse_cmd(cur: &mut Cursor) -> Result<PCmd, LangError> {
    let mut c = parse_atom(cur)?;
    while cur.eat_sym(";") {
        let d = parse_atom(cur)?;
        c = PCmd::Seq(Box::new(c), Box::new(d));
    }
    Ok(c)
}

fn parse_atom(cur: &mut Cursor) -> Result<PCmd, LangError> {
    let mut label = None;
    if let (Some(Tok::Int(k)), Some(Tok::Sym(":"))) = (cur.peek(), cur.peek2()) {
        let k = *k;
        cur.bump();
        cur.bump();
        label = Some(k);
    }
    let pos = cur.here();
    if cur.eat_kw("skip") {
        return Ok(PCmd::Skip(label));
    }
    if cur.eat_kw("if") {
        let e = parse_expr(cur)?;
        cur.expect_kw("then")?;
        let a = parse_cmd(cur)?;
        cur.expect_kw("else")?;
        let b = parse_cmd(cur)?;
        cur.expect_kw("fi")?;
        return Ok(PCmd::If(label, e, Box::new(a), Box::new(b)));
    }
    if cur.eat_kw("while") {
        let e = parse_expr(cur)?;
        cur.expect_kw("do")?;
        let a = parse_cmd(cur)?;
        cur.expect_kw("od")?;
        return Ok(PCmd::While(label, e, Box::new(a)));
    }
    if cur.eat_kw("choice") {
        let a = parse_cmd(cur)?;
        cur.expect_kw("or")?;
        let b = parse_cmd(cur)?;
        cur.expect_kw("end")?;
        return Ok(PCmd::Choice(label, Box::new(a), Box::new(b)));
    }
    if let Some(Tok::Ident(x)) = cur.peek() {
        let x = x.clone();
        if KEYWORDS.contains(&x.as_str()) {
            return Err(LangError::Syntax(pos, format!("unexpected keyword `{x}`")));
        }
        if x.ends_with('\'') {
            return Err(LangError::Syntax(
                pos,
                format!("program variables may not end in a prime: `{x}`"),
            ));
        }
        cur.bump();
        cur.expect_sym(":=")?;
        let e = parse_expr(cur)?;
        return Ok(PCmd::Assign(label, x, e));
    }
    Err(LangError::Syntax(
        pos,
        format!("expected a command, found {}", cur.describe()),
    ))
}

/// Program expression parser, also used inside formula atoms.
/// Precedence: `or` < `and` < comparison < additive < multiplicative < unary.
pub fn parse_expr(cur: &mut Cursor) -> Result<Expr, LangError> {
    parse_or(cur)
}

/// Whether the upcoming tokens can begin an expression operand rather than
/// a command. Distinguishes `choice c or c end` separators from the `or`
/// operator: a command follows as `x := ...`, `3: ...`, or a keyword.
fn operand_follows(cur: &Cursor) -> bool {
    match cur.peek() {
        Some(Tok::Ident(w)) => {
            if KEYWORDS.contains(&w.as_str()) && !matches!(w.as_str(), "not" | "true" | "false")
            {
                return false;
            }
            cur.peek2() != Some(&Tok::Sym(":="))
        }
        Some(Tok::Int(_)) => cur.peek2() != Some(&Tok::Sym(":")),
        Some(Tok::Sym("(" | "-" | "!")) => true,
        _ => false,
    }
}

fn parse_or(cur: &mut Cursor) -> Result<Expr, LangError> {
    let mut e = parse_and(cur)?;
    loop {
        if matches!(cur.peek(), Some(Tok::Ident(w)) if w == "or") {
            let save = cur.pos;
            cur.bump();
            if !operand_follows(cur) {
                cur.pos = save;
                break;
            }
            let r = parse_and(cur)?;
            e = Expr::bin(BinOp::Or, e, r);
        } else {
            break;
        }
    }
    Ok(e)
}

fn parse_and(cur: &mut Cursor) -> Result<Expr, LangError> {
    let mut e = parse_cmp(cur)?;
    loop {
        if matches!(cur.peek(), Some(Tok::Ident(w)) if w == "and") {
            let save = cur.pos;
            cur.bump();
            if !operand_follows(cur) {
                cur.pos = save;
                break;
            }
            let r = parse_cmp(cur)?;
            e = Expr::bin(BinOp::And, e, r);
        } else {
            break;
        }
    }
    Ok(e)
}

fn comparison_at(cur: &Cursor) -> Option<BinOp> {
    match cur.peek() {
        Some(Tok::Sym("=")) | Some(Tok::Sym("==")) => Some(BinOp::Eq),
        Some(Tok::Sym("!=")) | Some(Tok::Sym("<>")) => Some(BinOp::Ne),
        Some(Tok::Sym("<")) => Some(BinOp::Lt),
        Some(Tok::Sym("<=")) => Some(BinOp::Le),
        Some(Tok::Sym(">")) => Some(BinOp::Gt),
        Some(Tok::Sym(">=")) => Some(BinOp::Ge),
        _ => None,
    }
}

fn parse_cmp(cur: &mut Cursor) -> Result<Expr, LangError> {
    let e = parse_add(cur)?;
    if let Some(op) = comparison_at(cur) {
        cur.bump();
        let r = parse_add(cur)?;
        return Ok(Expr::bin(op, e, r));
    }
    Ok(e)
}

fn parse_add(cur: &mut Cursor) -> Result<Expr, LangError> {
    let mut e = parse_mul(cur)?;
    loop {
        if cur.eat_sym("+") {
            let r = parse_mul(cur)?;
            e = Expr::bin(BinOp::Add, e, r);
        } else if cur.eat_sym("-") {
            let r = parse_mul(cur)?;
            e = Expr::bin(BinOp::Sub, e, r);
        } else {
            break;
        }
    }
    Ok(e)
}

fn parse_mul(cur: &mut Cursor) -> Result<Expr, LangError> {
    let mut e = parse_unary(cur)?;
    loop {
        if cur.eat_sym("*") {
            let r = parse_unary(cur)?;
            e = Expr::bin(BinOp::Mul, e, r);
        } else if cur.eat_sym("%") || cur.eat_kw("mod") {
            let r = parse_unary(cur)?;
            e = Expr::bin(BinOp::Mod, e, r);
        } else {
            break;
        }
    }
    Ok(e)
}

fn parse_unary(cur: &mut Cursor) -> Result<Expr, LangError> {
    if cur.eat_kw("not") || cur.eat_sym("!") {
        let e = parse_unary(cur)?;
        return Ok(Expr::Not(Box::new(e)));
    }
    if cur.eat_sym("-") {
        let e = parse_unary(cur)?;
        return Ok(match e {
            Expr::Int(k) => Expr::Int(-k),
            other => Expr::bin(BinOp::Sub, Expr::Int(0), other),
        });
    }
    if cur.eat_sym("(") {
        let e = parse_expr(cur)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    match cur.peek() {
        Some(Tok::Int(k)) => {
            let k = *k;
            cur.bump();
            Ok(Expr::Int(k))
        }
        Some(Tok::Ident(x)) if !KEYWORDS.contains(&x.as_str()) => {
            let x = x.clone();
            cur.bump();
            Ok(Expr::Var(x))
        }
        _ => Err(LangError::Syntax(
            cur.here(),
            format!("expected an expression, found {}", cur.describe()),
        )),
    }
}

fn resolve_labels(pcmd: PCmd, fin: Option<i64>) -> Result<Program, LangError> {
    let mut used = BTreeSet::new();
    collect_explicit(&pcmd, &mut used)?;
    let fin = match fin {
        Some(k) if k < 0 => return Err(LangError::NegativeLabel(Label(k))),
        Some(k) => k,
        None => 0,
    };
    if used.contains(&fin) {
        return Err(LangError::FinInBody(Label(fin)));
    }
    used.insert(fin);
    let mut next = 1i64;
    let body = assign_labels(pcmd, &mut used, &mut next);
    Program::new(body, Label(fin))
}

fn collect_explicit(c: &PCmd, used: &mut BTreeSet<i64>) -> Result<(), LangError> {
    let mut note = |l: &Option<i64>| -> Result<(), LangError> {
        if let Some(k) = l {
            if *k < 0 {
                return Err(LangError::NegativeLabel(Label(*k)));
            }
            if !used.insert(*k) {
                return Err(LangError::DuplicateLabel(Label(*k)));
            }
        }
        Ok(())
    };
    match c {
        PCmd::Skip(l) | PCmd::Assign(l, _, _) => note(l),
        PCmd::Seq(a, b) => {
            collect_explicit(a, used)?;
            collect_explicit(b, used)
        }
        PCmd::Choice(l, a, b) | PCmd::If(l, _, a, b) => {
            note(l)?;
            collect_explicit(a, used)?;
            collect_explicit(b, used)
        }
        PCmd::While(l, _, a) => {
            note(l)?;
            collect_explicit(a, used)
        }
    }
}

fn fresh(used: &mut BTreeSet<i64>, next: &mut i64) -> Label {
    while used.contains(next) {
        *next += 1;
    }
    used.insert(*next);
    Label(*next)
}

fn assign_labels(c: PCmd, used: &mut BTreeSet<i64>, next: &mut i64) -> Cmd {
    let pick = |l: Option<i64>, used: &mut BTreeSet<i64>, next: &mut i64| match l {
        Some(k) => Label(k),
        None => fresh(used, next),
    };
    match c {
        PCmd::Skip(l) => Cmd::Skip(pick(l, used, next)),
        PCmd::Assign(l, x, e) => Cmd::Assign(pick(l, used, next), x, e),
        PCmd::Seq(a, b) => {
            let a = assign_labels(*a, used, next);
            let b = assign_labels(*b, used, next);
            Cmd::seq(a, b)
        }
        PCmd::Choice(l, a, b) => {
            let n = pick(l, used, next);
            let a = assign_labels(*a, used, next);
            let b = assign_labels(*b, used, next);
            Cmd::Choice(n, Box::new(a), Box::new(b))
        }
        PCmd::If(l, e, a, b) => {
            let n = pick(l, used, next);
            let a = assign_labels(*a, used, next);
            let b = assign_labels(*b, used, next);
            Cmd::If(n, e, Box::new(a), Box::new(b))
        }
        PCmd::While(l, e, a) => {
            let n = pick(l, used, next);
            let a = assign_labels(*a, used, next);
            Cmd::While(n, e, Box::new(a))
        }
    }
}
