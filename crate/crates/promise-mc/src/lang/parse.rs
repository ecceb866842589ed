//! Hand-rolled lexer and recursive-descent parser for `.wmm` sources.

use super::ast::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, col {col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate register `{0}` (register sets of distinct processes must be disjoint)")]
    DuplicateRegister(String),
    #[error("duplicate location `{0}`")]
    DuplicateLocation(String),
    #[error("duplicate process `{0}`")]
    DuplicateProcess(String),
    #[error("undeclared name `{0}` at line {1}")]
    UndeclaredName(String, usize),
    #[error("value {0} exceeds the representable range")]
    ValueOverflow(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Value),
    Punct(&'static str),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>, // token, line, col
    pos: usize,
}

const PUNCTS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ",", ";", ":", "=", "<", ">", "+",
    "-", "*", "!", ".",
];

fn lex(src: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let v: Value = s
                .parse()
                .map_err(|_| ParseError::ValueOverflow(s.clone()))?;
            toks.push((Tok::Int(v), line, start_col));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            toks.push((Tok::Ident(s), line, start_col));
            continue;
        }
        let mut matched = false;
        for p in PUNCTS {
            if src_starts_with(&mut chars, p) {
                toks.push((Tok::Punct(p), line, start_col));
                col += p.len();
                matched = true;
                break;
            }
        }
        if !matched {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: "a token".into(),
                found: format!("`{c}`"),
            });
        }
    }
    toks.push((Tok::Eof, line, col));
    Ok(Lexer { toks, pos: 0 })
}

/// Consume `p` from the char stream if it is the next sequence.
fn src_starts_with(chars: &mut std::iter::Peekable<std::str::Chars>, p: &str) -> bool {
    let mut clone = chars.clone();
    for pc in p.chars() {
        if clone.next() != Some(pc) {
            return false;
        }
    }
    for _ in p.chars() {
        chars.next();
    }
    true
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn line(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: impl Into<String>) -> ParseError {
        let (tok, line, col) = &self.toks[self.pos];
        ParseError::Syntax {
            line: *line,
            col: *col,
            expected: expected.into(),
            found: tok.to_string(),
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        if self.peek() == &Tok::Punct(p) {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.err("an identifier")),
        }
    }

    fn eat_punct(&mut self, p: &'static str) -> bool {
        if self.peek() == &Tok::Punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if let Tok::Ident(s) = self.peek() {
            if s == kw {
                self.next();
                return true;
            }
        }
        false
    }
}

const KEYWORDS: &[&str] = &[
    "var", "proc", "reg", "if", "else", "while", "do", "skip", "goal", "fence", "assume", "cas",
    "fadd", "rlx", "ra", "value_max",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parse a `.wmm` source into a [`Program`].
///
/// Name resolution (undeclared identifiers, duplicate labels / registers /
/// locations) is checked here; deeper well-formedness findings are reported
/// by [`super::validate::validate`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut lx = lex(src)?;
    let mut locations: Vec<String> = Vec::new();
    let mut processes: Vec<Process> = Vec::new();
    let mut value_max = DEFAULT_VALUE_MAX;
    let mut saw_value_max = false;

    loop {
        if lx.peek() == &Tok::Eof {
            break;
        }
        if lx.eat_kw("var") {
            loop {
                let name = lx.expect_ident()?;
                if is_keyword(&name) {
                    return Err(lx.err("a location name"));
                }
                if locations.contains(&name) {
                    return Err(ParseError::DuplicateLocation(name));
                }
                locations.push(name);
                if lx.eat_punct(",") {
                    continue;
                }
                // Space-separated lists are accepted too: `var x y z`.
                if matches!(lx.peek(), Tok::Ident(s) if !is_keyword(s)) {
                    continue;
                }
                break;
            }
            lx.eat_punct(";");
            continue;
        }
        if lx.eat_kw("value_max") {
            match lx.next() {
                Tok::Int(v) => {
                    value_max = v;
                    saw_value_max = true;
                }
                _ => return Err(lx.err("an integer")),
            }
            lx.eat_punct(";");
            continue;
        }
        if lx.eat_kw("proc") {
            let name = lx.expect_ident()?;
            if processes.iter().any(|p| p.name == name) {
                return Err(ParseError::DuplicateProcess(name));
            }
            lx.expect_punct("{")?;
            let mut registers = Vec::new();
            while lx.eat_kw("reg") {
                loop {
                    let r = lx.expect_ident()?;
                    if is_keyword(&r) {
                        return Err(lx.err("a register name"));
                    }
                    registers.push(r);
                    if lx.eat_punct(",") {
                        continue;
                    }
                    // `reg a b` is fine, but `reg a b = 1` would be a
                    // statement, so only continue when no `=`/`:`/`.` follows.
                    if matches!(lx.peek(), Tok::Ident(s) if !is_keyword(s))
                        && !matches!(lx.peek2(), Tok::Punct("=") | Tok::Punct(":") | Tok::Punct("."))
                    {
                        continue;
                    }
                    break;
                }
                lx.eat_punct(";");
            }
            let body = parse_block_body(&mut lx)?;
            lx.expect_punct("}")?;
            processes.push(Process {
                name,
                registers,
                body,
            });
            continue;
        }
        return Err(lx.err("`var`, `proc` or `value_max`"));
    }
    let _ = saw_value_max;

    let prog = Program {
        locations,
        processes,
        value_max,
    };
    resolve(&prog)?;
    Ok(prog)
}

/// Statements until a closing `}` (not consumed).
fn parse_block_body(lx: &mut Lexer) -> Result<Vec<Stmt>, ParseError> {
    let mut out = Vec::new();
    while lx.peek() != &Tok::Punct("}") && lx.peek() != &Tok::Eof {
        out.push(parse_stmt(lx)?);
    }
    Ok(out)
}

fn parse_stmt(lx: &mut Lexer) -> Result<Stmt, ParseError> {
    let line = lx.line();
    // Optional label: `ident :` where ident is not a keyword.
    let mut label = None;
    if let Tok::Ident(s) = lx.peek() {
        if !is_keyword(s) && lx.peek2() == &Tok::Punct(":") {
            label = Some(lx.expect_ident()?);
            lx.expect_punct(":")?;
        }
    }
    let kind = parse_stmt_kind(lx)?;
    Ok(Stmt { label, kind, line })
}

fn parse_stmt_kind(lx: &mut Lexer) -> Result<StmtKind, ParseError> {
    if lx.eat_kw("skip") {
        lx.eat_punct(";");
        return Ok(StmtKind::Skip);
    }
    if lx.eat_kw("goal") {
        lx.eat_punct(";");
        return Ok(StmtKind::Goal);
    }
    if lx.eat_kw("fence") {
        lx.eat_punct(";");
        return Ok(StmtKind::Fence);
    }
    if lx.eat_kw("assume") {
        lx.expect_punct("(")?;
        let e = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.eat_punct(";");
        return Ok(StmtKind::Assume(e));
    }
    if lx.eat_kw("if") {
        lx.expect_punct("(")?;
        let cond = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.expect_punct("{")?;
        let then_branch = parse_block_body(lx)?;
        lx.expect_punct("}")?;
        let else_branch = if lx.eat_kw("else") {
            lx.expect_punct("{")?;
            let b = parse_block_body(lx)?;
            lx.expect_punct("}")?;
            b
        } else {
            Vec::new()
        };
        return Ok(StmtKind::If {
            cond,
            then_branch,
            else_branch,
        });
    }
    if lx.eat_kw("while") {
        lx.expect_punct("(")?;
        let cond = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.expect_punct("{")?;
        let body = parse_block_body(lx)?;
        lx.expect_punct("}")?;
        return Ok(StmtKind::While { cond, body });
    }
    if lx.eat_kw("do") {
        lx.expect_punct("{")?;
        let body = parse_block_body(lx)?;
        lx.expect_punct("}")?;
        if !lx.eat_kw("while") {
            return Err(lx.err("`while`"));
        }
        lx.expect_punct("(")?;
        let cond = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.eat_punct(";");
        return Ok(StmtKind::DoWhile { body, cond });
    }

    // Assignment forms: `x.mode = e`, `r = ...`.
    let name = lx.expect_ident()?;
    if is_keyword(&name) {
        return Err(lx.err("a statement"));
    }
    if lx.eat_punct(".") {
        let mode = parse_mode(lx)?;
        lx.expect_punct("=")?;
        let expr = parse_expr(lx)?;
        lx.eat_punct(";");
        return Ok(StmtKind::Write {
            loc: name,
            mode,
            expr,
        });
    }
    lx.expect_punct("=")?;
    // r = cas.../ fadd... / loc.mode / expr
    if lx.eat_kw("cas") {
        lx.expect_punct(".")?;
        let mode_r = parse_mode(lx)?;
        lx.expect_punct(".")?;
        let mode_w = parse_mode(lx)?;
        lx.expect_punct("(")?;
        let loc = lx.expect_ident()?;
        lx.expect_punct(",")?;
        let expected = parse_expr(lx)?;
        lx.expect_punct(",")?;
        let desired = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.eat_punct(";");
        return Ok(StmtKind::Cas {
            reg: name,
            loc,
            mode_r,
            mode_w,
            expected,
            desired,
        });
    }
    if lx.eat_kw("fadd") {
        lx.expect_punct(".")?;
        let mode_r = parse_mode(lx)?;
        lx.expect_punct(".")?;
        let mode_w = parse_mode(lx)?;
        lx.expect_punct("(")?;
        let loc = lx.expect_ident()?;
        lx.expect_punct(",")?;
        let addend = parse_expr(lx)?;
        lx.expect_punct(")")?;
        lx.eat_punct(";");
        return Ok(StmtKind::Fadd {
            reg: name,
            loc,
            mode_r,
            mode_w,
            addend,
        });
    }
    // Single `ident . mode` on the right-hand side is a read; anything else is
    // a local assignment.
    if let Tok::Ident(rhs) = lx.peek().clone() {
        if !is_keyword(&rhs) && lx.peek2() == &Tok::Punct(".") {
            // Lookahead for `ident . mode` followed by a statement boundary.
            let save = lx.pos;
            let loc = lx.expect_ident()?;
            lx.expect_punct(".")?;
            let mode = parse_mode(lx)?;
            let boundary = matches!(lx.peek(), Tok::Punct(";") | Tok::Punct("}") | Tok::Eof)
                || starts_stmt(lx);
            if boundary {
                lx.eat_punct(";");
                return Ok(StmtKind::Read {
                    reg: name,
                    loc,
                    mode,
                });
            }
            lx.pos = save;
        }
    }
    let expr = parse_expr(lx)?;
    lx.eat_punct(";");
    Ok(StmtKind::Assign { reg: name, expr })
}

/// Heuristic: does the current token begin a fresh statement? Used to allow
/// newline-terminated reads without a semicolon.
fn starts_stmt(lx: &Lexer) -> bool {
    match lx.peek() {
        Tok::Ident(s) => {
            is_keyword(s) && s != "rlx" && s != "ra" || lx.peek2() == &Tok::Punct("=")
                || lx.peek2() == &Tok::Punct(":")
                || lx.peek2() == &Tok::Punct(".")
        }
        _ => false,
    }
}

fn parse_mode(lx: &mut Lexer) -> Result<Mode, ParseError> {
    if lx.eat_kw("rlx") {
        Ok(Mode::Rlx)
    } else if lx.eat_kw("ra") {
        Ok(Mode::Ra)
    } else {
        Err(lx.err("`rlx` or `ra`"))
    }
}

// Precedence climbing: || < && < comparisons < additive < multiplicative < unary.
fn parse_expr(lx: &mut Lexer) -> Result<Expr, ParseError> {
    parse_or(lx)
}

fn parse_or(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut e = parse_and(lx)?;
    while lx.eat_punct("||") {
        let rhs = parse_and(lx)?;
        e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(rhs));
    }
    Ok(e)
}

fn parse_and(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut e = parse_cmp(lx)?;
    while lx.eat_punct("&&") {
        let rhs = parse_cmp(lx)?;
        e = Expr::Bin(BinOp::And, Box::new(e), Box::new(rhs));
    }
    Ok(e)
}

fn parse_cmp(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let e = parse_add(lx)?;
    for (p, op) in [
        ("==", BinOp::Eq),
        ("!=", BinOp::Ne),
        ("<=", BinOp::Le),
        (">=", BinOp::Ge),
        ("<", BinOp::Lt),
        (">", BinOp::Gt),
    ] {
        if lx.eat_punct(p) {
            let rhs = parse_add(lx)?;
            return Ok(Expr::Bin(op, Box::new(e), Box::new(rhs)));
        }
    }
    Ok(e)
}

fn parse_add(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut e = parse_mul(lx)?;
    loop {
        if lx.eat_punct("+") {
            let rhs = parse_mul(lx)?;
            e = Expr::Bin(BinOp::Add, Box::new(e), Box::new(rhs));
        } else if lx.eat_punct("-") {
            let rhs = parse_mul(lx)?;
            e = Expr::Bin(BinOp::Sub, Box::new(e), Box::new(rhs));
        } else {
            return Ok(e);
        }
    }
}

fn parse_mul(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut e = parse_unary(lx)?;
    while lx.eat_punct("*") {
        let rhs = parse_unary(lx)?;
        e = Expr::Bin(BinOp::Mul, Box::new(e), Box::new(rhs));
    }
    Ok(e)
}

fn parse_unary(lx: &mut Lexer) -> Result<Expr, ParseError> {
    if lx.eat_punct("!") {
        let e = parse_unary(lx)?;
        return Ok(Expr::Not(Box::new(e)));
    }
    match lx.peek().clone() {
        Tok::Int(v) => {
            lx.next();
            Ok(Expr::Const(v))
        }
        Tok::Ident(s) if !is_keyword(&s) => {
            lx.next();
            if lx.peek() == &Tok::Punct(".")
                && matches!(lx.peek2(), Tok::Ident(m) if m == "rlx" || m == "ra")
            {
                lx.expect_punct(".")?;
                let mode = parse_mode(lx)?;
                return Ok(Expr::MemAtom(s, mode));
            }
            Ok(Expr::Ident(s))
        }
        Tok::Punct("(") => {
            lx.next();
            let e = parse_expr(lx)?;
            lx.expect_punct(")")?;
            Ok(e)
        }
        _ => Err(lx.err("an expression")),
    }
}

/// Binding checks: labels globally unique, registers disjoint, every name
/// mentioned in a statement declared.
fn resolve(prog: &Program) -> Result<(), ParseError> {
    let mut labels = std::collections::HashSet::new();
    let mut regs = std::collections::HashSet::new();
    for p in &prog.processes {
        for r in &p.registers {
            if prog.locations.contains(r) || !regs.insert(r.clone()) {
                return Err(ParseError::DuplicateRegister(r.clone()));
            }
        }
    }
    for p in &prog.processes {
        check_stmts(prog, p, &p.body, &mut labels)?;
    }
    Ok(())
}

fn check_stmts(
    prog: &Program,
    proc: &Process,
    body: &[Stmt],
    labels: &mut std::collections::HashSet<String>,
) -> Result<(), ParseError> {
    for s in body {
        if let Some(l) = &s.label {
            if !labels.insert(l.clone()) {
                return Err(ParseError::DuplicateLabel(l.clone()));
            }
        }
        let check_expr = |e: &Expr| -> Result<(), ParseError> {
            for id in e.idents() {
                if !proc.registers.iter().any(|r| r == id) && !prog.locations.iter().any(|l| l == id)
                {
                    return Err(ParseError::UndeclaredName(id.to_string(), s.line));
                }
            }
            for (loc, _) in e.mem_atoms() {
                if !prog.locations.iter().any(|l| l == loc) {
                    return Err(ParseError::UndeclaredName(loc.to_string(), s.line));
                }
            }
            Ok(())
        };
        let check_reg = |r: &str| -> Result<(), ParseError> {
            if !proc.registers.iter().any(|x| x == r) {
                return Err(ParseError::UndeclaredName(r.to_string(), s.line));
            }
            Ok(())
        };
        let check_loc = |l: &str| -> Result<(), ParseError> {
            if !prog.locations.iter().any(|x| x == l) {
                return Err(ParseError::UndeclaredName(l.to_string(), s.line));
            }
            Ok(())
        };
        match &s.kind {
            StmtKind::Assign { reg, expr } => {
                check_reg(reg)?;
                check_expr(expr)?;
            }
            StmtKind::Read { reg, loc, .. } => {
                check_reg(reg)?;
                check_loc(loc)?;
            }
            StmtKind::Write { loc, expr, .. } => {
                check_loc(loc)?;
                check_expr(expr)?;
            }
            StmtKind::Cas {
                reg,
                loc,
                expected,
                desired,
                ..
            } => {
                check_reg(reg)?;
                check_loc(loc)?;
                check_expr(expected)?;
                check_expr(desired)?;
            }
            StmtKind::Fadd {
                reg, loc, addend, ..
            } => {
                check_reg(reg)?;
                check_loc(loc)?;
                check_expr(addend)?;
            }
            StmtKind::Assume(e) => check_expr(e)?,
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                check_expr(cond)?;
                check_stmts(prog, proc, then_branch, labels)?;
                check_stmts(prog, proc, else_branch, labels)?;
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                check_expr(cond)?;
                check_stmts(prog, proc, body, labels)?;
            }
            StmtKind::Skip | StmtKind::Fence | StmtKind::Goal => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_procs_one_var() {
        let prog = parse("var x\nproc p1 { reg r1\n r1 = x.rlx\n}\nproc p2 { x.rlx = 1 }").unwrap();
        assert_eq!(prog.processes.len(), 2);
        assert_eq!(prog.locations, vec!["x".to_string()]);
    }

    #[test]
    fn duplicate_register_rejected() {
        let err = parse("var x\nproc p1 { reg r1 }\nproc p2 { reg r1 }").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateRegister(r) if r == "r1"));
    }

    #[test]
    fn undeclared_location_rejected() {
        let err = parse("var x\nproc p1 { reg r\n r = y.rlx\n}").unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredName(n, _) if n == "y"));
    }

    #[test]
    fn duplicate_label_rejected() {
        let err = parse("var x\nproc p1 { reg r\n a: r = 1\n a: r = 2\n}").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateLabel(l) if l == "a"));
    }

    #[test]
    fn message_passing_example_shape() {
        // The two-process if/else program with an assume chain.
        let src = "
var x z
proc p1 {
  reg r1
  r1 = x.rlx
  if (r1 != 2) {
    z.rlx = 1
    r1 = z.rlx
    assume(r1 == 3)
    z.rlx = 2
  } else {
    z.rlx = 2
    goal
  }
}
proc p2 {
  reg r2
  z.rlx = 3
  r2 = z.rlx
  assume(r2 == 2)
  x.rlx = 2
}
";
        let prog = parse(src).unwrap();
        assert_eq!(prog.processes.len(), 2);
        assert_eq!(prog.locations.len(), 2);
        // p1: read, if (containing 4 + 2 statements).
        assert_eq!(prog.processes[0].body.len(), 2);
        if let StmtKind::If {
            then_branch,
            else_branch,
            ..
        } = &prog.processes[0].body[1].kind
        {
            assert_eq!(then_branch.len(), 4);
            assert_eq!(else_branch.len(), 2);
        } else {
            panic!("expected if/else");
        }
        assert_eq!(prog.processes[1].body.len(), 4);
    }

    #[test]
    fn cas_and_fadd_forms() {
        let src = "var x\nproc p { reg r\n r = cas.rlx.ra(x, 0, 1)\n r = fadd.rlx.rlx(x, 1)\n}";
        let prog = parse(src).unwrap();
        assert!(matches!(
            prog.processes[0].body[0].kind,
            StmtKind::Cas {
                mode_r: Mode::Rlx,
                mode_w: Mode::Ra,
                ..
            }
        ));
        assert!(!prog.is_rlx_only());
    }

    #[test]
    fn mem_atom_in_condition() {
        let src = "var x\nproc p { reg r\n assume(x.rlx == 2)\n}";
        let prog = parse(src).unwrap();
        if let StmtKind::Assume(e) = &prog.processes[0].body[0].kind {
            assert_eq!(e.mem_atoms(), vec![("x", Mode::Rlx)]);
        } else {
            panic!();
        }
    }
}
