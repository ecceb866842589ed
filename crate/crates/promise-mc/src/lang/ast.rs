//! Abstract syntax for the concurrent input language.

use std::fmt;

/// A value from the finite data domain `0..=value_max`.
pub type Value = u64;

/// Default data domain bound: values range over `0..=7` unless a program
/// declares `value_max` explicitly.
pub const DEFAULT_VALUE_MAX: Value = 7;

/// Memory access mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Relaxed access.
    Rlx,
    /// Release write / acquire read.
    Ra,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rlx => write!(f, "rlx"),
            Mode::Ra => write!(f, "ra"),
        }
    }
}

/// Binary operators over register expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

/// Expressions over registers and constants. Booleans are encoded as 0/1 and
/// a condition holds iff it evaluates to a non-zero value.
///
/// `MemAtom` (a `loc.mode` access inside an expression) is only legal in the
/// conditions of `assume`, `if`, `while` and `do/while`; it is sugar for a
/// read into a fresh register placed before the test.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    /// A register (or, erroneously, a bare location: validation flags that).
    Ident(String),
    /// `loc.mode` appearing inside an expression.
    MemAtom(String, Mode),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// All identifiers appearing as plain `Ident` atoms.
    pub fn idents(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Ident(name) = e {
                out.push(name.as_str());
            }
        });
        out
    }

    /// All `loc.mode` atoms in evaluation (left-to-right) order.
    pub fn mem_atoms(&self) -> Vec<(&str, Mode)> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::MemAtom(loc, mode) = e {
                out.push((loc.as_str(), *mode));
            }
        });
        out
    }

    /// All constants in the expression.
    pub fn consts(&self) -> Vec<Value> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Const(v) = e {
                out.push(*v);
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Not(e) => e.walk(f),
            Expr::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

/// A single statement, optionally labeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    /// User-supplied label, if any. Unlabeled statements get auto-generated
    /// labels of the form `proc:index` during compilation.
    pub label: Option<String>,
    pub kind: StmtKind,
    /// 1-based source line, for diagnostics.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Skip,
    /// `r = e` over registers and constants.
    Assign { reg: String, expr: Expr },
    /// `r = x.mode`
    Read { reg: String, loc: String, mode: Mode },
    /// `x.mode = e`
    Write { loc: String, mode: Mode, expr: Expr },
    /// `r = cas.or.ow(x, expected, desired)`; `r` receives the old value.
    Cas {
        reg: String,
        loc: String,
        mode_r: Mode,
        mode_w: Mode,
        expected: Expr,
        desired: Expr,
    },
    /// `r = fadd.or.ow(x, addend)`; `r` receives the old value.
    Fadd {
        reg: String,
        loc: String,
        mode_r: Mode,
        mode_w: Mode,
        addend: Expr,
    },
    /// `fence` (SC fence).
    Fence,
    /// `assume(e)`; blocks unless `e` is non-zero.
    Assume(Expr),
    /// `if (e) { .. } else { .. }`; the else block may be empty.
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    /// `while (e) { .. }`
    While { cond: Expr, body: Vec<Stmt> },
    /// `do { .. } while (e)`
    DoWhile { body: Vec<Stmt>, cond: Expr },
    /// Reachability target marker; a sink once reached.
    Goal,
}

/// A process declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub name: String,
    /// Declared registers, in declaration order.
    pub registers: Vec<String>,
    pub body: Vec<Stmt>,
}

/// A parsed program: locations, processes, and the data-domain bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    /// Shared locations, in declaration order.
    pub locations: Vec<String>,
    pub processes: Vec<Process>,
    /// Values range over `0..=value_max`.
    pub value_max: Value,
}

impl Program {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }

    pub fn process_index(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.name == name)
    }

    /// True if no statement uses the `ra` access mode.
    pub fn is_rlx_only(&self) -> bool {
        fn stmt_rlx(s: &Stmt) -> bool {
            match &s.kind {
                StmtKind::Read { mode, .. } | StmtKind::Write { mode, .. } => *mode == Mode::Rlx,
                StmtKind::Cas { mode_r, mode_w, .. } | StmtKind::Fadd { mode_r, mode_w, .. } => {
                    *mode_r == Mode::Rlx && *mode_w == Mode::Rlx
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    cond.mem_atoms().iter().all(|(_, m)| *m == Mode::Rlx)
                        && then_branch.iter().all(stmt_rlx)
                        && else_branch.iter().all(stmt_rlx)
                }
                StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                    cond.mem_atoms().iter().all(|(_, m)| *m == Mode::Rlx)
                        && body.iter().all(stmt_rlx)
                }
                StmtKind::Assume(e) => e.mem_atoms().iter().all(|(_, m)| *m == Mode::Rlx),
                _ => true,
            }
        }
        self.processes
            .iter()
            .all(|p| p.body.iter().all(stmt_rlx))
    }

    /// True if no process contains a loop.
    pub fn is_loop_free(&self) -> bool {
        fn stmt_loop_free(s: &Stmt) -> bool {
            match &s.kind {
                StmtKind::While { .. } | StmtKind::DoWhile { .. } => false,
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    then_branch.iter().all(stmt_loop_free)
                        && else_branch.iter().all(stmt_loop_free)
                }
                _ => true,
            }
        }
        self.processes
            .iter()
            .all(|p| p.body.iter().all(stmt_loop_free))
    }
}
