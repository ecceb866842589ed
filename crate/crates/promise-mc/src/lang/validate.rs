//! Semantic well-formedness checks beyond parsing.

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FindingKind {
    /// A location appears as a plain identifier in an expression. Locations
    /// may only be accessed through reads, writes, RMWs, or `loc.mode` sugar
    /// in conditions.
    LocationInPureExpr,
    /// A constant exceeds `value_max`.
    ValueOutOfDomain,
    /// A `loc.mode` atom appears outside of a condition (e.g. in a write
    /// right-hand side), where the read-then-use desugaring has no sound
    /// insertion point.
    MemAtomOutsideCondition,
    /// A process body is empty; it terminates immediately.
    EmptyProcess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    pub process: Option<String>,
    pub line: usize,
    pub message: String,
}

/// Result of validating a parsed program. Empty iff the program is
/// well-formed; `EmptyProcess` findings are informational.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// True when no finding blocks execution.
    pub fn is_clean(&self) -> bool {
        self.findings
            .iter()
            .all(|f| f.kind == FindingKind::EmptyProcess)
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

pub fn validate(prog: &Program) -> ValidationReport {
    let mut report = ValidationReport::default();
    for proc in &prog.processes {
        if proc.body.is_empty() {
            report.findings.push(Finding {
                kind: FindingKind::EmptyProcess,
                process: Some(proc.name.clone()),
                line: 0,
                message: format!("process `{}` has an empty body", proc.name),
            });
        }
        walk_stmts(prog, proc, &proc.body, &mut report);
    }
    report
}

fn walk_stmts(prog: &Program, proc: &Process, body: &[Stmt], report: &mut ValidationReport) {
    for s in body {
        // Constants must stay inside the declared data domain.
        let mut exprs: Vec<&Expr> = Vec::new();
        let mut cond_exprs: Vec<&Expr> = Vec::new();
        match &s.kind {
            StmtKind::Assign { expr, .. } | StmtKind::Write { expr, .. } => exprs.push(expr),
            StmtKind::Cas {
                expected, desired, ..
            } => {
                exprs.push(expected);
                exprs.push(desired);
            }
            StmtKind::Fadd { addend, .. } => exprs.push(addend),
            StmtKind::Assume(e) => cond_exprs.push(e),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond_exprs.push(cond);
                walk_stmts(prog, proc, then_branch, report);
                walk_stmts(prog, proc, else_branch, report);
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                cond_exprs.push(cond);
                walk_stmts(prog, proc, body, report);
            }
            _ => {}
        }
        for e in exprs.iter().chain(cond_exprs.iter()) {
            for v in e.consts() {
                if v > prog.value_max {
                    report.findings.push(Finding {
                        kind: FindingKind::ValueOutOfDomain,
                        process: Some(proc.name.clone()),
                        line: s.line,
                        message: format!(
                            "constant {v} exceeds value_max {} (value out of domain)",
                            prog.value_max
                        ),
                    });
                }
            }
            // A bare location identifier is never a register expression.
            for id in e.idents() {
                if prog.locations.iter().any(|l| l == id) {
                    report.findings.push(Finding {
                        kind: FindingKind::LocationInPureExpr,
                        process: Some(proc.name.clone()),
                        line: s.line,
                        message: format!(
                            "location `{id}` in pure expression; read it into a register first \
                             (or use `{id}.rlx` in a condition)"
                        ),
                    });
                }
            }
        }
        // `loc.mode` sugar is only desugarable in conditions.
        for e in &exprs {
            if !e.mem_atoms().is_empty() {
                report.findings.push(Finding {
                    kind: FindingKind::MemAtomOutsideCondition,
                    process: Some(proc.name.clone()),
                    line: s.line,
                    message: "memory access inside a non-condition expression".into(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn well_formed_lb_is_clean() {
        let prog = parse::parse(
            "var x y\nproc p1 { reg r1\n r1 = x.rlx\n y.rlx = 1\n}\nproc p2 { reg r2\n r2 = y.rlx\n x.rlx = 1\n}",
        )
        .unwrap();
        let r = validate(&prog);
        assert!(r.is_empty(), "{:?}", r.findings);
    }

    #[test]
    fn bare_location_in_assume_is_flagged() {
        let prog = parse::parse("var x\nproc p { reg r\n assume(x == 2)\n}").unwrap();
        let r = validate(&prog);
        assert!(r
            .findings
            .iter()
            .any(|f| f.kind == FindingKind::LocationInPureExpr));
    }

    #[test]
    fn value_out_of_domain_is_flagged() {
        let prog = parse::parse("value_max 3\nvar x\nproc p { x.rlx = 9 }").unwrap();
        let r = validate(&prog);
        assert!(r
            .findings
            .iter()
            .any(|f| f.kind == FindingKind::ValueOutOfDomain));
    }

    #[test]
    fn moded_atom_in_condition_is_fine() {
        let prog = parse::parse("var x\nproc p { assume(x.rlx == 2) }").unwrap();
        assert!(validate(&prog).is_empty());
    }
}
