//! Canonical text form. `parse(pretty(p))` is structurally equal to `p`.

use super::ast::*;
use std::fmt::Write;

pub fn pretty_print(prog: &Program) -> String {
    let mut out = String::new();
    if prog.value_max != DEFAULT_VALUE_MAX {
        let _ = writeln!(out, "value_max {};", prog.value_max);
    }
    if !prog.locations.is_empty() {
        let _ = writeln!(out, "var {};", prog.locations.join(", "));
    }
    for p in &prog.processes {
        if p.registers.is_empty() && p.body.is_empty() {
            let _ = writeln!(out, "proc {} {{ }}", p.name);
            continue;
        }
        let _ = writeln!(out, "proc {} {{", p.name);
        if !p.registers.is_empty() {
            let _ = writeln!(out, "  reg {};", p.registers.join(", "));
        }
        for s in &p.body {
            write_stmt(&mut out, s, 1);
        }
        let _ = writeln!(out, "}}");
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    if let Some(l) = &s.label {
        let _ = write!(out, "{l}: ");
    }
    match &s.kind {
        StmtKind::Skip => out.push_str("skip;\n"),
        StmtKind::Goal => out.push_str("goal;\n"),
        StmtKind::Fence => out.push_str("fence;\n"),
        StmtKind::Assign { reg, expr } => {
            let _ = writeln!(out, "{reg} = {};", expr_str(expr));
        }
        StmtKind::Read { reg, loc, mode } => {
            let _ = writeln!(out, "{reg} = {loc}.{mode};");
        }
        StmtKind::Write { loc, mode, expr } => {
            let _ = writeln!(out, "{loc}.{mode} = {};", expr_str(expr));
        }
        StmtKind::Cas {
            reg,
            loc,
            mode_r,
            mode_w,
            expected,
            desired,
        } => {
            let _ = writeln!(
                out,
                "{reg} = cas.{mode_r}.{mode_w}({loc}, {}, {});",
                expr_str(expected),
                expr_str(desired)
            );
        }
        StmtKind::Fadd {
            reg,
            loc,
            mode_r,
            mode_w,
            addend,
        } => {
            let _ = writeln!(
                out,
                "{reg} = fadd.{mode_r}.{mode_w}({loc}, {});",
                expr_str(addend)
            );
        }
        StmtKind::Assume(e) => {
            let _ = writeln!(out, "assume({});", expr_str(e));
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ({}) {{", expr_str(cond));
            for t in then_branch {
                write_stmt(out, t, depth + 1);
            }
            if else_branch.is_empty() {
                indent(out, depth);
                out.push_str("}\n");
            } else {
                indent(out, depth);
                out.push_str("} else {\n");
                for t in else_branch {
                    write_stmt(out, t, depth + 1);
                }
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", expr_str(cond));
            for t in body {
                write_stmt(out, t, depth + 1);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::DoWhile { body, cond } => {
            out.push_str("do {\n");
            for t in body {
                write_stmt(out, t, depth + 1);
            }
            indent(out, depth);
            let _ = writeln!(out, "}} while ({});", expr_str(cond));
        }
    }
}

fn expr_str(e: &Expr) -> String {
    expr_prec(e, 0)
}

fn prec_of(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul => 5,
    }
}

fn expr_prec(e: &Expr, min: u8) -> String {
    match e {
        Expr::Const(v) => v.to_string(),
        Expr::Ident(s) => s.clone(),
        Expr::MemAtom(l, m) => format!("{l}.{m}"),
        Expr::Not(inner) => format!("!{}", expr_prec(inner, 6)),
        Expr::Bin(op, a, b) => {
            let p = prec_of(*op);
            // Comparisons do not associate; render nested ones parenthesized.
            let s = format!(
                "{} {} {}",
                expr_prec(a, p),
                op.symbol(),
                expr_prec(b, p + 1)
            );
            if p < min {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse;

    fn roundtrip(src: &str) {
        let p1 = parse(src).unwrap();
        let text = pretty_print(&p1);
        let p2 = parse(&text).unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
        // Line numbers differ; compare modulo them.
        let t2 = pretty_print(&p2);
        assert_eq!(text, t2, "pretty-print not a fixpoint");
        assert_eq!(p1.locations, p2.locations);
        assert_eq!(p1.value_max, p2.value_max);
        assert_eq!(p1.processes.len(), p2.processes.len());
    }

    #[test]
    fn roundtrip_simple() {
        roundtrip("var x\nproc p1 { reg r\n r = x.rlx\n x.ra = r + 1\n}");
    }

    #[test]
    fn roundtrip_nested_control() {
        roundtrip(
            "var x y\nproc p { reg r, s\n if (r == 0) { while (s < 2) { s = s + 1\n } } else { do { r = r - 1\n } while (r > 0) }\n}",
        );
    }

    #[test]
    fn roundtrip_empty_process() {
        roundtrip("var x\nproc p { }");
    }

    #[test]
    fn roundtrip_labels_and_ops() {
        roundtrip(
            "value_max 3;\nvar x, y\nproc p { reg r\n top: r = cas.rlx.rlx(x, 0, 1)\n r = fadd.rlx.rlx(y, 1)\n assume(x.rlx == 2 && r != 0)\n fence\n goal\n}",
        );
    }
}
