//! Compiled control-flow form shared by every engine.
//!
//! Structured statements become a flat instruction list per process.
//! `loc.mode` atoms in conditions are desugared into reads of hidden
//! registers placed before the branch, so every condition in the flat form
//! is a pure register expression.

use super::ast::{self, BinOp, Expr, Mode, Program, StmtKind, Value};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegId(pub usize);

/// Expression over resolved registers; conditions are non-zero tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CExpr {
    Const(Value),
    Reg(RegId),
    Not(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    /// Evaluate without a domain check; the caller checks the domain where a
    /// value is committed to a register or the memory.
    pub fn eval(&self, regs: &[Value]) -> i128 {
        match self {
            CExpr::Const(v) => *v as i128,
            CExpr::Reg(r) => regs[r.0] as i128,
            CExpr::Not(e) => {
                if e.eval(regs) == 0 {
                    1
                } else {
                    0
                }
            }
            CExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(regs), b.eval(regs));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Eq => (a == b) as i128,
                    BinOp::Ne => (a != b) as i128,
                    BinOp::Lt => (a < b) as i128,
                    BinOp::Le => (a <= b) as i128,
                    BinOp::Gt => (a > b) as i128,
                    BinOp::Ge => (a >= b) as i128,
                    BinOp::And => ((a != 0) && (b != 0)) as i128,
                    BinOp::Or => ((a != 0) || (b != 0)) as i128,
                }
            }
        }
    }
}

/// One flat instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatOp {
    Skip,
    Assign(RegId, CExpr),
    Read(RegId, LocId, Mode),
    Write(LocId, Mode, CExpr),
    Cas {
        reg: RegId,
        loc: LocId,
        mode_r: Mode,
        mode_w: Mode,
        expected: CExpr,
        desired: CExpr,
    },
    Fadd {
        reg: RegId,
        loc: LocId,
        mode_r: Mode,
        mode_w: Mode,
        addend: CExpr,
    },
    Fence,
    Assume(CExpr),
    /// Conditional jump: to `then_pc` when the condition is non-zero.
    Branch(CExpr, usize, usize),
    /// Unconditional jump; `loop_id` is set on loop back-edges.
    Jump(usize, Option<usize>),
    /// Reachability target; a sink.
    Goal,
}

impl FlatOp {
    /// Silent ops neither touch memory nor terminate a process.
    pub fn is_silent(&self) -> bool {
        matches!(
            self,
            FlatOp::Skip
                | FlatOp::Assign(..)
                | FlatOp::Assume(..)
                | FlatOp::Branch(..)
                | FlatOp::Jump(..)
        )
    }
}

#[derive(Debug, Clone)]
pub struct FlatProc {
    pub name: String,
    pub ops: Vec<FlatOp>,
    /// Display names per pc (user label where given, else `name:pc`).
    pub labels: Vec<String>,
    /// pcs of `goal` instructions.
    pub goals: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FlatProgram {
    pub locations: Vec<String>,
    pub procs: Vec<FlatProc>,
    /// All registers of the program (paper-style union), hidden ones included.
    pub registers: Vec<String>,
    /// Registers owned by each process (indices into `registers`).
    pub proc_regs: Vec<Vec<RegId>>,
    pub value_max: Value,
    /// Number of loops in the whole program (ids are global).
    pub n_loops: usize,
    /// User label -> (process, pc).
    pub label_map: HashMap<String, (ProcId, usize)>,
}

impl FlatProgram {
    pub fn n_procs(&self) -> usize {
        self.procs.len()
    }

    pub fn n_locs(&self) -> usize {
        self.locations.len()
    }

    pub fn proc_name(&self, p: ProcId) -> &str {
        &self.procs[p.0].name
    }

    pub fn loc_name(&self, l: LocId) -> &str {
        &self.locations[l.0]
    }

    pub fn label_name(&self, p: ProcId, pc: usize) -> String {
        let fp = &self.procs[p.0];
        if pc >= fp.ops.len() {
            format!("{}:end", fp.name)
        } else {
            fp.labels[pc].clone()
        }
    }

    /// Initial register file (all zeros).
    pub fn init_regs(&self) -> Vec<Value> {
        vec![0; self.registers.len()]
    }

    /// Value fits the declared finite domain.
    pub fn in_domain(&self, v: i128) -> Option<Value> {
        if v >= 0 && (v as u64) <= self.value_max {
            Some(v as u64)
        } else {
            None
        }
    }
}

struct Compiler<'a> {
    prog: &'a Program,
    ops: Vec<FlatOp>,
    labels: Vec<Option<String>>,
    reg_names: Vec<String>,
    reg_map: HashMap<String, RegId>,
    proc_regs: Vec<RegId>,
    n_loops: usize,
    hidden: usize,
    proc_name: String,
}

impl<'a> Compiler<'a> {
    fn emit(&mut self, op: FlatOp, label: Option<String>) -> usize {
        self.ops.push(op);
        self.labels.push(label);
        self.ops.len() - 1
    }

    fn fresh_hidden(&mut self) -> RegId {
        let name = format!("{}@t{}", self.proc_name, self.hidden);
        self.hidden += 1;
        let id = RegId(self.reg_names.len());
        self.reg_names.push(name.clone());
        self.reg_map.insert(name, id);
        self.proc_regs.push(id);
        id
    }

    fn reg(&self, name: &str) -> RegId {
        self.reg_map[name]
    }

    fn cexpr(&mut self, e: &Expr, atom_regs: &[RegId]) -> CExpr {
        // atom_regs supplies, in order, the hidden registers hoisted for each
        // MemAtom of the expression.
        let mut idx = 0usize;
        self.cexpr_inner(e, atom_regs, &mut idx)
    }

    fn cexpr_inner(&mut self, e: &Expr, atom_regs: &[RegId], idx: &mut usize) -> CExpr {
        match e {
            Expr::Const(v) => CExpr::Const(*v),
            Expr::Ident(name) => CExpr::Reg(self.reg(name)),
            Expr::MemAtom(..) => {
                let r = atom_regs[*idx];
                *idx += 1;
                CExpr::Reg(r)
            }
            Expr::Not(inner) => CExpr::Not(Box::new(self.cexpr_inner(inner, atom_regs, idx))),
            Expr::Bin(op, a, b) => {
                let a = self.cexpr_inner(a, atom_regs, idx);
                let b = self.cexpr_inner(b, atom_regs, idx);
                CExpr::Bin(*op, Box::new(a), Box::new(b))
            }
        }
    }

    /// Emit reads for each mem atom of a condition; returns hidden registers.
    fn hoist_atoms(&mut self, e: &Expr, label: Option<String>) -> Vec<RegId> {
        let mut regs = Vec::new();
        let mut label = label;
        for (loc, mode) in e.mem_atoms() {
            let loc_id = LocId(self.prog.location_index(loc).expect("resolved"));
            let r = self.fresh_hidden();
            self.emit(FlatOp::Read(r, loc_id, mode), label.take());
            regs.push(r);
        }
        regs
    }

    fn compile_stmts(&mut self, body: &[ast::Stmt]) {
        for s in body {
            self.compile_stmt(s);
        }
    }

    fn compile_stmt(&mut self, s: &ast::Stmt) {
        let label = s.label.clone();
        match &s.kind {
            StmtKind::Skip => {
                self.emit(FlatOp::Skip, label);
            }
            StmtKind::Goal => {
                self.emit(FlatOp::Goal, label);
            }
            StmtKind::Fence => {
                self.emit(FlatOp::Fence, label);
            }
            StmtKind::Assign { reg, expr } => {
                let r = self.reg(reg);
                let e = self.cexpr(expr, &[]);
                self.emit(FlatOp::Assign(r, e), label);
            }
            StmtKind::Read { reg, loc, mode } => {
                let r = self.reg(reg);
                let l = LocId(self.prog.location_index(loc).expect("resolved"));
                self.emit(FlatOp::Read(r, l, *mode), label);
            }
            StmtKind::Write { loc, mode, expr } => {
                let l = LocId(self.prog.location_index(loc).expect("resolved"));
                let e = self.cexpr(expr, &[]);
                self.emit(FlatOp::Write(l, *mode, e), label);
            }
            StmtKind::Cas {
                reg,
                loc,
                mode_r,
                mode_w,
                expected,
                desired,
            } => {
                let r = self.reg(reg);
                let l = LocId(self.prog.location_index(loc).expect("resolved"));
                let ee = self.cexpr(expected, &[]);
                let de = self.cexpr(desired, &[]);
                self.emit(
                    FlatOp::Cas {
                        reg: r,
                        loc: l,
                        mode_r: *mode_r,
                        mode_w: *mode_w,
                        expected: ee,
                        desired: de,
                    },
                    label,
                );
            }
            StmtKind::Fadd {
                reg,
                loc,
                mode_r,
                mode_w,
                addend,
            } => {
                let r = self.reg(reg);
                let l = LocId(self.prog.location_index(loc).expect("resolved"));
                let ae = self.cexpr(addend, &[]);
                self.emit(
                    FlatOp::Fadd {
                        reg: r,
                        loc: l,
                        mode_r: *mode_r,
                        mode_w: *mode_w,
                        addend: ae,
                    },
                    label,
                );
            }
            StmtKind::Assume(e) => {
                let atoms = self.hoist_atoms(e, label.clone());
                let ce = self.cexpr(e, &atoms);
                self.emit(FlatOp::Assume(ce), if atoms.is_empty() { label } else { None });
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let atoms = self.hoist_atoms(cond, label.clone());
                let ce = self.cexpr(cond, &atoms);
                let br = self.emit(
                    FlatOp::Branch(ce, 0, 0),
                    if atoms.is_empty() { label } else { None },
                );
                self.compile_stmts(then_branch);
                if else_branch.is_empty() {
                    let end = self.ops.len();
                    if let FlatOp::Branch(_, t, e) = &mut self.ops[br] {
                        *t = br + 1;
                        *e = end;
                    }
                } else {
                    let jmp_out = self.emit(FlatOp::Jump(0, None), None);
                    let else_pc = self.ops.len();
                    self.compile_stmts(else_branch);
                    let end = self.ops.len();
                    if let FlatOp::Branch(_, t, e) = &mut self.ops[br] {
                        *t = br + 1;
                        *e = else_pc;
                    }
                    if let FlatOp::Jump(t, _) = &mut self.ops[jmp_out] {
                        *t = end;
                    }
                }
            }
            StmtKind::While { cond, body } => {
                let loop_id = self.n_loops;
                self.n_loops += 1;
                let header = self.ops.len();
                let atoms = self.hoist_atoms(cond, label.clone());
                let ce = self.cexpr(cond, &atoms);
                let br = self.emit(
                    FlatOp::Branch(ce, 0, 0),
                    if atoms.is_empty() { label } else { None },
                );
                self.compile_stmts(body);
                self.emit(FlatOp::Jump(header, Some(loop_id)), None);
                let end = self.ops.len();
                if let FlatOp::Branch(_, t, e) = &mut self.ops[br] {
                    *t = br + 1;
                    *e = end;
                }
            }
            StmtKind::DoWhile { body, cond } => {
                let loop_id = self.n_loops;
                self.n_loops += 1;
                let top = self.ops.len();
                // The statement label goes on the first body op.
                let next_label = label;
                if let Some(first) = body.first() {
                    let mut first = first.clone();
                    if first.label.is_none() {
                        first.label = next_label;
                    }
                    self.compile_stmt(&first);
                    self.compile_stmts(&body[1..]);
                } else if let Some(l) = next_label {
                    self.emit(FlatOp::Skip, Some(l));
                }
                let atoms = self.hoist_atoms(cond, None);
                let ce = self.cexpr(cond, &atoms);
                let br = self.emit(FlatOp::Branch(ce, 0, 0), None);
                // Continue branch loops back to the top.
                let back = self.emit(FlatOp::Jump(top, Some(loop_id)), None);
                let end = self.ops.len();
                if let FlatOp::Branch(_, t, e) = &mut self.ops[br] {
                    *t = back;
                    *e = end;
                }
            }
        }
    }
}

/// Compile a resolved program into its flat form.
pub fn compile(prog: &Program) -> FlatProgram {
    let mut registers: Vec<String> = Vec::new();
    let mut reg_map: HashMap<String, RegId> = HashMap::new();
    let mut proc_regs: Vec<Vec<RegId>> = Vec::new();
    for p in &prog.processes {
        let mut own = Vec::new();
        for r in &p.registers {
            let id = RegId(registers.len());
            registers.push(r.clone());
            reg_map.insert(r.clone(), id);
            own.push(id);
        }
        proc_regs.push(own);
    }

    let mut procs = Vec::new();
    let mut n_loops = 0usize;
    let mut label_map = HashMap::new();
    for (pi, p) in prog.processes.iter().enumerate() {
        let mut c = Compiler {
            prog,
            ops: Vec::new(),
            labels: Vec::new(),
            reg_names: std::mem::take(&mut registers),
            reg_map: std::mem::take(&mut reg_map),
            proc_regs: std::mem::take(&mut proc_regs[pi]),
            n_loops,
            hidden: 0,
            proc_name: p.name.clone(),
        };
        c.compile_stmts(&p.body);
        n_loops = c.n_loops;
        registers = c.reg_names;
        reg_map = c.reg_map;
        proc_regs[pi] = c.proc_regs;

        let mut labels = Vec::with_capacity(c.ops.len());
        let mut goals = Vec::new();
        for (pc, op) in c.ops.iter().enumerate() {
            let display = match &c.labels[pc] {
                Some(l) => {
                    label_map.insert(l.clone(), (ProcId(pi), pc));
                    l.clone()
                }
                None => format!("{}:{}", p.name, pc),
            };
            labels.push(display);
            if matches!(op, FlatOp::Goal) {
                goals.push(pc);
            }
        }
        procs.push(FlatProc {
            name: p.name.clone(),
            ops: c.ops,
            labels,
            goals,
        });
    }

    FlatProgram {
        locations: prog.locations.clone(),
        procs,
        registers,
        proc_regs,
        value_max: prog.value_max,
        n_loops,
        label_map,
    }
}

/// Outcome of running the silent prefix from a program point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SilentResult {
    /// Normal form reached: pc is at a memory op, a goal, or the process end.
    At {
        pc: usize,
        regs: Vec<Value>,
        loop_counters: Vec<u32>,
    },
    /// Execution cannot proceed (failed assume, loop bound, domain overflow,
    /// or a silent cycle).
    Stuck,
}

/// Advance through silent instructions until a memory operation, `goal`, or
/// the end of the process. `loop_bound` of `None` means unbounded unrolling
/// with cycle detection.
pub fn advance_silent(
    prog: &FlatProgram,
    proc: ProcId,
    mut pc: usize,
    mut regs: Vec<Value>,
    mut loop_counters: Vec<u32>,
    loop_bound: Option<u32>,
) -> SilentResult {
    let ops = &prog.procs[proc.0].ops;
    let mut seen: Vec<(usize, Vec<Value>)> = Vec::new();
    loop {
        if pc >= ops.len() {
            return SilentResult::At {
                pc,
                regs,
                loop_counters,
            };
        }
        let op = &ops[pc];
        if !op.is_silent() {
            return SilentResult::At {
                pc,
                regs,
                loop_counters,
            };
        }
        match op {
            FlatOp::Skip => pc += 1,
            FlatOp::Assign(r, e) => {
                let v = e.eval(&regs);
                match prog.in_domain(v) {
                    Some(v) => regs[r.0] = v,
                    None => return SilentResult::Stuck,
                }
                pc += 1;
            }
            FlatOp::Assume(e) => {
                if e.eval(&regs) == 0 {
                    return SilentResult::Stuck;
                }
                pc += 1;
            }
            FlatOp::Branch(e, t, f) => {
                pc = if e.eval(&regs) != 0 { *t } else { *f };
            }
            FlatOp::Jump(t, loop_id) => {
                if let Some(id) = loop_id {
                    match loop_bound {
                        Some(bound) => {
                            if loop_counters[*id] >= bound {
                                return SilentResult::Stuck;
                            }
                            loop_counters[*id] += 1;
                        }
                        None => {
                            // Unbounded: cut pure-register cycles.
                            if seen.iter().any(|(p, r)| *p == pc && *r == regs) {
                                return SilentResult::Stuck;
                            }
                            seen.push((pc, regs.clone()));
                        }
                    }
                }
                pc = *t;
            }
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse;

    #[test]
    fn compile_if_else_layout() {
        let prog = parse("var x\nproc p { reg r\n r = x.rlx\n if (r == 0) { x.rlx = 1 } else { x.rlx = 2 }\n goal\n}").unwrap();
        let f = compile(&prog);
        let ops = &f.procs[0].ops;
        assert!(matches!(ops[0], FlatOp::Read(..)));
        assert!(matches!(ops[1], FlatOp::Branch(..)));
        assert!(matches!(ops[ops.len() - 1], FlatOp::Goal));
        assert_eq!(f.procs[0].goals.len(), 1);
    }

    #[test]
    fn condition_atoms_are_hoisted() {
        let prog = parse("var x\nproc p { assume(x.rlx == 2) }").unwrap();
        let f = compile(&prog);
        let ops = &f.procs[0].ops;
        assert!(matches!(ops[0], FlatOp::Read(..)));
        assert!(matches!(ops[1], FlatOp::Assume(..)));
        // Hidden register allocated.
        assert_eq!(f.registers.len(), 1);
    }

    #[test]
    fn silent_advance_stops_at_memory_op() {
        let prog =
            parse("var x\nproc p { reg r\n r = 1\n r = r + 1\n x.rlx = r\n}").unwrap();
        let f = compile(&prog);
        match advance_silent(&f, ProcId(0), 0, f.init_regs(), vec![], Some(1)) {
            SilentResult::At { pc, regs, .. } => {
                assert!(matches!(f.procs[0].ops[pc], FlatOp::Write(..)));
                assert_eq!(regs[0], 2);
            }
            _ => panic!("stuck"),
        }
    }

    #[test]
    fn loop_bound_cuts_back_edges() {
        let prog = parse("var x\nproc p { reg r\n while (r == 0) { skip } x.rlx = 1\n}").unwrap();
        let f = compile(&prog);
        // r stays 0, so the loop spins; with L=2 the walk must get stuck.
        let res = advance_silent(&f, ProcId(0), 0, f.init_regs(), vec![0], Some(2));
        assert_eq!(res, SilentResult::Stuck);
    }

    #[test]
    fn unbounded_mode_detects_cycles() {
        let prog = parse("var x\nproc p { reg r\n while (r == 0) { skip } x.rlx = 1\n}").unwrap();
        let f = compile(&prog);
        let res = advance_silent(&f, ProcId(0), 0, f.init_regs(), vec![0], None);
        assert_eq!(res, SilentResult::Stuck);
    }

    #[test]
    fn do_while_executes_body_then_tests() {
        let prog =
            parse("var x\nproc p { reg r\n do { r = r + 1 } while (r < 2)\n x.rlx = r\n}").unwrap();
        let f = compile(&prog);
        match advance_silent(&f, ProcId(0), 0, f.init_regs(), vec![0], Some(8)) {
            SilentResult::At { pc, regs, loop_counters } => {
                assert!(matches!(f.procs[0].ops[pc], FlatOp::Write(..)));
                assert_eq!(regs[0], 2);
                assert_eq!(loop_counters[0], 1);
            }
            _ => panic!("stuck"),
        }
    }
}
