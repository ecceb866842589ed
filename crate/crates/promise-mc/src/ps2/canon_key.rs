//! Order-isomorphic canonical forms of machine states.
//!
//! Two states whose per-location timestamp structures are order-isomorphic
//! (same ordering, same adjacencies, same view memberships) behave
//! identically under every rule guard, so the explorer dedupes on this form.

use super::memory::{ElemKind, Memory};
use super::state::MachineState;
use super::time::Ts;
use crate::lang::flat::{FlatProgram, ProcId};
use crate::lang::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CanonKind {
    Msg { val: Value, view: Option<Vec<u32>> },
    Res,
}

/// Element owner relative to a distinguished process (used by cert keys) or
/// absolute (canonical machine states).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonOwner {
    None,
    Proc(usize),
    SelfP,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonElem {
    pub frm: u32,
    pub to: u32,
    pub kind: CanonKind,
    pub owner: CanonOwner,
}

/// Canonical image of a full machine state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonMachine {
    pub pcs: Vec<usize>,
    pub regs: Vec<Value>,
    pub views: Vec<Vec<u32>>,
    pub global: Vec<u32>,
    pub mem: Vec<Vec<CanonElem>>,
}

/// Canonical projection determining a certification outcome. The certifying
/// process is part of the key: the pc is process-relative and the future
/// code differs per process.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CertKey {
    pub proc: usize,
    pub pc: usize,
    pub regs: Vec<Value>,
    pub view: Vec<u32>,
    pub global: Vec<u32>,
    pub mem: Vec<Vec<CanonElem>>,
}

/// Per-location tables of every timestamp that occurs anywhere in the state.
fn axes(ms: &MachineState) -> Vec<Vec<Ts>> {
    let n_locs = ms.memory.locs.len();
    let mut axes: Vec<Vec<Ts>> = vec![Vec::new(); n_locs];
    collect_memory(&ms.memory, &mut axes);
    for v in &ms.views {
        for (li, t) in v.0.iter().enumerate() {
            axes[li].push(t.clone());
        }
    }
    for (li, t) in ms.global.0.iter().enumerate() {
        axes[li].push(t.clone());
    }
    finish_axes(axes)
}

fn collect_memory(mem: &Memory, axes: &mut [Vec<Ts>]) {
    for (li, es) in mem.locs.iter().enumerate() {
        for e in es {
            axes[li].push(e.frm.clone());
            axes[li].push(e.to.clone());
            if let ElemKind::Msg {
                view: Some(v), ..
            } = &e.kind
            {
                for (lj, t) in v.0.iter().enumerate() {
                    axes[lj].push(t.clone());
                }
            }
        }
    }
}

fn finish_axes(mut axes: Vec<Vec<Ts>>) -> Vec<Vec<Ts>> {
    for a in &mut axes {
        a.sort();
        a.dedup();
    }
    axes
}

fn index(axis: &[Ts], t: &Ts) -> u32 {
    axis.binary_search(t).expect("timestamp collected") as u32
}

fn canon_view(axes: &[Vec<Ts>], v: &super::view::View) -> Vec<u32> {
    v.0.iter()
        .enumerate()
        .map(|(li, t)| index(&axes[li], t))
        .collect()
}

fn canon_mem(axes: &[Vec<Ts>], mem: &Memory, owner_of: impl Fn(Option<ProcId>) -> CanonOwner) -> Vec<Vec<CanonElem>> {
    mem.locs
        .iter()
        .enumerate()
        .map(|(li, es)| {
            es.iter()
                .map(|e| CanonElem {
                    frm: index(&axes[li], &e.frm),
                    to: index(&axes[li], &e.to),
                    kind: match &e.kind {
                        ElemKind::Msg { val, view } => CanonKind::Msg {
                            val: *val,
                            view: view.as_ref().map(|v| canon_view(axes, v)),
                        },
                        ElemKind::Res => CanonKind::Res,
                    },
                    owner: owner_of(e.promised_by),
                })
                .collect()
        })
        .collect()
}

/// Canonicalize a machine state: timestamps are renamed per location to
/// consecutive indices preserving order and adjacency.
pub fn canonicalize(ms: &MachineState) -> CanonMachine {
    let axes = axes(ms);
    CanonMachine {
        pcs: ms.pcs.clone(),
        regs: ms.regs.clone(),
        views: ms.views.iter().map(|v| canon_view(&axes, v)).collect(),
        global: canon_view(&axes, &ms.global),
        mem: canon_mem(&axes, &ms.memory, |o| match o {
            None => CanonOwner::None,
            Some(p) => CanonOwner::Proc(p.0),
        }),
    }
}

/// The canonical projection of `p`'s certification problem: `p`'s control
/// point and registers, `p`'s view, the global view, and the memory with
/// owners reduced to self/other.
pub fn cert_key(prog: &FlatProgram, ms: &MachineState, p: ProcId) -> CertKey {
    let mut proj = ms.clone();
    // Only p's view participates; replace the others with p's to keep the
    // axis set minimal and the key independent of them.
    for q in 0..proj.views.len() {
        if q != p.0 {
            proj.views[q] = proj.views[p.0].clone();
        }
    }
    let axes = axes(&proj);
    let regs: Vec<Value> = prog.proc_regs[p.0].iter().map(|r| ms.regs[r.0]).collect();
    CertKey {
        proc: p.0,
        pc: ms.pcs[p.0],
        regs,
        view: canon_view(&axes, &ms.views[p.0]),
        global: canon_view(&axes, &ms.global),
        mem: canon_mem(&axes, &ms.memory, |o| match o {
            None => CanonOwner::None,
            Some(q) if q == p => CanonOwner::SelfP,
            Some(_) => CanonOwner::Other,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ps2::memory::{Elem, ElemKind};
    use crate::ps2::state::MachineState;
    use crate::ps2::view::View;

    fn state_with(mem: Memory, view_to: Option<Ts>) -> MachineState {
        let n = mem.locs.len();
        let mut v = View::init(n);
        if let Some(t) = view_to {
            v.set(crate::lang::LocId(0), t);
        }
        MachineState {
            pcs: vec![0],
            regs: vec![],
            views: vec![v],
            memory: mem,
            global: View::init(n),
        }
    }

    fn msg(frm: u64, to: u64, val: Value) -> Elem {
        Elem {
            frm: Ts::from_int(frm),
            to: Ts::from_int(to),
            kind: ElemKind::Msg { val, view: None },
            promised_by: None,
        }
    }

    #[test]
    fn order_isomorphic_states_collapse() {
        let l = crate::lang::LocId(0);
        let m1 = Memory::init(1).insert_additive(l, msg(1, 2, 1)).unwrap();
        let m2 = Memory::init(1).insert_additive(l, msg(5, 9, 1)).unwrap();
        let c1 = canonicalize(&state_with(m1.clone(), Some(Ts::from_int(2))));
        let c2 = canonicalize(&state_with(m2, Some(Ts::from_int(9))));
        assert_eq!(c1, c2);
        // But adjacency is distinguished: (0,2] abuts the initial message.
        let m3 = Memory::init(1).insert_additive(l, msg(0, 2, 1)).unwrap();
        let c3 = canonicalize(&state_with(m3, Some(Ts::from_int(2))));
        assert_ne!(c1, c3);
    }

    #[test]
    fn canonicalize_is_idempotent_on_integer_states() {
        let l = crate::lang::LocId(0);
        let m = Memory::init(1).insert_additive(l, msg(0, 1, 1)).unwrap();
        let s = state_with(m, Some(Ts::from_int(1)));
        let c1 = canonicalize(&s);
        // Rebuild a state from the canonical indices and canonicalize again.
        let m2 = Memory {
            locs: vec![c1.mem[0]
                .iter()
                .map(|e| Elem {
                    frm: Ts::from_int(e.frm as u64),
                    to: Ts::from_int(e.to as u64),
                    kind: match &e.kind {
                        CanonKind::Msg { val, .. } => ElemKind::Msg {
                            val: *val,
                            view: if e.frm == 0 && e.to == 0 {
                                Some(View::init(1))
                            } else {
                                None
                            },
                        },
                        CanonKind::Res => ElemKind::Res,
                    },
                    promised_by: None,
                })
                .collect()],
        };
        let s2 = state_with(m2, Some(Ts::from_int(c1.views[0][0] as u64)));
        assert_eq!(canonicalize(&s2).mem, c1.mem);
        assert_eq!(canonicalize(&s2).views, c1.views);
    }
}
