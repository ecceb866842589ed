//! Higher-order words: the timestamp-free encoding of one location's memory.
//!
//! A simple word is a block of interval-adjacent memory types; the `#`
//! marker sits immediately before its last symbol, the only one available
//! for RMW. Flat positions are 1-based and count the `#` markers, so the
//! insertion guards can be stated as in `hw[pos-1] = #`.

use crate::lang::flat::ProcId;
use crate::lang::Value;
use std::fmt;
use thiserror::Error;

/// Pointer set over the processes plus the fence process `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PtrSet(pub u32);

/// The dummy fence process: one past the real processes.
pub fn g_index(n_procs: usize) -> usize {
    n_procs
}

impl PtrSet {
    pub fn empty() -> PtrSet {
        PtrSet(0)
    }

    /// All processes plus `g`.
    pub fn all(n_procs: usize) -> PtrSet {
        PtrSet((1u32 << (n_procs + 1)) - 1)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1 << i);
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MtKind {
    Msg,
    Prm,
}

/// A memory type: message-or-promise, its value, the process that added it,
/// the set of pointers parked on it, and an optional reservation tag on the
/// slot to its right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemType {
    pub kind: MtKind,
    pub val: Value,
    pub owner: ProcId,
    pub ptrs: PtrSet,
    pub reserved_by: Option<ProcId>,
}

impl MemType {
    pub fn msg(val: Value, owner: ProcId, ptrs: PtrSet) -> MemType {
        MemType {
            kind: MtKind::Msg,
            val,
            owner,
            ptrs,
            reserved_by: None,
        }
    }

    pub fn prm(val: Value, owner: ProcId) -> MemType {
        MemType {
            kind: MtKind::Prm,
            val,
            owner,
            ptrs: PtrSet::empty(),
            reserved_by: None,
        }
    }

    /// Pointer-set-empty message type (the losable kind).
    pub fn is_empty_type(&self) -> bool {
        self.kind == MtKind::Msg && self.ptrs.is_empty()
    }
}

/// `body… # last`; body types never carry reservation tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimpleWord {
    pub body: Vec<MemType>,
    pub last: MemType,
}

impl SimpleWord {
    pub fn singleton(last: MemType) -> SimpleWord {
        SimpleWord {
            body: Vec::new(),
            last,
        }
    }

    /// Number of flat positions including the `#`.
    pub fn flat_len(&self) -> usize {
        self.body.len() + 2
    }
}

/// A non-empty sequence of simple words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HWord {
    pub words: Vec<SimpleWord>,
}

/// What sits at a flat position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym<'a> {
    Hash,
    Type(&'a MemType),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("malformed word: process pointer occurs {0} times")]
    MalformedWord(usize),
    #[error("rule {rule} guard failed: {clause}")]
    GuardFailed {
        rule: &'static str,
        clause: &'static str,
    },
}

/// Insertion rules for [`HWord::insert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsRule {
    /// New simple word after the position.
    N,
    /// Append at the end of the simple word.
    E,
    /// Split a promise: insert immediately before it.
    SP,
    /// Fulfil a promise in place.
    FP,
    /// Split a reservation owned by the inserter.
    SR,
}

impl HWord {
    /// The initial word: one simple word holding the initial message, every
    /// process (and `g`) pointing at it. The nominal owner is process 0.
    pub fn initial(n_procs: usize) -> HWord {
        HWord {
            words: vec![SimpleWord::singleton(MemType::msg(
                0,
                ProcId(0),
                PtrSet::all(n_procs),
            ))],
        }
    }

    pub fn flat_len(&self) -> usize {
        self.words.iter().map(|w| w.flat_len()).sum()
    }

    /// Symbol at a 1-based flat position.
    pub fn sym_at(&self, pos: usize) -> Option<Sym<'_>> {
        let mut off = 0usize;
        for w in &self.words {
            let l = w.flat_len();
            if pos <= off + l {
                let rel = pos - off; // 1-based within the word
                return Some(if rel <= w.body.len() {
                    Sym::Type(&w.body[rel - 1])
                } else if rel == w.body.len() + 1 {
                    Sym::Hash
                } else {
                    Sym::Type(&w.last)
                });
            }
            off += l;
        }
        None
    }

    /// Locate a flat position: (word index, within-word role).
    fn locate(&self, pos: usize) -> Option<(usize, Loc)> {
        let mut off = 0usize;
        for (wi, w) in self.words.iter().enumerate() {
            let l = w.flat_len();
            if pos <= off + l {
                let rel = pos - off;
                return Some((
                    wi,
                    if rel <= w.body.len() {
                        Loc::Body(rel - 1)
                    } else if rel == w.body.len() + 1 {
                        Loc::Hash
                    } else {
                        Loc::Last
                    },
                ));
            }
            off += l;
        }
        None
    }

    /// Flat position of the first symbol of word `wi`'s last type.
    pub fn last_pos(&self, wi: usize) -> usize {
        let mut off = 0usize;
        for w in &self.words[..wi] {
            off += w.flat_len();
        }
        off + self.words[wi].flat_len()
    }

    /// All memory types with their flat positions, left to right.
    pub fn types(&self) -> Vec<(usize, &MemType)> {
        let mut out = Vec::new();
        let mut off = 0usize;
        for w in &self.words {
            for (i, t) in w.body.iter().enumerate() {
                out.push((off + i + 1, t));
            }
            out.push((off + w.flat_len(), &w.last));
            off += w.flat_len();
        }
        out
    }

    /// The unique flat position whose pointer set contains `who` (a process
    /// index or the `g` index).
    pub fn ptr(&self, who: usize) -> Result<usize, WordError> {
        let hits: Vec<usize> = self
            .types()
            .into_iter()
            .filter(|(_, t)| t.ptrs.contains(who))
            .map(|(p, _)| p)
            .collect();
        if hits.len() == 1 {
            Ok(hits[0])
        } else {
            Err(WordError::MalformedWord(hits.len()))
        }
    }

    /// Inv1: every process and `g` occurs in exactly one pointer set.
    pub fn well_formed(&self, n_procs: usize) -> bool {
        (0..=n_procs).all(|i| self.ptr(i).is_ok())
    }

    /// Inv2: no message type owned by `p` strictly right of `ptr(p)`.
    pub fn inv2(&self, p: ProcId) -> bool {
        let Ok(pp) = self.ptr(p.0) else {
            return false;
        };
        self.types()
            .into_iter()
            .all(|(pos, t)| !(pos > pp && t.kind == MtKind::Msg && t.owner == p))
    }

    pub fn promise_count(&self) -> usize {
        self.types()
            .into_iter()
            .filter(|(_, t)| t.kind == MtKind::Prm)
            .count()
    }

    pub fn has_promise_of(&self, p: ProcId) -> bool {
        self.types()
            .into_iter()
            .any(|(_, t)| t.kind == MtKind::Prm && t.owner == p)
    }

    fn remove_ptr(&mut self, who: usize) {
        for w in &mut self.words {
            for t in &mut w.body {
                t.ptrs.remove(who);
            }
            w.last.ptrs.remove(who);
        }
    }

    /// Move `who`'s pointer to the type at `pos`.
    pub fn move_ptr(&self, who: usize, pos: usize) -> Result<HWord, WordError> {
        let (wi, loc) = self.locate(pos).ok_or(WordError::GuardFailed {
            rule: "move",
            clause: "position out of range",
        })?;
        let mut out = self.clone();
        out.remove_ptr(who);
        match loc {
            Loc::Body(i) => out.words[wi].body[i].ptrs.insert(who),
            Loc::Last => out.words[wi].last.ptrs.insert(who),
            Loc::Hash => {
                return Err(WordError::GuardFailed {
                    rule: "move",
                    clause: "cannot point at #",
                })
            }
        }
        Ok(out)
    }

    /// The five insertion rules. `pos` follows the paper's conventions: for
    /// N/E it is the last-symbol position after which the new type goes; for
    /// SP/FP/SR it is the position of the promise / tagged type itself.
    /// `move_inserter` distinguishes writes (pointer moves onto the new
    /// type) from promises (pointer stays).
    pub fn insert(
        &self,
        pos: usize,
        m: MemType,
        rule: InsRule,
        move_inserter: bool,
    ) -> Result<HWord, WordError> {
        let inserter = m.owner;
        match rule {
            InsRule::N => {
                let (wi, loc) = self.locate(pos).ok_or(GUARD_N_RANGE)?;
                if loc != Loc::Last {
                    return Err(GUARD_N_RANGE);
                }
                let mut out = self.clone();
                if move_inserter {
                    out.remove_ptr(inserter.0);
                }
                let mut ty = m;
                if move_inserter {
                    ty.ptrs.insert(inserter.0);
                }
                out.words.insert(wi + 1, SimpleWord::singleton(ty));
                Ok(out)
            }
            InsRule::E => {
                let (wi, loc) = self.locate(pos).ok_or(GUARD_E_RANGE)?;
                if loc != Loc::Last {
                    return Err(GUARD_E_RANGE);
                }
                if self.words[wi].last.reserved_by.is_some() {
                    return Err(WordError::GuardFailed {
                        rule: "E",
                        clause: "last symbol carries a reservation",
                    });
                }
                let mut out = self.clone();
                if move_inserter {
                    out.remove_ptr(inserter.0);
                }
                let mut ty = m;
                if move_inserter {
                    ty.ptrs.insert(inserter.0);
                }
                let old_last = std::mem::replace(&mut out.words[wi].last, ty);
                out.words[wi].body.push(old_last);
                Ok(out)
            }
            InsRule::SP => {
                let (wi, loc) = self.locate(pos).ok_or(GUARD_SP_RANGE)?;
                let target = match loc {
                    Loc::Body(i) => &self.words[wi].body[i],
                    Loc::Last => &self.words[wi].last,
                    Loc::Hash => return Err(GUARD_SP_RANGE),
                };
                if target.kind != MtKind::Prm || target.owner != inserter {
                    return Err(WordError::GuardFailed {
                        rule: "SP",
                        clause: "target is not a promise of the inserter",
                    });
                }
                let mut out = self.clone();
                if move_inserter {
                    out.remove_ptr(inserter.0);
                }
                let mut ty = m;
                if move_inserter {
                    ty.ptrs.insert(inserter.0);
                }
                match loc {
                    Loc::Body(i) => out.words[wi].body.insert(i, ty),
                    Loc::Last => out.words[wi].body.push(ty),
                    Loc::Hash => unreachable!(),
                }
                Ok(out)
            }
            InsRule::FP => {
                let (wi, loc) = self.locate(pos).ok_or(GUARD_FP_RANGE)?;
                let target = match loc {
                    Loc::Body(i) => &self.words[wi].body[i],
                    Loc::Last => &self.words[wi].last,
                    Loc::Hash => return Err(GUARD_FP_RANGE),
                };
                if target.kind != MtKind::Prm || target.owner != inserter {
                    return Err(WordError::GuardFailed {
                        rule: "FP",
                        clause: "target is not a promise of the inserter",
                    });
                }
                let mut out = self.clone();
                out.remove_ptr(inserter.0);
                let t = match loc {
                    Loc::Body(i) => &mut out.words[wi].body[i],
                    Loc::Last => &mut out.words[wi].last,
                    Loc::Hash => unreachable!(),
                };
                t.kind = MtKind::Msg;
                t.ptrs.insert(inserter.0);
                Ok(out)
            }
            InsRule::SR => {
                let (wi, loc) = self.locate(pos).ok_or(GUARD_SR_RANGE)?;
                if loc != Loc::Last {
                    return Err(GUARD_SR_RANGE);
                }
                if self.words[wi].last.reserved_by != Some(inserter) {
                    return Err(WordError::GuardFailed {
                        rule: "SR",
                        clause: "slot is not reserved by the inserter",
                    });
                }
                let mut out = self.clone();
                out.remove_ptr(inserter.0);
                let mut old_last = out.words[wi].last;
                old_last.reserved_by = None;
                let mut ty = m;
                ty.ptrs.insert(inserter.0);
                ty.reserved_by = Some(inserter);
                out.words[wi].body.push(old_last);
                out.words[wi].last = ty;
                Ok(out)
            }
        }
    }

    /// Tag the last type at `pos` (which must be reservation-free) as
    /// reserved by `p`.
    pub fn make_reservation(&self, p: ProcId, pos: usize) -> Result<HWord, WordError> {
        let (wi, loc) = self.locate(pos).ok_or(GUARD_MAKE)?;
        if loc != Loc::Last || self.words[wi].last.reserved_by.is_some() {
            return Err(GUARD_MAKE);
        }
        let mut out = self.clone();
        out.words[wi].last.reserved_by = Some(p);
        Ok(out)
    }

    /// Remove `p`'s reservation tag at `pos`.
    pub fn cancel_reservation(&self, p: ProcId, pos: usize) -> Result<HWord, WordError> {
        let (wi, loc) = self.locate(pos).ok_or(GUARD_CANCEL)?;
        if loc != Loc::Last || self.words[wi].last.reserved_by != Some(p) {
            return Err(GUARD_CANCEL);
        }
        let mut out = self.clone();
        out.words[wi].last.reserved_by = None;
        Ok(out)
    }

    /// All words reachable by one loss: deleting one pointer-empty message
    /// type from a body, or one redundant simple word. Promises and the last
    /// remaining word are never lost.
    pub fn one_step_losses(&self) -> Vec<HWord> {
        let mut out = Vec::new();
        for (wi, w) in self.words.iter().enumerate() {
            for (i, t) in w.body.iter().enumerate() {
                if t.is_empty_type() {
                    let mut hw = self.clone();
                    hw.words[wi].body.remove(i);
                    out.push(hw);
                }
            }
            let redundant = w.body.iter().all(|t| t.is_empty_type())
                && w.last.is_empty_type()
                && self.words.len() > 1;
            if redundant {
                let mut hw = self.clone();
                hw.words.remove(wi);
                out.push(hw);
            }
        }
        out
    }

    /// Debug dump, stable for golden tests: simple words bracketed, the `#`
    /// separating body from last omitted for singleton words.
    pub fn dump(&self, proc_names: &[&str]) -> String {
        let g = proc_names.len();
        let fmt_ty = |t: &MemType| {
            let mut ptrs: Vec<&str> = Vec::new();
            for (i, n) in proc_names.iter().enumerate() {
                if t.ptrs.contains(i) {
                    ptrs.push(n);
                }
            }
            if t.ptrs.contains(g) {
                ptrs.push("g");
            }
            let kind = match t.kind {
                MtKind::Msg => "m",
                MtKind::Prm => "p",
            };
            let mut s = format!(
                "({},{},{},{{{}}}",
                kind,
                t.val,
                proc_names[t.owner.0],
                ptrs.join(",")
            );
            if let Some(r) = t.reserved_by {
                s.push(',');
                s.push_str(proc_names[r.0]);
            }
            s.push(')');
            s
        };
        let mut parts = Vec::new();
        for w in &self.words {
            let mut inner: Vec<String> = w.body.iter().map(&fmt_ty).collect();
            if !w.body.is_empty() {
                inner.push("#".into());
            }
            inner.push(fmt_ty(&w.last));
            parts.push(format!("[ {} ]", inner.join(" ")));
        }
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Body(usize),
    Hash,
    Last,
}

const GUARD_N_RANGE: WordError = WordError::GuardFailed {
    rule: "N",
    clause: "position is not the end of a simple word",
};
const GUARD_E_RANGE: WordError = WordError::GuardFailed {
    rule: "E",
    clause: "position is not the end of a simple word",
};
const GUARD_SP_RANGE: WordError = WordError::GuardFailed {
    rule: "SP",
    clause: "position is not a memory type",
};
const GUARD_FP_RANGE: WordError = WordError::GuardFailed {
    rule: "FP",
    clause: "position is not a memory type",
};
const GUARD_SR_RANGE: WordError = WordError::GuardFailed {
    rule: "SR",
    clause: "position is not the end of a simple word",
};
const GUARD_MAKE: WordError = WordError::GuardFailed {
    rule: "Make",
    clause: "position is not an untagged last symbol",
};
const GUARD_CANCEL: WordError = WordError::GuardFailed {
    rule: "Cancel",
    clause: "position does not hold this process's reservation",
};

impl fmt::Display for HWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..8).map(|i| format!("p{}", i)).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.dump(&refs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: usize) -> ProcId {
        ProcId(i)
    }

    #[test]
    fn initial_word_pointers() {
        // Two processes plus g all point at the single initial type.
        let hw = HWord::initial(2);
        assert_eq!(hw.flat_len(), 2); // '#' and the type
        for who in 0..=2 {
            assert_eq!(hw.ptr(who).unwrap(), 2);
        }
        assert!(hw.well_formed(2));
    }

    #[test]
    fn ptr_is_unique_or_error() {
        let mut hw = HWord::initial(2);
        // Duplicate p0's pointer by hand.
        hw.words.push(SimpleWord::singleton(MemType::msg(
            1,
            p(1),
            PtrSet(0b001),
        )));
        assert!(matches!(hw.ptr(0), Err(WordError::MalformedWord(2))));
    }

    #[test]
    fn e_insert_after_initial() {
        let hw = HWord::initial(2);
        let m = MemType::msg(1, p(0), PtrSet::empty());
        let hw2 = hw.insert(2, m, InsRule::E, true).unwrap();
        // One word: old last demoted to body (without p0), new last has p0.
        assert_eq!(hw2.words.len(), 1);
        assert_eq!(hw2.words[0].body.len(), 1);
        assert!(!hw2.words[0].body[0].ptrs.contains(0));
        assert!(hw2.words[0].body[0].ptrs.contains(1));
        assert!(hw2.words[0].last.ptrs.contains(0));
        assert!(hw2.well_formed(2));
        assert_eq!(hw2.ptr(0).unwrap(), 3);
    }

    #[test]
    fn n_insert_makes_new_word() {
        let hw = HWord::initial(2);
        let m = MemType::msg(1, p(0), PtrSet::empty());
        let hw2 = hw.insert(2, m, InsRule::N, true).unwrap();
        assert_eq!(hw2.words.len(), 2);
        assert_eq!(hw2.ptr(0).unwrap(), 4);
    }

    #[test]
    fn fp_converts_promise_and_adds_pointer() {
        let hw = HWord::initial(2);
        // p0 promises value 2 at the end of the initial word.
        let hw = hw
            .insert(2, MemType::prm(2, p(0)), InsRule::E, false)
            .unwrap();
        assert_eq!(hw.promise_count(), 1);
        // p0 still points at the initial type, which the insertion moved
        // before the `#` (position 1).
        assert_eq!(hw.ptr(0).unwrap(), 1);
        let pos = hw.last_pos(0);
        let hw2 = hw
            .insert(pos, MemType::msg(2, p(0), PtrSet::empty()), InsRule::FP, true)
            .unwrap();
        assert_eq!(hw2.promise_count(), 0);
        assert!(hw2.words[0].last.ptrs.contains(0));
        assert_eq!(hw2.words[0].last.kind, MtKind::Msg);
    }

    #[test]
    fn sr_uses_reserved_slot() {
        let hw = HWord::initial(2);
        let hw = hw.make_reservation(p(0), 2).unwrap();
        assert_eq!(hw.words[0].last.reserved_by, Some(p(0)));
        // E-insert is now blocked for everyone.
        let m1 = MemType::msg(1, p(1), PtrSet::empty());
        assert!(hw.insert(2, m1, InsRule::E, true).is_err());
        // SR by p0 splits the reservation: old last loses the tag, the new
        // last keeps a tag for p0.
        let m0 = MemType::msg(1, p(0), PtrSet::empty());
        let hw2 = hw.insert(2, m0, InsRule::SR, true).unwrap();
        assert_eq!(hw2.words[0].body.len(), 1);
        assert_eq!(hw2.words[0].body[0].reserved_by, None);
        assert_eq!(hw2.words[0].last.reserved_by, Some(p(0)));
        assert_eq!(hw2.words[0].last.val, 1);
    }

    #[test]
    fn make_cancel_roundtrip() {
        let hw = HWord::initial(2);
        let tagged = hw.make_reservation(p(1), 2).unwrap();
        // Double-tagging fails.
        assert!(tagged.make_reservation(p(0), 2).is_err());
        let back = tagged.cancel_reservation(p(1), 2).unwrap();
        assert_eq!(back, hw);
    }

    #[test]
    fn losses_drop_empty_body_types_and_redundant_words() {
        // Word 1: empty body type then a pointed last.
        let mut hw = HWord::initial(2);
        hw.words[0].body.push(MemType::msg(1, p(0), PtrSet::empty()));
        let mut losses = hw.one_step_losses();
        assert_eq!(losses.len(), 1);
        assert_eq!(losses[0].words[0].body.len(), 0);

        // A fully empty extra word can be lost entirely.
        hw.words.push(SimpleWord::singleton(MemType::msg(
            3,
            p(1),
            PtrSet::empty(),
        )));
        losses = hw.one_step_losses();
        assert_eq!(losses.len(), 2);

        // Nothing losable when every type is pointed.
        let solid = HWord::initial(2);
        assert!(solid.one_step_losses().is_empty());
    }

    #[test]
    fn losses_preserve_promises() {
        let hw = HWord::initial(2)
            .insert(2, MemType::prm(2, p(0)), InsRule::E, false)
            .unwrap();
        for l in hw.one_step_losses() {
            assert_eq!(l.promise_count(), hw.promise_count());
        }
    }

    #[test]
    fn dump_format() {
        let hw = HWord::initial(2);
        assert_eq!(hw.dump(&["p1", "p2"]), "[ (m,0,p1,{p1,p2,g}) ]");
        let hw2 = hw
            .insert(2, MemType::prm(2, ProcId(1)), InsRule::E, false)
            .unwrap();
        assert_eq!(
            hw2.dump(&["p1", "p2"]),
            "[ (m,0,p1,{p1,p2,g}) # (p,2,p2,{}) ]"
        );
    }
}
