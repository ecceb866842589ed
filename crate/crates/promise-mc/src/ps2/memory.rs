//! The message/reservation memory and its four insertion modes.

use super::time::Ts;
use super::view::View;
use crate::lang::{LocId, ProcId, Value};
use thiserror::Error;

/// Payload of a memory element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElemKind {
    /// A concrete message or an outstanding promise; `view` is `None` for ⊥.
    Msg { val: Value, view: Option<View> },
    /// A reservation: a claimed interval committed to no value.
    Res,
}

/// One element of a location's timeline. `promised_by` is `Some(p)` exactly
/// when the element belongs to `p`'s promise set (promised messages and
/// reservations live both in the memory and in their owner's set).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Elem {
    pub frm: Ts,
    pub to: Ts,
    pub kind: ElemKind,
    pub promised_by: Option<ProcId>,
}

impl Elem {
    pub fn is_msg(&self) -> bool {
        matches!(self.kind, ElemKind::Msg { .. })
    }

    pub fn is_res(&self) -> bool {
        matches!(self.kind, ElemKind::Res)
    }

    pub fn val(&self) -> Option<Value> {
        match &self.kind {
            ElemKind::Msg { val, .. } => Some(*val),
            ElemKind::Res => None,
        }
    }

    /// An outstanding promise of `p` (a promised message, not a reservation).
    pub fn is_promise_of(&self, p: ProcId) -> bool {
        self.is_msg() && self.promised_by == Some(p)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InsertError {
    #[error("additive insertion: element overlaps an existing element")]
    Overlap,
    #[error("additive insertion: a message starts exactly at the new element's `to`")]
    AbutsFollowingMessage,
    #[error("additive insertion: a reservation must start at some message's `to`")]
    ReservationNotAttached,
    #[error("splitting insertion: no matching message `(frm, to']` with `to < to'`")]
    NoSplitTarget,
    #[error("lowering insertion: no identical message with a dominating view")]
    NoLowerTarget,
    #[error("cancellation: the reservation is not present")]
    NoSuchReservation,
    #[error("element interval is empty or negative")]
    BadInterval,
}

/// Requested insertion mode, mirroring the four memory update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertMode {
    Additive,
    Split,
    Lower,
    Cancel,
}

/// A memory: per location, a sorted sequence of pairwise disjoint elements.
/// Every location starts with the initial message `(0, 0]` holding value 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Memory {
    pub locs: Vec<Vec<Elem>>,
}

impl Memory {
    pub fn init(n_locs: usize) -> Memory {
        let locs = (0..n_locs)
            .map(|_| {
                vec![Elem {
                    frm: Ts::zero(),
                    to: Ts::zero(),
                    kind: ElemKind::Msg {
                        val: 0,
                        view: Some(View::init(n_locs)),
                    },
                    promised_by: None,
                }]
            })
            .collect();
        Memory { locs }
    }

    pub fn elems(&self, l: LocId) -> &[Elem] {
        &self.locs[l.0]
    }

    /// Pairwise disjointness and ordering invariant.
    pub fn check_disjoint(&self) -> bool {
        for es in &self.locs {
            for w in es.windows(2) {
                if w[0].to > w[1].frm {
                    return false;
                }
                // Two initial-style point intervals cannot coexist.
                if w[0].frm == w[1].frm && w[0].to == w[1].to {
                    return false;
                }
            }
        }
        true
    }

    fn insertion_point(es: &[Elem], e: &Elem) -> usize {
        es.partition_point(|x| x.frm < e.frm || (x.frm == e.frm && x.to <= e.to))
    }

    /// Generic entry point; mode-specific preconditions mirror the memory
    /// update rules. Value semantics: the input memory is left unchanged.
    pub fn insert(&self, l: LocId, e: Elem, mode: InsertMode) -> Result<Memory, InsertError> {
        match mode {
            InsertMode::Additive => self.insert_additive(l, e),
            InsertMode::Split => self.insert_split(l, e),
            InsertMode::Lower => self.insert_lower(l, e),
            InsertMode::Cancel => self.cancel(l, &e),
        }
    }

    /// Additive insertion: the element must be disjoint from the memory; a
    /// message must not end exactly where another message starts; and a
    /// reservation must start at some message's `to`.
    pub fn insert_additive(&self, l: LocId, e: Elem) -> Result<Memory, InsertError> {
        if !(e.frm < e.to) && !(e.frm.is_zero() && e.to.is_zero()) {
            return Err(InsertError::BadInterval);
        }
        let es = self.elems(l);
        for x in es {
            let disjoint = e.to <= x.frm || x.to <= e.frm;
            // Point intervals (0,0] only exist initially and never collide
            // with inserted elements, which always have frm < to.
            if !disjoint {
                return Err(InsertError::Overlap);
            }
        }
        match e.kind {
            ElemKind::Msg { .. } => {
                if es.iter().any(|x| x.is_msg() && x.frm == e.to && !x.to.is_zero()) {
                    return Err(InsertError::AbutsFollowingMessage);
                }
            }
            ElemKind::Res => {
                if !es.iter().any(|x| x.is_msg() && x.to == e.frm) {
                    return Err(InsertError::ReservationNotAttached);
                }
            }
        }
        let mut out = self.clone();
        let idx = Self::insertion_point(&out.locs[l.0], &e);
        out.locs[l.0].insert(idx, e);
        Ok(out)
    }

    /// Splitting insertion: `e = (x, v, (f, t], ..)` splits an existing
    /// message `(x, v', (f, t'], V)` with `t < t'` into `e` followed by
    /// `(x, v', (t, t'], V)`.
    pub fn insert_split(&self, l: LocId, e: Elem) -> Result<Memory, InsertError> {
        if !e.is_msg() || !(e.frm < e.to) {
            return Err(InsertError::BadInterval);
        }
        let es = self.elems(l);
        let Some(idx) = es
            .iter()
            .position(|x| x.is_msg() && x.frm == e.frm && e.to < x.to)
        else {
            return Err(InsertError::NoSplitTarget);
        };
        let mut out = self.clone();
        let old = out.locs[l.0][idx].clone();
        let rest = Elem {
            frm: e.to.clone(),
            to: old.to.clone(),
            kind: old.kind.clone(),
            promised_by: old.promised_by,
        };
        out.locs[l.0][idx] = e;
        out.locs[l.0].insert(idx + 1, rest);
        Ok(out)
    }

    /// Lowering insertion: replace an identical message whose view dominates
    /// the new element's view.
    pub fn insert_lower(&self, l: LocId, e: Elem) -> Result<Memory, InsertError> {
        let ElemKind::Msg { val, view } = &e.kind else {
            return Err(InsertError::BadInterval);
        };
        let es = self.elems(l);
        let Some(idx) = es.iter().position(|x| {
            if !(x.frm == e.frm && x.to == e.to) {
                return false;
            }
            match &x.kind {
                ElemKind::Msg {
                    val: v2,
                    view: view2,
                } => {
                    v2 == val
                        && match (view, view2) {
                            (None, _) => true,
                            (Some(a), Some(b)) => a.leq(b),
                            (Some(_), None) => false,
                        }
                }
                ElemKind::Res => false,
            }
        }) else {
            return Err(InsertError::NoLowerTarget);
        };
        let mut out = self.clone();
        out.locs[l.0][idx] = e;
        Ok(out)
    }

    /// Cancellation: remove a present reservation.
    pub fn cancel(&self, l: LocId, e: &Elem) -> Result<Memory, InsertError> {
        let es = self.elems(l);
        let Some(idx) = es
            .iter()
            .position(|x| x.is_res() && x.frm == e.frm && x.to == e.to)
        else {
            return Err(InsertError::NoSuchReservation);
        };
        let mut out = self.clone();
        out.locs[l.0].remove(idx);
        Ok(out)
    }

    /// Cap view: per location, the `to` of the last message (reservations
    /// excluded).
    pub fn cap_view(&self) -> View {
        View(
            self.locs
                .iter()
                .map(|es| {
                    es.iter()
                        .filter(|e| e.is_msg())
                        .map(|e| e.to.clone())
                        .max()
                        .expect("initial message always present")
                })
                .collect(),
        )
    }

    /// The capped memory with respect to the promise set of `p`: every gap
    /// between order-adjacent elements is filled with an unowned reservation,
    /// and a cap message is appended per location unless the last element is
    /// a reservation owned by `p`.
    pub fn capped(&self, p: ProcId) -> Memory {
        let cap_view = self.cap_view();
        let mut out = self.clone();
        for (li, es) in self.locs.iter().enumerate() {
            let target = &mut out.locs[li];
            // Gap fill; iterate the original (sorted) elements.
            for w in es.windows(2) {
                if w[0].to < w[1].frm {
                    let r = Elem {
                        frm: w[0].to.clone(),
                        to: w[1].frm.clone(),
                        kind: ElemKind::Res,
                        promised_by: None,
                    };
                    let idx = Self::insertion_point(target, &r);
                    target.insert(idx, r);
                }
            }
            let last = es.last().expect("non-empty");
            if last.is_res() && last.promised_by == Some(p) {
                continue;
            }
            let last_msg_val = es
                .iter()
                .filter(|e| e.is_msg())
                .max_by(|a, b| a.to.cmp(&b.to))
                .and_then(|e| e.val())
                .expect("initial message always present");
            let cap = Elem {
                frm: last.to.clone(),
                to: last.to.succ(),
                kind: ElemKind::Msg {
                    val: last_msg_val,
                    view: Some(cap_view.clone()),
                },
                promised_by: None,
            };
            target.push(cap);
        }
        out
    }

    /// Count of outstanding promised messages (over all processes).
    pub fn promise_count(&self) -> usize {
        self.locs
            .iter()
            .flatten()
            .filter(|e| e.is_msg() && e.promised_by.is_some())
            .count()
    }

    /// Count of outstanding reservations (over all processes).
    pub fn reservation_count(&self) -> usize {
        self.locs
            .iter()
            .flatten()
            .filter(|e| e.is_res() && e.promised_by.is_some())
            .count()
    }

    /// Any element promised by `p` (message or reservation)?
    pub fn has_promise_set_entries(&self, p: ProcId) -> bool {
        self.locs
            .iter()
            .flatten()
            .any(|e| e.promised_by == Some(p))
    }

    /// Any outstanding promised message at all?
    pub fn has_any_promise(&self) -> bool {
        self.locs
            .iter()
            .flatten()
            .any(|e| e.is_msg() && e.promised_by.is_some())
    }

    /// Any promise set entry of `p` on location `l`?
    pub fn has_promise_on(&self, p: ProcId, l: LocId) -> bool {
        self.elems(l).iter().any(|e| e.promised_by == Some(p))
    }
}

/// A write/promise placement: the pair `(frm, to)` plus its structural
/// description (which element the interval follows and whether it abuts it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub frm: Ts,
    pub to: Ts,
    /// Index of the element the interval is placed after.
    pub after: usize,
    /// `frm` equals the previous element's `to`.
    pub adjacent: bool,
}

impl Memory {
    /// Canonical placements for a fresh message or promise on `l` with
    /// `to > min_to`: in every free gap at or above the view, one placement
    /// abutting the gap's left bound and one floating strictly inside.
    pub fn write_placements(&self, l: LocId, min_to: &Ts) -> Vec<Placement> {
        let es = self.elems(l);
        let mut out = Vec::new();
        for (i, e) in es.iter().enumerate() {
            let hi = es.get(i + 1).map(|n| n.frm.clone());
            let lo = e.to.clone();
            if let Some(hi) = &hi {
                if &lo >= hi {
                    continue; // adjacent elements: no gap
                }
            }
            if &lo < min_to {
                continue; // gap left bound below the view: unusable
            }
            match hi {
                Some(hi) => {
                    out.push(Placement {
                        frm: lo.clone(),
                        to: Ts::mid(&lo, &hi),
                        after: i,
                        adjacent: true,
                    });
                    out.push(Placement {
                        frm: Ts::lerp(&lo, &hi, 1, 3),
                        to: Ts::lerp(&lo, &hi, 2, 3),
                        after: i,
                        adjacent: false,
                    });
                }
                None => {
                    out.push(Placement {
                        frm: lo.clone(),
                        to: lo.succ(),
                        after: i,
                        adjacent: true,
                    });
                    out.push(Placement {
                        frm: lo.succ(),
                        to: lo.succ().succ(),
                        after: i,
                        adjacent: false,
                    });
                }
            }
        }
        out
    }

    /// Canonical reservation slots: one per message with `to >= min_to` whose
    /// right side has free room.
    pub fn reservation_placements(&self, l: LocId, min_to: &Ts) -> Vec<Placement> {
        let es = self.elems(l);
        let mut out = Vec::new();
        for (i, e) in es.iter().enumerate() {
            if !e.is_msg() || &e.to < min_to {
                continue;
            }
            let hi = es.get(i + 1).map(|n| n.frm.clone());
            let to = match hi {
                Some(hi) => {
                    if e.to >= hi {
                        continue; // next element abuts: slot taken
                    }
                    Ts::mid(&e.to, &hi)
                }
                None => e.to.succ(),
            };
            out.push(Placement {
                frm: e.to.clone(),
                to,
                after: i,
                adjacent: true,
            });
        }
        out
    }

    /// The canonical slot immediately after element `idx` (RMW adjacency):
    /// `None` when the next element abuts it.
    pub fn slot_after(&self, l: LocId, idx: usize) -> Option<(Ts, Ts)> {
        let es = self.elems(l);
        let e = &es[idx];
        match es.get(idx + 1) {
            Some(n) => {
                if e.to >= n.frm {
                    None
                } else {
                    Some((e.to.clone(), Ts::mid(&e.to, &n.frm)))
                }
            }
            None => Some((e.to.clone(), e.to.succ())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(frm: u64, to: u64, val: Value) -> Elem {
        Elem {
            frm: Ts::from_int(frm),
            to: Ts::from_int(to),
            kind: ElemKind::Msg { val, view: None },
            promised_by: None,
        }
    }

    fn res(frm: u64, to: u64) -> Elem {
        Elem {
            frm: Ts::from_int(frm),
            to: Ts::from_int(to),
            kind: ElemKind::Res,
            promised_by: None,
        }
    }

    #[test]
    fn additive_insert_into_initial_memory() {
        let m = Memory::init(1);
        let m2 = m.insert_additive(LocId(0), msg(0, 1, 1)).unwrap();
        assert_eq!(m2.elems(LocId(0)).len(), 2);
        assert!(m2.check_disjoint());
        // Input untouched (value semantics).
        assert_eq!(m.elems(LocId(0)).len(), 1);
    }

    #[test]
    fn reservation_requires_attachment() {
        let m = Memory::init(1);
        // No message ends at 1, so (1, 2] cannot be reserved.
        let err = m.insert_additive(LocId(0), res(1, 2)).unwrap_err();
        assert_eq!(err, InsertError::ReservationNotAttached);
        // (0, 1] attaches to the initial message.
        assert!(m.insert_additive(LocId(0), res(0, 1)).is_ok());
    }

    #[test]
    fn message_cannot_abut_following_message() {
        let m = Memory::init(1)
            .insert_additive(LocId(0), msg(2, 3, 1))
            .unwrap();
        // (0,2] would end exactly where (2,3] starts.
        let err = m.insert_additive(LocId(0), msg(1, 2, 2)).unwrap_err();
        assert_eq!(err, InsertError::AbutsFollowingMessage);
        assert!(m.insert_additive(LocId(0), msg(0, 1, 2)).is_ok());
    }

    #[test]
    fn split_keeps_tail() {
        // Splitting (x,2,(1,5]) with (x,1,(1,3]) leaves (x,1,(1,3]) and (x,2,(3,5]).
        let m = Memory::init(1)
            .insert_additive(LocId(0), msg(1, 5, 2))
            .unwrap();
        let m2 = m.insert_split(LocId(0), msg(1, 3, 1)).unwrap();
        let es = m2.elems(LocId(0));
        assert_eq!(es.len(), 3);
        assert_eq!(es[1].val(), Some(1));
        assert_eq!(es[2].val(), Some(2));
        assert_eq!(es[2].frm, Ts::from_int(3));
        assert_eq!(es[2].to, Ts::from_int(5));
        assert!(m2.check_disjoint());
    }

    #[test]
    fn lower_requires_dominating_view() {
        let mut e = msg(1, 2, 1);
        e.kind = ElemKind::Msg {
            val: 1,
            view: Some(View::init(1)),
        };
        let m = Memory::init(1).insert_additive(LocId(0), e).unwrap();
        // ⊥ is below any view.
        let m2 = m.insert_lower(LocId(0), msg(1, 2, 1)).unwrap();
        assert!(matches!(
            &m2.elems(LocId(0))[1].kind,
            ElemKind::Msg { view: None, .. }
        ));
        // A different value never lowers.
        assert!(m.insert_lower(LocId(0), msg(1, 2, 2)).is_err());
    }

    #[test]
    fn cancel_removes_reservation() {
        let m = Memory::init(1).insert_additive(LocId(0), res(0, 1)).unwrap();
        let m2 = m.cancel(LocId(0), &res(0, 1)).unwrap();
        assert_eq!(m2.elems(LocId(0)).len(), 1);
        assert!(m2.cancel(LocId(0), &res(0, 1)).is_err());
    }

    #[test]
    fn capped_memory_fills_gaps_and_caps() {
        // {(x,0,(0,0]), (x,1,(2,3])}: gap (0,2] reserved, cap (3,4] value 1.
        let m = Memory::init(1)
            .insert_additive(LocId(0), msg(2, 3, 1))
            .unwrap();
        let c = m.capped(ProcId(0));
        let es = c.elems(LocId(0));
        assert_eq!(es.len(), 4);
        assert!(es[1].is_res());
        assert_eq!(es[1].frm, Ts::zero());
        assert_eq!(es[1].to, Ts::from_int(2));
        let cap = &es[3];
        assert!(cap.is_msg());
        assert_eq!(cap.val(), Some(1));
        assert_eq!(cap.frm, Ts::from_int(3));
        assert_eq!(cap.to, Ts::from_int(4));
        match &cap.kind {
            ElemKind::Msg { view: Some(v), .. } => {
                assert_eq!(v.get(LocId(0)), &Ts::from_int(3));
            }
            _ => panic!("cap must carry the cap view"),
        }
    }

    #[test]
    fn capped_memory_skips_cap_over_own_last_reservation() {
        let mut r = res(0, 1);
        r.promised_by = Some(ProcId(0));
        let m = Memory::init(1).insert_additive(LocId(0), r).unwrap();
        let c0 = m.capped(ProcId(0));
        // Last element is p0's reservation: no cap for p0.
        assert_eq!(c0.elems(LocId(0)).len(), 2);
        // For another process the cap appears.
        let c1 = m.capped(ProcId(1));
        assert_eq!(c1.elems(LocId(0)).len(), 3);
    }

    #[test]
    fn placements_cover_gap_and_tail() {
        let m = Memory::init(1)
            .insert_additive(LocId(0), msg(2, 3, 1))
            .unwrap();
        let ps = m.write_placements(LocId(0), &Ts::zero());
        // Gap (0,2): adjacent (0,1] and floating inside; tail (3,∞): two more.
        assert_eq!(ps.len(), 4);
        assert!(ps.iter().all(|p| p.frm < p.to));
        assert!(ps.iter().any(|p| p.adjacent && p.frm == Ts::zero()));
        // to > view is respected.
        let ps2 = m.write_placements(LocId(0), &Ts::from_int(3));
        assert!(ps2.iter().all(|p| p.to > Ts::from_int(3)));
    }
}
