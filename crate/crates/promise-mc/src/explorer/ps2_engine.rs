//! The direct PS 2.0 engine behind the generic search.

use super::search::Engine;
use super::{Bounds, TargetSpec, WitnessReq};
use crate::lang::flat::FlatProgram;
use crate::ps2::{
    self, canonicalize, machine_successors, CanonMachine, CertCache, ConsistencyMode, Exec,
    PsStep, StepConfig,
};

/// Search state: the execution plus bound and witness counters.
#[derive(Debug, Clone)]
pub struct PsSearchState {
    pub exec: Exec,
    pub essentials: u32,
    pub promises: u8,
    pub reserves: u8,
    pub cancels: u8,
}

#[derive(PartialEq, Eq, Hash)]
pub struct PsKey {
    canon: CanonMachine,
    loop_counters: Vec<u32>,
    essentials: u32,
    witness: (u8, u8, u8),
}

pub struct Ps2Engine<'a> {
    pub prog: &'a FlatProgram,
    pub cfg: StepConfig,
    pub bounds: Bounds,
    pub targets: TargetSpec,
    pub witness: WitnessReq,
    pub cache: CertCache,
}

impl<'a> Ps2Engine<'a> {
    pub fn new(
        prog: &'a FlatProgram,
        bounds: Bounds,
        targets: TargetSpec,
        promising: Vec<bool>,
        consistency: ConsistencyMode,
        witness: WitnessReq,
        reservation_bound: u32,
    ) -> Self {
        let cfg = StepConfig {
            loop_bound: Some(bounds.loop_unroll),
            promise_bound: bounds.promise_bound,
            reservation_bound,
            promising,
            cert_depth: bounds.cert_depth,
            consistency,
        };
        Ps2Engine {
            prog,
            cfg,
            bounds,
            targets,
            witness,
            cache: CertCache::default(),
        }
    }
}

impl Engine for Ps2Engine<'_> {
    type State = PsSearchState;
    type Key = PsKey;
    type Step = PsStep;

    fn initials(&mut self) -> Vec<PsSearchState> {
        vec![PsSearchState {
            exec: Exec::initial(self.prog, self.cfg.loop_bound),
            essentials: 0,
            promises: 0,
            reserves: 0,
            cancels: 0,
        }]
    }

    fn key(&self, s: &PsSearchState) -> PsKey {
        PsKey {
            canon: canonicalize(&s.exec.ms),
            loop_counters: s.exec.loop_counters.clone(),
            essentials: s.essentials,
            witness: (s.promises, s.reserves, s.cancels),
        }
    }

    fn successors(&mut self, s: &PsSearchState) -> Vec<(PsStep, PsSearchState)> {
        let succs = machine_successors(self.prog, &self.cfg, &s.exec, &mut self.cache);
        let mut out = Vec::with_capacity(succs.len());
        for (step, exec, meta) in succs {
            let essentials = s.essentials + meta.essential as u32;
            if let Some(k) = self.bounds.essential_bound {
                if essentials > k {
                    continue;
                }
            }
            let sat = |c: u8, inc: bool, req: u8| -> u8 {
                let v = c + (inc && c < u8::MAX) as u8;
                v.min(req)
            };
            out.push((
                step,
                PsSearchState {
                    exec,
                    essentials: if self.bounds.essential_bound.is_some() {
                        essentials
                    } else {
                        0
                    },
                    promises: sat(s.promises, meta.promise, self.witness.promises),
                    reserves: sat(s.reserves, meta.reserve, self.witness.reserves),
                    cancels: sat(s.cancels, meta.cancel, self.witness.cancels),
                },
            ));
        }
        out
    }

    fn is_target(&self, s: &PsSearchState) -> bool {
        self.targets.matches_pcs(&s.exec.ms.pcs)
            && !s.exec.ms.memory.has_any_promise()
            && s.promises >= self.witness.promises
            && s.reserves >= self.witness.reserves
            && s.cancels >= self.witness.cancels
    }
}

/// Replay a PS step sequence through the raw semantics; returns the final
/// execution state if every step applies.
pub fn replay(
    prog: &FlatProgram,
    cfg: &StepConfig,
    steps: &[PsStep],
) -> Option<Exec> {
    let mut exec = Exec::initial(prog, cfg.loop_bound);
    for step in steps {
        let (next, _) = ps2::apply_step(prog, cfg, &exec, step, false)?;
        exec = next;
    }
    Some(exec)
}
