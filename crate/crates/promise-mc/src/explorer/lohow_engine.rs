//! The LoHoW engine behind the generic search.

use super::search::Engine;
use super::{Bounds, TargetSpec, WitnessReq};
use crate::lang::flat::FlatProgram;
use crate::lohow::{self, LhConfig, LhExec, LhStep, Phase};

#[derive(Debug, Clone)]
pub struct LhSearchState {
    pub exec: LhExec,
    pub promises: u8,
    pub reserves: u8,
    pub cancels: u8,
}

#[derive(PartialEq, Eq, Hash)]
pub struct LhKey {
    exec: LhExec,
    witness: (u8, u8, u8),
}

pub struct LohowEngine<'a> {
    pub prog: &'a FlatProgram,
    pub cfg: LhConfig,
    pub targets: TargetSpec,
    pub witness: WitnessReq,
}

impl<'a> LohowEngine<'a> {
    pub fn new(
        prog: &'a FlatProgram,
        bounds: Bounds,
        targets: TargetSpec,
        promising: Vec<bool>,
        witness: WitnessReq,
        reservation_bound: u32,
    ) -> Self {
        LohowEngine {
            prog,
            cfg: LhConfig {
                loop_bound: Some(bounds.loop_unroll),
                promise_bound: bounds.promise_bound,
                reservation_bound,
                cert_depth: bounds.cert_depth,
                promising,
            },
            targets,
            witness,
        }
    }
}

impl Engine for LohowEngine<'_> {
    type State = LhSearchState;
    type Key = LhKey;
    type Step = LhStep;

    fn initials(&mut self) -> Vec<LhSearchState> {
        LhExec::initials(self.prog, self.cfg.loop_bound)
            .into_iter()
            .map(|exec| LhSearchState {
                exec,
                promises: 0,
                reserves: 0,
                cancels: 0,
            })
            .collect()
    }

    fn key(&self, s: &LhSearchState) -> LhKey {
        LhKey {
            exec: s.exec.clone(),
            witness: (s.promises, s.reserves, s.cancels),
        }
    }

    fn successors(&mut self, s: &LhSearchState) -> Vec<(LhStep, LhSearchState)> {
        lohow::successors(self.prog, &self.cfg, &s.exec)
            .into_iter()
            .map(|(d, exec, meta)| {
                let sat = |c: u8, inc: bool, req: u8| -> u8 {
                    (c + (inc && c < u8::MAX) as u8).min(req)
                };
                (
                    d,
                    LhSearchState {
                        exec,
                        promises: sat(s.promises, meta.promise, self.witness.promises),
                        reserves: sat(s.reserves, meta.reserve, self.witness.reserves),
                        cancels: sat(s.cancels, meta.cancel, self.witness.cancels),
                    },
                )
            })
            .collect()
    }

    fn is_target(&self, s: &LhSearchState) -> bool {
        s.exec.tp.phase == Phase::Std
            && self.targets.matches_pcs(&s.exec.tp.std_st.pcs)
            && s.exec.tp.std_st.promise_free()
            && s.exec.tp.cert_st.promise_free()
            && s.promises >= self.witness.promises
            && s.reserves >= self.witness.reserves
            && s.cancels >= self.witness.cancels
    }
}
