//! Bounded forward reachability over the semantics engines, with state
//! canonicalization, visited-set deduplication, and witness traces.

pub mod lohow_engine;
pub mod ps2_engine;
pub mod search;

pub use crate::ps2::canon_key::canonicalize;

use crate::lang::ast::Program;
use crate::lang::flat::{compile, FlatProgram, ProcId};
use crate::ps2::ConsistencyMode;
use search::{search, SearchOrder, SearchResult, SearchStats};
use serde::Serialize;
use thiserror::Error;

/// Search bounds. `promise_bound` caps simultaneous outstanding promises;
/// `essential_bound` caps promises + reservations + view-altering reads
/// cumulatively along a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub loop_unroll: u32,
    pub promise_bound: u32,
    pub essential_bound: Option<u32>,
    pub cert_depth: u32,
    pub max_steps: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            loop_unroll: 1,
            promise_bound: 1,
            essential_bound: None,
            cert_depth: 16,
            max_steps: 20_000_000,
        }
    }
}

/// Reachability target: for each constrained process, the admissible flat
/// pcs. Unconstrained processes may rest anywhere.
#[derive(Debug, Clone, Default)]
pub struct TargetSpec {
    pub per_proc: Vec<(ProcId, Vec<usize>)>,
}

impl TargetSpec {
    /// Default targets: every process containing a `goal` statement must sit
    /// at one of its goal labels.
    pub fn goals(prog: &FlatProgram) -> TargetSpec {
        TargetSpec {
            per_proc: prog
                .procs
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.goals.is_empty())
                .map(|(i, p)| (ProcId(i), p.goals.clone()))
                .collect(),
        }
    }

    /// Targets from user labels like `p1=done`, resolved via the label map.
    pub fn from_labels(
        prog: &FlatProgram,
        labels: &[(String, String)],
    ) -> Result<TargetSpec, String> {
        let mut per_proc: Vec<(ProcId, Vec<usize>)> = Vec::new();
        for (proc_name, label) in labels {
            let pi = prog
                .procs
                .iter()
                .position(|p| &p.name == proc_name)
                .ok_or_else(|| format!("unknown process `{proc_name}`"))?;
            let (lp, pc) = prog
                .label_map
                .get(label)
                .ok_or_else(|| format!("unknown label `{label}`"))?;
            if lp.0 != pi {
                return Err(format!("label `{label}` is not in process `{proc_name}`"));
            }
            match per_proc.iter_mut().find(|(p, _)| p.0 == pi) {
                Some((_, pcs)) => pcs.push(*pc),
                None => per_proc.push((ProcId(pi), vec![*pc])),
            }
        }
        Ok(TargetSpec { per_proc })
    }

    pub fn is_empty(&self) -> bool {
        self.per_proc.is_empty()
    }

    pub fn matches_pcs(&self, pcs: &[usize]) -> bool {
        !self.is_empty() && self.per_proc.iter().all(|(p, ok)| ok.contains(&pcs[p.0]))
    }
}

/// Minimum numbers of promise / reservation / cancel events a witness must
/// contain. All-zero means any witness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WitnessReq {
    pub promises: u8,
    pub reserves: u8,
    pub cancels: u8,
}

/// One rendered trace entry.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TraceStep {
    pub process: String,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Reachable,
    UnreachableWithinBounds,
    BoundExhausted,
}

/// Result of a reachability query.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub trace: Option<Vec<TraceStep>>,
    pub stats: SearchStats,
}

impl Verdict {
    pub fn reachable(&self) -> bool {
        self.outcome == Outcome::Reachable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Ps2,
    Lohow,
}

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("unsupported access mode: the {engine} engine handles rlx-only programs")]
    UnsupportedMode { engine: &'static str },
    #[error("no reachability target: no `goal` statement and no --targets")]
    NoTargets,
}

/// Extra knobs beyond the numeric bounds.
#[derive(Debug, Clone)]
pub struct ReachOptions {
    /// Which processes may promise/reserve; `None` = all of them.
    pub promising: Option<Vec<String>>,
    /// Allow reservations (and their cancellation). Off by default: a
    /// reservation placed before a promise opens certification slots that
    /// defeat the capped memory, so runs that should be promise-split-only
    /// get extra behaviors.
    pub reservations: bool,
    pub consistency: ConsistencyMode,
    pub order: SearchOrder,
    pub witness: WitnessReq,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            promising: None,
            reservations: false,
            consistency: ConsistencyMode::Stepper,
            order: SearchOrder::Bfs,
            witness: WitnessReq::default(),
        }
    }
}

fn promising_mask(prog: &FlatProgram, opts: &ReachOptions, bounds: &Bounds) -> Vec<bool> {
    if bounds.promise_bound == 0 {
        return vec![false; prog.n_procs()];
    }
    match &opts.promising {
        None => vec![true; prog.n_procs()],
        Some(names) => prog
            .procs
            .iter()
            .map(|p| names.iter().any(|n| n == &p.name))
            .collect(),
    }
}

/// Exhaustive bounded search for a target state under the chosen engine.
pub fn reach(
    engine: EngineKind,
    prog: &Program,
    targets: Option<TargetSpec>,
    bounds: &Bounds,
    opts: &ReachOptions,
) -> Result<Verdict, ReachError> {
    let flat = compile(prog);
    reach_flat(engine, &flat, prog, targets, bounds, opts)
}

pub fn reach_flat(
    engine: EngineKind,
    flat: &FlatProgram,
    prog: &Program,
    targets: Option<TargetSpec>,
    bounds: &Bounds,
    opts: &ReachOptions,
) -> Result<Verdict, ReachError> {
    let targets = match targets {
        Some(t) if !t.is_empty() => t,
        _ => {
            let t = TargetSpec::goals(flat);
            if t.is_empty() {
                return Err(ReachError::NoTargets);
            }
            t
        }
    };
    let promising = promising_mask(flat, opts, bounds);
    let reservation_bound = if opts.reservations {
        bounds.promise_bound.max(1)
    } else {
        0
    };
    let mut stats = SearchStats::default();
    match engine {
        EngineKind::Ps2 => {
            let consistency = if bounds.promise_bound == 0 {
                ConsistencyMode::Off
            } else {
                opts.consistency
            };
            let mut eng = ps2_engine::Ps2Engine::new(
                flat,
                bounds.clone(),
                targets,
                promising,
                consistency,
                opts.witness,
                reservation_bound,
            );
            let res = search(&mut eng, opts.order, bounds.max_steps, &mut stats);
            Ok(match res {
                SearchResult::Found(steps, _) => {
                    // Soundness: the trace must replay through the raw
                    // semantics back to a target state.
                    let replayed = ps2_engine::replay(flat, &eng.cfg, &steps)
                        .expect("witness trace must replay");
                    debug_assert!(eng.targets.matches_pcs(&replayed.ms.pcs));
                    let trace = steps
                        .iter()
                        .map(|s| TraceStep {
                            process: flat.proc_name(s.proc()).to_string(),
                            rule: s.rule_name().to_string(),
                            detail: s.render(flat),
                        })
                        .collect();
                    Verdict {
                        outcome: Outcome::Reachable,
                        trace: Some(trace),
                        stats,
                    }
                }
                SearchResult::Exhausted => Verdict {
                    outcome: Outcome::UnreachableWithinBounds,
                    trace: None,
                    stats,
                },
                SearchResult::BudgetExceeded => Verdict {
                    outcome: Outcome::BoundExhausted,
                    trace: None,
                    stats,
                },
            })
        }
        EngineKind::Lohow => {
            if !prog.is_rlx_only() {
                return Err(ReachError::UnsupportedMode { engine: "lohow" });
            }
            let mut eng = lohow_engine::LohowEngine::new(
                flat,
                bounds.clone(),
                targets,
                promising,
                opts.witness,
                reservation_bound,
            );
            let res = search(&mut eng, opts.order, bounds.max_steps, &mut stats);
            Ok(match res {
                SearchResult::Found(steps, final_state) => {
                    let trace = steps
                        .iter()
                        .map(|s| TraceStep {
                            process: flat.proc_name(final_state.exec.tp.active).to_string(),
                            rule: s.rule_name().to_string(),
                            detail: s.render(flat, final_state.exec.tp.active),
                        })
                        .collect();
                    Verdict {
                        outcome: Outcome::Reachable,
                        trace: Some(trace),
                        stats,
                    }
                }
                SearchResult::Exhausted => Verdict {
                    outcome: Outcome::UnreachableWithinBounds,
                    trace: None,
                    stats,
                },
                SearchResult::BudgetExceeded => Verdict {
                    outcome: Outcome::BoundExhausted,
                    trace: None,
                    stats,
                },
            })
        }
    }
}

/// Outcome of running both forward engines on the same query.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub ps2: Outcome,
    pub lohow: Outcome,
    pub agree: bool,
    pub ps2_trace: Option<Vec<TraceStep>>,
    pub lohow_trace: Option<Vec<TraceStep>>,
}

/// Run the PS 2.0 and LoHoW engines on the same rlx-only program and flag
/// any verdict disagreement.
pub fn cross_check(
    prog: &Program,
    targets: Option<TargetSpec>,
    bounds: &Bounds,
    opts: &ReachOptions,
) -> Result<EquivalenceReport, ReachError> {
    let v1 = reach(EngineKind::Ps2, prog, targets.clone(), bounds, opts)?;
    let v2 = reach(EngineKind::Lohow, prog, targets, bounds, opts)?;
    Ok(EquivalenceReport {
        agree: v1.outcome == v2.outcome,
        ps2: v1.outcome,
        lohow: v2.outcome,
        ps2_trace: v1.trace,
        lohow_trace: v2.trace,
    })
}
