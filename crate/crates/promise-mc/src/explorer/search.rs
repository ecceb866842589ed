//! Generic bounded forward search with canonical deduplication and
//! parent-pointer trace reconstruction.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::hash::Hash;

/// A forward-explorable transition system. `State` is the concrete state
/// used for expansion; `Key` its canonical dedup image.
pub trait Engine {
    type State: Clone;
    type Key: Eq + Hash;
    type Step: Clone;

    fn initials(&mut self) -> Vec<Self::State>;
    fn key(&self, s: &Self::State) -> Self::Key;
    fn successors(&mut self, s: &Self::State) -> Vec<(Self::Step, Self::State)>;
    fn is_target(&self, s: &Self::State) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchOrder {
    /// Breadth-first (default): shortest witnesses.
    Bfs,
    /// Depth-first.
    Dfs,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct SearchStats {
    pub states: u64,
    pub dedup_hits: u64,
    pub wall_ms: u64,
}

pub enum SearchResult<E: Engine> {
    /// Target found: the step sequence from an initial state plus that state.
    Found(Vec<E::Step>, E::State),
    /// The whole bounded state space was exhausted.
    Exhausted,
    /// The step budget ran out first.
    BudgetExceeded,
}

/// Explore until a target state is found, the space is exhausted, or
/// `max_steps` states have been expanded.
pub fn search<E: Engine>(
    engine: &mut E,
    order: SearchOrder,
    max_steps: u64,
    stats: &mut SearchStats,
) -> SearchResult<E> {
    let t0 = std::time::Instant::now();
    struct Node<S, D> {
        state: S,
        parent: Option<usize>,
        step: Option<D>,
    }
    let mut arena: Vec<Node<E::State, E::Step>> = Vec::new();
    let mut seen: HashMap<E::Key, ()> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let reconstruct = |arena: &Vec<Node<E::State, E::Step>>, mut idx: usize| {
        let mut steps = Vec::new();
        while let Some(parent) = arena[idx].parent {
            steps.push(arena[idx].step.clone().expect("non-root has a step"));
            idx = parent;
        }
        steps.reverse();
        steps
    };

    for s in engine.initials() {
        let k = engine.key(&s);
        if seen.insert(k, ()).is_none() {
            arena.push(Node {
                state: s,
                parent: None,
                step: None,
            });
            queue.push_back(arena.len() - 1);
        }
    }
    // Initial states may already satisfy the target.
    for idx in 0..arena.len() {
        if engine.is_target(&arena[idx].state) {
            stats.wall_ms = t0.elapsed().as_millis() as u64;
            return SearchResult::Found(Vec::new(), arena[idx].state.clone());
        }
    }

    let mut expanded: u64 = 0;
    while let Some(idx) = match order {
        SearchOrder::Bfs => queue.pop_front(),
        SearchOrder::Dfs => queue.pop_back(),
    } {
        if expanded >= max_steps {
            stats.states = expanded;
            stats.wall_ms = t0.elapsed().as_millis() as u64;
            return SearchResult::BudgetExceeded;
        }
        expanded += 1;
        let state = arena[idx].state.clone();
        for (step, succ) in engine.successors(&state) {
            let k = engine.key(&succ);
            if seen.contains_key(&k) {
                stats.dedup_hits += 1;
                continue;
            }
            seen.insert(k, ());
            arena.push(Node {
                state: succ,
                parent: Some(idx),
                step: Some(step),
            });
            let new_idx = arena.len() - 1;
            if engine.is_target(&arena[new_idx].state) {
                stats.states = expanded;
                stats.wall_ms = t0.elapsed().as_millis() as u64;
                let steps = reconstruct(&arena, new_idx);
                return SearchResult::Found(steps, arena[new_idx].state.clone());
            }
            queue.push_back(new_idx);
        }
    }
    stats.states = expanded;
    stats.wall_ms = t0.elapsed().as_millis() as u64;
    SearchResult::Exhausted
}
