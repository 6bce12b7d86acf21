//! Level-synchronous breadth-first exploration of reachable states, shared by
//! the totality and progress checkers.
//!
//! Each level is visited in parallel; results are merged in frontier order so
//! reports do not depend on thread scheduling.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::world::GameState;

const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    /// States past this day are not explored.
    pub max_day: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 100_000,
            max_day: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration<F> {
    pub states: usize,
    pub checked: usize,
    pub findings: Vec<F>,
    pub truncated: bool,
}

/// `visit` returns a state's successors, the number of checks it made and
/// anything it found.
pub fn explore<F, V>(g0: &GameState, limits: Limits, visit: V) -> Exploration<F>
where
    F: Send,
    V: Fn(&GameState) -> (Vec<GameState>, usize, Vec<F>) + Sync,
{
    let mut seen: HashSet<GameState> = HashSet::new();
    seen.insert(g0.clone());
    let mut frontier = vec![g0.clone()];
    let mut out = Exploration {
        states: 0,
        checked: 0,
        findings: Vec::new(),
        truncated: false,
    };
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for chunk in frontier.chunks(CHUNK) {
            let visited: Vec<_> = chunk.par_iter().map(|g| (g, visit(g))).collect();
            for (g, (succs, checked, findings)) in visited {
                out.checked += checked;
                out.findings.extend(findings);
                for s in succs {
                    if s == *g || seen.contains(&s) {
                        continue;
                    }
                    if s.day() > limits.max_day || seen.len() >= limits.max_states {
                        out.truncated = true;
                        continue;
                    }
                    seen.insert(s.clone());
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    out.states = seen.len();
    out
}
