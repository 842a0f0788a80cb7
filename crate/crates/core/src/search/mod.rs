//! Best-first proof search over a tactic environment with pluggable
//! candidate oracles.

pub mod graph;
pub mod oracle;
pub mod tactic;
pub mod tauto;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

pub use oracle::{
    refl_oracle, remote_oracle, scripted_oracle, tidy_oracle, Candidate, ConstantOracle, Oracle, RemoteOracle, ScriptedOracle,
    TIDY_DEFAULT_TACTICS,
};
pub use tactic::{render_state, root_state, Goal, Prover, TacticError, TacticState};

use crate::kernel::Environment;

/// A space of proof states navigated by string commands.
pub trait SearchSpace {
    type State: Clone;
    fn render(&self, state: &Self::State) -> String;
    fn apply(&self, state: &Self::State, command: &str, deadline: Option<Instant>) -> Result<Self::State, TacticError>;
    fn is_solved(&self, state: &Self::State) -> bool;
}

/// The toy tactic environment as a search space.
pub struct ToySpace<'a> {
    prover: Prover<'a>,
}

impl<'a> ToySpace<'a> {
    pub fn new(env: &'a Environment) -> Self {
        Self { prover: Prover::new(env) }
    }
}

impl SearchSpace for ToySpace<'_> {
    type State = TacticState;

    fn render(&self, state: &TacticState) -> String {
        render_state(state, self.prover.env)
    }

    fn apply(&self, state: &TacticState, command: &str, deadline: Option<Instant>) -> Result<TacticState, TacticError> {
        self.prover.apply_tactic(state, command, deadline)
    }

    fn is_solved(&self, state: &TacticState) -> bool {
        state.is_solved()
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Insertions are skipped while the queue holds more than this many nodes.
    pub w_max: Option<usize>,
    /// Children deeper than this are dropped.
    pub d_max: Option<usize>,
    pub max_iterations: usize,
    pub tactic_timeout: Duration,
    pub global_timeout: Duration,
    pub candidates_per_query: usize,
    /// Raised externally to stop the search at the next iteration.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            w_max: Some(16),
            d_max: Some(128),
            max_iterations: 512,
            tactic_timeout: Duration::from_secs(5),
            global_timeout: Duration::from_secs(600),
            candidates_per_query: 16,
            cancel: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Proved,
    Exhausted,
    BudgetExceeded,
    TimedOut,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub proof: Option<Vec<String>>,
    /// Nodes popped and expanded.
    pub iterations: usize,
    /// Successful tactic applications (children produced).
    pub nodes_expanded: usize,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    /// Rendered states in expansion order.
    #[serde(skip)]
    pub trace: Vec<String>,
    /// Largest queue length seen at an insertion.
    pub max_queue_at_insert: usize,
    /// Depth of the deepest expanded node.
    pub max_expanded_depth: usize,
    /// Set when the search stopped because of the cancel flag.
    pub cancelled: bool,
}

mod duration_secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

struct Node<S> {
    state: S,
    depth: usize,
    score: f64,
    parent: Option<usize>,
    tactic: Option<String>,
}

fn path_to<S>(nodes: &[Node<S>], mut i: usize) -> Vec<String> {
    let mut out = Vec::new();
    while let Some(t) = &nodes[i].tactic {
        out.push(t.clone());
        i = nodes[i].parent.expect("non-root node has a parent");
    }
    out.reverse();
    out
}

/// Best-first search: highest cumulative score first, earlier insertion
/// first on ties.
pub fn best_first_search<Sp: SearchSpace>(
    space: &Sp,
    root: Sp::State,
    oracle: &dyn Oracle,
    cfg: &SearchConfig,
) -> SearchResult {
    let start = Instant::now();
    let global_deadline = start + cfg.global_timeout;
    let mut result = SearchResult {
        status: SearchStatus::Exhausted,
        proof: None,
        iterations: 0,
        nodes_expanded: 0,
        wall_time: Duration::ZERO,
        trace: Vec::new(),
        max_queue_at_insert: 0,
        max_expanded_depth: 0,
        cancelled: false,
    };
    let finish = |mut r: SearchResult, status| {
        r.status = status;
        r.wall_time = start.elapsed();
        r
    };
    if space.is_solved(&root) {
        result.proof = Some(Vec::new());
        return finish(result, SearchStatus::Proved);
    }

    let mut nodes: Vec<Node<Sp::State>> = Vec::new();
    let mut queue: BinaryHeap<(OrderedFloat<f64>, Reverse<usize>)> = BinaryHeap::new();
    let mut visited: HashSet<String> = HashSet::new();
    visited.insert(space.render(&root));
    nodes.push(Node { state: root, depth: 0, score: 0.0, parent: None, tactic: None });
    queue.push((OrderedFloat(0.0), Reverse(0)));

    while let Some((_, Reverse(idx))) = queue.pop() {
        if cfg.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
            result.cancelled = true;
            return finish(result, SearchStatus::TimedOut);
        }
        if Instant::now() > global_deadline {
            return finish(result, SearchStatus::TimedOut);
        }
        if result.iterations >= cfg.max_iterations {
            return finish(result, SearchStatus::BudgetExceeded);
        }
        result.iterations += 1;
        let rendered = space.render(&nodes[idx].state);
        result.max_expanded_depth = result.max_expanded_depth.max(nodes[idx].depth);
        let mut candidates = oracle.query(&rendered, cfg.candidates_per_query);
        result.trace.push(rendered);
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
        candidates.truncate(cfg.candidates_per_query);

        for (cmd, score) in candidates {
            let now = Instant::now();
            if now > global_deadline {
                return finish(result, SearchStatus::TimedOut);
            }
            let deadline = (now + cfg.tactic_timeout).min(global_deadline);
            let Ok(child) = space.apply(&nodes[idx].state, &cmd, Some(deadline)) else { continue };
            result.nodes_expanded += 1;
            let depth = nodes[idx].depth + 1;
            let child_score = nodes[idx].score + score;
            if space.is_solved(&child) {
                let mut proof = path_to(&nodes, idx);
                proof.push(cmd);
                result.proof = Some(proof);
                return finish(result, SearchStatus::Proved);
            }
            if cfg.d_max.is_some_and(|d| depth > d) {
                continue;
            }
            let key = space.render(&child);
            if visited.contains(&key) {
                continue;
            }
            if cfg.w_max.is_some_and(|w| queue.len() > w) {
                continue;
            }
            result.max_queue_at_insert = result.max_queue_at_insert.max(queue.len());
            visited.insert(key);
            let seq = nodes.len();
            nodes.push(Node { state: child, depth, score: child_score, parent: Some(idx), tactic: Some(cmd) });
            queue.push((OrderedFloat(child_score), Reverse(seq)));
        }
    }
    finish(result, SearchStatus::Exhausted)
}

/// Search for a proof of theorem `name` in the toy environment.
pub fn prove_theorem(
    env: &Environment,
    name: &str,
    oracle: &dyn Oracle,
    cfg: &SearchConfig,
    env_cutoff: Option<usize>,
) -> Option<SearchResult> {
    let decl = env.get(name)?;
    let mut root = root_state(decl, env);
    if let Some(c) = env_cutoff {
        root.env_cutoff = c;
    }
    Some(best_first_search(&ToySpace::new(env), root, oracle, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{logic_env, logic_scripts};

    #[test]
    fn scripted_peirce_proved_in_four_expansions() {
        let env = logic_env();
        let scripts = logic_scripts();
        let script = &scripts.iter().find(|(n, _)| n == "peirce_identity").unwrap().1;
        let space = ToySpace::new(&env);
        let root = root_state(env.get("peirce_identity").unwrap(), &env);
        let oracle = oracle::scripted_from_script(&space, &root, script).unwrap();
        let r = best_first_search(&space, root, &oracle, &SearchConfig::default());
        assert_eq!(r.status, SearchStatus::Proved);
        assert_eq!(r.iterations, 4);
        assert_eq!(r.proof.as_ref().unwrap(), script);
    }

    #[test]
    fn empty_table_exhausts_after_one_iteration() {
        let env = logic_env();
        let space = ToySpace::new(&env);
        let root = root_state(env.get("peirce_identity").unwrap(), &env);
        let r = best_first_search(&space, root, &scripted_oracle(Default::default()), &SearchConfig::default());
        assert_eq!(r.status, SearchStatus::Exhausted);
        assert_eq!(r.iterations, 1);
        assert!(r.proof.is_none());
    }

    #[test]
    fn tidy_proves_imp_self() {
        let env = logic_env();
        let cfg = SearchConfig { w_max: Some(0), ..SearchConfig::default() };
        let r = prove_theorem(&env, "imp_self'", &tidy_oracle(), &cfg, None).unwrap();
        assert_eq!(r.status, SearchStatus::Proved);
        assert_eq!(r.proof.unwrap(), vec!["tactic.intros1", "assumption"]);
    }

    #[test]
    fn refl_cannot_prove_implication() {
        let env = logic_env();
        let r = prove_theorem(&env, "imp_self'", &refl_oracle(), &SearchConfig::default(), None).unwrap();
        assert_eq!(r.status, SearchStatus::Exhausted);
    }

    #[test]
    fn budget_is_respected() {
        let env = logic_env();
        let cfg = SearchConfig { max_iterations: 1, ..SearchConfig::default() };
        let r = prove_theorem(&env, "peirce_identity", &tidy_oracle(), &cfg, None).unwrap();
        assert_eq!(r.status, SearchStatus::BudgetExceeded);
        assert_eq!(r.iterations, 1);
    }
}
