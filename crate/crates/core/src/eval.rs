//! Batch evaluation of proof search and of theorem-name predictions.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernel::{Declaration, Environment};
use crate::search::{best_first_search, root_state, Oracle, SearchConfig, SearchStatus, ToySpace};

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub runs: usize,
    pub workers: usize,
    /// Searches use this cutoff instead of each theorem's own order index.
    pub env_cutoff: Option<usize>,
    pub cancel: Option<Arc<AtomicBool>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub proved: usize,
    pub attempted: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremOutcome {
    pub run: usize,
    pub name: String,
    pub module: String,
    pub status: Option<SearchStatus>,
    pub proof: Option<Vec<String>>,
    pub iterations: usize,
    pub env_cutoff: usize,
    /// The search panicked; the theorem counts as unproved.
    pub aborted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub per_run: Vec<Tally>,
    pub pass_rate: f64,
    /// Keyed by the first component of the module path, summed over runs.
    pub per_module: BTreeMap<String, Tally>,
    /// Semicolon count per tactic → number of tactics, over successful proofs.
    pub semicolon_histogram: BTreeMap<usize, usize>,
    pub mean_chain_length: f64,
    /// Proofs mentioning a declaration at or after their cutoff.
    pub circularity_violations: Vec<String>,
    pub aborts: usize,
    pub interrupted: bool,
    pub outcomes: Vec<TheoremOutcome>,
}

pub fn chain_length(tactic: &str) -> usize {
    tactic.matches(';').count()
}

/// Identifiers in tactic text that name declarations outside the cutoff.
pub fn audit_proof(proof: &[String], env: &Environment, cutoff: usize) -> Vec<String> {
    let mut bad = Vec::new();
    for tac in proof {
        for tok in tac.split(|c: char| !(c.is_alphanumeric() || "_.'!?".contains(c))) {
            if let Some(d) = env.get(tok) {
                if d.order_index >= cutoff && !bad.iter().any(|b| b == tok) {
                    bad.push(tok.to_string());
                }
            }
        }
    }
    bad
}

fn module_key(path: &str) -> String {
    path.split(['.', '/']).next().unwrap_or("").to_string()
}

/// Evaluate every theorem `runs` times. `oracle_for_run` supplies the
/// oracle of each run, so seeded oracles can differ between runs.
pub fn run_eval<O, F>(
    env: &Environment,
    theorems: &[&Declaration],
    oracle_for_run: F,
    cfg: &SearchConfig,
    opts: &EvalOptions,
) -> EvalReport
where
    O: Oracle,
    F: Fn(usize) -> O,
{
    let runs = opts.runs.max(1);
    let oracles: Vec<O> = (0..runs).map(&oracle_for_run).collect();
    let cancel = opts.cancel.clone().unwrap_or_else(|| Arc::new(AtomicBool::new(false)));
    let cfg = SearchConfig { cancel: Some(cancel.clone()), ..cfg.clone() };
    let jobs: Vec<(usize, &Declaration)> = (0..runs).flat_map(|r| theorems.iter().map(move |d| (r, *d))).collect();
    let space = ToySpace::new(env);
    let work = |&(run, decl): &(usize, &Declaration)| -> TheoremOutcome {
        let cutoff = opts.env_cutoff.unwrap_or(decl.order_index);
        let mut out = TheoremOutcome {
            run,
            name: decl.name.to_string(),
            module: decl.module_path.clone(),
            status: None,
            proof: None,
            iterations: 0,
            env_cutoff: cutoff,
            aborted: false,
        };
        if cancel.load(Ordering::Relaxed) {
            return out;
        }
        let searched = catch_unwind(AssertUnwindSafe(|| {
            let mut root = root_state(decl, env);
            root.env_cutoff = cutoff;
            best_first_search(&space, root, &oracles[run], &cfg)
        }));
        match searched {
            Ok(r) => {
                out.status = Some(r.status);
                out.proof = r.proof;
                out.iterations = r.iterations;
            }
            Err(_) => out.aborted = true,
        }
        out
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build().expect("thread pool");
    let outcomes: Vec<TheoremOutcome> = pool.install(|| jobs.par_iter().map(work).collect());
    aggregate(env, runs, outcomes, cancel.load(Ordering::Relaxed))
}

fn aggregate(env: &Environment, runs: usize, outcomes: Vec<TheoremOutcome>, interrupted: bool) -> EvalReport {
    let mut per_run = vec![Tally::default(); runs];
    let mut per_module: BTreeMap<String, Tally> = BTreeMap::new();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    for o in &outcomes {
        let proved = o.status == Some(SearchStatus::Proved);
        let t = &mut per_run[o.run];
        t.attempted += 1;
        let m = per_module.entry(module_key(&o.module)).or_default();
        m.attempted += 1;
        if !proved {
            continue;
        }
        t.proved += 1;
        m.proved += 1;
        let proof = o.proof.as_deref().unwrap_or_default();
        for tac in proof {
            let n = chain_length(tac);
            if n > 0 {
                *hist.entry(n).or_default() += 1;
            }
        }
        for name in audit_proof(proof, env, o.env_cutoff) {
            violations.push(format!("{}: {name}", o.name));
        }
    }
    let pass_rate = per_run
        .iter()
        .map(|t| if t.attempted == 0 { 0.0 } else { t.proved as f64 / t.attempted as f64 })
        .sum::<f64>()
        / runs as f64;
    let chained: usize = hist.values().sum();
    let mean_chain_length =
        if chained == 0 { 0.0 } else { hist.iter().map(|(k, v)| k * v).sum::<usize>() as f64 / chained as f64 };
    EvalReport {
        schema_version: 1,
        per_run,
        pass_rate,
        per_module,
        semicolon_histogram: hist,
        mean_chain_length,
        circularity_violations: violations,
        aborts: outcomes.iter().filter(|o| o.aborted).count(),
        interrupted,
        outcomes,
    }
}

/// Declarations at or after `cutoff`, in environment order.
pub fn chronological_holdout(env: &Environment, cutoff: usize) -> Vec<&Declaration> {
    env.decls().iter().filter(|d| d.order_index >= cutoff).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamingRow {
    pub truth: String,
    /// `(name, cumulative log-probability)`.
    pub candidates: Vec<(String, f64)>,
}

/// Fraction of rows whose truth is among the `k` best candidates, per `k`.
pub fn topk_accuracy(rows: &[NamingRow], ks: &[usize]) -> BTreeMap<usize, f64> {
    let ranks: Vec<Option<usize>> = rows
        .iter()
        .map(|r| {
            let mut c: Vec<&(String, f64)> = r.candidates.iter().collect();
            c.sort_by(|a, b| b.1.total_cmp(&a.1));
            c.iter().position(|(n, _)| *n == r.truth)
        })
        .collect();
    ks.iter()
        .map(|&k| {
            let hits = ranks.iter().filter(|r| r.is_some_and(|i| i < k)).count();
            (k, if rows.is_empty() { 0.0 } else { hits as f64 / rows.len() as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::logic_env;

    #[test]
    fn chain_length_counts_semicolons() {
        assert_eq!(chain_length("rcases X; rcases Y; subst h; simp"), 3);
        assert_eq!(chain_length("intro h"), 0);
    }

    #[test]
    fn holdout_bounds() {
        let env = logic_env();
        assert!(chronological_holdout(&env, env.len()).is_empty());
        assert_eq!(chronological_holdout(&env, 0).len(), env.len());
    }

    #[test]
    fn single_row_topk() {
        let rows = vec![NamingRow { truth: "a".into(), candidates: vec![("a".into(), -1.0)] }];
        assert_eq!(topk_accuracy(&rows, &[1])[&1], 1.0);
    }

    #[test]
    fn audit_flags_late_references() {
        let env = logic_env();
        let late = env.get("and_swap").unwrap().order_index;
        assert_eq!(audit_proof(&["exact and_swap h".into()], &env, late), vec!["and_swap"]);
        assert!(audit_proof(&["exact and_swap h".into()], &env, late + 1).is_empty());
    }
}
