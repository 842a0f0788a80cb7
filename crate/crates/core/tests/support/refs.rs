//! Reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use pact_core::search::graph::GraphSpace;
use pact_core::search::tauto::Formula;
use rand::Rng;

pub type Trace = (Vec<String>, Option<Vec<String>>);

fn sorted_edges(g: &GraphSpace, n: u32) -> Vec<(String, f64, u32)> {
    let mut es = g.edges.get(&n).cloned().unwrap_or_default();
    es.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    es
}

/// Follow the best unvisited child; stop when a child is a goal or no
/// unvisited child remains.
pub fn greedy_dfs(g: &GraphSpace, root: u32) -> Trace {
    let mut visited = HashSet::from([root]);
    let mut trace = Vec::new();
    let mut path = Vec::new();
    let mut cur = root;
    loop {
        trace.push(format!("n{cur}"));
        let mut next = None;
        for (label, _, to) in sorted_edges(g, cur) {
            if g.goals.contains(&to) {
                path.push(label);
                return (trace, Some(path));
            }
            if next.is_none() && visited.insert(to) {
                next = Some((label, to));
            }
        }
        match next {
            Some((label, to)) => {
                path.push(label);
                cur = to;
            }
            None => return (trace, None),
        }
    }
}

/// Layer-by-layer expansion with goal test on generation.
pub fn bfs(g: &GraphSpace, root: u32) -> Trace {
    let mut visited = HashSet::from([root]);
    let mut queue = VecDeque::from([(root, Vec::<String>::new())]);
    let mut trace = Vec::new();
    while let Some((n, path)) = queue.pop_front() {
        trace.push(format!("n{n}"));
        for (label, _, to) in g.edges.get(&n).cloned().unwrap_or_default() {
            let mut p = path.clone();
            p.push(label);
            if g.goals.contains(&to) {
                return (trace, Some(p));
            }
            if visited.insert(to) {
                queue.push_back((to, p));
            }
        }
    }
    (trace, None)
}

/// Random directed graph over `nodes` nodes rooted at 0. Edges may point
/// backwards, so revisits occur. Scores are distinct unless `uniform`.
pub fn random_graph<R: Rng>(rng: &mut R, nodes: u32, max_branch: usize, uniform: bool) -> GraphSpace {
    let mut g = GraphSpace::default();
    let mut next_score = 0.0;
    for n in 0..nodes {
        let k = rng.gen_range(0..=max_branch);
        for j in 0..k {
            let to = if rng.gen_bool(0.8) { rng.gen_range(n.min(nodes - 1)..nodes) } else { rng.gen_range(0..nodes) };
            let score = if uniform {
                0.0
            } else {
                next_score -= rng.gen_range(0.001..1.0);
                next_score
            };
            g.add_edge(n, format!("t{n}_{j}"), score, to);
        }
        // Shuffle so edge order is unrelated to score order.
        if let Some(es) = g.edges.get_mut(&n) {
            for i in (1..es.len()).rev() {
                es.swap(i, rng.gen_range(0..=i));
            }
        }
    }
    if rng.gen_bool(0.7) {
        g.goals.push(rng.gen_range(1..nodes));
    }
    g
}

/// Truth-table validity, written without the library's evaluator.
pub fn brute_valid(f: &Formula, atoms: usize) -> bool {
    fn ev(f: &Formula, v: &[bool]) -> bool {
        match f {
            Formula::Atom(i) => v[*i],
            Formula::True => true,
            Formula::False => false,
            Formula::Not(a) => !ev(a, v),
            Formula::And(a, b) => ev(a, v) & ev(b, v),
            Formula::Or(a, b) => ev(a, v) | ev(b, v),
            Formula::Imp(a, b) => !ev(a, v) | ev(b, v),
            Formula::Iff(a, b) => ev(a, v) == ev(b, v),
        }
    }
    (0..1usize << atoms).all(|row| {
        let v: Vec<bool> = (0..atoms).map(|i| row & (1 << i) != 0).collect();
        ev(f, &v)
    })
}

/// Uniformly shaped random formula with at most `depth` connective levels.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(rng.gen_range(0..atoms)),
        };
    }
    let op = rng.gen_range(0..5);
    let a = Box::new(random_formula(rng, atoms, depth - 1));
    if op == 0 {
        return Formula::Not(a);
    }
    let b = Box::new(random_formula(rng, atoms, depth - 1));
    match op {
        1 => Formula::And(a, b),
        2 => Formula::Or(a, b),
        3 => Formula::Imp(a, b),
        _ => Formula::Iff(a, b),
    }
}

/// Naive overlapping substring count.
pub fn naive_count(hay: &[u8], pat: &[u8]) -> u64 {
    if pat.is_empty() || pat.len() > hay.len() {
        return 0;
    }
    hay.windows(pat.len()).filter(|w| *w == pat).count() as u64
}
