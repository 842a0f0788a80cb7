//! Explicit state graphs as search spaces, for exercising the search
//! loop independently of the tactic language.

use std::collections::HashMap;
use std::time::Instant;

use super::oracle::{Candidate, Oracle};
use super::{SearchSpace, TacticError};

/// Nodes are integers; an edge is a labelled command with an oracle score.
#[derive(Clone, Debug, Default)]
pub struct GraphSpace {
    pub edges: HashMap<u32, Vec<(String, f64, u32)>>,
    pub goals: Vec<u32>,
}

impl GraphSpace {
    pub fn render_node(n: u32) -> String {
        format!("n{n}")
    }

    fn parse_node(s: &str) -> Option<u32> {
        s.strip_prefix('n')?.parse().ok()
    }

    pub fn add_edge(&mut self, from: u32, label: impl Into<String>, score: f64, to: u32) {
        self.edges.entry(from).or_default().push((label.into(), score, to));
    }

    /// Oracle listing each node's outgoing edges with their scores. Labels
    /// that `apply` rejects can be added to test failure handling.
    pub fn oracle(&self) -> GraphOracle {
        GraphOracle {
            table: self
                .edges
                .iter()
                .map(|(n, es)| (Self::render_node(*n), es.iter().map(|(l, s, _)| (l.clone(), *s)).collect()))
                .collect(),
        }
    }
}

impl SearchSpace for GraphSpace {
    type State = u32;

    fn render(&self, state: &u32) -> String {
        Self::render_node(*state)
    }

    fn apply(&self, state: &u32, command: &str, _deadline: Option<Instant>) -> Result<u32, TacticError> {
        self.edges
            .get(state)
            .and_then(|es| es.iter().find(|(l, _, _)| l == command))
            .map(|(_, _, to)| *to)
            .ok_or_else(|| TacticError::Parse(command.to_string()))
    }

    fn is_solved(&self, state: &u32) -> bool {
        self.goals.contains(state)
    }
}

pub struct GraphOracle {
    table: HashMap<String, Vec<Candidate>>,
}

impl GraphOracle {
    pub fn node_of(state: &str) -> Option<u32> {
        GraphSpace::parse_node(state)
    }
}

impl Oracle for GraphOracle {
    fn query(&self, state: &str, n: usize) -> Vec<Candidate> {
        let mut c: Vec<Candidate> = self.table.get(state).cloned().unwrap_or_default();
        c.sort_by(|a, b| b.1.total_cmp(&a.1));
        c.truncate(n);
        c
    }
}
