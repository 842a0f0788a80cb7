//! Candidate oracles: tactic state in, scored tactic strings out.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{SearchSpace, TacticError};

pub type Candidate = (String, f64);

/// Maps a rendered tactic state to scored candidates, best first.
pub trait Oracle: Send + Sync {
    fn query(&self, state: &str, n: usize) -> Vec<Candidate>;
}

impl<F> Oracle for F
where
    F: Fn(&str, usize) -> Vec<Candidate> + Send + Sync,
{
    fn query(&self, state: &str, n: usize) -> Vec<Candidate> {
        self(state, n)
    }
}

pub const TIDY_DEFAULT_TACTICS: [&str; 13] = [
    "refl",
    "exact dec_trivial",
    "assumption",
    "tactic.intros1",
    "tactic.auto_cases",
    "apply_auto_param",
    "dsimp at *",
    "simp at *",
    "ext1",
    "fsplit",
    "injections_and_clear",
    "solve_by_elim",
    "norm_cast",
];

/// Returns a fixed list regardless of the state.
#[derive(Clone, Debug)]
pub struct ConstantOracle(pub Vec<Candidate>);

impl Oracle for ConstantOracle {
    fn query(&self, _state: &str, n: usize) -> Vec<Candidate> {
        self.0.iter().take(n).cloned().collect()
    }
}

pub fn tidy_oracle() -> ConstantOracle {
    ConstantOracle(TIDY_DEFAULT_TACTICS.iter().map(|t| (t.to_string(), 0.0)).collect())
}

pub fn refl_oracle() -> ConstantOracle {
    ConstantOracle(vec![("refl".to_string(), 0.0)])
}

/// Exact lookup of the rendered state.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScriptedOracle {
    pub table: HashMap<String, Vec<Candidate>>,
}

impl Oracle for ScriptedOracle {
    fn query(&self, state: &str, n: usize) -> Vec<Candidate> {
        self.table.get(state).map(|c| c.iter().take(n).cloned().collect()).unwrap_or_default()
    }
}

pub fn scripted_oracle(table: HashMap<String, Vec<Candidate>>) -> ScriptedOracle {
    ScriptedOracle { table }
}

/// Table that maps each state along a replayed script to its next command.
pub fn scripted_from_script<Sp: SearchSpace>(
    space: &Sp,
    root: &Sp::State,
    script: &[String],
) -> Result<ScriptedOracle, (usize, TacticError)> {
    let mut table: HashMap<String, Vec<Candidate>> = HashMap::new();
    let mut state = root.clone();
    for (i, cmd) in script.iter().enumerate() {
        table.entry(space.render(&state)).or_default().push((cmd.clone(), 0.0));
        state = space.apply(&state, cmd, None).map_err(|e| (i, e))?;
    }
    Ok(ScriptedOracle { table })
}

#[derive(Serialize)]
struct CandidateRequest<'a> {
    tactic_state: &'a str,
    n: usize,
    keyword: &'a str,
}

#[derive(Deserialize)]
struct WireCandidate {
    text: String,
    logprob: f64,
}

#[derive(Deserialize)]
struct CandidateResponse {
    candidates: Vec<WireCandidate>,
}

/// Client for the `/candidates` HTTP endpoint. Transport errors, non-200
/// replies and malformed bodies all yield an empty list.
pub struct RemoteOracle {
    client: reqwest::blocking::Client,
    url: String,
    n: usize,
    retries: u32,
}

impl RemoteOracle {
    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    fn request(&self, state: &str, n: usize) -> Result<Vec<Candidate>, String> {
        let body = CandidateRequest { tactic_state: state, n, keyword: "PROOFSTEP" };
        let resp = self.client.post(&self.url).json(&body).send().map_err(|e| e.to_string())?;
        if resp.status() != reqwest::StatusCode::OK {
            return Err(format!("status {}", resp.status()));
        }
        let parsed: CandidateResponse = resp.json().map_err(|e| e.to_string())?;
        Ok(parsed.candidates.into_iter().map(|c| (c.text, c.logprob)).collect())
    }
}

impl Oracle for RemoteOracle {
    fn query(&self, state: &str, n: usize) -> Vec<Candidate> {
        let n = n.min(self.n);
        for attempt in 0..=self.retries {
            match self.request(state, n) {
                Ok(mut cands) => {
                    cands.retain(|c| c.1.is_finite());
                    cands.sort_by(|a, b| b.1.total_cmp(&a.1));
                    cands.truncate(n);
                    return cands;
                }
                Err(e) => tracing::warn!(attempt, error = %e, "candidate request failed"),
            }
        }
        Vec::new()
    }
}

/// `endpoint` is the base URL; requests go to `<endpoint>/candidates`.
pub fn remote_oracle(endpoint: &str, timeout: Duration, n: usize) -> Result<RemoteOracle, reqwest::Error> {
    let client = reqwest::blocking::Client::builder().timeout(timeout).build()?;
    let base = endpoint.trim_end_matches('/');
    let url = if base.ends_with("/candidates") { base.to_string() } else { format!("{base}/candidates") };
    Ok(RemoteOracle { client, url, n, retries: 0 })
}
