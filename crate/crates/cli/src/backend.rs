//! Oracle backends selected by a spec string:
//! `tidy`, `refl`, `scripted:<file>` or `remote:<url>`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use pact_core::fixtures::parse_scripts;
use pact_core::kernel::Environment;
use pact_core::search::oracle::scripted_from_script;
use pact_core::search::{refl_oracle, remote_oracle, root_state, tidy_oracle, Oracle, ScriptedOracle, ToySpace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Tidy,
    Refl,
    Scripted(String),
    Remote(String),
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            _ if s == "tidy" => Ok(Backend::Tidy),
            _ if s == "refl" => Ok(Backend::Refl),
            Some(("scripted", f)) if !f.is_empty() => Ok(Backend::Scripted(f.to_string())),
            Some(("remote", u)) if !u.is_empty() => Ok(Backend::Remote(u.to_string())),
            _ => Err(format!("unknown backend `{s}` (expected tidy, refl, scripted:<file> or remote:<url>)")),
        }
    }
}

pub struct RemoteOptions {
    pub timeout: Duration,
    pub retries: u32,
    pub n: usize,
}

/// Build a table oracle from a script file. The file is either a JSON
/// table `{"table": {state: [[tactic, score], ...]}}`, a list of
/// `== theorem` sections, or bare tactic lines for `default_theorem`.
pub fn load_scripted(path: &Path, env: &Environment, default_theorem: Option<&str>) -> Result<ScriptedOracle> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let mut scripts = parse_scripts(&text);
    if scripts.is_empty() {
        let lines: Vec<String> =
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with("--")).map(String::from).collect();
        let name = default_theorem.ok_or_else(|| anyhow!("{}: bare script needs a theorem", path.display()))?;
        scripts.push((name.to_string(), lines));
    }
    let space = ToySpace::new(env);
    let mut table = HashMap::new();
    for (name, script) in scripts {
        let decl = env.get(&name).ok_or_else(|| anyhow!("script for unknown declaration `{name}`"))?;
        let oracle = scripted_from_script(&space, &root_state(decl, env), &script)
            .map_err(|(i, e)| anyhow!("{name}: step {} (`{}`): {e}", i + 1, script[i]))?;
        for (state, cands) in oracle.table {
            let slot: &mut Vec<_> = table.entry(state).or_default();
            for c in cands {
                if !slot.contains(&c) {
                    slot.push(c);
                }
            }
        }
    }
    Ok(ScriptedOracle { table })
}

pub fn build(
    backend: &Backend,
    env: &Environment,
    default_theorem: Option<&str>,
    remote: &RemoteOptions,
) -> Result<Arc<dyn Oracle>> {
    Ok(match backend {
        Backend::Tidy => Arc::new(tidy_oracle()),
        Backend::Refl => Arc::new(refl_oracle()),
        Backend::Scripted(f) => Arc::new(load_scripted(Path::new(f), env, default_theorem)?),
        Backend::Remote(url) => {
            if remote.n == 0 {
                bail!("candidates_per_query must be positive");
            }
            Arc::new(remote_oracle(url, remote.timeout, remote.n)?.with_retries(remote.retries))
        }
    })
}
