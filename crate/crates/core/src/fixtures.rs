//! Bundled fixture corpus.

use crate::kernel::Environment;

/// Prelude plus theorem corpus in the fixture declaration format.
pub const LOGIC_ENV: &str = include_str!("../fixtures/logic.env");
/// Ground-truth tactic scripts for the corpus theorems.
pub const LOGIC_SCRIPTS: &str = include_str!("../fixtures/logic.scripts");
/// The four appendix Peirce datapoints as JSON Lines.
pub const PEIRCE_RAW: &str = include_str!("../fixtures/peirce_raw.jsonl");
/// Contamination-scan patterns, one per line.
pub const DEFAULT_PATTERNS: &str = include_str!("../fixtures/default_patterns.txt");

pub fn logic_env() -> Environment {
    Environment::load_str(LOGIC_ENV).expect("bundled environment type-checks")
}

/// Parse `== <theorem>` headed scripts with one tactic per line. Lines
/// starting with `--` are comments.
pub fn parse_scripts(text: &str) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("--") {
            continue;
        }
        if let Some(name) = line.strip_prefix("==") {
            out.push((name.trim().to_string(), Vec::new()));
        } else if let Some((_, steps)) = out.last_mut() {
            steps.push(line.to_string());
        }
    }
    out
}

pub fn logic_scripts() -> Vec<(String, Vec<String>)> {
    parse_scripts(LOGIC_SCRIPTS)
}

/// Patterns from a pattern file: one per line, bytes kept verbatim apart
/// from the line terminator; empty lines are skipped.
pub fn parse_patterns(text: &[u8]) -> Vec<Vec<u8>> {
    text.split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .filter(|l| !l.is_empty())
        .map(<[u8]>::to_vec)
        .collect()
}

pub fn default_patterns() -> Vec<Vec<u8>> {
    parse_patterns(DEFAULT_PATTERNS.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_env_loads() {
        let env = logic_env();
        assert!(env.theorems().count() >= 10);
        assert_eq!(env.get("peirce_identity").unwrap().module_path, "logic.classical");
    }

    #[test]
    fn patterns_keep_trailing_space() {
        let p = default_patterns();
        assert_eq!(p.len(), 8);
        assert_eq!(p[6], b"apply (rule ".to_vec());
    }

    #[test]
    fn every_theorem_has_a_script() {
        let env = logic_env();
        let scripts = logic_scripts();
        for t in env.theorems() {
            assert!(scripts.iter().any(|(n, _)| **n == *t.name), "{}", t.name);
        }
    }
}
