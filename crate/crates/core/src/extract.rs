//! Proof-artifact extraction: one record per proof subterm, or ingestion of
//! records produced elsewhere in the same JSON schema.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::expr::{Expr, HOLE};
use crate::kernel::print::{print_expr, print_in, PrintMode};
use crate::kernel::traverse::{occurs, replace_at, subterms, SubtermContext, Target};
use crate::kernel::typing::{infer_type, whnf};
use crate::kernel::{Declaration, Environment, KernelError, Level};

/// A `(name, type)` pair serialized as a two-element JSON array.
pub type Named = (String, String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDatapoint {
    pub decl_nm: String,
    pub decl_tp: String,
    pub hyps: Vec<Named>,
    pub hyps_mask: Vec<bool>,
    pub decl_premises: Vec<Named>,
    pub decl_premises_mask: Vec<bool>,
    pub goal: String,
    pub proof_term: String,
    pub result: String,
    pub next_lemma: Option<Named>,
    pub goal_is_prop: bool,
    pub verbose_proof_term: String,
    pub verbose_goal: String,
    pub verbose_result: String,
}

pub const FIELDS: [&str; 14] = [
    "decl_nm",
    "decl_tp",
    "hyps",
    "hyps_mask",
    "decl_premises",
    "decl_premises_mask",
    "goal",
    "proof_term",
    "result",
    "next_lemma",
    "goal_is_prop",
    "verbose_proof_term",
    "verbose_goal",
    "verbose_result",
];

#[derive(Clone, Debug)]
pub struct ExtractionConfig {
    /// Skip subterms with fewer nodes.
    pub min_subterm_size: usize,
    /// Skip subterms that are sorts.
    pub skip_sorts: bool,
    /// Fill the `verbose_*` fields (empty strings otherwise).
    pub emit_verbose: bool,
    pub dedup_premises: bool,
    /// Depth cutoff applied to every printed term.
    pub max_depth: Option<usize>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { min_subterm_size: 1, skip_sorts: true, emit_verbose: true, dedup_premises: false, max_depth: None }
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("declaration `{0}` has no value")]
    NoValue(String),
    #[error("in `{decl}`: {source}")]
    Kernel { decl: String, source: KernelError },
    #[error("line {line}: field `{field}` {problem}")]
    Schema { field: String, line: usize, problem: &'static str },
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lemmas referenced by a declaration's value, ordered as the reverse of
/// their pre-order occurrence in the fully explicit term. Duplicates are
/// kept unless `dedup` is set.
pub fn premises_of(decl: &Declaration, env: &Environment, dedup: bool) -> Result<Vec<Named>, ExtractError> {
    let value = decl.value.as_ref().ok_or_else(|| ExtractError::NoValue(decl.name.to_string()))?;
    let mut names = Vec::new();
    value.constants_preorder(&mut names);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for name in names.iter().rev() {
        let Some(d) = env.get(name) else {
            return Err(ExtractError::Kernel {
                decl: decl.name.to_string(),
                source: KernelError::UnknownConstant { name: name.to_string(), offset: 0 },
            });
        };
        if !d.is_lemma || (dedup && !seen.insert(name.clone())) {
            continue;
        }
        out.push((name.to_string(), print_expr(&d.ty, env, PrintMode::Pretty, None)));
    }
    Ok(out)
}

fn next_lemma(sub: &Expr, ctx: &SubtermContext, env: &Environment, cfg: &ExtractionConfig) -> Option<Named> {
    match sub.spine().0 {
        Expr::Const(name) => {
            let d = env.get(name)?;
            Some((name.to_string(), print_expr(&d.ty, env, PrintMode::Pretty, cfg.max_depth)))
        }
        Expr::BVar(i) => {
            let pos = ctx.bs.len().checked_sub(1 + *i as usize)?;
            let prefix = SubtermContext { bs: ctx.bs[..pos].to_vec(), path: Vec::new() };
            let entry = &ctx.bs[pos];
            Some((entry.name.to_string(), print_in(&entry.ty, env, &prefix, PrintMode::Pretty, cfg.max_depth)))
        }
        _ => None,
    }
}

/// Hypotheses in scope at `ctx`, each type printed in its own prefix context.
pub fn context_hyps(ctx: &SubtermContext, env: &Environment, max_depth: Option<usize>) -> Vec<Named> {
    (0..ctx.bs.len())
        .map(|i| {
            let prefix = SubtermContext { bs: ctx.bs[..i].to_vec(), path: Vec::new() };
            let e = &ctx.bs[i];
            (e.name.to_string(), print_in(&e.ty, env, &prefix, PrintMode::Pretty, max_depth))
        })
        .collect()
}

/// One record per eligible subterm of the declaration's value, in pre-order.
/// Binder-type subtrees are not eligible.
pub fn extract_decl_datapoints(
    decl: &Declaration,
    env: &Environment,
    cfg: &ExtractionConfig,
) -> Result<Vec<RawDatapoint>, ExtractError> {
    let value = decl.value.as_ref().ok_or_else(|| ExtractError::NoValue(decl.name.to_string()))?;
    let kernel = |source| ExtractError::Kernel { decl: decl.name.to_string(), source };
    let premises = premises_of(decl, env, cfg.dedup_premises)?;
    let decl_tp = print_expr(&decl.ty, env, PrintMode::Pretty, cfg.max_depth);
    let hole = Expr::constant(HOLE);
    let mut out = Vec::new();
    for (sub, ctx) in subterms(value) {
        if ctx.in_binder_type() || sub.size() < cfg.min_subterm_size || (cfg.skip_sorts && sub.is_sort()) {
            continue;
        }
        let goal_ty = infer_type(&sub, &ctx, env).map_err(kernel)?;
        let sort = infer_type(&goal_ty, &ctx, env).map_err(kernel)?;
        let goal_is_prop = whnf(env, &sort) == Expr::Sort(Level::Prop);
        let masked = replace_at(value, &ctx.path, &hole).expect("path comes from traversal");
        let n = ctx.bs.len();
        let hyps_mask = (0..n).map(|i| occurs(&Target::BVar((n - 1 - i) as u32), &sub)).collect();
        let decl_premises_mask = premises.iter().map(|(p, _)| occurs(&Target::Const(p), &sub)).collect();
        let pretty = |e: &Expr| print_in(e, env, &ctx, PrintMode::Pretty, cfg.max_depth);
        let verbose = |e: &Expr| {
            if cfg.emit_verbose {
                print_in(e, env, &ctx, PrintMode::Verbose, cfg.max_depth)
            } else {
                String::new()
            }
        };
        out.push(RawDatapoint {
            decl_nm: decl.name.to_string(),
            decl_tp: decl_tp.clone(),
            hyps: context_hyps(&ctx, env, cfg.max_depth),
            hyps_mask,
            decl_premises: premises.clone(),
            decl_premises_mask,
            goal: pretty(&goal_ty),
            proof_term: pretty(&sub),
            result: print_expr(&masked, env, PrintMode::Pretty, cfg.max_depth),
            next_lemma: next_lemma(&sub, &ctx, env, cfg),
            goal_is_prop,
            verbose_proof_term: verbose(&sub),
            verbose_goal: verbose(&goal_ty),
            verbose_result: if cfg.emit_verbose {
                print_expr(&masked, env, PrintMode::Verbose, cfg.max_depth)
            } else {
                String::new()
            },
        });
    }
    Ok(out)
}

/// Extract from many declarations in parallel. Output is ordered by
/// declaration order index, then traversal order.
pub fn extract_all(
    decls: &[&Declaration],
    env: &Environment,
    cfg: &ExtractionConfig,
) -> Result<Vec<RawDatapoint>, ExtractError> {
    let mut sorted: Vec<&Declaration> = decls.to_vec();
    sorted.sort_by_key(|d| d.order_index);
    let parts: Vec<Result<Vec<RawDatapoint>, ExtractError>> =
        sorted.par_iter().map(|d| extract_decl_datapoints(d, env, cfg)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Validate a record's structural invariants. `result` may show zero holes
/// when the hole sits in an elided implicit argument.
pub fn validate(dp: &RawDatapoint, line: usize) -> Result<(), ExtractError> {
    let bad = |message: String| Err(ExtractError::Invariant { line, message });
    if dp.hyps.len() != dp.hyps_mask.len() {
        return bad(format!("hyps has {} entries, hyps_mask {}", dp.hyps.len(), dp.hyps_mask.len()));
    }
    if dp.decl_premises.len() != dp.decl_premises_mask.len() {
        return bad(format!(
            "decl_premises has {} entries, decl_premises_mask {}",
            dp.decl_premises.len(),
            dp.decl_premises_mask.len()
        ));
    }
    let holes = count_hole_tokens(&dp.result);
    if holes > 1 {
        return bad(format!("result contains PREDICT {holes} times"));
    }
    if count_hole_tokens(&dp.verbose_result) == 0 {
        return bad("verbose_result contains no PREDICT".into());
    }
    Ok(())
}

/// Occurrences of `PREDICT` as a whole identifier.
pub fn count_hole_tokens(s: &str) -> usize {
    let is_ident = |c: char| c.is_alphanumeric() || c == '_' || c == '.' || c == '\'';
    s.match_indices(HOLE)
        .filter(|(i, _)| {
            let before = s[..*i].chars().next_back();
            let after = s[i + HOLE.len()..].chars().next();
            !before.is_some_and(is_ident) && !after.is_some_and(is_ident)
        })
        .count()
}

/// Read JSON records (JSON Lines, or any whitespace-separated sequence of
/// objects) with exactly the schema's field names.
pub fn ingest_raw_json<R: BufRead>(reader: R) -> Result<Vec<RawDatapoint>, ExtractError> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
    let mut out = Vec::new();
    let mut stream = serde_json::Deserializer::from_str(&text).into_iter::<serde_json::Value>();
    loop {
        let start = stream.byte_offset();
        let Some(item) = stream.next() else { break };
        let skipped_ws = text[start..].len() - text[start..].trim_start().len();
        let line = line_of(start + skipped_ws);
        let value = item.map_err(|e| ExtractError::Json { line, message: e.to_string() })?;
        let serde_json::Value::Object(map) = &value else {
            return Err(ExtractError::Json { line, message: "expected a JSON object".into() });
        };
        for f in FIELDS {
            if !map.contains_key(f) {
                return Err(ExtractError::Schema { field: f.to_string(), line, problem: "is missing" });
            }
        }
        if let Some(extra) = map.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(ExtractError::Schema { field: extra.clone(), line, problem: "is not part of the schema" });
        }
        let dp: RawDatapoint = serde_json::from_value(value).map_err(|e| ExtractError::Json { line, message: e.to_string() })?;
        validate(&dp, line)?;
        out.push(dp);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
