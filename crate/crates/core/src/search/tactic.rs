//! Toy tactic language over the kernel: goals are local contexts of
//! `FVar`s plus a target proposition.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use super::tauto::{is_tautology, Formula, TautoOutcome, Translator};
use crate::kernel::expr::{alpha_eq, instantiate};
use crate::kernel::parse::{parse_syntax, Elaborator};
use crate::kernel::{
    defeq, parse_with_locals, print_expr, whnf, BinderInfo, Declaration, Environment, Expr, FVarId, ParseOptions,
    PrintMode, TypeChecker,
};
use crate::tasks::{encode_proofstep, render_tactic_state, GoalStrings, TacticStep, TaskExample};

#[derive(Clone, Debug)]
pub struct Goal {
    /// Local constants, outermost first.
    pub hyps: Vec<Expr>,
    pub target: Expr,
}

#[derive(Clone, Debug)]
pub struct TacticState {
    pub goals: Vec<Goal>,
    /// Only declarations with a smaller order index may be referenced.
    pub env_cutoff: usize,
}

impl TacticState {
    pub fn is_solved(&self) -> bool {
        self.goals.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TacticError {
    #[error("cannot parse tactic: {0}")]
    Parse(String),
    #[error("tactic failed: {0}")]
    Failed(String),
    #[error("tactic timed out")]
    Timeout,
}

fn failed(msg: impl Into<String>) -> TacticError {
    TacticError::Failed(msg.into())
}

fn hyp_parts(h: &Expr) -> (&Arc<str>, &Expr) {
    match h {
        Expr::FVar { name, ty, .. } => (name, ty),
        _ => unreachable!("hypotheses are local constants"),
    }
}

fn fresh_local(name: &Arc<str>, ty: Expr) -> Expr {
    Expr::FVar { id: FVarId::fresh(), name: name.clone(), ty: Arc::new(ty) }
}

pub fn goal_strings(goal: &Goal, env: &Environment) -> GoalStrings {
    GoalStrings {
        hyps: goal
            .hyps
            .iter()
            .map(|h| {
                let (n, t) = hyp_parts(h);
                (n.to_string(), print_expr(t, env, PrintMode::Pretty, None))
            })
            .collect(),
        target: print_expr(&goal.target, env, PrintMode::Pretty, None),
    }
}

pub fn render_state(state: &TacticState, env: &Environment) -> String {
    let goals: Vec<GoalStrings> = state.goals.iter().map(|g| goal_strings(g, env)).collect();
    render_tactic_state(&goals)
}

/// Initial state for proving `decl`: leading binders whose type is a sort
/// become hypotheses.
pub fn root_state(decl: &Declaration, env: &Environment) -> TacticState {
    let mut hyps = Vec::new();
    let mut target = decl.ty.clone();
    while let Expr::Pi(b, body) = &target {
        if !whnf(env, &b.ty).is_sort() {
            break;
        }
        let x = fresh_local(&b.name, (*b.ty).clone());
        target = instantiate(body, &x);
        hyps.push(x);
    }
    TacticState { goals: vec![Goal { hyps, target }], env_cutoff: decl.order_index }
}

/// Split at top-level `;` (outside brackets).
fn split_chain(cmd: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in cmd.char_indices() {
        match c {
            '(' | '[' | '{' | '⟨' => depth += 1,
            ')' | ']' | '}' | '⟩' => depth -= 1,
            ';' if depth == 0 => {
                parts.push(&cmd[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&cmd[start..]);
    parts
}

pub struct Prover<'a> {
    pub env: &'a Environment,
}

impl<'a> Prover<'a> {
    pub fn new(env: &'a Environment) -> Self {
        Self { env }
    }

    /// Run `command` on the first goal; produced goals replace it in order.
    pub fn apply_tactic(&self, state: &TacticState, command: &str, deadline: Option<Instant>) -> Result<TacticState, TacticError> {
        let Some((first, rest)) = state.goals.split_first() else {
            return Err(failed("no goals"));
        };
        let parts = split_chain(command.trim());
        if parts.iter().any(|p| p.trim().is_empty()) {
            return Err(TacticError::Parse(command.to_string()));
        }
        let mut goals = self.run_single(first, parts[0].trim(), state.env_cutoff, deadline)?;
        for part in &parts[1..] {
            let mut next = Vec::new();
            for g in &goals {
                next.extend(self.run_single(g, part.trim(), state.env_cutoff, deadline)?);
            }
            goals = next;
        }
        if deadline.is_some_and(|d| Instant::now() > d) {
            return Err(TacticError::Timeout);
        }
        goals.extend(rest.iter().cloned());
        Ok(TacticState { goals, env_cutoff: state.env_cutoff })
    }

    fn run_single(&self, goal: &Goal, cmd: &str, cutoff: usize, deadline: Option<Instant>) -> Result<Vec<Goal>, TacticError> {
        let (name, arg) = match cmd.find(char::is_whitespace) {
            Some(i) => (&cmd[..i], cmd[i..].trim()),
            None => (cmd, ""),
        };
        let no_arg = |r: Result<Vec<Goal>, TacticError>| {
            if arg.is_empty() {
                r
            } else {
                Err(TacticError::Parse(cmd.to_string()))
            }
        };
        match name {
            "assumption" => no_arg(self.assumption(goal)),
            "exact" if !arg.is_empty() => self.exact(goal, arg, cutoff),
            "intro" => {
                let names: Vec<&str> = arg.split_whitespace().collect();
                if names.len() > 1 {
                    return Err(TacticError::Parse(cmd.to_string()));
                }
                self.intro_names(goal, &[names.first().copied().unwrap_or("_")]).map(|g| vec![g])
            }
            "intros" if arg.is_empty() => self.intros_all(goal, false).map(|g| vec![g]),
            "intros" => {
                let names: Vec<&str> = arg.split_whitespace().collect();
                self.intro_names(goal, &names).map(|g| vec![g])
            }
            "tactic.intros1" => no_arg(self.intros_all(goal, true).map(|g| vec![g])),
            "apply" if !arg.is_empty() => self.apply(goal, arg, cutoff),
            "split" | "fsplit" | "constructor" => no_arg(self.split(goal)),
            "left" => no_arg(self.side(goal, 0)),
            "right" => no_arg(self.side(goal, 1)),
            "refl" | "reflexivity" => no_arg(self.refl(goal)),
            "tauto" | "tauto!" => no_arg(self.tauto(goal, deadline)),
            _ => Err(TacticError::Parse(cmd.to_string())),
        }
    }

    fn assumption(&self, goal: &Goal) -> Result<Vec<Goal>, TacticError> {
        if goal.hyps.iter().rev().any(|h| alpha_eq(hyp_parts(h).1, &goal.target)) {
            Ok(vec![])
        } else {
            Err(failed("no matching hypothesis"))
        }
    }

    fn exact(&self, goal: &Goal, term: &str, cutoff: usize) -> Result<Vec<Goal>, TacticError> {
        let opts = ParseOptions::typed(goal.target.clone()).cutoff(cutoff);
        let e = parse_with_locals(term, self.env, &goal.hyps, &opts).map_err(|e| failed(e.to_string()))?;
        let ty = TypeChecker::new(self.env, cutoff).infer(&e).map_err(|e| failed(e.to_string()))?;
        if defeq(&ty, &goal.target) || defeq(&whnf(self.env, &ty), &whnf(self.env, &goal.target)) {
            Ok(vec![])
        } else {
            Err(failed("type mismatch"))
        }
    }

    /// Introduce one binder, unfolding definitions at the head if needed.
    fn intro_one(&self, goal: &Goal, name: &str) -> Option<Goal> {
        let pi = match &goal.target {
            Expr::Pi(..) => goal.target.clone(),
            other => match whnf(self.env, other) {
                w @ Expr::Pi(..) => w,
                _ => return None,
            },
        };
        let Expr::Pi(b, body) = &pi else { unreachable!() };
        let name: Arc<str> = if name == "_" { b.name.clone() } else { Arc::from(name) };
        let x = fresh_local(&name, (*b.ty).clone());
        let target = instantiate(body, &x);
        let mut hyps = goal.hyps.clone();
        hyps.push(x);
        Some(Goal { hyps, target })
    }

    fn intro_names(&self, goal: &Goal, names: &[&str]) -> Result<Goal, TacticError> {
        let mut g = goal.clone();
        for n in names {
            g = self.intro_one(&g, n).ok_or_else(|| failed("goal is not a function type"))?;
        }
        Ok(g)
    }

    /// Introduce every syntactic binder; with `at_least_one`, fail when
    /// nothing can be introduced.
    fn intros_all(&self, goal: &Goal, at_least_one: bool) -> Result<Goal, TacticError> {
        let mut g = goal.clone();
        let mut n = 0;
        while matches!(g.target, Expr::Pi(..)) {
            g = self.intro_one(&g, "_").expect("syntactic binder");
            n += 1;
        }
        if n == 0 && at_least_one {
            return match self.intro_one(&g, "_") {
                Some(g) => Ok(g),
                None => Err(failed("nothing to introduce")),
            };
        }
        Ok(g)
    }

    fn apply(&self, goal: &Goal, term: &str, cutoff: usize) -> Result<Vec<Goal>, TacticError> {
        let syn = parse_syntax(term).map_err(|e| TacticError::Parse(e.to_string()))?;
        let arity = |t: &Expr| {
            let mut n = 0;
            let mut t = t.clone();
            while let Expr::Pi(_, body) = &t {
                t = (**body).clone();
                n += 1;
            }
            n
        };
        // Probe the term's arity once to order the attempts.
        let (n, err) = {
            let mut el = Elaborator::new(self.env, cutoff, &goal.hyps);
            match el.elab(&syn, None) {
                Ok((_, ty)) => (arity(&el.inst(&ty)), None),
                Err(e) => (0, Some(e)),
            }
        };
        if let Some(e) = err {
            return Err(failed(e.to_string()));
        }
        let t = arity(&goal.target);
        let mut order: Vec<usize> = Vec::new();
        if n >= t {
            order.push(n - t);
        }
        let first = order.first().copied();
        order.extend((0..=n).rev().filter(|&k| Some(k) != first));
        for k in order {
            if let Some(goals) = self.apply_with(goal, &syn, k, cutoff) {
                return Ok(goals);
            }
        }
        Err(failed("cannot unify conclusion with goal"))
    }

    fn apply_with(&self, goal: &Goal, syn: &crate::kernel::parse::Syn, k: usize, cutoff: usize) -> Option<Vec<Goal>> {
        let mut el = Elaborator::new(self.env, cutoff, &goal.hyps);
        let (_, mut ty) = el.elab(syn, None).ok()?;
        let mut peeled: Vec<(Expr, BinderInfo)> = Vec::new();
        for _ in 0..k {
            let Expr::Pi(b, body) = whnf(self.env, &el.inst(&ty)) else { return None };
            let m = el.new_meta((*b.ty).clone(), &b.name, 0, b.info == BinderInfo::Instance);
            ty = instantiate(&body, &m);
            peeled.push((m, b.info));
        }
        if !el.unify(&ty, &goal.target) {
            return None;
        }
        el.try_instances();
        let mut goals = Vec::new();
        for (m, info) in &peeled {
            let v = el.inst(m);
            if !v.has_meta() {
                continue;
            }
            if !info.is_explicit() || !matches!(v, Expr::Meta(_)) {
                return None;
            }
            let Expr::Meta(id) = v else { unreachable!() };
            goals.push((id, m.clone()));
        }
        // Every meta that is not a fresh subgoal must be solved.
        let mut out = Vec::new();
        for (id, _) in &goals {
            let ty = el.inst(&el.meta_type(*id));
            if ty.has_meta() {
                return None;
            }
            out.push(Goal { hyps: goal.hyps.clone(), target: ty });
        }
        let open: Vec<u32> = goals.iter().map(|(id, _)| *id).collect();
        if el.unsolved_metas().iter().any(|m| !open.contains(m)) {
            return None;
        }
        Some(out)
    }

    fn split(&self, goal: &Goal) -> Result<Vec<Goal>, TacticError> {
        let t = whnf(self.env, &goal.target);
        let sub = |target: Expr| Goal { hyps: goal.hyps.clone(), target };
        if let Some(args) = t.const_app("and", 2) {
            return Ok(vec![sub(args[0].clone()), sub(args[1].clone())]);
        }
        if let Some(args) = t.const_app("iff", 2) {
            let (a, b) = (args[0].clone(), args[1].clone());
            return Ok(vec![sub(Expr::arrow(a.clone(), b.clone())), sub(Expr::arrow(b, a))]);
        }
        Err(failed("goal is not a conjunction or equivalence"))
    }

    fn side(&self, goal: &Goal, i: usize) -> Result<Vec<Goal>, TacticError> {
        let t = whnf(self.env, &goal.target);
        match t.const_app("or", 2) {
            Some(args) => Ok(vec![Goal { hyps: goal.hyps.clone(), target: args[i].clone() }]),
            None => Err(failed("goal is not a disjunction")),
        }
    }

    fn refl(&self, goal: &Goal) -> Result<Vec<Goal>, TacticError> {
        let t = &goal.target;
        let same = |a: &Expr, b: &Expr| alpha_eq(a, b);
        if let Some(args) = t.const_app("eq", 3) {
            if same(args[1], args[2]) {
                return Ok(vec![]);
            }
        }
        if let Some(args) = t.const_app("iff", 2) {
            if same(args[0], args[1]) {
                return Ok(vec![]);
            }
        }
        Err(failed("not a reflexive relation instance"))
    }

    fn tauto(&self, goal: &Goal, deadline: Option<Instant>) -> Result<Vec<Goal>, TacticError> {
        let tc = TypeChecker::full(self.env);
        let mut tr = Translator::new(self.env);
        let mut f = tr.translate(&goal.target);
        for h in goal.hyps.iter().rev() {
            let ty = hyp_parts(h).1;
            if tc.is_prop(ty) {
                f = Formula::imp(tr.translate(ty), f);
            }
        }
        match is_tautology(&f, tr.atoms.len(), deadline) {
            TautoOutcome::Valid => Ok(vec![]),
            TautoOutcome::Invalid => Err(failed("not a propositional tautology")),
            TautoOutcome::TooManyAtoms(n) => Err(failed(format!("{n} atoms exceed the limit"))),
            TautoOutcome::TimedOut => Err(TacticError::Timeout),
        }
    }

    /// Replay a script from `state`, returning every intermediate state
    /// (the first is `state` itself).
    pub fn replay(&self, state: &TacticState, script: &[String]) -> Result<Vec<TacticState>, (usize, TacticError)> {
        let mut states = vec![state.clone()];
        for (i, cmd) in script.iter().enumerate() {
            let next = self.apply_tactic(states.last().expect("non-empty"), cmd, None).map_err(|e| (i, e))?;
            states.push(next);
        }
        Ok(states)
    }

    /// One proofstep example per script line, each pairing the state
    /// before the step with its command.
    pub fn proofstep_examples(&self, decl: &Declaration, script: &[String]) -> Result<Vec<TaskExample>, (usize, TacticError)> {
        let states = self.replay(&root_state(decl, self.env), script)?;
        Ok(script
            .iter()
            .zip(&states)
            .filter(|(_, st)| !st.goals.is_empty())
            .filter_map(|(cmd, st)| {
                let goals = st.goals.iter().map(|g| goal_strings(g, self.env)).collect();
                encode_proofstep(&TacticStep { decl_nm: decl.name.to_string(), goals, command: cmd.clone() }).ok()
            })
            .collect())
    }
}
