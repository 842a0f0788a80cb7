//! Prompt/completion encodings of raw datapoints and tactic steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{Named, RawDatapoint};
use crate::split::hash_name;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Proofstep,
    NextLemma,
    ProofTerm,
    SkipProof,
    TypePrediction,
    TsElab,
    PtElab,
    PremiseCls,
    LocalCls,
    Naming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mix {
    Tactic,
    Mix1,
    Mix2,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::Proofstep,
        Task::NextLemma,
        Task::ProofTerm,
        Task::SkipProof,
        Task::TypePrediction,
        Task::TsElab,
        Task::PtElab,
        Task::PremiseCls,
        Task::LocalCls,
        Task::Naming,
    ];

    pub fn mix(self) -> Mix {
        match self {
            Task::Proofstep => Mix::Tactic,
            Task::NextLemma | Task::ProofTerm => Mix::Mix1,
            _ => Mix::Mix2,
        }
    }

    /// The keyword that closes the prompt.
    pub fn keyword(self) -> &'static str {
        match self {
            Task::Proofstep => "PROOFSTEP",
            Task::NextLemma => "NEXTLEMMA",
            Task::ProofTerm => "PROOFTERM",
            Task::SkipProof => "SKIPPROOF",
            Task::TypePrediction => "PREDICTTYPE",
            Task::TsElab => "ELABGOAL",
            Task::PtElab => "ELABPROOFTERM",
            Task::PremiseCls => "CLASSIFYPREMISE",
            Task::LocalCls => "CLASSIFYLOCALS",
            Task::Naming => "NAME",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    pub prompt: String,
    pub completion: String,
    pub task: Task,
    pub mix: Mix,
    pub decl_nm: String,
}

impl TaskExample {
    fn new(task: Task, prompt: String, completion: String, decl_nm: &str) -> Self {
        Self { prompt, completion, task, mix: task.mix(), decl_nm: decl_nm.to_string() }
    }

    /// Prompt and completion joined, for single-field training files.
    pub fn text(&self) -> String {
        format!("{}{}", self.prompt, self.completion)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalStrings {
    pub hyps: Vec<Named>,
    pub target: String,
}

/// A recorded tactic application: the state it was applied to and the command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticStep {
    pub decl_nm: String,
    pub goals: Vec<GoalStrings>,
    pub command: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("declaration name is empty")]
    EmptyName,
    #[error("declaration type is empty")]
    EmptyType,
    #[error("tactic step has no goals")]
    NoGoals,
    #[error("tactic command is empty")]
    EmptyCommand,
}

/// How classification labels are spelled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Casing {
    /// `True` / `False`.
    #[default]
    Title,
    /// `TRUE` / `FALSE`.
    Upper,
}

#[derive(Clone, Debug)]
pub struct TaskConfig {
    pub casing: Casing,
    /// Include the premise's type after its name in premise prompts.
    pub premise_with_type: bool,
    /// Keep only this fraction of negative premise examples (deterministic
    /// by hash); `None` keeps all.
    pub neg_ratio: Option<f64>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self { casing: Casing::Title, premise_with_type: true, neg_ratio: None }
    }
}

/// Render goals: hypotheses with equal consecutive types share one entry,
/// entries are comma separated, goals are newline separated.
pub fn render_tactic_state(goals: &[GoalStrings]) -> String {
    goals.iter().map(render_goal).collect::<Vec<_>>().join("\n")
}

fn render_goal(goal: &GoalStrings) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < goal.hyps.len() {
        let ty = &goal.hyps[i].1;
        let mut j = i;
        let mut names = Vec::new();
        while j < goal.hyps.len() && goal.hyps[j].1 == *ty {
            names.push(goal.hyps[j].0.as_str());
            j += 1;
        }
        parts.push(format!("{} : {ty}", names.join(" ")));
        i = j;
    }
    if parts.is_empty() {
        format!("⊢ {}", goal.target)
    } else {
        format!("{} ⊢ {}", parts.join(", "), goal.target)
    }
}

pub fn encode_proofstep(step: &TacticStep) -> Result<TaskExample, TaskError> {
    if step.goals.is_empty() {
        return Err(TaskError::NoGoals);
    }
    if step.command.trim().is_empty() {
        return Err(TaskError::EmptyCommand);
    }
    let prompt = format!("GOAL {} PROOFSTEP", render_tactic_state(&step.goals));
    Ok(TaskExample::new(Task::Proofstep, prompt, format!(" {}", step.command), &step.decl_nm))
}

pub fn encode_naming(decl_nm: &str, decl_tp: &str) -> Result<TaskExample, TaskError> {
    if decl_nm.is_empty() {
        return Err(TaskError::EmptyName);
    }
    if decl_tp.is_empty() {
        return Err(TaskError::EmptyType);
    }
    Ok(TaskExample::new(Task::Naming, format!("TYPE {decl_tp} NAME"), format!(" {decl_nm}"), decl_nm))
}

fn label(b: bool, casing: Casing) -> &'static str {
    match (b, casing) {
        (true, Casing::Title) => " True",
        (false, Casing::Title) => " False",
        (true, Casing::Upper) => " TRUE",
        (false, Casing::Upper) => " FALSE",
    }
}

/// The per-datapoint examples, in a fixed task order.
pub fn derive_tasks(dp: &RawDatapoint, cfg: &TaskConfig) -> Vec<TaskExample> {
    let nm = dp.decl_nm.as_str();
    let ts = render_tactic_state(&[GoalStrings { hyps: dp.hyps.clone(), target: dp.goal.clone() }]);
    let mut out = Vec::with_capacity(8 + dp.decl_premises.len());
    if let Some((lemma, _)) = &dp.next_lemma {
        out.push(TaskExample::new(Task::NextLemma, format!("GOAL {ts} NEXTLEMMA"), format!(" apply ({lemma})"), nm));
    }
    out.push(TaskExample::new(
        Task::ProofTerm,
        format!("GOAL {ts} PROOFTERM"),
        format!(" exact ({})", dp.proof_term),
        nm,
    ));
    out.push(TaskExample::new(Task::SkipProof, format!("RESULT {} SKIPPROOF", dp.result), format!(" {}", dp.proof_term), nm));
    out.push(TaskExample::new(Task::TypePrediction, format!("RESULT {} PREDICTTYPE", dp.result), format!(" {}", dp.goal), nm));
    let elab_goal = if dp.verbose_goal.is_empty() { &dp.goal } else { &dp.verbose_goal };
    let elab_ts = render_tactic_state(&[GoalStrings { hyps: dp.hyps.clone(), target: elab_goal.clone() }]);
    out.push(TaskExample::new(Task::TsElab, format!("GOAL {ts} ELABGOAL"), format!(" {elab_ts}"), nm));
    let elab_pt = if dp.verbose_proof_term.is_empty() { &dp.proof_term } else { &dp.verbose_proof_term };
    out.push(TaskExample::new(
        Task::PtElab,
        format!("PROOFTERM {} ELABPROOFTERM", dp.proof_term),
        format!(" {elab_pt}"),
        nm,
    ));
    for (j, ((name, ty), &used)) in dp.decl_premises.iter().zip(&dp.decl_premises_mask).enumerate() {
        if !used {
            if let Some(ratio) = cfg.neg_ratio {
                let key = format!("{nm}\u{0}{}\u{0}{j}", dp.result);
                if hash_name(&key).unwrap_or(0.0) >= ratio {
                    continue;
                }
            }
        }
        let premise = if cfg.premise_with_type { format!("{name} {ty}") } else { name.clone() };
        out.push(TaskExample::new(
            Task::PremiseCls,
            format!("GOAL {ts} CLASSIFYPREMISE {premise}"),
            label(used, cfg.casing).to_string(),
            nm,
        ));
    }
    let locals: Vec<&str> =
        dp.hyps.iter().zip(&dp.hyps_mask).filter(|(_, &m)| m).map(|((n, _), _)| n.as_str()).collect();
    let locals = if locals.is_empty() { "none".to_string() } else { locals.join(", ") };
    out.push(TaskExample::new(Task::LocalCls, format!("GOAL {ts} CLASSIFYLOCALS"), format!(" {locals}"), nm));
    out
}

/// Naming example for each new declaration followed by its datapoints' tasks.
pub fn derive_all(dps: &[RawDatapoint], cfg: &TaskConfig) -> Result<Vec<TaskExample>, TaskError> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for dp in dps {
        if seen.insert(dp.decl_nm.clone()) {
            out.push(encode_naming(&dp.decl_nm, &dp.decl_tp)?);
        }
        out.extend(derive_tasks(dp, cfg));
    }
    Ok(out)
}
