//! Step-by-step plan validation with multi-failure reporting.
//!
//! A step that is inapplicable in the current working state is recorded as a
//! failure and treated as a no-op, so every later step is still diagnosed.
//! The state trace stops at the first failure.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{parse_call, GroundedTask, ResolveError};
use crate::state::{Atom, GroundAction, State};

/// One user-written step: schema name plus object names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new(action: impl Into<String>, args: &[&str]) -> Self {
        PlanStep {
            action: action.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parses `(move d1 d2 peg3)`; the parentheses are optional.
    pub fn parse(text: &str) -> Result<Self, ResolveError> {
        let (action, args) = parse_call(text)?;
        Ok(PlanStep { action, args })
    }
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl From<&GroundAction> for PlanStep {
    fn from(a: &GroundAction) -> Self {
        PlanStep {
            action: a.schema.clone(),
            args: a.args.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {source}")]
pub struct PlanParseError {
    pub line: usize,
    pub source: ResolveError,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    /// Reads a plan file: one `(action arg ...)` per line, `;` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PlanParseError> {
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let code = line.split(';').next().unwrap_or_default().trim();
            if code.is_empty() {
                continue;
            }
            let step = PlanStep::parse(code).map_err(|source| PlanParseError { line: i + 1, source })?;
            steps.push(step);
        }
        Ok(Plan { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

impl FromIterator<PlanStep> for Plan {
    fn from_iter<T: IntoIterator<Item = PlanStep>>(iter: T) -> Self {
        Plan {
            steps: iter.into_iter().collect(),
        }
    }
}

/// A step that could not be mapped onto the task at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {source}")]
pub struct UnresolvableStep {
    /// 1-based step number.
    pub step: usize,
    pub source: ResolveError,
}

/// Resolves every step, failing on the first unknown schema or object.
pub fn resolve_plan(task: &GroundedTask, plan: &Plan) -> Result<Vec<GroundAction>, UnresolvableStep> {
    plan.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            task.resolve(&s.action, &s.args)
                .map_err(|source| UnresolvableStep { step: i + 1, source })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// 0-based position in the plan.
    pub step_index: usize,
    pub action: GroundAction,
    /// Unmet preconditions in canonical atom order; never empty.
    pub unmet: Vec<Atom>,
    /// Working state the step was checked against.
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub step_status: Vec<StepStatus>,
    pub failures: Vec<Failure>,
    /// Initial state followed by the state after each step of the valid
    /// prefix; stops before the first failing step.
    pub trace: Vec<State>,
    pub is_valid: bool,
    pub goal_achieved: bool,
    /// Working state after the whole skip-and-continue pass.
    pub final_state: State,
}

impl ValidationReport {
    /// State after the last valid action before the first failure.
    pub fn prefix_state(&self) -> &State {
        self.trace.last().expect("trace always holds the initial state")
    }

    /// Number of steps in the uninterrupted valid prefix.
    pub fn valid_prefix_len(&self) -> usize {
        self.trace.len() - 1
    }
}

/// Validates already-resolved actions.
pub fn validate_actions(task: &GroundedTask, actions: &[GroundAction]) -> ValidationReport {
    let mut working = task.init().clone();
    let mut trace = vec![working.clone()];
    let mut step_status = Vec::with_capacity(actions.len());
    let mut failures = Vec::new();

    for (i, action) in actions.iter().enumerate() {
        let unmet = working.unmet_preconditions(action);
        if unmet.is_empty() {
            working = working.apply_unchecked(action);
            step_status.push(StepStatus::Valid);
            if failures.is_empty() {
                trace.push(working.clone());
            }
        } else {
            step_status.push(StepStatus::Invalid);
            failures.push(Failure {
                step_index: i,
                action: action.clone(),
                unmet,
                state: working.clone(),
            });
        }
    }

    let is_valid = failures.is_empty();
    let evaluated = trace.last().expect("non-empty trace");
    let goal_achieved = evaluated.satisfies(task.goal());
    ValidationReport {
        step_status,
        failures,
        trace,
        is_valid,
        goal_achieved,
        final_state: working,
    }
}

pub fn validate(task: &GroundedTask, plan: &Plan) -> Result<ValidationReport, UnresolvableStep> {
    let actions = resolve_plan(task, plan)?;
    Ok(validate_actions(task, &actions))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    /// `"init"` for the first entry, the step's action label otherwise.
    pub label: String,
    pub action: Option<GroundAction>,
    pub state: State,
    pub added: Vec<Atom>,
    pub removed: Vec<Atom>,
}

/// The displayed state sequence: initial state, then one entry per step of
/// the valid prefix with the atoms it added and removed.
pub fn state_trace(task: &GroundedTask, plan: &Plan) -> Result<Vec<TraceEntry>, UnresolvableStep> {
    let actions = resolve_plan(task, plan)?;
    let report = validate_actions(task, &actions);
    Ok(trace_entries(&report, &actions))
}

/// Builds trace entries from a report and the actions it validated.
pub fn trace_entries(report: &ValidationReport, actions: &[GroundAction]) -> Vec<TraceEntry> {
    let mut out = Vec::with_capacity(report.trace.len());
    out.push(TraceEntry {
        label: "init".into(),
        action: None,
        state: report.trace[0].clone(),
        added: Vec::new(),
        removed: Vec::new(),
    });
    for (i, pair) in report.trace.windows(2).enumerate() {
        let (before, after) = (&pair[0], &pair[1]);
        out.push(TraceEntry {
            label: actions[i].label(),
            action: Some(actions[i].clone()),
            state: after.clone(),
            added: after.added_since(before),
            removed: before.added_since(after),
        });
    }
    out
}
