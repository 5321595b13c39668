//! Template explanations for failed plan steps, with optional LLM rewording.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{build_explanation_prompt, Translator};
use crate::pddl::GroundedTask;
use crate::semantics::SemanticMap;
use crate::state::State;
use crate::validator::{Failure, ValidationReport};

/// How many failures get a detailed translation by default.
pub const DEFAULT_DETAILED: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationSource {
    Template,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    /// 1-based step number.
    pub step_index: usize,
    pub action_nl: String,
    pub reasons_nl: Vec<String>,
    pub tldr: String,
    pub detailed: Option<String>,
    pub source: ExplanationSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("failure at step {0} has no unmet preconditions")]
pub struct NothingToExplain(pub usize);

pub fn explain_failure(
    failure: &Failure,
    map: &SemanticMap,
    task: &GroundedTask,
) -> Result<Explanation, NothingToExplain> {
    let step_index = failure.step_index + 1;
    if failure.unmet.is_empty() {
        return Err(NothingToExplain(step_index));
    }
    let action_nl = map.render_action(&failure.action);
    let reasons_nl: Vec<String> = failure
        .unmet
        .iter()
        .map(|a| map.render_unmet(&task.decode(a)))
        .collect();
    let tldr = format!(
        "The action at step {step_index} ({action_nl}) could not be performed because {}.",
        reasons_nl.join(" and ")
    );
    Ok(Explanation {
        step_index,
        action_nl,
        reasons_nl,
        tldr,
        detailed: None,
        source: ExplanationSource::Template,
    })
}

/// Space-separated true atoms, as handed to the language model.
pub fn state_text(task: &GroundedTask, state: &State) -> String {
    if state.is_empty() {
        return "(none)".into();
    }
    task.state_strings(state).join(" ")
}

/// What the translator needs besides the explanation itself.
pub struct Narrator<'a> {
    pub translator: &'a dyn Translator,
    pub domain_text: &'a str,
    pub problem_text: &'a str,
}

/// Template explanations for every failure; the first `detailed` of them are
/// also sent through the translator when one is given.
pub fn explanations_for_report(
    report: &ValidationReport,
    map: &SemanticMap,
    task: &GroundedTask,
    detailed: usize,
    narrator: Option<&Narrator<'_>>,
) -> Vec<Explanation> {
    let mut out = Vec::with_capacity(report.failures.len());
    for (i, failure) in report.failures.iter().enumerate() {
        // validator failures always carry unmet atoms
        let Ok(mut exp) = explain_failure(failure, map, task) else {
            continue;
        };
        if i < detailed {
            if let Some(n) = narrator {
                let bundle = build_explanation_prompt(
                    &task.domain().name,
                    n.domain_text,
                    n.problem_text,
                    &exp.tldr,
                    &state_text(task, &failure.state),
                );
                if let Some(text) = bundle.ok().and_then(|b| n.translator.translate(&b).text()) {
                    exp.detailed = Some(text);
                    exp.source = ExplanationSource::Llm;
                }
            }
        }
        out.push(exp);
    }
    out
}
