//! Request handling over the session store, independent of the transport.

use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex};

use plantutor_core::curriculum::{generate_adaptive_task, generate_random_task, GeneratedTask, Provenance, Trigger};
use plantutor_core::env::{EnvRegistry, EnvironmentBundle, Preset};
use plantutor_core::explainer::{explanations_for_report, state_text, Explanation, Narrator};
use plantutor_core::hinter::{hint_search, HintConfig, HintOutcome, Hinter};
use plantutor_core::llm::{build_hint_prompt, Translator};
use plantutor_core::pddl::{GroundedTask, ResolveError};
use plantutor_core::session::{Event, EventPayload, NewStep, Session, SessionStore, TaskAttempt, TaskRecord};
use plantutor_core::state::GroundAction;
use plantutor_core::validator::{
    resolve_plan, trace_entries, validate_actions, Plan, PlanStep, StepStatus, TraceEntry, ValidationReport,
};
use plantutor_core::PerformanceMap;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstructionView {
    pub schema: String,
    /// The action template, with `{i}` marking the i-th parameter.
    pub label: String,
    pub params: Vec<ParamView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamView {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetView {
    pub id: String,
    pub goal: Vec<String>,
    pub goal_nl: Vec<String>,
    pub reference_plan_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainView {
    pub name: String,
    pub title: String,
    pub description: String,
    pub instructions: Vec<InstructionView>,
    pub presets: Vec<PresetView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub domain: String,
    pub performance: PerformanceMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    Adaptive,
    Random,
    Preset,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRequest {
    pub mode: TaskMode,
    /// The preset to use, or for generated tasks the preset to build on.
    #[serde(default)]
    pub preset_id: Option<String>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectView {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskView {
    pub task_id: String,
    pub provenance: Provenance,
    pub preset_id: String,
    pub goal: Vec<String>,
    pub goal_nl: Vec<String>,
    pub trigger: Option<Trigger>,
    pub reference_plan_length: usize,
    pub objects: Vec<ObjectView>,
    pub initial_state: Vec<String>,
}

/// A plan as text (one step per line) or as a list of steps.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum PlanInput {
    Text(String),
    Steps(Vec<PlanStep>),
}

impl PlanInput {
    pub fn into_plan(self) -> Result<Plan, ApiError> {
        match self {
            PlanInput::Steps(steps) => Ok(Plan::new(steps)),
            PlanInput::Text(text) => Plan::parse(&text)
                .map_err(|e| ApiError::new(422, "plan_syntax", e.to_string()).with_details(json!({ "line": e.line }))),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub plan: PlanInput,
    /// Ask the language model for detailed explanations.
    #[serde(default = "yes")]
    pub detailed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintRequest {
    /// Defaults to the last plan submitted for validation.
    #[serde(default)]
    pub plan: Option<PlanInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepView {
    pub index: usize,
    pub action: String,
    pub action_nl: String,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureView {
    pub step: usize,
    pub action: String,
    pub unmet: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameView {
    pub label: String,
    pub label_nl: Option<String>,
    pub state: Vec<String>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateView {
    pub is_valid: bool,
    pub goal_achieved: bool,
    pub execute_enabled: bool,
    pub steps: Vec<StepView>,
    pub failures: Vec<FailureView>,
    pub explanations: Vec<Explanation>,
    /// Initial state, then the state after each step of the valid prefix.
    pub trace: Vec<FrameView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HintView {
    pub status: &'static str,
    pub message: String,
    pub action: Option<String>,
    pub visible: Option<Vec<bool>>,
    pub detailed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecuteView {
    pub goal_achieved: bool,
    pub task_solved: bool,
    pub frames: Vec<FrameView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportView {
    pub session_id: String,
    pub domain: String,
    pub current_task: Option<TaskRecord>,
    pub performance: PerformanceMap,
    pub events: usize,
    pub hints_shown: usize,
    pub attempts: Vec<TaskAttempt>,
}

#[derive(Debug, Clone)]
pub struct TutorSettings {
    pub max_depth: usize,
    pub detailed_explanations: usize,
    pub task_seed: Option<u64>,
    pub hint: HintConfig,
}

/// The interactive loop: sessions, tasks, validation, hints and execution.
pub struct Tutor {
    registry: EnvRegistry,
    store: SessionStore,
    hinter: Mutex<Hinter>,
    translator: Arc<dyn Translator>,
    settings: TutorSettings,
}

/// The grounded task a session is working on, with its problem text.
struct ActiveTask {
    record: TaskRecord,
    task: GroundedTask,
    problem_text: String,
}

fn unresolvable(step: usize, source: &ResolveError) -> ApiError {
    ApiError::new(422, "unresolvable_step", format!("step {step}: {source}")).with_details(json!({ "step": step }))
}

/// Position of the single step inserted into `prev` to give `next`.
pub fn inserted_step(prev: &[PlanStep], next: &[PlanStep]) -> Option<usize> {
    if next.len() != prev.len() + 1 {
        return None;
    }
    let i = prev.iter().zip(next).position(|(a, b)| a != b).unwrap_or(prev.len());
    (next[i + 1..] == prev[i..]).then_some(i)
}

impl Tutor {
    pub fn new(
        registry: EnvRegistry,
        store: SessionStore,
        settings: TutorSettings,
        translator: Arc<dyn Translator>,
    ) -> Result<Self, ApiError> {
        let hinter = Hinter::new(settings.hint.clone()).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(Tutor {
            registry,
            store,
            hinter: Mutex::new(hinter),
            translator,
            settings,
        })
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn bundle(&self, name: &str) -> Result<&EnvironmentBundle, ApiError> {
        self.registry
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| ApiError::new(404, "unknown_domain", format!("unknown domain '{name}'")))
    }

    fn preset<'a>(bundle: &'a EnvironmentBundle, id: Option<&str>) -> Result<&'a Preset, ApiError> {
        match id {
            None => Ok(bundle.base()),
            Some(id) => bundle.preset(id).ok_or_else(|| {
                ApiError::new(404, "unknown_preset", format!("unknown preset '{id}'"))
                    .with_details(json!({ "presets": bundle.presets.iter().map(|p| &p.id).collect::<Vec<_>>() }))
            }),
        }
    }

    pub fn domains(&self) -> Vec<DomainView> {
        self.registry
            .iter()
            .map(|b| DomainView {
                name: b.name().to_string(),
                title: b.title(),
                description: b.description.clone(),
                instructions: b
                    .domain
                    .schemas
                    .iter()
                    .map(|s| InstructionView {
                        schema: s.name.clone(),
                        label: b
                            .semantics
                            .actions
                            .get(&s.name)
                            .map(|t| t.source().to_string())
                            .unwrap_or_else(|| s.name.clone()),
                        params: s
                            .params
                            .iter()
                            .map(|p| ParamView {
                                name: p.name.clone(),
                                ty: p.ty.clone(),
                            })
                            .collect(),
                    })
                    .collect(),
                presets: b
                    .presets
                    .iter()
                    .map(|p| {
                        let goal: Vec<_> = p.problem.goal.iter().collect();
                        PresetView {
                            id: p.id.clone(),
                            goal: goal.iter().map(|a| a.to_string()).collect(),
                            goal_nl: goal.iter().map(|a| b.semantics.render_fact(a)).collect(),
                            reference_plan_length: p.reference_plan.len(),
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn create_session(&self, domain: &str) -> Result<SessionView, ApiError> {
        let bundle = self.bundle(domain)?;
        let session = self.store.create(&bundle.domain)?;
        Ok(SessionView {
            session_id: session.session_id,
            domain: session.domain_name,
            performance: session.performance,
        })
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &EnvironmentBundle) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let handle = self.store.get(id)?;
        let mut session = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let bundle = self.bundle(&session.domain_name)?;
        f(&mut session, bundle)
    }

    fn record(&self, session: &mut Session, payload: EventPayload) -> Result<(), ApiError> {
        self.record_all(session, vec![payload])
    }

    fn record_all(&self, session: &mut Session, payloads: Vec<EventPayload>) -> Result<(), ApiError> {
        let events: Vec<Event> = payloads.into_iter().map(Event::now).collect();
        Ok(self.store.record_all_locked(session, events)?)
    }

    fn active(bundle: &EnvironmentBundle, session: &Session) -> Result<ActiveTask, ApiError> {
        let record = session
            .current_task
            .clone()
            .ok_or_else(|| ApiError::new(409, "no_task", "the session has no task yet; request one first"))?;
        let preset = Self::preset(bundle, Some(&record.preset_id))?;
        if record.provenance == Provenance::Preset {
            return Ok(ActiveTask {
                record,
                task: preset.task.clone(),
                problem_text: preset.problem_text.clone(),
            });
        }
        let goal = record
            .goal
            .iter()
            .map(|g| preset.task.parse_atom(g))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::internal(format!("stored goal does not resolve: {e}")))?;
        let task = preset.task.with_goal(goal);
        let mut problem = preset.problem.clone();
        problem.goal = task.goal().iter().map(|a| task.decode(a)).collect();
        Ok(ActiveTask {
            record,
            task,
            problem_text: problem.to_pddl(),
        })
    }

    fn task_view(bundle: &EnvironmentBundle, active: &ActiveTask) -> TaskView {
        let task = &active.task;
        let record = &active.record;
        TaskView {
            task_id: record.task_id.clone(),
            provenance: record.provenance,
            preset_id: record.preset_id.clone(),
            goal: record.goal.clone(),
            goal_nl: task
                .goal()
                .iter()
                .map(|a| bundle.semantics.render_fact(&task.decode(a)))
                .collect(),
            trigger: record.trigger.clone(),
            reference_plan_length: record.reference_plan_length,
            objects: task
                .objects()
                .iter()
                .map(|o| ObjectView {
                    name: o.name.clone(),
                    ty: o.ty.clone(),
                    display: bundle.semantics.object_display(&o.name).to_string(),
                })
                .collect(),
            initial_state: task.state_strings(task.init()),
        }
    }

    pub fn next_task(&self, id: &str, request: &TaskRequest) -> Result<TaskView, ApiError> {
        self.with_session(id, |session, bundle| {
            let preset = Self::preset(bundle, request.preset_id.as_deref())?;
            let record = match request.mode {
                TaskMode::Preset => {
                    if request.preset_id.is_none() {
                        return Err(ApiError::bad_request("mode 'preset' needs a preset_id"));
                    }
                    TaskRecord {
                        task_id: preset.id.clone(),
                        provenance: Provenance::Preset,
                        preset_id: preset.id.clone(),
                        goal: preset.task.goal().iter().map(|a| preset.task.atom_string(a)).collect(),
                        trigger: None,
                        reference_plan_length: preset.reference_plan.len(),
                        witness: preset.reference_plan.steps.clone(),
                    }
                }
                TaskMode::Adaptive => {
                    let depth = request.depth.unwrap_or(self.settings.max_depth);
                    let generated = generate_adaptive_task(&session.performance, &preset.task, depth)
                        .map_err(|e| ApiError::new(422, "generation_failed", e.to_string()))?;
                    generated_record(preset, generated)
                }
                TaskMode::Random => {
                    let depth = request.depth.unwrap_or(self.settings.max_depth);
                    let seed = request
                        .seed
                        .or(self.settings.task_seed)
                        .unwrap_or_else(|| rand::rng().next_u64());
                    let generated = generate_random_task(&preset.task, depth, seed).map_err(|e| {
                        let err = ApiError::new(422, "generation_failed", e.to_string());
                        match e {
                            plantutor_core::CurriculumError::DepthUnreachable { max_depth, .. } => {
                                err.with_details(json!({ "max_depth": max_depth }))
                            }
                            _ => err,
                        }
                    })?;
                    generated_record(preset, generated)
                }
            };
            self.record(session, EventPayload::TaskGenerated { task: record })?;
            let active = Self::active(bundle, session)?;
            Ok(Self::task_view(bundle, &active))
        })
    }

    fn resolve(task: &GroundedTask, plan: &Plan) -> Result<Vec<GroundAction>, ApiError> {
        resolve_plan(task, plan).map_err(|e| unresolvable(e.step, &e.source))
    }

    fn frames(bundle: &EnvironmentBundle, task: &GroundedTask, entries: &[TraceEntry]) -> Vec<FrameView> {
        let strings = |atoms: &[plantutor_core::Atom]| atoms.iter().map(|a| task.atom_string(a)).collect();
        entries
            .iter()
            .map(|e| FrameView {
                label: e.label.clone(),
                label_nl: e.action.as_ref().map(|a| bundle.semantics.render_action(a)),
                state: task.state_strings(&e.state),
                added: strings(&e.added),
                removed: strings(&e.removed),
            })
            .collect()
    }

    pub fn validate(&self, id: &str, request: PlanRequest) -> Result<ValidateView, ApiError> {
        let plan = request.plan.into_plan()?;
        self.with_session(id, |session, bundle| {
            let active = Self::active(bundle, session)?;
            let task = &active.task;
            let actions = Self::resolve(task, &plan)?;
            let report = validate_actions(task, &actions);

            let mut events = Vec::with_capacity(2);
            if plan.steps != session.last_plan {
                let new_step = inserted_step(&session.last_plan, &plan.steps).map(|i| {
                    let before = validate_actions(task, &actions[..i]).final_state;
                    NewStep {
                        index: i,
                        schema: actions[i].schema.clone(),
                        applicable: before.is_applicable(&actions[i]),
                        hinted: false,
                    }
                });
                events.push(EventPayload::PlanEdit {
                    plan: plan.steps.clone(),
                    new_step,
                });
            }
            events.push(EventPayload::Validation {
                is_valid: report.is_valid,
                goal_achieved: report.goal_achieved,
                failures: report.failures.len(),
            });
            self.record_all(session, events)?;

            let narrator = Narrator {
                translator: self.translator.as_ref(),
                domain_text: &bundle.domain_text,
                problem_text: &active.problem_text,
            };
            let explanations = explanations_for_report(
                &report,
                &bundle.semantics,
                task,
                self.settings.detailed_explanations,
                request.detailed.then_some(&narrator),
            );
            Ok(ValidateView {
                is_valid: report.is_valid,
                goal_achieved: report.goal_achieved,
                execute_enabled: report.is_valid,
                steps: actions
                    .iter()
                    .zip(&report.step_status)
                    .enumerate()
                    .map(|(i, (a, s))| StepView {
                        index: i + 1,
                        action: a.label(),
                        action_nl: bundle.semantics.render_action(a),
                        status: *s,
                    })
                    .collect(),
                failures: failure_views(task, &report),
                explanations,
                trace: Self::frames(bundle, task, &trace_entries(&report, &actions)),
            })
        })
    }

    /// Hint for the state after the valid prefix of the plan. The search
    /// stops early when `cancel` is raised.
    pub fn hint(&self, id: &str, request: HintRequest, cancel: Option<&AtomicBool>) -> Result<HintView, ApiError> {
        let plan = request.plan.map(PlanInput::into_plan).transpose()?;
        self.with_session(id, |session, bundle| {
            let active = Self::active(bundle, session)?;
            let task = &active.task;
            let plan = plan.unwrap_or_else(|| Plan::new(session.last_plan.clone()));
            let actions = Self::resolve(task, &plan)?;
            let report = validate_actions(task, &actions);
            let from = report.prefix_state();
            self.record(session, EventPayload::HintRequested)?;

            let found = hint_search(task, from, self.settings.hint.timeout, cancel);
            let outcome = self
                .hinter
                .lock()
                .map_err(|_| ApiError::internal("hinter lock poisoned"))?
                .outcome(found, &bundle.semantics);
            let mut view = HintView {
                status: outcome.code(),
                message: outcome.message(),
                action: None,
                visible: None,
                detailed: None,
            };
            if let HintOutcome::Hint(hint) = outcome {
                self.record(
                    session,
                    EventPayload::HintShown {
                        schema: hint.action.schema.clone(),
                        action: hint.action.label(),
                        visible: hint.visible.clone(),
                    },
                )?;
                view.detailed = build_hint_prompt(
                    &bundle.domain.name,
                    &bundle.domain_text,
                    &active.problem_text,
                    &hint.text,
                    &state_text(task, from),
                )
                .ok()
                .and_then(|p| self.translator.translate(&p).text());
                view.action = Some(hint_label(&hint.action, &hint.visible));
                view.visible = Some(hint.visible);
            }
            Ok(view)
        })
    }

    pub fn execute(&self, id: &str, request: PlanRequest) -> Result<ExecuteView, ApiError> {
        let plan = request.plan.into_plan()?;
        self.with_session(id, |session, bundle| {
            let active = Self::active(bundle, session)?;
            let task = &active.task;
            let actions = Self::resolve(task, &plan)?;
            let report = validate_actions(task, &actions);
            if !report.is_valid {
                return Err(ApiError::new(409, "plan_invalid", "only a valid plan can be executed")
                    .with_details(json!({ "failures": failure_views(task, &report) })));
            }
            let mut events = vec![EventPayload::Execute {
                steps: actions.len(),
                goal_achieved: report.goal_achieved,
            }];
            if report.goal_achieved {
                events.push(EventPayload::TaskSolved {
                    task_id: active.record.task_id.clone(),
                });
            }
            self.record_all(session, events)?;
            Ok(ExecuteView {
                goal_achieved: report.goal_achieved,
                task_solved: report.goal_achieved,
                frames: Self::frames(bundle, task, &trace_entries(&report, &actions)),
            })
        })
    }

    pub fn report(&self, id: &str) -> Result<ReportView, ApiError> {
        self.with_session(id, |session, _| {
            Ok(ReportView {
                session_id: session.session_id.clone(),
                domain: session.domain_name.clone(),
                current_task: session.current_task.clone(),
                performance: session.performance.clone(),
                events: session.history.len(),
                hints_shown: session
                    .history
                    .iter()
                    .filter(|e| matches!(e.payload, EventPayload::HintShown { .. }))
                    .count(),
                attempts: session.task_attempts(),
            })
        })
    }
}

fn generated_record(preset: &Preset, generated: GeneratedTask) -> TaskRecord {
    let task = &preset.task;
    let goal: Vec<String> = generated.goal.iter().map(|a| task.atom_string(a)).collect();
    let tag = match generated.provenance {
        Provenance::Adaptive => "adaptive",
        Provenance::Random => "random",
        Provenance::Preset => "preset",
    };
    TaskRecord {
        task_id: format!("{}/{tag}:{}", preset.id, goal.join(" ")),
        provenance: generated.provenance,
        preset_id: preset.id.clone(),
        goal,
        trigger: generated.trigger,
        reference_plan_length: generated.reference_plan_length,
        witness: generated.witness.iter().map(PlanStep::from).collect(),
    }
}

fn failure_views(task: &GroundedTask, report: &ValidationReport) -> Vec<FailureView> {
    report
        .failures
        .iter()
        .map(|f| FailureView {
            step: f.step_index + 1,
            action: f.action.label(),
            unmet: f.unmet.iter().map(|a| task.atom_string(a)).collect(),
        })
        .collect()
}

/// `(schema a ? c)` with hidden arguments replaced.
fn hint_label(action: &GroundAction, visible: &[bool]) -> String {
    let mut s = format!("({}", action.schema);
    for (a, &v) in action.args.iter().zip(visible) {
        s.push(' ');
        s.push_str(if v { a } else { plantutor_core::hinter::HIDDEN_ARG });
    }
    s.push(')');
    s
}
