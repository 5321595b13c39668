//! Core of the plan tutor: PDDL model and grounding, plan validation,
//! failure explanations, hints, curriculum generation, environment bundles
//! and learner sessions.

pub mod curriculum;
pub mod env;
pub mod explainer;
pub mod hinter;
pub mod llm;
pub mod pddl;
pub mod search;
pub mod semantics;
pub mod session;
pub mod state;
pub mod validator;

pub use curriculum::{
    generate_adaptive_task, generate_random_task, training_task_series, update_performance, CurriculumError,
    GeneratedTask, PerformanceMap, Provenance, StopReason, Trigger,
};
pub use env::{BundleError, EnvRegistry, EnvironmentBundle, Preset};
pub use explainer::{explain_failure, explanations_for_report, Explanation, Narrator};
pub use hinter::{next_hint, Hint, HintConfig, HintOutcome, Hinter};
pub use llm::{LlmClient, LlmConfig, Translation, Translator};
pub use pddl::{ground, parse_domain, parse_problem, Domain, GroundedTask, ParseError, Problem};
pub use search::{plan_search, SearchOutcome};
pub use semantics::SemanticMap;
pub use session::{Event, EventPayload, Session, SessionError, SessionStore};
pub use state::{Atom, GroundAction, State};
pub use validator::{validate, Failure, Plan, PlanStep, ValidationReport};
