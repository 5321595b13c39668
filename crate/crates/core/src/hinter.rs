//! Next-action hints with randomly obscured arguments.

use std::sync::atomic::AtomicBool;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::GroundedTask;
use crate::search::{best_first_search, AdditiveHeuristic, SearchLimits, SearchOutcome};
use crate::semantics::SemanticMap;
use crate::state::{GroundAction, State};

pub const HINT_PREFIX: &str = "You might want to try the action: ";
pub const HIDDEN_ARG: &str = "?";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HintConfig {
    /// Chance that each argument is shown.
    pub reveal_probability: f64,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub rng_seed: Option<u64>,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for HintConfig {
    fn default() -> Self {
        HintConfig {
            reveal_probability: 0.5,
            timeout: Duration::from_secs(5),
            rng_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HintConfigError {
    #[error("reveal probability must be within [0, 1], got {0}")]
    Probability(f64),
    #[error("hint timeout must be positive")]
    Timeout,
}

impl HintConfig {
    pub fn validate(&self) -> Result<(), HintConfigError> {
        if !(0.0..=1.0).contains(&self.reveal_probability) {
            return Err(HintConfigError::Probability(self.reveal_probability));
        }
        if self.timeout.is_zero() {
            return Err(HintConfigError::Timeout);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hint {
    pub action: GroundAction,
    pub visible: Vec<bool>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HintOutcome {
    Hint(Hint),
    AlreadySolved,
    Timeout,
    Unsolvable,
}

impl HintOutcome {
    /// Machine-readable status code.
    pub fn code(&self) -> &'static str {
        match self {
            HintOutcome::Hint(_) => "hint",
            HintOutcome::AlreadySolved => "already-solved",
            HintOutcome::Timeout => "hint-timeout",
            HintOutcome::Unsolvable => "unsolvable",
        }
    }

    pub fn message(&self) -> String {
        match self {
            HintOutcome::Hint(h) => h.text.clone(),
            HintOutcome::AlreadySolved => "Your plan already achieves the goal.".into(),
            HintOutcome::Timeout => "A hint could not be computed within the time limit. Try again later.".into(),
            HintOutcome::Unsolvable => "The goal cannot be reached from the state your plan has reached so far.".into(),
        }
    }
}

/// Visibility mask: each argument shown independently with probability `p`.
pub fn obscure_mask<R: Rng + ?Sized>(arity: usize, p: f64, rng: &mut R) -> Vec<bool> {
    (0..arity).map(|_| rng.random_bool(p)).collect()
}

pub fn hint_text(action: &GroundAction, visible: &[bool], map: &SemanticMap) -> String {
    let args: Vec<String> = action
        .args
        .iter()
        .zip(visible)
        .map(|(a, &show)| {
            if show {
                map.object_display(a).to_string()
            } else {
                HIDDEN_ARG.to_string()
            }
        })
        .collect();
    format!("{HINT_PREFIX}{}", map.render_action_with(&action.schema, &args))
}

/// Stateful hint source; the mask stream is reproducible for a given seed.
pub struct Hinter {
    config: HintConfig,
    rng: ChaCha8Rng,
}

impl Hinter {
    pub fn new(config: HintConfig) -> Result<Self, HintConfigError> {
        config.validate()?;
        let rng = match config.rng_seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_os_rng(),
        };
        Ok(Hinter { config, rng })
    }

    pub fn config(&self) -> &HintConfig {
        &self.config
    }

    /// Wraps a first action in a hint, drawing its mask.
    pub fn present(&mut self, action: GroundAction, map: &SemanticMap) -> Hint {
        let visible = obscure_mask(action.args.len(), self.config.reveal_probability, &mut self.rng);
        let text = hint_text(&action, &visible, map);
        Hint { action, visible, text }
    }

    pub fn next(&mut self, task: &GroundedTask, current: &State, map: &SemanticMap) -> HintOutcome {
        let found = hint_search(task, current, self.config.timeout, None);
        self.outcome(found, map)
    }

    /// Turns a search result into a hint, drawing a mask for its first action.
    pub fn outcome(&mut self, found: SearchOutcome, map: &SemanticMap) -> HintOutcome {
        match found {
            SearchOutcome::Plan(plan) => match plan.into_iter().next() {
                Some(first) => HintOutcome::Hint(self.present(first, map)),
                None => HintOutcome::AlreadySolved,
            },
            SearchOutcome::Timeout => HintOutcome::Timeout,
            SearchOutcome::Unsolvable => HintOutcome::Unsolvable,
        }
    }
}

/// The search behind a hint; a raised `cancel` flag ends it like a timeout.
pub fn hint_search(
    task: &GroundedTask,
    current: &State,
    timeout: Duration,
    cancel: Option<&AtomicBool>,
) -> SearchOutcome {
    let h = AdditiveHeuristic::new(task);
    let mut limits = SearchLimits::timeout(timeout);
    limits.cancel = cancel;
    best_first_search(task, current, &h, limits)
}

/// One-shot hint using the configured seed.
pub fn next_hint(
    task: &GroundedTask,
    current: &State,
    config: &HintConfig,
    map: &SemanticMap,
) -> Result<HintOutcome, HintConfigError> {
    Ok(Hinter::new(config.clone())?.next(task, current, map))
}
