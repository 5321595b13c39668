//! Prompt assembly and a pluggable chat-completion translator.
//!
//! The model only rephrases explanations and hints that were already
//! computed; every failure path degrades to the template text.

use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

/// Fixed text of the explanation prompt, interleaved with: domain name,
/// domain PDDL, problem PDDL, explanation, state.
pub const EXPLANATION_PROMPT: [&str; 6] = [
    "The following lines describe the ",
    " domain file :\n",
    "\n\nThe problem to be solved is described in pddl format  as:\n",
    "\n\nWhile running a plan for a problem, an action failed and an explanation generator was used to generate the following explanation:\nExplanation:  ",
    "\n\nThe state of the problem - which means the set of predicates that are true in the plan upto the first invalid action are as follows\nState: ",
    "\n\nCan you please convert the explanation into a brief, more non-expert friendly message that a novice user can understand?\nAlso, can you suggested briefly what could be done to fix the issue, taking into account the state reached by the plan so far?",
];

/// Fixed text of the hint prompt, interleaved with: domain name, domain
/// PDDL, problem PDDL, state, hint.
pub const HINT_PROMPT: [&str; 6] = [
    "This is the pddl domain file for the ",
    " domain :\n",
    "\n\nA user has to solve a this problem task described in pddl\n",
    "\n\nThe plan was run till the problem reached this state - that is the set of predicates that are true :\n",
    "\n\nAnd the hint generated, which suggests which next action to take with certain arguments to actions replaced with ? is given below:\n",
    "\n\nCan you please convert the explanation into a brief, more non-expert friendly message that a novice user can understand?\nAlso, can you suggested briefly what could be done to fix the issue, taking into account the state reached by the plan so far?",
];

fn interleave(fixed: &[&str; 6], slots: [&str; 5]) -> String {
    let mut out = String::with_capacity(
        fixed.iter().map(|s| s.len()).sum::<usize>() + slots.iter().map(|s| s.len()).sum::<usize>(),
    );
    for (f, s) in fixed.iter().zip(slots) {
        out.push_str(f);
        out.push_str(s);
    }
    out.push_str(fixed[5]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Explanation,
    Hint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub domain_name: String,
    pub domain_text: String,
    pub problem_text: String,
    /// The template explanation or hint being translated.
    pub payload_text: String,
    pub state_text: String,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("prompt input '{0}' is empty")]
pub struct EmptyPromptInput(pub &'static str);

fn require(fields: [(&'static str, &str); 5]) -> Result<(), EmptyPromptInput> {
    for (name, value) in fields {
        if value.trim().is_empty() {
            return Err(EmptyPromptInput(name));
        }
    }
    Ok(())
}

pub fn build_explanation_prompt(
    domain_name: &str,
    domain_text: &str,
    problem_text: &str,
    explanation: &str,
    state_text: &str,
) -> Result<PromptBundle, EmptyPromptInput> {
    require([
        ("domain_name", domain_name),
        ("domain", domain_text),
        ("problem", problem_text),
        ("explanation", explanation),
        ("state", state_text),
    ])?;
    Ok(PromptBundle {
        kind: PromptKind::Explanation,
        rendered: interleave(
            &EXPLANATION_PROMPT,
            [domain_name, domain_text, problem_text, explanation, state_text],
        ),
        domain_name: domain_name.into(),
        domain_text: domain_text.into(),
        problem_text: problem_text.into(),
        payload_text: explanation.into(),
        state_text: state_text.into(),
    })
}

pub fn build_hint_prompt(
    domain_name: &str,
    domain_text: &str,
    problem_text: &str,
    hint: &str,
    state_text: &str,
) -> Result<PromptBundle, EmptyPromptInput> {
    require([
        ("domain_name", domain_name),
        ("domain", domain_text),
        ("problem", problem_text),
        ("hint", hint),
        ("state", state_text),
    ])?;
    Ok(PromptBundle {
        kind: PromptKind::Hint,
        rendered: interleave(&HINT_PROMPT, [domain_name, domain_text, problem_text, state_text, hint]),
        domain_name: domain_name.into(),
        domain_text: domain_text.into(),
        problem_text: problem_text.into(),
        payload_text: hint.into(),
        state_text: state_text.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub enabled: bool,
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub temperature: f32,
    pub system_message: Option<String>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            enabled: false,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo-0125".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout_secs: 20.0,
            temperature: 0.0,
            system_message: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FallbackReason {
    Disabled,
    Unreachable(String),
    Timeout,
    Status(u16),
    Malformed(String),
}

/// Outcome of a translation request. Callers show the template text on fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Translation {
    Text(String),
    Fallback(FallbackReason),
}

impl Translation {
    pub fn text(self) -> Option<String> {
        match self {
            Translation::Text(t) => Some(t),
            Translation::Fallback(_) => None,
        }
    }
}

pub trait Translator: Send + Sync {
    fn translate(&self, bundle: &PromptBundle) -> Translation;
}

/// Never calls out; always falls back.
#[derive(Debug, Clone, Copy, Default)]
pub struct Disabled;

impl Translator for Disabled {
    fn translate(&self, _bundle: &PromptBundle) -> Translation {
        Translation::Fallback(FallbackReason::Disabled)
    }
}

/// OpenAI-compatible chat-completion client. No retries.
pub struct LlmClient {
    config: LlmConfig,
    http: OnceLock<Result<reqwest::blocking::Client, String>>,
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Self {
        LlmClient {
            config,
            http: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn client(&self) -> Result<&reqwest::blocking::Client, String> {
        let timeout = Duration::from_secs_f64(self.config.timeout_secs.max(0.001));
        self.http
            .get_or_init(|| {
                reqwest::blocking::Client::builder()
                    .timeout(timeout)
                    .build()
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn request_body(&self, bundle: &PromptBundle) -> serde_json::Value {
        let mut messages = Vec::new();
        if let Some(system) = &self.config.system_message {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": bundle.rendered}));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "stream": false,
        })
    }

    fn call(&self, bundle: &PromptBundle) -> Result<String, FallbackReason> {
        let client = self.client().map_err(FallbackReason::Unreachable)?;
        let mut req = client.post(&self.config.endpoint).json(&self.request_body(bundle));
        if let Some(var) = &self.config.api_key_env {
            if let Ok(key) = std::env::var(var) {
                req = req.bearer_auth(key);
            }
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                FallbackReason::Timeout
            } else {
                FallbackReason::Unreachable(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FallbackReason::Status(status.as_u16()));
        }
        let body: ChatResponse = resp.json().map_err(|e| {
            if e.is_timeout() {
                FallbackReason::Timeout
            } else {
                FallbackReason::Malformed(e.to_string())
            }
        })?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .ok_or_else(|| FallbackReason::Malformed("no message content".into()))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl Translator for LlmClient {
    fn translate(&self, bundle: &PromptBundle) -> Translation {
        if !self.config.enabled {
            return Translation::Fallback(FallbackReason::Disabled);
        }
        match self.call(bundle) {
            Ok(text) => Translation::Text(text),
            Err(reason) => {
                tracing::warn!(?reason, kind = ?bundle.kind, "llm translation failed, using template text");
                Translation::Fallback(reason)
            }
        }
    }
}
