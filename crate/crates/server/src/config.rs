//! Server configuration: a TOML file plus `PLANTUTOR_*` environment overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use plantutor_core::curriculum::DEFAULT_MAX_DEPTH;
use plantutor_core::explainer::DEFAULT_DETAILED;
use plantutor_core::hinter::{HintConfig, HintConfigError};
use plantutor_core::llm::LlmConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("environment variable {name}: cannot parse '{value}'")]
    Env { name: String, value: String },
    #[error(transparent)]
    Hint(#[from] HintConfigError),
    #[error("max_depth must be at least 1")]
    MaxDepth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub env_dir: PathBuf,
    /// Built UI assets, served at `/` when set.
    pub ui_dir: Option<PathBuf>,
    /// Depth cap of the adaptive generator and default depth of random tasks.
    pub max_depth: usize,
    /// How many failures get a detailed explanation.
    pub detailed_explanations: usize,
    /// Seed for random task generation when a request gives none.
    pub task_seed: Option<u64>,
    pub hint: HintConfig,
    pub llm: LlmConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:8080".into(),
            data_dir: "data".into(),
            env_dir: "env".into(),
            ui_dir: None,
            max_depth: DEFAULT_MAX_DEPTH,
            detailed_explanations: DEFAULT_DETAILED,
            task_seed: None,
            hint: HintConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env {
        name: name.to_string(),
        value: value.to_string(),
    })
}

impl ServerConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads `path` if given, applies the process environment and validates.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text, p)?
            }
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `PLANTUTOR_*` overrides; other variables are ignored.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (name, value) in vars {
            match name.as_str() {
                "PLANTUTOR_LISTEN" => self.listen = value,
                "PLANTUTOR_DATA_DIR" => self.data_dir = value.into(),
                "PLANTUTOR_ENV_DIR" => self.env_dir = value.into(),
                "PLANTUTOR_UI_DIR" => self.ui_dir = Some(value.into()),
                "PLANTUTOR_MAX_DEPTH" => self.max_depth = parse(&name, &value)?,
                "PLANTUTOR_TASK_SEED" => self.task_seed = Some(parse(&name, &value)?),
                "PLANTUTOR_HINT_P" => self.hint.reveal_probability = parse(&name, &value)?,
                "PLANTUTOR_HINT_TIMEOUT" => {
                    let secs: f64 = parse(&name, &value)?;
                    self.hint.timeout = Duration::try_from_secs_f64(secs).map_err(|_| ConfigError::Env {
                        name: name.clone(),
                        value: value.clone(),
                    })?;
                }
                "PLANTUTOR_HINT_SEED" => self.hint.rng_seed = Some(parse(&name, &value)?),
                "PLANTUTOR_LLM_ENABLED" => self.llm.enabled = parse(&name, &value)?,
                "PLANTUTOR_LLM_ENDPOINT" => self.llm.endpoint = value,
                "PLANTUTOR_LLM_MODEL" => self.llm.model = value,
                "PLANTUTOR_LLM_API_KEY_ENV" => self.llm.api_key_env = Some(value),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.hint.validate()?;
        if self.max_depth == 0 {
            return Err(ConfigError::MaxDepth);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_environment() {
        let text = r#"
listen = "0.0.0.0:9000"
max_depth = 3

[hint]
reveal_probability = 0.25
timeout = 2

[llm]
enabled = true
model = "local-model"
"#;
        let mut c = ServerConfig::from_toml(text, Path::new("tutor.toml")).unwrap();
        assert_eq!(c.listen, "0.0.0.0:9000");
        assert_eq!(c.hint.timeout, Duration::from_secs(2));
        assert_eq!(c.llm.api_key_env.as_deref(), Some("OPENAI_API_KEY"));
        c.apply_env([
            ("PLANTUTOR_MAX_DEPTH".to_string(), "5".to_string()),
            ("PLANTUTOR_HINT_TIMEOUT".to_string(), "0.5".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ])
        .unwrap();
        assert_eq!(c.max_depth, 5);
        assert_eq!(c.hint.timeout, Duration::from_millis(500));
        assert_eq!(c.hint.reveal_probability, 0.25);
        assert!(c.llm.enabled);
    }

    #[test]
    fn malformed_file_reports_location() {
        let err = ServerConfig::from_toml("listen = \n", Path::new("tutor.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("tutor.toml: "), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
        let err = ServerConfig::from_toml("port = 1\n", Path::new("tutor.toml")).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let mut c = ServerConfig::default();
        assert!(c
            .apply_env([("PLANTUTOR_HINT_P".to_string(), "lots".to_string())])
            .is_err());
        c.hint.reveal_probability = 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn example_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plantutor.example.toml");
        let text = fs::read_to_string(&path).unwrap();
        let c = ServerConfig::from_toml(&text, &path).unwrap();
        c.validate().unwrap();
        assert_eq!(c, ServerConfig::default());
    }
}
