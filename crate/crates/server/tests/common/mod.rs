//! Runs the service on an ephemeral port and talks to it over HTTP.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use plantutor_server::{app, build_tutor, ServerConfig};
use serde_json::{json, Value};

pub struct TestServer {
    pub base: String,
    pub data: tempfile::TempDir,
    http: reqwest::blocking::Client,
}

pub fn env_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../env")
}

pub fn test_config(data: &tempfile::TempDir) -> ServerConfig {
    let mut config = ServerConfig {
        env_dir: env_dir(),
        data_dir: data.path().to_path_buf(),
        ..ServerConfig::default()
    };
    config.hint.rng_seed = Some(7);
    config
}

impl TestServer {
    pub fn start() -> Self {
        Self::start_with(|_| {})
    }

    pub fn start_with(adjust: impl FnOnce(&mut ServerConfig)) -> Self {
        let data = tempfile::tempdir().unwrap();
        let mut config = test_config(&data);
        adjust(&mut config);
        let tutor = Arc::new(build_tutor(&config).unwrap());
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(listener, app(tutor, &config)).await.unwrap();
            });
        });
        TestServer {
            base,
            data,
            http: reqwest::blocking::Client::new(),
        }
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.http.get(format!("{}{path}", self.base)).send().unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().unwrap_or(Value::Null))
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().unwrap_or(Value::Null))
    }

    /// Creates a session and returns its id.
    pub fn session(&self, domain: &str) -> String {
        let (status, body) = self.post("/api/sessions", json!({ "domain": domain }));
        assert_eq!(status, 200, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    pub fn task(&self, id: &str, body: Value) -> Value {
        let (status, body) = self.post(&format!("/api/sessions/{id}/task"), body);
        assert_eq!(status, 200, "{body}");
        body
    }
}
