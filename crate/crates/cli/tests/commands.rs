use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use plantutor_core::env::EnvRegistry;
use plantutor_core::llm::Disabled;
use plantutor_core::session::{Event, EventPayload, SessionStore, TaskRecord};
use plantutor_core::{HintConfig, Provenance};
use plantutor_server::tutor::{PlanInput, PlanRequest, TaskMode, TaskRequest};
use plantutor_server::{Tutor, TutorSettings};
use serde_json::Value;
use tempfile::TempDir;

fn env_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../env")
}

fn hanoi() -> (PathBuf, PathBuf) {
    let root = env_dir().join("hanoi");
    (root.join("domain.pddl"), root.join("problems/hanoi3.pddl"))
}

fn coffee() -> (PathBuf, PathBuf) {
    let root = env_dir().join("coffee_shop");
    (root.join("domain.pddl"), root.join("problems/p01_deliver_red.pddl"))
}

fn plantutor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plantutor"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn run_check(domain: &Path, problem: &Path, plan_text: &str, json: bool) -> (i32, String) {
    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.txt");
    fs::write(&plan, plan_text).unwrap();
    let mut args = vec![
        domain.to_str().unwrap(),
        problem.to_str().unwrap(),
        plan.to_str().unwrap(),
    ];
    if json {
        args.push("--json");
    }
    let out = plantutor(&[&["check"], args.as_slice()].concat());
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

const COFFEE_STEP3: &str =
    "(move_to_counter start fetch counter)\n(pick counter can_red gripper fetch)\n(place counter can_blue gripper fetch)\n";

#[test]
fn check_exit_codes() {
    let (d, p) = hanoi();
    let reference = fs::read_to_string(env_dir().join("hanoi/problems/hanoi3.plan")).unwrap();
    let (code, out) = run_check(&d, &p, &reference, false);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out, "plan: 7 step(s), 0 failing, solved\n");

    let (code, out) = run_check(&d, &p, "", false);
    assert_eq!(code, 1);
    assert_eq!(out, "plan: 0 step(s), 0 failing, valid, goal not achieved\n");

    let (code, _) = run_check(&d, &p, "(move d3 peg1 peg2)\n", false);
    assert_eq!(code, 2);
}

#[test]
fn check_prints_template_explanations() {
    let (d, p) = coffee();
    let (code, out) = run_check(&d, &p, COFFEE_STEP3, false);
    assert_eq!(code, 2);
    assert_eq!(
        out.lines().next().unwrap(),
        "The action at step 3 (Place at location 'counter' object 'can_blue' using gripper 'gripper' this robot 'fetch') could not be performed because 'gripper' is not holding 'can_blue'."
    );
}

#[test]
fn parse_errors_exit_two_with_location() {
    let (d, p) = hanoi();
    let (code, _) = run_check(&d, &p, "(move d1 d2 peg3\n", false);
    assert_eq!(code, 2);
    let (code, _) = run_check(&d, &p, "(fly d1 peg3)\n", false);
    assert_eq!(code, 2);

    let dir = TempDir::new().unwrap();
    let broken = dir.path().join("domain.pddl");
    fs::write(&broken, "(define (domain x) (:predicates (p)").unwrap();
    let plan = dir.path().join("plan.txt");
    fs::write(&plan, "").unwrap();
    let out = plantutor(&[
        "check",
        broken.to_str().unwrap(),
        p.to_str().unwrap(),
        plan.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(broken.to_str().unwrap()), "{err}");
}

#[test]
fn check_matches_the_service() {
    let registry = EnvRegistry::load_dir(env_dir()).unwrap();
    let settings = TutorSettings {
        max_depth: 4,
        detailed_explanations: 2,
        task_seed: None,
        hint: HintConfig::default(),
    };
    let tutor = Tutor::new(registry, SessionStore::in_memory(), settings, Arc::new(Disabled)).unwrap();
    let plans = [
        COFFEE_STEP3,
        "(place counter can_blue gripper fetch)\n(pick counter can_red gripper fetch)\n",
        "(move_to_counter start fetch counter)\n",
        "",
    ];
    let (d, p) = coffee();
    for plan in plans {
        let id = tutor.create_session("coffee_shop").unwrap().session_id;
        tutor
            .next_task(
                &id,
                &TaskRequest {
                    mode: TaskMode::Preset,
                    preset_id: Some("p01_deliver_red".into()),
                    depth: None,
                    seed: None,
                },
            )
            .unwrap();
        let api = tutor
            .validate(
                &id,
                PlanRequest {
                    plan: PlanInput::Text(plan.into()),
                    detailed: false,
                },
            )
            .unwrap();
        let api = serde_json::to_value(api).unwrap();
        let (code, out) = run_check(&d, &p, plan, true);
        let cli: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(cli["is_valid"], api["is_valid"]);
        assert_eq!(cli["goal_achieved"], api["goal_achieved"]);
        let statuses: Vec<&Value> = api["steps"].as_array().unwrap().iter().map(|s| &s["status"]).collect();
        assert_eq!(cli["steps"].as_array().unwrap().iter().collect::<Vec<_>>(), statuses);
        let failures: Vec<Value> = cli["failures"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| serde_json::json!({ "step": f["step"], "action": f["action"], "unmet": f["unmet"] }))
            .collect();
        assert_eq!(Value::Array(failures), api["failures"]);
        let tldrs: Vec<&Value> = api["explanations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| &e["tldr"])
            .collect();
        assert_eq!(
            cli["failures"]
                .as_array()
                .unwrap()
                .iter()
                .map(|f| &f["tldr"])
                .collect::<Vec<_>>(),
            tldrs
        );
        let expected = match (api["is_valid"].as_bool(), api["goal_achieved"].as_bool()) {
            (Some(true), Some(true)) => 0,
            (Some(true), _) => 1,
            _ => 2,
        };
        assert_eq!(code, expected);
    }
}

#[test]
fn gen_cold_start_is_one_action() {
    let (d, p) = coffee();
    let out = plantutor(&["gen", d.to_str().unwrap(), p.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["provenance"], "adaptive");
    assert_eq!(
        report["witness"],
        serde_json::json!(["(move_to_counter start fetch counter)"])
    );
    assert_eq!(report["trigger"]["reason"], "unknown_action");

    let text = plantutor(&["gen", d.to_str().unwrap(), p.to_str().unwrap()]);
    let goals: Vec<&str> = std::str::from_utf8(&text.stdout).unwrap().lines().collect();
    assert_eq!(
        goals,
        report["goal"]
            .as_array()
            .unwrap()
            .iter()
            .map(|g| g.as_str().unwrap())
            .collect::<Vec<_>>()
    );
}

#[test]
fn gen_reads_costs() {
    let (d, p) = coffee();
    let dir = TempDir::new().unwrap();
    let costs = dir.path().join("costs.json");
    fs::write(&costs, r#"{"move_to_counter": 2, "pick": 1}"#).unwrap();
    let out = plantutor(&[
        "gen",
        d.to_str().unwrap(),
        p.to_str().unwrap(),
        "--costs-file",
        costs.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let last = report["witness"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .as_str()
        .unwrap()
        .to_string();
    assert!(
        !last.starts_with("(move_to_counter") && !last.starts_with("(pick"),
        "{report}"
    );

    fs::write(&costs, r#"{"teleport": 1}"#).unwrap();
    let out = plantutor(&[
        "gen",
        d.to_str().unwrap(),
        p.to_str().unwrap(),
        "--costs-file",
        costs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("teleport"));
}

#[test]
fn gen_random_is_deterministic_and_reports_max_depth() {
    let (d, p) = hanoi();
    let args = [
        "gen",
        d.to_str().unwrap(),
        p.to_str().unwrap(),
        "--mode",
        "random",
        "--depth",
        "3",
        "--seed",
        "11",
    ];
    let first = plantutor(&args);
    let second = plantutor(&args);
    assert!(first.status.success());
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);

    let far = plantutor(&[
        "gen",
        d.to_str().unwrap(),
        p.to_str().unwrap(),
        "--mode",
        "random",
        "--depth",
        "500",
    ]);
    assert_eq!(far.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&far.stderr).contains("maximum reachable depth is"));
}

#[test]
fn export_writes_csv() {
    let data = TempDir::new().unwrap();
    let registry = EnvRegistry::load_dir(env_dir()).unwrap();
    let store = SessionStore::open(data.path()).unwrap();
    let domain = &registry.get("hanoi").unwrap().domain;
    let session = store.create(domain).unwrap();
    let task = TaskRecord {
        task_id: "hanoi3".into(),
        provenance: Provenance::Preset,
        preset_id: "hanoi3".into(),
        goal: vec![],
        trigger: None,
        reference_plan_length: 7,
        witness: vec![],
    };
    store
        .record_event(&session.session_id, Event::now(EventPayload::TaskGenerated { task }))
        .unwrap();
    store
        .record_event(
            &session.session_id,
            Event::now(EventPayload::TaskSolved {
                task_id: "hanoi3".into(),
            }),
        )
        .unwrap();

    let out = plantutor(&["export", "--data-dir", data.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "session,task,solve_seconds,hints_used");
    assert_eq!(lines.len(), 2);
    assert!(
        lines[1].starts_with(&format!("{},hanoi3,", session.session_id)),
        "{csv}"
    );
    assert!(lines[1].ends_with(",0"));

    let missing = plantutor(&["export", "--data-dir", data.path().join("nope").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn serve_rejects_malformed_config() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("plantutor.toml");
    fs::write(&config, "listen = 8080\n").unwrap();
    let out = plantutor(&["serve", "--config", config.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains(config.to_str().unwrap()));
}
