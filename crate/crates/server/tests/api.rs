mod common;

use std::collections::BTreeSet;

use common::TestServer;
use serde_json::{json, Value};

const HANOI_SOLUTION: &str = "(move d1 d2 peg3)
(move d2 d3 peg2)
(move d1 peg3 d2)
(move d3 peg1 peg3)
(move d1 d2 peg1)
(move d2 peg2 d3)
(move d1 peg1 d2)";

fn strings(v: &Value) -> Vec<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn domain_catalog() {
    let server = TestServer::start();
    let (status, body) = server.get("/api/domains");
    assert_eq!(status, 200);
    let names: Vec<&str> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["coffee_shop", "hanoi"]);
    let coffee = &body[0];
    let place = coffee["instructions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|i| i["schema"] == "place")
        .unwrap();
    assert_eq!(
        place["label"],
        "Place at location '{0}' object '{1}' using gripper '{2}' this robot '{3}'"
    );
    assert_eq!(place["params"].as_array().unwrap().len(), 4);
    assert_eq!(coffee["presets"][0]["id"], "p01_deliver_red");
}

#[test]
fn sessions_start_cold_and_unknown_domains_fail() {
    let server = TestServer::start();
    let (status, body) = server.post("/api/sessions", json!({ "domain": "hanoi" }));
    assert_eq!(status, 200);
    assert_eq!(body["performance"], json!({ "move": 0 }));
    let a = body["session_id"].as_str().unwrap();
    assert_eq!(a.len(), 32);
    assert_ne!(a, server.session("hanoi"));

    let (status, body) = server.post("/api/sessions", json!({ "domain": "kitchen" }));
    assert_eq!((status, body["code"].as_str()), (404, Some("unknown_domain")));
    let (status, body) = server.post("/api/sessions", json!({ "name": "hanoi" }));
    assert_eq!((status, body["code"].as_str()), (400, Some("bad_request")));
    let (status, body) = server.get("/api/sessions/0000/report");
    assert_eq!((status, body["code"].as_str()), (404, Some("unknown_session")));
}

#[test]
fn tasks_by_mode() {
    let server = TestServer::start();
    let id = server.session("coffee_shop");

    let (status, body) = server.post(&format!("/api/sessions/{id}/validate"), json!({ "plan": "" }));
    assert_eq!((status, body["code"].as_str()), (409, Some("no_task")));

    let adaptive = server.task(&id, json!({ "mode": "adaptive" }));
    assert_eq!(adaptive["reference_plan_length"], 1);
    assert_eq!(adaptive["trigger"]["reason"], "unknown_action");
    assert_eq!(strings(&adaptive["goal"]), ["(robot_at fetch counter)"]);
    assert_eq!(strings(&adaptive["goal_nl"]), ["robot 'fetch' is at 'counter'"]);

    let random = server.task(&id, json!({ "mode": "random", "depth": 3, "seed": 9 }));
    let again = server.task(&id, json!({ "mode": "random", "depth": 3, "seed": 9 }));
    assert_eq!(random["goal"], again["goal"]);
    assert_eq!(random["reference_plan_length"], 3);

    let (status, body) = server.post(
        &format!("/api/sessions/{id}/task"),
        json!({ "mode": "random", "depth": 99 }),
    );
    assert_eq!((status, body["code"].as_str()), (422, Some("generation_failed")));
    assert!(body["details"]["max_depth"].as_u64().is_some());

    let (status, body) = server.post(
        &format!("/api/sessions/{id}/task"),
        json!({ "mode": "preset", "preset_id": "p99" }),
    );
    assert_eq!((status, body["code"].as_str()), (404, Some("unknown_preset")));

    let preset = server.task(&id, json!({ "mode": "preset", "preset_id": "p02_deliver_all" }));
    assert_eq!(preset["task_id"], "p02_deliver_all");
    assert_eq!(preset["reference_plan_length"], 12);
}

#[test]
fn validation_reports_failures_and_trace() {
    let server = TestServer::start();
    let id = server.session("coffee_shop");
    server.task(&id, json!({ "mode": "preset", "preset_id": "p01_deliver_red" }));
    let plan = "(move_to_counter start fetch counter)\n(pick counter can_red gripper fetch)\n(place counter can_blue gripper fetch)";
    let (status, body) = server.post(&format!("/api/sessions/{id}/validate"), json!({ "plan": plan }));
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["is_valid"], false);
    assert_eq!(body["execute_enabled"], false);
    assert_eq!(
        body["explanations"][0]["tldr"],
        "The action at step 3 (Place at location 'counter' object 'can_blue' using gripper 'gripper' this robot 'fetch') could not be performed because 'gripper' is not holding 'can_blue'."
    );
    assert_eq!(body["failures"][0]["unmet"], json!(["(holding gripper can_blue)"]));
    // trace stops after the valid prefix
    assert_eq!(body["trace"].as_array().unwrap().len(), 3);
    assert_eq!(body["trace"][1]["added"], json!(["(robot_at fetch counter)"]));
    assert_eq!(body["trace"][1]["removed"], json!(["(robot_at fetch start)"]));
    assert_eq!(
        body["steps"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["status"].as_str().unwrap())
            .collect::<Vec<_>>(),
        ["valid", "valid", "invalid"]
    );

    let (status, body) = server.post(
        &format!("/api/sessions/{id}/validate"),
        json!({ "plan": [{ "action": "fly", "args": [] }] }),
    );
    assert_eq!((status, body["code"].as_str()), (422, Some("unresolvable_step")));
    assert_eq!(body["details"]["step"], 1);
    let (status, body) = server.post(&format!("/api/sessions/{id}/validate"), json!({ "plan": "(move" }));
    assert_eq!((status, body["code"].as_str()), (422, Some("plan_syntax")));
}

#[test]
fn two_failures_are_both_reported() {
    let server = TestServer::start();
    let id = server.session("hanoi");
    server.task(&id, json!({ "mode": "preset", "preset_id": "hanoi3" }));
    let plan = "(move d2 d3 peg3)\n(move d1 d2 peg3)\n(move d3 peg1 peg2)";
    let (_, body) = server.post(&format!("/api/sessions/{id}/validate"), json!({ "plan": plan }));
    let steps: Vec<u64> = body["failures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["step"].as_u64().unwrap())
        .collect();
    assert_eq!(steps, [1, 3]);
    assert_eq!(body["explanations"].as_array().unwrap().len(), 2);
}

#[test]
fn hints_follow_the_valid_prefix() {
    let server = TestServer::start();
    let id = server.session("hanoi");
    server.task(&id, json!({ "mode": "preset", "preset_id": "hanoi3" }));
    let (status, hint) = server.post(&format!("/api/sessions/{id}/hint"), Value::Null);
    assert_eq!(status, 200, "{hint}");
    assert_eq!(hint["status"], "hint");
    assert!(hint["action"].as_str().unwrap().starts_with("(move "));
    assert!(hint["message"]
        .as_str()
        .unwrap()
        .starts_with("You might want to try the action: Move disc "));

    server.post(
        &format!("/api/sessions/{id}/validate"),
        json!({ "plan": HANOI_SOLUTION }),
    );
    let (_, hint) = server.post(&format!("/api/sessions/{id}/hint"), json!({}));
    assert_eq!(hint["status"], "already-solved");

    let (_, hint) = server.post(
        &format!("/api/sessions/{id}/hint"),
        json!({ "plan": "(move d1 d2 peg3)" }),
    );
    assert_eq!(hint["status"], "hint");
}

#[test]
fn hinted_steps_lower_the_score() {
    let server = TestServer::start_with(|c| c.hint.reveal_probability = 1.0);
    let id = server.session("hanoi");
    server.task(&id, json!({ "mode": "preset", "preset_id": "hanoi3" }));
    let validate = |plan: &str| server.post(&format!("/api/sessions/{id}/validate"), json!({ "plan": plan }));
    let report = || server.get(&format!("/api/sessions/{id}/report")).1;

    validate("(move d1 d2 peg3)");
    validate("(move d1 d2 peg3)\n(move d2 d3 peg2)");
    assert_eq!(report()["performance"]["move"], 2);
    // resubmitting the same plan is not a new step
    validate("(move d1 d2 peg3)\n(move d2 d3 peg2)");
    assert_eq!(report()["performance"]["move"], 2);

    let (_, hint) = server.post(&format!("/api/sessions/{id}/hint"), json!({}));
    assert_eq!(hint["action"], "(move d1 peg3 d2)");
    validate("(move d1 d2 peg3)\n(move d2 d3 peg2)\n(move d1 peg3 d2)");
    assert_eq!(report()["performance"]["move"], 1);

    // an inapplicable step lowers it too
    validate("(move d1 d2 peg3)\n(move d2 d3 peg2)\n(move d1 peg3 d2)\n(move d1 d2 peg1)");
    assert_eq!(report()["performance"]["move"], 0);
}

#[test]
fn execute_is_gated_on_validity() {
    let server = TestServer::start();
    let id = server.session("hanoi");
    server.task(&id, json!({ "mode": "preset", "preset_id": "hanoi3" }));
    let exec = |plan: &str| server.post(&format!("/api/sessions/{id}/execute"), json!({ "plan": plan }));

    let (status, body) = exec("(move d2 d3 peg3)");
    assert_eq!((status, body["code"].as_str()), (409, Some("plan_invalid")));

    let (status, body) = exec("(move d1 d2 peg3)");
    assert_eq!(status, 200);
    assert_eq!(
        (body["goal_achieved"].as_bool(), body["task_solved"].as_bool()),
        (Some(false), Some(false))
    );
    assert_eq!(body["frames"].as_array().unwrap().len(), 2);

    let (_, body) = exec(HANOI_SOLUTION);
    let frames = body["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 8);
    assert_eq!(frames[0]["label"], "init");
    assert_eq!(frames[1]["label_nl"], "Move disc 'd1' from 'd2' onto 'peg3'");
    assert_eq!(body["task_solved"], true);

    let report = server.get(&format!("/api/sessions/{id}/report")).1;
    assert_eq!(report["attempts"][0]["task_id"], "hanoi3");
    assert!(report["attempts"][0]["solve_seconds"].as_f64().is_some());
}

#[test]
fn sessions_do_not_see_each_other() {
    let server = TestServer::start();
    let a = server.session("hanoi");
    let b = server.session("coffee_shop");
    server.task(&a, json!({ "mode": "preset", "preset_id": "hanoi3" }));
    server.task(&b, json!({ "mode": "adaptive" }));
    for i in 0..5 {
        server.post(
            &format!("/api/sessions/{a}/validate"),
            json!({ "plan": "(move d1 d2 peg3)\n".repeat(i + 1) }),
        );
        server.post(
            &format!("/api/sessions/{b}/validate"),
            json!({ "plan": "(move_to_counter start fetch counter)\n".repeat(i + 1) }),
        );
    }
    let ra = server.get(&format!("/api/sessions/{a}/report")).1;
    let rb = server.get(&format!("/api/sessions/{b}/report")).1;
    assert_eq!(ra["domain"], "hanoi");
    assert_eq!(rb["domain"], "coffee_shop");
    assert_eq!(ra["events"], 11);
    assert_eq!(rb["events"], 11);
    let keys = |r: &Value| {
        r["performance"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect::<BTreeSet<_>>()
    };
    assert_eq!(keys(&ra), BTreeSet::from(["move".to_string()]));
    assert!(!ra.to_string().contains(&b) && !rb.to_string().contains(&a));

    let stored = std::fs::read_dir(server.data.path().join("sessions")).unwrap().count();
    assert_eq!(stored, 2);
}
