use std::fs;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use blockshelf_core::{parse_workspace, serialize_shelf_export, serialize_workspace, Workspace};
use blockshelf_service::{Envelope, Service};
use blockshelf_testkit::{calculator, pusheen};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    _dir: tempfile::TempDir,
    path: std::path::PathBuf,
    service: Service,
    app: Router,
}

fn harness(ws: Workspace) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("project.bshelf.xml");
    fs::write(&path, serialize_workspace(&ws).unwrap()).unwrap();
    let loaded = parse_workspace(&fs::read(&path).unwrap()).unwrap();
    let service = Service::start(loaded, &path);
    let app = service.router();
    Harness { _dir: dir, path, service, app }
}

async fn call(app: &Router, method: &str, uri: &str, revision: Option<u64>, body: Body) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(r) = revision {
        req = req.header("If-Match-Revision", r.to_string());
    }
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = call(app, "GET", uri, None, Body::empty()).await;
    (status, serde_json::from_slice(&body).unwrap())
}

async fn post(app: &Router, uri: &str, revision: Option<u64>, body: Value) -> (StatusCode, Value) {
    let (status, body) = call(app, "POST", uri, revision, Body::from(body.to_string())).await;
    (status, serde_json::from_slice(&body).unwrap())
}

fn shelf_id(ws: &Workspace, name: &str) -> String {
    ws.shelves().by_name(name).next().unwrap().id.to_string()
}

#[tokio::test]
async fn hiding_a_shelf_flags_its_roots() {
    let h = harness(pusheen());
    let ws = h.service.snapshot();
    let buttons = shelf_id(&ws, "Buttons");
    let members: Vec<String> = ws.shelves().by_name("Buttons").next().unwrap().members.iter().map(|m| m.to_string()).collect();

    let (status, env) = post(&h.app, &format!("/shelves/{buttons}/visibility"), Some(0), json!({ "visible": false })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(env["revision"], 1);
    assert_eq!(env["payload"]["visible"], false);

    let (_, env) = get(&h.app, "/workspace").await;
    assert_eq!(env["revision"], 1);
    for root in env["payload"]["roots"].as_array().unwrap() {
        let is_member = members.contains(&root["id"].as_str().unwrap().to_owned());
        assert_eq!(root["hidden"], is_member, "{root}");
    }
    let visible = env["payload"]["visible_roots"].as_array().unwrap().len();
    assert_eq!(visible, ws.top_level().len() - members.len());
}

#[tokio::test]
async fn envelope_shape_on_reads() {
    let h = harness(pusheen());
    let (status, env) = get(&h.app, "/shelves").await;
    assert_eq!(status, StatusCode::OK);
    let env: Envelope = serde_json::from_value(env).unwrap();
    assert_eq!(env.revision, 0);
    assert_eq!(env.payload.as_array().unwrap().len(), 7);
    assert!(env.warnings.is_empty());

    let (_, env) = get(&h.app, "/codegen").await;
    assert!(env["payload"]["text"].as_str().unwrap().contains("check_pair"));

    let (_, env) = get(&h.app, "/search?comment=timer").await;
    let matches = env["payload"].as_array().unwrap();
    assert_eq!(matches.len(), 1);
    assert_eq!(matches[0]["shelf"], shelf_id(&h.service.snapshot(), "Restart"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_mutations_with_same_revision() {
    for round in 0..20 {
        let h = harness(pusheen());
        let ws = h.service.snapshot();
        let a = shelf_id(&ws, "Buttons");
        let b = shelf_id(&ws, "Timer");
        let (ra, rb) = tokio::join!(
            tokio::spawn({
                let app = h.app.clone();
                async move { post(&app, &format!("/shelves/{a}/visibility"), Some(0), json!({ "visible": false })).await }
            }),
            tokio::spawn({
                let app = h.app.clone();
                async move { post(&app, &format!("/shelves/{b}/collapse"), Some(0), json!({ "collapsed": true })).await }
            }),
        );
        let mut statuses = [ra.unwrap().0, rb.unwrap().0];
        statuses.sort();
        assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT], "round {round}");
        assert_eq!(h.service.snapshot().revision(), 1);
    }
}

#[tokio::test]
async fn sequential_mutations_advance_revision_by_one() {
    let h = harness(pusheen());
    let ws = h.service.snapshot();
    let ids: Vec<String> = ws.shelves().iter().map(|s| s.id.to_string()).collect();
    for (i, id) in ids.iter().enumerate() {
        let (status, env) = post(&h.app, &format!("/shelves/{id}/enabled"), Some(i as u64), json!({ "enabled": false })).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(env["revision"], i as u64 + 1);
    }
    let (_, env) = get(&h.app, "/codegen").await;
    assert_eq!(env["payload"]["text"], "");
}

#[tokio::test]
async fn stale_and_malformed_requests() {
    let h = harness(pusheen());
    let id = shelf_id(&h.service.snapshot(), "Buttons");
    let uri = format!("/shelves/{id}/visibility");

    let (status, body) = post(&h.app, &uri, Some(5), json!({ "visible": false })).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"]["code"], "stale-revision");
    assert_eq!(body["revision"], 0);

    let (status, body) = post(&h.app, &uri, None, json!({ "visible": false })).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::BAD_REQUEST, Some("missing-revision")));

    let (status, body) = call(&h.app, "POST", &uri, Some(0), Body::from("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["error"]["code"], "malformed-body");

    let (status, body) = post(&h.app, "/shelves/s999/visibility", Some(0), json!({ "visible": false })).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-shelf")));

    let (status, body) = post(&h.app, "/blocks/nope/comment", Some(0), json!({ "comment": "x" })).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-block")));

    let (status, _) = get(&h.app, "/search").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get(&h.app, "/search?comment=x&shelf=s999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    assert_eq!(h.service.snapshot().revision(), 0);
}

#[tokio::test]
async fn domain_errors_are_422_with_engine_code() {
    let h = harness(pusheen());
    let ws = h.service.snapshot();
    let member = ws.shelves().by_name("Buttons").next().unwrap().members[0].to_string();
    let (status, body) = post(&h.app, "/shelves", Some(0), json!({ "name": "Again", "roots": [member] })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "already-shelved");
    let (status, body) = post(&h.app, "/shelves", Some(0), json!({ "name": "", "roots": [] })).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("empty-name")));
}

#[tokio::test]
async fn export_bytes_are_canonical() {
    let h = harness(pusheen());
    let ws = h.service.snapshot();
    let id = shelf_id(&ws, "Timer");
    let (status, bytes) = call(&h.app, "GET", &format!("/shelves/{id}/export"), None, Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let expected = serialize_shelf_export(&ws.export_shelf(&id.as_str().into()).unwrap()).unwrap();
    assert_eq!(bytes, expected);
    let (status, _) = call(&h.app, "GET", "/shelves/s999/export", None, Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn import_then_save_round_trips() {
    let source = harness(pusheen());
    let id = shelf_id(&source.service.snapshot(), "Timer");
    let (_, doc) = call(&source.app, "GET", &format!("/shelves/{id}/export"), None, Body::empty()).await;

    let target = harness(calculator());
    let (status, _) = call(&target.app, "POST", "/shelves/import?name_policy=bogus", Some(0), Body::from(doc.clone())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&target.app, "POST", "/shelves/import", Some(0), Body::from("<xml/>")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(&target.app, "POST", "/shelves/import?name_policy=keep", Some(0), Body::from(doc)).await;
    assert_eq!(status, StatusCode::OK);
    let env: Envelope = serde_json::from_slice(&body).unwrap();
    assert_eq!(env.revision, 1);
    assert_eq!(env.payload["shelf_name"], "Timer");

    let (status, env) = post(&target.app, "/save", Some(1), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(env["revision"], 1);
    let saved = fs::read(&target.path).unwrap();
    let reparsed = parse_workspace(&saved).unwrap();
    assert!(reparsed.structurally_eq(&target.service.snapshot()));
    assert_eq!(serialize_workspace(&target.service.snapshot()).unwrap(), saved);

    let (status, _) = post(&target.app, "/save", Some(0), json!({})).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn comment_edit_is_searchable() {
    let h = harness(calculator());
    let root = h.service.snapshot().top_level()[0].to_string();
    let (status, env) = post(&h.app, &format!("/blocks/{root}/comment"), Some(0), json!({ "comment": "Needle here" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(env["payload"]["comment"], "Needle here");
    let (_, env) = get(&h.app, "/search?comment=needle").await;
    assert_eq!(env["payload"][0]["block"], root);
    assert_eq!(env["revision"], 1);
}
