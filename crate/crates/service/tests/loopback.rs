use std::time::{Duration, Instant};

use crosswalk_core::ScenarioConfig;
use crosswalk_service::session::replay;
use crosswalk_service::{serve, InputRecord, ServiceConfig};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start_server(cfg: ServiceConfig) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, cfg));
    addr.to_string()
}

async fn create(addr: &str, body: Value) -> Value {
    let resp = reqwest::Client::new()
        .post(format!("http://{addr}/sessions"))
        .json(&body)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 201, "{:?}", resp.text().await);
    resp.json().await.unwrap()
}

async fn get_json(addr: &str, path: &str) -> Value {
    reqwest::get(format!("http://{addr}{path}")).await.unwrap().json().await.unwrap()
}

async fn get_text(addr: &str, path: &str) -> String {
    reqwest::get(format!("http://{addr}{path}")).await.unwrap().text().await.unwrap()
}

async fn connect(addr: &str, id: u64) -> Ws {
    connect_async(format!("ws://{addr}/sessions/{id}/ws")).await.unwrap().0
}

async fn next_msg(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("message within 10 s")
            .expect("stream open")
            .unwrap();
        if let Message::Text(body) = msg {
            return serde_json::from_str(&body).unwrap();
        }
    }
}

async fn next_of(ws: &mut Ws, kind: &str) -> Value {
    loop {
        let m = next_msg(ws).await;
        if m["type"] == kind {
            return m;
        }
    }
}

async fn send(ws: &mut Ws, msg: Value) {
    ws.send(Message::Text(msg.to_string().into())).await.unwrap();
}

async fn control(ws: &mut Ws, action: &str) {
    send(ws, json!({"type": "control", "action": action})).await;
}

async fn wait_finished(ws: &mut Ws) {
    loop {
        let m = next_of(ws, "status").await;
        if m["finished"] == true {
            return;
        }
    }
}

#[tokio::test]
async fn sessions_are_listed_created_paused_and_distinct() {
    let addr = start_server(ServiceConfig::default()).await;
    let list = get_json(&addr, "/scenarios").await;
    let names: Vec<&str> = list.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"normal") && names.contains(&"unexpected_stop"));

    let a = create(&addr, json!({"scenario": "normal"})).await;
    let b = create(&addr, json!({"scenario": "normal"})).await;
    assert_ne!(a["id"], b["id"]);
    assert_eq!(a["state"]["t"], 0.0);
    assert_eq!(a["hello"]["spectator"], false);

    let mut ws = connect(&addr, a["id"].as_u64().unwrap()).await;
    assert_eq!(next_msg(&mut ws).await["type"], "hello");
    assert_eq!(next_msg(&mut ws).await["t"], 0.0);
    control(&mut ws, "start").await;
    tokio::time::sleep(Duration::from_millis(300)).await;
    let sa = get_json(&addr, &format!("/sessions/{}", a["id"])).await;
    let sb = get_json(&addr, &format!("/sessions/{}", b["id"])).await;
    assert!(sa["t"].as_f64().unwrap() > 0.0 && sa["running"] == true);
    assert_eq!((sb["t"].as_f64().unwrap(), sb["running"].as_bool().unwrap()), (0.0, false));

    let missing = reqwest::get(format!("http://{addr}/sessions/9999/trace")).await.unwrap();
    assert_eq!(missing.status(), 404);
    let bad = reqwest::Client::new()
        .post(format!("http://{addr}/sessions"))
        .json(&json!({"scenario": "normal", "set": ["decision.i_ped_l=0.9"]}))
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status(), 400);
}

#[tokio::test]
async fn input_is_reflected_in_the_next_broadcast() {
    let addr = start_server(ServiceConfig::default()).await;
    let s = create(&addr, json!({"scenario": "normal"})).await;
    let mut ws = connect(&addr, s["id"].as_u64().unwrap()).await;
    next_of(&mut ws, "hello").await;
    control(&mut ws, "start").await;
    let state = next_of(&mut ws, "state").await;
    send(&mut ws, json!({"type": "input", "v_ped": 1.5, "i_ped": 0.9, "t": state["t"]})).await;
    let ack = next_of(&mut ws, "ack").await;
    assert_eq!(ack["status"], "applied");
    let after = next_of(&mut ws, "state").await;
    assert!(after["t"].as_f64().unwrap() >= ack["tick"].as_f64().unwrap() * 0.01 - 1e-9);
    assert_eq!(after["ped"]["v"], 1.5);
    assert_eq!(after["ped"]["i_raw"], 0.9);

    send(&mut ws, json!({"type": "input", "v_ped": 1.0, "i_ped": 0.5, "t": -5.0})).await;
    assert_eq!(next_of(&mut ws, "ack").await["status"], "stale");
    send(&mut ws, json!({"type": "teleport"})).await;
    assert_eq!(next_of(&mut ws, "error").await["type"], "error");
}

#[tokio::test]
async fn half_pace_runs_one_sim_second_in_two_wall_seconds() {
    let addr = start_server(ServiceConfig::default()).await;
    let s = create(&addr, json!({"scenario": "normal", "pace": 0.5})).await;
    let mut ws = connect(&addr, s["id"].as_u64().unwrap()).await;
    next_of(&mut ws, "hello").await;
    control(&mut ws, "start").await;
    let t0 = next_of(&mut ws, "state").await["t"].as_f64().unwrap();
    let wall0 = Instant::now();
    let mut count = 0u32;
    loop {
        let t = next_of(&mut ws, "state").await["t"].as_f64().unwrap();
        count += 1;
        if t >= t0 + 1.0 - 1e-9 {
            break;
        }
    }
    let elapsed = wall0.elapsed().as_secs_f64();
    assert!((1.8..=2.2).contains(&elapsed), "elapsed {elapsed}");
    assert!(f64::from(count) / elapsed <= 30.0 + 1.0, "{count} messages in {elapsed} s");
}

#[tokio::test]
async fn spectator_sessions_ignore_inputs() {
    let addr = start_server(ServiceConfig::default()).await;
    let s = create(&addr, json!({"scenario": "normal", "model": "sfm", "pace": 50.0})).await;
    assert_eq!(s["hello"]["spectator"], true);
    let id = s["id"].as_u64().unwrap();
    let mut ws = connect(&addr, id).await;
    assert_eq!(next_of(&mut ws, "hello").await["spectator"], true);
    send(&mut ws, json!({"type": "input", "v_ped": 0.0, "i_ped": 0.0})).await;
    assert_eq!(next_of(&mut ws, "ack").await["status"], "ignored");
    control(&mut ws, "start").await;
    send(&mut ws, json!({"type": "input", "v_ped": 0.0, "i_ped": 0.0})).await;
    wait_finished(&mut ws).await;

    let cfg = ScenarioConfig::from_toml_str(s["config"].as_str().unwrap()).unwrap();
    let mut offline = Vec::new();
    crosswalk_core::run(&cfg).unwrap().write_csv(&mut offline).unwrap();
    assert_eq!(get_text(&addr, &format!("/sessions/{id}/trace")).await, String::from_utf8(offline).unwrap());
}

#[tokio::test]
async fn recorded_inputs_replay_to_the_live_trace() {
    let addr = start_server(ServiceConfig::default()).await;
    let s = create(&addr, json!({"scenario": "normal", "pace": 20.0})).await;
    let id = s["id"].as_u64().unwrap();
    let mut ws = connect(&addr, id).await;
    next_of(&mut ws, "hello").await;
    control(&mut ws, "start").await;
    let script = [(0.3, 0.0, 0.8), (2.0, 0.0, 0.2), (4.0, 1.4, 0.9)];
    for (at, v, i) in script {
        loop {
            let st = next_of(&mut ws, "state").await;
            if st["t"].as_f64().unwrap() >= at {
                break;
            }
        }
        send(&mut ws, json!({"type": "input", "v_ped": v, "i_ped": i})).await;
    }
    wait_finished(&mut ws).await;

    let inputs: Vec<InputRecord> = serde_json::from_value(get_json(&addr, &format!("/sessions/{id}/inputs")).await).unwrap();
    assert_eq!(inputs.len(), script.len());
    assert!(inputs.windows(2).all(|w| w[0].tick < w[1].tick));
    let cfg = ScenarioConfig::from_toml_str(s["config"].as_str().unwrap()).unwrap();
    let mut offline = Vec::new();
    replay(&cfg, &inputs).unwrap().write_csv(&mut offline).unwrap();
    let live = get_text(&addr, &format!("/sessions/{id}/trace")).await;
    assert!(live.lines().count() > 100);
    assert_eq!(live, String::from_utf8(offline).unwrap());
}

#[tokio::test]
async fn session_pauses_after_disconnect_grace() {
    let cfg = ServiceConfig {
        grace: Duration::from_millis(200),
        ..ServiceConfig::default()
    };
    let addr = start_server(cfg).await;
    let s = create(&addr, json!({"scenario": "normal", "pace": 0.2})).await;
    let id = s["id"].as_u64().unwrap();
    let mut ws = connect(&addr, id).await;
    next_of(&mut ws, "hello").await;
    control(&mut ws, "start").await;
    next_of(&mut ws, "state").await;
    ws.close(None).await.unwrap();
    drop(ws);
    tokio::time::sleep(Duration::from_millis(600)).await;
    let first = get_json(&addr, &format!("/sessions/{id}")).await;
    assert_eq!(first["running"], false);
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert_eq!(get_json(&addr, &format!("/sessions/{id}")).await["t"], first["t"]);

    let mut ws = connect(&addr, id).await;
    next_of(&mut ws, "hello").await;
    control(&mut ws, "reset").await;
    let status = next_of(&mut ws, "status").await;
    assert_eq!((status["t"].as_f64().unwrap(), status["running"].as_bool().unwrap()), (0.0, false));
}
