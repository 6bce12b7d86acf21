//! Newline-delimited JSON requests and responses.
//!
//! A request is `{"op": ..., "session": ..., "args": {...}}`; every request
//! gets exactly one response line, `{"ok": true, "data": ...}` or
//! `{"ok": false, "error": "..."}`. An optional `"id"` is echoed back.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Engine, Input, Profile};
use crate::skill::{Outcome, ParOrder, SkillArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub args: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    world: String,
    #[serde(default)]
    profile: Option<Profile>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSkill {
    source: String,
    entry: String,
    #[serde(default)]
    args: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    right_first: bool,
}

fn args<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T, String> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| format!("bad args: {e}"))
}

fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Produced(m) => {
            let m: serde_json::Map<String, Value> = m
                .iter()
                .map(|(k, (t, e))| (k.clone(), json!({"type": t, "entity": e})))
                .collect();
            json!({"produced": m})
        }
        Outcome::Failed { at, reason } => json!({"failed": {"at": at, "reason": reason}}),
    }
}

/// Answers one request.
pub fn handle(engine: &Engine, req: &Request) -> Result<Value, String> {
    if req.op == "new_session" {
        let a: NewSession = args(&req.args)?;
        let profile = a.profile.unwrap_or(if a.world == "farm" {
            Profile::Farm
        } else {
            Profile::Cli
        });
        let id = engine
            .new_session(&a.world, profile, a.seed)
            .map_err(|e| e.to_string())?;
        return Ok(engine.with_session(&id, |s| s.view()).expect("just opened"));
    }
    let known = [
        "get_state",
        "list_intents",
        "step",
        "run_skill",
        "get_trace",
        "close_session",
    ];
    if !known.contains(&req.op.as_str()) {
        return Err(format!("unknown op `{}`", req.op));
    }
    let sid = req.session.as_deref().ok_or("missing `session`")?;
    if req.op == "close_session" {
        return if engine.close_session(sid) {
            Ok(json!({"closed": sid}))
        } else {
            Err(format!("no session `{sid}`"))
        };
    }
    engine
        .with_session(sid, |s| match req.op.as_str() {
            "get_state" => Ok(s.view()),
            "list_intents" => Ok(json!({ "choices": s.choices() })),
            "step" => {
                let input: Input = args(&req.args)?;
                let stepped = s.input(&input).map_err(|e| e.to_string())?;
                Ok(serde_json::to_value(stepped).expect("serializable"))
            }
            "run_skill" => {
                let a: RunSkill = args(&req.args)?;
                let order = if a.right_first {
                    ParOrder::RightFirst
                } else {
                    ParOrder::LeftFirst
                };
                let before = s.trace().len();
                let outcome = s
                    .run_skill(&a.source, &a.entry, &SkillArgs(a.args), order)
                    .map_err(|e| e.to_string())?;
                Ok(json!({
                    "outcome": outcome_json(&outcome),
                    "text": outcome.to_string(),
                    "steps": s.trace().len() - before,
                    "digest": crate::world::state_digest(s.state()),
                }))
            }
            "get_trace" => Ok(json!({
                "steps": s.trace().len(),
                "jsonl": s.trace().to_jsonl(),
                "transcript": s.transcript(),
            })),
            _ => unreachable!(),
        })
        .unwrap_or_else(|| Err(format!("no session `{sid}`")))
}

/// Answers one raw line. Malformed lines get an error reply too.
pub fn handle_line(engine: &Engine, line: &str) -> String {
    let reply = match serde_json::from_str::<Request>(line) {
        Err(e) => Reply {
            id: None,
            ok: false,
            data: None,
            error: Some(format!("malformed request: {e}")),
        },
        Ok(req) => match handle(engine, &req) {
            Ok(data) => Reply {
                id: req.id,
                ok: true,
                data: Some(data),
                error: None,
            },
            Err(error) => Reply {
                id: req.id,
                ok: false,
                data: None,
                error: Some(error),
            },
        },
    };
    serde_json::to_string(&reply).expect("replies serialize")
}

/// Serves requests from `input` until end of input. Blank lines are ignored.
pub fn serve_lines(engine: &Engine, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", handle_line(engine, &line))?;
        output.flush()?;
    }
    Ok(())
}

/// Accepts connections forever, one thread each.
pub fn serve_tcp(engine: Arc<Engine>, addr: impl ToSocketAddrs) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_listener(engine, listener)
}

pub fn serve_listener(engine: Arc<Engine>, listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let engine = Arc::clone(&engine);
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            let _ = serve_lines(&engine, reader, stream);
        });
    }
    Ok(())
}
