//! Line-delimited JSON-RPC 2.0 tool server over a loaded [`Engine`].
//!
//! Methods:
//!
//! | method             | params                                   | result              |
//! |--------------------|------------------------------------------|---------------------|
//! | `retrieve`         | `query`, `k?`, `mode?`                   | `{hits}`            |
//! | `assemble_context` | `query`, `k?`, `mode?`, `template_id?`   | `{prompt, hits}`    |
//! | `stats`            | none                                     | snapshot manifest   |
//!
//! Requests without an `id` are notifications and get no reply.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::engine::{Engine, QueryOptions};
use crate::error::{Error, Result};
use crate::retrieval::prompt::DEFAULT_TEMPLATE_ID;
use crate::retrieval::{Mode, RetrieveResult};
use crate::snapshot::Manifest;

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const INTERNAL_ERROR: i64 = -32603;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrieveParams {
    query: String,
    k: Option<usize>,
    mode: Option<Mode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssembleParams {
    query: String,
    k: Option<usize>,
    mode: Option<Mode>,
    template_id: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsParams {}

struct RpcError {
    code: i64,
    message: String,
}

impl RpcError {
    fn new(code: i64, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for RpcError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Domain(_) => INVALID_PARAMS,
            _ => INTERNAL_ERROR,
        };
        Self::new(code, e.to_string())
    }
}

fn error_response(id: Value, err: RpcError) -> String {
    json!({
        "jsonrpc": "2.0",
        "id": id,
        "error": {"code": err.code, "message": err.message},
    })
    .to_string()
}

fn parse_params<T: for<'de> Deserialize<'de>>(params: Option<Value>) -> Result<T, RpcError> {
    let params = match params {
        None | Some(Value::Null) => json!({}),
        Some(p @ Value::Object(_)) => p,
        Some(_) => return Err(RpcError::new(INVALID_PARAMS, "params must be an object")),
    };
    serde_json::from_value(params).map_err(|e| RpcError::new(INVALID_PARAMS, e.to_string()))
}

fn query_options(query: &str, k: Option<usize>, mode: Option<Mode>) -> Result<QueryOptions, RpcError> {
    if query.trim().is_empty() {
        return Err(RpcError::new(INVALID_PARAMS, "query must be a non-empty string"));
    }
    if k == Some(0) {
        return Err(RpcError::new(INVALID_PARAMS, "k must be >= 1"));
    }
    Ok(QueryOptions { mode, k })
}

fn dispatch(engine: &Engine, method: &str, params: Option<Value>) -> Result<Value, RpcError> {
    match method {
        "retrieve" => {
            let p: RetrieveParams = parse_params(params)?;
            let opts = query_options(&p.query, p.k, p.mode)?;
            let (cfg, hits) = engine.retrieve(&p.query, opts)?;
            Ok(serde_json::to_value(RetrieveResult::new(&hits, cfg.mode)).map_err(Error::from)?)
        }
        "assemble_context" => {
            let p: AssembleParams = parse_params(params)?;
            let opts = query_options(&p.query, p.k, p.mode)?;
            let template = p.template_id.as_deref().unwrap_or(DEFAULT_TEMPLATE_ID);
            let (prompt, cfg, hits) = engine.assemble(&p.query, opts, template)?;
            let hits = RetrieveResult::new(&hits, cfg.mode).hits;
            Ok(json!({"prompt": prompt.text, "hits": hits}))
        }
        "stats" => {
            let _: StatsParams = parse_params(params)?;
            Ok(serde_json::to_value(Manifest::of(engine)).map_err(Error::from)?)
        }
        other => Err(RpcError::new(METHOD_NOT_FOUND, format!("method not found: {other}"))),
    }
}

/// Handles one request line. Returns the response line, or `None` for
/// notifications and blank lines.
pub fn handle_line(engine: &Engine, line: &str) -> Option<String> {
    if line.trim().is_empty() {
        return None;
    }
    let request: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return Some(error_response(
                Value::Null,
                RpcError::new(PARSE_ERROR, format!("parse error: {e}")),
            ))
        }
    };
    let Value::Object(mut obj) = request else {
        return Some(error_response(
            Value::Null,
            RpcError::new(INVALID_REQUEST, "request must be an object"),
        ));
    };
    let id = obj.remove("id");
    let valid_id = matches!(id, None | Some(Value::Null | Value::Number(_) | Value::String(_)));
    let reply_id = if valid_id {
        id.clone().unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    let method = match (obj.get("jsonrpc"), obj.get("method")) {
        (Some(Value::String(v)), Some(Value::String(m))) if v == "2.0" && valid_id => m.clone(),
        _ => {
            return Some(error_response(
                reply_id,
                RpcError::new(INVALID_REQUEST, "invalid request"),
            ))
        }
    };
    let outcome = dispatch(engine, &method, obj.remove("params"));
    let id = id?;
    Some(match outcome {
        Ok(result) => json!({"jsonrpc": "2.0", "id": id, "result": result}).to_string(),
        Err(err) => error_response(id, err),
    })
}

/// Serves requests from `input` until EOF, one response line per request.
pub fn serve_lines<R: BufRead, W: Write>(engine: &Engine, input: R, mut output: W) -> std::io::Result<()> {
    for line in input.lines() {
        if let Some(resp) = handle_line(engine, &line?) {
            output.write_all(resp.as_bytes())?;
            output.write_all(b"\n")?;
            output.flush()?;
        }
    }
    Ok(())
}

pub fn serve_stdio(engine: &Engine) -> std::io::Result<()> {
    let stdin = std::io::stdin();
    serve_lines(engine, stdin.lock(), std::io::stdout().lock())
}

fn serve_connection(engine: &Engine, stream: TcpStream) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(engine, reader, stream)
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp(engine: Arc<Engine>, listener: TcpListener) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let engine = Arc::clone(&engine);
        thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = serve_connection(&engine, stream) {
                log::warn!("connection {peer:?} closed: {e}");
            }
        });
    }
    Ok(())
}
