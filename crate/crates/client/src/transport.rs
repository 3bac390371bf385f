//! How the client reaches a node: HTTP, or a chain in the same process.

use std::sync::Arc;
use std::time::Duration;

use serde_json::Value as Json;
use tzdesk_node::{Method, NodeService};

use crate::error::{ClientError, Result};

pub trait Transport {
    fn call(&self, method: Method, path: &str, body: Option<&Json>) -> Result<Json>;

    /// Lets the chain advance between two polls.
    fn tick(&self);

    fn endpoint(&self) -> String;
}

pub(crate) fn method_name(m: Method) -> &'static str {
    match m {
        Method::Get => "GET",
        Method::Post => "POST",
    }
}

pub struct Http {
    base: String,
    client: reqwest::blocking::Client,
    pub poll: Duration,
}

impl Http {
    pub fn new(base: &str, poll: Duration) -> Http {
        Http { base: base.trim_end_matches('/').to_string(), client: reqwest::blocking::Client::new(), poll }
    }
}

impl Transport for Http {
    fn call(&self, method: Method, path: &str, body: Option<&Json>) -> Result<Json> {
        let url = format!("{}/{}", self.base, path.trim_start_matches('/'));
        let req = match method {
            Method::Get => self.client.get(&url),
            Method::Post => self.client.post(&url).json(body.unwrap_or(&Json::Null)),
        };
        let resp = req.send().map_err(|e| ClientError::Unreachable { endpoint: self.base.clone(), reason: e.to_string() })?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| ClientError::Unreachable { endpoint: self.base.clone(), reason: e.to_string() })?;
        let reply = serde_json::from_str(&text).unwrap_or(Json::String(text));
        if (200..300).contains(&status) {
            Ok(reply)
        } else {
            Err(ClientError::Rpc { method: method_name(method), path: path.to_string(), status, body: reply })
        }
    }

    fn tick(&self) {
        std::thread::sleep(self.poll);
    }

    fn endpoint(&self) -> String {
        self.base.clone()
    }
}

/// A node service in this process; every tick bakes one block.
#[derive(Clone)]
pub struct InProcess {
    pub node: Arc<NodeService>,
}

impl InProcess {
    pub fn new(node: Arc<NodeService>) -> InProcess {
        InProcess { node }
    }
}

impl Transport for InProcess {
    fn call(&self, method: Method, path: &str, body: Option<&Json>) -> Result<Json> {
        self.node.handle(method, path, body).map_err(|e| ClientError::Rpc {
            method: method_name(method),
            path: path.to_string(),
            status: e.status,
            body: e.body,
        })
    }

    fn tick(&self) {
        self.node.bake();
    }

    fn endpoint(&self) -> String {
        "in-process".into()
    }
}
