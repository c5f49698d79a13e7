//! Blocking client for the graph service.

use std::time::Duration;

use nimbus_core::api::{
    BenchRequest, ErrorBody, JobSummary, PartitionRequest, PartitionResponse, RunRequest, RunResponse, VerifyRequest,
};
use nimbus_core::metrics::{BenchRecord, VerifyOutcome};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// The server answered with an error status.
    #[error("server returned {status}: {message}")]
    Server { status: u16, message: String },
}

pub type Result<T> = std::result::Result<T, ClientError>;

pub struct Client {
    base: String,
    http: reqwest::blocking::Client,
}

impl Client {
    /// `base` like `http://127.0.0.1:7878`. Jobs run synchronously, so
    /// requests carry no timeout.
    pub fn new(base: &str) -> Result<Self> {
        let http = reqwest::blocking::Client::builder().timeout(None::<Duration>).build()?;
        Ok(Client { base: base.trim_end_matches('/').to_string(), http })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn decode<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json()?);
        }
        let text = resp.text().unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Server { status: status.as_u16(), message })
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        Self::decode(self.http.post(self.url(path)).json(body).send()?)
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        Self::decode(self.http.get(self.url(path)).send()?)
    }

    pub fn health(&self) -> Result<serde_json::Value> {
        self.get("/health")
    }

    pub fn partition(&self, req: &PartitionRequest) -> Result<PartitionResponse> {
        self.post("/partition", req)
    }

    pub fn run(&self, req: &RunRequest) -> Result<RunResponse> {
        self.post("/run", req)
    }

    pub fn jobs(&self) -> Result<Vec<JobSummary>> {
        self.get("/jobs")
    }

    pub fn job(&self, id: u64) -> Result<JobSummary> {
        self.get(&format!("/jobs/{id}"))
    }

    pub fn verify(&self, req: &VerifyRequest) -> Result<VerifyOutcome> {
        self.post("/verify", req)
    }

    pub fn bench(&self, req: &BenchRequest) -> Result<Vec<BenchRecord>> {
        self.post("/bench", req)
    }
}

/// Result file body: one `global_id value` line per vertex.
pub fn render_result(values: &[(u64, String)]) -> String {
    let mut out = String::with_capacity(values.len() * 12);
    for (id, v) in values {
        out.push_str(&format!("{id} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_lines() {
        assert_eq!(render_result(&[(10, "0".into()), (3, "1.5".into())]), "10 0\n3 1.5\n");
        assert_eq!(render_result(&[]), "");
    }

    #[test]
    fn base_url_is_normalized() {
        assert_eq!(Client::new("http://h:1/").unwrap().url("/run"), "http://h:1/run");
    }
}
