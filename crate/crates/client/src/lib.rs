//! Thin async client for the linkcluster HTTP service.

use serde::de::DeserializeOwned;
use serde::Serialize;

use linkcluster_core::search::{ErrorBody, HealthResponse, SearchResponse, StatsResponse};
use linkcluster_core::{DegreeMode, Estimator};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api {
        status: u16,
        kind: String,
        message: String,
    },
    #[error("malformed response: {0}")]
    Decode(#[from] serde_json::Error),
}

/// Query parameters for `GET /search`; unset fields use server defaults.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchRequest {
    pub q: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tcm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_walk_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StatsRequest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<DegreeMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    /// Raw response body of a successful request.
    pub async fn get_raw<Q: Serialize + ?Sized>(
        &self,
        path: &str,
        query: &Q,
    ) -> Result<Vec<u8>, ClientError> {
        let resp = self
            .http
            .get(format!("{}{path}", self.base))
            .query(query)
            .send()
            .await?;
        let status = resp.status();
        let body = resp.bytes().await?.to_vec();
        if status.is_success() {
            return Ok(body);
        }
        let (kind, message) = match serde_json::from_slice::<ErrorBody>(&body) {
            Ok(e) => (e.kind, e.error),
            Err(_) => (
                "unknown".into(),
                String::from_utf8_lossy(&body).into_owned(),
            ),
        };
        Err(ClientError::Api {
            status: status.as_u16(),
            kind,
            message,
        })
    }

    async fn get_json<T: DeserializeOwned, Q: Serialize + ?Sized>(
        &self,
        path: &str,
        query: &Q,
    ) -> Result<T, ClientError> {
        Ok(serde_json::from_slice(&self.get_raw(path, query).await?)?)
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        self.get_json("/health", &()).await
    }

    pub async fn search(&self, req: &SearchRequest) -> Result<SearchResponse, ClientError> {
        self.get_json("/search", req).await
    }

    /// Search response body exactly as sent by the server.
    pub async fn search_raw(&self, req: &SearchRequest) -> Result<Vec<u8>, ClientError> {
        self.get_raw("/search", req).await
    }

    pub async fn stats(&self, req: &StatsRequest) -> Result<StatsResponse, ClientError> {
        self.get_json("/stats", req).await
    }
}
