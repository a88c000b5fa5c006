//! JSON-over-HTTP clients for remote classifier and face services.

use std::path::PathBuf;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{BackendError, RetryPolicy};
use crate::faceclient::{BBox, DetectedFace, FaceEngine, Gender, Race};
use crate::petclass::{PetClassifier, PetPrediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub retry: RetryPolicy,
    /// When set, images are read from `image_root/<image_ref>` and sent
    /// inline as base64 instead of by reference.
    pub image_root: Option<PathBuf>,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(30), retry: RetryPolicy::default(), image_root: None }
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
struct Client {
    agent: ureq::Agent,
    settings: HttpSettings,
}

impl Client {
    fn new(settings: HttpSettings) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(settings.timeout).build();
        Self { agent, settings }
    }

    fn image_body(&self, image_ref: &str) -> Result<serde_json::Value, BackendError> {
        match &self.settings.image_root {
            None => Ok(serde_json::json!({ "image_ref": image_ref })),
            Some(root) => {
                let bytes = std::fs::read(root.join(image_ref))
                    .map_err(|e| BackendError::Protocol(format!("cannot read image {image_ref}: {e}")))?;
                Ok(serde_json::json!({ "image_b64": base64::engine::general_purpose::STANDARD.encode(bytes) }))
            }
        }
    }

    fn post<T: serde::de::DeserializeOwned>(&self, url: &str, body: &serde_json::Value) -> Result<T, BackendError> {
        self.settings.retry.run(|_| {
            let resp = self.agent.post(url).send_json(body.clone()).map_err(map_error)?;
            resp.into_json::<T>().map_err(|e| BackendError::Protocol(e.to_string()))
        })
    }
}

fn map_error(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Status(code, resp) => BackendError::Status { code, body: resp.into_string().unwrap_or_default() },
        ureq::Error::Transport(t) => {
            let msg = t.to_string();
            let timed_out = msg.contains("timed out")
                || std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .is_some_and(|io| matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock));
            if timed_out {
                BackendError::Timeout(msg)
            } else {
                BackendError::Unreachable(msg)
            }
        }
    }
}

#[derive(Deserialize)]
struct ScoresResponse {
    scores: Scores,
}

#[derive(Deserialize)]
struct Scores {
    dog: f64,
    cat: f64,
    other: f64,
}

/// Classifier endpoint: `POST <url>` with `{image_ref}` or `{image_b64}`,
/// answering `{scores: {dog, cat, other}}`.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    url: String,
    client: Client,
}

impl RemoteClassifier {
    pub fn new(url: impl Into<String>, settings: HttpSettings) -> Self {
        Self { url: url.into(), client: Client::new(settings) }
    }
}

impl PetClassifier for RemoteClassifier {
    fn classify(&self, image_ref: &str) -> Result<PetPrediction, BackendError> {
        let body = self.client.image_body(image_ref)?;
        let r: ScoresResponse = self.client.post(&self.url, &body)?;
        PetPrediction::from_scores(r.scores.dog, r.scores.cat, r.scores.other)
            .map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

#[derive(Deserialize)]
struct DetectResponse {
    faces: Vec<WireFace>,
}

#[derive(Deserialize)]
struct WireFace {
    #[serde(default)]
    face_token: Option<String>,
    bbox: BBox,
    age: f64,
    gender: Gender,
    race: Race,
    smiling: f64,
}

#[derive(Deserialize)]
struct CompareResponse {
    similarity: f64,
}

/// Face service rooted at a base URL exposing `POST /detect` and
/// `POST /compare`.
#[derive(Debug, Clone)]
pub struct RemoteFaceEngine {
    base: String,
    client: Client,
}

impl RemoteFaceEngine {
    pub fn new(base_url: impl Into<String>, settings: HttpSettings) -> Self {
        Self { base: base_url.into().trim_end_matches('/').to_string(), client: Client::new(settings) }
    }
}

impl FaceEngine for RemoteFaceEngine {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError> {
        let body = self.client.image_body(image_ref)?;
        let r: DetectResponse = self.client.post(&format!("{}/detect", self.base), &body)?;
        r.faces
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let face = DetectedFace {
                    token: f.face_token.unwrap_or_else(|| format!("{image_ref}#{i}")),
                    bbox: f.bbox,
                    age: f.age,
                    gender: f.gender,
                    race: f.race,
                    smiling: f.smiling,
                };
                face.validate()?;
                Ok(face)
            })
            .collect()
    }

    fn compare(&self, token_a: &str, token_b: &str) -> Result<f64, BackendError> {
        let body = serde_json::json!({ "token_a": token_a, "token_b": token_b });
        let r: CompareResponse = self.client.post(&format!("{}/compare", self.base), &body)?;
        if !(0.0..=1.0).contains(&r.similarity) {
            return Err(BackendError::Protocol(format!("similarity {} outside [0, 1]", r.similarity)));
        }
        Ok(r.similarity)
    }
}
