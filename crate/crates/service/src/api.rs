//! Wire types and body parsing. Bodies are parsed by hand from bytes so
//! that every malformed request is a 400 with the same error shape.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use featacq::acquisition::{HistoryEntry, Policy, SessionStatus, Suggestion};
use featacq::data::{DatasetSchema, FeatureKind, FeatureTransform, Preprocessor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub remaining_budget: Option<f64>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            remaining_budget: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl From<featacq::Error> for ApiError {
    fn from(e: featacq::Error) -> Self {
        use featacq::Error as E;
        match e {
            E::State(_) => Self::new(StatusCode::CONFLICT, "conflict", e.to_string()),
            E::Budget { remaining, .. } => Self {
                remaining_budget: Some(remaining),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "budget", e.to_string())
            },
            E::Argument(_) | E::InputShape { .. } => Self::bad_request(e.to_string()),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    remaining_budget: Option<f64>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                kind: self.kind,
                message: &self.message,
                remaining_budget: self.remaining_budget,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    model_tag: String,
    policy: String,
    #[serde(default)]
    budget: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

/// A validated `POST /v1/sessions` body.
#[derive(Debug, Clone, PartialEq)]
pub struct CreateSession {
    pub model_tag: String,
    pub policy: Policy,
    pub budget: Option<f64>,
}

pub fn parse_create_session(bytes: &[u8]) -> Result<CreateSession, ApiError> {
    let body: CreateBody = serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut policy: Policy = body.policy.parse().map_err(|e: featacq::Error| ApiError::bad_request(e.to_string()))?;
    if let Some(seed) = body.seed {
        match &mut policy {
            Policy::Random { seed: s } => *s = seed,
            _ => return Err(ApiError::bad_request("seed applies only to the random policy")),
        }
    }
    if let Some(b) = body.budget {
        if !(b.is_finite() && b >= 0.0) {
            return Err(ApiError::bad_request(format!("budget must be finite and nonnegative, got {b}")));
        }
    }
    Ok(CreateSession {
        model_tag: body.model_tag,
        policy,
        budget: body.budget,
    })
}

/// A validated `POST /v1/sessions/{id}/features` body. `value` is in the
/// model's [0, 1] space; `expected_step`, when given, is the number of
/// acquisitions the client believes the session holds.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitFeature {
    pub feature_index: usize,
    pub value: f64,
    #[serde(default)]
    pub expected_step: Option<usize>,
}

pub fn parse_submit_feature(bytes: &[u8]) -> Result<SubmitFeature, ApiError> {
    let body: SubmitFeature = serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if !(0.0..=1.0).contains(&body.value) {
        return Err(ApiError::bad_request(format!(
            "value {} is outside [0, 1]; convert raw units with the schema summary first",
            body.value
        )));
    }
    Ok(body)
}

/// Raw units for a feature: `raw = raw_lo + value * (raw_hi - raw_lo)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub index: usize,
    pub name: String,
    pub kind: FeatureKind,
    pub cost: f64,
    pub raw_lo: f64,
    pub raw_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaSummary {
    pub features: Vec<FeatureSummary>,
    pub classes: Vec<String>,
    pub total_cost: f64,
}

impl SchemaSummary {
    pub fn new(schema: &DatasetSchema, pre: &Preprocessor) -> Self {
        let features = schema
            .features
            .iter()
            .zip(&pre.transforms)
            .enumerate()
            .map(|(index, (f, t))| {
                let (raw_lo, raw_hi) = match *t {
                    FeatureTransform::PassThrough => (0.0, 1.0),
                    FeatureTransform::Constant { value } => (value, value),
                    FeatureTransform::Clamp { lo, hi } => (lo, hi),
                };
                FeatureSummary {
                    index,
                    name: f.name.clone(),
                    kind: f.kind,
                    cost: f.cost,
                    raw_lo,
                    raw_hi,
                }
            })
            .collect();
        Self {
            features,
            classes: schema.classes.clone(),
            total_cost: schema.total_cost(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub tag: String,
    pub feature_count: usize,
    pub classes: Vec<String>,
    pub total_cost: f64,
}

/// Full read-only view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub model_tag: String,
    pub policy: String,
    pub status: SessionStatus,
    pub stop_reason: Option<String>,
    pub budget: Option<f64>,
    pub remaining_budget: Option<f64>,
    pub accumulated_cost: f64,
    pub initial_posterior: Vec<f64>,
    pub posterior: Vec<f64>,
    pub predicted_class: usize,
    pub history: Vec<HistoryEntry>,
    pub suggestion: Option<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    #[serde(flatten)]
    pub snapshot: SessionSnapshot,
    pub schema: SchemaSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub entry: HistoryEntry,
    pub posterior: Vec<f64>,
    pub predicted_class: usize,
    pub accumulated_cost: f64,
    pub remaining_budget: Option<f64>,
    pub status: SessionStatus,
    pub next_suggestion: Option<Suggestion>,
    pub stop_reason: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn create_body_validation() {
        let ok = parse_create_session(br#"{"model_tag":"t","policy":"random","seed":9,"budget":3}"#).unwrap();
        assert_eq!(ok.policy, Policy::Random { seed: 9 });
        assert_eq!(ok.budget, Some(3.0));
        assert_eq!(parse_create_session(br#"{"model_tag":"t","policy":"aig"}"#).unwrap().budget, None);
        for bad in [
            &b"{"[..],
            br#"{"model_tag":"t"}"#,
            br#"{"model_tag":"t","policy":"greedy"}"#,
            br#"{"model_tag":"t","policy":"aig","seed":1}"#,
            br#"{"model_tag":"t","policy":"aig","budget":-1}"#,
            br#"{"model_tag":"t","policy":"aig","extra":1}"#,
            br#"[1,2]"#,
        ] {
            let e = parse_create_session(bad).unwrap_err();
            assert_eq!(e.status, StatusCode::BAD_REQUEST, "{}", String::from_utf8_lossy(bad));
        }
    }

    #[test]
    fn submit_body_validation() {
        let ok = parse_submit_feature(br#"{"feature_index":2,"value":0.25,"expected_step":1}"#).unwrap();
        assert_eq!(ok.expected_step, Some(1));
        for bad in [
            &br#"{"feature_index":-1,"value":0.5}"#[..],
            br#"{"feature_index":1,"value":1.5}"#,
            br#"{"feature_index":1}"#,
            br#"{"feature_index":1,"value":"x"}"#,
            b"",
        ] {
            assert_eq!(parse_submit_feature(bad).unwrap_err().status, StatusCode::BAD_REQUEST);
        }
    }

    #[test]
    fn engine_errors_map_to_statuses() {
        let budget = ApiError::from(featacq::Error::Budget {
            feature: 1,
            cost: 2.0,
            remaining: 0.5,
        });
        assert_eq!(budget.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(budget.remaining_budget, Some(0.5));
        assert_eq!(ApiError::from(featacq::Error::State("x".into())).status, StatusCode::CONFLICT);
    }
}
