//! What-if HTTP service.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use er_core::{AttrId, RankedAlternative, ScaleTransform, TransformId};
use serde::Serialize;

use crate::model_file::{AttributeDef, ScaleDef, SCHEMA};
use crate::pipeline::{evaluate_scenario, Inputs, Outcome, PipelineError, Scenario};

pub struct AppState {
    inputs: Inputs,
    baseline: EvaluationBody,
}

impl AppState {
    pub fn new(inputs: Inputs) -> Result<Self, PipelineError> {
        let baseline = EvaluationBody::from_outcome(&evaluate_scenario(&inputs, &Scenario::default())?);
        Ok(Self { inputs, baseline })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeBody {
    pub beliefs: Vec<f64>,
    pub ignorance: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternativeBody {
    pub name: String,
    pub nodes: BTreeMap<AttrId, NodeBody>,
}

/// Body of `GET /evaluate` and `POST /whatif`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationBody {
    pub schema: &'static str,
    pub interview_weight: f64,
    pub grades: Vec<String>,
    pub utilities: Vec<f64>,
    pub ranking: Vec<RankedAlternative>,
    pub alternatives: Vec<AlternativeBody>,
}

impl EvaluationBody {
    pub fn from_outcome(outcome: &Outcome) -> Self {
        let alternatives = outcome
            .alternatives
            .iter()
            .map(|a| AlternativeBody {
                name: a.name.clone(),
                nodes: a
                    .evaluation
                    .nodes
                    .iter()
                    .map(|(id, n)| {
                        let weight = a.model.tree.get(id.as_str()).map_or(1.0, |x| x.weight);
                        let d = &n.distribution;
                        (id.clone(), NodeBody { beliefs: d.beliefs().to_vec(), ignorance: d.ignorance(), weight })
                    })
                    .collect(),
            })
            .collect();
        Self {
            schema: SCHEMA,
            interview_weight: outcome.interview_weight,
            grades: outcome.common.labels().to_vec(),
            utilities: outcome.common.utilities().to_vec(),
            ranking: outcome.ranking.clone(),
            alternatives,
        }
    }
}

#[derive(Debug, Serialize)]
struct ModelBody<'a> {
    schema: &'static str,
    root: &'a AttrId,
    common_scale: &'a er_core::ScaleId,
    interview_branch: Option<&'a AttrId>,
    scales: &'a [ScaleDef],
    transforms: BTreeMap<&'a TransformId, &'a ScaleTransform>,
    attributes: &'a [AttributeDef],
    alternatives: Vec<String>,
    /// Baseline weights per alternative, keyed by attribute.
    default_weights: BTreeMap<&'a str, BTreeMap<&'a AttrId, f64>>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

pub struct ApiError(StatusCode, ErrorBody);

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match e {
            PipelineError::Override(_) | PipelineError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self(status, ErrorBody { error: e.kind(), message: e.to_string() })
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self(e.status(), ErrorBody { error: "bad_request", message: e.body_text() })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/evaluate", get(evaluate))
        .route("/whatif", post(whatif))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "schema": SCHEMA }))
}

async fn model(State(state): State<Arc<AppState>>) -> Response {
    let doc = &state.inputs.model.document;
    let mut default_weights = BTreeMap::new();
    for a in &state.baseline.alternatives {
        default_weights.insert(a.name.as_str(), a.nodes.iter().map(|(id, n)| (id, n.weight)).collect());
    }
    let body = ModelBody {
        schema: SCHEMA,
        root: &doc.root,
        common_scale: &doc.common_scale,
        interview_branch: doc.interview_branch.as_ref(),
        scales: &doc.scales,
        transforms: state.inputs.model.model.transforms.iter().collect(),
        attributes: &doc.attributes,
        alternatives: state.inputs.alternative_names(),
        default_weights,
    };
    Json(body).into_response()
}

async fn evaluate(State(state): State<Arc<AppState>>) -> Json<EvaluationBody> {
    Json(state.baseline.clone())
}

async fn whatif(
    State(state): State<Arc<AppState>>,
    body: Result<Json<Scenario>, JsonRejection>,
) -> Result<Json<EvaluationBody>, ApiError> {
    let Json(scenario) = body?;
    let outcome = evaluate_scenario(&state.inputs, &scenario)?;
    Ok(Json(EvaluationBody::from_outcome(&outcome)))
}

pub async fn serve(inputs: Inputs, addr: &str) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(inputs)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
