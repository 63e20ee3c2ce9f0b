//! Scenario files.
//!
//! A scenario file is JSON with four top-level keys:
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "kind": "monte-carlo",
//!   "metadata": { "description": "...", "provenance": "..." },
//!   "body": { ... }
//! }
//! ```
//!
//! `kind` selects the body schema: `deterministic` and `monte-carlo` take a
//! [`MonteCarloScenario`], `comparison` a [`ComparativeModel`], and `sweep` a
//! [`SweepScenario`]. The canonical serialization (sorted keys, two-space
//! indentation, trailing newline) is stable under load/save round trips.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{SubsidyComparativeConfig, TokenizedComparativeConfig};
use crate::model::WasteMode;
use crate::montecarlo::MonteCarloScenario;
use crate::sensitivity::SweepParameter;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    fn from_model(err: crate::Error, prefix: &str) -> Self {
        match err.within(prefix) {
            crate::Error::Config { field, message } => ScenarioError::Invalid { field, message },
            other => ScenarioError::invalid(prefix, other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Deterministic,
    MonteCarlo,
    Comparison,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// One side of the comparative experiment, tagged by `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ComparativeModel {
    Tokenized(TokenizedComparativeConfig),
    Subsidy(SubsidyComparativeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    pub scenario: MonteCarloScenario,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBody {
    Deterministic(MonteCarloScenario),
    MonteCarlo(MonteCarloScenario),
    Comparison(ComparativeModel),
    Sweep(SweepScenario),
}

impl ScenarioBody {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioBody::Deterministic(_) => ScenarioKind::Deterministic,
            ScenarioBody::MonteCarlo(_) => ScenarioKind::MonteCarlo,
            ScenarioBody::Comparison(_) => ScenarioKind::Comparison,
            ScenarioBody::Sweep(_) => ScenarioKind::Sweep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub schema_version: String,
    pub metadata: Metadata,
    pub body: ScenarioBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarioFile {
    schema_version: String,
    kind: ScenarioKind,
    #[serde(default)]
    metadata: Metadata,
    body: serde_json::Value,
}

fn parse_body<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, ScenarioError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "body".to_string() } else { format!("body.{path}") };
        ScenarioError::invalid(field, e.into_inner().to_string())
    })
}

impl ScenarioFile {
    pub fn new(body: ScenarioBody, metadata: Metadata) -> Self {
        ScenarioFile {
            schema_version: SCHEMA_VERSION.to_string(),
            metadata,
            body,
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.body.kind()
    }

    /// Parses and fully validates scenario text.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." { "(document)".to_string() } else { path };
            ScenarioError::invalid(field, inner.to_string())
        })?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "schema_version",
                format!(
                    "unrecognized schema version '{}' (supported: '{SCHEMA_VERSION}')",
                    raw.schema_version
                ),
            ));
        }
        let body = match raw.kind {
            ScenarioKind::Deterministic => ScenarioBody::Deterministic(parse_body(raw.body)?),
            ScenarioKind::MonteCarlo => ScenarioBody::MonteCarlo(parse_body(raw.body)?),
            ScenarioKind::Comparison => ScenarioBody::Comparison(parse_body(raw.body)?),
            ScenarioKind::Sweep => ScenarioBody::Sweep(parse_body(raw.body)?),
        };
        let file = ScenarioFile {
            schema_version: raw.schema_version,
            metadata: raw.metadata,
            body,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match &self.body {
            ScenarioBody::Deterministic(s) => {
                s.validate().map_err(|e| ScenarioError::from_model(e, "body"))?;
                if !s.stochastic_inputs.is_empty() {
                    return Err(ScenarioError::invalid(
                        "body.stochastic_inputs",
                        "a deterministic scenario cannot declare stochastic inputs",
                    ));
                }
                if s.waste_mode != WasteMode::Linear {
                    return Err(ScenarioError::invalid(
                        "body.waste_mode",
                        "a deterministic scenario requires linear waste",
                    ));
                }
                Ok(())
            }
            ScenarioBody::MonteCarlo(s) => s.validate().map_err(|e| ScenarioError::from_model(e, "body")),
            ScenarioBody::Comparison(ComparativeModel::Tokenized(c)) => {
                c.validate().map_err(|e| ScenarioError::from_model(e, "body"))
            }
            ScenarioBody::Comparison(ComparativeModel::Subsidy(c)) => {
                c.validate().map_err(|e| ScenarioError::from_model(e, "body"))
            }
            ScenarioBody::Sweep(s) => {
                s.scenario
                    .validate()
                    .map_err(|e| ScenarioError::from_model(e, "body.scenario"))?;
                if s.values.is_empty() {
                    return Err(ScenarioError::invalid("body.values", "at least one value is required"));
                }
                if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
                    return Err(ScenarioError::invalid(format!("body.values[{i}]"), "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Canonical text form.
    pub fn to_canonical_string(&self) -> String {
        let body = match &self.body {
            ScenarioBody::Deterministic(s) | ScenarioBody::MonteCarlo(s) => serde_json::to_value(s),
            ScenarioBody::Comparison(c) => serde_json::to_value(c),
            ScenarioBody::Sweep(s) => serde_json::to_value(s),
        }
        .expect("scenario bodies serialize");
        let raw = RawScenarioFile {
            schema_version: self.schema_version.clone(),
            kind: self.kind(),
            metadata: self.metadata.clone(),
            body,
        };
        // via Value so every object's keys come out sorted
        let value = serde_json::to_value(&raw).expect("scenario serializes");
        let mut text = serde_json::to_string_pretty(&value).expect("scenario serializes");
        text.push('\n');
        text
    }

    /// The Monte Carlo scenario of a deterministic, monte-carlo or sweep file.
    pub fn monte_carlo(&self) -> Option<&MonteCarloScenario> {
        match &self.body {
            ScenarioBody::Deterministic(s) | ScenarioBody::MonteCarlo(s) => Some(s),
            ScenarioBody::Sweep(s) => Some(&s.scenario),
            ScenarioBody::Comparison(_) => None,
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioFile::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ScenarioParams, TimeGrid};

    fn minimal() -> ScenarioFile {
        ScenarioFile::new(
            ScenarioBody::Deterministic(MonteCarloScenario::deterministic(
                ScenarioParams::default(),
                TimeGrid::new(0.0, 1.0, 5).unwrap(),
            )),
            Metadata {
                description: "minimal".into(),
                ..Default::default()
            },
        )
    }

    #[test]
    fn canonical_round_trip() {
        let text = minimal().to_canonical_string();
        let parsed = ScenarioFile::parse(&text).unwrap();
        assert_eq!(parsed, minimal());
        assert_eq!(parsed.to_canonical_string(), text);
    }

    fn field_of(text: &str) -> String {
        match ScenarioFile::parse(text) {
            Err(ScenarioError::Invalid { field, .. }) => field,
            other => panic!("expected invalid, got {other:?}"),
        }
    }

    #[test]
    fn p_max_violation_names_field() {
        let text = minimal().to_canonical_string().replace("\"p_max\": 0.8", "\"p_max\": 1.5");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("params.p_max"), "{err}");
        assert!(err.contains("[0,1]"), "{err}");
    }

    #[test]
    fn zero_supply_names_breakpoint() {
        let mut file = minimal();
        if let ScenarioBody::Deterministic(s) = &mut file.body {
            s.params.token_supply_schedule.breakpoints = vec![(0.0, 5.0), (2.0, 0.0)];
        }
        let field = field_of(&file.to_canonical_string());
        assert_eq!(field, "body.params.token_supply_schedule.breakpoints[1]");
    }

    #[test]
    fn unknown_schema_version_rejected() {
        let text = minimal().to_canonical_string().replace("\"schema_version\": \"1\"", "\"schema_version\": \"9\"");
        assert_eq!(field_of(&text), "schema_version");
    }

    #[test]
    fn type_errors_carry_paths() {
        let text = minimal().to_canonical_string().replace("\"w_0\": 1000.0", "\"w_0\": \"lots\"");
        assert_eq!(field_of(&text), "body.params.w_0");
        let text = minimal().to_canonical_string().replace("\"eta_0\"", "\"eta_zero\"");
        assert!(field_of(&text).starts_with("body"));
    }

    #[test]
    fn deterministic_rejects_stochastic_inputs() {
        let text = minimal().to_canonical_string().replace(
            "\"stochastic_inputs\": {}",
            "\"stochastic_inputs\": {\"token_value\": {\"kind\": \"constant\", \"value\": 1.0}}",
        );
        assert_eq!(field_of(&text), "body.stochastic_inputs");
    }

    #[test]
    fn bad_distribution_is_named() {
        let mut file = minimal();
        if let ScenarioBody::Deterministic(s) = &file.body {
            file.body = ScenarioBody::MonteCarlo(s.clone());
        }
        let text = file.to_canonical_string().replace(
            "\"stochastic_inputs\": {}",
            "\"stochastic_inputs\": {\"base_cost\": {\"kind\": \"normal\", \"mean\": 1.0, \"sd\": -2.0}}",
        );
        assert_eq!(field_of(&text), "body.stochastic_inputs.base_cost.sd");
    }

    #[test]
    fn comparison_models_parse() {
        for model in [
            ComparativeModel::Tokenized(TokenizedComparativeConfig::default()),
            ComparativeModel::Subsidy(SubsidyComparativeConfig::default()),
        ] {
            let file = ScenarioFile::new(ScenarioBody::Comparison(model), Metadata::default());
            let text = file.to_canonical_string();
            assert!(text.contains("\"model\""));
            assert_eq!(ScenarioFile::parse(&text).unwrap(), file);
        }
        let bad = r#"{"schema_version":"1","kind":"comparison","body":{"model":"subsidy","fixed_reward":10,"participation":2,"volume":1000,"op_cost_mean":50000,"op_cost_sd":1000}}"#;
        assert_eq!(field_of(bad), "body.participation");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_scenario(Path::new("/nonexistent/definitely/missing.scenario")).unwrap_err();
        assert!(matches!(err, ScenarioError::Io { .. }));
    }
}
