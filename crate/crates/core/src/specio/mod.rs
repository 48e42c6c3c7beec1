//! JSON workflow specs, shipped case-study fixtures and report rendering.

mod build;
pub mod fixtures;
pub mod report;
pub mod schema;

use std::path::Path;

use thiserror::Error;

pub use build::{apply_assignment, build_graph, check_references, optimize_spec, OptimizeOptions, SpecObjective, MAX_LETTERS};
pub use schema::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed spec at `{path}` (line {line}, column {column}): {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown schema_version `{0}` (supported: \"1\")")]
    UnknownSchemaVersion(String),

    #[error("dangling reference: {path} names undeclared {what} `{name}`")]
    DanglingReference {
        path: String,
        what: &'static str,
        name: String,
    },

    #[error("invariant violation at {path}: {source}")]
    Invariant {
        path: String,
        #[source]
        source: crate::Error,
    },

    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Deserializes without semantic validation.
pub fn parse_spec_unchecked(text: &str) -> Result<WorkflowSpec, SpecError> {
    // the version gates everything else, so look at it first
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(text) {
        if let Some(v) = map.get("schema_version") {
            match v.as_str() {
                Some(SCHEMA_VERSION) => {}
                Some(other) => return Err(SpecError::UnknownSchemaVersion(other.to_string())),
                None => return Err(SpecError::UnknownSchemaVersion(v.to_string())),
            }
        }
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: WorkflowSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        SpecError::Syntax {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| SpecError::Syntax {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

/// Parses and validates a spec: references resolve and the graph builds.
pub fn parse_spec(text: &str) -> Result<WorkflowSpec, SpecError> {
    let spec = parse_spec_unchecked(text)?;
    build_graph(&spec)?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<WorkflowSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_spec(&text)
}

/// Pretty JSON; `parse_spec(&emit_spec(s)) == s` for every valid spec.
pub fn emit_spec(spec: &WorkflowSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec types always serialize");
    s.push('\n');
    s
}
