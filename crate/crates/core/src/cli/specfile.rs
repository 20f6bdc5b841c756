//! JSON manifold-spec files.
//!
//! A spec file declares a chart (coordinates, sampling box, metric entries as
//! expression strings) and optionally a structure block:
//!
//! ```json
//! {
//!   "name": "sasakian-r3",
//!   "dim": 3,
//!   "coords": ["x", "y", "z"],
//!   "box": [[-1, 1], [-1, 1], [-1, 1]],
//!   "metric": [["1/4 + y^2/4", "0", "-y/4"], ["0", "1/4", "0"], ["-y/4", "0", "1/4"]],
//!   "structure": { "kind": "almost-contact", "phi": [...], "xi": [...], "eta": [...] },
//!   "constants": { "alpha": 1 },
//!   "conventions": { "d": "half" },
//!   "expect_fail": false
//! }
//! ```
//!
//! `structure.kind` is `almost-contact` (`phi`, `xi`, `eta`) or
//! `almost-complex` (`J`, `omega`). Unknown keys are rejected.

use crate::expr::{parse, Expr, ParseError};
use crate::structures::{
    check_almost_contact, check_hermitian, check_metric_compatibility, AlmostComplexStructure,
    AlmostContactStructure, JConvention, Samples, StructureError, ALGEBRAIC_TOL,
};
use crate::tensor::{ChartedManifold, DConvention, EndoField, GeometryError, OneFormField, ScalarField, VectorField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

/// Points probed at load time for finiteness and positive definiteness.
const LOAD_PROBES: usize = 16;
const LOAD_SEED: u64 = 0x5eed;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{origin}: cannot read: {source}")]
    Io { origin: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Json { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: {field}: {source}")]
    Expr { origin: String, field: String, source: ParseError },
    #[error("{origin}: {source}")]
    Geometry { origin: String, source: GeometryError },
    #[error("{origin}: {source}")]
    Structure { origin: String, source: StructureError },
    #[error("{origin}: {message}")]
    Semantic { origin: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpecFile {
    pub name: String,
    #[serde(default)]
    pub dim: Option<usize>,
    pub coords: Vec<String>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub metric: Vec<Vec<String>>,
    #[serde(default)]
    pub structure: Option<StructureBlock>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub conventions: Conventions,
    #[serde(default)]
    pub expect_fail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StructureBlock {
    AlmostContact { phi: Vec<Vec<String>>, xi: Vec<String>, eta: Vec<String> },
    AlmostComplex {
        #[serde(rename = "J")]
        j: Vec<Vec<String>>,
        omega: Vec<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Warp function, an expression over the base coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_coord: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_box: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conventions {
    #[serde(default)]
    pub d: DConvention,
    #[serde(default, rename = "J")]
    pub j: JConvention,
}

#[derive(Debug, Clone)]
pub enum LoadedStructure {
    Contact(AlmostContactStructure),
    Complex(AlmostComplexStructure),
}

/// A validated spec: the chart, its structure, and the source hash.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub file: ManifoldSpecFile,
    pub manifold: ChartedManifold,
    pub structure: Option<LoadedStructure>,
    /// Hex SHA-256 of the source bytes.
    pub hash: String,
    /// Load-time structure checks that failed on an `expect_fail` spec.
    pub expected_failures: Vec<String>,
}

impl LoadedSpec {
    pub fn contact(&self) -> Option<&AlmostContactStructure> {
        match &self.structure {
            Some(LoadedStructure::Contact(s)) => Some(s),
            _ => None,
        }
    }

    pub fn complex(&self) -> Option<&AlmostComplexStructure> {
        match &self.structure {
            Some(LoadedStructure::Complex(a)) => Some(a),
            _ => None,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.file.constants.alpha.unwrap_or(1.0)
    }

    pub fn warp(&self) -> Result<Option<ScalarField>, SpecError> {
        let origin = &self.file.name;
        match &self.file.constants.warp {
            None => Ok(None),
            Some(text) => {
                let e = parse_field(origin, "constants.warp", text)?;
                self.manifold
                    .check_expr(&e, "warp")
                    .map_err(|source| SpecError::Geometry { origin: origin.clone(), source })?;
                Ok(Some(ScalarField::new(e)))
            }
        }
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<LoadedSpec, SpecError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io { origin: origin.clone(), source })?;
    parse_spec(&text, &origin)
}

fn parse_field(origin: &str, field: &str, text: &str) -> Result<Expr, SpecError> {
    parse(text).map_err(|source| SpecError::Expr {
        origin: origin.to_string(),
        field: field.to_string(),
        source,
    })
}

fn parse_vec(origin: &str, field: &str, items: &[String]) -> Result<Vec<Expr>, SpecError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| parse_field(origin, &format!("{field}[{i}]"), s))
        .collect()
}

fn parse_matrix(origin: &str, field: &str, rows: &[Vec<String>]) -> Result<Vec<Vec<Expr>>, SpecError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| parse_vec(origin, &format!("{field}[{i}]"), r))
        .collect()
}

pub fn parse_spec(text: &str, origin: &str) -> Result<LoadedSpec, SpecError> {
    let file: ManifoldSpecFile = serde_json::from_str(text).map_err(|e| SpecError::Json {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    build(file, origin, hash)
}

fn build(file: ManifoldSpecFile, origin: &str, hash: String) -> Result<LoadedSpec, SpecError> {
    let semantic = |message: String| SpecError::Semantic { origin: origin.to_string(), message };
    let geometry = |source: GeometryError| SpecError::Geometry { origin: origin.to_string(), source };
    let structure_err = |source: StructureError| SpecError::Structure { origin: origin.to_string(), source };

    if let Some(d) = file.dim {
        if d != file.coords.len() {
            return Err(semantic(format!("dim is {d} but {} coordinates are declared", file.coords.len())));
        }
    }
    let metric = parse_matrix(origin, "metric", &file.metric)?;
    let manifold = ChartedManifold::new(file.name.clone(), file.coords.clone(), file.bounds.clone(), metric)
        .map_err(geometry)?;

    let probes = Samples::generate(&manifold, LOAD_SEED, LOAD_PROBES);
    for s in probes.iter() {
        manifold.metric_at(&s.point).map_err(geometry)?;
    }

    let structure = match &file.structure {
        None => None,
        Some(StructureBlock::AlmostContact { phi, xi, eta }) => {
            let s = AlmostContactStructure::new(
                manifold.clone(),
                EndoField::new(parse_matrix(origin, "structure.phi", phi)?),
                VectorField::new(parse_vec(origin, "structure.xi", xi)?),
                OneFormField::new(parse_vec(origin, "structure.eta", eta)?),
            )
            .map_err(structure_err)?;
            Some(LoadedStructure::Contact(s))
        }
        Some(StructureBlock::AlmostComplex { j, omega }) => {
            let a = AlmostComplexStructure::new(
                manifold.clone(),
                EndoField::new(parse_matrix(origin, "structure.J", j)?),
                OneFormField::new(parse_vec(origin, "structure.omega", omega)?),
                file.conventions.j,
            )
            .map_err(structure_err)?;
            Some(LoadedStructure::Complex(a))
        }
    };

    // Every component must evaluate to a finite value across the box.
    if let Some(st) = &structure {
        for s in probes.iter() {
            let p = &s.point;
            match st {
                LoadedStructure::Contact(c) => {
                    c.phi.eval(&manifold, p).map_err(geometry)?;
                    c.xi.eval(&manifold, p).map_err(geometry)?;
                    c.eta.eval(&manifold, p).map_err(geometry)?;
                }
                LoadedStructure::Complex(a) => {
                    a.j.eval(&manifold, p).map_err(geometry)?;
                    a.omega.eval(&manifold, p).map_err(geometry)?;
                }
            }
        }
    }

    let mut expected_failures = Vec::new();
    if let Some(st) = &structure {
        let reports = match st {
            LoadedStructure::Contact(c) => vec![
                check_almost_contact(c, &probes, ALGEBRAIC_TOL).map_err(structure_err)?,
                check_metric_compatibility(c, &probes, ALGEBRAIC_TOL).map_err(structure_err)?,
            ],
            LoadedStructure::Complex(a) => vec![check_hermitian(a, &probes, ALGEBRAIC_TOL).map_err(structure_err)?],
        };
        for r in reports.iter().filter(|r| !r.passed()) {
            if file.expect_fail {
                expected_failures.push(r.name.clone());
            } else {
                return Err(semantic(format!(
                    "declared structure fails {} (max residual {:e}); mark the spec expect_fail if intended",
                    r.name, r.max_residual
                )));
            }
        }
    }

    Ok(LoadedSpec { file, manifold, structure, hash, expected_failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"name":"m","coords":["x"],"box":[[0,1]],"metric":[["1+x^2"]]}"#;

    #[test]
    fn loads_minimal() {
        let s = parse_spec(MINIMAL, "inline").unwrap();
        assert_eq!(s.manifold.dim(), 1);
        assert_eq!(s.hash.len(), 64);
    }

    #[test]
    fn syntax_error_has_offset() {
        let text = MINIMAL.replace("1+x^2", "x^");
        match parse_spec(&text, "inline") {
            Err(SpecError::Expr { field, source, .. }) => {
                assert_eq!(field, "metric[0][0]");
                assert_eq!(source.offset(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_coordinate_rejected() {
        let text = MINIMAL.replace("1+x^2", "1+q^2");
        assert!(matches!(
            parse_spec(&text, "inline"),
            Err(SpecError::Geometry { source: GeometryError::UnknownCoordinate { .. }, .. })
        ));
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let text = r#"{"name":"m","coords":["x","y"],"box":[[0,1],[0,1]],"metric":[["1","x"],["0","1"]]}"#;
        assert!(matches!(
            parse_spec(text, "inline"),
            Err(SpecError::Geometry { source: GeometryError::AsymmetricMetric { .. }, .. })
        ));
    }

    #[test]
    fn non_finite_on_box_rejected() {
        let text = MINIMAL.replace("1+x^2", "1/x").replace("[[0,1]]", "[[0,0]]");
        assert!(parse_spec(&text, "inline").is_err());
    }

    #[test]
    fn json_errors_have_location() {
        match parse_spec("{\n\"name\": }", "inline") {
            Err(SpecError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"name\"", "\"nmae\":1,\"name\"");
        assert!(matches!(parse_spec(&text, "inline"), Err(SpecError::Json { .. })));
    }
}
