//! JSON descriptions of operators, part maps, and scenario catalogs.
//!
//! An operator spec carries `n`, `k`, `dimE`, `dimF` and a coefficient
//! list of `{ "alpha": [...], "matrix": [[...], ...] }` entries with
//! row-major matrices; a part map carries `dimV`, `dimVtilde`, `matrix`.
//! A preset name is accepted anywhere in place of the explicit object.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::Scenario;
use crate::symbols::{presets, DiffOp, MultiIndex, PartMap};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub alpha: Vec<u32>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDef {
    pub n: usize,
    pub k: u32,
    #[serde(rename = "dimE")]
    pub dim_e: usize,
    #[serde(rename = "dimF")]
    pub dim_f: usize,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Preset(String),
    Explicit(OperatorDef),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartMapDef {
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimVtilde")]
    pub dim_vtilde: usize,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartMapSpec {
    Preset(String),
    Explicit(PartMapDef),
}

/// An operator with an optional part map, as stored in a spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partmap: Option<PartMapSpec>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Format(format!("{what}: matrix must be nonempty")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what}: ragged matrix rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{what}: matrix entries must be finite")));
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

pub fn resolve_operator(spec: &OperatorSpec) -> Result<DiffOp> {
    match spec {
        OperatorSpec::Preset(name) => presets::operator_preset(name),
        OperatorSpec::Explicit(def) => {
            let coeffs: Result<Vec<_>> = def
                .coeffs
                .iter()
                .map(|entry| {
                    let m = rows_to_matrix(&entry.matrix, "operator coefficient")?;
                    Ok((MultiIndex::new(entry.alpha.clone()), m))
                })
                .collect();
            DiffOp::new(def.n, def.k, def.dim_e, def.dim_f, coeffs?)
        }
    }
}

/// Resolves a part map; presets adapt to the operator's domain dimension.
pub fn resolve_partmap(spec: &PartMapSpec, dim_v: usize) -> Result<PartMap> {
    match spec {
        PartMapSpec::Preset(name) => presets::partmap_preset(name, dim_v),
        PartMapSpec::Explicit(def) => {
            let m = rows_to_matrix(&def.matrix, "part map")?;
            if m.nrows() != def.dim_vtilde || m.ncols() != def.dim_v {
                return Err(Error::Format(format!(
                    "part map matrix is {}x{}, header says {}x{}",
                    m.nrows(),
                    m.ncols(),
                    def.dim_vtilde,
                    def.dim_v
                )));
            }
            if def.dim_v != dim_v {
                return Err(Error::shape(format!(
                    "part map domain {} differs from operator domain {dim_v}",
                    def.dim_v
                )));
            }
            PartMap::new(m)
        }
    }
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Format(format!(
            "{what}: {} at line {}, column {}",
            e,
            e.line(),
            e.column()
        ))
    })
}

/// Parses a spec file, also accepting the inline form
/// `presets:<partmap>,<operator>` or `presets:<operator>`.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    if let Some(rest) = text.trim().strip_prefix("presets:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        return match parts.as_slice() {
            [op] => Ok(ProblemSpec {
                operator: OperatorSpec::Preset(op.to_string()),
                partmap: None,
            }),
            [pm, op] => Ok(ProblemSpec {
                operator: OperatorSpec::Preset(op.to_string()),
                partmap: Some(PartMapSpec::Preset(pm.to_string())),
            }),
            _ => Err(Error::Format(
                "preset syntax is presets:<operator> or presets:<partmap>,<operator>".into(),
            )),
        };
    }
    parse_json(text, "operator spec")
}

/// One catalog entry; `p` defaults to 1 when omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDef {
    pub label: String,
    pub partmap: PartMapSpec,
    pub operator: OperatorSpec,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogFile {
    pub scenarios: Vec<ScenarioDef>,
}

pub fn parse_catalog(text: &str) -> Result<CatalogFile> {
    parse_json(text, "scenario catalog")
}

pub fn resolve_scenario(def: &ScenarioDef) -> Result<Scenario> {
    let b = resolve_operator(&def.operator)?;
    let a = resolve_partmap(&def.partmap, b.dim_e())?;
    Scenario::new(def.label.clone(), a, b, def.p)
}

/// The shipped combinations.
pub fn builtin_catalog() -> CatalogFile {
    let entry = |label: &str, pm: &str, op: &str, p: f64| ScenarioDef {
        label: label.to_string(),
        partmap: PartMapSpec::Preset(pm.to_string()),
        operator: OperatorSpec::Preset(op.to_string()),
        p,
    };
    CatalogFile {
        scenarios: vec![
            entry("tr-Curl-3d", "tr", "matrix_curl3", 1.0),
            entry("tr-Curl-3d-p2", "tr", "matrix_curl3", 2.0),
            entry("sym-Curl-3d", "sym", "matrix_curl3", 2.0),
            entry("dev-Div-3d", "dev", "matrix_div", 2.0),
            entry("dev-symCurl-3d", "dev", "sym_curl3", 2.0),
            entry("curl-only-3d", "zero", "curl3", 2.0),
        ],
    }
}
