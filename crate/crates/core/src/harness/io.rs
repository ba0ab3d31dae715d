//! JSON instance files.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "start": [1.0, 1.0],
//!   "feasible_set": {"type": "ball", "center": [0.0, 0.0], "radius": 2.0},
//!   "functions": [
//!     {"type": "quadratic", "diagonal": [2.0, 8.0], "center": [0.0, 0.0]},
//!     {"type": "powernorm", "scale": 1.0, "exponent": 1.5, "center": [0.5, 0.0], "kappa": 1.0},
//!     {"type": "subspace", "base": [0.0, 1.0], "basis": [[1.0, 0.0]],
//!      "inner": {"type": "quadratic", "diagonal": [2.0], "center": [0.3]}}
//!   ],
//!   "metadata": {"seed": 7}
//! }
//! ```
//!
//! Quadratics take either `diagonal` or a full row-major `hessian`. Numbers
//! are written in shortest round-trip form, so save followed by load
//! reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::functions::{ConvexFunction, PowerNorm, Quadratic, SubspaceIndicator};
use crate::geometry::{AffineSubspace, FeasibleSet, Halfspace, Point};
use crate::instance::{Instance, Metadata};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    dimension: usize,
    start: Vec<f64>,
    feasible_set: SetSpec,
    functions: Vec<FunctionSpec>,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SetSpec {
    Whole,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Affine {
        base: Vec<f64>,
        basis: Vec<Vec<f64>>,
    },
    Halfspaces {
        halfspaces: Vec<HalfspaceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        witness: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HalfspaceSpec {
    normal: Vec<f64>,
    offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum FunctionSpec {
    Quadratic(QuadraticSpec),
    Powernorm {
        scale: f64,
        exponent: f64,
        center: Vec<f64>,
        kappa: f64,
    },
    Subspace {
        base: Vec<f64>,
        basis: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<FunctionSpec>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuadraticSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hessian: Option<Vec<Vec<f64>>>,
    center: Vec<f64>,
    #[serde(default)]
    offset: f64,
}

fn schema(path: impl Into<String>, message: impl ToString) -> Error {
    Error::Schema { path: path.into(), message: message.to_string() }
}

fn point(path: &str, v: &[f64], d: usize) -> Result<Point> {
    if v.len() != d {
        return Err(schema(path, format!("expected {d} coordinates, found {}", v.len())));
    }
    Ok(Point::from_column_slice(v))
}

fn subspace(path: &str, base: &[f64], basis: &[Vec<f64>], d: usize) -> Result<AffineSubspace> {
    let base = point(&format!("{path}.base"), base, d)?;
    let basis = basis
        .iter()
        .enumerate()
        .map(|(i, b)| point(&format!("{path}.basis[{i}]"), b, d))
        .collect::<Result<Vec<_>>>()?;
    AffineSubspace::new(base, basis).map_err(|e| schema(format!("{path}.basis"), e))
}

fn quadratic(path: &str, q: &QuadraticSpec, d: usize) -> Result<Quadratic> {
    let center = point(&format!("{path}.center"), &q.center, d)?;
    let built = match (&q.diagonal, &q.hessian) {
        (Some(diag), None) => {
            if diag.len() != d {
                return Err(schema(format!("{path}.diagonal"), format!("expected {d} entries, found {}", diag.len())));
            }
            Quadratic::diagonal(diag, center, q.offset)
        }
        (None, Some(rows)) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(schema(format!("{path}.hessian"), format!("expected a {d}x{d} matrix")));
            }
            let h = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
            Quadratic::new(h, center, q.offset)
        }
        _ => return Err(schema(path, "quadratic needs exactly one of `diagonal` or `hessian`")),
    };
    built.map_err(|e| schema(path, e))
}

fn function(path: &str, spec: &FunctionSpec, d: usize) -> Result<ConvexFunction> {
    Ok(match spec {
        FunctionSpec::Quadratic(q) => quadratic(path, q, d)?.into(),
        FunctionSpec::Powernorm { scale, exponent, center, kappa } => {
            let center = point(&format!("{path}.center"), center, d)?;
            PowerNorm::new(*scale, *exponent, center, *kappa).map_err(|e| schema(path, e))?.into()
        }
        FunctionSpec::Subspace { base, basis, inner } => {
            let support = subspace(path, base, basis, d)?;
            let inner = match inner.as_deref() {
                None => None,
                Some(FunctionSpec::Quadratic(q)) => Some(quadratic(&format!("{path}.inner"), q, support.dim())?),
                Some(_) => return Err(schema(format!("{path}.inner"), "inner function must be a quadratic")),
            };
            SubspaceIndicator::new(support, inner).map_err(|e| schema(path, e))?.into()
        }
    })
}

fn from_file(file: InstanceFile) -> Result<Instance> {
    let d = file.dimension;
    if d == 0 {
        return Err(schema("dimension", "must be positive"));
    }
    let start = point("start", &file.start, d)?;
    let feasible = match &file.feasible_set {
        SetSpec::Whole => FeasibleSet::WholeSpace,
        SetSpec::Ball { center, radius } => {
            FeasibleSet::ball(point("feasible_set.center", center, d)?, *radius).map_err(|e| schema("feasible_set.radius", e))?
        }
        SetSpec::Affine { base, basis } => FeasibleSet::Affine(subspace("feasible_set", base, basis, d)?),
        SetSpec::Halfspaces { halfspaces, witness } => {
            let hs = halfspaces
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    let path = format!("feasible_set.halfspaces[{i}]");
                    Halfspace::new(point(&format!("{path}.normal"), &h.normal, d)?, h.offset).map_err(|e| schema(path, e))
                })
                .collect::<Result<Vec<_>>>()?;
            let witness = match witness {
                Some(w) => point("feasible_set.witness", w, d)?,
                None => start.clone(),
            };
            FeasibleSet::halfspaces(hs, witness).map_err(|e| schema("feasible_set", e))?
        }
    };
    let functions = file
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| function(&format!("functions[{i}]"), f, d))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(start, feasible, functions)
        .map(|inst| inst.with_metadata(file.metadata))
        .map_err(|e| schema("start", e))
}

fn quadratic_spec(q: &Quadratic) -> QuadraticSpec {
    let (diagonal, hessian) = if q.is_diagonal() {
        (Some(q.hessian().diagonal().iter().copied().collect()), None)
    } else {
        let h = q.hessian();
        (None, Some((0..h.nrows()).map(|i| h.row(i).iter().copied().collect()).collect()))
    };
    QuadraticSpec { diagonal, hessian, center: q.center().iter().copied().collect(), offset: q.offset() }
}

fn to_vec(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

fn to_file(inst: &Instance) -> Result<InstanceFile> {
    let feasible_set = match &inst.feasible {
        FeasibleSet::WholeSpace => SetSpec::Whole,
        FeasibleSet::Ball { center, radius } => SetSpec::Ball { center: to_vec(center), radius: *radius },
        FeasibleSet::Affine(a) => SetSpec::Affine { base: to_vec(a.base()), basis: a.basis().iter().map(to_vec).collect() },
        FeasibleSet::Halfspaces { halfspaces, witness } => SetSpec::Halfspaces {
            halfspaces: halfspaces.iter().map(|h| HalfspaceSpec { normal: to_vec(&h.normal), offset: h.offset }).collect(),
            witness: Some(to_vec(witness)),
        },
    };
    let functions = inst
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Ok(match f {
                ConvexFunction::Quadratic(q) => FunctionSpec::Quadratic(quadratic_spec(q)),
                ConvexFunction::PowerNorm(p) => FunctionSpec::Powernorm {
                    scale: p.scale(),
                    exponent: p.exponent(),
                    center: to_vec(p.center()),
                    kappa: p.kappa(),
                },
                ConvexFunction::Subspace(s) => FunctionSpec::Subspace {
                    base: to_vec(s.support().base()),
                    basis: s.support().basis().iter().map(to_vec).collect(),
                    inner: s.inner().map(|q| Box::new(FunctionSpec::Quadratic(quadratic_spec(q)))),
                },
                ConvexFunction::BlackBox(_) => {
                    return Err(schema(format!("functions[{i}]"), "black-box functions cannot be serialized"))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstanceFile {
        dimension: inst.dim(),
        start: to_vec(&inst.start),
        feasible_set,
        functions,
        metadata: inst.metadata.clone(),
    })
}

/// Parses an instance from JSON text. Errors name the offending field.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { String::new() } else { path }, e.into_inner())
    })?;
    from_file(file)
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    serde_json::to_string_pretty(&to_file(inst)?).map_err(|e| schema("", e))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let mut text = instance_to_json(inst)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
