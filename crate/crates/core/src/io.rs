//! File formats.
//!
//! Exact instances are JSON documents:
//!
//! ```json
//! {
//!   "field": {"kind": "prime", "p": 11},
//!   "n": 3,
//!   "k": 1,
//!   "forms": [
//!     {"degree": 2, "coeffs": {"1 0 0 1": "1", "0 1 1 0": "-1"}},
//!     {"degree": 2, "gram": [["0", "1/2"], ["1/2", "0"]]}
//!   ],
//!   "plane": [[1, 0, 0, 0], [0, 1, 0, 0]]
//! }
//! ```
//!
//! Scalars are strings (`"num/den"` or integers) or JSON integers. Population
//! instances for stationary subspace analysis use
//! `{"means": [...], "covariances": [[[...]]], "ground_truth": [[...]]}` and
//! epoch samples are CSV files with header `x0,...,xn`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exactla::{Field, FieldDesc, Matrix, PrimeField, Rationals};
use crate::forms::{form_of, Form, GramMatrix, PolySystem};
use crate::grass::{canonicalize, FloatPlane, Plane};
use crate::ssa::{EpochCumulants, SsaInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn parse<F: Field>(&self, field: &F) -> Result<F::Elem> {
        match self {
            Scalar::Int(v) => Ok(field.from_i64(*v)),
            Scalar::Text(s) => field.parse(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormRecord {
    Coeffs {
        degree: u32,
        coeffs: BTreeMap<String, Scalar>,
    },
    Gram {
        degree: u32,
        gram: Vec<Vec<Scalar>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub field: FieldDesc,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub forms: Vec<FormRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<Vec<Vec<Scalar>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Value>,
}

/// A polynomial system over an exact field, optionally with a marked plane.
#[derive(Clone, Debug)]
pub struct ExactInstance<F: Field> {
    pub system: PolySystem<F>,
    pub plane: Option<Plane<F>>,
    pub provenance: Option<Value>,
}

#[derive(Clone, Debug)]
pub enum AnyInstance {
    Rational(ExactInstance<Rationals>),
    Prime(ExactInstance<PrimeField>),
}

impl AnyInstance {
    pub fn field_desc(&self) -> FieldDesc {
        match self {
            AnyInstance::Rational(_) => FieldDesc::Rational,
            AnyInstance::Prime(i) => i.system.field().desc(),
        }
    }
}

fn parse_matrix<F: Field>(field: &F, rows: &[Vec<Scalar>]) -> Result<Matrix<F>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("matrix rows have different lengths".into()));
    }
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|c| c.parse(field)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_rows(field, rows))
}

fn parse_exponent(key: &str, n: usize) -> Result<Vec<u32>> {
    let e = key
        .split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad exponent {key:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if e.len() != n + 1 {
        return Err(Error::Parse(format!(
            "exponent {key:?} needs {} entries",
            n + 1
        )));
    }
    Ok(e)
}

fn decode_form<F: Field>(field: &F, n: usize, rec: &FormRecord) -> Result<Form<F>> {
    match rec {
        FormRecord::Coeffs { degree, coeffs } => {
            let terms = coeffs
                .iter()
                .map(|(k, v)| Ok((parse_exponent(k, n)?, v.parse(field)?)))
                .collect::<Result<Vec<_>>>()?;
            Form::from_terms(field, n, *degree, terms)
        }
        FormRecord::Gram { degree, gram } => {
            if *degree != 2 {
                return Err(Error::Parse(format!(
                    "a Gram matrix describes a quadric, got degree {degree}"
                )));
            }
            let m = parse_matrix(field, gram)?;
            if m.rows() != n + 1 || m.cols() != n + 1 {
                return Err(Error::Parse(format!("Gram matrix must be {0}x{0}", n + 1)));
            }
            form_of(&GramMatrix::new(m)?)
        }
    }
}

fn decode<F: Field>(field: &F, file: &InstanceFile) -> Result<ExactInstance<F>> {
    let forms = file
        .forms
        .iter()
        .map(|r| decode_form(field, file.n, r))
        .collect::<Result<Vec<_>>>()?;
    let system = PolySystem::new(forms)?;
    let plane = match &file.plane {
        None => None,
        Some(rows) => {
            let m = parse_matrix(field, rows)?;
            if m.cols() != file.n + 1 {
                return Err(Error::Parse(format!(
                    "plane rows need {} entries",
                    file.n + 1
                )));
            }
            Some(canonicalize(&m)?)
        }
    };
    if let (Some(k), Some(p)) = (file.k, &plane) {
        if p.k() != k {
            return Err(Error::Parse(format!(
                "plane has dimension {}, but k = {k}",
                p.k()
            )));
        }
    }
    Ok(ExactInstance {
        system,
        plane,
        provenance: file.provenance.clone(),
    })
}

impl InstanceFile {
    pub fn decode(&self) -> Result<AnyInstance> {
        match self.field {
            FieldDesc::Rational => Ok(AnyInstance::Rational(decode(&Rationals, self)?)),
            FieldDesc::Prime { p } => Ok(AnyInstance::Prime(decode(&PrimeField::new(p)?, self)?)),
            FieldDesc::Float64 => Err(Error::Parse(
                "exact instances need a rational or prime field".into(),
            )),
        }
    }

    pub fn encode<F: Field>(inst: &ExactInstance<F>) -> Self {
        let field = inst.system.field();
        let forms = inst
            .system
            .forms()
            .iter()
            .map(|f| FormRecord::Coeffs {
                degree: f.degree(),
                coeffs: f
                    .terms()
                    .map(|(e, c)| {
                        let key = e.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
                        (key, Scalar::Text(field.format(c)))
                    })
                    .collect(),
            })
            .collect();
        let plane = inst.plane.as_ref().map(|p| {
            p.basis()
                .to_rows()
                .iter()
                .map(|r| r.iter().map(|c| Scalar::Text(field.format(c))).collect())
                .collect()
        });
        InstanceFile {
            field: field.desc(),
            n: inst.system.n(),
            k: inst.plane.as_ref().map(Plane::k),
            forms,
            plane,
            provenance: inst.provenance.clone(),
        }
    }
}

pub fn parse_instance(json: &str) -> Result<AnyInstance> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.decode()
}

pub fn instance_to_json<F: Field>(inst: &ExactInstance<F>) -> String {
    serde_json::to_string_pretty(&InstanceFile::encode(inst)).expect("instance serializes")
}

/// Parses a plane given as rows of scalars, e.g. `[[1,0,0,0],[0,1,0,0]]`.
pub fn parse_plane<F: Field>(field: &F, json: &str) -> Result<Plane<F>> {
    let rows: Vec<Vec<Scalar>> =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    canonicalize(&parse_matrix(field, &rows)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationFile {
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_constraint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Value>,
}

fn rows_to_dmatrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), width, |r, c| rows[r][c]))
}

fn dmatrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl PopulationFile {
    pub fn decode(&self) -> Result<SsaInstance> {
        if self.means.len() != self.covariances.len() {
            return Err(Error::Parse(format!(
                "{} means but {} covariances",
                self.means.len(),
                self.covariances.len()
            )));
        }
        let epochs = self
            .means
            .iter()
            .zip(&self.covariances)
            .map(|(m, c)| EpochCumulants::new(DVector::from_row_slice(m), rows_to_dmatrix(c)?))
            .collect::<Result<Vec<_>>>()?;
        let ground_truth = match &self.ground_truth {
            Some(rows) => Some(FloatPlane::new(&rows_to_dmatrix(rows)?)?),
            None => None,
        };
        SsaInstance::new(epochs, ground_truth, self.rank_constraint)
    }

    pub fn encode(inst: &SsaInstance, provenance: Option<Value>) -> Self {
        PopulationFile {
            means: inst
                .epochs
                .iter()
                .map(|e| e.mean.iter().copied().collect())
                .collect(),
            covariances: inst
                .epochs
                .iter()
                .map(|e| dmatrix_to_rows(&e.covariance))
                .collect(),
            ground_truth: inst
                .ground_truth
                .as_ref()
                .map(|p| dmatrix_to_rows(p.basis())),
            rank_constraint: inst.rank_constraint,
            provenance,
        }
    }
}

pub fn parse_population(json: &str) -> Result<SsaInstance> {
    let file: PopulationFile =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    file.decode()
}

/// Reads one epoch of samples: header `x0,...,xn`, one observation per row.
pub fn read_epoch_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    for (i, h) in headers.iter().enumerate() {
        if h.trim() != format!("x{i}") {
            return Err(Error::Parse(format!(
                "column {i} should be named x{i}, found {h:?}"
            )));
        }
    }
    let width = headers.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        for cell in rec.iter() {
            data.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {rows}: bad number {cell:?}")))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, width, &data))
}

pub fn write_epoch_csv<W: Write>(writer: W, samples: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record((0..samples.ncols()).map(|i| format!("x{i}")))
        .map_err(io)?;
    for row in samples.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}
