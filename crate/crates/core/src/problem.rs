//! Problem and transform files.
//!
//! See `docs/formats.md` for the JSON schemas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ExprHamiltonian, HamiltonianField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{BaseTensor, TensorField};
use crate::transform::{new_dual_symbols, PointTransform, PushforwardTensor, TransformedHamiltonian};

pub const DEFAULT_PASS_TOL: f64 = 1e-8;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_DISTINCT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    /// `rqq[i][j]` is `R^{i+1}_{j+1}`.
    pub rqq: Vec<Vec<String>>,
    /// `rq0[i]` is `R^{i+1}_0`.
    pub rq0: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub t: [f64; 2],
    pub q: Vec<[f64; 2]>,
    pub p: Vec<[f64; 2]>,
}

impl Domain {
    /// Intervals in coordinate order `(t, q, p)`.
    pub fn intervals(&self) -> Vec<[f64; 2]> {
        std::iter::once(self.t)
            .chain(self.q.iter().copied())
            .chain(self.p.iter().copied())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_pass")]
    pub pass: f64,
    #[serde(default = "default_rank")]
    pub rank: f64,
    #[serde(default = "default_distinct")]
    pub distinct: f64,
}

fn default_pass() -> f64 {
    DEFAULT_PASS_TOL
}
fn default_rank() -> f64 {
    DEFAULT_RANK_TOL
}
fn default_distinct() -> f64 {
    DEFAULT_DISTINCT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pass: DEFAULT_PASS_TOL,
            rank: DEFAULT_RANK_TOL,
            distinct: DEFAULT_DISTINCT_TOL,
        }
    }
}

/// Which coordinates a problem's checks run in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinates {
    /// `(t, q, p)` as written.
    #[default]
    Original,
    /// `(t, Q, P)` of the attached transform; `H` and `R` are the original
    /// ones and are evaluated through the transform.
    Transformed,
}

/// A change of coordinates `(t, q) ↦ (t, Q)` with both directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub n: usize,
    /// `Q^i(t, q)`.
    pub forward: Vec<String>,
    /// `q^i(t, Q)`.
    pub inverse: Vec<String>,
    /// Expected transformed Hamiltonian over `(t, Q, P)`, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_hamiltonian: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub hamiltonian: String,
    pub tensor: TensorSpec,
    pub domain: Domain,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "is_original")]
    pub coordinates: Coordinates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
}

fn is_original(c: &Coordinates) -> bool {
    *c == Coordinates::Original
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn check_interval(label: &str, iv: [f64; 2]) -> Result<()> {
    if !(iv[0].is_finite() && iv[1].is_finite()) || iv[0] > iv[1] {
        return Err(invalid(format!(
            "domain.{label}: [{}, {}] is not a finite closed interval",
            iv[0], iv[1]
        )));
    }
    Ok(())
}

fn positive(label: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("tolerances.{label} must be positive, got {v}")));
    }
    Ok(())
}

/// The parsed, ready-to-evaluate form of a problem.
pub struct Compiled {
    pub n: usize,
    pub hamiltonian: Box<dyn HamiltonianField<f64>>,
    pub tensor: Box<dyn TensorField<f64>>,
    /// Present when checks run in transformed coordinates.
    pub transform: Option<PointTransform>,
    pub reference: Option<ExprHamiltonian>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| invalid(format!("problem file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    pub fn compile(&self) -> Result<Compiled> {
        let n = self.n;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.samples == 0 {
            return Err(invalid("samples must be at least 1"));
        }
        if self.domain.q.len() != n || self.domain.p.len() != n {
            return Err(invalid(format!(
                "domain needs {n} q and {n} p intervals, got {} and {}",
                self.domain.q.len(),
                self.domain.p.len()
            )));
        }
        check_interval("t", self.domain.t)?;
        for (i, iv) in self.domain.q.iter().enumerate() {
            check_interval(&format!("q[{i}]"), *iv)?;
        }
        for (i, iv) in self.domain.p.iter().enumerate() {
            check_interval(&format!("p[{i}]"), *iv)?;
        }
        positive("pass", self.tolerances.pass)?;
        positive("rank", self.tolerances.rank)?;
        positive("distinct", self.tolerances.distinct)?;
        for (k, v) in &self.parameters {
            if !v.is_finite() {
                return Err(invalid(format!("parameter `{k}` is not finite")));
            }
        }
        if self.tensor.rq0.len() != n || self.tensor.rqq.len() != n {
            return Err(invalid(format!("tensor must have {n} rows and {n} dt components")));
        }
        let h = ExprHamiltonian::parse(n, &self.hamiltonian, &self.parameters)?;
        let r = BaseTensor::parse(&self.tensor.rqq, &self.tensor.rq0, &self.parameters)?;
        let transform = match &self.transform {
            Some(ts) => Some(ts.compile(n, &self.parameters)?),
            None => None,
        };
        let reference = match &self.transform {
            Some(ts) => ts.compile_reference(&self.parameters)?,
            None => None,
        };
        match (self.coordinates, transform) {
            (Coordinates::Original, _) => Ok(Compiled {
                n,
                hamiltonian: Box::new(h),
                tensor: Box::new(r),
                transform: None,
                reference,
            }),
            (Coordinates::Transformed, Some(tr)) => Ok(Compiled {
                n,
                hamiltonian: Box::new(TransformedHamiltonian::new(h, tr.clone())?),
                tensor: Box::new(PushforwardTensor::new(r, tr.clone())?),
                transform: Some(tr),
                reference,
            }),
            (Coordinates::Transformed, None) => Err(invalid("coordinates = \"transformed\" requires a transform")),
        }
    }
}

impl TransformSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| invalid(format!("transform file: {e}")))?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transform serializes")
    }

    pub fn compile(&self, n: usize, params: &BTreeMap<String, f64>) -> Result<PointTransform> {
        if self.n != n {
            return Err(invalid(format!("transform has n={}, problem has n={n}", self.n)));
        }
        PointTransform::parse(&self.forward, &self.inverse, params)
    }

    /// The reference Hamiltonian parsed over `(t, Q, P)`.
    pub fn compile_reference(&self, params: &BTreeMap<String, f64>) -> Result<Option<ExprHamiltonian>> {
        let Some(src) = &self.reference_hamiltonian else {
            return Ok(None);
        };
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let table = crate::expr::SymbolTable::new(&new_dual_symbols(self.n), &names)
            .map_err(|e| Error::parse("reference_hamiltonian", e))?;
        let expr = Expr::parse(src, &table).map_err(|e| Error::parse("reference_hamiltonian", e))?;
        Ok(Some(ExprHamiltonian::with_symbols(
            self.n,
            expr,
            params.values().copied().collect(),
        )?))
    }
}
