//! The shipped two-degree-of-freedom example: a time-dependent Hamiltonian
//! with cubic potential, the torsion-free tensor certifying its separability,
//! the linear change of coordinates that diagonalizes that tensor, and the
//! separated Hamiltonian in the new coordinates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dynamics::ExprHamiltonian;
use crate::error::{Error, Result};
use crate::geometry::BaseTensor;
use crate::problem::{Coordinates, Domain, ProblemSpec, TensorSpec, Tolerances, TransformSpec};

pub const HAMILTONIAN: &str = "0.5*p1^2 + 0.5*t*p2^2 + 2*t^3*(t*q1^2 + q2^2) \
     + (c*t^2 - t^(-1))*p1*q1 + (c*t^2 - 0.5*t^(-1))*p2*q2 \
     + alpha1*t^5*q1^3 + alpha2*t^(9/2)*q1^2*q2 + 3*alpha1*t^4*q1*q2^2 + (1/3)*alpha2*t^(7/2)*q2^3";

/// Same Hamiltonian with the `q1 q2²` coefficient changed from `3 α1 t⁴` to `2 α1 t⁴`.
pub const HAMILTONIAN_PERTURBED: &str = "0.5*p1^2 + 0.5*t*p2^2 + 2*t^3*(t*q1^2 + q2^2) \
     + (c*t^2 - t^(-1))*p1*q1 + (c*t^2 - 0.5*t^(-1))*p2*q2 \
     + alpha1*t^5*q1^3 + alpha2*t^(9/2)*q1^2*q2 + 2*alpha1*t^4*q1*q2^2 + (1/3)*alpha2*t^(7/2)*q2^3";

/// Separated Hamiltonian in the diagonalizing coordinates `(t, Q, P)`.
pub const REFERENCE_K: &str = "t^2*(P1^2 + P2^2 + Q1^2 + Q2^2 + c*(P1*Q1 + P2*Q2) \
     + 0.5*alpha1*(Q1^3 + Q2^3) + (1/6)*alpha2*(Q1^3 - Q2^3))";

pub const TRANSFORM_FORWARD: [&str; 2] = ["t*q1 + t^(1/2)*q2", "t*q1 - t^(1/2)*q2"];
pub const TRANSFORM_INVERSE: [&str; 2] = ["(Q1 + Q2)/(2*t)", "(Q1 - Q2)/(2*t^(1/2))"];

pub fn default_params() -> BTreeMap<String, f64> {
    [("alpha1", 1.0), ("alpha2", 1.0), ("c", 1.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// Component sources `(R^i_j, R^i_0)` of the tensor ansatz with constant
/// `σ1 = sigma1`; `σ2 = t` unless `constant_sigma2` (then `σ2 = 1`, which
/// breaks the torsion condition).
pub fn tensor_sources(sigma1: f64, constant_sigma2: bool) -> (Vec<Vec<String>>, Vec<String>) {
    let s1 = format!("{sigma1:?}");
    let sigma2 = if constant_sigma2 { "q2" } else { "t*q2" };
    (
        vec![
            vec!["t*q1".to_string(), format!("{s1}*q2")],
            vec![sigma2.to_string(), "t*q1".to_string()],
        ],
        vec![format!("q1^2 + 0.5*({s1}/t)*q2^2"), "1.5*q1*q2".to_string()],
    )
}

pub fn example_tensor(sigma1: f64, constant_sigma2: bool) -> BaseTensor {
    let (rqq, rq0) = tensor_sources(sigma1, constant_sigma2);
    BaseTensor::parse(&rqq, &rq0, &BTreeMap::new()).expect("fixture tensor parses")
}

pub fn example_hamiltonian(params: &BTreeMap<String, f64>, perturbed: bool) -> ExprHamiltonian {
    let src = if perturbed { HAMILTONIAN_PERTURBED } else { HAMILTONIAN };
    ExprHamiltonian::parse(2, src, params).expect("fixture Hamiltonian parses")
}

/// The shipped problem file; `constant_sigma2` and `perturbed` select the
/// negative controls.
pub fn example_problem(constant_sigma2: bool, perturbed: bool) -> ProblemSpec {
    let (rqq, rq0) = tensor_sources(1.0, constant_sigma2);
    ProblemSpec {
        n: 2,
        parameters: default_params(),
        hamiltonian: if perturbed { HAMILTONIAN_PERTURBED } else { HAMILTONIAN }.to_string(),
        tensor: TensorSpec { rqq, rq0 },
        domain: Domain {
            t: [0.5, 2.0],
            q: vec![[0.1, 1.0]; 2],
            p: vec![[0.1, 1.0]; 2],
        },
        samples: 100,
        seed: 42,
        tolerances: Tolerances::default(),
        coordinates: Coordinates::Original,
        transform: None,
    }
}

pub fn example_transform() -> TransformSpec {
    TransformSpec {
        n: 2,
        forward: TRANSFORM_FORWARD.iter().map(|s| s.to_string()).collect(),
        inverse: TRANSFORM_INVERSE.iter().map(|s| s.to_string()).collect(),
        reference_hamiltonian: Some(REFERENCE_K.to_string()),
    }
}

pub const FIXTURE_NAMES: [&str; 1] = ["section6"];

/// File names and contents written by `example <name>`.
pub fn fixture_files(name: &str) -> Result<Vec<(String, String)>> {
    if name != "section6" {
        return Err(Error::Invalid(format!(
            "unknown fixture `{name}` (available: {})",
            FIXTURE_NAMES.join(", ")
        )));
    }
    let json = |p: ProblemSpec| p.to_json() + "\n";
    Ok(vec![
        ("section6.json".into(), json(example_problem(false, false))),
        ("section6_transform.json".into(), example_transform().to_json() + "\n"),
        ("section6_reference_K.txt".into(), format!("{REFERENCE_K}\n")),
        ("section6_badsigma2.json".into(), json(example_problem(true, false))),
        ("section6_perturbed.json".into(), json(example_problem(false, true))),
    ])
}

/// Writes the fixture files into `dir`, returning their paths.
pub fn emit_fixture(name: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = fixture_files(name)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
    files
        .into_iter()
        .map(|(file, contents)| {
            let path = dir.join(file);
            std::fs::write(&path, contents).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}
