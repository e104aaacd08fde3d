//! The check and transform pipelines over a seeded sample set.

use std::collections::BTreeMap;

use crate::dynamics::{self, HamiltonianField, PointData};
use crate::error::{Error, Result};
use crate::geometry::{eigen_structure, PointDual, PointE, TensorField};
use crate::lifts::Bundle;
use crate::nijenhuis;
use crate::problem::{Coordinates, ProblemSpec, TransformSpec};
use crate::report::{digest, CheckRecord, DiagnosticsReport, MaxTracker, PointRecord, TransformReport, Verdict};
use crate::sampling;
use crate::separability;
use crate::transform::{self, PointTransform, PushforwardTensor, TransformedHamiltonian};

/// A check fails when more than this fraction of sample points is skipped.
pub const MAX_SKIP_FRACTION: f64 = 0.1;

/// Tolerance for the transform verification checks.
pub const TRANSFORM_TOL: f64 = 1e-9;

/// Random tangent-vector pairs per point in the canonicity check.
pub const CANONICITY_PAIRS: usize = 20;

pub const TOOL: &str = "hjsep";

/// Command-line overrides of problem settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub pass_tol: Option<f64>,
    pub rank_tol: Option<f64>,
    /// Skip the cotangent-bundle integrability test.
    pub fast: bool,
}

impl Overrides {
    pub fn apply(&self, spec: &ProblemSpec) -> ProblemSpec {
        let mut s = spec.clone();
        if let Some(v) = self.samples {
            s.samples = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.pass_tol {
            s.tolerances.pass = v;
        }
        if let Some(v) = self.rank_tol {
            s.tolerances.rank = v;
        }
        s
    }
}

fn too_many_skipped(skipped: usize, total: usize) -> bool {
    skipped as f64 > MAX_SKIP_FRACTION * total as f64
}

struct Aggregate {
    name: &'static str,
    enabled: bool,
    tracker: MaxTracker,
    skipped: usize,
    threshold: f64,
    /// Whether skipped points count against the verdict.
    gate_skips: bool,
    notes: BTreeMap<String, f64>,
    ran: bool,
}

impl Aggregate {
    fn new(name: &'static str, threshold: f64) -> Self {
        Self {
            name,
            enabled: true,
            tracker: MaxTracker::default(),
            skipped: 0,
            threshold,
            gate_skips: false,
            notes: BTreeMap::new(),
            ran: true,
        }
    }

    fn gated(mut self) -> Self {
        self.gate_skips = true;
        self
    }

    fn informational(mut self) -> Self {
        self.enabled = false;
        self
    }

    fn finish(self, total: usize) -> CheckRecord {
        let verdict = if !self.ran {
            Verdict::NotRun
        } else {
            let skip_ok = !self.gate_skips || !too_many_skipped(self.skipped, total);
            Verdict::from_bool(skip_ok && self.tracker.below(self.threshold))
        };
        CheckRecord {
            name: self.name.to_string(),
            enabled: self.enabled && self.ran,
            evaluated: self.tracker.evaluated,
            skipped: self.skipped,
            max_residual: self.tracker.max,
            argmax: self.tracker.argmax,
            threshold: self.threshold,
            verdict,
            notes: self.notes,
        }
    }
}

/// Sample points in the problem's own coordinates, with the original-domain
/// points they came from.
pub fn problem_points(spec: &ProblemSpec, transform: Option<&PointTransform>) -> Result<Vec<PointDual<f64>>> {
    let old = sampling::sample_dual(&spec.domain.intervals(), spec.samples, spec.seed);
    match transform {
        None => Ok(old),
        Some(tr) => old.iter().map(|x| tr.forward_phase(x)).collect(),
    }
}

fn at_point(i: usize, x: &PointDual<f64>, e: Error) -> Error {
    Error::Invalid(format!("sample {i} at {:?}: {e}", x.coords()))
}

pub fn input_digest(spec: &ProblemSpec, fast: bool) -> String {
    let canonical = serde_json::to_string(spec).expect("problem serializes");
    digest(&[&canonical, if fast { "fast" } else { "full" }])
}

/// Runs every diagnostic over the sample set.
pub fn run_check(spec: &ProblemSpec, overrides: &Overrides) -> Result<DiagnosticsReport> {
    let spec = overrides.apply(spec);
    let compiled = spec.compile()?;
    let n = compiled.n;
    let tol = spec.tolerances;
    let transformed = spec.coordinates == Coordinates::Transformed;
    let points = problem_points(&spec, compiled.transform.as_ref())?;
    let total = points.len();
    let r: &dyn TensorField<f64> = compiled.tensor.as_ref();
    let h: &dyn HamiltonianField<f64> = compiled.hamiltonian.as_ref();

    let mut structure = Aggregate::new("tensor_structure", tol.pass);
    let mut spectral = Aggregate::new("spectral", tol.distinct).gated();
    let mut torsion = Aggregate::new("torsion", tol.pass);
    let mut rank = Aggregate::new("distribution_rank", tol.rank).gated();
    let mut lagrangian = Aggregate::new("lagrangian", tol.pass);
    let mut related = Aggregate::new("relatedness", tol.pass);
    let mut dual = Aggregate::new("integrability_dual", tol.pass).gated();
    let mut cot = Aggregate::new("integrability_cotangent", tol.pass).gated();
    cot.ran = !overrides.fast;
    let mut forbat = Aggregate::new("forbat", tol.pass);
    if !transformed {
        forbat = forbat.informational();
    }
    let mut closed = Aggregate::new("closed_form_pairings", tol.pass);
    closed.ran = transformed;
    let mut regular = Aggregate::new("regularity", tol.rank).informational();

    let mut min_gap = f64::INFINITY;
    let mut dt_slice = 0.0_f64;
    let mut disagreements = 0;
    let mut records = Vec::with_capacity(total);

    for (i, x) in points.iter().enumerate() {
        let coords = x.coords();
        let pd = PointData::evaluate(r, h, x).map_err(|e| at_point(i, x, e))?;

        let dt = pd.tensor.apply_to_dt();
        structure
            .tracker
            .push(dt.iter().fold(0.0, |m, v| m.max(v.abs())), &coords);

        let sv = eigen_structure(&pd.tensor.block(), tol.distinct);
        let spectral_ok = sv.admissible();
        if spectral_ok {
            spectral.tracker.push(0.0, &coords);
        } else {
            spectral.skipped += 1;
        }
        if sv.min_gap.is_finite() {
            min_gap = min_gap.min(sv.min_gap);
        }

        let bt = nijenhuis::torsion_of_eval(&pd.tensor);
        let t_res = bt.torsion.max_relative();
        torsion.tracker.push(t_res, &coords);
        dt_slice = dt_slice.max(bt.dt_slice);

        let dual_basis = pd.basis(Bundle::Dual);
        let cot_basis = pd.basis(Bundle::Cotangent);
        let rank_ok = dynamics::span_rank(&dual_basis, tol.rank) == n + 1;
        if rank_ok {
            rank.tracker.push(0.0, &coords);
        } else {
            rank.skipped += 1;
        }
        let is_regular = dynamics::regularity(&pd, tol.rank);
        if is_regular {
            regular.tracker.push(0.0, &coords);
        } else {
            regular.skipped += 1;
        }

        let lag = dynamics::lagrangian_residual(&cot_basis)?;
        lagrangian.tracker.push(lag, &coords);
        let rel = dynamics::relatedness_with(&pd);
        let rel = rel.rho.max(rel.h);
        related.tracker.push(rel, &coords);

        let gate = rank_ok && spectral_ok;
        let d_res = gate.then(|| separability::integrability_dual_with(&pd, tol.rank).value);
        let c_res = (gate && !overrides.fast).then(|| separability::integrability_cotangent_with(&pd, tol.rank).value);
        match d_res {
            Some(v) => dual.tracker.push(v, &coords),
            None => dual.skipped += 1,
        }
        if cot.ran {
            match c_res {
                Some(v) => cot.tracker.push(v, &coords),
                None => cot.skipped += 1,
            }
        }
        if let (Some(a), Some(b)) = (d_res, c_res) {
            if (a < tol.pass) != (b < tol.pass) {
                disagreements += 1;
            }
        }

        let fb = separability::forbat_from_jet(n, &pd.h);
        forbat.tracker.push(fb.max_relative(), &coords);

        let (closed_mismatch, pairing_pair) = if transformed {
            let cmp = separability::dn_comparison(&pd);
            let m = cmp.max_mismatch();
            closed.tracker.push(m, &coords);
            (Some(m), cmp.worst_pair())
        } else {
            (None, None)
        };

        records.push(PointRecord {
            index: i,
            coords,
            spectral_ok,
            rank_ok,
            regular: is_regular,
            torsion: t_res,
            lagrangian: lag,
            relatedness: rel,
            integrability_dual: d_res,
            integrability_cotangent: c_res,
            forbat: fb.max_relative(),
            forbat_worst_pair: fb.worst_pair(),
            closed_form_mismatch: closed_mismatch,
            pairing_worst_pair: pairing_pair,
        });
    }

    spectral.notes.insert("min_gap".into(), min_gap);
    torsion.notes.insert("dt_slice".into(), dt_slice);
    let checks: Vec<CheckRecord> = [
        structure, spectral, torsion, rank, lagrangian, related, dual, cot, forbat, closed, regular,
    ]
    .into_iter()
    .map(|a| a.finish(total))
    .collect();
    let overall = Verdict::from_bool(checks.iter().all(|c| !c.enabled || c.passed()));
    Ok(DiagnosticsReport {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_digest: input_digest(&spec, overrides.fast),
        n,
        coordinates: spec.coordinates,
        samples: spec.samples,
        seed: spec.seed,
        tolerances: tol,
        fast: overrides.fast,
        checks,
        dual_cotangent_disagreements: disagreements,
        points: records,
        overall,
    })
}

/// Verifies a transform against a problem and returns the problem restated in
/// the new coordinates together with the verification report.
pub fn run_transform(
    spec: &ProblemSpec,
    tspec: &TransformSpec,
    overrides: &Overrides,
) -> Result<(ProblemSpec, TransformReport)> {
    let spec = overrides.apply(spec);
    if spec.coordinates != Coordinates::Original {
        return Err(Error::Invalid("problem is already in transformed coordinates".into()));
    }
    spec.validate()?;
    let n = spec.n;
    let tr = tspec.compile(n, &spec.parameters)?;
    let reference = tspec.compile_reference(&spec.parameters)?;
    let h = crate::dynamics::ExprHamiltonian::parse(n, &spec.hamiltonian, &spec.parameters)?;
    let r = crate::geometry::BaseTensor::parse(&spec.tensor.rqq, &spec.tensor.rq0, &spec.parameters)?;
    let k = TransformedHamiltonian::new(h, tr.clone())?;
    let rp = PushforwardTensor::new(r, tr.clone())?;

    let old_points = sampling::sample_dual(&spec.domain.intervals(), spec.samples, spec.seed);
    let total = old_points.len();
    let mut roundtrip = Aggregate::new("roundtrip", TRANSFORM_TOL).gated();
    let mut diag = Aggregate::new("diagonality", TRANSFORM_TOL).gated();
    let mut eig = Aggregate::new("eigenvalues_vs_coordinates", TRANSFORM_TOL).informational();
    let mut dep = Aggregate::new("eigenvalue_dependence", 1e-6).informational();
    let mut canon = Aggregate::new("canonicity", TRANSFORM_TOL).gated();
    let mut refk = Aggregate::new("reference_hamiltonian", TRANSFORM_TOL).gated();
    refk.ran = reference.is_some();
    let mut singular = 0;

    for (i, x) in old_points.iter().enumerate() {
        let y = match tr.forward_phase(x) {
            Ok(y) => y,
            Err(Error::SingularJacobian(_)) => {
                singular += 1;
                for a in [&mut roundtrip, &mut diag, &mut eig, &mut dep, &mut canon, &mut refk] {
                    a.skipped += 1;
                }
                continue;
            }
            Err(e) => return Err(at_point(i, x, e)),
        };
        let coords = y.coords();
        let rt = tr
            .roundtrip_residual(&[y.base()], &[x.base()])
            .map_err(|e| at_point(i, x, e))?;
        roundtrip.tracker.push(rt, &coords);

        let ev = TensorField::<f64>::eval_tensor(&rp, &y.base()).map_err(|e| at_point(i, x, e))?;
        let pv = transform::pushforward_of_eval(&ev);
        diag.tracker.push(pv.diagonality, &coords);
        let eig_res = pv
            .diagonal
            .iter()
            .zip(&y.q)
            .fold(0.0_f64, |m, (l, q)| m.max((l - q).abs() / (1.0 + q.abs())));
        eig.tracker.push(eig_res, &coords);
        let d = transform::eigenvalue_dependence(&rp, &y.base(), 1e-3).map_err(|e| at_point(i, x, e))?;
        dep.tracker.push(d, &coords);

        let pairs = canonicity_pairs(spec.seed, i, n);
        let c = tr.canonicity_residual(&y, &pairs).map_err(|e| at_point(i, x, e))?;
        canon.tracker.push(c, &coords);

        if let Some(reference) = &reference {
            let kv = HamiltonianField::<f64>::value(&k, &y).map_err(|e| at_point(i, x, e))?;
            let rv = HamiltonianField::<f64>::value(reference, &y).map_err(|e| at_point(i, x, e))?;
            refk.tracker
                .push((kv - rv).abs() / (1.0 + rv.abs().max(kv.abs())), &coords);
        }
    }
    if singular > 0 {
        roundtrip.notes.insert("singular_points".into(), singular as f64);
    }
    let checks: Vec<CheckRecord> = [roundtrip, diag, eig, dep, canon, refk]
        .into_iter()
        .map(|a| a.finish(total))
        .collect();
    let overall = Verdict::from_bool(singular == 0 && checks.iter().all(|c| !c.enabled || c.passed()));

    let mut out = spec.clone();
    out.coordinates = Coordinates::Transformed;
    out.transform = Some(tspec.clone());
    let tjson = tspec.to_json();
    let report = TransformReport {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_digest: digest(&[&serde_json::to_string(&spec).expect("problem serializes"), &tjson]),
        n,
        samples: spec.samples,
        seed: spec.seed,
        singular_points: singular,
        checks,
        overall,
    };
    Ok((out, report))
}

/// Seeded tangent-vector pairs on T*E with components in `[-1, 1]`.
pub fn canonicity_pairs(seed: u64, index: usize, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dim = 2 * n + 2;
    let iv = vec![[-1.0, 1.0]; 2 * dim];
    let stream = seed ^ 0xC0FF_EE00_0000_0000 ^ (index as u64).wrapping_mul(0x2545_F491_4F6C_DD1D);
    sampling::sample_box(&iv, CANONICITY_PAIRS, stream)
        .into_iter()
        .map(|v| (v[..dim].to_vec(), v[dim..].to_vec()))
        .collect()
}

/// Base points of the samples, for callers that need them on E.
pub fn base_points(points: &[PointDual<f64>]) -> Vec<PointE<f64>> {
    points.iter().map(PointDual::base).collect()
}
