//! Pointwise Nijenhuis torsion of (1,1) tensors and the derivation identity
//! `d_L(Lα)(X, Y) = dα(LX, LY) + α(N_L(X, Y))` as a self-test.
//!
//! Component formula, with `∂_c L^a_b` indexed `d1[a][b][c]`:
//! `N^a_bc = L^d_b ∂_d L^a_c − L^d_c ∂_d L^a_b + L^a_d ∂_c L^d_b − L^a_d ∂_b L^d_c`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Expr, SymbolTable};
use crate::geometry::{PointE, TensorEval, TensorField};
use crate::jet::Jet1;
use crate::lifts::{self, Bundle};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// `N^a_bc`, antisymmetric in `(b, c)` by construction, with a per-component
/// scale `1 + max |summand|`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionValue<T> {
    dim: usize,
    comps: Vec<T>,
    scales: Vec<T>,
}

impl<T: Scalar> TorsionValue<T> {
    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> T {
        self.comps[self.idx(a, b, c)]
    }

    pub fn scale(&self, a: usize, b: usize, c: usize) -> T {
        self.scales[self.idx(a, b, c)]
    }

    /// `N(X, Y)^a = N^a_bc X^b Y^c`.
    pub fn apply(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d)
            .map(|a| {
                let mut acc = T::zero();
                for b in 0..d {
                    for c in 0..d {
                        acc = acc + self.get(a, b, c) * x[b] * y[c];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|N^a_bc| / scale`.
    pub fn max_relative(&self) -> T {
        self.comps
            .iter()
            .zip(&self.scales)
            .fold(T::zero(), |m, (v, s)| m.max(v.abs() / *s))
    }
}

/// Torsion from component values and first partials.
pub fn torsion<T: Scalar>(value: &Matrix<T>, d1: &[Vec<Vec<T>>], dim: usize) -> Result<TorsionValue<T>> {
    let shape_ok = value.rows() == dim
        && value.cols() == dim
        && d1.len() == dim
        && d1
            .iter()
            .all(|row| row.len() == dim && row.iter().all(|g| g.len() == dim));
    if !shape_ok {
        return Err(Error::Dimension(format!(
            "torsion input is not consistently {dim}-dimensional"
        )));
    }
    let mut out = TorsionValue {
        dim,
        comps: vec![T::zero(); dim * dim * dim],
        scales: vec![T::one(); dim * dim * dim],
    };
    let l = |a: usize, b: usize| value[(a, b)];
    for a in 0..dim {
        for b in 0..dim {
            for c in (b + 1)..dim {
                let mut acc = T::zero();
                let mut big = T::zero();
                for d in 0..dim {
                    let terms = [
                        l(d, b) * d1[a][c][d],
                        -(l(d, c) * d1[a][b][d]),
                        l(a, d) * d1[d][b][c],
                        -(l(a, d) * d1[d][c][b]),
                    ];
                    for t in terms {
                        acc = acc + t;
                        big = big.max(t.abs());
                    }
                }
                let (i, j) = (out.idx(a, b, c), out.idx(a, c, b));
                out.comps[i] = acc;
                out.comps[j] = -acc;
                out.scales[i] = T::one() + big;
                out.scales[j] = T::one() + big;
            }
        }
    }
    Ok(out)
}

/// Torsion of the base tensor together with its `(0, j)` slice, the
/// conditions tying `R^i_0` to the block `R^i_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseTorsion<T> {
    pub torsion: TorsionValue<T>,
    /// Largest relative `|N^a_0j|`.
    pub dt_slice: T,
}

pub fn torsion_of_eval<T: Scalar>(ev: &TensorEval<T>) -> BaseTorsion<T> {
    let dim = ev.n() + 1;
    let d1: Vec<Vec<Vec<T>>> = (0..dim)
        .map(|a| (0..dim).map(|b| (0..dim).map(|c| ev.d1(a, b, c)).collect()).collect())
        .collect();
    let torsion = torsion(&ev.value_matrix(), &d1, dim).expect("consistent by construction");
    let mut dt_slice = T::zero();
    for a in 0..dim {
        for j in 1..dim {
            dt_slice = dt_slice.max(torsion.get(a, 0, j).abs() / torsion.scale(a, 0, j));
        }
    }
    BaseTorsion { torsion, dt_slice }
}

pub fn torsion_base<T: Scalar>(r: &dyn TensorField<T>, e: &PointE<T>) -> Result<BaseTorsion<T>> {
    Ok(torsion_of_eval(&r.eval_tensor(e)?))
}

/// Torsion of the complete lift on either bundle, from the lift entries
/// differentiated over the bundle coordinates.
pub fn torsion_lift<T: Scalar>(ev: &TensorEval<T>, p: &[T], bundle: Bundle) -> TorsionValue<T> {
    let jets = lifts::lift_jets(ev, p, bundle);
    let dim = bundle.dim(ev.n());
    torsion(&jets.value().matrix, &jets.d1(), dim).expect("consistent by construction")
}

/// A general (1,1) tensor on an `m`-dimensional chart by component
/// expressions, `comps[a][b] = L^a_b`.
#[derive(Clone, Debug)]
pub struct ExprOperatorField {
    comps: Vec<Vec<Expr>>,
    params: Vec<f64>,
}

/// A 1-form on a chart by component expressions.
#[derive(Clone, Debug)]
pub struct ExprOneForm {
    comps: Vec<Expr>,
    params: Vec<f64>,
}

fn parse_all(sources: &[&str], table: &std::sync::Arc<SymbolTable>, label: &str) -> Result<Vec<Expr>> {
    sources
        .iter()
        .map(|s| Expr::parse(s, table).map_err(|e| Error::parse(label, e)))
        .collect()
}

fn chart_table(symbols: &[&str], params: &BTreeMap<String, f64>) -> Result<std::sync::Arc<SymbolTable>> {
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    SymbolTable::new(symbols, &names).map_err(|e| Error::parse("chart", e))
}

impl ExprOperatorField {
    pub fn parse(symbols: &[&str], rows: &[Vec<&str>], params: &BTreeMap<String, f64>) -> Result<Self> {
        let m = symbols.len();
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("operator must be {m}×{m}")));
        }
        let table = chart_table(symbols, params)?;
        let comps = rows
            .iter()
            .map(|r| parse_all(r, &table, "operator component"))
            .collect::<Result<_>>()?;
        Ok(Self {
            comps,
            params: params.values().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn jets<T: Scalar>(&self, x: &[T]) -> Result<Vec<Vec<Jet1<T>>>> {
        let active: Vec<usize> = (0..x.len()).collect();
        let params: Vec<T> = self.params.iter().map(|&v| T::c(v)).collect();
        self.comps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        e.eval_jet2(x, &active, &params)
                            .map(|j| j.to_jet1())
                            .map_err(|err| Error::eval("operator component", err))
                    })
                    .collect()
            })
            .collect()
    }
}

impl ExprOneForm {
    pub fn parse(symbols: &[&str], comps: &[&str], params: &BTreeMap<String, f64>) -> Result<Self> {
        if comps.len() != symbols.len() {
            return Err(Error::Dimension("one-form length differs from chart dimension".into()));
        }
        let table = chart_table(symbols, params)?;
        Ok(Self {
            comps: parse_all(comps, &table, "one-form component")?,
            params: params.values().copied().collect(),
        })
    }

    pub fn jets<T: Scalar>(&self, x: &[T]) -> Result<Vec<Jet1<T>>> {
        let active: Vec<usize> = (0..x.len()).collect();
        let params: Vec<T> = self.params.iter().map(|&v| T::c(v)).collect();
        self.comps
            .iter()
            .map(|e| {
                e.eval_jet2(x, &active, &params)
                    .map(|j| j.to_jet1())
                    .map_err(|err| Error::eval("one-form component", err))
            })
            .collect()
    }
}

/// `(Lβ)_b = β_a L^a_b` on jets.
fn compose<T: Scalar>(beta: &[Jet1<T>], l: &[Vec<Jet1<T>>]) -> Vec<Jet1<T>> {
    let m = beta.len();
    (0..m)
        .map(|b| {
            (0..m).fold(Jet1::constant(T::zero(), m), |acc, a| {
                acc + beta[a].clone() * l[a][b].clone()
            })
        })
        .collect()
}

/// `dβ(X, Y) = (∂_a β_b − ∂_b β_a) X^a Y^b` at the jet's base point.
fn d_pair<T: Scalar>(beta: &[Jet1<T>], x: &[T], y: &[T]) -> T {
    let m = beta.len();
    let mut acc = T::zero();
    for a in 0..m {
        for b in 0..m {
            acc = acc + (beta[b].grad[a] - beta[a].grad[b]) * x[a] * y[b];
        }
    }
    acc
}

/// Both sides of the derivation identity and their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivationResidual<T> {
    pub lhs: T,
    pub rhs: T,
    /// `|lhs − rhs| / (1 + max |summand|)`.
    pub relative: T,
}

/// `d_L(Lα)(X, Y)` against `dα(LX, LY) + α(N_L(X, Y))` at `x`, with
/// `d_L β = i_L dβ − d(i_L β)`. The identity is tensorial in `X, Y`, so
/// constant coordinate vectors suffice.
pub fn derivation_identity_residual<T: Scalar>(
    l_field: &ExprOperatorField,
    alpha: &ExprOneForm,
    xv: &[T],
    yv: &[T],
    point: &[T],
) -> Result<DerivationResidual<T>> {
    let m = l_field.dim();
    if point.len() != m || xv.len() != m || yv.len() != m {
        return Err(Error::Dimension("chart, vectors and point disagree".into()));
    }
    let l = l_field.jets(point)?;
    let a = alpha.jets(point)?;
    let lv = Matrix::from_rows(
        &l.iter()
            .map(|r| r.iter().map(|j| j.value).collect())
            .collect::<Vec<_>>(),
    );
    let d1: Vec<Vec<Vec<T>>> = l.iter().map(|r| r.iter().map(|j| j.grad.clone()).collect()).collect();
    let n_l = torsion(&lv, &d1, m)?;

    let la = compose(&a, &l);
    let lla = compose(&la, &l);
    let lx = lv.mul_vec(xv);
    let ly = lv.mul_vec(yv);

    let s1 = d_pair(&la, &lx, yv);
    let s2 = d_pair(&la, xv, &ly);
    let s3 = d_pair(&lla, xv, yv);
    let r1 = d_pair(&a, &lx, &ly);
    let nxy = n_l.apply(xv, yv);
    let r2: T = a.iter().zip(&nxy).map(|(j, &v)| j.value * v).sum();
    let lhs = s1 + s2 - s3;
    let rhs = r1 + r2;
    let big = [s1, s2, s3, r1, r2].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(DerivationResidual {
        lhs,
        rhs,
        relative: (lhs - rhs).abs() / (T::one() + big),
    })
}
