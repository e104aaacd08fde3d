//! Hamiltonian vector fields on J¹E* and T*E, the distributions they span
//! with the lifted tensors, and the pointwise rank, Lagrangian and
//! relatedness diagnostics.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Expr, SymbolTable};
use crate::geometry::{dual_symbols, PointCotangent, PointDual, TensorEval, TensorField};
use crate::jet::Jet2;
use crate::lifts::{self, Bundle, LiftJets, LinearOperatorValue};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

/// A time-dependent Hamiltonian `H(t, q, p)` that can report its value,
/// gradient and Hessian over the coordinates `(t, q, p)` of J¹E*.
pub trait HamiltonianField<T: Scalar>: Send + Sync {
    fn n(&self) -> usize;

    fn jet(&self, x: &PointDual<T>) -> Result<Jet2<T>>;

    fn value(&self, x: &PointDual<T>) -> Result<T> {
        Ok(*self.jet(x)?.value())
    }
}

/// Hamiltonian given by an expression over `(t, q1..qn, p1..pn)`.
#[derive(Clone, Debug)]
pub struct ExprHamiltonian {
    n: usize,
    expr: Expr,
    params: Vec<f64>,
}

impl ExprHamiltonian {
    /// `expr` must be parsed against [`dual_symbols`]`(n)`; `params` are in
    /// the order of its parameter table.
    pub fn new(n: usize, expr: Expr, params: Vec<f64>) -> Result<Self> {
        if expr.table().symbols() != dual_symbols(n).as_slice() {
            return Err(Error::Invalid(format!(
                "Hamiltonian symbols {:?} differ from {:?}",
                expr.table().symbols(),
                dual_symbols(n)
            )));
        }
        if expr.table().params().len() != params.len() {
            return Err(Error::Invalid("Hamiltonian parameter count mismatch".into()));
        }
        Ok(Self { n, expr, params })
    }

    /// Like [`ExprHamiltonian::new`] but accepts any `2n+1` coordinate names,
    /// interpreted positionally as `(t, q, p)`.
    pub fn with_symbols(n: usize, expr: Expr, params: Vec<f64>) -> Result<Self> {
        if expr.table().symbols().len() != 2 * n + 1 {
            return Err(Error::Dimension(format!(
                "Hamiltonian needs {} coordinates, got {}",
                2 * n + 1,
                expr.table().symbols().len()
            )));
        }
        if expr.table().params().len() != params.len() {
            return Err(Error::Invalid("Hamiltonian parameter count mismatch".into()));
        }
        Ok(Self { n, expr, params })
    }

    pub fn parse(n: usize, source: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let table = SymbolTable::new(&dual_symbols(n), &names).map_err(|e| Error::parse("hamiltonian", e))?;
        let expr = Expr::parse(source, &table).map_err(|e| Error::parse("hamiltonian", e))?;
        Self::new(n, expr, params.values().copied().collect())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Evaluates into any number type built over the scalar `T`.
    pub fn eval<N: crate::scalar::Number>(&self, vars: &[N]) -> Result<N> {
        let params: Vec<N::Real> = self.params.iter().map(|&v| <N::Real as Scalar>::c(v)).collect();
        self.expr.eval(vars, &params).map_err(|e| Error::eval("hamiltonian", e))
    }
}

impl<T: Scalar> HamiltonianField<T> for ExprHamiltonian {
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, x: &PointDual<T>) -> Result<Jet2<T>> {
        if x.n() != self.n {
            return Err(Error::Dimension(format!(
                "point has n={}, Hamiltonian n={}",
                x.n(),
                self.n
            )));
        }
        let dim = 2 * self.n + 1;
        let vars: Vec<Jet2<T>> = x
            .coords()
            .into_iter()
            .enumerate()
            .map(|(i, v)| Jet2::variable(v, i, dim))
            .collect();
        self.eval(&vars)
    }
}

/// `X_h = (1, ∂H/∂p, −∂H/∂q)` from the gradient of `H` over `(t, q, p)`.
pub fn hamiltonian_vector_dual<T: Scalar>(n: usize, dh: &[T]) -> Vec<T> {
    let mut v = vec![T::zero(); 2 * n + 1];
    v[0] = T::one();
    for i in 1..=n {
        v[i] = dh[n + i];
        v[n + i] = -dh[i];
    }
    v
}

/// `X_H̃ = (1, ∂H/∂p, −∂H/∂t, −∂H/∂q)` from the gradient of `H` over `(t, q, p)`.
pub fn hamiltonian_vector_cotangent<T: Scalar>(n: usize, dh: &[T]) -> Vec<T> {
    let v = hamiltonian_vector_dual(n, dh);
    lifts::insert_p0(&v, -dh[0])
}

/// `dH̃ = dp0 + dH` over `(t, q, p0, p)`.
pub fn d_h_tilde<T: Scalar>(n: usize, dh: &[T]) -> Vec<T> {
    lifts::insert_p0(&dh[..2 * n + 1], T::one())
}

pub fn hamiltonian_field_dual<T: Scalar>(h: &dyn HamiltonianField<T>, x: &PointDual<T>) -> Result<Vec<T>> {
    let j = h.jet(x)?;
    Ok(hamiltonian_vector_dual(x.n(), j.gradient()))
}

pub fn hamiltonian_field_cotangent<T: Scalar>(h: &dyn HamiltonianField<T>, x: &PointCotangent<T>) -> Result<Vec<T>> {
    let j = h.jet(&x.project())?;
    Ok(hamiltonian_vector_cotangent(x.n(), j.gradient()))
}

/// The fields `L^k(X)` for `k = 0..=n` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionBasis<T> {
    pub bundle: Bundle,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> DistributionBasis<T> {
    pub fn build(bundle: Bundle, lift: &LinearOperatorValue<T>, x0: Vec<T>, n: usize) -> Self {
        let mut vectors = Vec::with_capacity(n + 1);
        vectors.push(x0);
        for k in 1..=n {
            let next = lift.apply(&vectors[k - 1]);
            vectors.push(next);
        }
        Self { bundle, vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Everything the per-point diagnostics need, evaluated once.
#[derive(Clone, Debug)]
pub struct PointData<T> {
    pub x: PointDual<T>,
    pub tensor: TensorEval<T>,
    pub h: Jet2<T>,
}

impl<T: Scalar> PointData<T> {
    pub fn evaluate(r: &dyn TensorField<T>, h: &dyn HamiltonianField<T>, x: &PointDual<T>) -> Result<Self> {
        if r.n() != x.n() || h.n() != x.n() {
            return Err(Error::Dimension("tensor, Hamiltonian and point disagree on n".into()));
        }
        Ok(Self {
            tensor: r.eval_tensor(&x.base())?,
            h: h.jet(x)?,
            x: x.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn dh(&self) -> &[T] {
        self.h.gradient()
    }

    /// The h-image of the point: `p0 = −H`.
    pub fn section_point(&self) -> PointCotangent<T> {
        self.x.with_p0(-*self.h.value())
    }

    pub fn x_h(&self) -> Vec<T> {
        hamiltonian_vector_dual(self.n(), self.dh())
    }

    pub fn x_h_tilde(&self) -> Vec<T> {
        hamiltonian_vector_cotangent(self.n(), self.dh())
    }

    pub fn d_h_tilde(&self) -> Vec<T> {
        d_h_tilde(self.n(), self.dh())
    }

    pub fn lift_jets(&self, bundle: Bundle) -> LiftJets<T> {
        lifts::lift_jets(&self.tensor, &self.x.p, bundle)
    }

    pub fn lift(&self, bundle: Bundle) -> LinearOperatorValue<T> {
        self.lift_jets(bundle).value()
    }

    pub fn basis(&self, bundle: Bundle) -> DistributionBasis<T> {
        let x0 = match bundle {
            Bundle::Dual => self.x_h(),
            Bundle::Cotangent => self.x_h_tilde(),
        };
        DistributionBasis::build(bundle, &self.lift(bundle), x0, self.n())
    }

    /// Tangent map of the section `h` at this point.
    pub fn section_tangent(&self) -> Matrix<T> {
        lifts::section_tangent_map(self.n(), self.dh())
    }
}

pub fn distribution_basis_dual<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
) -> Result<DistributionBasis<T>> {
    Ok(PointData::evaluate(r, h, x)?.basis(Bundle::Dual))
}

/// Basis of D_H̃ at a point of T*E. The basis does not depend on `p0`.
pub fn distribution_basis_cotangent<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointCotangent<T>,
) -> Result<DistributionBasis<T>> {
    Ok(PointData::evaluate(r, h, &x.project())?.basis(Bundle::Cotangent))
}

/// Numerical rank of the basis: singular values above `tol · σ_max`.
pub fn span_rank<T: Scalar>(basis: &DistributionBasis<T>, tol: T) -> usize {
    linalg::numerical_rank(&Matrix::from_columns(&basis.vectors), tol)
}

/// `max_{k<l} |ω_E(v_k, v_l)| / scale` over a basis on T*E.
pub fn lagrangian_residual<T: Scalar>(basis: &DistributionBasis<T>) -> Result<T> {
    if basis.bundle != Bundle::Cotangent {
        return Err(Error::Invalid("Lagrangian residual needs a basis on T*E".into()));
    }
    let n = (basis.vectors[0].len() - 2) / 2;
    let omega = lifts::canonical_form::<T>(n);
    Ok(max_pairing(&omega, &basis.vectors).0)
}

/// Worst normalized `|ω(v_k, v_l)|` over `k < l` with its pair.
pub(crate) fn max_pairing<T: Scalar>(omega: &lifts::TwoFormValue<T>, vs: &[Vec<T>]) -> (T, Option<(usize, usize)>) {
    let mut worst = T::zero();
    let mut arg = None;
    for k in 0..vs.len() {
        for l in (k + 1)..vs.len() {
            let (v, scale) = omega.eval_scaled(&vs[k], &vs[l]);
            let r = v.abs() / scale;
            if arg.is_none() || r > worst {
                worst = r;
                arg = Some((k, l));
            }
        }
    }
    (worst, arg)
}

/// Largest componentwise `|a − b|` relative to `1 + max(|a|, |b|)`.
pub(crate) fn vector_residual<T: Scalar>(a: &[T], b: &[T]) -> T {
    let scale = T::one() + linalg::max_abs(a).max(linalg::max_abs(b));
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())) / scale
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relatedness<T> {
    pub rho: T,
    pub h: T,
}

/// ρ- and h-relatedness of `(R^c)^k X_H̃` (at `p0 = −H`) and `R̃^k X_h`.
pub fn relatedness_residuals<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
) -> Result<Relatedness<T>> {
    Ok(relatedness_with(&PointData::evaluate(r, h, x)?))
}

pub(crate) fn relatedness_with<T: Scalar>(pd: &PointData<T>) -> Relatedness<T> {
    let n = pd.n();
    let dual = pd.basis(Bundle::Dual);
    let cot = pd.basis(Bundle::Cotangent);
    let dh = pd.dh();
    let mut rho = T::zero();
    let mut hres = T::zero();
    for (v, w) in dual.vectors.iter().zip(&cot.vectors) {
        rho = rho.max(vector_residual(&lifts::drop_p0(w), v));
        let xh: Vec<T> = v.iter().zip(dh).map(|(&a, &b)| a * b).collect();
        let p0 = w[n + 1];
        let scale = T::one() + p0.abs().max(linalg::max_abs(&xh));
        let sum: T = xh.iter().copied().sum();
        hres = hres.max((p0 + sum).abs() / scale);
    }
    Relatedness { rho, h: hres }
}

/// Worst normalized `|⟨(R^c)^k X_H̃, dH̃⟩|` over `k`.
pub fn tangency_residual<T: Scalar>(pd: &PointData<T>) -> T {
    let dht = pd.d_h_tilde();
    pd.basis(Bundle::Cotangent)
        .vectors
        .iter()
        .map(|v| {
            let terms: Vec<T> = v.iter().zip(&dht).map(|(&a, &b)| a * b).collect();
            let s: T = terms.iter().copied().sum();
            s.abs() / (T::one() + linalg::max_abs(&terms))
        })
        .fold(T::zero(), T::max)
}

/// Per-point regularity diagnostic: `∂H̃/∂p0 ≠ 0` always holds for `H̃ = p0 + H`,
/// so this reports whether the projection of D_H̃ to TE has full rank n+1.
pub fn regularity<T: Scalar>(pd: &PointData<T>, tol: T) -> bool {
    let n = pd.n();
    let cols: Vec<Vec<T>> = pd
        .basis(Bundle::Cotangent)
        .vectors
        .iter()
        .map(|v| v[..=n].to_vec())
        .collect();
    linalg::numerical_rank(&Matrix::from_columns(&cols), tol) == n + 1
}
