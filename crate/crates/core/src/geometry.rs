//! Points on the event space E, the dual jet bundle J¹E* and the cotangent
//! bundle T*E, and the base (1,1) tensor R on E.
//!
//! Index convention everywhere: slot 0 is `t` (and `p0`), slots `1..=n` are
//! the `q^i` (and `p_i`). Coordinate bases are ordered
//! `(t, q¹…qⁿ)` on E, `(t, q, p)` on J¹E* and `(t, q, p0, p)` on T*E.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expr::{Expr, SymbolTable};
use crate::jet::Jet2;
use crate::linalg::{self, Matrix};
use crate::scalar::{Number, Scalar};

/// `["t", "q1", …, "qn"]`
pub fn base_symbols(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("q{i}")))
        .collect()
}

/// `["t", "q1", …, "qn", "p1", …, "pn"]`
pub fn dual_symbols(n: usize) -> Vec<String> {
    let mut s = base_symbols(n);
    s.extend((1..=n).map(|i| format!("p{i}")));
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointE<T> {
    pub t: T,
    pub q: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointDual<T> {
    pub t: T,
    pub q: Vec<T>,
    pub p: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCotangent<T> {
    pub t: T,
    pub q: Vec<T>,
    pub p0: T,
    pub p: Vec<T>,
}

impl<T: Scalar> PointE<T> {
    pub fn new(t: T, q: Vec<T>) -> Self {
        Self { t, q }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn coords(&self) -> Vec<T> {
        std::iter::once(self.t).chain(self.q.iter().copied()).collect()
    }
}

impl<T: Scalar> PointDual<T> {
    pub fn new(t: T, q: Vec<T>, p: Vec<T>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { t, q, p }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn from_coords(x: &[T]) -> Self {
        let n = (x.len() - 1) / 2;
        Self::new(x[0], x[1..=n].to_vec(), x[n + 1..].to_vec())
    }

    pub fn coords(&self) -> Vec<T> {
        std::iter::once(self.t)
            .chain(self.q.iter().copied())
            .chain(self.p.iter().copied())
            .collect()
    }

    pub fn base(&self) -> PointE<T> {
        PointE::new(self.t, self.q.clone())
    }

    /// The point of T*E over this one with the given `p0`.
    pub fn with_p0(&self, p0: T) -> PointCotangent<T> {
        PointCotangent::new(self.t, self.q.clone(), p0, self.p.clone())
    }
}

impl<T: Scalar> PointCotangent<T> {
    pub fn new(t: T, q: Vec<T>, p0: T, p: Vec<T>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { t, q, p0, p }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn from_coords(x: &[T]) -> Self {
        let n = (x.len() - 2) / 2;
        Self::new(x[0], x[1..=n].to_vec(), x[n + 1], x[n + 2..].to_vec())
    }

    pub fn coords(&self) -> Vec<T> {
        std::iter::once(self.t)
            .chain(self.q.iter().copied())
            .chain(std::iter::once(self.p0))
            .chain(self.p.iter().copied())
            .collect()
    }

    /// ρ: T*E → J¹E*.
    pub fn project(&self) -> PointDual<T> {
        PointDual::new(self.t, self.q.clone(), self.p.clone())
    }

    pub fn base(&self) -> PointE<T> {
        PointE::new(self.t, self.q.clone())
    }

    /// Whether the point lies on the image of the section `p0 = −H`.
    pub fn on_section(&self, hamiltonian_value: T, tol: T) -> bool {
        (self.p0 + hamiltonian_value).abs() <= tol * (T::one() + hamiltonian_value.abs())
    }
}

/// Components of R and their first and second partials with respect to
/// `(t, q)` at one point of E.
///
/// `jet(a, b)` is the component with upper index `a` and lower index `b`
/// in the basis `(∂_t, ∂_q)`; row `a = 0` is identically zero.
#[derive(Clone, Debug)]
pub struct TensorEval<T> {
    n: usize,
    comps: Vec<Jet2<T>>,
}

impl<T: Scalar> TensorEval<T> {
    /// Builds from the n×n block jets (`R^i_j`) and the dt column (`R^i_0`),
    /// all over the active set `(t, q)`.
    pub fn from_components(rqq: Vec<Vec<Jet2<T>>>, rq0: Vec<Jet2<T>>) -> Self {
        let n = rq0.len();
        let zero = Jet2::constant(T::zero(), n + 1);
        let mut comps = vec![zero; (n + 1) * (n + 1)];
        for i in 0..n {
            assert_eq!(rq0[i].dim(), n + 1);
            comps[(i + 1) * (n + 1)] = rq0[i].clone();
            for j in 0..n {
                assert_eq!(rqq[i][j].dim(), n + 1);
                comps[(i + 1) * (n + 1) + j + 1] = rqq[i][j].clone();
            }
        }
        Self { n, comps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn jet(&self, a: usize, b: usize) -> &Jet2<T> {
        &self.comps[a * (self.n + 1) + b]
    }

    #[inline]
    pub fn value(&self, a: usize, b: usize) -> T {
        *self.jet(a, b).value()
    }

    /// ∂_c R^a_b
    #[inline]
    pub fn d1(&self, a: usize, b: usize, c: usize) -> T {
        *self.jet(a, b).grad(c)
    }

    /// ∂_c ∂_d R^a_b
    #[inline]
    pub fn d2(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        *self.jet(a, b).hess(c, d)
    }

    /// The full (n+1)×(n+1) value matrix `[[0, 0], [R^i_0, R^i_j]]`.
    pub fn value_matrix(&self) -> Matrix<T> {
        let m = self.n + 1;
        let mut out = Matrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] = self.value(a, b);
            }
        }
        out
    }

    /// The n×n block `R^i_j`.
    pub fn block(&self) -> Matrix<T> {
        let idx: Vec<usize> = (1..=self.n).collect();
        self.value_matrix().submatrix(&idx, &idx)
    }

    /// The covector `dt ∘ R`; zero for every tensor of this kind.
    pub fn apply_to_dt(&self) -> Vec<T> {
        self.value_matrix().vec_mul(&{
            let mut dt = vec![T::zero(); self.n + 1];
            dt[0] = T::one();
            dt
        })
    }
}

/// A (1,1) tensor field on E annihilating dt, evaluable with derivatives.
pub trait TensorField<T: Scalar>: Send + Sync {
    fn n(&self) -> usize;
    fn eval_tensor(&self, e: &PointE<T>) -> Result<TensorEval<T>>;
}

/// R given by component expressions in `(t, q)`.
#[derive(Clone, Debug)]
pub struct BaseTensor {
    n: usize,
    rqq: Vec<Vec<Expr>>,
    rq0: Vec<Expr>,
    params: Vec<f64>,
}

impl BaseTensor {
    /// `rqq[i][j]` is `R^{i+1}_{j+1}` (row = upper index), `rq0[i]` is `R^{i+1}_0`.
    /// Every expression must be parsed against [`base_symbols`]`(n)`, and all
    /// must share one parameter table so `params` can be bound uniformly.
    pub fn new(rqq: Vec<Vec<Expr>>, rq0: Vec<Expr>, params: Vec<f64>) -> Result<Self> {
        let n = rq0.len();
        if n == 0 || rqq.len() != n || rqq.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "tensor block must be {n}×{n} with {n} dt components"
            )));
        }
        let expected = base_symbols(n);
        for e in rqq.iter().flatten().chain(&rq0) {
            if e.table().symbols() != expected.as_slice() {
                return Err(Error::Invalid(format!(
                    "tensor component symbols {:?} differ from {:?}",
                    e.table().symbols(),
                    expected
                )));
            }
            if e.table().params().len() != params.len() {
                return Err(Error::Invalid("tensor parameter count mismatch".into()));
            }
        }
        Ok(Self { n, rqq, rq0, params })
    }

    /// Parses component sources with the given parameter bindings.
    pub fn parse(rqq: &[Vec<String>], rq0: &[String], params: &BTreeMap<String, f64>) -> Result<Self> {
        let n = rq0.len();
        let names: Vec<&str> = params.keys().map(String::as_str).collect();
        let table = SymbolTable::new(&base_symbols(n), &names).map_err(|e| Error::parse("tensor", e))?;
        let parse = |src: &str, label: String| Expr::parse(src, &table).map_err(|e| Error::parse(label, e));
        let mut block = Vec::with_capacity(n);
        for (i, row) in rqq.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "tensor row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            block.push(
                row.iter()
                    .enumerate()
                    .map(|(j, s)| parse(s, format!("R^{}_{}", i + 1, j + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let col = rq0
            .iter()
            .enumerate()
            .map(|(i, s)| parse(s, format!("R^{}_0", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(block, col, params.values().copied().collect())
    }

    pub fn zero(n: usize) -> Self {
        let table = SymbolTable::new(&base_symbols(n), &[] as &[&str]).expect("valid symbols");
        let z = Expr::constant(0.0, &table);
        Self {
            n,
            rqq: vec![vec![z.clone(); n]; n],
            rq0: vec![z; n],
            params: Vec::new(),
        }
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.rqq[i][j]
    }

    pub fn dt_component(&self, i: usize) -> &Expr {
        &self.rq0[i]
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        self.rq0[0].table()
    }

    /// Same components with different parameter values.
    pub fn with_params(&self, params: Vec<f64>) -> Self {
        Self { params, ..self.clone() }
    }

    /// Evaluates `(R^i_j, R^i_0)` into any number type, with `vars = (t, q)`.
    pub fn eval_components<N: Number>(&self, vars: &[N]) -> Result<(Vec<Vec<N>>, Vec<N>)> {
        let params: Vec<N::Real> = self.params.iter().map(|&v| <N::Real as Scalar>::c(v)).collect();
        let eval = |ex: &Expr, label: String| ex.eval(vars, &params).map_err(|err| Error::eval(label, err));
        let mut rqq = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut row = Vec::with_capacity(self.n);
            for j in 0..self.n {
                row.push(eval(&self.rqq[i][j], format!("R^{}_{}", i + 1, j + 1))?);
            }
            rqq.push(row);
        }
        let rq0 = (0..self.n)
            .map(|i| eval(&self.rq0[i], format!("R^{}_0", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        Ok((rqq, rq0))
    }
}

impl<T: Scalar> TensorField<T> for BaseTensor {
    fn n(&self) -> usize {
        self.n
    }

    fn eval_tensor(&self, e: &PointE<T>) -> Result<TensorEval<T>> {
        if e.n() != self.n {
            return Err(Error::Dimension(format!("point has n={}, tensor n={}", e.n(), self.n)));
        }
        let dim = self.n + 1;
        let vars: Vec<Jet2<T>> = e
            .coords()
            .into_iter()
            .enumerate()
            .map(|(i, v)| Jet2::variable(v, i, dim))
            .collect();
        let (rqq, rq0) = self.eval_components(&vars)?;
        Ok(TensorEval::from_components(rqq, rq0))
    }
}

/// Spectrum of the block `R^i_j` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVerdict<T> {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    pub has_complex: bool,
    pub distinct: bool,
    pub all_nonzero: bool,
    pub diagonalizable: bool,
    pub min_gap: T,
}

impl<T: Scalar> SpectralVerdict<T> {
    pub fn real_parts(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// Distinct, real and nonzero: the hypotheses the lifted constructions need.
    pub fn admissible(&self) -> bool {
        self.distinct && self.all_nonzero && !self.has_complex
    }
}

pub const MAX_SPECTRAL_DIM: usize = 8;

/// Eigen-analysis of a small real matrix via its characteristic polynomial.
///
/// Complex pairs make `distinct` false. Repeated real roots are clustered
/// and `diagonalizable` is decided by the nullity of `A − λI`.
pub fn eigen_structure<T: Scalar>(block: &Matrix<T>, tol: T) -> SpectralVerdict<T> {
    let n = block.rows();
    assert_eq!(n, block.cols(), "square block required");
    assert!(n <= MAX_SPECTRAL_DIM, "eigen_structure supports n ≤ {MAX_SPECTRAL_DIM}");
    let coeffs = linalg::characteristic_polynomial(block);
    let mut eigenvalues = linalg::durand_kerner(&coeffs, T::c(1e-12), 500);
    let big = eigenvalues.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let gap_tol = tol * (T::one() + big);
    for z in &mut eigenvalues {
        if z.im.abs() <= gap_tol {
            z.im = T::zero();
        }
    }
    eigenvalues.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let has_complex = eigenvalues.iter().any(|z| !z.im.is_zero());
    let mut min_gap = T::infinity();
    for i in 0..n {
        for j in (i + 1)..n {
            min_gap = min_gap.min((eigenvalues[i] - eigenvalues[j]).norm());
        }
    }
    let separated = n < 2 || min_gap > gap_tol;
    let distinct = separated && !has_complex;
    let all_nonzero = eigenvalues.iter().all(|z| z.norm() > tol);

    let diagonalizable = if has_complex {
        false
    } else if separated {
        true
    } else {
        // cluster nearby real roots and compare algebraic with geometric multiplicity
        let mut clusters: Vec<(T, usize)> = Vec::new();
        for z in &eigenvalues {
            match clusters.last_mut() {
                Some((sum, count)) if (z.re - *sum / T::c(*count as f64)).abs() <= gap_tol => {
                    *sum = *sum + z.re;
                    *count += 1;
                }
                _ => clusters.push((z.re, 1)),
            }
        }
        let scale = T::one() + block.max_abs();
        clusters.iter().all(|&(sum, count)| {
            let lambda = sum / T::c(count as f64);
            let mut shifted = block.clone();
            for i in 0..n {
                shifted[(i, i)] = shifted[(i, i)] - lambda;
            }
            let sv = linalg::singular_values(&shifted);
            let rank = sv.iter().filter(|&&s| s > tol * scale).count();
            n - rank == count
        })
    };

    SpectralVerdict {
        eigenvalues,
        has_complex,
        distinct,
        all_nonzero,
        diagonalizable,
        min_gap: if n < 2 { T::infinity() } else { min_gap },
    }
}

/// The fibre-linear map τ_R: (t, q, p0, p) ↦ (t, q, R^i_0 p_i, R^i_j p_i).
pub fn tau_r<T: Scalar>(r: &dyn TensorField<T>, x: &PointCotangent<T>) -> Result<PointCotangent<T>> {
    let ev = r.eval_tensor(&x.base())?;
    Ok(tau_r_with(&ev, x))
}

pub(crate) fn tau_r_with<T: Scalar>(ev: &TensorEval<T>, x: &PointCotangent<T>) -> PointCotangent<T> {
    let n = ev.n();
    let p0 = (0..n).map(|i| ev.value(i + 1, 0) * x.p[i]).sum();
    let p = (0..n)
        .map(|j| (0..n).map(|i| ev.value(i + 1, j + 1) * x.p[i]).sum())
        .collect();
    PointCotangent::new(x.t, x.q.clone(), p0, p)
}
