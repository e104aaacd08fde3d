//! Complete lifts of R to T*E and J¹E*, the horizontal lift 1-form ĥR, the
//! presymplectic form ω_R = dĥR and the canonical form ω_E, as pointwise
//! matrices in the fixed coordinate bases.
//!
//! Matrices act on column vectors: entry `(row, col)` is the coefficient of
//! `∂_row ⊗ dx^col`. Two-forms are stored by their strict upper triangle with
//! the convention `ω(U, V) = Σ_ab ω_ab U^a V^b`, so `dp ∧ dq` has
//! `ω_{p,q} = 1`, `ω_{q,p} = −1`.

use crate::error::Result;
use crate::geometry::{PointCotangent, PointDual, TensorEval, TensorField};
use crate::jet::{Jet1, Jet2};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

/// Which bundle a lifted object lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bundle {
    /// J¹E*, coordinates `(t, q, p)`, dimension 2n+1.
    Dual,
    /// T*E, coordinates `(t, q, p0, p)`, dimension 2n+2.
    Cotangent,
}

impl Bundle {
    pub fn dim(self, n: usize) -> usize {
        match self {
            Bundle::Dual => 2 * n + 1,
            Bundle::Cotangent => 2 * n + 2,
        }
    }

    /// Slot of `q^a` (with `q^0 = t`).
    #[inline]
    pub fn q_slot(self, _n: usize, a: usize) -> usize {
        a
    }

    /// Slot of `p_a` (`p_0` only on T*E).
    #[inline]
    pub fn p_slot(self, n: usize, a: usize) -> Option<usize> {
        match self {
            Bundle::Dual => (a > 0).then(|| n + a),
            Bundle::Cotangent => Some(n + 1 + a),
        }
    }
}

/// A (1,1) tensor value on a bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperatorValue<T> {
    pub matrix: Matrix<T>,
}

impl<T: Scalar> LinearOperatorValue<T> {
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        self.matrix.mul_vec(v)
    }

    /// Action on a covector: `(Lα)_b = α_a L^a_b`.
    pub fn apply_covector(&self, alpha: &[T]) -> Vec<T> {
        self.matrix.vec_mul(alpha)
    }

    pub fn power_apply(&self, v: &[T], k: usize) -> Vec<T> {
        (0..k).fold(v.to_vec(), |acc, _| self.apply(&acc))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneFormValue<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> OneFormValue<T> {
    pub fn pair(&self, v: &[T]) -> T {
        linalg::dot(&self.coeffs, v)
    }
}

/// Antisymmetric matrix stored as its strict upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFormValue<T> {
    dim: usize,
    upper: Vec<T>,
}

#[inline]
fn strict_index(dim: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    a * (2 * dim - a - 1) / 2 + (b - a - 1)
}

impl<T: Scalar> TwoFormValue<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![T::zero(); dim * dim.saturating_sub(1) / 2],
        }
    }

    /// Builds from `f(a, b)` for `a < b`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut out = Self::zeros(dim);
        for a in 0..dim {
            for b in (a + 1)..dim {
                out.upper[strict_index(dim, a, b)] = f(a, b);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> T {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.upper[strict_index(self.dim, a, b)],
            Greater => -self.upper[strict_index(self.dim, b, a)],
            Equal => T::zero(),
        }
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                m[(a, b)] = self.get(a, b);
            }
        }
        m
    }

    pub fn eval(&self, u: &[T], v: &[T]) -> T {
        self.eval_scaled(u, v).0
    }

    /// `ω(u, v)` together with `1 + max |ω_ab u^a v^b|` over the summands.
    pub fn eval_scaled(&self, u: &[T], v: &[T]) -> (T, T) {
        let mut acc = T::zero();
        let mut big = T::zero();
        for a in 0..self.dim {
            for b in 0..self.dim {
                let term = self.get(a, b) * u[a] * v[b];
                acc = acc + term;
                big = big.max(term.abs());
            }
        }
        (acc, T::one() + big)
    }

    /// `i_u ω`, with `(i_u ω)_b = u^a ω_ab`.
    pub fn contract(&self, u: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|b| (0..self.dim).map(|a| u[a] * self.get(a, b)).sum())
            .collect()
    }

    /// Pullback by a linear map given as a matrix `J` (columns are images of
    /// the source basis): `(J*ω)_ab = J^c_a J^d_b ω_cd`.
    pub fn pullback(&self, j: &Matrix<T>) -> Self {
        assert_eq!(j.rows(), self.dim);
        let cols: Vec<Vec<T>> = (0..j.cols()).map(|a| j.column(a)).collect();
        Self::from_fn(j.cols(), |a, b| self.eval(&cols[a], &cols[b]))
    }

    pub fn max_abs(&self) -> T {
        linalg::max_abs(&self.upper)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            upper: self.upper.iter().zip(&other.upper).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// Entries of a lifted operator with their first partials over the bundle
/// coordinates.
#[derive(Clone, Debug)]
pub struct LiftJets<T> {
    pub bundle: Bundle,
    pub entries: Vec<Vec<Jet1<T>>>,
}

impl<T: Scalar> LiftJets<T> {
    pub fn value(&self) -> LinearOperatorValue<T> {
        let d = self.entries.len();
        let mut m = Matrix::zeros(d, d);
        for (a, row) in self.entries.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                m[(a, b)] = e.value;
            }
        }
        LinearOperatorValue { matrix: m }
    }

    /// `∂_c L^a_b`, indexed `[a][b][c]`.
    pub fn d1(&self) -> Vec<Vec<Vec<T>>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.grad.clone()).collect())
            .collect()
    }
}

fn momentum_jet1<T: Scalar>(bundle: Bundle, n: usize, p: &[T], a: usize) -> Jet1<T> {
    let dim = bundle.dim(n);
    let slot = bundle.p_slot(n, a).expect("spatial momentum slot");
    Jet1::variable(p[a - 1], slot, dim)
}

/// Components of R as jets over the bundle coordinates.
fn embedded_components<T: Scalar>(ev: &TensorEval<T>, bundle: Bundle) -> Vec<Vec<Jet2<T>>> {
    let n = ev.n();
    let dim = bundle.dim(n);
    let slots: Vec<usize> = (0..=n).map(|a| bundle.q_slot(n, a)).collect();
    (0..=n)
        .map(|a| (0..=n).map(|b| ev.jet(a, b).embed(&slots, dim)).collect())
        .collect()
}

/// Complete lift with first partials of every entry, on either bundle.
///
/// With `q^0 = t` and `R^0_b = 0`, the cotangent lift is
/// `R^a_b (∂_{q^a}⊗dq^b + ∂_{p_b}⊗dp_a) + p_a(∂_c R^a_b − ∂_b R^a_c) ∂_{p_b}⊗dq^c`;
/// the lift to J¹E* drops every `∂_{p_0}` term.
pub fn lift_jets<T: Scalar>(ev: &TensorEval<T>, p: &[T], bundle: Bundle) -> LiftJets<T> {
    let n = ev.n();
    let dim = bundle.dim(n);
    let comps = embedded_components(ev, bundle);
    let zero = Jet1::constant(T::zero(), dim);
    let mut entries = vec![vec![zero.clone(); dim]; dim];
    let moms: Vec<Jet1<T>> = (1..=n).map(|a| momentum_jet1(bundle, n, p, a)).collect();
    for a in 1..=n {
        for b in 0..=n {
            let r = comps[a][b].to_jet1();
            entries[bundle.q_slot(n, a)][bundle.q_slot(n, b)] = r.clone();
            if let Some(pb) = bundle.p_slot(n, b) {
                let pa = bundle.p_slot(n, a).unwrap();
                entries[pb][pa] = r;
            }
        }
    }
    for b in 0..=n {
        let Some(pb) = bundle.p_slot(n, b) else { continue };
        for c in 0..=n {
            if c == b {
                continue;
            }
            let mut acc = zero.clone();
            for a in 1..=n {
                let curl = comps[a][b].partial(bundle.q_slot(n, c)) - comps[a][c].partial(bundle.q_slot(n, b));
                acc = acc + moms[a - 1].clone() * curl;
            }
            entries[pb][bundle.q_slot(n, c)] = acc;
        }
    }
    LiftJets { bundle, entries }
}

pub fn complete_lift_cotangent<T: Scalar>(
    r: &dyn TensorField<T>,
    x: &PointCotangent<T>,
) -> Result<LinearOperatorValue<T>> {
    let ev = r.eval_tensor(&x.base())?;
    Ok(lift_jets(&ev, &x.p, Bundle::Cotangent).value())
}

pub fn complete_lift_dual<T: Scalar>(r: &dyn TensorField<T>, x: &PointDual<T>) -> Result<LinearOperatorValue<T>> {
    let ev = r.eval_tensor(&x.base())?;
    Ok(lift_jets(&ev, &x.p, Bundle::Dual).value())
}

/// Coefficients of ĥR = p_i R^i_b dq^b over the bundle coordinates, as jets.
/// Also serves as τ_R*θ_E on T*E.
fn horizontal_jets<T: Scalar>(ev: &TensorEval<T>, p: &[T], bundle: Bundle) -> Vec<Jet2<T>> {
    let n = ev.n();
    let dim = bundle.dim(n);
    let comps = embedded_components(ev, bundle);
    let mut out = vec![Jet2::constant(T::zero(), dim); dim];
    for b in 0..=n {
        let mut acc = Jet2::constant(T::zero(), dim);
        for a in 1..=n {
            let slot = bundle.p_slot(n, a).unwrap();
            acc = acc + Jet2::variable(p[a - 1], slot, dim) * comps[a][b].clone();
        }
        out[bundle.q_slot(n, b)] = acc;
    }
    out
}

pub fn horizontal_lift_form<T: Scalar>(r: &dyn TensorField<T>, x: &PointDual<T>) -> Result<OneFormValue<T>> {
    let ev = r.eval_tensor(&x.base())?;
    Ok(horizontal_lift_with(&ev, x))
}

pub(crate) fn horizontal_lift_with<T: Scalar>(ev: &TensorEval<T>, x: &PointDual<T>) -> OneFormValue<T> {
    OneFormValue {
        coeffs: horizontal_jets(ev, &x.p, Bundle::Dual)
            .into_iter()
            .map(|j| *j.value())
            .collect(),
    }
}

/// Coefficients of `dβ` with first partials, for a 1-form given by jets.
#[derive(Clone, Debug)]
pub struct TwoFormJets<T> {
    dim: usize,
    upper: Vec<Jet1<T>>,
}

impl<T: Scalar> TwoFormJets<T> {
    /// Exterior derivative `(dβ)_ab = ∂_a β_b − ∂_b β_a` of second-order jets.
    pub fn exterior_derivative(beta: &[Jet2<T>]) -> Self {
        let dim = beta.len();
        let mut upper = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        for a in 0..dim {
            for b in (a + 1)..dim {
                upper.push(beta[b].partial(a) - beta[a].partial(b));
            }
        }
        Self { dim, upper }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jet(&self, a: usize, b: usize) -> Jet1<T> {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.upper[strict_index(self.dim, a, b)].clone(),
            Greater => -self.upper[strict_index(self.dim, b, a)].clone(),
            Equal => Jet1::constant(T::zero(), self.dim),
        }
    }

    pub fn value(&self) -> TwoFormValue<T> {
        TwoFormValue {
            dim: self.dim,
            upper: self.upper.iter().map(|j| j.value).collect(),
        }
    }

    /// `∂_c ω_ab`.
    pub fn d1(&self, a: usize, b: usize, c: usize) -> T {
        self.jet(a, b).grad[c]
    }

    /// Largest `|(dω)_abc|` relative to `1 +` its largest summand.
    pub fn closure_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for a in 0..d {
            for b in (a + 1)..d {
                for c in (b + 1)..d {
                    let terms = [self.d1(b, c, a), self.d1(c, a, b), self.d1(a, b, c)];
                    let sum = terms[0] + terms[1] + terms[2];
                    let scale = T::one() + terms.iter().fold(T::zero(), |m, t| m.max(t.abs()));
                    worst = worst.max(sum.abs() / scale);
                }
            }
        }
        worst
    }
}

/// ω_R = dĥR with first partials of its coefficients.
pub fn omega_r_jets<T: Scalar>(ev: &TensorEval<T>, x: &PointDual<T>) -> TwoFormJets<T> {
    TwoFormJets::exterior_derivative(&horizontal_jets(ev, &x.p, Bundle::Dual))
}

pub fn omega_r_form<T: Scalar>(r: &dyn TensorField<T>, x: &PointDual<T>) -> Result<TwoFormValue<T>> {
    let ev = r.eval_tensor(&x.base())?;
    Ok(omega_r_jets(&ev, x).value())
}

/// τ_R*dθ_E at a point of T*E.
pub fn tau_pullback_dtheta<T: Scalar>(ev: &TensorEval<T>, x: &PointCotangent<T>) -> TwoFormValue<T> {
    TwoFormJets::exterior_derivative(&horizontal_jets(ev, &x.p, Bundle::Cotangent)).value()
}

/// ω_E = Σ_a dp_a ∧ dq^a on T*E (with `q^0 = t`).
pub fn omega_e_form<T: Scalar>(x: &PointCotangent<T>) -> TwoFormValue<T> {
    canonical_form(x.n())
}

pub fn canonical_form<T: Scalar>(n: usize) -> TwoFormValue<T> {
    let dim = 2 * n + 2;
    TwoFormValue::from_fn(dim, |a, b| {
        // a < b: only (q^c, p_c) pairs, where ω_{q,p} = −1
        if a <= n && b == a + n + 1 {
            -T::one()
        } else {
            T::zero()
        }
    })
}

/// The tangent map of the section `h: p0 = −H` as a (2n+2)×(2n+1) matrix,
/// given the gradient of `H` over `(t, q, p)`.
pub fn section_tangent_map<T: Scalar>(n: usize, dh: &[T]) -> Matrix<T> {
    let mut m = Matrix::zeros(2 * n + 2, 2 * n + 1);
    for a in 0..=n {
        m[(a, a)] = T::one();
    }
    for i in 1..=n {
        m[(n + 1 + i, n + i)] = T::one();
    }
    for (c, &g) in dh.iter().enumerate() {
        m[(n + 1, c)] = -g;
    }
    m
}

/// Lifts a tangent vector of J¹E* to T*E with the given `p0` component.
pub fn insert_p0<T: Scalar>(v: &[T], p0: T) -> Vec<T> {
    let n = (v.len() - 1) / 2;
    let mut out = Vec::with_capacity(v.len() + 1);
    out.extend_from_slice(&v[..=n]);
    out.push(p0);
    out.extend_from_slice(&v[n + 1..]);
    out
}

/// Tρ: drops the `p0` component of a tangent vector of T*E.
pub fn drop_p0<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = (v.len() - 2) / 2;
    let mut out = Vec::with_capacity(v.len() - 1);
    out.extend_from_slice(&v[..=n]);
    out.extend_from_slice(&v[n + 2..]);
    out
}

/// Largest `|ω(LU, V) − ω(U, LV)|` relative to the summand scale.
pub fn symmetry_residual<T: Scalar>(omega: &TwoFormValue<T>, l: &LinearOperatorValue<T>, u: &[T], v: &[T]) -> T {
    let (a, sa) = omega.eval_scaled(&l.apply(u), v);
    let (b, sb) = omega.eval_scaled(u, &l.apply(v));
    (a - b).abs() / sa.max(sb)
}

/// `p0`-independent check that the matrix is zero on the block mapping
/// momentum directions into position directions.
pub fn momentum_to_position_block_max<T: Scalar>(l: &LinearOperatorValue<T>, bundle: Bundle, n: usize) -> T {
    let mut worst = T::zero();
    for a in 0..=n {
        for b in 0..=n {
            if let Some(pb) = bundle.p_slot(n, b) {
                worst = worst.max(l.matrix[(bundle.q_slot(n, a), pb)].abs());
            }
        }
    }
    worst
}

pub fn is_zero<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_zero())
}
