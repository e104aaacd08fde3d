//! Separability diagnostics: Forbat residuals in the given coordinates, the
//! dual-bundle test `L_{X_h} ω_R |_{D_h} = 0`, the cotangent-bundle test
//! `d(dH̃ ∘ R^c) |_{D_H̃} = 0`, the auxiliary pullback identity and the
//! eigenbasis of Darboux–Nijenhuis coordinates.

use crate::dynamics::{self, HamiltonianField, PointData};
use crate::error::{Error, Result};
use crate::geometry::{PointDual, TensorField};
use crate::jet::{Jet1, Jet2};
use crate::lifts::{self, Bundle, TwoFormJets, TwoFormValue};
use crate::linalg;
use crate::scalar::Scalar;

/// A residual with the scale it was normalized by.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<T> {
    pub value: T,
    pub scale: T,
}

impl<T: Scalar> Scaled<T> {
    fn from_terms(terms: &[T]) -> Self {
        Self {
            value: terms.iter().copied().sum(),
            scale: T::one() + terms.iter().fold(T::zero(), |m, t| m.max(t.abs())),
        }
    }

    pub fn relative(&self) -> T {
        self.value.abs() / self.scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForbatResiduals<T> {
    /// `(i, j, residual)` for `i < j` (zero-based spatial indices).
    pub eq1: Vec<(usize, usize, Scaled<T>)>,
    pub eq2: Vec<Scaled<T>>,
}

impl<T: Scalar> ForbatResiduals<T> {
    pub fn max_relative(&self) -> T {
        self.eq1
            .iter()
            .map(|(_, _, s)| s.relative())
            .chain(self.eq2.iter().map(Scaled::relative))
            .fold(T::zero(), T::max)
    }

    /// The `eq1` pair with the largest relative residual.
    pub fn worst_pair(&self) -> Option<(usize, usize)> {
        self.eq1
            .iter()
            .fold(None, |best: Option<(usize, usize, T)>, &(i, j, s)| match best {
                Some((_, _, v)) if v >= s.relative() => best,
                _ => Some((i, j, s.relative())),
            })
            .map(|(i, j, _)| (i, j))
    }
}

/// Forbat residuals from the jet of `H` over `(t, q, p)`.
pub fn forbat_from_jet<T: Scalar>(n: usize, h: &Jet2<T>) -> ForbatResiduals<T> {
    let q = |i: usize| i + 1;
    let p = |i: usize| n + i + 1;
    let g = |a: usize| *h.grad(a);
    let hh = |a: usize, b: usize| *h.hess(a, b);
    let mut eq1 = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let terms = [
                g(p(i)) * hh(q(i), q(j)) * g(p(j)),
                -(g(p(i)) * hh(q(i), p(j)) * g(q(j))),
                -(g(q(i)) * hh(p(i), q(j)) * g(p(j))),
                g(q(i)) * hh(p(i), p(j)) * g(q(j)),
            ];
            eq1.push((i, j, Scaled::from_terms(&terms)));
        }
    }
    let eq2 = (0..n)
        .map(|i| Scaled::from_terms(&[g(p(i)) * hh(q(i), 0), -(g(q(i)) * hh(p(i), 0))]))
        .collect();
    ForbatResiduals { eq1, eq2 }
}

pub fn forbat_residuals<T: Scalar>(h: &dyn HamiltonianField<T>, x: &PointDual<T>) -> Result<ForbatResiduals<T>> {
    Ok(forbat_from_jet(x.n(), &h.jet(x)?))
}

/// Components of `X_h` as jets over `(t, q, p)`.
fn x_h_jets<T: Scalar>(n: usize, h: &Jet2<T>) -> Vec<Jet1<T>> {
    let dim = 2 * n + 1;
    let mut v = vec![Jet1::constant(T::one(), dim)];
    for i in 1..=n {
        v.push(h.partial(n + i));
    }
    for i in 1..=n {
        v.push(-h.partial(i));
    }
    v
}

/// `L_{X_h} ω_R` by the component formula
/// `X^c ∂_c ω_ab + ω_cb ∂_a X^c + ω_ac ∂_b X^c`.
pub fn lie_derivative_components<T: Scalar>(pd: &PointData<T>) -> TwoFormValue<T> {
    let n = pd.n();
    let w = lifts::omega_r_jets(&pd.tensor, &pd.x);
    let x = x_h_jets(n, &pd.h);
    let dim = w.dim();
    TwoFormValue::from_fn(dim, |a, b| {
        let mut acc = T::zero();
        for c in 0..dim {
            acc = acc + x[c].value * w.d1(a, b, c);
            acc = acc + w.jet(c, b).value * x[c].grad[a];
            acc = acc + w.jet(a, c).value * x[c].grad[b];
        }
        acc
    })
}

/// `L_{X_h} ω_R` as `d(i_{X_h} ω_R)` for closed `ω_R`.
pub fn lie_derivative_cartan<T: Scalar>(pd: &PointData<T>) -> TwoFormValue<T> {
    let n = pd.n();
    let w = lifts::omega_r_jets(&pd.tensor, &pd.x);
    let x = x_h_jets(n, &pd.h);
    let dim = w.dim();
    let beta: Vec<Jet1<T>> = (0..dim)
        .map(|b| {
            (0..dim).fold(Jet1::constant(T::zero(), dim), |acc, a| {
                acc + x[a].clone() * w.jet(a, b)
            })
        })
        .collect();
    TwoFormValue::from_fn(dim, |a, b| beta[b].grad[a] - beta[a].grad[b])
}

pub fn lie_derivative_omega_r<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
) -> Result<TwoFormValue<T>> {
    Ok(lie_derivative_components(&PointData::evaluate(r, h, x)?))
}

/// Worst normalized pairing of a 2-form over a distribution basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrabilityResidual<T> {
    pub value: T,
    pub worst_pair: Option<(usize, usize)>,
    pub rank: usize,
    pub rank_ok: bool,
}

fn restrict<T: Scalar>(form: &TwoFormValue<T>, vs: &[Vec<T>], rank_tol: T) -> IntegrabilityResidual<T> {
    let (value, worst_pair) = dynamics::max_pairing(form, vs);
    let rank = linalg::numerical_rank(&linalg::Matrix::from_columns(vs), rank_tol);
    IntegrabilityResidual {
        value,
        worst_pair,
        rank,
        rank_ok: rank == vs.len(),
    }
}

pub fn integrability_dual_with<T: Scalar>(pd: &PointData<T>, rank_tol: T) -> IntegrabilityResidual<T> {
    restrict(
        &lie_derivative_components(pd),
        &pd.basis(Bundle::Dual).vectors,
        rank_tol,
    )
}

pub fn integrability_residual_dual<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
    rank_tol: T,
) -> Result<IntegrabilityResidual<T>> {
    Ok(integrability_dual_with(&PointData::evaluate(r, h, x)?, rank_tol))
}

/// `dH̃` as jets over `(t, q, p0, p)`.
fn d_h_tilde_jets<T: Scalar>(n: usize, h: &Jet2<T>) -> Vec<Jet1<T>> {
    let dim = 2 * n + 2;
    let widen = |j: Jet1<T>| Jet1 {
        value: j.value,
        grad: lifts::insert_p0(&j.grad, T::zero()),
    };
    let mut out: Vec<Jet1<T>> = (0..=n).map(|a| widen(h.partial(a))).collect();
    out.push(Jet1::constant(T::one(), dim));
    out.extend((1..=n).map(|i| widen(h.partial(n + i))));
    out
}

/// `α₁ = dH̃ ∘ R^c` and its exterior derivative on T*E.
pub fn d_alpha1<T: Scalar>(pd: &PointData<T>) -> TwoFormValue<T> {
    let n = pd.n();
    let rc = pd.lift_jets(Bundle::Cotangent);
    let dht = d_h_tilde_jets(n, &pd.h);
    let dim = 2 * n + 2;
    let alpha: Vec<Jet1<T>> = (0..dim)
        .map(|b| {
            (0..dim).fold(Jet1::constant(T::zero(), dim), |acc, a| {
                acc + dht[a].clone() * rc.entries[a][b].clone()
            })
        })
        .collect();
    TwoFormValue::from_fn(dim, |a, b| alpha[b].grad[a] - alpha[a].grad[b])
}

pub fn integrability_cotangent_with<T: Scalar>(pd: &PointData<T>, rank_tol: T) -> IntegrabilityResidual<T> {
    restrict(&d_alpha1(pd), &pd.basis(Bundle::Cotangent).vectors, rank_tol)
}

/// The cotangent test at the h-image of `x` (the residual does not depend on `p0`).
pub fn integrability_residual_cotangent<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
    rank_tol: T,
) -> Result<IntegrabilityResidual<T>> {
    Ok(integrability_cotangent_with(&PointData::evaluate(r, h, x)?, rank_tol))
}

/// `max_c |(i_{R̃^{k−1} X_h} ω_R + h*(dH̃ ∘ (R^c)^k))_c|`, componentwise relative.
pub fn aux_identity_with<T: Scalar>(pd: &PointData<T>, k: usize) -> Result<T> {
    let n = pd.n();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("power k={k} outside 1..={n}")));
    }
    let omega = lifts::omega_r_jets(&pd.tensor, &pd.x).value();
    let dual = pd.basis(Bundle::Dual);
    let lhs = omega.contract(&dual.vectors[k - 1]);

    let rc = pd.lift(Bundle::Cotangent);
    let mut alpha = pd.d_h_tilde();
    for _ in 0..k {
        alpha = rc.apply_covector(&alpha);
    }
    let th = pd.section_tangent();
    let dim = 2 * n + 1;
    let mut worst = T::zero();
    for c in 0..dim {
        let terms: Vec<T> = (0..th.rows()).map(|a| alpha[a] * th[(a, c)]).collect();
        let pulled: T = terms.iter().copied().sum();
        let scale = T::one() + lhs[c].abs().max(linalg::max_abs(&terms));
        worst = worst.max((lhs[c] + pulled).abs() / scale);
    }
    Ok(worst)
}

pub fn aux_identity_residual<T: Scalar>(
    r: &dyn TensorField<T>,
    h: &dyn HamiltonianField<T>,
    x: &PointDual<T>,
    k: usize,
) -> Result<T> {
    aux_identity_with(&PointData::evaluate(r, h, x)?, k)
}

/// Eigenvectors of the lifted tensor in Darboux–Nijenhuis coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenbasis<T> {
    /// `X_0 = ∂_t`, then `X_i = K_{P_i} ∂_{Q^i} − K_{Q^i} ∂_{P_i}` on J¹E*.
    pub dual: Vec<Vec<T>>,
    /// `Y_0 = ∂_t − K_t ∂_{P_0}`, then the `X_i` with zero `P_0` component, on T*E.
    pub cotangent: Vec<Vec<T>>,
    /// Indices `i` (one-based) with `X_i = 0`.
    pub degenerate: Vec<usize>,
}

pub fn eigenbasis_dn<T: Scalar>(n: usize, k_jet: &Jet2<T>) -> Eigenbasis<T> {
    let dim = 2 * n + 1;
    let g = k_jet.gradient();
    let mut dual = Vec::with_capacity(n + 1);
    let mut x0 = vec![T::zero(); dim];
    x0[0] = T::one();
    dual.push(x0);
    let mut degenerate = Vec::new();
    for i in 1..=n {
        let mut v = vec![T::zero(); dim];
        v[i] = g[n + i];
        v[n + i] = -g[i];
        if v.iter().all(|x| *x == T::zero()) {
            degenerate.push(i);
        }
        dual.push(v);
    }
    let mut cotangent: Vec<Vec<T>> = dual.iter().map(|v| lifts::insert_p0(v, T::zero())).collect();
    cotangent[0][n + 1] = -g[0];
    Eigenbasis {
        dual,
        cotangent,
        degenerate,
    }
}

/// Numerical eigenbasis pairings of `L_{X_h} ω_R` against the closed forms
/// `(λ_j − λ_i)(K_{P_iQ^j}K_{Q^i}K_{P_j} + K_{P_jQ^i}K_{Q^j}K_{P_i} − K_{Q^iQ^j}K_{P_i}K_{P_j} − K_{P_iP_j}K_{Q^i}K_{Q^j})`
/// on `(X_i, X_j)` and `λ_i(K_{Q^it}K_{P_i} − K_{P_it}K_{Q^i})` on `(X_i, X_0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DnComparison<T> {
    /// `(i, j, numeric, closed form, scale)` for `1 ≤ i < j ≤ n`.
    pub pairs: Vec<(usize, usize, T, T, T)>,
    /// `(i, numeric, closed form, scale)` for the pairing with `X_0`.
    pub time: Vec<(usize, T, T, T)>,
}

impl<T: Scalar> DnComparison<T> {
    /// Largest `|numeric − closed| / scale`.
    pub fn max_mismatch(&self) -> T {
        self.pairs
            .iter()
            .map(|&(_, _, a, b, s)| (a - b).abs() / s)
            .chain(self.time.iter().map(|&(_, a, b, s)| (a - b).abs() / s))
            .fold(T::zero(), T::max)
    }

    /// The `(i, j)` pairing of largest relative magnitude (zero-based).
    pub fn worst_pair(&self) -> Option<(usize, usize)> {
        self.pairs
            .iter()
            .fold(None, |best: Option<(usize, usize, T)>, &(i, j, v, _, s)| {
                let r = v.abs() / s;
                match best {
                    Some((_, _, m)) if m >= r => best,
                    _ => Some((i - 1, j - 1, r)),
                }
            })
            .map(|(i, j, _)| (i, j))
    }
}

/// Caller asserts the coordinates are Darboux–Nijenhuis; `λ_i` are read off
/// the diagonal of the tensor block.
pub fn dn_comparison<T: Scalar>(pd: &PointData<T>) -> DnComparison<T> {
    let n = pd.n();
    let lam: Vec<T> = (1..=n).map(|i| pd.tensor.value(i, i)).collect();
    let basis = eigenbasis_dn(n, &pd.h);
    let form = lie_derivative_components(pd);
    let g = |a: usize| *pd.h.grad(a);
    let hh = |a: usize, b: usize| *pd.h.hess(a, b);
    let (q, p) = (|i: usize| i, |i: usize| n + i);
    let mut pairs = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let (num, s_num) = form.eval_scaled(&basis.dual[i], &basis.dual[j]);
            let d = lam[j - 1] - lam[i - 1];
            let terms = [
                d * hh(p(i), q(j)) * g(q(i)) * g(p(j)),
                d * hh(p(j), q(i)) * g(q(j)) * g(p(i)),
                -(d * hh(q(i), q(j)) * g(p(i)) * g(p(j))),
                -(d * hh(p(i), p(j)) * g(q(i)) * g(q(j))),
            ];
            let closed = Scaled::from_terms(&terms);
            pairs.push((i, j, num, closed.value, s_num.max(closed.scale)));
        }
    }
    let time = (1..=n)
        .map(|i| {
            let (num, s_num) = form.eval_scaled(&basis.dual[i], &basis.dual[0]);
            let l = lam[i - 1];
            let closed = Scaled::from_terms(&[l * hh(q(i), 0) * g(p(i)), -(l * hh(p(i), 0) * g(q(i)))]);
            (i, num, closed.value, s_num.max(closed.scale))
        })
        .collect();
    DnComparison { pairs, time }
}

/// Closure residual of `ω_R` at a point.
pub fn omega_r_closure<T: Scalar>(pd: &PointData<T>) -> T {
    TwoFormJets::closure_residual(&lifts::omega_r_jets(&pd.tensor, &pd.x))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dynamics::ExprHamiltonian;
    use crate::geometry::BaseTensor;

    fn ham(n: usize, src: &str) -> ExprHamiltonian {
        ExprHamiltonian::parse(n, src, &BTreeMap::new()).unwrap()
    }

    fn diag(entries: &[&str]) -> BaseTensor {
        let n = entries.len();
        let rqq: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { entries[i].to_string() } else { "0".into() })
                    .collect()
            })
            .collect();
        BaseTensor::parse(&rqq, &vec!["0".to_string(); n], &BTreeMap::new()).unwrap()
    }

    #[test]
    fn forbat_examples() {
        let h = ham(2, "q1^2*q2 + p1^2 + p2^2");
        let f = forbat_residuals(&h, &PointDual::new(0.0, vec![1.0, 1.0], vec![1.0, 1.0])).unwrap();
        assert_eq!(f.eq1.len(), 1);
        assert_eq!(f.eq1[0].2.value, 8.0);
        assert_eq!(f.eq2.len(), 2);

        let k = ham(2, "t^2*(p1^2 + p2^2 + q1^2 + q2^2)");
        let f = forbat_residuals(&k, &PointDual::new(1.3, vec![0.4, -0.7], vec![0.2, 1.1])).unwrap();
        assert!(f.max_relative() < 1e-15);
    }

    #[test]
    fn lie_derivative_routes_agree() {
        let r = crate::fixtures::example_tensor(1.0, false);
        let h = crate::fixtures::example_hamiltonian(&crate::fixtures::default_params(), true);
        let x = PointDual::new(1.4, vec![0.3, 0.6], vec![0.8, 0.2]);
        let pd = PointData::evaluate(&r, &h, &x).unwrap();
        let a = lie_derivative_components(&pd);
        let b = lie_derivative_cartan(&pd);
        assert!(a.sub(&b).max_abs() / (1.0 + a.max_abs()) < 1e-11);
        assert!(a.max_abs() > 1e-3);
    }

    #[test]
    fn zero_tensor_gives_zero_form() {
        let h = ham(2, "q1^2*q2 + p1^2 + t*p2^2");
        let x = PointDual::new(0.5, vec![1.0, 2.0], vec![3.0, 4.0]);
        let w = lie_derivative_omega_r(&BaseTensor::zero(2), &h, &x).unwrap();
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn separated_diagonal_problem_passes_both_tests() {
        let r = diag(&["2", "5"]);
        let h = ham(2, "p1^2 + q1^4 + 0.5*p2^2 + q2^2");
        let x = PointDual::new(0.5, vec![0.3, 0.7], vec![0.4, 0.9]);
        let d = integrability_residual_dual(&r, &h, &x, 1e-9).unwrap();
        assert!(d.rank_ok && d.value < 1e-13, "{d:?}");
        let c = integrability_residual_cotangent(&r, &h, &x, 1e-9).unwrap();
        assert!(c.rank_ok && c.value < 1e-13, "{c:?}");
    }

    #[test]
    fn eigenbasis_example() {
        let k = ham(2, "t^2*(p1^2 + q1^2 + p2^2 + q2^2)");
        let j = k.jet(&PointDual::new(1.0, vec![1.0, 1.0], vec![1.0, 1.0])).unwrap();
        let b = eigenbasis_dn(2, &j);
        assert_eq!(b.dual[1], vec![0.0, 2.0, 0.0, -2.0, 0.0]);
        assert_eq!(b.cotangent[0], vec![1.0, 0.0, 0.0, -8.0, 0.0, 0.0]);
        assert!(b.degenerate.is_empty());

        let k1 = ham(2, "p2^2 + q2^2");
        let j = k1.jet(&PointDual::new(1.0, vec![1.0, 1.0], vec![1.0, 1.0])).unwrap();
        assert_eq!(eigenbasis_dn(2, &j).degenerate, vec![1]);
    }

    #[test]
    fn diagonal_closed_form_time_pairing() {
        let r = diag(&["q1", "q2"]);
        let k = ham(2, "t^2*(p1^2 + p2^2 + q1^2 + q2^2)");
        let pd = PointData::evaluate(&r, &k, &PointDual::<f64>::new(1.2, vec![0.5, 0.8], vec![0.3, 0.6])).unwrap();
        let cmp = dn_comparison(&pd);
        assert!(cmp.max_mismatch() < 1e-12, "{cmp:?}");
        for &(_, v, _, s) in &cmp.time {
            assert!(v.abs() / s < 1e-12);
        }
    }

    #[test]
    fn diagonal_closed_form_coupled_pairing() {
        let r = diag(&["q1", "q2"]);
        let k = ham(2, "t^2*(p1^2 + p2^2 + q1^2*q2)");
        let pd = PointData::evaluate(&r, &k, &PointDual::<f64>::new(1.2, vec![0.5, 0.8], vec![0.3, 0.6])).unwrap();
        let cmp = dn_comparison(&pd);
        assert!(cmp.max_mismatch() < 1e-12, "{cmp:?}");
        let (_, _, v, _, s) = cmp.pairs[0];
        assert!(v.abs() / s > 1e-3);
    }

    #[test]
    fn aux_identity_n1() {
        let r = BaseTensor::parse(&[vec!["q1".into()]], &["t".into()], &BTreeMap::new()).unwrap();
        let h = ham(1, "0.5*p1^2");
        let v = aux_identity_residual(&r, &h, &PointDual::new(2.0, vec![3.0], vec![5.0]), 1).unwrap();
        assert_eq!(v, 0.0);
    }
}
