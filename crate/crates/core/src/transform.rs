//! Time-dependent point transformations `(t, q) ↦ (t, Q(t, q))`, the induced
//! canonical map on momenta, the transformed Hamiltonian
//! `K = H − p_l ∂q^l/∂t` and the pushforward of the base tensor.
//!
//! Derivatives of the inverse map through momenta and `K` need third
//! derivatives of `q(t, Q)`; these come from evaluating the inverse with
//! nested jets `Jet2<Jet2<T>>`, the outer level differentiating over `(t, Q)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dynamics::{ExprHamiltonian, HamiltonianField};
use crate::error::{Error, Result};
use crate::expr::{Expr, SymbolTable};
use crate::geometry::{base_symbols, BaseTensor, PointDual, PointE, TensorEval, TensorField};
use crate::jet::Jet2;
use crate::lifts;
use crate::linalg::{self, Matrix};
use crate::scalar::{Number, Scalar};

/// Singularity threshold on the scaled determinant of `∂q/∂Q`.
pub const SINGULAR_TOL: f64 = 1e-10;

/// New-coordinate names `(t, Q1..Qn)`.
pub fn new_base_symbols(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("Q{i}")))
        .collect()
}

/// New phase-space names `(t, Q1..Qn, P1..Pn)`.
pub fn new_dual_symbols(n: usize) -> Vec<String> {
    let mut v = new_base_symbols(n);
    v.extend((1..=n).map(|i| format!("P{i}")));
    v
}

/// Forward `Q^i(t, q)` and inverse `q^i(t, Q)` component expressions.
#[derive(Clone, Debug)]
pub struct PointTransform {
    n: usize,
    forward: Vec<Expr>,
    inverse: Vec<Expr>,
    params: Vec<f64>,
}

fn table(symbols: &[String], params: &BTreeMap<String, f64>) -> Result<Arc<SymbolTable>> {
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    SymbolTable::new(symbols, &names).map_err(|e| Error::parse("transform", e))
}

impl PointTransform {
    pub fn parse<S: AsRef<str>>(forward: &[S], inverse: &[S], params: &BTreeMap<String, f64>) -> Result<Self> {
        let n = forward.len();
        if n == 0 || inverse.len() != n {
            return Err(Error::Dimension(format!(
                "transform needs matching forward and inverse components, got {} and {}",
                forward.len(),
                inverse.len()
            )));
        }
        let ft = table(&base_symbols(n), params)?;
        let it = table(&new_base_symbols(n), params)?;
        let parse = |srcs: &[S], t: &Arc<SymbolTable>, label: &str| -> Result<Vec<Expr>> {
            srcs.iter()
                .enumerate()
                .map(|(i, s)| Expr::parse(s.as_ref(), t).map_err(|e| Error::parse(format!("{label}{}", i + 1), e)))
                .collect()
        };
        Ok(Self {
            n,
            forward: parse(forward, &ft, "Q")?,
            inverse: parse(inverse, &it, "q")?,
            params: params.values().copied().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let fwd: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        let inv: Vec<String> = (1..=n).map(|i| format!("Q{i}")).collect();
        Self::parse(&fwd, &inv, &BTreeMap::new()).expect("identity transform parses")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn params<R: Scalar>(&self) -> Vec<R> {
        self.params.iter().map(|&v| R::c(v)).collect()
    }

    fn eval_all<N: Number>(&self, exprs: &[Expr], vars: &[N], label: &str) -> Result<Vec<N>> {
        let params = self.params::<N::Real>();
        exprs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.eval(vars, &params)
                    .map_err(|err| Error::eval(format!("{label}{}", i + 1), err))
            })
            .collect()
    }

    /// `Q(t, q)` for any number type, `vars = (t, q)`.
    pub fn forward_eval<N: Number>(&self, vars: &[N]) -> Result<Vec<N>> {
        self.eval_all(&self.forward, vars, "Q")
    }

    /// `q(t, Q)` for any number type, `vars = (t, Q)`.
    pub fn inverse_eval<N: Number>(&self, vars: &[N]) -> Result<Vec<N>> {
        self.eval_all(&self.inverse, vars, "q")
    }

    /// `q(t, Q)` with `∂q/∂t` and `∂q/∂Q`, where `(t, Q)` are given as inner
    /// jets. Returns `(q, q_t, J)` with `J[l][i] = ∂q^l/∂Q^i`, all inner jets.
    fn inverse_with_jacobian<C: Number>(&self, base: &[C]) -> Result<InverseJets<C>> {
        let dim = self.n + 1;
        let outer: Vec<Jet2<C>> = base
            .iter()
            .enumerate()
            .map(|(i, v)| Jet2::variable(v.clone(), i, dim))
            .collect();
        let qs = self.inverse_eval(&outer)?;
        let q = qs.iter().map(|j| j.value().clone()).collect();
        let q_t = qs.iter().map(|j| j.grad(0).clone()).collect();
        let jac = qs
            .iter()
            .map(|j| (1..=self.n).map(|i| j.grad(i).clone()).collect())
            .collect();
        Ok(InverseJets { q, q_t, jac })
    }

    fn check_jacobian<T: Scalar>(&self, jac: &[Vec<T>], t: T, big_q: &[T]) -> Result<()> {
        let det = linalg::scaled_determinant(&Matrix::from_rows(jac));
        if !(det.abs() > T::c(SINGULAR_TOL)) {
            return Err(Error::SingularJacobian(format!(
                "t={t}, Q={big_q:?} (scaled det {det})"
            )));
        }
        Ok(())
    }

    /// Old momenta from `P_i = p_l ∂q^l/∂Q^i`, for any number type.
    fn solve_momenta<N: Number>(&self, jac: &[Vec<N>], big_p: &[N]) -> Option<Vec<N>> {
        let n = self.n;
        let jt: Vec<Vec<N>> = (0..n).map(|i| (0..n).map(|l| jac[l][i].clone()).collect()).collect();
        linalg::solve(jt, big_p.to_vec(), <N::Real as Scalar>::c(1e-14))
    }

    /// The old phase-space point `(t, q(t, Q), p)` of a new point `(t, Q, P)`.
    pub fn induced_momenta<T: Scalar>(&self, x_new: &PointDual<T>) -> Result<PointDual<T>> {
        let base: Vec<T> = x_new.base().coords();
        let inv = self.inverse_with_jacobian(&base)?;
        self.check_jacobian(&inv.jac, x_new.t, &x_new.q)?;
        let p = self
            .solve_momenta(&inv.jac, &x_new.p)
            .ok_or_else(|| Error::SingularJacobian(format!("t={}, Q={:?}", x_new.t, x_new.q)))?;
        Ok(PointDual::new(x_new.t, inv.q, p))
    }

    /// The new point `(t, Q(t, q), P)` of an old point, with `P = (∂q/∂Q)ᵀ p`.
    pub fn forward_phase<T: Scalar>(&self, x_old: &PointDual<T>) -> Result<PointDual<T>> {
        let big_q = self.forward_eval(&x_old.base().coords())?;
        let mut base = vec![x_old.t];
        base.extend_from_slice(&big_q);
        let inv = self.inverse_with_jacobian(&base)?;
        self.check_jacobian(&inv.jac, x_old.t, &big_q)?;
        let p = (0..self.n)
            .map(|i| (0..self.n).map(|l| x_old.p[l] * inv.jac[l][i]).sum())
            .collect();
        Ok(PointDual::new(x_old.t, big_q, p))
    }

    /// Old coordinates `(t, q, p)` and `p_l ∂q^l/∂t` as jets over the new
    /// coordinates `(t, Q, P)`.
    pub fn phase_jets<T: Scalar>(&self, x_new: &PointDual<T>) -> Result<PhaseJets<T>> {
        let n = self.n;
        let dim = 2 * n + 1;
        let vars: Vec<Jet2<T>> = x_new
            .coords()
            .into_iter()
            .enumerate()
            .map(|(i, v)| Jet2::variable(v, i, dim))
            .collect();
        let inv = self.inverse_with_jacobian(&vars[..=n])?;
        let jac_vals: Vec<Vec<T>> = inv.jac.iter().map(|r| r.iter().map(|j| *j.value()).collect()).collect();
        self.check_jacobian(&jac_vals, x_new.t, &x_new.q)?;
        let p = self
            .solve_momenta(&inv.jac, &vars[n + 1..])
            .ok_or_else(|| Error::SingularJacobian(format!("t={}, Q={:?}", x_new.t, x_new.q)))?;
        let shift = p
            .iter()
            .zip(&inv.q_t)
            .fold(Jet2::constant(T::zero(), dim), |acc, (pl, ql)| {
                acc + pl.clone() * ql.clone()
            });
        let mut old = vec![vars[0].clone()];
        old.extend(inv.q);
        old.extend(p);
        Ok(PhaseJets { old, shift })
    }

    /// `max |Q(t, q(t, Q)) − Q|` at new base points and `max |q(t, Q(t, q)) − q|`
    /// at old base points.
    pub fn roundtrip_residual<T: Scalar>(&self, new_points: &[PointE<T>], old_points: &[PointE<T>]) -> Result<T> {
        let mut worst = T::zero();
        for e in new_points {
            let q = self.inverse_eval(&e.coords())?;
            let mut back = vec![e.t];
            back.extend(q);
            let big_q = self.forward_eval(&back)?;
            worst = big_q.iter().zip(&e.q).fold(worst, |m, (a, b)| m.max((*a - *b).abs()));
        }
        for e in old_points {
            let big_q = self.forward_eval(&e.coords())?;
            let mut back = vec![e.t];
            back.extend(big_q);
            let q = self.inverse_eval(&back)?;
            worst = q.iter().zip(&e.q).fold(worst, |m, (a, b)| m.max((*a - *b).abs()));
        }
        Ok(worst)
    }

    /// Jacobian of the induced map `(t, Q, P0, P) ↦ (t, q, p0, p)` on T*E,
    /// with `p0 = P0 − p_l ∂q^l/∂t`.
    pub fn cotangent_jacobian<T: Scalar>(&self, x_new: &PointDual<T>) -> Result<Matrix<T>> {
        let n = self.n;
        let pj = self.phase_jets(x_new)?;
        let dim = 2 * n + 2;
        let mut m = Matrix::zeros(dim, dim);
        let src = |c: usize| -> Option<usize> {
            match c.cmp(&(n + 1)) {
                std::cmp::Ordering::Less => Some(c),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(c - 1),
            }
        };
        for out in 0..dim {
            for c in 0..dim {
                let v = match (src(out), src(c)) {
                    (Some(o), Some(s)) => *pj.old[o].grad(s),
                    (None, Some(s)) => -*pj.shift.grad(s),
                    (None, None) => T::one(),
                    (Some(_), None) => T::zero(),
                };
                m[(out, c)] = v;
            }
        }
        Ok(m)
    }

    /// Largest normalized `|ω_E(JΦ u, JΦ v) − ω_E(u, v)|` over the given pairs.
    pub fn canonicity_residual<T: Scalar>(&self, x_new: &PointDual<T>, pairs: &[(Vec<T>, Vec<T>)]) -> Result<T> {
        let jac = self.cotangent_jacobian(x_new)?;
        let omega = lifts::canonical_form::<T>(self.n);
        let mut worst = T::zero();
        for (u, v) in pairs {
            let (a, sa) = omega.eval_scaled(&jac.mul_vec(u), &jac.mul_vec(v));
            let (b, sb) = omega.eval_scaled(u, v);
            worst = worst.max((a - b).abs() / sa.max(sb));
        }
        Ok(worst)
    }
}

struct InverseJets<C> {
    q: Vec<C>,
    q_t: Vec<C>,
    jac: Vec<Vec<C>>,
}

/// Old phase-space coordinates as jets over new ones, plus `p_l ∂q^l/∂t`.
#[derive(Clone, Debug)]
pub struct PhaseJets<T> {
    pub old: Vec<Jet2<T>>,
    pub shift: Jet2<T>,
}

/// `K(t, Q, P) = H(t, q, p) − p_l ∂q^l/∂t`, evaluated through the inverse map.
#[derive(Clone, Debug)]
pub struct TransformedHamiltonian {
    pub original: ExprHamiltonian,
    pub transform: PointTransform,
}

impl TransformedHamiltonian {
    pub fn new(original: ExprHamiltonian, transform: PointTransform) -> Result<Self> {
        if HamiltonianField::<f64>::n(&original) != transform.n() {
            return Err(Error::Dimension("Hamiltonian and transform disagree on n".into()));
        }
        Ok(Self { original, transform })
    }
}

impl<T: Scalar> HamiltonianField<T> for TransformedHamiltonian {
    fn n(&self) -> usize {
        self.transform.n()
    }

    fn jet(&self, x: &PointDual<T>) -> Result<Jet2<T>> {
        let pj = self.transform.phase_jets(x)?;
        Ok(self.original.eval(&pj.old)? - pj.shift)
    }
}

pub fn transformed_hamiltonian<T: Scalar>(
    h: &ExprHamiltonian,
    transform: &PointTransform,
    x_new: &PointDual<T>,
) -> Result<T> {
    let old = transform.induced_momenta(x_new)?;
    let base: Vec<T> = x_new.base().coords();
    let inv = transform.inverse_with_jacobian(&base)?;
    let shift: T = old.p.iter().zip(&inv.q_t).map(|(&p, &qt)| p * qt).sum();
    Ok(HamiltonianField::<T>::value(h, &old)? - shift)
}

/// R pushed forward to the new coordinates: `R' = (∂x/∂y)⁻¹ R (∂x/∂y)` with
/// `x = (t, q)`, `y = (t, Q)`, including all `∂q/∂t` terms.
#[derive(Clone, Debug)]
pub struct PushforwardTensor {
    pub original: BaseTensor,
    pub transform: PointTransform,
}

impl PushforwardTensor {
    pub fn new(original: BaseTensor, transform: PointTransform) -> Result<Self> {
        if TensorField::<f64>::n(&original) != transform.n() {
            return Err(Error::Dimension("tensor and transform disagree on n".into()));
        }
        Ok(Self { original, transform })
    }
}

impl<T: Scalar> TensorField<T> for PushforwardTensor {
    fn n(&self) -> usize {
        self.transform.n()
    }

    fn eval_tensor(&self, e: &PointE<T>) -> Result<TensorEval<T>> {
        let n = self.transform.n();
        let dim = n + 1;
        let vars: Vec<Jet2<T>> = e
            .coords()
            .into_iter()
            .enumerate()
            .map(|(i, v)| Jet2::variable(v, i, dim))
            .collect();
        let inv = self.transform.inverse_with_jacobian(&vars)?;
        let jac_vals: Vec<Vec<T>> = inv.jac.iter().map(|r| r.iter().map(|j| *j.value()).collect()).collect();
        self.transform.check_jacobian(&jac_vals, e.t, &e.q)?;

        let zero = Jet2::constant(T::zero(), dim);
        let one = Jet2::constant(T::one(), dim);
        // B = ∂(t, q)/∂(t, Q)
        let mut b = vec![vec![zero.clone(); dim]; dim];
        b[0][0] = one.clone();
        for l in 0..n {
            b[l + 1][0] = inv.q_t[l].clone();
            for i in 0..n {
                b[l + 1][i + 1] = inv.jac[l][i].clone();
            }
        }
        let mut old = vec![vars[0].clone()];
        old.extend(inv.q);
        let (rqq, rq0) = self.original.eval_components(&old)?;
        let mut m = vec![vec![zero.clone(); dim]; dim];
        for i in 0..n {
            m[i + 1][0] = rq0[i].clone();
            for j in 0..n {
                m[i + 1][j + 1] = rqq[i][j].clone();
            }
        }
        // A = B⁻¹, column by column
        let mut a = vec![vec![zero.clone(); dim]; dim];
        for col in 0..dim {
            let mut rhs = vec![zero.clone(); dim];
            rhs[col] = one.clone();
            let x = linalg::solve(b.clone(), rhs, T::c(1e-14))
                .ok_or_else(|| Error::SingularJacobian(format!("t={}, Q={:?}", e.t, e.q)))?;
            for row in 0..dim {
                a[row][col] = x[row].clone();
            }
        }
        let mm = |x: &[Vec<Jet2<T>>], y: &[Vec<Jet2<T>>]| -> Vec<Vec<Jet2<T>>> {
            (0..dim)
                .map(|r| {
                    (0..dim)
                        .map(|c| (0..dim).fold(zero.clone(), |acc, k| acc + x[r][k].clone() * y[k][c].clone()))
                        .collect()
                })
                .collect()
        };
        let rp = mm(&mm(&a, &m), &b);
        let new_rqq = (1..dim).map(|i| rp[i][1..].to_vec()).collect();
        let new_rq0 = (1..dim).map(|i| rp[i][0].clone()).collect();
        Ok(TensorEval::from_components(new_rqq, new_rq0))
    }
}

/// Pushforward value at a new base point with its diagonality diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PushforwardValue<T> {
    pub matrix: Matrix<T>,
    /// Largest off-diagonal block entry or `t`-column entry.
    pub diagonality: T,
    pub diagonal: Vec<T>,
}

pub fn pushforward_tensor<T: Scalar>(
    r: &BaseTensor,
    transform: &PointTransform,
    e_new: &PointE<T>,
) -> Result<PushforwardValue<T>> {
    let pf = PushforwardTensor::new(r.clone(), transform.clone())?;
    Ok(pushforward_of_eval(&pf.eval_tensor(e_new)?))
}

pub fn pushforward_of_eval<T: Scalar>(ev: &TensorEval<T>) -> PushforwardValue<T> {
    let n = ev.n();
    let mut diagonality = T::zero();
    for i in 1..=n {
        for j in 0..=n {
            if i != j {
                diagonality = diagonality.max(ev.value(i, j).abs());
            }
        }
    }
    PushforwardValue {
        matrix: ev.value_matrix(),
        diagonality,
        diagonal: (1..=n).map(|i| ev.value(i, i)).collect(),
    }
}

/// Coarse check that each `λ_i` depends only on `Q^i`: largest relative
/// change of `λ_i` when moving along the other `Q^j` lines by `±step`,
/// `±2·step` (scaled by `1 + |Q^j|`). Heuristic only.
pub fn eigenvalue_dependence<T: Scalar>(field: &dyn TensorField<T>, e_new: &PointE<T>, step: T) -> Result<T> {
    let n = e_new.n();
    let here = field.eval_tensor(e_new)?;
    let mut worst = T::zero();
    for j in 0..n {
        for k in [-2.0, -1.0, 1.0, 2.0] {
            let mut q = e_new.q.clone();
            q[j] = q[j] + T::c(k) * step * (T::one() + q[j].abs());
            let ev = field.eval_tensor(&PointE::new(e_new.t, q))?;
            for i in 0..n {
                if i != j {
                    let (a, b) = (here.value(i + 1, i + 1), ev.value(i + 1, i + 1));
                    worst = worst.max((a - b).abs() / (T::one() + a.abs()));
                }
            }
        }
    }
    Ok(worst)
}
