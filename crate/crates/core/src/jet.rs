//! Truncated Taylor arithmetic.
//!
//! [`Jet2`] carries a value, gradient and symmetric Hessian over a fixed
//! ordered set of active variables. Coefficients are generic over [`Number`],
//! so a `Jet2<Jet2<f64>>` yields mixed derivatives up to order four; the
//! transform module uses this to differentiate Jacobians of coordinate maps.
//!
//! [`Jet1`] is the first-order counterpart, used for quantities that are
//! already first derivatives of a [`Jet2`] (lift components, form
//! coefficients) and only need one more derivative.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::Number;

#[inline]
fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * dim - i + 1) / 2 + (j - i)
}

/// Second-order jet: value, gradient and Hessian (upper triangle, row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<C> {
    value: C,
    grad: Vec<C>,
    hess: Vec<C>,
}

impl<C: Number> Jet2<C> {
    pub fn constant(value: C, dim: usize) -> Self {
        let zero = value.lift(C::Real::zero());
        Self {
            grad: vec![zero.clone(); dim],
            hess: vec![zero; dim * (dim + 1) / 2],
            value,
        }
    }

    /// The coordinate function of slot `slot`, evaluated at `value`.
    pub fn variable(value: C, slot: usize, dim: usize) -> Self {
        assert!(slot < dim, "slot {slot} out of range for {dim} active variables");
        let mut j = Self::constant(value, dim);
        j.grad[slot] = j.value.lift(C::Real::one());
        j
    }

    /// Assembles a jet from explicit parts; `hess` is the upper triangle.
    pub fn from_parts(value: C, grad: Vec<C>, hess: Vec<C>) -> Self {
        let dim = grad.len();
        assert_eq!(hess.len(), dim * (dim + 1) / 2, "hessian triangle length");
        Self { value, grad, hess }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn value(&self) -> &C {
        &self.value
    }

    #[inline]
    pub fn grad(&self, i: usize) -> &C {
        &self.grad[i]
    }

    pub fn gradient(&self) -> &[C] {
        &self.grad
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> &C {
        &self.hess[tri_index(self.dim(), i, j)]
    }

    pub fn into_value(self) -> C {
        self.value
    }

    /// First-order jet of the partial derivative along slot `i`.
    pub fn partial(&self, i: usize) -> Jet1<C> {
        let k = self.dim();
        Jet1 {
            value: self.grad[i].clone(),
            grad: (0..k).map(|j| self.hess(i, j).clone()).collect(),
        }
    }

    /// Drops the second-order part.
    pub fn to_jet1(&self) -> Jet1<C> {
        Jet1 {
            value: self.value.clone(),
            grad: self.grad.clone(),
        }
    }

    /// Re-indexes the active variables: old slot `s` becomes `slots[s]` in a
    /// jet over `new_dim` variables; the new slots not hit have zero derivatives.
    pub fn embed(&self, slots: &[usize], new_dim: usize) -> Self {
        assert_eq!(slots.len(), self.dim());
        let mut out = Self::constant(self.value.clone(), new_dim);
        for (i, &si) in slots.iter().enumerate() {
            out.grad[si] = self.grad[i].clone();
            for (j, &sj) in slots.iter().enumerate().skip(i) {
                out.hess[tri_index(new_dim, si, sj)] = self.hess(i, j).clone();
            }
        }
        out
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// the current value.
    fn chain(&self, f0: C, f1: C, f2: C) -> Self {
        let k = self.dim();
        let grad: Vec<C> = self.grad.iter().map(|g| f1.clone() * g.clone()).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..k {
            for j in i..k {
                let h = f1.clone() * self.hess(i, j).clone() + f2.clone() * self.grad[i].clone() * self.grad[j].clone();
                hess.push(h);
            }
        }
        Self { value: f0, grad, hess }
    }
}

impl<C: Number> Add for Jet2<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        Self {
            value: self.value + rhs.value,
            grad: self.grad.into_iter().zip(rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.into_iter().zip(rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<C: Number> Sub for Jet2<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        Self {
            value: self.value - rhs.value,
            grad: self.grad.into_iter().zip(rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.into_iter().zip(rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<C: Number> Neg for Jet2<C> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.into_iter().map(|a| -a).collect(),
            hess: self.hess.into_iter().map(|a| -a).collect(),
        }
    }
}

impl<C: Number> Mul for Jet2<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        let k = self.dim();
        let grad = (0..k)
            .map(|i| self.value.clone() * rhs.grad[i].clone() + rhs.value.clone() * self.grad[i].clone())
            .collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..k {
            for j in i..k {
                let idx = tri_index(k, i, j);
                let h = self.value.clone() * rhs.hess[idx].clone()
                    + rhs.value.clone() * self.hess[idx].clone()
                    + self.grad[i].clone() * rhs.grad[j].clone()
                    + rhs.grad[i].clone() * self.grad[j].clone();
                hess.push(h);
            }
        }
        Self {
            value: self.value * rhs.value,
            grad,
            hess,
        }
    }
}

impl<C: Number> Div for Jet2<C> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<C: Number> Number for Jet2<C> {
    type Real = C::Real;

    fn real(&self) -> Self::Real {
        self.value.real()
    }

    fn lift(&self, c: Self::Real) -> Self {
        Self::constant(self.value.lift(c), self.dim())
    }

    fn scale(&self, k: Self::Real) -> Self {
        Self {
            value: self.value.scale(k),
            grad: self.grad.iter().map(|a| a.scale(k)).collect(),
            hess: self.hess.iter().map(|a| a.scale(k)).collect(),
        }
    }

    fn recip(&self) -> Self {
        let r = self.value.recip();
        let r2 = r.clone() * r.clone();
        let two = C::Real::one() + C::Real::one();
        let f2 = (r2.clone() * r.clone()).scale(two);
        self.chain(r, -r2, f2)
    }

    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        let half = C::Real::one() / (C::Real::one() + C::Real::one());
        let f1 = s.recip().scale(half);
        // d²/dv² sqrt(v) = -1 / (4 v sqrt v)
        let f2 = (f1.clone() * self.value.recip()).scale(-half);
        self.chain(s, f1, f2)
    }

    fn sin(&self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(s.clone(), c, -s)
    }

    fn cos(&self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(c.clone(), -s, -c)
    }

    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e.clone(), e)
    }

    fn ln(&self) -> Self {
        let r = self.value.recip();
        self.chain(self.value.ln(), r.clone(), -(r.clone() * r))
    }

    fn powf(&self, a: Self::Real) -> Self {
        let one = C::Real::one();
        let f0 = self.value.powf(a);
        let f1 = self.value.powf(a - one).scale(a);
        let f2 = self.value.powf(a - one - one).scale(a * (a - one));
        self.chain(f0, f1, f2)
    }
}

/// First-order jet: value and gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1<C> {
    pub value: C,
    pub grad: Vec<C>,
}

impl<C: Number> Jet1<C> {
    pub fn constant(value: C, dim: usize) -> Self {
        let zero = value.lift(C::Real::zero());
        Self {
            grad: vec![zero; dim],
            value,
        }
    }

    pub fn variable(value: C, slot: usize, dim: usize) -> Self {
        let mut j = Self::constant(value, dim);
        j.grad[slot] = j.value.lift(C::Real::one());
        j
    }

    pub fn zero_like(&self) -> Self {
        Self::constant(self.value.lift(C::Real::zero()), self.grad.len())
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn scale(&self, k: C::Real) -> Self {
        Self {
            value: self.value.scale(k),
            grad: self.grad.iter().map(|g| g.scale(k)).collect(),
        }
    }
}

impl<C: Number> Add for Jet1<C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            grad: self.grad.into_iter().zip(rhs.grad).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<C: Number> Sub for Jet1<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            value: self.value - rhs.value,
            grad: self.grad.into_iter().zip(rhs.grad).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<C: Number> Neg for Jet1<C> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.into_iter().map(|a| -a).collect(),
        }
    }
}

impl<C: Number> Mul for Jet1<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let grad = self
            .grad
            .iter()
            .zip(&rhs.grad)
            .map(|(a, b)| self.value.clone() * b.clone() + rhs.value.clone() * a.clone())
            .collect();
        Self {
            value: self.value * rhs.value,
            grad,
        }
    }
}
