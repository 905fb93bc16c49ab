//! Second-order forward-mode arithmetic over a declared seed set.
//!
//! A [`HyperDual`] carries a value, the gradient row with respect to a fixed
//! set of seed variables, and the full (symmetric) Hessian over the same
//! seeds. Arithmetic propagates both derivative orders through the truncated
//! Taylor product rule, so first and second partials of any composed smooth
//! expression come out exact to round-off — no step-size tuning. Finite
//! differences are used only as an independent audit (see [`crate::fd`]).
//!
//! Seed counts are tiny here (m + m·n jet arguments, typically ≤ 12), so the
//! dense gradient/Hessian representation costs nothing at desk scale.

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Truncated second-order Taylor scalar: value, gradient, Hessian.
///
/// The Hessian stays exactly symmetric under all provided operations, since
/// every update is built from symmetric rank-one/rank-two combinations.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperDual {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl HyperDual {
    /// A constant: zero derivatives over `seeds` variables.
    pub fn constant(value: f64, seeds: usize) -> Self {
        Self {
            value,
            grad: DVector::zeros(seeds),
            hess: DMatrix::zeros(seeds, seeds),
        }
    }

    /// The seed variable at position `seed` with the given value.
    pub fn variable(value: f64, seeds: usize, seed: usize) -> Self {
        assert!(seed < seeds, "seed index {seed} out of {seeds}");
        let mut grad = DVector::zeros(seeds);
        grad[seed] = 1.0;
        Self {
            value,
            grad,
            hess: DMatrix::zeros(seeds, seeds),
        }
    }

    /// Number of seed variables this scalar differentiates against.
    pub fn seeds(&self) -> usize {
        self.grad.len()
    }

    /// Apply a smooth univariate function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, value: f64, d1: f64, d2: f64) -> Self {
        let grad = &self.grad * d1;
        let mut hess = &self.hess * d1;
        // rank-one curvature correction: d2 · ∇a ∇aᵀ
        sym_rank_one(&mut hess, d2, &self.grad);
        Self { value, grad, hess }
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value;
        self.chain(
            v.powi(k),
            f64::from(k) * v.powi(k - 1),
            f64::from(k) * f64::from(k - 1) * v.powi(k - 2),
        )
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    /// Multiply by a plain scalar.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            grad: &self.grad * c,
            hess: &self.hess * c,
        }
    }
}

fn add_impl(a: &HyperDual, b: &HyperDual) -> HyperDual {
    debug_assert_eq!(a.seeds(), b.seeds());
    HyperDual {
        value: a.value + b.value,
        grad: &a.grad + &b.grad,
        hess: &a.hess + &b.hess,
    }
}

fn sub_impl(a: &HyperDual, b: &HyperDual) -> HyperDual {
    debug_assert_eq!(a.seeds(), b.seeds());
    HyperDual {
        value: a.value - b.value,
        grad: &a.grad - &b.grad,
        hess: &a.hess - &b.hess,
    }
}

fn mul_impl(a: &HyperDual, b: &HyperDual) -> HyperDual {
    debug_assert_eq!(a.seeds(), b.seeds());
    let value = a.value * b.value;
    let grad = &a.grad * b.value + &b.grad * a.value;
    let mut hess = &a.hess * b.value + &b.hess * a.value;
    sym_cross(&mut hess, &a.grad, &b.grad);
    HyperDual { value, grad, hess }
}

/// `hess += coeff · g gᵀ`, writing mirror entries from one rounded product
/// so symmetry is exact bit-for-bit.
fn sym_rank_one(hess: &mut DMatrix<f64>, coeff: f64, g: &DVector<f64>) {
    let k = g.len();
    for i in 0..k {
        for j in i..k {
            let v = coeff * (g[i] * g[j]);
            hess[(i, j)] += v;
            if i != j {
                hess[(j, i)] = hess[(i, j)];
            }
        }
    }
}

/// `hess += a bᵀ + b aᵀ`, mirrored the same way.
fn sym_cross(hess: &mut DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) {
    let k = a.len();
    for i in 0..k {
        for j in i..k {
            let v = a[i] * b[j] + b[i] * a[j];
            hess[(i, j)] += v;
            if i != j {
                hess[(j, i)] = hess[(i, j)];
            }
        }
    }
}

fn neg_impl(a: &HyperDual) -> HyperDual {
    HyperDual {
        value: -a.value,
        grad: -&a.grad,
        hess: -&a.hess,
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl_fn:ident) => {
        impl $trait for HyperDual {
            type Output = HyperDual;
            fn $method(self, rhs: HyperDual) -> HyperDual {
                $impl_fn(&self, &rhs)
            }
        }
        impl $trait<&HyperDual> for HyperDual {
            type Output = HyperDual;
            fn $method(self, rhs: &HyperDual) -> HyperDual {
                $impl_fn(&self, rhs)
            }
        }
        impl $trait<HyperDual> for &HyperDual {
            type Output = HyperDual;
            fn $method(self, rhs: HyperDual) -> HyperDual {
                $impl_fn(self, &rhs)
            }
        }
        impl $trait<&HyperDual> for &HyperDual {
            type Output = HyperDual;
            fn $method(self, rhs: &HyperDual) -> HyperDual {
                $impl_fn(self, rhs)
            }
        }
    };
}

binop!(Add, add, add_impl);
binop!(Sub, sub, sub_impl);
binop!(Mul, mul, mul_impl);

fn div_impl(a: &HyperDual, b: &HyperDual) -> HyperDual {
    mul_impl(a, &b.recip())
}

binop!(Div, div, div_impl);

impl Neg for HyperDual {
    type Output = HyperDual;
    fn neg(self) -> HyperDual {
        neg_impl(&self)
    }
}

impl Neg for &HyperDual {
    type Output = HyperDual;
    fn neg(self) -> HyperDual {
        neg_impl(self)
    }
}

impl AddAssign<HyperDual> for HyperDual {
    fn add_assign(&mut self, rhs: HyperDual) {
        *self = add_impl(self, &rhs);
    }
}

impl AddAssign<&HyperDual> for HyperDual {
    fn add_assign(&mut self, rhs: &HyperDual) {
        *self = add_impl(self, rhs);
    }
}

impl SubAssign<HyperDual> for HyperDual {
    fn sub_assign(&mut self, rhs: HyperDual) {
        *self = sub_impl(self, &rhs);
    }
}

impl Mul<f64> for &HyperDual {
    type Output = HyperDual;
    fn mul(self, rhs: f64) -> HyperDual {
        self.scale(rhs)
    }
}

impl Mul<f64> for HyperDual {
    type Output = HyperDual;
    fn mul(self, rhs: f64) -> HyperDual {
        self.scale(rhs)
    }
}

impl Mul<&HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, rhs: &HyperDual) -> HyperDual {
        rhs.scale(self)
    }
}

impl Mul<HyperDual> for f64 {
    type Output = HyperDual;
    fn mul(self, rhs: HyperDual) -> HyperDual {
        rhs.scale(self)
    }
}

impl Add<f64> for &HyperDual {
    type Output = HyperDual;
    fn add(self, rhs: f64) -> HyperDual {
        let mut out = self.clone();
        out.value += rhs;
        out
    }
}

impl Add<f64> for HyperDual {
    type Output = HyperDual;
    fn add(mut self, rhs: f64) -> HyperDual {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for &HyperDual {
    type Output = HyperDual;
    fn sub(self, rhs: f64) -> HyperDual {
        let mut out = self.clone();
        out.value -= rhs;
        out
    }
}

impl Sub<f64> for HyperDual {
    type Output = HyperDual;
    fn sub(mut self, rhs: f64) -> HyperDual {
        self.value -= rhs;
        self
    }
}

/// Seed a contiguous block of variables: `values[i]` becomes the variable at
/// seed position `offset + i` out of `total`.
pub fn seed_block(values: &[f64], offset: usize, total: usize) -> Vec<HyperDual> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| HyperDual::variable(v, total, offset + i))
        .collect()
}

/// Lift a slice of plain values to constants over `total` seeds.
pub fn constant_block(values: &[f64], total: usize) -> Vec<HyperDual> {
    values
        .iter()
        .map(|&v| HyperDual::constant(v, total))
        .collect()
}

/// Weighted inner product `Σ_{ab} w[a,b] u[a] v[b]`.
///
/// Zero weights are skipped, which keeps constant-metric contractions cheap.
pub fn weighted_inner(w: &DMatrix<f64>, u: &[HyperDual], v: &[HyperDual]) -> HyperDual {
    debug_assert_eq!(w.nrows(), u.len());
    debug_assert_eq!(w.ncols(), v.len());
    let seeds = u.first().map_or_else(|| v[0].seeds(), HyperDual::seeds);
    let mut acc = HyperDual::constant(0.0, seeds);
    for a in 0..u.len() {
        for b in 0..v.len() {
            let c = w[(a, b)];
            if c != 0.0 {
                acc += (&u[a] * &v[b]).scale(c);
            }
        }
    }
    acc
}

/// A multivariate polynomial as a sum of monomials `coeff · Π vars[i]^exp[i]`.
///
/// Used for the built-in polynomial transition maps and vector fields; the
/// representation is deliberately dumb since degrees never exceed three.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Self {
        Self { terms }
    }

    /// The zero polynomial in `nvars` variables.
    pub fn zero(nvars: usize) -> Self {
        Self {
            terms: vec![(0.0, vec![0; nvars])],
        }
    }

    pub fn eval(&self, vars: &[HyperDual]) -> HyperDual {
        let seeds = vars.first().map_or(0, HyperDual::seeds);
        let mut acc = HyperDual::constant(0.0, seeds);
        for (coeff, exps) in &self.terms {
            if *coeff == 0.0 {
                continue;
            }
            let mut term = HyperDual::constant(*coeff, seeds);
            for (var, &e) in vars.iter().zip(exps) {
                for _ in 0..e {
                    term = term * var;
                }
            }
            acc += term;
        }
        acc
    }
}
