//! Variational operators on jets of sections: total derivatives, the
//! Euler–Lagrange operator, jet prolongations of vector fields, the first
//! variational formula, Noether currents, and the reparametrization
//! Noether-identity residuals.
//!
//! All derivatives of densities are taken in one forward-mode pass over the
//! m + m·n jet arguments (see [`crate::hyperdual`]); the total derivative
//! `d_μ = ∂_μ + z^A_μ ∂_A + z^A_{μν} ∂^ν_A` is then a contraction of the
//! returned gradient and Hessian with the second-jet coordinates. Densities
//! are q-independent by construction — q never appears in their signature —
//! so the explicit `∂_μ` term only ever acts on vector-field components.

use crate::charts::{SecondJet, SectionJet};
use crate::hyperdual::{constant_block, seed_block, HyperDual, Polynomial};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::sync::Arc;

/// Seed layout for a density evaluation: z occupies seeds `0..m`, the
/// velocity matrix occupies `m..m+m·n` in fiber-major order.
#[derive(Clone, Copy, Debug)]
pub struct JetSeeds {
    pub m: usize,
    pub n: usize,
}

impl JetSeeds {
    pub fn total(self) -> usize {
        self.m + self.m * self.n
    }

    pub fn z(self, a: usize) -> usize {
        a
    }

    pub fn zq(self, a: usize, mu: usize) -> usize {
        self.m + a * self.n + mu
    }
}

/// Value, gradient, and Hessian of a density at one jet, with named
/// accessors into the seed layout.
#[derive(Clone, Debug)]
pub struct DensityJet {
    pub seeds: JetSeeds,
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl DensityJet {
    /// `∂ℒ/∂z^A`
    pub fn dz(&self, a: usize) -> f64 {
        self.grad[self.seeds.z(a)]
    }

    /// `∂ℒ/∂z^A_μ`
    pub fn dzq(&self, a: usize, mu: usize) -> f64 {
        self.grad[self.seeds.zq(a, mu)]
    }

    /// `∂²ℒ/∂z^B ∂z^A_μ`
    pub fn d2_z_zq(&self, b: usize, a: usize, mu: usize) -> f64 {
        self.hess[(self.seeds.z(b), self.seeds.zq(a, mu))]
    }

    /// `∂²ℒ/∂z^B_ν ∂z^A_μ`
    pub fn d2_zq_zq(&self, b: usize, nu: usize, a: usize, mu: usize) -> f64 {
        self.hess[(self.seeds.zq(b, nu), self.seeds.zq(a, mu))]
    }

    /// Local magnitude used to normalize residual tolerances:
    /// `max(1, |ℒ|, max|∂ℒ|, max|∂²ℒ|)` at the evaluation point. Second
    /// derivatives are included because the Euler–Lagrange contractions are
    /// built from them, so the round-off floor of every residual scales with
    /// the same quantity.
    pub fn scale(&self) -> f64 {
        let g = self.grad.abs().max();
        let h = self.hess.abs().max();
        1.0f64.max(self.value.abs()).max(g).max(h)
    }

    /// Total derivative of the density itself:
    /// `d_μ ℒ = z^B_μ ∂_B ℒ + z^B_{μν} ∂^ν_B ℒ`.
    pub fn total_derivative(&self, j: &SecondJet) -> DVector<f64> {
        let (m, n) = (self.seeds.m, self.seeds.n);
        DVector::from_fn(n, |mu, _| {
            let mut acc = 0.0;
            for b in 0..m {
                acc += j.first.zq[(b, mu)] * self.dz(b);
                for nu in 0..n {
                    acc += j.zqq[b][(mu, nu)] * self.dzq(b, nu);
                }
            }
            acc
        })
    }

    /// Total derivative of the momentum components:
    /// `d_μ ∂^μ_A ℒ = z^B_μ ∂_B ∂^μ_A ℒ + z^B_{μν} ∂^ν_B ∂^μ_A ℒ`, returned
    /// as the m×n matrix indexed by (A, μ) before summing over μ.
    fn momentum_total_derivative(&self, j: &SecondJet) -> DMatrix<f64> {
        let (m, n) = (self.seeds.m, self.seeds.n);
        DMatrix::from_fn(m, n, |a, mu| {
            let mut acc = 0.0;
            for b in 0..m {
                acc += j.first.zq[(b, mu)] * self.d2_z_zq(b, a, mu);
                for nu in 0..n {
                    acc += j.zqq[b][(mu, nu)] * self.d2_zq_zq(b, nu, a, mu);
                }
            }
            acc
        })
    }
}

type DensityEval = Arc<dyn Fn(&[HyperDual], &[HyperDual]) -> HyperDual + Send + Sync>;
type DomainPredicate = Arc<dyn Fn(&DVector<f64>, &DMatrix<f64>) -> bool + Send + Sync>;

/// An evaluable first-order density `ℒ(z^A, z^A_μ)` with its smoothness
/// domain. Independence of the base coordinates is enforced by the
/// signature: q is not an argument.
#[derive(Clone)]
pub struct LagrangianModel {
    name: String,
    n: usize,
    m: usize,
    eval: DensityEval,
    domain: DomainPredicate,
}

impl std::fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl LagrangianModel {
    /// `eval` receives z as m seeds and the velocity matrix as m·n seeds in
    /// fiber-major order (`zq[a*n + mu]` is `z^a_μ`).
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        eval: DensityEval,
        domain: DomainPredicate,
    ) -> Self {
        Self {
            name: name.into(),
            n,
            m,
            eval,
            domain,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domain_ok(&self, z: &DVector<f64>, zq: &DMatrix<f64>) -> bool {
        (self.domain)(z, zq)
    }

    /// Plain value (no derivative propagation).
    pub fn value(&self, z: &DVector<f64>, zq: &DMatrix<f64>) -> f64 {
        let zc = constant_block(z.as_slice(), 0);
        let qc = constant_block(&flatten_fiber_major(zq), 0);
        (self.eval)(&zc, &qc).value
    }

    /// One seeded pass: value, gradient, and Hessian over all jet arguments.
    pub fn eval_seeded(&self, z: &DVector<f64>, zq: &DMatrix<f64>) -> DensityJet {
        let seeds = JetSeeds { m: self.m, n: self.n };
        let total = seeds.total();
        let zs = seed_block(z.as_slice(), 0, total);
        let qs = seed_block(&flatten_fiber_major(zq), self.m, total);
        let out = (self.eval)(&zs, &qs);
        DensityJet {
            seeds,
            value: out.value,
            grad: out.grad,
            hess: out.hess,
        }
    }

    /// Raw access to the evaluation closure (used by the derivative audit).
    pub fn eval_dual(&self, z: &[HyperDual], zq: &[HyperDual]) -> HyperDual {
        (self.eval)(z, zq)
    }

    fn check_domain(&self, z: &DVector<f64>, zq: &DMatrix<f64>) -> Result<()> {
        if self.domain_ok(z, zq) {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "jet outside the smoothness domain of `{}`",
                self.name
            )))
        }
    }
}

pub(crate) fn flatten_fiber_major(zq: &DMatrix<f64>) -> Vec<f64> {
    let (m, n) = (zq.nrows(), zq.ncols());
    let mut out = Vec::with_capacity(m * n);
    for a in 0..m {
        for mu in 0..n {
            out.push(zq[(a, mu)]);
        }
    }
    out
}

/// Euler–Lagrange operator `E_A = ∂_A ℒ − d_μ ∂^μ_A ℒ`, with the total
/// derivative expanded through the second-jet coordinates. All second
/// derivatives come from the forward-mode pass — no finite differencing.
pub fn euler_lagrange(l: &LagrangianModel, j: &SecondJet) -> Result<DVector<f64>> {
    euler_lagrange_scaled(l, j).map(|(e, _)| e)
}

/// [`euler_lagrange`] plus the local tolerance scale of the density.
pub fn euler_lagrange_scaled(l: &LagrangianModel, j: &SecondJet) -> Result<(DVector<f64>, f64)> {
    l.check_domain(&j.first.z, &j.first.zq)?;
    let d = l.eval_seeded(&j.first.z, &j.first.zq);
    Ok((euler_lagrange_from(&d, j), d.scale()))
}

fn euler_lagrange_from(d: &DensityJet, j: &SecondJet) -> DVector<f64> {
    let (m, n) = (d.seeds.m, d.seeds.n);
    let dp = d.momentum_total_derivative(j);
    DVector::from_fn(m, |a, _| {
        let mut acc = d.dz(a);
        for mu in 0..n {
            acc -= dp[(a, mu)];
        }
        acc
    })
}

type BaseComponents = Arc<dyn Fn(&[HyperDual]) -> Vec<HyperDual> + Send + Sync>;
type FiberComponents = Arc<dyn Fn(&[HyperDual], &[HyperDual]) -> Vec<HyperDual> + Send + Sync>;

/// A projectable vector field `u = u^μ(q) ∂_μ + u^A(q, z) ∂_A` on the
/// trivial bundle, evaluable with exact first (and, on the base side,
/// second) derivatives.
#[derive(Clone)]
pub struct VectorFieldOnZQ {
    n: usize,
    m: usize,
    base: BaseComponents,
    fiber: FiberComponents,
}

/// Base components and their q-derivatives at a point.
pub struct BaseField {
    /// `u^μ`
    pub u: DVector<f64>,
    /// `grad[(μ, ν)] = ∂u^μ/∂q^ν`
    pub grad: DMatrix<f64>,
    /// per μ, the symmetric matrix `∂²u^μ/∂q^ν∂q^λ`
    pub hess: Vec<DMatrix<f64>>,
}

/// Fiber components and their first derivatives at a point.
pub struct FiberField {
    /// `u^A`
    pub u: DVector<f64>,
    /// `dq[(A, μ)] = ∂u^A/∂q^μ`
    pub dq: DMatrix<f64>,
    /// `dz[(A, B)] = ∂u^A/∂z^B`
    pub dz: DMatrix<f64>,
}

impl VectorFieldOnZQ {
    pub fn new(n: usize, m: usize, base: BaseComponents, fiber: FiberComponents) -> Self {
        Self { n, m, base, fiber }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self::from_polynomials(
            n,
            m,
            vec![Polynomial::zero(n); n],
            vec![Polynomial::zero(n + m); m],
        )
    }

    /// The constant base translation `∂_{q^dir}`.
    pub fn base_translation(n: usize, m: usize, dir: usize) -> Self {
        let mut base = vec![Polynomial::zero(n); n];
        base[dir] = Polynomial::new(vec![(1.0, vec![0; n])]);
        Self::from_polynomials(n, m, base, vec![Polynomial::zero(n + m); m])
    }

    /// The constant fiber translation `∂_{z^a}`.
    pub fn fiber_translation(n: usize, m: usize, a: usize) -> Self {
        let mut fiber = vec![Polynomial::zero(n + m); m];
        fiber[a] = Polynomial::new(vec![(1.0, vec![0; n + m])]);
        Self::from_polynomials(n, m, vec![Polynomial::zero(n); n], fiber)
    }

    /// A reparametrization generator `u = u^μ(q) ∂_μ` (no fiber part).
    pub fn reparametrization(n: usize, m: usize, base: Vec<Polynomial>) -> Self {
        Self::from_polynomials(n, m, base, vec![Polynomial::zero(n + m); m])
    }

    /// Build from polynomial components; base polynomials take the n base
    /// variables, fiber polynomials take all n + m variables `(q, z)`.
    pub fn from_polynomials(
        n: usize,
        m: usize,
        base: Vec<Polynomial>,
        fiber: Vec<Polynomial>,
    ) -> Self {
        assert_eq!(base.len(), n);
        assert_eq!(fiber.len(), m);
        Self::new(
            n,
            m,
            Arc::new(move |q: &[HyperDual]| base.iter().map(|p| p.eval(q)).collect()),
            Arc::new(move |q: &[HyperDual], z: &[HyperDual]| {
                let vars: Vec<HyperDual> = q.iter().chain(z.iter()).cloned().collect();
                fiber.iter().map(|p| p.eval(&vars)).collect()
            }),
        )
    }

    /// A random field with polynomial components of degree ≤ 2 on both the
    /// base and the fiber, coefficients in ±1. Drives the randomized
    /// first-variation campaigns.
    pub fn random_polynomial<R: Rng>(n: usize, m: usize, rng: &mut R) -> Self {
        let mut poly = |nvars: usize| {
            let terms = (0..4)
                .map(|_| {
                    let coeff = rng.random_range(-1.0..1.0);
                    let mut exps = vec![0u32; nvars];
                    for _ in 0..rng.random_range(0..=2u32) {
                        exps[rng.random_range(0..nvars)] += 1;
                    }
                    (coeff, exps)
                })
                .collect();
            Polynomial::new(terms)
        };
        let base = (0..n).map(|_| poly(n)).collect();
        let fiber = (0..m).map(|_| poly(n + m)).collect();
        Self::from_polynomials(n, m, base, fiber)
    }

    /// Pointwise sum of two fields on the same bundle.
    pub fn sum(&self, other: &VectorFieldOnZQ) -> VectorFieldOnZQ {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let (b1, b2) = (Arc::clone(&self.base), Arc::clone(&other.base));
        let (f1, f2) = (Arc::clone(&self.fiber), Arc::clone(&other.fiber));
        VectorFieldOnZQ::new(
            self.n,
            self.m,
            Arc::new(move |q| {
                b1(q).iter()
                    .zip(b2(q))
                    .map(|(x, y)| x + y)
                    .collect()
            }),
            Arc::new(move |q, z| {
                f1(q, z)
                    .iter()
                    .zip(f2(q, z))
                    .map(|(x, y)| x + y)
                    .collect()
            }),
        )
    }

    /// Evaluate `u^μ` with first and second q-derivatives.
    pub fn eval_base(&self, q: &DVector<f64>) -> BaseField {
        let n = self.n;
        let qs = seed_block(q.as_slice(), 0, n);
        let out = (self.base)(&qs);
        BaseField {
            u: DVector::from_fn(n, |mu, _| out[mu].value),
            grad: DMatrix::from_fn(n, n, |mu, nu| out[mu].grad[nu]),
            hess: (0..n).map(|mu| out[mu].hess.clone()).collect(),
        }
    }

    /// Evaluate `u^A` with first derivatives in q and z.
    pub fn eval_fiber(&self, q: &DVector<f64>, z: &DVector<f64>) -> FiberField {
        let (n, m) = (self.n, self.m);
        let total = n + m;
        let qs = seed_block(q.as_slice(), 0, total);
        let zs = seed_block(z.as_slice(), n, total);
        let out = (self.fiber)(&qs, &zs);
        FiberField {
            u: DVector::from_fn(m, |a, _| out[a].value),
            dq: DMatrix::from_fn(m, n, |a, mu| out[a].grad[mu]),
            dz: DMatrix::from_fn(m, m, |a, b| out[a].grad[n + b]),
        }
    }
}

/// Jet prolongation of a vector field evaluated at a second jet, with its
/// vertical splitting.
#[derive(Clone, Debug)]
pub struct Prolongation {
    /// `u^μ`
    pub base: DVector<f64>,
    /// `u^A`
    pub fiber: DVector<f64>,
    /// jet components `u^A_μ = d_μ u^A − z^A_ν d_μ u^ν`, shape m×n
    pub jet: DMatrix<f64>,
    /// vertical components `u^A − u^ν z^A_ν`
    pub vertical: DVector<f64>,
    /// total derivative of the vertical components `d_μ(u^A − z^A_ν u^ν)`,
    /// shape m×n
    pub vertical_jet: DMatrix<f64>,
}

/// Prolong `u` onto the first jet space and split it vertically at `j`.
pub fn prolong(u: &VectorFieldOnZQ, j: &SecondJet) -> Prolongation {
    let (m, n) = (j.m(), j.n());
    let bf = u.eval_base(&j.first.q);
    let ff = u.eval_fiber(&j.first.q, &j.first.z);
    let zq = &j.first.zq;

    // d_μ u^A = ∂_μ u^A + z^B_μ ∂_B u^A   (u^A carries no jet dependence)
    let total_du = DMatrix::from_fn(m, n, |a, mu| {
        let mut acc = ff.dq[(a, mu)];
        for b in 0..m {
            acc += zq[(b, mu)] * ff.dz[(a, b)];
        }
        acc
    });

    let jet = DMatrix::from_fn(m, n, |a, mu| {
        let mut acc = total_du[(a, mu)];
        for nu in 0..n {
            acc -= zq[(a, nu)] * bf.grad[(nu, mu)];
        }
        acc
    });

    let vertical = DVector::from_fn(m, |a, _| {
        let mut acc = ff.u[a];
        for nu in 0..n {
            acc -= bf.u[nu] * zq[(a, nu)];
        }
        acc
    });

    // d_μ(u^A − z^A_ν u^ν) = d_μ u^A − (∂_μ u^ν) z^A_ν − u^ν z^A_{νμ}
    let vertical_jet = DMatrix::from_fn(m, n, |a, mu| {
        let mut acc = total_du[(a, mu)];
        for nu in 0..n {
            acc -= bf.grad[(nu, mu)] * zq[(a, nu)] + bf.u[nu] * j.zqq[a][(nu, mu)];
        }
        acc
    });

    Prolongation {
        base: bf.u,
        fiber: ff.u,
        jet,
        vertical,
        vertical_jet,
    }
}

/// Noether current `𝔍^μ = ∂^μ_A ℒ (u^A − u^ν z^A_ν) + u^μ ℒ` at a section
/// jet (the base point rides along in `j.q`).
pub fn noether_current(
    l: &LagrangianModel,
    u: &VectorFieldOnZQ,
    j: &SectionJet,
) -> Result<DVector<f64>> {
    l.check_domain(&j.z, &j.zq)?;
    let d = l.eval_seeded(&j.z, &j.zq);
    let bf = u.eval_base(&j.q);
    let ff = u.eval_fiber(&j.q, &j.z);
    let (m, n) = (j.m(), j.n());
    let vertical = DVector::from_fn(m, |a, _| {
        let mut acc = ff.u[a];
        for nu in 0..n {
            acc -= bf.u[nu] * j.zq[(a, nu)];
        }
        acc
    });
    Ok(DVector::from_fn(n, |mu, _| {
        let mut acc = bf.u[mu] * d.value;
        for a in 0..m {
            acc += d.dzq(a, mu) * vertical[a];
        }
        acc
    }))
}

/// A residual magnitude together with the local scale its tolerance should
/// be compared against.
#[derive(Clone, Copy, Debug)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.value / self.scale
    }
}

/// Defect of the first variational formula at one second jet:
///
/// ```text
/// | 𝐋_u(ℒω) − (u^A − u^μ z^A_μ) E_A − d_μ 𝔍^μ |
/// ```
///
/// The left side applies the prolonged field to the density (plus the
/// `ℒ ∂_μ u^μ` divergence term of the volume form); the right side combines
/// [`euler_lagrange`] with the total derivative of the Noether current. The
/// formula is an identity, so the result is round-off for every Lagrangian
/// and every vector field.
pub fn first_variation_residual(
    l: &LagrangianModel,
    u: &VectorFieldOnZQ,
    j: &SecondJet,
) -> Result<Residual> {
    l.check_domain(&j.first.z, &j.first.zq)?;
    let (m, n) = (j.m(), j.n());
    let d = l.eval_seeded(&j.first.z, &j.first.zq);
    let p = prolong(u, j);
    let bf = u.eval_base(&j.first.q);

    let div_u: f64 = (0..n).map(|mu| bf.grad[(mu, mu)]).sum();

    // Lie derivative of the density along the prolonged field. The density
    // has no explicit q-dependence, so u^μ ∂_μ ℒ drops.
    let mut lie = d.value * div_u;
    for a in 0..m {
        lie += p.fiber[a] * d.dz(a);
        for mu in 0..n {
            lie += p.jet[(a, mu)] * d.dzq(a, mu);
        }
    }

    // boundary side: (u^A − u^ν z^A_ν) E_A + d_μ 𝔍^μ
    let e = euler_lagrange_from(&d, j);
    let mut rhs = 0.0;
    for a in 0..m {
        rhs += p.vertical[a] * e[a];
    }
    let dp = d.momentum_total_derivative(j);
    let dl = d.total_derivative(j);
    for mu in 0..n {
        for a in 0..m {
            rhs += dp[(a, mu)] * p.vertical[a] + d.dzq(a, mu) * p.vertical_jet[(a, mu)];
        }
        rhs += bf.u[mu] * dl[mu];
    }
    rhs += div_u * d.value;

    let u_mag = p
        .base
        .abs()
        .max()
        .max(p.fiber.abs().max())
        .max(p.jet.abs().max())
        .max(1.0);
    Ok(Residual {
        value: (lie - rhs).abs(),
        scale: d.scale() * u_mag,
    })
}

/// Reparametrization Noether-identity residual `r_ν = z^A_ν E_A`: vanishes
/// identically for densities that are variationally invariant under base
/// reparametrizations.
pub fn noether_identity_residual(
    l: &LagrangianModel,
    j: &SecondJet,
) -> Result<(DVector<f64>, f64)> {
    let (e, base_scale) = euler_lagrange_scaled(l, j)?;
    let (m, n) = (j.m(), j.n());
    let r = DVector::from_fn(n, |nu, _| {
        let mut acc = 0.0;
        for a in 0..m {
            acc += j.first.zq[(a, nu)] * e[a];
        }
        acc
    });
    let zq_mag = j.first.zq.abs().max();
    let zqq_mag = j.zqq.iter().map(|b| b.abs().max()).fold(0.0, f64::max);
    Ok((r, base_scale * zq_mag.max(zqq_mag).max(1.0)))
}

/// A one-form `𝒜_B(z) dz^B` evaluable with exact derivatives; the
/// interaction data of the charged-particle density.
#[derive(Clone)]
pub struct OneFormField {
    m: usize,
    eval: BaseComponents,
}

impl std::fmt::Debug for OneFormField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneFormField")
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl OneFormField {
    pub fn new(m: usize, eval: BaseComponents) -> Self {
        Self { m, eval }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn zero(m: usize) -> Self {
        Self::new(
            m,
            Arc::new(move |z: &[HyperDual]| {
                let seeds = z.first().map_or(0, HyperDual::seeds);
                vec![HyperDual::constant(0.0, seeds); m]
            }),
        )
    }

    pub fn constant(values: DVector<f64>) -> Self {
        let m = values.len();
        Self::new(
            m,
            Arc::new(move |z: &[HyperDual]| {
                let seeds = z.first().map_or(0, HyperDual::seeds);
                values.iter().map(|&v| HyperDual::constant(v, seeds)).collect()
            }),
        )
    }

    /// Linear potential `𝒜_B = coeffs[(B, C)] z^C`.
    pub fn linear(coeffs: DMatrix<f64>) -> Self {
        let m = coeffs.nrows();
        assert_eq!(coeffs.ncols(), m);
        Self::new(
            m,
            Arc::new(move |z: &[HyperDual]| {
                let seeds = z.first().map_or(0, HyperDual::seeds);
                (0..m)
                    .map(|b| {
                        let mut acc = HyperDual::constant(0.0, seeds);
                        for (c, zc) in z.iter().enumerate() {
                            if coeffs[(b, c)] != 0.0 {
                                acc += zc * coeffs[(b, c)];
                            }
                        }
                        acc
                    })
                    .collect()
            }),
        )
    }

    pub fn eval_dual(&self, z: &[HyperDual]) -> Vec<HyperDual> {
        (self.eval)(z)
    }

    /// Components and Jacobian `jac[(B, C)] = ∂𝒜_B/∂z^C` at a point.
    pub fn components(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.m;
        let zs = seed_block(z.as_slice(), 0, m);
        let out = (self.eval)(&zs);
        (
            DVector::from_fn(m, |b, _| out[b].value),
            DMatrix::from_fn(m, m, |b, c| out[b].grad[c]),
        )
    }

    /// Field strength `F_{CB} = ∂_C 𝒜_B − ∂_B 𝒜_C`, exactly antisymmetric.
    pub fn field_strength(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let (_, jac) = self.components(z);
        let m = self.m;
        let mut f = DMatrix::zeros(m, m);
        for c in 0..m {
            for b in 0..c {
                let v = jac[(b, c)] - jac[(c, b)];
                f[(c, b)] = v;
                f[(b, c)] = -v;
            }
        }
        f
    }
}

/// A constant two-form `½ F_{AB} dz^A ∧ dz^B`; the interaction data of the
/// sheet models.
#[derive(Clone, Debug)]
pub struct TwoFormField {
    f: DMatrix<f64>,
}

impl TwoFormField {
    pub fn constant(f: DMatrix<f64>) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::Config("two-form matrix must be square".into()));
        }
        for a in 0..f.nrows() {
            for b in 0..=a {
                if f[(a, b)] != -f[(b, a)] {
                    return Err(Error::Config("two-form matrix must be antisymmetric".into()));
                }
            }
        }
        Ok(Self { f })
    }

    /// `F = strength · e^i ∧ e^j` on a single coordinate plane.
    pub fn plane(m: usize, i: usize, j: usize, strength: f64) -> Result<Self> {
        if i >= m || j >= m || i == j {
            return Err(Error::Config("two-form plane indices out of range".into()));
        }
        let mut f = DMatrix::zeros(m, m);
        f[(i, j)] = strength;
        f[(j, i)] = -strength;
        Ok(Self { f })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.f
    }
}

/// Interaction data accepted by [`interaction_density`].
pub enum InteractionData<'a> {
    OneForm(&'a OneFormField),
    TwoForm(&'a TwoFormField),
}

/// Pull-back interaction density of an external field through a section jet:
/// `−𝒜_B z^B_τ` for curves, `½ F_{AB} (z^A_1 z^B_2 − z^A_2 z^B_1)` for
/// sheets.
pub fn interaction_density(data: InteractionData<'_>, j: &SectionJet) -> Result<f64> {
    match (data, j.n()) {
        (InteractionData::OneForm(a), 1) => {
            let (vals, _) = a.components(&j.z);
            let mut acc = 0.0;
            for b in 0..j.m() {
                acc -= vals[b] * j.zq[(b, 0)];
            }
            Ok(acc)
        }
        (InteractionData::TwoForm(f), 2) => {
            let fm = f.matrix();
            let mut acc = 0.0;
            for a in 0..j.m() {
                for b in 0..j.m() {
                    acc += 0.5
                        * fm[(a, b)]
                        * (j.zq[(a, 0)] * j.zq[(b, 1)] - j.zq[(a, 1)] * j.zq[(b, 0)]);
                }
            }
            Ok(acc)
        }
        (_, n) => Err(Error::UnsupportedDimension(n)),
    }
}

/// Interaction term as a dual-number expression, for inclusion in model
/// densities (fiber-major `zq` layout, like [`LagrangianModel::new`]).
pub(crate) fn interaction_dual_one_form(
    a: &OneFormField,
    z: &[HyperDual],
    zq: &[HyperDual],
    n: usize,
) -> HyperDual {
    let seeds = z.first().map_or(0, HyperDual::seeds);
    let vals = a.eval_dual(z);
    let mut acc = HyperDual::constant(0.0, seeds);
    for (b, v) in vals.iter().enumerate() {
        acc -= v * &zq[b * n];
    }
    acc
}

pub(crate) fn interaction_dual_two_form(
    f: &TwoFormField,
    zq: &[HyperDual],
    n: usize,
) -> HyperDual {
    let seeds = zq.first().map_or(0, HyperDual::seeds);
    let fm = f.matrix();
    let m = fm.nrows();
    let mut acc = HyperDual::constant(0.0, seeds);
    for a in 0..m {
        for b in 0..m {
            let c = fm[(a, b)];
            if c != 0.0 {
                acc += (&zq[a * n] * &zq[b * n + 1] - &zq[a * n + 1] * &zq[b * n]).scale(0.5 * c);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::SectionJet;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn second_jet(
        q: Vec<f64>,
        z: Vec<f64>,
        zq: DMatrix<f64>,
        zqq: Vec<DMatrix<f64>>,
    ) -> SecondJet {
        SecondJet::new(
            SectionJet::new(DVector::from_vec(q), DVector::from_vec(z), zq).unwrap(),
            zqq,
        )
        .unwrap()
    }

    #[test]
    fn vector_field_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = VectorFieldOnZQ::random_polynomial(2, 3, &mut rng);
        let q = DVector::from_vec(vec![0.3, -0.4]);
        let z = DVector::from_vec(vec![0.1, 0.7, -0.2]);
        let bf = u.eval_base(&q);
        let ff = u.eval_fiber(&q, &z);

        let h = 1e-6;
        for nu in 0..2 {
            let mut qp = q.clone();
            qp[nu] += h;
            let mut qm = q.clone();
            qm[nu] -= h;
            let up = u.eval_base(&qp).u;
            let um = u.eval_base(&qm).u;
            for mu in 0..2 {
                assert_relative_eq!(
                    bf.grad[(mu, nu)],
                    (up[mu] - um[mu]) / (2.0 * h),
                    epsilon = 1e-6
                );
            }
            let fp = u.eval_fiber(&qp, &z).u;
            let fm = u.eval_fiber(&qm, &z).u;
            for a in 0..3 {
                assert_relative_eq!(
                    ff.dq[(a, nu)],
                    (fp[a] - fm[a]) / (2.0 * h),
                    epsilon = 1e-6
                );
            }
        }
        for b in 0..3 {
            let mut zp = z.clone();
            zp[b] += h;
            let mut zm = z.clone();
            zm[b] -= h;
            let fp = u.eval_fiber(&q, &zp).u;
            let fm = u.eval_fiber(&q, &zm).u;
            for a in 0..3 {
                assert_relative_eq!(
                    ff.dz[(a, b)],
                    (fp[a] - fm[a]) / (2.0 * h),
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn prolongation_of_base_translation_is_plain_translation() {
        let u = VectorFieldOnZQ::base_translation(2, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let zq = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let j = second_jet(
            vec![0.2, 0.4],
            vec![0.0, 1.0, -1.0],
            zq,
            vec![DMatrix::zeros(2, 2); 3],
        );
        let p = prolong(&u, &j);
        assert_eq!(p.jet.abs().max(), 0.0);
        assert_eq!(p.base[1], 1.0);
    }

    #[test]
    fn prolongation_of_linear_base_field() {
        // u^μ = c^μ_ν q^ν gives jet components −z^A_ν c^ν_μ
        let base = vec![
            Polynomial::new(vec![(0.7, vec![1, 0]), (-0.3, vec![0, 1])]),
            Polynomial::new(vec![(1.1, vec![0, 1])]),
        ];
        let u = VectorFieldOnZQ::reparametrization(2, 3, base);
        let c = DMatrix::from_row_slice(2, 2, &[0.7, -0.3, 0.0, 1.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zq = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let j = second_jet(
            vec![0.5, -0.2],
            vec![0.3, 0.1, 0.9],
            zq.clone(),
            vec![DMatrix::zeros(2, 2); 3],
        );
        let p = prolong(&u, &j);
        let expected = -(&zq * &c);
        assert_relative_eq!((&p.jet - expected).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn prolongation_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let u1 = VectorFieldOnZQ::random_polynomial(2, 3, &mut rng);
            let u2 = VectorFieldOnZQ::random_polynomial(2, 3, &mut rng);
            let sum = u1.sum(&u2);
            let zq = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
            let mut zqq = Vec::new();
            for _ in 0..3 {
                let d = DMatrix::from_fn(2, 2, |r, c| {
                    if r <= c {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                });
                let sym = &d + d.transpose() - DMatrix::from_diagonal(&d.diagonal());
                zqq.push(sym);
            }
            let j = second_jet(
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                vec![0.1, -0.6, 0.4],
                zq,
                zqq,
            );
            let (p1, p2, ps) = (prolong(&u1, &j), prolong(&u2, &j), prolong(&sum, &j));
            assert_relative_eq!(
                (&p1.jet + &p2.jet - &ps.jet).abs().max(),
                0.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                (&p1.vertical_jet + &p2.vertical_jet - &ps.vertical_jet).abs().max(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn interaction_density_examples() {
        // curve in a linear gauge potential 𝒜_2 = B z¹
        let mut coeffs = DMatrix::zeros(4, 4);
        let b_strength = 2.5;
        coeffs[(2, 1)] = b_strength;
        let a = OneFormField::linear(coeffs);
        let j = SectionJet::new(
            DVector::zeros(1),
            DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 1.0, 0.0]),
        )
        .unwrap();
        let got = interaction_density(InteractionData::OneForm(&a), &j).unwrap();
        assert_relative_eq!(got, -b_strength, epsilon = 1e-15);

        // zero field
        let zero = OneFormField::zero(4);
        assert_eq!(
            interaction_density(InteractionData::OneForm(&zero), &j).unwrap(),
            0.0
        );

        // unit sheet against e¹∧e²
        let f = TwoFormField::plane(3, 0, 1, 1.0).unwrap();
        let sheet = SectionJet::new(
            DVector::zeros(2),
            DVector::zeros(3),
            DMatrix::from_columns(&[
                DVector::from_vec(vec![1.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0, 0.0]),
            ]),
        )
        .unwrap();
        let got = interaction_density(InteractionData::TwoForm(&f), &sheet).unwrap();
        assert_relative_eq!(got, 1.0, epsilon = 1e-15);

        // dimension mismatch
        let err = interaction_density(InteractionData::TwoForm(&f), &j).unwrap_err();
        assert!(matches!(err, crate::Error::UnsupportedDimension(1)));
    }

    #[test]
    fn field_strength_of_linear_potential() {
        let mut coeffs = DMatrix::zeros(4, 4);
        coeffs[(2, 1)] = 3.0;
        let a = OneFormField::linear(coeffs);
        let f = a.field_strength(&DVector::zeros(4));
        assert_eq!(f[(1, 2)], 3.0);
        assert_eq!(f[(2, 1)], -3.0);
        assert_eq!(f[(0, 1)], 0.0);
    }
}
