//! Covariant Hamiltonian side on the polysymplectic momentum phase space
//! with coordinates `(q^μ, z^A, p^μ_A)`: Legendre map, Hamiltonian map,
//! associated-pair residuals, Hamilton-equation residuals, and the
//! reparametrization Noether identity that Hamiltonians of submanifold
//! dynamics must satisfy.
//!
//! No attempt is made to construct associated Hamiltonians from Lagrangians
//! (they need not be unique); candidate pairs are only verified pointwise.

use crate::charts::{matrix_rows, rows_to_matrix, SectionJet};
use crate::hyperdual::{constant_block, seed_block, HyperDual};
use crate::varcalc::LagrangianModel;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A point of the momentum phase space. Momenta form the n×m matrix
/// `p[(μ, A)] = p^μ_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhasePointWire", into = "PhasePointWire")]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub z: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, z: DVector<f64>, p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != q.len() || p.ncols() != z.len() {
            return Err(Error::Config("phase point shape mismatch".into()));
        }
        if !q.iter().chain(z.iter()).chain(p.iter()).all(|v| v.is_finite()) {
            return Err(Error::Config("phase point has non-finite entries".into()));
        }
        Ok(Self { q, z, p })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasePointWire {
    q: Vec<f64>,
    z: Vec<f64>,
    p: Vec<Vec<f64>>,
}

impl From<PhasePoint> for PhasePointWire {
    fn from(pp: PhasePoint) -> Self {
        Self {
            q: pp.q.iter().copied().collect(),
            z: pp.z.iter().copied().collect(),
            p: matrix_rows(&pp.p),
        }
    }
}

impl TryFrom<PhasePointWire> for PhasePoint {
    type Error = Error;
    fn try_from(w: PhasePointWire) -> Result<Self> {
        let (n, m) = (w.q.len(), w.z.len());
        let p = rows_to_matrix(&w.p, n, m)?;
        PhasePoint::new(DVector::from_vec(w.q), DVector::from_vec(w.z), p)
    }
}

/// A phase point extended with the section velocities `z^A_μ` and the
/// momentum divergences `p^μ_{μA}` (already contracted over μ), i.e. the
/// data the Hamilton equations constrain.
#[derive(Clone, Debug)]
pub struct PhaseSecondJet {
    pub point: PhasePoint,
    /// `z^A_μ`, shape m×n
    pub zq: DMatrix<f64>,
    /// `p^μ_{μA}` per fiber index A
    pub p_div: DVector<f64>,
}

impl PhaseSecondJet {
    pub fn new(point: PhasePoint, zq: DMatrix<f64>, p_div: DVector<f64>) -> Result<Self> {
        if zq.nrows() != point.m() || zq.ncols() != point.n() || p_div.len() != point.m() {
            return Err(Error::Config("phase second jet shape mismatch".into()));
        }
        if !zq.iter().chain(p_div.iter()).all(|v| v.is_finite()) {
            return Err(Error::Config("phase second jet has non-finite entries".into()));
        }
        Ok(Self { point, zq, p_div })
    }
}

/// Seed layout for a Hamiltonian evaluation: z occupies `0..m`, momenta
/// occupy `m..m+n·m` in base-major order (`p[mu*m + a]` is `p^μ_a`).
#[derive(Clone, Copy, Debug)]
pub struct PhaseSeeds {
    pub m: usize,
    pub n: usize,
}

impl PhaseSeeds {
    pub fn total(self) -> usize {
        self.m + self.n * self.m
    }

    pub fn z(self, a: usize) -> usize {
        a
    }

    pub fn p(self, mu: usize, a: usize) -> usize {
        self.m + mu * self.m + a
    }
}

/// Value, gradient, and Hessian of a Hamiltonian density at a phase point.
#[derive(Clone, Debug)]
pub struct PhaseDensityJet {
    pub seeds: PhaseSeeds,
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl PhaseDensityJet {
    /// `∂ℋ/∂z^A`
    pub fn dz(&self, a: usize) -> f64 {
        self.grad[self.seeds.z(a)]
    }

    /// `∂ℋ/∂p^μ_A`
    pub fn dp(&self, mu: usize, a: usize) -> f64 {
        self.grad[self.seeds.p(mu, a)]
    }

    pub fn scale(&self) -> f64 {
        1.0f64
            .max(self.value.abs())
            .max(self.grad.abs().max())
            .max(self.hess.abs().max())
    }
}

type PhaseEval = Arc<dyn Fn(&[HyperDual], &[HyperDual]) -> HyperDual + Send + Sync>;
type PhaseDomain = Arc<dyn Fn(&DVector<f64>, &DMatrix<f64>) -> bool + Send + Sync>;

/// An evaluable Hamiltonian density `ℋ(z^A, p^μ_A)` with its smoothness
/// domain; q-independent by signature.
#[derive(Clone)]
pub struct HamiltonianModel {
    name: String,
    n: usize,
    m: usize,
    eval: PhaseEval,
    domain: PhaseDomain,
}

impl std::fmt::Debug for HamiltonianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl HamiltonianModel {
    /// `eval` receives z as m seeds and momenta as n·m seeds in base-major
    /// order (`p[mu*m + a]`).
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        eval: PhaseEval,
        domain: PhaseDomain,
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

    pub fn domain_ok(&self, z: &DVector<f64>, p: &DMatrix<f64>) -> bool {
        (self.domain)(z, p)
    }

    pub fn value(&self, z: &DVector<f64>, p: &DMatrix<f64>) -> f64 {
        let zc = constant_block(z.as_slice(), 0);
        let pc = constant_block(&flatten_base_major(p), 0);
        (self.eval)(&zc, &pc).value
    }

    pub fn eval_seeded(&self, z: &DVector<f64>, p: &DMatrix<f64>) -> PhaseDensityJet {
        let seeds = PhaseSeeds { m: self.m, n: self.n };
        let total = seeds.total();
        let zs = seed_block(z.as_slice(), 0, total);
        let ps = seed_block(&flatten_base_major(p), self.m, total);
        let out = (self.eval)(&zs, &ps);
        PhaseDensityJet {
            seeds,
            value: out.value,
            grad: out.grad,
            hess: out.hess,
        }
    }

    pub fn eval_dual(&self, z: &[HyperDual], p: &[HyperDual]) -> HyperDual {
        (self.eval)(z, p)
    }

    fn check_domain(&self, z: &DVector<f64>, p: &DMatrix<f64>) -> Result<()> {
        if self.domain_ok(z, p) {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "phase point outside the smoothness domain of `{}`",
                self.name
            )))
        }
    }
}

pub(crate) fn flatten_base_major(p: &DMatrix<f64>) -> Vec<f64> {
    let (n, m) = (p.nrows(), p.ncols());
    let mut out = Vec::with_capacity(n * m);
    for mu in 0..n {
        for a in 0..m {
            out.push(p[(mu, a)]);
        }
    }
    out
}

/// Legendre map `p^μ_A = ∂^μ_A ℒ` at a section jet.
pub fn legendre(l: &LagrangianModel, j: &SectionJet) -> Result<PhasePoint> {
    if !l.domain_ok(&j.z, &j.zq) {
        return Err(Error::DomainViolation(format!(
            "jet outside the smoothness domain of `{}`",
            l.name()
        )));
    }
    let d = l.eval_seeded(&j.z, &j.zq);
    let p = DMatrix::from_fn(j.n(), j.m(), |mu, a| d.dzq(a, mu));
    PhasePoint::new(j.q.clone(), j.z.clone(), p)
}

/// Hamiltonian map `z^A_μ = ∂^A_μ ℋ` at a phase point.
pub fn hamiltonian_map(h: &HamiltonianModel, pp: &PhasePoint) -> Result<SectionJet> {
    h.check_domain(&pp.z, &pp.p)?;
    let d = h.eval_seeded(&pp.z, &pp.p);
    let zq = DMatrix::from_fn(pp.m(), pp.n(), |a, mu| d.dp(mu, a));
    SectionJet::new(pp.q.clone(), pp.z.clone(), zq)
}

/// Defects of the associated-pair relations at a phase point:
/// `momentum^μ_A = p^μ_A − ∂^μ_A ℒ(ẑ)` and
/// `energy = p^μ_A ∂^A_μ ℋ − ℋ − ℒ(ẑ)`, with `ẑ` the Hamiltonian map of
/// the point. Both vanish exactly where the point lies on the Lagrangian
/// constraint space of an associated pair; elsewhere they are reported, not
/// errored.
#[derive(Clone, Debug)]
pub struct AssociatedResiduals {
    /// n×m matrix `p − ∂ℒ∘ẑ`
    pub momentum: DMatrix<f64>,
    pub energy: f64,
    pub scale: f64,
}

impl AssociatedResiduals {
    /// Largest defect magnitude across both relations.
    pub fn max_abs(&self) -> f64 {
        self.momentum.abs().max().max(self.energy.abs())
    }
}

pub fn associated_hamiltonian_residuals(
    l: &LagrangianModel,
    h: &HamiltonianModel,
    pp: &PhasePoint,
) -> Result<AssociatedResiduals> {
    let dh = {
        h.check_domain(&pp.z, &pp.p)?;
        h.eval_seeded(&pp.z, &pp.p)
    };
    let zq_hat = DMatrix::from_fn(pp.m(), pp.n(), |a, mu| dh.dp(mu, a));
    if !l.domain_ok(&pp.z, &zq_hat) {
        return Err(Error::DomainViolation(format!(
            "Hamiltonian map lands outside the smoothness domain of `{}`",
            l.name()
        )));
    }
    let dl = l.eval_seeded(&pp.z, &zq_hat);

    let momentum = DMatrix::from_fn(pp.n(), pp.m(), |mu, a| pp.p[(mu, a)] - dl.dzq(a, mu));
    let mut energy = -dh.value - dl.value;
    for mu in 0..pp.n() {
        for a in 0..pp.m() {
            energy += pp.p[(mu, a)] * dh.dp(mu, a);
        }
    }
    let scale = dl
        .scale()
        .max(dh.scale())
        .max(pp.p.abs().max());
    Ok(AssociatedResiduals {
        momentum,
        energy,
        scale,
    })
}

/// Residuals of the covariant Hamilton equations at a phase second jet:
/// `velocity^A_μ = z^A_μ − ∂^A_μ ℋ` and `force_A = −p^μ_{μA} − ∂_A ℋ`.
/// Both vanish on solutions.
#[derive(Clone, Debug)]
pub struct HamiltonResiduals {
    /// m×n matrix `z^A_μ − ∂^A_μ ℋ`
    pub velocity: DMatrix<f64>,
    /// m-vector `−p^μ_{μA} − ∂_A ℋ`
    pub force: DVector<f64>,
    pub scale: f64,
}

impl HamiltonResiduals {
    pub fn max_abs(&self) -> f64 {
        self.velocity.abs().max().max(self.force.abs().max())
    }
}

pub fn hamilton_residual(h: &HamiltonianModel, pj: &PhaseSecondJet) -> Result<HamiltonResiduals> {
    h.check_domain(&pj.point.z, &pj.point.p)?;
    let d = h.eval_seeded(&pj.point.z, &pj.point.p);
    let velocity = DMatrix::from_fn(pj.point.m(), pj.point.n(), |a, mu| {
        pj.zq[(a, mu)] - d.dp(mu, a)
    });
    let force = DVector::from_fn(pj.point.m(), |a, _| -pj.p_div[a] - d.dz(a));
    let scale = d
        .scale()
        .max(pj.zq.abs().max())
        .max(pj.p_div.abs().max());
    Ok(HamiltonResiduals {
        velocity,
        force,
        scale,
    })
}

/// Reparametrization Noether-identity residual on the Hamiltonian side:
/// `R^μ_ν = δ^μ_ν ℋ − (n−1) p^μ_A ∂^A_ν ℋ`. Vanishes for Hamiltonians of
/// submanifold dynamics; for n = 1 it degenerates to `R = ℋ`, so only the
/// zero Hamiltonian passes — the known obstruction for curves.
pub fn hamiltonian_noether_residual(
    h: &HamiltonianModel,
    pp: &PhasePoint,
) -> Result<(DMatrix<f64>, f64)> {
    h.check_domain(&pp.z, &pp.p)?;
    let d = h.eval_seeded(&pp.z, &pp.p);
    let n = pp.n();
    let factor = n as f64 - 1.0;
    let r = DMatrix::from_fn(n, n, |mu, nu| {
        let mut acc = if mu == nu { d.value } else { 0.0 };
        for a in 0..pp.m() {
            acc -= factor * pp.p[(mu, a)] * d.dp(nu, a);
        }
        acc
    });
    let scale = d.scale() * pp.p.abs().max().max(1.0);
    Ok((r, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, ConstantMetric, ModelConfig};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn string_pair() -> (LagrangianModel, HamiltonianModel) {
        let cfg = ModelConfig::new(ConstantMetric::euclidean(3), 1.0);
        (
            models::nambu_goto_lagrangian(&cfg),
            models::string_hamiltonian(&cfg),
        )
    }

    fn minkowski_cfg() -> ModelConfig {
        ModelConfig::new(ConstantMetric::minkowski(4), 1.0)
    }

    #[test]
    fn legendre_of_free_particle_lands_on_mass_shell() {
        let l = models::free_particle_lagrangian(&minkowski_cfg());
        let j = SectionJet::new(
            DVector::zeros(1),
            DVector::zeros(4),
            DMatrix::from_column_slice(4, 1, &[1.25, 0.75, 0.0, 0.0]),
        )
        .unwrap();
        let pp = legendre(&l, &j).unwrap();
        let expected = [1.25, -0.75, 0.0, 0.0];
        for a in 0..4 {
            assert_relative_eq!(pp.p[(0, a)], expected[a], epsilon = 1e-14);
        }
        // mass shell: η^{AB} p_A p_B = 1
        let eta_inv = ConstantMetric::minkowski(4);
        let pvec = DVector::from_fn(4, |a, _| pp.p[(0, a)]);
        assert_relative_eq!(eta_inv.ip_inverse(&pvec, &pvec), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_particle_momenta_are_scale_invariant() {
        // degree-zero homogeneity of the square-root density: the degeneracy
        // that forces the n = 1 Hamiltonian obstruction
        let l = models::free_particle_lagrangian(&minkowski_cfg());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let zq = loop {
                let cand = DMatrix::from_fn(4, 1, |r, _| {
                    if r == 0 {
                        rng.random_range(1.0..2.0)
                    } else {
                        rng.random_range(-0.5..0.5)
                    }
                });
                let j = SectionJet::new(DVector::zeros(1), DVector::zeros(4), cand.clone()).unwrap();
                if l.domain_ok(&j.z, &j.zq) {
                    break cand;
                }
            };
            let j1 = SectionJet::new(DVector::zeros(1), DVector::zeros(4), zq.clone()).unwrap();
            let lam = rng.random_range(0.5..3.0);
            let j2 = SectionJet::new(DVector::zeros(1), DVector::zeros(4), &zq * lam).unwrap();
            let (p1, p2) = (legendre(&l, &j1).unwrap(), legendre(&l, &j2).unwrap());
            assert_relative_eq!((&p1.p - &p2.p).abs().max(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn string_legendre_at_orthonormal_columns_is_transpose() {
        let (l, _) = string_pair();
        let zq = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        let j = SectionJet::new(DVector::zeros(2), DVector::zeros(3), zq.clone()).unwrap();
        let pp = legendre(&l, &j).unwrap();
        assert_relative_eq!((&pp.p - zq.transpose()).abs().max(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn hamiltonian_map_homogeneity_and_unit_case() {
        let (_, h) = string_pair();
        let p = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let pp = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), p.clone()).unwrap();
        let jet = hamiltonian_map(&h, &pp).unwrap();
        assert_relative_eq!((&jet.zq - p.transpose()).abs().max(), 0.0, epsilon = 1e-13);

        // degree-2 Hamiltonian has a degree-1 fiber derivative
        let lam = 1.7;
        let pp2 = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), &p * lam).unwrap();
        let jet2 = hamiltonian_map(&h, &pp2).unwrap();
        assert_relative_eq!((&jet2.zq - &jet.zq * lam).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn p_independent_hamiltonian_maps_to_zero_jet() {
        let h = HamiltonianModel::new(
            "z-only",
            2,
            3,
            Arc::new(|z: &[HyperDual], _p: &[HyperDual]| &z[0] * &z[1] + &z[2]),
            Arc::new(|_, _| true),
        );
        let pp = PhasePoint::new(
            DVector::zeros(2),
            DVector::from_vec(vec![0.3, -0.4, 0.9]),
            DMatrix::from_fn(2, 3, |r, c| (r + c) as f64),
        )
        .unwrap();
        let jet = hamiltonian_map(&h, &pp).unwrap();
        assert_eq!(jet.zq.abs().max(), 0.0);
    }

    #[test]
    fn associated_pair_holds_at_unit_self_dual_point() {
        let (l, h) = string_pair();
        let p = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let pp = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), p).unwrap();
        let res = associated_hamiltonian_residuals(&l, &h, &pp).unwrap();
        assert!(res.max_abs() < 1e-13, "max residual {}", res.max_abs());
    }

    #[test]
    fn hamilton_residual_affine_in_velocity_perturbations() {
        let (_, h) = string_pair();
        let p = DMatrix::from_row_slice(2, 3, &[0.9, 0.1, 0.0, -0.2, 1.1, 0.3]);
        let point = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), p).unwrap();
        let zq = hamiltonian_map(&h, &point).unwrap().zq;
        let pj = PhaseSecondJet::new(point.clone(), zq.clone(), DVector::zeros(3)).unwrap();
        let base = hamilton_residual(&h, &pj).unwrap();
        assert!(base.velocity.abs().max() < 1e-14);

        let mut shifted = zq;
        let delta = 0.37;
        shifted[(1, 0)] += delta;
        let pj2 = PhaseSecondJet::new(point, shifted, DVector::zeros(3)).unwrap();
        let res = hamilton_residual(&h, &pj2).unwrap();
        assert_relative_eq!(res.velocity[(1, 0)], delta, epsilon = 1e-14);
    }

    #[test]
    fn noether_residual_for_curves_equals_the_hamiltonian() {
        // n = 1 reproduces the obstruction: the residual is ℋ itself, so any
        // nonzero Hamiltonian fails.
        let cfg = ModelConfig::new(ConstantMetric::minkowski(4), 1.0);
        let h = models::trace_control_hamiltonian(&cfg, 1);
        let p = DMatrix::from_row_slice(1, 4, &[1.0, 0.3, -0.2, 0.5]);
        let pp = PhasePoint::new(DVector::zeros(1), DVector::zeros(4), p.clone()).unwrap();
        let (r, _) = hamiltonian_noether_residual(&h, &pp).unwrap();
        let value = h.value(&pp.z, &pp.p);
        assert!(value != 0.0);
        assert_eq!(r[(0, 0)], value);
    }

    #[test]
    fn string_noether_residual_vanishes_and_trace_control_fails() {
        let (_, h) = string_pair();
        let cfg = ModelConfig::new(ConstantMetric::euclidean(3), 1.0);
        let control = models::trace_control_hamiltonian(&cfg, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut control_hits = 0usize;
        for _ in 0..100 {
            let p = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
            let pp = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), p).unwrap();
            if !h.domain_ok(&pp.z, &pp.p) {
                continue;
            }
            let (r, scale) = hamiltonian_noether_residual(&h, &pp).unwrap();
            assert!(
                r.abs().max() < 1e-10 * scale,
                "string residual {} at scale {}",
                r.abs().max(),
                scale
            );
            let (rc, sc) = hamiltonian_noether_residual(&control, &pp).unwrap();
            if rc.abs().max() > 1e-3 * sc {
                control_hits += 1;
            }
        }
        assert!(control_hits > 80, "control failed only {control_hits} times");
    }

    #[test]
    fn trace_identity_for_degree_two_hamiltonians() {
        // tr R = n·ℋ − (n−1)·2ℋ = 0 exactly for the string Hamiltonian
        let (_, h) = string_pair();
        let p = DMatrix::from_row_slice(2, 3, &[0.8, -0.3, 0.4, 0.1, 1.2, -0.6]);
        let pp = PhasePoint::new(DVector::zeros(2), DVector::zeros(3), p).unwrap();
        let (r, scale) = hamiltonian_noether_residual(&h, &pp).unwrap();
        assert!((r[(0, 0)] + r[(1, 1)]).abs() < 1e-14 * scale);
    }
}
