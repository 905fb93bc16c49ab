//! Residual-check campaigns: seeded sampling, batch evaluation, and the
//! report records the CLI emits. Each campaign draws its own labelled sample
//! stream, evaluates residuals in parallel (input order preserved), and
//! records the worst sample relative to its local scale.

use crate::batch::{self, Outcome};
use crate::fd;
use crate::phase::{self, HamiltonianModel};
use crate::sample::{self, Sampled, SamplingSpec};
use crate::varcalc::{self, LagrangianModel, VectorFieldOnZQ};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default tolerances, all relative to the local scale reported alongside
/// each residual.
pub mod tolerances {
    /// Variational identities (Noether residuals, first variational formula,
    /// associated-pair relations) hold to round-off; this bound allows for
    /// accumulation over the contractions.
    pub const IDENTITY_REL: f64 = 1e-8;
    /// Forward-mode derivatives against central finite differences; limited
    /// by the truncation error of the stencils, not by the engine.
    pub const DERIVATIVE_AUDIT_REL: f64 = 1e-6;
    /// Negative controls must exceed this floor on most samples to count as
    /// detected.
    pub const CONTROL_FLOOR_REL: f64 = 1e-3;
    /// Fraction of samples a negative control must fail on.
    pub const CONTROL_FRACTION: f64 = 0.9;
    /// Exact kinematic compositions (velocity addition, lift/project
    /// round-trips).
    pub const KINEMATIC_EXACT: f64 = 1e-12;
    /// Reparametrization invariance of the projection.
    pub const PROJECT_GL_INVARIANCE: f64 = 1e-10;
    /// Straight free worldline over τ = 10.
    pub const FREE_WORLDLINE: f64 = 1e-10;
    /// Gyration-orbit closure against the closed-form solution, one period.
    pub const ORBIT_CLOSURE: f64 = 1e-5;
    /// Pre-projection constraint drift over 10⁴ steps.
    pub const CONSTRAINT_DRIFT: f64 = 1e-8;
    /// Conserved momentum components of the free particle.
    pub const MOMENTUM_CONSERVATION: f64 = 1e-10;
    /// Randomized cocycle and relation-preservation transforms.
    pub const TRANSFORM_CONSISTENCY: f64 = 1e-10;
}

/// Curvature cap for derivative-audit points. The square-root densities have
/// fourth derivatives growing like the cube of the second near their domain
/// boundary, so capping observed curvature keeps the h² stencil truncation an
/// order of magnitude below [`tolerances::DERIVATIVE_AUDIT_REL`].
const AUDIT_CURVATURE_CAP: f64 = 10.0;

/// Outcome of one residual campaign.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub model: String,
    pub detail: String,
    pub samples_attempted: usize,
    pub samples_accepted: usize,
    pub eval_failures: usize,
    /// Residual of the worst sample (largest residual/scale ratio).
    pub max_residual: f64,
    /// Scale of that same sample.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn from_outcomes(
        name: &str,
        model: &str,
        detail: &str,
        attempts: usize,
        outcomes: &[Outcome],
        tolerance: f64,
    ) -> Self {
        let eval_failures = outcomes.iter().filter(|o| o.is_failure()).count();
        let (max_residual, scale) = batch::worst_relative(outcomes)
            .map_or((0.0, 1.0), |w| (w.residual, w.scale));
        Self {
            name: name.into(),
            model: model.into(),
            detail: detail.into(),
            samples_attempted: attempts,
            samples_accepted: outcomes.len(),
            eval_failures,
            max_residual,
            scale,
            tolerance,
            pass: max_residual < tolerance * scale,
        }
    }

    pub fn max_relative(&self) -> f64 {
        self.max_residual / self.scale
    }
}

/// Campaign: reparametrization Noether identity `z^A_ν E_A = 0` over random
/// second jets in the model's domain.
pub fn noether_lagrangian_check(
    l: &LagrangianModel,
    spec: &SamplingSpec,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("noether-lagrangian/{}", l.name());
    let Sampled { items, attempts } = sample::second_jets(l, spec, &label)?;
    let outcomes = batch::map_outcomes(&items, |j| {
        match varcalc::noether_identity_residual(l, j) {
            Ok((r, scale)) => Outcome {
                residual: r.abs().max(),
                scale,
            },
            Err(_) => Outcome::failed(),
        }
    });
    let record = CheckRecord::from_outcomes(
        "noether-lagrangian",
        l.name(),
        "reparametrization identity on the variational derivatives",
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

/// Campaign: first variational formula as an identity, over random
/// polynomial vector fields × random second jets.
pub fn first_variation_check(
    l: &LagrangianModel,
    spec: &SamplingSpec,
    n_fields: usize,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("first-variation/{}", l.name());
    let Sampled { items, attempts } = sample::second_jets(l, spec, &label)?;
    let mut rng = sample::rng_for(spec.seed, &format!("{label}/fields"));
    let fields: Vec<VectorFieldOnZQ> = (0..n_fields)
        .map(|_| VectorFieldOnZQ::random_polynomial(l.n(), l.m(), &mut rng))
        .collect();

    let mut outcomes = Vec::with_capacity(items.len() * fields.len());
    for field in &fields {
        outcomes.extend(batch::map_outcomes(&items, |j| {
            match varcalc::first_variation_residual(l, field, j) {
                Ok(r) => Outcome {
                    residual: r.value,
                    scale: r.scale,
                },
                Err(_) => Outcome::failed(),
            }
        }));
    }
    let record = CheckRecord::from_outcomes(
        "first-variation",
        l.name(),
        "Lie derivative equals boundary plus Euler-Lagrange pairing",
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

/// Campaign: Hamiltonian reparametrization identity
/// `δ^μ_ν ℋ = (n−1) p^μ_A ∂^A_ν ℋ` over random full-rank phase points.
pub fn noether_hamiltonian_check(
    h: &HamiltonianModel,
    spec: &SamplingSpec,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("noether-hamiltonian/{}", h.name());
    let Sampled { items, attempts } = sample::phase_points(h, spec, &label)?;
    let outcomes = batch::map_outcomes(&items, |pp| {
        match phase::hamiltonian_noether_residual(h, pp) {
            Ok((r, scale)) => Outcome {
                residual: r.abs().max(),
                scale,
            },
            Err(_) => Outcome::failed(),
        }
    });
    let record = CheckRecord::from_outcomes(
        "noether-hamiltonian",
        h.name(),
        "reparametrization identity on the Hamiltonian side",
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

/// Where the momenta of an associated-pair campaign come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumSource {
    /// Images of sampled jets under the Legendre map of the Lagrangian.
    LegendreImage,
    /// Momenta sampled directly in the Hamiltonian's domain.
    Generic,
}

/// Campaign: associated-pair relations between a Lagrangian and a candidate
/// Hamiltonian at sampled momenta.
pub fn associated_pair_check(
    l: &LagrangianModel,
    h: &HamiltonianModel,
    spec: &SamplingSpec,
    source: MomentumSource,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("associated-pair/{}/{}", l.name(), h.name());
    let (points, attempts) = match source {
        MomentumSource::LegendreImage => {
            let Sampled { items, attempts } = sample::section_jets(l, spec, &label)?;
            let points = items
                .iter()
                .map(|j| phase::legendre(l, j))
                .collect::<Result<Vec<_>>>()?;
            (points, attempts)
        }
        MomentumSource::Generic => {
            let Sampled { items, attempts } = sample::phase_points(h, spec, &label)?;
            (items, attempts)
        }
    };
    let outcomes = batch::map_outcomes(&points, |pp| {
        match phase::associated_hamiltonian_residuals(l, h, pp) {
            Ok(r) => Outcome {
                residual: r.max_abs(),
                scale: r.scale,
            },
            Err(_) => Outcome::failed(),
        }
    });
    let record = CheckRecord::from_outcomes(
        "associated-pair",
        &format!("{}/{}", l.name(), h.name()),
        match source {
            MomentumSource::LegendreImage => "momentum and energy relations at Legendre images",
            MomentumSource::Generic => "momentum and energy relations at generic momenta",
        },
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

/// Campaign: forward-mode first and second derivatives of a Lagrangian
/// density against central finite differences, at well-conditioned domain
/// points.
pub fn grad_audit_lagrangian(
    l: &LagrangianModel,
    spec: &SamplingSpec,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("grad-audit/{}", l.name());
    let mut rng = sample::rng_for(spec.seed, &label);
    let (m, n) = (l.m(), l.n());
    let mut outcomes = Vec::with_capacity(spec.count);
    let mut attempts = 0usize;
    while outcomes.len() < spec.count {
        if attempts >= spec.rejection_limit {
            return Err(crate::Error::SamplingExhausted {
                requested: spec.count,
                accepted: outcomes.len(),
                attempts,
            });
        }
        attempts += 1;
        let z = DVector::from_fn(m, |_, _| rng.random_range(spec.ranges.z[0]..spec.ranges.z[1]));
        let zq =
            DMatrix::from_fn(m, n, |_, _| rng.random_range(spec.ranges.zq[0]..spec.ranges.zq[1]));
        if !l.domain_ok(&z, &zq) {
            continue;
        }
        let d = l.eval_seeded(&z, &zq);
        if d.hess.abs().max() > AUDIT_CURVATURE_CAP {
            continue;
        }
        let mut point: Vec<f64> = z.iter().copied().collect();
        point.extend(varcalc::flatten_fiber_major(&zq));
        let f = |x: &[f64]| {
            let zz = DVector::from_row_slice(&x[..m]);
            let qq = DMatrix::from_fn(m, n, |a, mu| x[m + a * n + mu]);
            l.value(&zz, &qq)
        };
        match audit_outcome(&f, &point, d.value, &d.grad, &d.hess) {
            Some(outcome) => outcomes.push(outcome),
            None => continue,
        }
    }
    let record = CheckRecord::from_outcomes(
        "grad-audit",
        l.name(),
        "forward-mode derivatives vs central finite differences",
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

/// Campaign: derivative audit of a Hamiltonian density.
pub fn grad_audit_hamiltonian(
    h: &HamiltonianModel,
    spec: &SamplingSpec,
    tolerance: f64,
) -> Result<(CheckRecord, Vec<Outcome>)> {
    let label = format!("grad-audit/{}", h.name());
    let mut rng = sample::rng_for(spec.seed, &label);
    let (m, n) = (h.m(), h.n());
    let mut outcomes = Vec::with_capacity(spec.count);
    let mut attempts = 0usize;
    while outcomes.len() < spec.count {
        if attempts >= spec.rejection_limit {
            return Err(crate::Error::SamplingExhausted {
                requested: spec.count,
                accepted: outcomes.len(),
                attempts,
            });
        }
        attempts += 1;
        let z = DVector::from_fn(m, |_, _| rng.random_range(spec.ranges.z[0]..spec.ranges.z[1]));
        let p =
            DMatrix::from_fn(n, m, |_, _| rng.random_range(spec.ranges.p[0]..spec.ranges.p[1]));
        if !h.domain_ok(&z, &p) {
            continue;
        }
        let d = h.eval_seeded(&z, &p);
        if d.hess.abs().max() > AUDIT_CURVATURE_CAP {
            continue;
        }
        let mut point: Vec<f64> = z.iter().copied().collect();
        point.extend(phase::flatten_base_major(&p));
        let f = |x: &[f64]| {
            let zz = DVector::from_row_slice(&x[..m]);
            let pp = DMatrix::from_fn(n, m, |mu, a| x[m + mu * m + a]);
            h.value(&zz, &pp)
        };
        match audit_outcome(&f, &point, d.value, &d.grad, &d.hess) {
            Some(outcome) => outcomes.push(outcome),
            None => continue,
        }
    }
    let record = CheckRecord::from_outcomes(
        "grad-audit",
        h.name(),
        "forward-mode derivatives vs central finite differences",
        attempts,
        &outcomes,
        tolerance,
    );
    Ok((record, outcomes))
}

fn audit_outcome<F: Fn(&[f64]) -> f64>(
    f: &F,
    point: &[f64],
    value: f64,
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
) -> Option<Outcome> {
    let fd_grad = fd::gradient(f, point, fd::GRAD_STEP);
    let fd_hess = fd::hessian(f, point, fd::HESS_STEP);
    if !fd_grad.iter().chain(fd_hess.iter()).all(|x| x.is_finite()) {
        // a stencil corner left the domain; the sampler retries
        return None;
    }
    let residual = (grad - fd_grad)
        .abs()
        .max()
        .max((hess - fd_hess).abs().max());
    let scale = 1.0f64
        .max(value.abs())
        .max(grad.abs().max())
        .max(hess.abs().max());
    Some(Outcome { residual, scale })
}

/// A full report: reproducibility block plus one record per executed check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl Report {
    pub fn new(seed: u64, config_hash: String, checks: Vec<CheckRecord>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash,
            checks,
            pass,
        }
    }

    /// Fixed-width table for terminal output.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<22} {:<34} {:>9} {:>9} {:>12} {:>9}  {}\n",
            "check", "model", "accepted", "attempts", "max rel", "tol", "result"
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<22} {:<34} {:>9} {:>9} {:>12.3e} {:>9.1e}  {}\n",
                c.name,
                c.model,
                c.samples_accepted,
                c.samples_attempted,
                c.max_relative(),
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "overall: {} (seed {}, version {})\n",
            if self.pass { "pass" } else { "FAIL" },
            self.seed,
            self.version
        ));
        out
    }
}
