//! Proper-time integration of the relativistic-particle equations of motion
//! restricted to the unit-velocity constraint surface
//! `η_{AB} z^A_τ z^B_τ = 1`, plus reparametrization-equivalence testing of
//! computed worldlines.
//!
//! The constrained equations are integrated directly in Lorentz-force form:
//! the unconstrained square-root Lagrangian is degenerate for curves (its
//! Hamiltonian counterpart is obstructed to zero), so the constraint surface
//! is where the familiar dynamics lives. Consistency with the variational
//! side is established separately by evaluating the Euler–Lagrange residual
//! along computed trajectories.

use crate::models::ConstantMetric;
use crate::varcalc::OneFormField;
use crate::{Error, Result};
use nalgebra::DVector;
use serde::Serialize;
use std::io::Write;

/// Tolerance on the initial unit-velocity constraint.
pub const INITIAL_CONSTRAINT_TOL: f64 = 1e-10;
/// How far off the constraint surface the force evaluation tolerates.
pub const RHS_CONSTRAINT_TOL: f64 = 1e-3;

/// Instantaneous particle data along a worldline.
#[derive(Clone, Debug)]
pub struct ParticleState {
    pub tau: f64,
    pub z: DVector<f64>,
    pub v: DVector<f64>,
}

impl ParticleState {
    pub fn new(tau: f64, z: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        if z.len() != v.len() {
            return Err(Error::Config("state position/velocity length mismatch".into()));
        }
        if !z.iter().chain(v.iter()).all(|x| x.is_finite()) {
            return Err(Error::Config("state has non-finite entries".into()));
        }
        Ok(Self { tau, z, v })
    }
}

/// Force law on the constraint surface.
#[derive(Clone)]
pub enum ParticleForce {
    Free,
    /// Lorentz force derived from a one-form potential.
    Lorentz(OneFormField),
}

/// A particle model: fiber metric plus force law.
#[derive(Clone)]
pub struct ParticleModel {
    name: String,
    metric: ConstantMetric,
    force: ParticleForce,
}

impl ParticleModel {
    pub fn free(metric: ConstantMetric) -> Self {
        Self {
            name: "free-particle".into(),
            metric,
            force: ParticleForce::Free,
        }
    }

    pub fn charged(metric: ConstantMetric, potential: OneFormField) -> Self {
        Self {
            name: "charged-particle".into(),
            metric,
            force: ParticleForce::Lorentz(potential),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn metric(&self) -> &ConstantMetric {
        &self.metric
    }

    /// Unit-constraint defect `|η(v, v) − 1|` of a state.
    pub fn constraint_violation(&self, s: &ParticleState) -> f64 {
        (self.metric.ip(&s.v, &s.v) - 1.0).abs()
    }

    /// Acceleration `z^A_ττ` on the constraint surface: zero for the free
    /// particle, `−η^{AC} F_{CB} v^B` with `F_{CB} = ∂_C 𝒜_B − ∂_B 𝒜_C`
    /// for the charged one. The antisymmetry of F makes `η(v, a) = 0`, so
    /// the force is compatible with the constraint.
    pub fn rhs(&self, s: &ParticleState) -> Result<DVector<f64>> {
        if self.constraint_violation(s) > RHS_CONSTRAINT_TOL {
            return Err(Error::DomainViolation(format!(
                "velocity is off the unit constraint surface by {:.3e}",
                self.constraint_violation(s)
            )));
        }
        match &self.force {
            ParticleForce::Free => Ok(DVector::zeros(s.z.len())),
            ParticleForce::Lorentz(potential) => {
                let f = potential.field_strength(&s.z);
                Ok(-(self.metric.g_inv() * f * &s.v))
            }
        }
    }

    fn rhs_unchecked(&self, z: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        if self.metric.ip(v, v) <= 0.0 {
            return Err(Error::StepFailure(
                "velocity left the timelike cone at a stage point".into(),
            ));
        }
        match &self.force {
            ParticleForce::Free => Ok(DVector::zeros(z.len())),
            ParticleForce::Lorentz(potential) => {
                let f = potential.field_strength(z);
                Ok(-(self.metric.g_inv() * f * v))
            }
        }
    }
}

/// Constraint-drift bookkeeping of one integration run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DriftReport {
    /// Largest `|η(v,v) − 1|` observed before any projection.
    pub max_pre_projection: f64,
    /// Number of velocity renormalizations applied.
    pub projections: usize,
}

/// A uniformly sampled worldline with per-sample constraint defects.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: String,
    pub step: f64,
    pub samples: Vec<ParticleState>,
    pub constraint_violation: Vec<f64>,
    pub drift: DriftReport,
}

#[derive(Serialize)]
struct SampleRow<'a> {
    tau: f64,
    z: &'a [f64],
    v: &'a [f64],
    constraint_violation: f64,
}

#[derive(Serialize)]
struct TrajectoryWire<'a> {
    model: &'a str,
    step: f64,
    drift: &'a DriftReport,
    samples: Vec<SampleRow<'a>>,
}

/// Classical fourth-order Runge–Kutta on `(z, v)` with periodic velocity
/// renormalization back to the constraint surface. `project_every = 0`
/// disables projection. The initial state must satisfy the constraint to
/// [`INITIAL_CONSTRAINT_TOL`].
pub fn integrate(
    model: &ParticleModel,
    s0: ParticleState,
    step: f64,
    n_steps: usize,
    project_every: usize,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let initial_defect = model.constraint_violation(&s0);
    if initial_defect > INITIAL_CONSTRAINT_TOL {
        return Err(Error::Config(format!(
            "initial velocity violates the unit constraint by {initial_defect:.3e}"
        )));
    }

    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut violations = Vec::with_capacity(n_steps + 1);
    let mut drift = DriftReport::default();
    let mut z = s0.z.clone();
    let mut v = s0.v.clone();
    let tau0 = s0.tau;
    samples.push(s0);
    violations.push(initial_defect);

    for i in 0..n_steps {
        let k1 = model.rhs_unchecked(&z, &v)?;
        let z2 = &z + &v * (0.5 * step);
        let v2 = &v + &k1 * (0.5 * step);
        let k2 = model.rhs_unchecked(&z2, &v2)?;
        let z3 = &z + &v2 * (0.5 * step);
        let v3 = &v + &k2 * (0.5 * step);
        let k3 = model.rhs_unchecked(&z3, &v3)?;
        let z4 = &z + &v3 * step;
        let v4 = &v + &k3 * step;
        let k4 = model.rhs_unchecked(&z4, &v4)?;

        z += (&v + (&v2 + &v3) * 2.0 + v4) * (step / 6.0);
        v += (k1 + (k2 + k3) * 2.0 + k4) * (step / 6.0);

        let norm = model.metric().ip(&v, &v);
        if norm <= 0.0 {
            return Err(Error::StepFailure(
                "velocity left the timelike cone after a step".into(),
            ));
        }
        let defect = (norm - 1.0).abs();
        drift.max_pre_projection = drift.max_pre_projection.max(defect);

        if project_every > 0 && (i + 1) % project_every == 0 {
            v /= norm.sqrt();
            drift.projections += 1;
        }

        let tau = tau0 + (i + 1) as f64 * step;
        let state = ParticleState::new(tau, z.clone(), v.clone())?;
        violations.push((model.metric().ip(&state.v, &state.v) - 1.0).abs());
        samples.push(state);
    }

    Ok(Trajectory {
        model: model.name().to_string(),
        step,
        samples,
        constraint_violation: violations,
        drift,
    })
}

/// Whether two trajectories trace the same submanifold of Z: every position
/// sample of `t1` lies within `tol` of the piecewise-linear interpolation of
/// `t2`'s position samples. Parametrization (step size, sample count) is
/// deliberately ignored — that is the equivalence being tested.
pub fn reparametrization_equivalence(t1: &Trajectory, t2: &Trajectory, tol: f64) -> bool {
    if t2.samples.is_empty() {
        return t1.samples.is_empty();
    }
    let polyline: Vec<&DVector<f64>> = t2.samples.iter().map(|s| &s.z).collect();
    for s in &t1.samples {
        let best = if polyline.len() == 1 {
            (&s.z - polyline[0]).norm()
        } else {
            polyline
                .windows(2)
                .map(|w| point_segment_distance(&s.z, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        };
        if best > tol {
            return false;
        }
    }
    true
}

fn point_segment_distance(p: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

impl Trajectory {
    /// CSV rows under the header
    /// `tau,z0,...,z{m-1},v0,...,v{m-1},constraint_violation`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let m = self.samples.first().map_or(0, |s| s.z.len());
        write!(w, "tau")?;
        for a in 0..m {
            write!(w, ",z{a}")?;
        }
        for a in 0..m {
            write!(w, ",v{a}")?;
        }
        writeln!(w, ",constraint_violation")?;
        for (s, viol) in self.samples.iter().zip(&self.constraint_violation) {
            write!(w, "{:.17e}", s.tau)?;
            for x in s.z.iter() {
                write!(w, ",{x:.17e}")?;
            }
            for x in s.v.iter() {
                write!(w, ",{x:.17e}")?;
            }
            writeln!(w, ",{viol:.17e}")?;
        }
        Ok(())
    }

    /// JSON mirror of the CSV rows plus the drift report.
    pub fn to_json(&self) -> serde_json::Value {
        let samples = self
            .samples
            .iter()
            .zip(&self.constraint_violation)
            .map(|(s, &viol)| SampleRow {
                tau: s.tau,
                z: s.z.as_slice(),
                v: s.v.as_slice(),
                constraint_violation: viol,
            })
            .collect();
        serde_json::to_value(TrajectoryWire {
            model: &self.model,
            step: self.step,
            drift: &self.drift,
            samples,
        })
        .expect("trajectory serialization is infallible")
    }

    /// Copy with designated position coordinates wrapped into `[0, period)`.
    /// Output formatting only; integration state is never wrapped.
    pub fn wrap_coordinates(&self, wrap: &[(usize, f64)]) -> Trajectory {
        let mut out = self.clone();
        for s in &mut out.samples {
            for &(idx, period) in wrap {
                if idx < s.z.len() && period > 0.0 {
                    s.z[idx] = s.z[idx].rem_euclid(period);
                }
            }
        }
        out
    }
}
