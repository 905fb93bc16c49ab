//! The concrete densities: free and charged relativistic particle,
//! Nambu–Goto sheet, their momentum-space counterparts, and the two negative
//! controls used to show the Noether identities are not vacuous. All share a
//! constant nondegenerate fiber metric.

use crate::hyperdual::HyperDual;
use crate::phase::HamiltonianModel;
use crate::varcalc::{
    interaction_dual_one_form, interaction_dual_two_form, LagrangianModel, OneFormField,
    TwoFormField,
};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A constant nondegenerate symmetric fiber metric `η_{AB}` with its inverse.
#[derive(Clone, Debug)]
pub struct ConstantMetric {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl ConstantMetric {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::Config("metric must be square".into()));
        }
        let m = g.nrows();
        for a in 0..m {
            for b in 0..a {
                if g[(a, b)] != g[(b, a)] {
                    return Err(Error::Config("metric must be symmetric".into()));
                }
            }
        }
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("metric is degenerate".into()))?;
        let gap = (&g * &g_inv - DMatrix::identity(m, m)).abs().max();
        if gap > 1e-12 {
            return Err(Error::Config(format!(
                "metric inverse check failed (|g·g⁻¹ − 1| = {gap:.3e})"
            )));
        }
        Ok(Self { g, g_inv })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(entries)))
    }

    pub fn euclidean(m: usize) -> Self {
        Self::diagonal(&vec![1.0; m]).expect("identity metric")
    }

    /// `diag(1, −1, …, −1)`
    pub fn minkowski(m: usize) -> Self {
        let mut d = vec![-1.0; m];
        d[0] = 1.0;
        Self::diagonal(&d).expect("minkowski metric")
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    /// `η_{AB} a^A b^B`
    pub fn ip(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.g * b)[(0, 0)]
    }

    /// `η^{AB} a_A b_B`
    pub fn ip_inverse(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.g_inv * b)[(0, 0)]
    }
}

/// Built model configuration: metric, square-root sign convention, optional
/// interaction fields.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub metric: ConstantMetric,
    /// ±1 inside determinant square roots; records the signature ambiguity
    /// of `(det h)^{1/2}` instead of resolving it silently.
    pub sign: f64,
    pub em_potential: Option<OneFormField>,
    pub em_two_form: Option<TwoFormField>,
}

impl ModelConfig {
    pub fn new(metric: ConstantMetric, sign: f64) -> Self {
        Self {
            metric,
            sign,
            em_potential: None,
            em_two_form: None,
        }
    }

    pub fn with_potential(mut self, a: OneFormField) -> Self {
        self.em_potential = Some(a);
        self
    }

    pub fn with_two_form(mut self, f: TwoFormField) -> Self {
        self.em_two_form = Some(f);
        self
    }
}

// ---------------------------------------------------------------------------
// Serializable configuration schema
// ---------------------------------------------------------------------------

/// Metric part of the JSON config: `{"diag": [...]}` or `{"matrix": [[...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum MetricSpec {
    #[serde(rename = "diag")]
    Diag(Vec<f64>),
    #[serde(rename = "matrix")]
    Matrix(Vec<Vec<f64>>),
}

impl MetricSpec {
    pub fn build(&self) -> Result<ConstantMetric> {
        match self {
            MetricSpec::Diag(d) => ConstantMetric::diagonal(d),
            MetricSpec::Matrix(rows) => {
                let m = rows.len();
                ConstantMetric::new(crate::charts::rows_to_matrix(rows, m, m)?)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSpec::Diag(d) => d.len(),
            MetricSpec::Matrix(rows) => rows.len(),
        }
    }
}

/// One-form potential part of the JSON config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmPotentialSpec {
    Zero,
    /// Constant covector `𝒜_B = values[B]`; pure gauge, drops out of the
    /// equations of motion.
    Constant { values: Vec<f64> },
    /// Linear gauge `𝒜_{plane.1} = b·z^{plane.0}`, i.e. a constant field
    /// `F_{plane.0, plane.1} = b`.
    ConstantMagnetic { b: f64, plane: (usize, usize) },
    /// General linear potential `𝒜_B = coeffs[B][C] z^C`.
    Linear { coeffs: Vec<Vec<f64>> },
}

impl EmPotentialSpec {
    pub fn build(&self, m: usize) -> Result<OneFormField> {
        match self {
            EmPotentialSpec::Zero => Ok(OneFormField::zero(m)),
            EmPotentialSpec::Constant { values } => {
                if values.len() != m {
                    return Err(Error::Config("potential length must match metric dim".into()));
                }
                Ok(OneFormField::constant(DVector::from_row_slice(values)))
            }
            EmPotentialSpec::ConstantMagnetic { b, plane } => {
                let (i, j) = *plane;
                if i >= m || j >= m || i == j {
                    return Err(Error::Config("magnetic plane indices out of range".into()));
                }
                let mut coeffs = DMatrix::zeros(m, m);
                coeffs[(j, i)] = *b;
                Ok(OneFormField::linear(coeffs))
            }
            EmPotentialSpec::Linear { coeffs } => {
                Ok(OneFormField::linear(crate::charts::rows_to_matrix(coeffs, m, m)?))
            }
        }
    }
}

/// Two-form field part of the JSON config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmTwoFormSpec {
    /// `F = strength · e^i ∧ e^j`
    Plane { plane: (usize, usize), strength: f64 },
    /// Full antisymmetric matrix.
    Matrix { entries: Vec<Vec<f64>> },
}

impl EmTwoFormSpec {
    pub fn build(&self, m: usize) -> Result<TwoFormField> {
        match self {
            EmTwoFormSpec::Plane { plane, strength } => {
                TwoFormField::plane(m, plane.0, plane.1, *strength)
            }
            EmTwoFormSpec::Matrix { entries } => {
                TwoFormField::constant(crate::charts::rows_to_matrix(entries, m, m)?)
            }
        }
    }
}

fn default_sign() -> f64 {
    1.0
}

/// Model selection plus configuration, the `{"model": …, "metric": …,
/// "sign": …}` JSON schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: String,
    pub metric: MetricSpec,
    #[serde(default = "default_sign")]
    pub sign: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_potential: Option<EmPotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_two_form: Option<EmTwoFormSpec>,
}

impl ModelSpec {
    pub fn build_config(&self) -> Result<ModelConfig> {
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::Config(format!("sign must be ±1, got {}", self.sign)));
        }
        let metric = self.metric.build()?;
        let m = metric.dim();
        let mut cfg = ModelConfig::new(metric, self.sign);
        if let Some(spec) = &self.em_potential {
            cfg.em_potential = Some(spec.build(m)?);
        }
        if let Some(spec) = &self.em_two_form {
            cfg.em_two_form = Some(spec.build(m)?);
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

/// `h_{μν} = η_{AB} z^A_μ z^B_ν` for fiber-major jet seeds.
fn gram_entry(
    g: &DMatrix<f64>,
    zq: &[HyperDual],
    n: usize,
    mu: usize,
    nu: usize,
) -> HyperDual {
    let m = g.nrows();
    let seeds = zq.first().map_or(0, HyperDual::seeds);
    let mut acc = HyperDual::constant(0.0, seeds);
    for a in 0..m {
        for b in 0..m {
            let c = g[(a, b)];
            if c != 0.0 {
                acc += (&zq[a * n + mu] * &zq[b * n + nu]).scale(c);
            }
        }
    }
    acc
}

fn gram_entry_f64(g: &DMatrix<f64>, zq: &DMatrix<f64>, mu: usize, nu: usize) -> f64 {
    let m = g.nrows();
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            acc += g[(a, b)] * zq[(a, mu)] * zq[(b, nu)];
        }
    }
    acc
}

/// `ℒ = (η_{AB} z^A_τ z^B_τ)^{1/2}` on timelike curve velocities.
pub fn free_particle_lagrangian(cfg: &ModelConfig) -> LagrangianModel {
    let m = cfg.metric.dim();
    let g = cfg.metric.g().clone();
    let g_dom = g.clone();
    LagrangianModel::new(
        "free-particle",
        1,
        m,
        Arc::new(move |_z, zq| gram_entry(&g, zq, 1, 0, 0).sqrt()),
        Arc::new(move |_z, zq| gram_entry_f64(&g_dom, zq, 0, 0) > 0.0),
    )
}

/// `ℒ = (η_{AB} z^A_τ z^B_τ)^{1/2} − 𝒜_B z^B_τ` with the configured
/// potential (zero potential reduces to the free particle).
pub fn charged_particle_lagrangian(cfg: &ModelConfig) -> LagrangianModel {
    let m = cfg.metric.dim();
    let g = cfg.metric.g().clone();
    let g_dom = g.clone();
    let potential = cfg
        .em_potential
        .clone()
        .unwrap_or_else(|| OneFormField::zero(m));
    LagrangianModel::new(
        "charged-particle",
        1,
        m,
        Arc::new(move |z, zq| {
            gram_entry(&g, zq, 1, 0, 0).sqrt() + interaction_dual_one_form(&potential, z, zq, 1)
        }),
        Arc::new(move |_z, zq| gram_entry_f64(&g_dom, zq, 0, 0) > 0.0),
    )
}

/// Worldsheet area density `ℒ = (s · det h)^{1/2}` with
/// `h_{μν} = η_{AB} z^A_μ z^B_ν`; an optional constant two-form adds the
/// pull-back interaction term.
pub fn nambu_goto_lagrangian(cfg: &ModelConfig) -> LagrangianModel {
    let m = cfg.metric.dim();
    let g = cfg.metric.g().clone();
    let g_dom = g.clone();
    let sign = cfg.sign;
    let two_form = cfg.em_two_form.clone();
    LagrangianModel::new(
        "nambu-goto",
        2,
        m,
        Arc::new(move |_z, zq| {
            let h00 = gram_entry(&g, zq, 2, 0, 0);
            let h11 = gram_entry(&g, zq, 2, 1, 1);
            let h01 = gram_entry(&g, zq, 2, 0, 1);
            let det = &h00 * &h11 - &h01 * &h01;
            let mut out = det.scale(sign).sqrt();
            if let Some(f) = &two_form {
                out += interaction_dual_two_form(f, zq, 2);
            }
            out
        }),
        Arc::new(move |_z, zq| {
            let h00 = gram_entry_f64(&g_dom, zq, 0, 0);
            let h11 = gram_entry_f64(&g_dom, zq, 1, 1);
            let h01 = gram_entry_f64(&g_dom, zq, 0, 1);
            sign * (h00 * h11 - h01 * h01) > 0.0
        }),
    )
}

/// Negative control: the quadratic density `½ η_{AB} z^A_τ z^B_τ`, which is
/// not reparametrization invariant. Its domain is restricted to the same
/// timelike cone as the square-root models so control campaigns sample the
/// identical jet population.
pub fn quadratic_control_lagrangian(cfg: &ModelConfig) -> LagrangianModel {
    let m = cfg.metric.dim();
    let g = cfg.metric.g().clone();
    let g_dom = g.clone();
    LagrangianModel::new(
        "quadratic-control",
        1,
        m,
        Arc::new(move |_z, zq| gram_entry(&g, zq, 1, 0, 0).scale(0.5)),
        Arc::new(move |_z, zq| gram_entry_f64(&g_dom, zq, 0, 0) > 0.0),
    )
}

/// `H^{μν} = η^{AB} p^μ_A p^ν_B` for base-major momentum seeds.
fn cogram_entry(
    g_inv: &DMatrix<f64>,
    p: &[HyperDual],
    m: usize,
    mu: usize,
    nu: usize,
) -> HyperDual {
    let seeds = p.first().map_or(0, HyperDual::seeds);
    let mut acc = HyperDual::constant(0.0, seeds);
    for a in 0..m {
        for b in 0..m {
            let c = g_inv[(a, b)];
            if c != 0.0 {
                acc += (&p[mu * m + a] * &p[nu * m + b]).scale(c);
            }
        }
    }
    acc
}

fn cogram_entry_f64(g_inv: &DMatrix<f64>, p: &DMatrix<f64>, mu: usize, nu: usize) -> f64 {
    let m = g_inv.nrows();
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            acc += g_inv[(a, b)] * p[(mu, a)] * p[(nu, b)];
        }
    }
    acc
}

/// Sheet Hamiltonian `ℋ = (s · det H)^{1/2}` with
/// `H^{μν} = η^{AB} p^μ_A p^ν_B`; the momentum-space counterpart of the
/// area density.
pub fn string_hamiltonian(cfg: &ModelConfig) -> HamiltonianModel {
    let m = cfg.metric.dim();
    let g_inv = cfg.metric.g_inv().clone();
    let g_dom = g_inv.clone();
    let sign = cfg.sign;
    HamiltonianModel::new(
        "string-hamiltonian",
        2,
        m,
        Arc::new(move |_z, p| {
            let h00 = cogram_entry(&g_inv, p, m, 0, 0);
            let h11 = cogram_entry(&g_inv, p, m, 1, 1);
            let h01 = cogram_entry(&g_inv, p, m, 0, 1);
            (&h00 * &h11 - &h01 * &h01).scale(sign).sqrt()
        }),
        Arc::new(move |_z, p| {
            let h00 = cogram_entry_f64(&g_dom, p, 0, 0);
            let h11 = cogram_entry_f64(&g_dom, p, 1, 1);
            let h01 = cogram_entry_f64(&g_dom, p, 0, 1);
            sign * (h00 * h11 - h01 * h01) > 0.0
        }),
    )
}

/// Negative control: `ℋ = tr H = Σ_μ η^{AB} p^μ_A p^μ_B`, smooth everywhere
/// and not reparametrization invariant. Works for any base dimension; with
/// n = 1 it exhibits the curve obstruction (the residual is ℋ itself).
pub fn trace_control_hamiltonian(cfg: &ModelConfig, n: usize) -> HamiltonianModel {
    let m = cfg.metric.dim();
    let g_inv = cfg.metric.g_inv().clone();
    HamiltonianModel::new(
        "trace-control",
        n,
        m,
        Arc::new(move |_z, p| {
            let seeds = p.first().map_or(0, HyperDual::seeds);
            let mut acc = HyperDual::constant(0.0, seeds);
            for mu in 0..n {
                acc += cogram_entry(&g_inv, p, m, mu, mu);
            }
            acc
        }),
        Arc::new(|_, _| true),
    )
}

/// Registered Lagrangian names understood by the scenario schema.
pub const LAGRANGIAN_NAMES: [&str; 4] = [
    "free-particle",
    "charged-particle",
    "nambu-goto",
    "quadratic-control",
];

/// Registered Hamiltonian names understood by the scenario schema.
pub const HAMILTONIAN_NAMES: [&str; 2] = ["string-hamiltonian", "trace-control"];

/// Look up a Lagrangian by registry name.
pub fn lagrangian_by_name(name: &str, cfg: &ModelConfig) -> Result<LagrangianModel> {
    match name {
        "free-particle" => Ok(free_particle_lagrangian(cfg)),
        "charged-particle" => Ok(charged_particle_lagrangian(cfg)),
        "nambu-goto" => Ok(nambu_goto_lagrangian(cfg)),
        "quadratic-control" => Ok(quadratic_control_lagrangian(cfg)),
        other => Err(Error::Config(format!("unknown Lagrangian model `{other}`"))),
    }
}

/// Look up a Hamiltonian by registry name; `n` selects the base dimension
/// for controls that support several.
pub fn hamiltonian_by_name(name: &str, cfg: &ModelConfig, n: usize) -> Result<HamiltonianModel> {
    match name {
        "string-hamiltonian" => {
            if n != 2 {
                return Err(Error::Config("string-hamiltonian requires n = 2".into()));
            }
            Ok(string_hamiltonian(cfg))
        }
        "trace-control" => Ok(trace_control_hamiltonian(cfg, n)),
        other => Err(Error::Config(format!("unknown Hamiltonian model `{other}`"))),
    }
}
