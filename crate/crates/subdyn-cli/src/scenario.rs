//! Scenario schema and the campaign/simulation drivers behind the
//! subcommands. Scenarios are validated strictly (unknown keys rejected)
//! before any computation starts.

use crate::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use subdyn::check::{self, tolerances, CheckRecord, MomentumSource, Report};
use subdyn::dynamics::{self, ParticleModel, ParticleState, Trajectory};
use subdyn::models::{
    self, EmPotentialSpec, EmTwoFormSpec, MetricSpec, ModelConfig, ModelSpec,
};
use subdyn::phase::HamiltonianModel;
use subdyn::sample::SamplingSpec;
use subdyn::varcalc::LagrangianModel;

fn default_sign() -> f64 {
    1.0
}

fn default_fields() -> usize {
    5
}

/// Integration block of a scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    pub z0: Vec<f64>,
    pub v0: Vec<f64>,
    pub step: f64,
    pub steps: usize,
    #[serde(default = "default_project_every")]
    pub project_every: usize,
    /// Periodic coordinates wrapped in the *output only*: pairs of
    /// (coordinate index, period).
    #[serde(default)]
    pub wrap: Vec<(usize, f64)>,
}

fn default_project_every() -> usize {
    10
}

/// Output block of a scenario.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<OutputFormat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A full scenario: model selection, check selection, sampling, integration,
/// and output. The model fields mirror the model-config schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: String,
    pub metric: MetricSpec,
    #[serde(default = "default_sign")]
    pub sign: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_potential: Option<EmPotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_two_form: Option<EmTwoFormSpec>,
    /// Base dimension for Hamiltonian controls that support several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Companion Hamiltonian for pair checks when `model` is a Lagrangian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub checks: Vec<String>,
    /// Momentum source for the associated-pair check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_source: Option<MomentumSource>,
    /// Number of random vector fields in the first-variation campaign.
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default)]
    pub sampling: SamplingSpec,
    /// Per-check tolerance overrides keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::usage(format!("invalid scenario config: {e}")))
    }

    fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            model: self.model.clone(),
            metric: self.metric.clone(),
            sign: self.sign,
            em_potential: self.em_potential.clone(),
            em_two_form: self.em_two_form.clone(),
        }
    }

    pub fn build_config(&self) -> Result<ModelConfig, CliError> {
        Ok(self.model_spec().build_config()?)
    }

    /// Hash of the canonical serialized scenario, recorded in reports.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(2 * digest.len());
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    fn base_dimension(&self) -> usize {
        self.n.unwrap_or(match self.model.as_str() {
            "nambu-goto" | "string-hamiltonian" => 2,
            _ if self.hamiltonian.as_deref() == Some("string-hamiltonian") => 2,
            "trace-control" => 2,
            _ => 1,
        })
    }

    /// Resolve the models this scenario names.
    pub fn build_models(
        &self,
    ) -> Result<(Option<LagrangianModel>, Option<HamiltonianModel>), CliError> {
        let cfg = self.build_config()?;
        let n = self.base_dimension();
        let mut lagrangian = None;
        let mut hamiltonian = None;
        if models::LAGRANGIAN_NAMES.contains(&self.model.as_str()) {
            lagrangian = Some(models::lagrangian_by_name(&self.model, &cfg)?);
        } else if models::HAMILTONIAN_NAMES.contains(&self.model.as_str()) {
            hamiltonian = Some(models::hamiltonian_by_name(&self.model, &cfg, n)?);
        } else {
            return Err(CliError::usage(format!("unknown model `{}`", self.model)));
        }
        if let Some(name) = &self.hamiltonian {
            hamiltonian = Some(models::hamiltonian_by_name(name, &cfg, n)?);
        }
        Ok((lagrangian, hamiltonian))
    }

    fn tolerance_for(&self, check: &str, global_override: Option<f64>) -> f64 {
        if let Some(t) = global_override {
            return t;
        }
        if let Some(t) = self.tolerances.get(check) {
            return *t;
        }
        match check {
            "grad-audit" => tolerances::DERIVATIVE_AUDIT_REL,
            _ => tolerances::IDENTITY_REL,
        }
    }

    /// Run the selected checks in declared order and assemble the report.
    pub fn run_checks(&self, tol_override: Option<f64>) -> Result<Report, CliError> {
        let (lagrangian, hamiltonian) = self.build_models()?;
        let spec = self.sampling;
        let mut records: Vec<CheckRecord> = Vec::new();

        for name in &self.checks {
            let tol = self.tolerance_for(name, tol_override);
            match name.as_str() {
                "noether-lagrangian" => {
                    let l = require_lagrangian(&lagrangian, name)?;
                    let (record, _) = check::noether_lagrangian_check(l, &spec, tol)?;
                    records.push(record);
                }
                "first-variation" => {
                    let l = require_lagrangian(&lagrangian, name)?;
                    let (record, _) = check::first_variation_check(l, &spec, self.fields, tol)?;
                    records.push(record);
                }
                "noether-hamiltonian" => {
                    let h = require_hamiltonian(&hamiltonian, name)?;
                    let (record, _) = check::noether_hamiltonian_check(h, &spec, tol)?;
                    records.push(record);
                }
                "associated-pair" => {
                    let l = require_lagrangian(&lagrangian, name)?;
                    let h = require_hamiltonian(&hamiltonian, name)?;
                    let source = self
                        .momentum_source
                        .unwrap_or(MomentumSource::LegendreImage);
                    let (record, _) = check::associated_pair_check(l, h, &spec, source, tol)?;
                    records.push(record);
                }
                "grad-audit" => {
                    if let Some(l) = &lagrangian {
                        let (record, _) = check::grad_audit_lagrangian(l, &spec, tol)?;
                        records.push(record);
                    }
                    if let Some(h) = &hamiltonian {
                        let (record, _) = check::grad_audit_hamiltonian(h, &spec, tol)?;
                        records.push(record);
                    }
                }
                other => {
                    return Err(CliError::usage(format!("unknown check `{other}`")));
                }
            }
        }

        Ok(Report::new(spec.seed, self.config_hash(), records))
    }

    /// Build the particle model and integrate the configured trajectory.
    pub fn run_simulation(&self) -> Result<Trajectory, CliError> {
        let cfg = self.build_config()?;
        let integration = self
            .integration
            .as_ref()
            .ok_or_else(|| CliError::usage("scenario has no integration block".into()))?;

        let model = match self.model.as_str() {
            "free-particle" => ParticleModel::free(cfg.metric.clone()),
            "charged-particle" => {
                let potential = cfg
                    .em_potential
                    .clone()
                    .unwrap_or_else(|| subdyn::varcalc::OneFormField::zero(cfg.metric.dim()));
                ParticleModel::charged(cfg.metric.clone(), potential)
            }
            other => {
                return Err(CliError::usage(format!(
                    "simulation supports curve models only, got `{other}`"
                )));
            }
        };

        let m = cfg.metric.dim();
        if integration.z0.len() != m || integration.v0.len() != m {
            return Err(CliError::usage(format!(
                "initial state must have {m} components"
            )));
        }
        let s0 = ParticleState::new(
            0.0,
            nalgebra::DVector::from_row_slice(&integration.z0),
            nalgebra::DVector::from_row_slice(&integration.v0),
        )?;
        // constraint violations are a config problem, caught before any step
        let defect = model.constraint_violation(&s0);
        if defect > dynamics::INITIAL_CONSTRAINT_TOL {
            return Err(CliError::usage(format!(
                "initial velocity violates the unit constraint by {defect:.3e} \
                 (must satisfy eta(v, v) = 1 to {:.0e})",
                dynamics::INITIAL_CONSTRAINT_TOL
            )));
        }

        let trajectory = dynamics::integrate(
            &model,
            s0,
            integration.step,
            integration.steps,
            integration.project_every,
        )?;
        Ok(if integration.wrap.is_empty() {
            trajectory
        } else {
            trajectory.wrap_coordinates(&integration.wrap)
        })
    }
}

fn require_lagrangian<'a>(
    l: &'a Option<LagrangianModel>,
    check: &str,
) -> Result<&'a LagrangianModel, CliError> {
    l.as_ref()
        .ok_or_else(|| CliError::usage(format!("check `{check}` needs a Lagrangian model")))
}

fn require_hamiltonian<'a>(
    h: &'a Option<HamiltonianModel>,
    check: &str,
) -> Result<&'a HamiltonianModel, CliError> {
    h.as_ref().ok_or_else(|| {
        CliError::usage(format!(
            "check `{check}` needs a Hamiltonian model (set `model` or `hamiltonian`)"
        ))
    })
}
