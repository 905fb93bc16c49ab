//! The `transform` subcommand: jet payload parsing (including the
//! three-velocity shorthand), transition construction from flags, and the
//! echoed input/output/residual envelope.

use crate::CliError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use subdyn::charts::{
    lift, lift_relation_residual, project, submanifold_transform_residual, transform_section_jet,
    transform_submanifold_jet, SectionJet, SplitChart, SubmanifoldJet, TransitionMap,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TransformOp {
    /// Jet-of-submanifolds transformation law into a target split chart.
    Submanifold,
    /// Jet-of-sections transformation law.
    Section,
    /// Lift a submanifold jet to a section jet with a chosen base block.
    Lift,
    /// Project a regular section jet through a split chart.
    Project,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TransitionKind {
    Identity,
    /// Hyperbolic velocity boost mixing coordinates 0 and 1 (rapidity via --alpha).
    Boost,
    /// Swap two coordinates (--swap i,j).
    Exchange,
    /// Affine target/base maps (--matrix/--offset/--q-matrix/--q-offset).
    Affine,
}

#[derive(clap::Args, Debug)]
pub struct TransformArgs {
    /// Input jet JSON file, or `-` for stdin.
    #[arg(long)]
    pub input: String,
    /// Which operation to apply.
    #[arg(long, value_enum)]
    pub op: TransformOp,
    /// Transition to apply (submanifold/section ops).
    #[arg(long, value_enum, default_value = "identity")]
    pub transition: TransitionKind,
    /// Boost rapidity.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coordinate pair to exchange, e.g. `0,2`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub swap: Option<Vec<usize>>,
    /// Affine target matrix as JSON rows, e.g. `[[1,0],[0,1]]`.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Affine target offset as a JSON array.
    #[arg(long)]
    pub offset: Option<String>,
    /// Affine base matrix as JSON rows.
    #[arg(long)]
    pub q_matrix: Option<String>,
    /// Affine base offset as a JSON array.
    #[arg(long)]
    pub q_offset: Option<String>,
    /// Target split chart as comma-separated base indices (submanifold,
    /// project).
    #[arg(long, value_delimiter = ',')]
    pub chart: Option<Vec<usize>>,
    /// Base block for the lift as JSON rows; identity when omitted.
    #[arg(long)]
    pub xq: Option<String>,
}

/// Shorthand payload for the relativistic three-velocity case.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreeVelocity {
    three_velocity: [f64; 3],
}

enum JetPayload {
    Submanifold { jet: SubmanifoldJet, shorthand: bool },
    Section(SectionJet),
}

fn parse_payload(text: &str, op: TransformOp) -> Result<JetPayload, CliError> {
    if let Ok(tv) = serde_json::from_str::<ThreeVelocity>(text) {
        let chart = SplitChart::new(4, vec![0]).expect("static chart");
        let jet = SubmanifoldJet::new(
            chart,
            DVector::zeros(1),
            DVector::zeros(3),
            DMatrix::from_column_slice(3, 1, &tv.three_velocity),
        )
        .expect("static shape");
        return Ok(JetPayload::Submanifold { jet, shorthand: true });
    }
    match op {
        TransformOp::Submanifold | TransformOp::Lift => {
            let jet: SubmanifoldJet = serde_json::from_str(text)
                .map_err(|e| CliError::usage(format!("invalid submanifold jet payload: {e}")))?;
            Ok(JetPayload::Submanifold { jet, shorthand: false })
        }
        TransformOp::Section | TransformOp::Project => {
            let jet: SectionJet = serde_json::from_str(text)
                .map_err(|e| CliError::usage(format!("invalid section jet payload: {e}")))?;
            Ok(JetPayload::Section(jet))
        }
    }
}

fn parse_matrix(text: &str, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    let data: Vec<Vec<f64>> = serde_json::from_str(text)
        .map_err(|e| CliError::usage(format!("invalid {what}: {e}")))?;
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(CliError::usage(format!("{what} must be {rows}×{cols}")));
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| data[r][c]))
}

fn parse_vector(text: &str, len: usize, what: &str) -> Result<DVector<f64>, CliError> {
    let data: Vec<f64> = serde_json::from_str(text)
        .map_err(|e| CliError::usage(format!("invalid {what}: {e}")))?;
    if data.len() != len {
        return Err(CliError::usage(format!("{what} must have {len} entries")));
    }
    Ok(DVector::from_vec(data))
}

fn build_transition(args: &TransformArgs, m: usize, n: usize) -> Result<TransitionMap, CliError> {
    match args.transition {
        TransitionKind::Identity => Ok(TransitionMap::identity(m, n)),
        TransitionKind::Boost => {
            let alpha = args
                .alpha
                .ok_or_else(|| CliError::usage("boost requires --alpha".into()))?;
            Ok(TransitionMap::boost(m, n, alpha))
        }
        TransitionKind::Exchange => {
            let swap = args
                .swap
                .as_ref()
                .ok_or_else(|| CliError::usage("exchange requires --swap i,j".into()))?;
            let mut perm: Vec<usize> = (0..m).collect();
            if swap[0] >= m || swap[1] >= m {
                return Err(CliError::usage("swap indices out of range".into()));
            }
            perm.swap(swap[0], swap[1]);
            Ok(TransitionMap::permutation(m, n, perm)?)
        }
        TransitionKind::Affine => {
            let a = match &args.matrix {
                Some(text) => parse_matrix(text, m, m, "--matrix")?,
                None => DMatrix::identity(m, m),
            };
            let b = match &args.offset {
                Some(text) => parse_vector(text, m, "--offset")?,
                None => DVector::zeros(m),
            };
            let aq = match &args.q_matrix {
                Some(text) => parse_matrix(text, n, n, "--q-matrix")?,
                None => DMatrix::identity(n, n),
            };
            let bq = match &args.q_offset {
                Some(text) => parse_vector(text, n, "--q-offset")?,
                None => DVector::zeros(n),
            };
            Ok(TransitionMap::affine(a, b, aq, bq)?)
        }
    }
}

fn submanifold_value(jet: &SubmanifoldJet, shorthand: bool) -> Value {
    if shorthand && jet.chart.m() == 4 && jet.chart.base_indices() == [0] {
        return serde_json::to_value(ThreeVelocity {
            three_velocity: [jet.yx[(0, 0)], jet.yx[(1, 0)], jet.yx[(2, 0)]],
        })
        .expect("shorthand serializes");
    }
    serde_json::to_value(jet).expect("jet serializes")
}

/// Envelope written by the transform subcommand.
pub fn run(args: &TransformArgs, payload_text: &str) -> Result<Value, CliError> {
    let payload = parse_payload(payload_text, args.op)?;
    let (input_value, output_value, residual) = match (&payload, args.op) {
        (JetPayload::Submanifold { jet, shorthand }, TransformOp::Submanifold) => {
            let (m, n) = (jet.chart.m(), jet.chart.n());
            let t = build_transition(args, m, n)?;
            let target = match &args.chart {
                Some(base) => SplitChart::new(m, base.clone())?,
                None => jet.chart.clone(),
            };
            let out = transform_submanifold_jet(jet, &t, &target)?;
            let residual = submanifold_transform_residual(jet, &t, &out)?;
            (
                submanifold_value(jet, *shorthand),
                submanifold_value(&out, *shorthand),
                Some(residual),
            )
        }
        (JetPayload::Section(jet), TransformOp::Section) => {
            let t = build_transition(args, jet.m(), jet.n())?;
            let out = transform_section_jet(jet, &t)?;
            (
                serde_json::to_value(jet).expect("jet serializes"),
                serde_json::to_value(&out).expect("jet serializes"),
                None,
            )
        }
        (JetPayload::Submanifold { jet, shorthand }, TransformOp::Lift) => {
            let n = jet.chart.n();
            let xq = match &args.xq {
                Some(text) => parse_matrix(text, n, n, "--xq")?,
                None => DMatrix::identity(n, n),
            };
            let out = lift(jet, &xq)?;
            let residual = lift_relation_residual(jet, &out);
            (
                submanifold_value(jet, *shorthand),
                serde_json::to_value(&out).expect("jet serializes"),
                Some(residual),
            )
        }
        (JetPayload::Section(jet), TransformOp::Project) => {
            let chart = match &args.chart {
                Some(base) => SplitChart::new(jet.m(), base.clone())?,
                None => SplitChart::leading(jet.m(), jet.n())?,
            };
            let out = project(jet, &chart)?;
            let residual = lift_relation_residual(&out, jet);
            let shorthand = jet.m() == 4 && jet.n() == 1 && chart.base_indices() == [0];
            (
                serde_json::to_value(jet).expect("jet serializes"),
                submanifold_value(&out, shorthand),
                Some(residual),
            )
        }
        _ => {
            return Err(CliError::usage(
                "payload kind does not match the requested op".into(),
            ));
        }
    };

    Ok(serde_json::json!({
        "input": input_value,
        "output": output_value,
        "relation_residual": residual,
    }))
}
