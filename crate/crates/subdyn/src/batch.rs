//! Batch evaluation of per-sample residuals. The campaigns are embarrassingly
//! data-parallel, so with the `parallel` feature (default) the map runs on
//! rayon; without it the same code path degrades to a sequential iterator.
//! Outputs are collected in input order either way, which keeps reports
//! byte-identical across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One sample's residual magnitude and the local scale it is judged against.
/// Evaluation failures are encoded as an infinite residual so they can never
/// silently pass.
#[derive(Clone, Copy, Debug)]
pub struct Outcome {
    pub residual: f64,
    pub scale: f64,
}

impl Outcome {
    pub fn failed() -> Self {
        Self {
            residual: f64::INFINITY,
            scale: 1.0,
        }
    }

    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }

    pub fn is_failure(&self) -> bool {
        !self.residual.is_finite()
    }
}

/// Sequential map, always available.
pub fn map_outcomes_seq<T, F>(items: &[T], f: F) -> Vec<Outcome>
where
    F: Fn(&T) -> Outcome,
{
    items.iter().map(f).collect()
}

/// Data-parallel map over rayon's worker pool.
#[cfg(feature = "parallel")]
pub fn map_outcomes_par<T, F>(items: &[T], f: F) -> Vec<Outcome>
where
    T: Sync,
    F: Fn(&T) -> Outcome + Send + Sync,
{
    items.par_iter().map(f).collect()
}

/// Feature-dispatched map: parallel when built with `parallel`, sequential
/// otherwise.
pub fn map_outcomes<T, F>(items: &[T], f: F) -> Vec<Outcome>
where
    T: Sync,
    F: Fn(&T) -> Outcome + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        map_outcomes_par(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_outcomes_seq(items, f)
    }
}

/// The sample with the largest relative residual.
#[derive(Clone, Copy, Debug)]
pub struct Worst {
    pub index: usize,
    pub residual: f64,
    pub scale: f64,
}

pub fn worst_relative(outcomes: &[Outcome]) -> Option<Worst> {
    let mut best: Option<Worst> = None;
    for (index, o) in outcomes.iter().enumerate() {
        let better = match &best {
            None => true,
            Some(w) => o.relative() > w.residual / w.scale,
        };
        if better {
            best = Some(Worst {
                index,
                residual: o.residual,
                scale: o.scale,
            });
        }
    }
    best
}

/// Fraction of samples whose residual exceeds `floor` × their scale.
pub fn fraction_exceeding(outcomes: &[Outcome], floor: f64) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    let hits = outcomes
        .iter()
        .filter(|o| o.residual > floor * o.scale)
        .count();
    hits as f64 / outcomes.len() as f64
}
