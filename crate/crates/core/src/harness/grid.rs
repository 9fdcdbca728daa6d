use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::exec::map_reps;
use super::rng::{derive_stream, RngStream};
use super::summary::{summarize_paired, McSummary};
use crate::error::{Error, Result};

pub type ParamMap = BTreeMap<String, f64>;

/// Declarative description of a model grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model_id: String,
    #[serde(default)]
    pub model_params: ParamMap,
    pub estimator_ids: Vec<String>,
    pub n_grid: Vec<f64>,
    pub n_reps: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 2 {
            return Err(Error::InvalidArgument(format!("n_reps must be at least 2, got {}", self.n_reps)));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument("n_grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid.iter().any(|n| !(*n > 0.0)) {
            return Err(Error::InvalidArgument("n_grid must be positive and strictly increasing".into()));
        }
        if self.estimator_ids.is_empty() {
            return Err(Error::InvalidArgument("no estimators listed".into()));
        }
        Ok(())
    }
}

/// A data-generating model at scale `n`. Draws carry their own truth so that
/// estimators can report it alongside the estimate.
pub trait Model<D>: Send + Sync {
    fn draw(&self, n: f64, rng: &mut RngStream) -> Result<D>;
}

impl<D, F> Model<D> for F
where
    F: Fn(f64, &mut RngStream) -> Result<D> + Send + Sync,
{
    fn draw(&self, n: f64, rng: &mut RngStream) -> Result<D> {
        self(n, rng)
    }
}

/// An estimate and the value of the estimand for the same replicate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub truth: f64,
}

/// Builds a model from parameters. The stream is reserved for fixed design
/// quantities (populations, fields) that stay constant across replicates.
pub type ModelBuilder<D> = Box<dyn Fn(&ParamMap, &mut RngStream) -> Result<Box<dyn Model<D>>> + Send + Sync>;
pub type EstimatorFn<D> = Box<dyn Fn(&D, f64) -> Result<Estimate> + Send + Sync>;

pub struct Registry<D> {
    models: BTreeMap<String, ModelBuilder<D>>,
    estimators: BTreeMap<String, EstimatorFn<D>>,
}

impl<D> Default for Registry<D> {
    fn default() -> Self {
        Self {
            models: BTreeMap::new(),
            estimators: BTreeMap::new(),
        }
    }
}

impl<D> Registry<D> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn model(
        mut self,
        id: &str,
        build: impl Fn(&ParamMap, &mut RngStream) -> Result<Box<dyn Model<D>>> + Send + Sync + 'static,
    ) -> Self {
        self.models.insert(id.to_string(), Box::new(build));
        self
    }

    pub fn estimator(mut self, id: &str, f: impl Fn(&D, f64) -> Result<Estimate> + Send + Sync + 'static) -> Self {
        self.estimators.insert(id.to_string(), Box::new(f));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub n: f64,
    pub summary: McSummary,
}

/// Stream id used for model construction; replicates use ids `0..n_reps`.
pub const SETUP_STREAM: u64 = u64::MAX;

/// Run every estimator on every `n` of the grid.
///
/// Replicate `r` draws from `derive_stream(seed, r)` at every `n`, so the grid
/// uses common random numbers across scales. Rows are ordered by `n`, then by
/// the order of `estimator_ids`.
pub fn run_grid<D: Send>(spec: &ExperimentSpec, registry: &Registry<D>) -> Result<Vec<GridRow>> {
    spec.validate()?;
    let build = registry
        .models
        .get(&spec.model_id)
        .ok_or_else(|| Error::UnknownId(spec.model_id.clone()))?;
    let estimators = spec
        .estimator_ids
        .iter()
        .map(|id| registry.estimators.get(id).ok_or_else(|| Error::UnknownId(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let model = build(&spec.model_params, &mut derive_stream(spec.seed, SETUP_STREAM))?;

    let mut rows = Vec::with_capacity(spec.n_grid.len() * estimators.len());
    for &n in &spec.n_grid {
        let per_rep = map_reps(spec.n_reps, |r| -> Result<Vec<Estimate>> {
            let mut rng = derive_stream(spec.seed, r as u64);
            let data = model.draw(n, &mut rng)?;
            estimators.iter().map(|e| e(&data, n)).collect()
        });
        let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
        for (j, id) in spec.estimator_ids.iter().enumerate() {
            let values: Vec<f64> = per_rep.iter().map(|v| v[j].value).collect();
            let truths: Vec<f64> = per_rep.iter().map(|v| v[j].truth).collect();
            rows.push(GridRow {
                n,
                summary: summarize_paired(&values, &truths, id)?,
            });
        }
    }
    Ok(rows)
}
