use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, opt_real, real, summary_cells, summary_table, Output, Plot, Series, Table};
use crate::diagnostics::SeriesKind;
use crate::error::{Error, Result};
use crate::harness::{derive_stream, SETUP_STREAM};
use crate::stopping::{
    matched_field_experiment, regime_bias_ratio, stopping_experiment, FieldDesign, StoppingExperiment, StoppingReport,
};

/// Attempts made when searching setup streams for a design with enough
/// drift-time correlation.
pub const MAX_DESIGN_ATTEMPTS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum StoppingConfig {
    Fields(FieldsConfig),
    Regime(RegimeConfig),
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            StoppingConfig::Fields(c) => {
                check_reps(c.reps, 2)?;
                if c.k < 2 {
                    return Err(Error::InvalidArgument("k must be at least 2".into()));
                }
                if !(c.t_min > 0.0 && c.t_max > c.t_min && c.beta_sd > 0.0) {
                    return Err(Error::InvalidArgument("need 0 < t_min < t_max and beta_sd > 0".into()));
                }
                if let Some(m) = c.min_abs_corr {
                    if !(0.0..1.0).contains(&m) {
                        return Err(Error::InvalidArgument("min_abs_corr must lie in [0, 1)".into()));
                    }
                }
                c.generator.spec(2).map(|_| ())
            }
            StoppingConfig::Regime(c) => {
                check_grid("n", &c.n)?;
                if !(c.alpha > 1.0 / 6.0 && c.alpha < 0.25) {
                    return Err(Error::InvalidArgument("alpha must lie in (1/6, 1/4)".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            StoppingConfig::Fields(c) => c.run(),
            StoppingConfig::Regime(c) => c.run(),
        }
    }
}

/// Drifts and stopping times from matched random fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsConfig {
    pub seed: u64,
    pub reps: usize,
    pub k: usize,
    pub generator: SeriesKind,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// When set, setup streams are tried in turn until the drifts and times
    /// have at least this absolute correlation.
    pub min_abs_corr: Option<f64>,
}

impl Default for FieldsConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 10_000,
            k: 400,
            generator: SeriesKind::RandomWalk,
            beta_mean: 0.5,
            beta_sd: 0.25,
            t_min: 5.0,
            t_max: 100.0,
            min_abs_corr: Some(0.3),
        }
    }
}

impl FieldsConfig {
    /// The design and the number of setup streams consumed to find it.
    pub fn design(&self) -> Result<(StoppingExperiment, u64)> {
        let d = FieldDesign {
            k: self.k,
            generator: self.generator,
            beta_mean: self.beta_mean,
            beta_sd: self.beta_sd,
            t_min: self.t_min,
            t_max: self.t_max,
        };
        for attempt in 0..MAX_DESIGN_ATTEMPTS {
            let exp = matched_field_experiment(&d, &mut derive_stream(self.seed, SETUP_STREAM - attempt))?;
            let corr = exp.beta_time_corr().unwrap_or(0.0);
            match self.min_abs_corr {
                Some(m) if corr.abs() < m => continue,
                _ => return Ok((exp, attempt + 1)),
            }
        }
        Err(Error::InvalidArgument(format!(
            "no design with |corr| >= {:?} in {MAX_DESIGN_ATTEMPTS} attempts",
            self.min_abs_corr
        )))
    }

    pub fn solve(&self) -> Result<(StoppingReport, u64)> {
        let (exp, attempts) = self.design()?;
        Ok((stopping_experiment(&exp, self.reps, self.seed)?, attempts))
    }

    pub fn run(&self) -> Result<Output> {
        let (rep, attempts) = self.solve()?;
        let mut table = summary_table(&["bias_oracle", "corr_beta_time", "design_attempts"]);
        let arms = [
            (&rep.random_mle, Some(0.0)),
            (&rep.random_bayes, rep.random_bias_oracle),
            (&rep.fixed_mle, Some(0.0)),
            (&rep.fixed_bayes, rep.fixed_bias_oracle),
        ];
        for (s, oracle) in arms {
            let mut cells = summary_cells(self.k as f64, s);
            cells.push(opt_real(oracle));
            cells.push(opt_real(rep.corr_beta_time));
            cells.push(attempts.to_string());
            table.push(cells);
        }
        Ok(Output { table, plot: None })
    }
}

/// Expected Bayes bias against the MLE sd in the vanishing-drift regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub seed: u64,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub alpha: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self { seed: default_seed(), n: vec![1e4, 1e6, 1e8], alpha: 0.2 }
    }
}

impl RegimeConfig {
    pub fn run(&self) -> Result<Output> {
        let mut table = Table::new(&["n", "alpha", "k", "bayes_bias", "mle_sd", "ratio"]);
        let mut pts = Vec::new();
        for &n in &self.n {
            let r = regime_bias_ratio(n, self.alpha)?;
            table.push(vec![real(n), real(r.alpha), r.k.to_string(), real(r.bayes_bias), real(r.mle_sd), real(r.ratio)]);
            pts.push((n, r.ratio));
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Bayes bias over MLE sd".into(),
                x_label: "n".into(),
                y_label: "|bias| / sd".into(),
                log_x: true,
                log_y: true,
                series: vec![Series { name: format!("alpha = {}", self.alpha), points: pts }],
            }),
        })
    }
}
