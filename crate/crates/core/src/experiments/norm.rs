use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, real, summary_cells, summary_table, Output, Plot, Series, Table};
use crate::bayes::posterior_quadratic_conjugate;
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, summarize, McSummary, SETUP_STREAM};
use crate::numerics::Neumaier;
use crate::sequence::{default_norm_m, least_favorable_sample, sample_wn, unbiased_norm, unbiased_weighted_quadratic};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum NormConfig {
    Quadratic(QuadraticConfig),
    NormRate(NormRateConfig),
}

impl NormConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            NormConfig::Quadratic(c) => {
                check_reps(c.reps, 2)?;
                if c.k == 0 || !(c.sigma2 > 0.0 && c.tau2 >= 0.0) {
                    return Err(Error::InvalidArgument("need k >= 1, sigma2 > 0 and tau2 >= 0".into()));
                }
                if matches!(c.truth_var, Some(v) if !(v >= 0.0)) {
                    return Err(Error::InvalidArgument("truth_var must be nonnegative".into()));
                }
                if matches!(c.weight_range, Some([lo, hi]) if !(lo >= 0.0 && hi >= lo)) {
                    return Err(Error::InvalidArgument("weight_range must satisfy 0 <= lo <= hi".into()));
                }
                Ok(())
            }
            NormConfig::NormRate(c) => {
                check_reps(c.reps, 2)?;
                check_grid("n", &c.n)?;
                if !(c.alpha > 0.5) || c.k == 0 {
                    return Err(Error::InvalidArgument("need alpha > 1/2 and k >= 1".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            NormConfig::Quadratic(c) => c.run(),
            NormConfig::NormRate(c) => c.run(),
        }
    }
}

/// `θ = Σ g_i μ_i²` estimated without bias and by the conjugate posterior
/// under the prior `μ_i ~ N(0, τ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticConfig {
    pub seed: u64,
    pub reps: usize,
    pub k: usize,
    pub sigma2: f64,
    /// Prior variance used by the Bayes estimator.
    pub tau2: f64,
    /// Variance of the fixed truth `μ_i ~ N(0, truth_var)`; the prior
    /// variance when absent.
    pub truth_var: Option<f64>,
    /// `g_i ~ U[lo, hi]` from the setup stream; all ones when absent.
    pub weight_range: Option<[f64; 2]>,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 10_000,
            k: 10_000,
            sigma2: 1.0,
            tau2: 0.1,
            truth_var: Some(0.5),
            weight_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticReport {
    pub theta: f64,
    pub unbiased: McSummary,
    pub bayes: McSummary,
    /// Exact variance of the unbiased estimator.
    pub unbiased_var: f64,
}

impl QuadraticConfig {
    /// Fixed truth and weights.
    pub fn design(&self) -> (Vec<f64>, Vec<f64>) {
        let mut rng = derive_stream(self.seed, SETUP_STREAM);
        let sd = self.truth_var.unwrap_or(self.tau2).sqrt();
        let mu: Vec<f64> = (0..self.k).map(|_| sd * rng.normal()).collect();
        let g = match self.weight_range {
            None => vec![1.0; self.k],
            Some([lo, hi]) => (0..self.k).map(|_| lo + (hi - lo) * rng.uniform()).collect(),
        };
        (mu, g)
    }

    pub fn solve(&self) -> Result<QuadraticReport> {
        let (mu, g) = self.design();
        let theta = g.iter().zip(&mu).map(|(g, m)| g * m * m).collect::<Neumaier>().value();
        let (_, var) = unbiased_weighted_quadratic(&mu, &g, self.sigma2, Some(&mu))?;
        let s = self.sigma2.sqrt();
        let per = map_reps(self.reps, |r| -> Result<(f64, f64)> {
            let mut rng = derive_stream(self.seed, r as u64);
            let y: Vec<f64> = mu.iter().map(|m| m + s * rng.normal()).collect();
            Ok((
                unbiased_weighted_quadratic(&y, &g, self.sigma2, None)?.0,
                posterior_quadratic_conjugate(&y, &g, self.tau2, self.sigma2)?,
            ))
        });
        let per = per.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(QuadraticReport {
            theta,
            unbiased: summarize(&per.iter().map(|p| p.0).collect::<Vec<_>>(), theta, "unbiased")?,
            bayes: summarize(&per.iter().map(|p| p.1).collect::<Vec<_>>(), theta, "bayes-conjugate")?,
            unbiased_var: var.unwrap_or(f64::NAN),
        })
    }

    pub fn run(&self) -> Result<Output> {
        let rep = self.solve()?;
        let mut table = summary_table(&["theta", "relative_bias", "cv", "exact_variance"]);
        for (s, exact) in [(&rep.unbiased, real(rep.unbiased_var)), (&rep.bayes, String::new())] {
            let mut cells = summary_cells(self.k as f64, s);
            cells.extend([real(rep.theta), real(s.bias / rep.theta), real(s.variance.sqrt() / rep.theta), exact]);
            table.push(cells);
        }
        Ok(Output { table, plot: None })
    }
}

/// Unbiased norm estimator on least-favorable β over a grid of n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormRateConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub alpha: f64,
    pub k: usize,
}

impl Default for NormRateConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 2000, n: vec![1e2, 1e3, 1e4, 1e5], alpha: 0.875, k: 20_000 }
    }
}

impl NormRateConfig {
    pub fn run(&self) -> Result<Output> {
        let beta = least_favorable_sample(self.alpha, self.k, &mut derive_stream(self.seed, SETUP_STREAM))?;
        let norm2 = beta.beta.iter().map(|b| b * b).collect::<Neumaier>().value();
        let mut table = Table::new(&["n", "m", "bias", "mc_se", "rmse", "root_n_rmse", "efficient_root_n_sd"]);
        let mut pts = Vec::new();
        for (ni, &n) in self.n.iter().enumerate() {
            let m = default_norm_m(n, self.alpha, self.k);
            let per = map_reps(self.reps, |r| -> Result<f64> {
                let obs = sample_wn(&beta, n, &mut derive_stream(self.seed, ((ni as u64) << 32) | r as u64))?;
                unbiased_norm(&obs, m)
            });
            let s = summarize(&per.into_iter().collect::<Result<Vec<_>>>()?, norm2, "unbiased-norm")?;
            table.push(vec![
                real(n),
                m.to_string(),
                real(s.bias),
                real(s.mc_se),
                real(s.rmse),
                real(n.sqrt() * s.rmse),
                real(2.0 * norm2.sqrt()),
            ]);
            pts.push((n, n.sqrt() * s.rmse));
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Unbiased norm estimator".into(),
                x_label: "n".into(),
                y_label: "sqrt(n) rmse".into(),
                log_x: true,
                log_y: false,
                series: vec![Series { name: "unbiased-norm".into(), points: pts }],
            }),
        })
    }
}
