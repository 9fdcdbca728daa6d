use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, real, summary_cells, summary_table, Output, Plot, Series, Table};
use crate::bayes::{plug_in, plug_in_bias_oracle, posterior_mean_gaussian, Prior};
use crate::diagnostics::{cross_corr, matched_field_pair, standardize, SeriesKind};
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, rate_slope, summarize, McSummary, SETUP_STREAM};
use crate::numerics::{power_tail_sum, Neumaier};
use crate::sequence::{
    least_favorable_sample, linear_estimate, sample_wn, truncation_cutoff, truncation_estimate,
    truncation_risk_least_favorable, LinearFunctional, SeqParam,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum WnLinearConfig {
    MinimaxRate(MinimaxRateConfig),
    PlugIn(PlugInConfig),
}

impl WnLinearConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            WnLinearConfig::MinimaxRate(c) => {
                check_reps(c.reps, 2)?;
                check_grid("n", &c.n)?;
                if c.alpha.is_empty() || c.alpha.iter().any(|a| !(*a > 0.5)) {
                    return Err(Error::InvalidArgument("every alpha must exceed 1/2".into()));
                }
                if c.tail_factor < 1 {
                    return Err(Error::InvalidArgument("tail_factor must be at least 1".into()));
                }
                Ok(())
            }
            WnLinearConfig::PlugIn(c) => {
                check_reps(c.reps, 2)?;
                if c.k < 2 || !(c.sigma2 > 0.0 && c.beta_sd > 0.0) {
                    return Err(Error::InvalidArgument("need k >= 2, sigma2 > 0 and beta_sd > 0".into()));
                }
                if let Some(m) = c.min_abs_corr {
                    if !(0.0..1.0).contains(&m) {
                        return Err(Error::InvalidArgument("min_abs_corr must lie in [0, 1)".into()));
                    }
                }
                c.generator.spec(2).map(|_| ())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            WnLinearConfig::MinimaxRate(c) => c.run(),
            WnLinearConfig::PlugIn(c) => c.run(),
        }
    }
}

/// Truncation risk and linear-functional error on sign-randomized
/// least-favorable β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxRateConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    /// Coordinates simulated as a multiple of the truncation cutoff; the
    /// remaining tail enters through its exact sum.
    pub tail_factor: usize,
}

impl Default for MinimaxRateConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 200, n: vec![1e2, 1e3, 1e4, 1e5], alpha: vec![0.75, 1.0], tail_factor: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub alpha: f64,
    pub n: f64,
    pub k: usize,
    pub risk: f64,
    pub risk_se: f64,
    pub exact_risk: f64,
    pub linear_root_n_rmse: f64,
}

pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// `(alpha, fitted slope of risk on n, predicted slope)`.
    pub slopes: Vec<(f64, f64, f64)>,
}

/// `g_i ∝ 1/i` with unit norm.
fn harmonic_functional(k: usize) -> LinearFunctional {
    let g: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    LinearFunctional::new(g.into_iter().map(|v| v / norm).collect())
}

impl MinimaxRateConfig {
    pub fn solve(&self) -> Result<RateReport> {
        let mut rows = Vec::new();
        let mut slopes = Vec::new();
        for (ai, &alpha) in self.alpha.iter().enumerate() {
            let mut pts = Vec::new();
            for (ni, &n) in self.n.iter().enumerate() {
                let k = self.tail_factor * truncation_cutoff(n, alpha).max(1);
                let tail = power_tail_sum(2.0 * alpha, k);
                let g = harmonic_functional(k);
                let stream = ((ai as u64) << 40) | ((ni as u64) << 32);
                let per = map_reps(self.reps, |r| -> Result<(f64, f64, f64)> {
                    let mut rng = derive_stream(self.seed, stream | r as u64);
                    let beta = least_favorable_sample(alpha, k, &mut rng)?;
                    let obs = sample_wn(&beta, n, &mut rng)?;
                    let est = truncation_estimate(&obs, alpha)?;
                    let loss: Neumaier = est.beta.iter().zip(&beta.beta).map(|(e, b)| (e - b) * (e - b)).collect();
                    Ok((loss.value() + tail, linear_estimate(&g, &obs)?, g.apply(&beta.beta)?))
                });
                let per = per.into_iter().collect::<Result<Vec<_>>>()?;
                let loss = summarize(&per.iter().map(|p| p.0).collect::<Vec<_>>(), 0.0, "truncation")?;
                let lin: Vec<f64> = per.iter().map(|p| p.1).collect();
                let truth: Vec<f64> = per.iter().map(|p| p.2).collect();
                let lin = crate::harness::summarize_paired(&lin, &truth, "linear")?;
                pts.push((n, loss.mean));
                rows.push(RateRow {
                    alpha,
                    n,
                    k,
                    risk: loss.mean,
                    risk_se: loss.mc_se,
                    exact_risk: truncation_risk_least_favorable(n, alpha),
                    linear_root_n_rmse: n.sqrt() * lin.rmse,
                });
            }
            let fitted = if pts.len() >= 3 { rate_slope(&pts)? } else { f64::NAN };
            slopes.push((alpha, fitted, -(2.0 * alpha - 1.0) / (2.0 * alpha)));
        }
        Ok(RateReport { rows, slopes })
    }

    pub fn run(&self) -> Result<Output> {
        let rep = self.solve()?;
        let mut table = Table::new(&[
            "alpha",
            "n",
            "k",
            "risk",
            "risk_mc_se",
            "exact_risk",
            "risk_slope",
            "predicted_slope",
            "linear_root_n_rmse",
        ]);
        let mut series = Vec::new();
        for &(alpha, fitted, predicted) in &rep.slopes {
            let mine: Vec<&RateRow> = rep.rows.iter().filter(|r| r.alpha == alpha).collect();
            for r in &mine {
                table.push(vec![
                    real(alpha),
                    real(r.n),
                    r.k.to_string(),
                    real(r.risk),
                    real(r.risk_se),
                    real(r.exact_risk),
                    real(fitted),
                    real(predicted),
                    real(r.linear_root_n_rmse),
                ]);
            }
            series.push(Series { name: format!("alpha = {alpha}"), points: mine.iter().map(|r| (r.n, r.risk)).collect() });
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Truncation estimator risk".into(),
                x_label: "n".into(),
                y_label: "risk".into(),
                log_x: true,
                log_y: true,
                series,
            }),
        })
    }
}

/// Plug-in Gaussian posterior mean against the unbiased linear estimator on
/// a design where β and the functional g come from matched random fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlugInConfig {
    pub seed: u64,
    pub reps: usize,
    pub k: usize,
    /// Per-coordinate noise variance.
    pub sigma2: f64,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub generator: SeriesKind,
    /// When set, setup streams are tried in turn until `corr(g, β)` reaches
    /// this magnitude.
    pub min_abs_corr: Option<f64>,
}

impl Default for PlugInConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 1000,
            k: 100_000,
            sigma2: 169.0,
            beta_mean: 100.0,
            beta_sd: 10.0,
            generator: SeriesKind::RandomWalk,
            min_abs_corr: Some(0.2),
        }
    }
}

pub const MAX_DESIGN_ATTEMPTS: u64 = 1000;

pub struct PlugInDesign {
    pub beta: SeqParam,
    pub g: LinearFunctional,
    pub mu0: f64,
    pub tau2: f64,
    pub corr: f64,
    pub attempts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlugInReport {
    pub linear: McSummary,
    pub plug_in: McSummary,
    pub plug_in_bias_oracle: f64,
    pub mle_l2_mse: f64,
    pub bayes_l2_mse: f64,
    pub corr: f64,
    pub attempts: u64,
}

impl PlugInConfig {
    /// β = mean + sd · standardize(u), g maps v affinely onto [0, 1]; the prior
    /// is N(mean(β), var(β)) on every coordinate.
    pub fn design(&self) -> Result<PlugInDesign> {
        let spec = self.generator.spec(self.k)?;
        for attempt in 0..MAX_DESIGN_ATTEMPTS {
            let (u, v) = matched_field_pair(&spec, &mut derive_stream(self.seed, SETUP_STREAM - attempt))?;
            let beta: Vec<f64> = standardize(&u).iter().map(|z| self.beta_mean + self.beta_sd * z).collect();
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            if !(hi > lo) {
                return Err(Error::ZeroVariance);
            }
            let g: Vec<f64> = v.iter().map(|x| (x - lo) / (hi - lo)).collect();
            let corr = cross_corr(&beta, &g)?;
            if matches!(self.min_abs_corr, Some(m) if corr.abs() < m) {
                continue;
            }
            let kf = self.k as f64;
            let mu0 = beta.iter().copied().collect::<Neumaier>().value() / kf;
            let tau2 = beta.iter().map(|b| (b - mu0) * (b - mu0)).collect::<Neumaier>().value() / kf;
            return Ok(PlugInDesign {
                beta: SeqParam { beta, alpha: f64::NAN, in_b_alpha: false },
                g: LinearFunctional::new(g),
                mu0,
                tau2,
                corr,
                attempts: attempt + 1,
            });
        }
        Err(Error::InvalidArgument(format!(
            "no design with |corr| >= {:?} in {MAX_DESIGN_ATTEMPTS} attempts",
            self.min_abs_corr
        )))
    }

    pub fn solve(&self) -> Result<PlugInReport> {
        let d = self.design()?;
        let n = 1.0 / self.sigma2;
        let prior = Prior::IidGaussian { mu0: d.mu0, tau2: d.tau2 };
        let theta = d.g.apply(&d.beta.beta)?;
        let per = map_reps(self.reps, |r| -> Result<[f64; 4]> {
            let obs = sample_wn(&d.beta, n, &mut derive_stream(self.seed, r as u64))?;
            let post = posterior_mean_gaussian(&obs, &prior)?;
            let sse = |est: &[f64]| -> f64 {
                est.iter().zip(&d.beta.beta).map(|(e, b)| (e - b) * (e - b)).collect::<Neumaier>().value()
            };
            Ok([linear_estimate(&d.g, &obs)?, plug_in(&d.g, &post)?, sse(&obs.x), sse(&post.beta_hat)])
        });
        let per = per.into_iter().collect::<Result<Vec<_>>>()?;
        let col = |j: usize| per.iter().map(|p| p[j]).collect::<Vec<_>>();
        let mean = |v: Vec<f64>| v.iter().copied().collect::<Neumaier>().value() / v.len() as f64;
        Ok(PlugInReport {
            linear: summarize(&col(0), theta, "linear")?,
            plug_in: summarize(&col(1), theta, "bayes-plug-in")?,
            plug_in_bias_oracle: plug_in_bias_oracle(&d.g.g, &d.beta.beta, d.mu0, d.tau2, self.sigma2)?,
            mle_l2_mse: mean(col(2)),
            bayes_l2_mse: mean(col(3)),
            corr: d.corr,
            attempts: d.attempts,
        })
    }

    pub fn run(&self) -> Result<Output> {
        let rep = self.solve()?;
        let mut table = summary_table(&["bias_oracle", "l2_mse", "corr_g_beta", "design_attempts"]);
        for (s, oracle, mse) in
            [(&rep.linear, 0.0, rep.mle_l2_mse), (&rep.plug_in, rep.plug_in_bias_oracle, rep.bayes_l2_mse)]
        {
            let mut cells = summary_cells(1.0 / self.sigma2, s);
            cells.extend([real(oracle), real(mse), real(rep.corr), rep.attempts.to_string()]);
            table.push(cells);
        }
        Ok(Output { table, plot: None })
    }
}
