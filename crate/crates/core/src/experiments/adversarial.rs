use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, opt_real, real, Output, Plot, Series, Table};
use crate::adversarial::{
    adversarial_quadratic_selector, bias_growth_scan, estimate_quadratic_biases, BiasOracle, CoordEstimator, GrowthRow,
    MIN_PROFILE_REPS,
};
use crate::bayes::{bias_of_bounded_posterior, check_bias_bound, plug_in_bias_oracle, posterior_mean_gaussian, Prior, Shape};
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, summarize, McSummary, SETUP_STREAM};
use crate::numerics::normal_cdf;
use crate::sequence::{default_norm_m, least_favorable_sample, sample_wn, SeqObservation, SeqParam};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum AdversarialConfig {
    Linear(LinearAttackConfig),
    Quadratic(QuadraticAttackConfig),
    BiasBound(BiasBoundConfig),
}

impl AdversarialConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            AdversarialConfig::Linear(c) => c.attack.validate(),
            AdversarialConfig::Quadratic(c) => c.attack().validate(),
            AdversarialConfig::BiasBound(c) => {
                check_reps(c.reps, 2)?;
                if c.beta_over_a.iter().any(|r| !(0.0..=1.0).contains(r))
                    || c.a_over_sigma.iter().any(|r| !(*r > 0.0 && *r <= 1.0))
                {
                    return Err(Error::InvalidArgument("need beta/a in [0, 1] and a/sigma in (0, 1]".into()));
                }
                if c.beta_over_a.is_empty() || c.a_over_sigma.is_empty() || c.shapes.is_empty() {
                    return Err(Error::InvalidArgument("grids must be nonempty".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            AdversarialConfig::Linear(c) => c.run(),
            AdversarialConfig::Quadratic(c) => c.run(),
            AdversarialConfig::BiasBound(c) => c.run(),
        }
    }
}

/// Least-favorable β drawn once from the setup stream, attacked through the
/// iid Gaussian posterior mean with prior `N(0, τ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Attack {
    pub seed: u64,
    /// Replicates for the bias profile and for the evaluation.
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub alpha: f64,
    pub k: usize,
    /// Prior variance; `None` uses the mean of `β_i²`. The iid prior only
    /// shrinks the attacked tail by half or more while `n τ² < 1`.
    pub tau2: Option<f64>,
}

impl Default for Attack {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 1000, n: vec![1e3, 1e4, 1e5], alpha: 0.8, k: 30_000, tau2: Some(1e-6) }
    }
}

impl Attack {
    fn validate(&self) -> Result<()> {
        check_reps(self.reps, MIN_PROFILE_REPS)?;
        check_grid("n", &self.n)?;
        if !(self.alpha > 0.5) || self.k < 2 {
            return Err(Error::InvalidArgument("need alpha > 1/2 and k >= 2".into()));
        }
        if let Some(t) = self.tau2 {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument("tau2 must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> Result<SeqParam> {
        least_favorable_sample(self.alpha, self.k, &mut derive_stream(self.seed, SETUP_STREAM))
    }

    pub fn tau2(&self, beta: &SeqParam) -> f64 {
        self.tau2.unwrap_or_else(|| beta.beta.iter().map(|b| b * b).sum::<f64>() / beta.k() as f64)
    }
}

/// Adversarial linear functional against the Gaussian posterior mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct LinearAttackConfig {
    pub attack: Attack,
}

impl LinearAttackConfig {
    pub fn solve(&self) -> Result<Vec<GrowthRow>> {
        let beta = self.attack.beta()?;
        let tau2 = self.attack.tau2(&beta);
        let prior = Prior::IidGaussian { mu0: 0.0, tau2 };
        let bayes = move |o: &SeqObservation| -> Result<Vec<f64>> { Ok(posterior_mean_gaussian(o, &prior)?.beta_hat) };
        let identity = |o: &SeqObservation| -> Result<Vec<f64>> { Ok(o.x.clone()) };
        let b = beta.beta.clone();
        let bayes_oracle = move |g: &[f64], n: f64| plug_in_bias_oracle(g, &b, 0.0, tau2, 1.0 / n);
        let zero = |_: &[f64], _: f64| Ok(0.0);
        let evaluated: [(&str, &CoordEstimator, Option<&BiasOracle>); 2] =
            [("bayes-plug-in", &bayes, Some(&bayes_oracle)), ("linear", &identity, Some(&zero))];
        bias_growth_scan(&bayes, &evaluated, &beta, &self.attack.n, self.attack.reps, self.attack.seed)
    }

    pub fn run(&self) -> Result<Output> {
        let rows = self.solve()?;
        let mut table = Table::new(&[
            "n",
            "estimator",
            "scaled_bias",
            "scaled_bias_mc_se",
            "scaled_oracle",
            "root_n_rmse",
            "c",
            "selected",
        ]);
        let mut series: Vec<Series> = Vec::new();
        for r in &rows {
            table.push(vec![
                real(r.n),
                r.estimator.clone(),
                real(r.scaled_bias),
                real(r.scaled_bias_se),
                opt_real(r.scaled_oracle),
                real(r.root_n_rmse),
                real(r.c),
                r.selected.to_string(),
            ]);
            match series.iter_mut().find(|s| s.name == r.estimator) {
                Some(s) => s.points.push((r.n, r.scaled_bias)),
                None => series.push(Series { name: r.estimator.clone(), points: vec![(r.n, r.scaled_bias)] }),
            }
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Scaled bias of the adversarial functional".into(),
                x_label: "n".into(),
                y_label: "scaled bias".into(),
                log_x: true,
                log_y: false,
                series,
            }),
        })
    }
}

/// Adversarial quadratic functional `Σ c_i β_i²` against the squared Gaussian
/// posterior mean, compared with the unbiased `Σ c_i (X_i² − 1/n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticAttackConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub alpha: f64,
    pub k: usize,
    pub tau2: Option<f64>,
    /// Selects the η/3 rule of the selector instead of the majority sign.
    pub eta: Option<f64>,
}

impl Default for QuadraticAttackConfig {
    fn default() -> Self {
        let a = Attack::default();
        Self { seed: a.seed, reps: a.reps, n: a.n, alpha: a.alpha, k: 5000, tau2: None, eta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticRow {
    pub n: f64,
    pub m: usize,
    pub sign: f64,
    pub selected: usize,
    pub bayes: McSummary,
    pub unbiased: McSummary,
}

impl QuadraticAttackConfig {
    pub fn attack(&self) -> Attack {
        Attack { seed: self.seed, reps: self.reps, n: self.n.clone(), alpha: self.alpha, k: self.k, tau2: self.tau2 }
    }

    pub fn solve(&self) -> Result<Vec<QuadraticRow>> {
        let a = &self.attack();
        let beta = a.beta()?;
        let prior = Prior::IidGaussian { mu0: 0.0, tau2: a.tau2(&beta) };
        let squared = |o: &SeqObservation| -> Result<Vec<f64>> {
            Ok(posterior_mean_gaussian(o, &prior)?.beta_hat.iter().map(|b| b * b).collect())
        };
        let eval_seed = a.seed ^ 0x5bd1_e995_0000_0002;
        a.n.iter()
            .map(|&n| {
                let profile = estimate_quadratic_biases(&squared, &beta, n, a.reps, a.seed)?;
                let m = default_norm_m(n, a.alpha, beta.k());
                let sel = adversarial_quadratic_selector(&profile, a.alpha, m, self.eta)?;
                let c: Vec<f64> = sel.c.iter().map(|&v| v as f64).collect();
                let theta: f64 = c.iter().zip(&beta.beta).map(|(c, b)| c * b * b).sum();
                let per = map_reps(a.reps, |r| -> Result<(f64, f64)> {
                    let obs = sample_wn(&beta, n, &mut derive_stream(eval_seed, r as u64))?;
                    let sq = squared(&obs)?;
                    let s2 = obs.noise_var();
                    let bq: f64 = c.iter().zip(&sq).map(|(c, v)| c * v).sum();
                    let uq: f64 = c.iter().zip(&obs.x).map(|(c, x)| c * (x * x - s2)).sum();
                    Ok((bq, uq))
                });
                let per = per.into_iter().collect::<Result<Vec<_>>>()?;
                Ok(QuadraticRow {
                    n,
                    m,
                    sign: sel.sign,
                    selected: sel.c.iter().filter(|&&v| v == 1).count(),
                    bayes: summarize(&per.iter().map(|p| p.0).collect::<Vec<_>>(), theta, "bayes-plug-in")?,
                    unbiased: summarize(&per.iter().map(|p| p.1).collect::<Vec<_>>(), theta, "unbiased")?,
                })
            })
            .collect()
    }

    pub fn run(&self) -> Result<Output> {
        let rows = self.solve()?;
        let mut table = Table::new(&["n", "estimator", "bias", "mc_se", "rmse", "root_n_rmse", "sign", "selected", "m"]);
        for r in &rows {
            for s in [&r.bayes, &r.unbiased] {
                table.push(vec![
                    real(r.n),
                    s.estimator_id.clone(),
                    real(s.bias),
                    real(s.mc_se),
                    real(s.rmse),
                    real(r.n.sqrt() * s.rmse),
                    real(r.sign),
                    r.selected.to_string(),
                    r.m.to_string(),
                ]);
            }
        }
        Ok(Output { table, plot: None })
    }
}

/// Bias of bounded-prior posterior means: quadrature, Monte Carlo and the
/// lower bound `(1 − (a/σ)²)|β|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasBoundConfig {
    pub seed: u64,
    /// Monte Carlo draws per grid point.
    pub reps: usize,
    pub a: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub beta_over_a: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub a_over_sigma: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub shapes: Vec<Shape>,
}

impl Default for BiasBoundConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 200_000,
            a: 1.0,
            beta_over_a: (1..=9).map(|i| i as f64 / 10.0).collect(),
            a_over_sigma: vec![0.2, 0.5, 0.9],
            shapes: vec![Shape::Uniform, Shape::SymmetricTwoPoint],
        }
    }
}

/// Upper tail `P(Z > t)`.
fn upper(t: f64) -> f64 {
    normal_cdf(-t)
}

fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Closed-form posterior mean: truncated normal on `[-a, a]` for the uniform
/// prior, `a tanh(a x / σ²)` for the two-point prior.
pub fn posterior_mean_closed_form(x: f64, a: f64, sigma: f64, shape: Shape) -> f64 {
    match shape {
        Shape::SymmetricTwoPoint => a * (a * x / (sigma * sigma)).tanh(),
        Shape::Uniform => {
            // odd in x; evaluate with x <= 0 so both endpoints sit in the upper tail
            if x > 0.0 {
                return -posterior_mean_closed_form(-x, a, sigma, shape);
            }
            let lo = (-a - x) / sigma;
            let hi = (a - x) / sigma;
            let mass = upper(lo) - upper(hi);
            (x + sigma * (phi(lo) - phi(hi)) / mass).clamp(-a, a)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub shape: Shape,
    pub a_over_sigma: f64,
    pub beta_over_a: f64,
    pub bias_quadrature: f64,
    pub bias_mc: f64,
    pub bias_mc_se: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

impl BiasBoundConfig {
    pub fn solve(&self) -> Result<Vec<BoundRow>> {
        let mut rows = Vec::new();
        let mut point = 0u64;
        for &shape in &self.shapes {
            for &ras in &self.a_over_sigma {
                for &rba in &self.beta_over_a {
                    let (a, sigma) = (self.a, self.a / ras);
                    let beta = rba * a;
                    let check = check_bias_bound(beta, a, sigma, shape)?;
                    let quad = bias_of_bounded_posterior(beta, a, sigma, shape)?;
                    let stream = point << 32;
                    let draws = map_reps(self.reps, |r| {
                        let x = beta + sigma * derive_stream(self.seed, stream | r as u64).normal();
                        posterior_mean_closed_form(x, a, sigma, shape)
                    });
                    let mc = summarize(&draws, beta, "mc")?;
                    rows.push(BoundRow {
                        shape,
                        a_over_sigma: ras,
                        beta_over_a: rba,
                        bias_quadrature: quad,
                        bias_mc: mc.bias,
                        bias_mc_se: mc.mc_se,
                        bound: (1.0 - ras * ras) * beta.abs(),
                        margin: check.margin,
                        holds: check.holds,
                    });
                    point += 1;
                }
            }
        }
        Ok(rows)
    }

    pub fn run(&self) -> Result<Output> {
        let rows = self.solve()?;
        let mut table = Table::new(&[
            "shape",
            "a_over_sigma",
            "beta_over_a",
            "bias_quadrature",
            "bias_mc",
            "bias_mc_se",
            "bound",
            "margin",
            "holds",
        ]);
        for r in &rows {
            table.push(vec![
                match r.shape {
                    Shape::Uniform => "uniform".into(),
                    Shape::SymmetricTwoPoint => "symmetric-two-point".into(),
                },
                real(r.a_over_sigma),
                real(r.beta_over_a),
                real(r.bias_quadrature),
                real(r.bias_mc),
                real(r.bias_mc_se),
                real(r.bound),
                real(r.margin),
                r.holds.to_string(),
            ]);
        }
        Ok(Output { table, plot: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::posterior_mean_bounded;

    #[test]
    fn closed_form_matches_quadrature() {
        for &x in &[-7.0, -2.0, -0.3, 0.0, 0.4, 1.5, 6.0] {
            for &sigma in &[1.0, 2.0, 5.0] {
                for shape in [Shape::Uniform, Shape::SymmetricTwoPoint] {
                    let q = posterior_mean_bounded(x, 1.0, sigma, shape).unwrap();
                    let c = posterior_mean_closed_form(x, 1.0, sigma, shape);
                    assert!((q - c).abs() < 1e-9, "{x} {sigma} {shape:?}: {q} {c}");
                }
            }
        }
    }
}
