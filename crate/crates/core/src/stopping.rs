//! Drifted Brownian coordinates `X_i(t) = β_i t + W_i(t)` observed until
//! coordinate-specific times `T_i`. Times are fixed by an auxiliary field,
//! never by the observed path, so only the endpoints `X_i(T_i) ~ N(β_i T_i, T_i)`
//! are simulated.

use serde::{Deserialize, Serialize};

use crate::bayes::{tweedie_mean, tweedie_prior_weight, CoordinatePrior};
use crate::diagnostics::{cross_corr, matched_field_pair, standardize, SeriesKind};
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, summarize, McSummary, RngStream};
use crate::numerics::{gh101, normal_expectation, Neumaier};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub n: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingExperiment {
    pub beta: Vec<f64>,
    pub times: Vec<f64>,
    pub priors: Vec<CoordinatePrior>,
    pub regime: Option<Regime>,
}

impl StoppingExperiment {
    /// A single prior is broadcast to every coordinate.
    pub fn new(beta: Vec<f64>, times: Vec<f64>, priors: Vec<CoordinatePrior>) -> Result<Self> {
        if times.len() != beta.len() {
            return Err(Error::LengthMismatch { expected: beta.len(), got: times.len() });
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument(format!("stopping times must be positive, got {t}")));
        }
        let priors = match priors.len() {
            1 => vec![priors[0]; beta.len()],
            l if l == beta.len() => priors,
            l => return Err(Error::LengthMismatch { expected: beta.len(), got: l }),
        };
        Ok(Self { beta, times, priors, regime: None })
    }

    /// `k = ⌊n^{2α}⌋` drifts spread evenly over `(n^{-2α}, 3n^{-2α})` under a
    /// uniform prior on that interval, with `T_i = n (1/2 + u_i)` increasing in
    /// the drift's relative position `u_i ∈ (0, 1)`.
    pub fn regime(n: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 / 6.0 && alpha < 0.25) {
            return Err(Error::InvalidArgument(format!("regime needs 1/6 < alpha < 1/4, got {alpha}")));
        }
        if !(n >= 2.0) {
            return Err(Error::InvalidArgument(format!("regime needs n >= 2, got {n}")));
        }
        let k = n.powf(2.0 * alpha).floor() as usize;
        let lo = n.powf(-2.0 * alpha);
        let u: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
        let beta = u.iter().map(|u| lo + 2.0 * lo * u).collect();
        let times = u.iter().map(|u| n * (0.5 + u)).collect();
        let mut exp = Self::new(beta, times, vec![CoordinatePrior::Uniform { lo, hi: 3.0 * lo }])?;
        exp.regime = Some(Regime { n, alpha });
        Ok(exp)
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn truth(&self) -> f64 {
        self.beta.iter().copied().collect::<Neumaier>().value()
    }

    /// Same drifts and priors, every time replaced by the mean time.
    pub fn fixed_time_arm(&self) -> Self {
        let m = self.times.iter().sum::<f64>() / self.k() as f64;
        Self { times: vec![m; self.k()], ..self.clone() }
    }

    /// Correlation between drifts and times; `None` when either is constant.
    pub fn beta_time_corr(&self) -> Option<f64> {
        cross_corr(&self.beta, &self.times).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequentialDraw {
    pub endpoints: Vec<f64>,
    pub times: Vec<f64>,
}

impl SequentialDraw {
    pub fn xbar(&self) -> impl Iterator<Item = f64> + '_ {
        self.endpoints.iter().zip(&self.times).map(|(x, t)| x / t)
    }
}

pub fn sample_sequential(exp: &StoppingExperiment, rng: &mut RngStream) -> SequentialDraw {
    let endpoints = exp.beta.iter().zip(&exp.times).map(|(b, t)| b * t + t.sqrt() * rng.normal()).collect();
    SequentialDraw { endpoints, times: exp.times.clone() }
}

pub fn sample_sequential_noiseless(exp: &StoppingExperiment) -> SequentialDraw {
    let endpoints = exp.beta.iter().zip(&exp.times).map(|(b, t)| b * t).collect();
    SequentialDraw { endpoints, times: exp.times.clone() }
}

/// `Σ X_i(T_i) / T_i`.
pub fn mle_sum(draw: &SequentialDraw) -> f64 {
    draw.xbar().collect::<Neumaier>().value()
}

/// Sum of coordinatewise posterior means.
pub fn bayes_sum(draw: &SequentialDraw, priors: &[CoordinatePrior]) -> Result<f64> {
    let k = draw.times.len();
    if priors.len() != k && priors.len() != 1 {
        return Err(Error::LengthMismatch { expected: k, got: priors.len() });
    }
    let mut acc = Neumaier::default();
    for (i, (xb, &t)) in draw.xbar().zip(&draw.times).enumerate() {
        acc.add(tweedie_mean(xb, t, &priors[if priors.len() == 1 { 0 } else { i }])?);
    }
    Ok(acc.value())
}

/// `Σ w_i (μ₀ − β_i)` with `w_i = (1/T_i)/(v + 1/T_i)`; Gaussian priors only.
pub fn gaussian_bias_oracle(exp: &StoppingExperiment) -> Result<f64> {
    let mut acc = Neumaier::default();
    for ((b, &t), p) in exp.beta.iter().zip(&exp.times).zip(&exp.priors) {
        match *p {
            CoordinatePrior::Gaussian { mean, var } => acc.add(tweedie_prior_weight(t, var) * (mean - b)),
            CoordinatePrior::Flat => {}
            _ => return Err(Error::InvalidArgument("bias oracle needs Gaussian or flat priors".into())),
        }
    }
    Ok(acc.value())
}

/// Exact expected bias of `bayes_sum` for any prior, by Gauss-Hermite.
pub fn expected_bayes_bias(exp: &StoppingExperiment) -> Result<f64> {
    let mut acc = Neumaier::default();
    for ((&b, &t), p) in exp.beta.iter().zip(&exp.times).zip(&exp.priors) {
        let mut err = None;
        let m = normal_expectation(gh101(), b, 1.0 / t.sqrt(), |x| {
            tweedie_mean(x, t, p).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        });
        if let Some(e) = err {
            return Err(e);
        }
        acc.add(m - b);
    }
    Ok(acc.value())
}

/// Standard deviation of `mle_sum`, `(Σ 1/T_i)^{1/2}`.
pub fn mle_sd(exp: &StoppingExperiment) -> f64 {
    exp.times.iter().map(|t| 1.0 / t).collect::<Neumaier>().value().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeRow {
    pub n: f64,
    pub alpha: f64,
    pub k: usize,
    pub bayes_bias: f64,
    pub mle_sd: f64,
    pub ratio: f64,
}

pub fn regime_bias_ratio(n: f64, alpha: f64) -> Result<RegimeRow> {
    let exp = StoppingExperiment::regime(n, alpha)?;
    let bias = expected_bayes_bias(&exp)?;
    let sd = mle_sd(&exp);
    Ok(RegimeRow { n, alpha, k: exp.k(), bayes_bias: bias, mle_sd: sd, ratio: bias.abs() / sd })
}

/// Drifts and times built from two independent draws of one series law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDesign {
    pub k: usize,
    pub generator: SeriesKind,
    pub beta_mean: f64,
    pub beta_sd: f64,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_t_min() -> f64 {
    5.0
}

fn default_t_max() -> f64 {
    100.0
}

/// `β = mean + sd · standardize(u)`, `T` maps `v` affinely onto `[t_min, t_max]`,
/// prior `N(mean(β), var(β))` on every coordinate.
pub fn matched_field_experiment(design: &FieldDesign, rng: &mut RngStream) -> Result<StoppingExperiment> {
    if !(design.t_min > 0.0 && design.t_max > design.t_min) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t_min < t_max, got [{}, {}]",
            design.t_min, design.t_max
        )));
    }
    if !(design.beta_sd > 0.0) {
        return Err(Error::InvalidArgument(format!("beta_sd must be positive, got {}", design.beta_sd)));
    }
    let (u, v) = matched_field_pair(&design.generator.spec(design.k)?, rng)?;
    let beta: Vec<f64> = standardize(&u).iter().map(|z| design.beta_mean + design.beta_sd * z).collect();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        return Err(Error::ZeroVariance);
    }
    let times = v.iter().map(|x| design.t_min + (design.t_max - design.t_min) * (x - lo) / (hi - lo)).collect();
    let prior = CoordinatePrior::Gaussian { mean: design.beta_mean, var: design.beta_sd * design.beta_sd };
    StoppingExperiment::new(beta, times, vec![prior])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StoppingReport {
    pub random_mle: McSummary,
    pub random_bayes: McSummary,
    pub fixed_mle: McSummary,
    pub fixed_bayes: McSummary,
    pub corr_beta_time: Option<f64>,
    pub random_bias_oracle: Option<f64>,
    pub fixed_bias_oracle: Option<f64>,
}

/// MLE and Bayes sums under the given times and under their mean, `reps`
/// replicates each; replicate `r` uses stream `r` for both arms.
pub fn stopping_experiment(exp: &StoppingExperiment, reps: usize, seed: u64) -> Result<StoppingReport> {
    if reps == 0 {
        return Err(Error::NoReplicates);
    }
    let fixed = exp.fixed_time_arm();
    let rows = map_reps(reps, |r| -> Result<[f64; 4]> {
        let mut rng = derive_stream(seed, r as u64);
        let d = sample_sequential(exp, &mut rng);
        let f = sample_sequential(&fixed, &mut rng);
        Ok([mle_sum(&d), bayes_sum(&d, &exp.priors)?, mle_sum(&f), bayes_sum(&f, &fixed.priors)?])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let truth = exp.truth();
    let col = |j: usize, id: &str| summarize(&rows.iter().map(|r| r[j]).collect::<Vec<_>>(), truth, id);
    Ok(StoppingReport {
        random_mle: col(0, "mle-random-t")?,
        random_bayes: col(1, "bayes-random-t")?,
        fixed_mle: col(2, "mle-fixed-t")?,
        fixed_bayes: col(3, "bayes-fixed-t")?,
        corr_beta_time: exp.beta_time_corr(),
        random_bias_oracle: gaussian_bias_oracle(exp).ok(),
        fixed_bias_oracle: gaussian_bias_oracle(&fixed).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design(generator: SeriesKind) -> FieldDesign {
        FieldDesign { k: 400, generator, beta_mean: 0.5, beta_sd: 0.25, t_min: 5.0, t_max: 100.0 }
    }

    #[test]
    fn noiseless_endpoints() {
        let exp = StoppingExperiment::new(vec![0.5, -1.0], vec![2.0, 4.0], vec![CoordinatePrior::Flat]).unwrap();
        let d = sample_sequential_noiseless(&exp);
        assert_eq!(d.endpoints, vec![1.0, -4.0]);
        assert_eq!(mle_sum(&d), -0.5);
        assert_eq!(bayes_sum(&d, &exp.priors).unwrap(), mle_sum(&d));
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(StoppingExperiment::new(vec![0.0], vec![0.0], vec![CoordinatePrior::Flat]).is_err());
        assert!(StoppingExperiment::new(vec![0.0], vec![1.0, 2.0], vec![CoordinatePrior::Flat]).is_err());
    }

    #[test]
    fn half_shrinkage() {
        let t = vec![2.0, 5.0, 10.0];
        let priors = t.iter().map(|t| CoordinatePrior::Gaussian { mean: 0.0, var: 1.0 / t }).collect();
        let exp = StoppingExperiment::new(vec![0.3, 0.1, -0.2], t, priors).unwrap();
        let d = sample_sequential(&exp, &mut derive_stream(3, 0));
        assert!((bayes_sum(&d, &exp.priors).unwrap() - 0.5 * mle_sum(&d)).abs() < 1e-14);
    }

    #[test]
    fn endpoint_moments() {
        let exp = StoppingExperiment::new(vec![0.0; 4], vec![1.0, 1.0, 4.0, 0.25], vec![CoordinatePrior::Flat]).unwrap();
        let reps = 20_000;
        let draws: Vec<SequentialDraw> = (0..reps).map(|r| sample_sequential(&exp, &mut derive_stream(5, r))).collect();
        for i in 0..4 {
            let xb: Vec<f64> = draws.iter().map(|d| d.endpoints[i] / d.times[i]).collect();
            let s = summarize(&xb, 0.0, "").unwrap();
            assert!(s.bias.abs() < 3.0 * s.mc_se);
            let want = 1.0 / exp.times[i];
            // sd of a sample variance of normals is var·√(2/r)
            assert!((s.variance - want).abs() < 4.0 * want * (2.0 / reps as f64).sqrt(), "{i}: {}", s.variance);
        }
    }

    #[test]
    fn oracle_matches_quadrature_for_gaussian() {
        let exp = matched_field_experiment(&design(SeriesKind::RandomWalk), &mut derive_stream(1, 0)).unwrap();
        let a = gaussian_bias_oracle(&exp).unwrap();
        let b = expected_bayes_bias(&exp).unwrap();
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} {b}");
        assert!(gaussian_bias_oracle(&exp.fixed_time_arm()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn field_ranges() {
        let exp = matched_field_experiment(&design(SeriesKind::Iid), &mut derive_stream(2, 0)).unwrap();
        let lo = exp.times.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = exp.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 100.0).abs() < 1e-12);
        let m = exp.beta.iter().sum::<f64>() / 400.0;
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn independent_fields_bayes_helps() {
        let exp = matched_field_experiment(&design(SeriesKind::Iid), &mut derive_stream(4, 0)).unwrap();
        let rep = stopping_experiment(&exp, 2000, 9).unwrap();
        assert!(rep.random_bayes.rmse <= rep.random_mle.rmse);
        assert!(rep.fixed_bayes.rmse <= rep.fixed_mle.rmse);
        assert!(rep.random_mle.bias.abs() < 3.0 * rep.random_mle.mc_se);
        let mle_var = mle_sd(&exp).powi(2);
        assert!((rep.random_mle.variance / mle_var - 1.0).abs() < 0.1);
    }

    #[test]
    fn regime_ratio_grows() {
        let rows: Vec<RegimeRow> = [1e4, 1e6, 1e8].iter().map(|&n| regime_bias_ratio(n, 0.2).unwrap()).collect();
        assert_eq!(rows[0].k, 39);
        assert!(rows[0].ratio < rows[1].ratio && rows[1].ratio < rows[2].ratio);
        assert!(rows[2].ratio > 2.0, "{:?}", rows[2]);
        assert!(StoppingExperiment::regime(1e4, 0.3).is_err());
    }

    #[test]
    fn regime_quadrature_matches_mc() {
        let exp = StoppingExperiment::regime(1e4, 0.2).unwrap();
        let want = expected_bayes_bias(&exp).unwrap();
        let est: Vec<f64> = (0..4000)
            .map(|r| bayes_sum(&sample_sequential(&exp, &mut derive_stream(6, r)), &exp.priors).unwrap())
            .collect();
        let s = summarize(&est, exp.truth() + want, "").unwrap();
        assert!(s.bias.abs() < 3.0 * s.mc_se, "{} {}", s.bias, s.mc_se);
    }

    proptest! {
        #[test]
        fn gaussian_bayes_matches_closed_form(
            xs in prop::collection::vec((-3.0f64..3.0, 0.5f64..50.0, -1.0f64..1.0, 0.01f64..4.0), 1..20)
        ) {
            let draw = SequentialDraw {
                endpoints: xs.iter().map(|(x, t, _, _)| x * t).collect(),
                times: xs.iter().map(|x| x.1).collect(),
            };
            let priors: Vec<CoordinatePrior> =
                xs.iter().map(|&(_, _, mean, var)| CoordinatePrior::Gaussian { mean, var }).collect();
            let want: f64 = xs.iter().map(|&(x, t, m, v)| (v * x + m / t) / (v + 1.0 / t)).sum();
            let got = bayes_sum(&draw, &priors).unwrap();
            prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }
}
