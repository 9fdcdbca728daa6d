//! Priors, posterior means and hyperparameter estimates for the Gaussian
//! sequence model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, gh101, gl201, gl402, integrate, normal_expectation, Neumaier, Rule};
use crate::sequence::{check_len, LinearFunctional, SeqObservation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Uniform,
    SymmetricTwoPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    IidGaussian { mu0: f64, tau2: f64 },
    /// The `τ² → ∞` limit of `IidGaussian`.
    Flat,
    BoundedProduct { a: Vec<f64>, shape: Shape },
    BlockGaussian { boundaries: Vec<usize>, tau2_by_block: Option<Vec<f64>> },
    HyperVariance(HyperVariance),
}

impl Prior {
    /// Product prior supported on the hyperrectangle `|β_i| ≤ i^{-α}`.
    pub fn bounded_for_alpha(alpha: f64, k: usize, shape: Shape) -> Prior {
        Prior::BoundedProduct {
            a: (1..=k).map(|i| (i as f64).powf(-alpha)).collect(),
            shape,
        }
    }
}

/// `τ_i²(ρ) = (g_i ρ + d_i)^{-1} − σ²`, validated nonnegative at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperVariance {
    rho: f64,
    d: Vec<f64>,
    g: Vec<f64>,
    sigma2: f64,
}

impl HyperVariance {
    pub fn new(rho: f64, d: Vec<f64>, g: Vec<f64>, sigma2: f64) -> Result<Self> {
        check_len(g.len(), d.len())?;
        let hv = Self { rho, d, g, sigma2 };
        for i in 0..hv.g.len() {
            let t = hv.tau2(i)?;
            if t < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "prior variance at coordinate {i} is negative ({t})"
                )));
            }
        }
        Ok(hv)
    }

    /// The family with `d_i = (τ0² + σ²)^{-1} − g_i`, which gives `τ_i² = τ0²` at `ρ = 1`.
    pub fn centered_at(tau0_2: f64, rho: f64, g: Vec<f64>, sigma2: f64) -> Result<Self> {
        let d = g.iter().map(|gi| 1.0 / (tau0_2 + sigma2) - gi).collect();
        Self::new(rho, d, g, sigma2)
    }

    pub fn tau2(&self, i: usize) -> Result<f64> {
        let den = self.g[i] * self.rho + self.d[i];
        if !(den > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "g_i rho + d_i must be positive at coordinate {i}, got {den}"
            )));
        }
        Ok(1.0 / den - self.sigma2)
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

pub fn hyper_variance_tau2(prior: &HyperVariance, i: usize) -> Result<f64> {
    prior.tau2(i)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorMeanReport {
    pub beta_hat: Vec<f64>,
    pub shrinkage: Vec<f64>,
    pub bias_oracle: Option<f64>,
}

fn gaussian_weight(tau2: f64, s2: f64) -> f64 {
    if tau2 == 0.0 {
        0.0
    } else {
        tau2 / (tau2 + s2)
    }
}

/// Coordinatewise posterior mean `(τ² X_i + σ² μ0)/(τ² + σ²)` with `σ² = 1/n`.
pub fn posterior_mean_gaussian(obs: &SeqObservation, prior: &Prior) -> Result<PosteriorMeanReport> {
    let (mu0, w) = match *prior {
        Prior::Flat => (0.0, 1.0),
        Prior::IidGaussian { mu0, tau2 } => {
            if !(tau2 >= 0.0) {
                return Err(Error::InvalidArgument(format!("tau2 must be nonnegative, got {tau2}")));
            }
            (mu0, gaussian_weight(tau2, obs.noise_var()))
        }
        _ => return Err(Error::InvalidArgument("posterior_mean_gaussian needs an iid Gaussian or flat prior".into())),
    };
    Ok(PosteriorMeanReport {
        beta_hat: obs.x.iter().map(|x| w * x + (1.0 - w) * mu0).collect(),
        shrinkage: vec![w; obs.x.len()],
        bias_oracle: None,
    })
}

pub fn plug_in(g: &LinearFunctional, report: &PosteriorMeanReport) -> Result<f64> {
    g.apply(&report.beta_hat)
}

/// Exact bias `−σ²/(τ²+σ²) Σ g_i (β_i − μ0)` of the plugged Gaussian posterior mean.
pub fn plug_in_bias_oracle(g: &[f64], beta: &[f64], mu0: f64, tau2: f64, sigma2: f64) -> Result<f64> {
    check_len(g.len(), beta.len())?;
    let centered: Neumaier = g.iter().zip(beta).map(|(g, b)| g * (b - mu0)).collect();
    Ok(-(1.0 - gaussian_weight(tau2, sigma2)) * centered.value())
}

/// Integration window outside which `exp(-(x-t)²/2σ²)` is below `e^{-40}`
/// of its maximum over `[lo, hi]`.
fn window(x: f64, lo: f64, hi: f64, sd: f64) -> (f64, f64, f64) {
    let c = x.clamp(lo, hi);
    let gap = (x - c).abs();
    let d = (gap * gap + 80.0 * sd * sd).sqrt() - gap;
    ((c - d).max(lo), (c + d).min(hi), c)
}

/// `[∫w, ∫t w, ∫t² w]` for `w(t) = exp(-(x-t)²/2σ²)` on `[lo, hi]`, scaled by
/// `exp((x-c)²/2σ²)` with `c` the maximizer. Panels are refined until the 201-
/// and 402-node rules agree on the posterior mean and variance to `1e-10`.
fn uniform_moments(x: f64, lo: f64, hi: f64, sd: f64) -> Result<[f64; 3]> {
    let (a, b, c) = window(x, lo, hi, sd);
    let s2 = sd * sd;
    let base = (x - c) * (x - c);
    let f = |t: f64| ((base - (x - t) * (x - t)) / (2.0 * s2)).exp();
    let run = |rule: &Rule, panels: usize| -> [f64; 3] {
        let h = (b - a) / panels as f64;
        let mut m = [Neumaier::default(); 3];
        for p in 0..panels {
            let (l, r) = (a + h * p as f64, a + h * (p + 1) as f64);
            m[0].add(integrate(rule, l, r, f));
            m[1].add(integrate(rule, l, r, |t| t * f(t)));
            m[2].add(integrate(rule, l, r, |t| t * t * f(t)));
        }
        [m[0].value(), m[1].value(), m[2].value()]
    };
    let stats = |m: [f64; 3]| {
        let mean = m[1] / m[0];
        (mean, m[2] / m[0] - mean * mean)
    };
    let mut achieved = f64::INFINITY;
    let mut panels = 1;
    while panels <= 64 {
        let coarse = run(gl201(), panels);
        let fine = run(gl402(), panels);
        let (m1, v1) = stats(coarse);
        let (m2, v2) = stats(fine);
        achieved = (m1 - m2).abs().max((v1 - v2).abs());
        if achieved <= 1e-10 && fine[0] > 0.0 {
            return Ok(fine);
        }
        panels *= 2;
    }
    Err(Error::Quadrature { achieved })
}

/// Posterior mean of `Θ` given `X = x ~ N(Θ, σ²)` for a prior on `[-a, a]`.
pub fn posterior_mean_bounded(x: f64, a: f64, sigma: f64, shape: Shape) -> Result<f64> {
    if !(a > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("need a > 0 and sigma > 0, got a = {a}, sigma = {sigma}")));
    }
    match shape {
        Shape::Uniform => {
            let m = uniform_moments(x, -a, a, sigma)?;
            Ok((m[1] / m[0]).clamp(-a, a))
        }
        Shape::SymmetricTwoPoint => {
            // atoms at ±a with equal mass; the posterior weight ratio is exp(2ax/σ²)
            Ok(a * (a * x / (sigma * sigma)).tanh())
        }
    }
}

/// Frequentist bias `E_β[posterior_mean_bounded(X)] − β`, `X ~ N(β, σ²)`.
pub fn bias_of_bounded_posterior(beta: f64, a: f64, sigma: f64, shape: Shape) -> Result<f64> {
    if beta.abs() > a {
        return Err(Error::TruthOutsideSupport { beta, a });
    }
    let mut err = None;
    let e = normal_expectation(gh101(), beta, sigma, |x| match posterior_mean_bounded(x, a, sigma, shape) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(e - beta),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub margin: f64,
    pub bias_plus: f64,
    pub bias_minus: f64,
}

/// Evaluates `|b_β| + |b_{−β}| − 2(1 − (a/σ)²)|β|`.
pub fn check_bias_bound(beta: f64, a: f64, sigma: f64, shape: Shape) -> Result<BoundCheck> {
    if a > sigma {
        return Err(Error::InvalidArgument(format!("bias bound needs a <= sigma, got a = {a}, sigma = {sigma}")));
    }
    let bp = bias_of_bounded_posterior(beta, a, sigma, shape)?;
    let bm = bias_of_bounded_posterior(-beta, a, sigma, shape)?;
    let margin = bp.abs() + bm.abs() - 2.0 * (1.0 - (a / sigma).powi(2)) * beta.abs();
    Ok(BoundCheck {
        holds: margin > -1e-8,
        margin,
        bias_plus: bp,
        bias_minus: bm,
    })
}

/// `Σ g_i E(μ_i² | Y_i)` under `μ_i ~ N(0, τ²)`, `Y_i | μ_i ~ N(μ_i, σ²)`.
pub fn posterior_quadratic_conjugate(y: &[f64], g: &[f64], tau2: f64, sigma2: f64) -> Result<f64> {
    check_len(y.len(), g.len())?;
    if !(tau2 >= 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("need tau2 >= 0 and sigma2 > 0, got {tau2}, {sigma2}")));
    }
    let w = tau2 / (tau2 + sigma2);
    let pv = w * sigma2;
    Ok(y.iter()
        .zip(g)
        .map(|(y, g)| g * ((w * y) * (w * y) + pv))
        .collect::<Neumaier>()
        .value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tau2Fit {
    pub value: f64,
    /// The raw estimate was negative and has been set to 0.
    pub floored: bool,
}

/// `τ̂² = k^{-1} Σ (Y_i² − σ²)`, floored at 0.
pub fn tau2_mle(y: &[f64], sigma2: f64) -> Result<Tau2Fit> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("tau2_mle needs observations".into()));
    }
    let raw = y.iter().map(|v| v * v - sigma2).collect::<Neumaier>().value() / y.len() as f64;
    Ok(Tau2Fit {
        value: raw.max(0.0),
        floored: raw < 0.0,
    })
}

/// `τ̂² = k^{-1} Σ g_i Y_i²`, the MLE when `Y_i ~ N(0, τ²/g_i)` marginally.
pub fn tau2_mle_weighted(y: &[f64], g: &[f64], _sigma2: f64) -> Result<f64> {
    check_len(y.len(), g.len())?;
    if y.is_empty() {
        return Err(Error::InvalidArgument("tau2_mle_weighted needs observations".into()));
    }
    Ok(y.iter().zip(g).map(|(y, g)| g * y * y).collect::<Neumaier>().value() / y.len() as f64)
}

/// Block boundaries `1, floor(n^{0.4}), then doubling`, ending at `len + 1`.
/// Block `j` covers the 1-based indices `[k_{j-1}, k_j)`.
pub fn default_block_boundaries(n: f64, len: usize) -> Vec<usize> {
    let end = len + 1;
    let mut b = vec![1];
    let mut next = (n.powf(0.4).floor() as usize).max(2);
    while *b.last().unwrap() < end {
        b.push(next.min(end));
        next *= 2;
    }
    b
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockEstimate {
    pub theta_hat: f64,
    pub beta_hat: Vec<f64>,
    pub tau2_by_block: Vec<f64>,
    pub floored_blocks: usize,
}

/// Empirical-Bayes block prior estimate of `Σ β_i²` and of β.
pub fn block_estimator(obs: &SeqObservation, boundaries: &[usize]) -> Result<BlockEstimate> {
    let len = obs.x.len();
    if boundaries.len() < 2 || boundaries[0] < 1 || *boundaries.last().unwrap() > len + 1 {
        return Err(Error::InvalidArgument(format!(
            "block boundaries must start at 1 and end at most at {}",
            len + 1
        )));
    }
    let s2 = obs.noise_var();
    let mut theta = Neumaier::default();
    let mut beta_hat = vec![0.0; len];
    let mut taus = Vec::with_capacity(boundaries.len() - 1);
    let mut floored = 0;
    for (j, w) in boundaries.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::EmptyBlock(j));
        }
        let xs = &obs.x[w[0] - 1..w[1] - 1];
        let fit = tau2_mle(xs, s2)?;
        floored += fit.floored as usize;
        let t = fit.value;
        taus.push(t);
        if s2 == 0.0 {
            // noiseless: the posterior is a point mass at X
            theta.add(xs.iter().map(|x| x * x).collect::<Neumaier>().value());
            beta_hat[w[0] - 1..w[1] - 1].copy_from_slice(xs);
            continue;
        }
        let ones = vec![1.0; xs.len()];
        theta.add(posterior_quadratic_conjugate(xs, &ones, t, s2)?);
        let sh = t / (t + s2);
        for (b, x) in beta_hat[w[0] - 1..w[1] - 1].iter_mut().zip(xs) {
            *b = sh * x;
        }
    }
    Ok(BlockEstimate {
        theta_hat: theta.value(),
        beta_hat,
        tau2_by_block: taus,
        floored_blocks: floored,
    })
}

/// One-dimensional prior for a single drift coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoordinatePrior {
    Flat,
    Gaussian { mean: f64, var: f64 },
    Uniform { lo: f64, hi: f64 },
    TwoPoint { a: f64 },
}

/// Posterior mean `x̄ + (1/T) f'(x̄)/f(x̄)` with `f = π * N(0, 1/T)`.
pub fn tweedie_mean(xbar: f64, t: f64, prior: &CoordinatePrior) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let s2 = 1.0 / t;
    match *prior {
        CoordinatePrior::Flat => Ok(xbar),
        CoordinatePrior::Gaussian { mean, var } => {
            if var.is_infinite() {
                Ok(xbar)
            } else {
                Ok((var * xbar + mean * s2) / (var + s2))
            }
        }
        CoordinatePrior::Uniform { lo, hi } => {
            if !(hi > lo) {
                return Err(Error::InvalidArgument(format!("empty uniform support [{lo}, {hi}]")));
            }
            // f ∝ ∫ φ((x-u)/s) du, f' ∝ -∫ (x-u)/s² φ du, all on a common scale
            let m = uniform_moments(xbar, lo, hi, s2.sqrt())?;
            let score = -(xbar * m[0] - m[1]) / (s2 * m[0]);
            Ok(xbar + s2 * score)
        }
        CoordinatePrior::TwoPoint { a } => posterior_mean_bounded(xbar, a, s2.sqrt(), Shape::SymmetricTwoPoint),
    }
}

/// Shrinkage weight `(1/T)/(v + 1/T)` placed on the prior mean.
pub fn tweedie_prior_weight(t: f64, var: f64) -> f64 {
    let s2 = 1.0 / t;
    s2 / (var + s2)
}

/// `Σ g_i μ_i` convenience for reports.
pub fn weighted_sum(g: &[f64], v: &[f64]) -> f64 {
    dot(g, v)
}
