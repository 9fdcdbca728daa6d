//! Gaussian sequence model `X_i = β_i + n^{-1/2} ε_i` and its frequentist
//! estimators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::RngStream;
use crate::numerics::{dot, power_tail_sum, Neumaier};

/// Truncated parameter sequence with smoothness index `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeqParam {
    pub beta: Vec<f64>,
    pub alpha: f64,
    /// Set when `|β_i| ≤ i^{-α}` holds for every coordinate.
    pub in_b_alpha: bool,
}

impl SeqParam {
    /// Wraps `beta`, checking membership of the hyperrectangle.
    pub fn new(beta: Vec<f64>, alpha: f64) -> Self {
        let in_b_alpha = beta
            .iter()
            .enumerate()
            .all(|(i, b)| b.abs() <= ((i + 1) as f64).powf(-alpha) * (1.0 + 1e-12));
        Self { beta, alpha, in_b_alpha }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFunctional {
    pub g: Vec<f64>,
    pub norm: f64,
}

impl LinearFunctional {
    pub fn new(g: Vec<f64>) -> Self {
        let norm = g.iter().map(|x| x * x).collect::<Neumaier>().value().sqrt();
        Self { g, norm }
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut g = vec![0.0; k];
        g[i] = 1.0;
        Self::new(g)
    }

    /// `θ = Σ g_i β_i`.
    pub fn apply(&self, beta: &[f64]) -> Result<f64> {
        check_len(self.g.len(), beta.len())?;
        Ok(dot(&self.g, beta))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeqObservation {
    pub x: Vec<f64>,
    pub n: f64,
    pub noiseless: bool,
}

impl SeqObservation {
    /// Per-coordinate noise variance, 0 for noiseless observations.
    pub fn noise_var(&self) -> f64 {
        if self.noiseless {
            0.0
        } else {
            1.0 / self.n
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

pub fn sample_wn(param: &SeqParam, n: f64, rng: &mut RngStream) -> Result<SeqObservation> {
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(format!("scale n must be positive, got {n}")));
    }
    let s = n.sqrt().recip();
    Ok(SeqObservation {
        x: param.beta.iter().map(|b| b + s * rng.normal()).collect(),
        n,
        noiseless: false,
    })
}

/// The `n → ∞` limit: `X = β`.
pub fn sample_wn_noiseless(param: &SeqParam, n: f64) -> SeqObservation {
    SeqObservation {
        x: param.beta.clone(),
        n,
        noiseless: true,
    }
}

pub fn linear_estimate(g: &LinearFunctional, obs: &SeqObservation) -> Result<f64> {
    g.apply(&obs.x)
}

/// Number of coordinates kept by the truncation estimator: `floor(n^{1/(2α)})`.
pub fn truncation_cutoff(n: f64, alpha: f64) -> usize {
    // guard against n^{1/(2α)} landing a hair below an integer
    (n.powf(1.0 / (2.0 * alpha)) * (1.0 + 1e-12)).floor() as usize
}

pub fn truncation_estimate(obs: &SeqObservation, alpha: f64) -> Result<SeqParam> {
    if !(alpha > 0.5) {
        return Err(Error::InvalidArgument(format!("alpha must exceed 1/2, got {alpha}")));
    }
    let cut = truncation_cutoff(obs.n, alpha);
    let beta = obs
        .x
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < cut { x } else { 0.0 })
        .collect();
    Ok(SeqParam {
        beta,
        alpha,
        in_b_alpha: false,
    })
}

/// Exact risk `E‖β̂ − β‖²` of the truncation estimator for a given finite β.
pub fn truncation_risk(beta: &[f64], n: f64, alpha: f64) -> f64 {
    let cut = truncation_cutoff(n, alpha).min(beta.len());
    let tail: Neumaier = beta[cut..].iter().map(|b| b * b).collect();
    cut as f64 / n + tail.value()
}

/// Risk at the least-favorable β of the infinite sequence, `|β_i| = i^{-α}` for all i.
pub fn truncation_risk_least_favorable(n: f64, alpha: f64) -> f64 {
    let cut = truncation_cutoff(n, alpha);
    cut as f64 / n + power_tail_sum(2.0 * alpha, cut)
}

/// Upper bound `2α/(2α−1) · n^{-(2α−1)/(2α)}` on the risk over the hyperrectangle.
pub fn truncation_risk_bound(n: f64, alpha: f64) -> f64 {
    2.0 * alpha / (2.0 * alpha - 1.0) * n.powf(-(2.0 * alpha - 1.0) / (2.0 * alpha))
}

/// `β_i = ±i^{-α}` with independent fair signs.
pub fn least_favorable_sample(alpha: f64, k: usize, rng: &mut RngStream) -> Result<SeqParam> {
    if !(alpha > 0.5) {
        return Err(Error::InvalidArgument(format!("alpha must exceed 1/2, got {alpha}")));
    }
    let beta = (1..=k).map(|i| rng.sign() * (i as f64).powf(-alpha)).collect();
    Ok(SeqParam {
        beta,
        alpha,
        in_b_alpha: true,
    })
}

/// Whether `alpha` lies in the range (3/4, 1) where the unbiased norm
/// estimator is known to be efficient.
pub fn norm_efficiency_range(alpha: f64) -> bool {
    alpha > 0.75 && alpha < 1.0
}

/// Default number of coordinates for [`unbiased_norm`]:
/// `ceil(n^{1/(4α−2) + 0.05})`, capped at `k`.
pub fn default_norm_m(n: f64, alpha: f64, k: usize) -> usize {
    if !norm_efficiency_range(alpha) {
        log::warn!("alpha = {alpha} is outside (3/4, 1); the unbiased norm estimator is not known to be efficient there");
    }
    let m = n.powf(1.0 / (4.0 * alpha - 2.0) + 0.05).ceil();
    if m >= k as f64 {
        k
    } else {
        m as usize
    }
}

/// `Σ_{i≤m} (X_i² − 1/n)`, unbiased for `Σ_{i≤m} β_i²`.
pub fn unbiased_norm(obs: &SeqObservation, m: usize) -> Result<f64> {
    if m > obs.x.len() {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds {} coordinates", obs.x.len())));
    }
    if m == 0 {
        log::warn!("unbiased_norm called with m = 0");
        return Ok(0.0);
    }
    let s2 = obs.noise_var();
    Ok(obs.x[..m].iter().map(|x| x * x - s2).collect::<Neumaier>().value())
}

/// `Σ g_i (Y_i² − σ²)` and, when the truth μ is given, its exact variance
/// `4σ² Σ g_i² μ_i² + 2σ⁴ Σ g_i²`.
pub fn unbiased_weighted_quadratic(
    y: &[f64],
    g: &[f64],
    sigma2: f64,
    truth: Option<&[f64]>,
) -> Result<(f64, Option<f64>)> {
    check_len(y.len(), g.len())?;
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be nonnegative, got {sigma2}")));
    }
    let est = y
        .iter()
        .zip(g)
        .map(|(y, g)| g * (y * y - sigma2))
        .collect::<Neumaier>()
        .value();
    let var = match truth {
        None => None,
        Some(mu) => {
            check_len(y.len(), mu.len())?;
            let a: Neumaier = g.iter().zip(mu).map(|(g, m)| g * g * m * m).collect();
            let b: Neumaier = g.iter().map(|g| g * g).collect();
            Some(4.0 * sigma2 * a.value() + 2.0 * sigma2 * sigma2 * b.value())
        }
    };
    Ok((est, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::derive_stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn noiseless_sampling_is_exact() {
        let p = SeqParam::new(vec![0.3, -0.2], 1.0);
        assert_eq!(sample_wn_noiseless(&p, 10.0).x, p.beta);
        assert!(sample_wn(&p, 0.0, &mut derive_stream(1, 0)).is_err());
    }

    #[test]
    fn white_noise_moments() {
        let p = SeqParam::new(vec![0.0; 100_000], 1.0);
        let obs = sample_wn(&p, 1.0, &mut derive_stream(3, 0)).unwrap();
        let m = crate::numerics::mean(&obs.x);
        let v = obs.x.iter().map(|x| (x - m).powi(2)).sum::<f64>() / obs.x.len() as f64;
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn linear_examples() {
        let p = SeqParam::new(vec![0.5, 0.25, 0.125, 0.0625], 0.6);
        let obs = sample_wn_noiseless(&p, 100.0);
        assert_eq!(linear_estimate(&LinearFunctional::unit(4, 2), &obs).unwrap(), 0.125);
        let obs = SeqObservation { x: vec![0.5, 0.25], n: 1.0, noiseless: false };
        assert_eq!(linear_estimate(&LinearFunctional::new(vec![1.0, 1.0]), &obs).unwrap(), 0.75);
        assert!(linear_estimate(&LinearFunctional::new(vec![1.0]), &obs).is_err());
    }

    #[test]
    fn functional_norm_cached() {
        let g = LinearFunctional::new(vec![3.0, 4.0]);
        assert_eq!(g.norm, 5.0);
    }

    #[test]
    fn cutoff_arithmetic() {
        assert_eq!(truncation_cutoff(100.0, 1.0), 10);
        assert_eq!(truncation_cutoff(1e4, 1.0), 100);
        assert_eq!(truncation_cutoff(1e3, 0.75), 100);
        let obs = SeqObservation { x: vec![1.0; 20], n: 100.0, noiseless: false };
        let est = truncation_estimate(&obs, 1.0).unwrap();
        assert!(est.beta[..10].iter().all(|&b| b == 1.0));
        assert!(est.beta[10..].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn analytic_truncation_risk() {
        let beta: Vec<f64> = (1..=10_000).map(|i| 1.0 / i as f64).collect();
        let direct = 0.1 + (11..=10_000).map(|i| (i as f64).powi(-2)).sum::<f64>();
        assert_relative_eq!(truncation_risk(&beta, 100.0, 1.0), direct, max_relative = 1e-12);
        assert!((direct - 0.1952).abs() < 5e-4);
        assert!(truncation_risk_least_favorable(100.0, 1.0) <= truncation_risk_bound(100.0, 1.0));
    }

    #[test]
    fn least_favorable_magnitudes() {
        let p = least_favorable_sample(0.8, 100_000, &mut derive_stream(5, 0)).unwrap();
        assert!(p.in_b_alpha);
        for (i, b) in p.beta.iter().enumerate() {
            assert_eq!(b.abs(), ((i + 1) as f64).powf(-0.8));
        }
        let sign_mean = p.beta.iter().map(|b| b.signum()).sum::<f64>() / 1e5;
        assert!(sign_mean.abs() < 0.01);
        let one = least_favorable_sample(0.8, 1, &mut derive_stream(5, 1)).unwrap();
        assert_eq!(one.beta[0].abs(), 1.0);
        assert!(SeqParam::new(p.beta.clone(), 0.8).in_b_alpha);
        assert!(!SeqParam::new(vec![0.0, 0.9], 1.0).in_b_alpha);
    }

    #[test]
    fn norm_examples() {
        let obs = sample_wn_noiseless(&SeqParam::new(vec![1.0, 2.0], 0.6), 1.0);
        assert_eq!(unbiased_norm(&obs, 2).unwrap(), 5.0);
        let obs = SeqObservation { x: vec![2.0, 0.0], n: 1.0, noiseless: false };
        assert_eq!(unbiased_norm(&obs, 2).unwrap(), 2.0);
        assert_eq!(unbiased_norm(&obs, 0).unwrap(), 0.0);
        assert!(unbiased_norm(&obs, 3).is_err());
    }

    #[test]
    fn default_m_window() {
        let m = default_norm_m(1e4, 0.8, 1_000_000);
        assert!(m as f64 > 1e4f64.powf(1.0 / 1.2) && m as f64 <= 1e4);
        assert_eq!(default_norm_m(1e4, 0.8, 100), 100);
        assert!(!norm_efficiency_range(1.2));
    }

    #[test]
    fn weighted_quadratic_examples() {
        let (e, v) = unbiased_weighted_quadratic(&[2.0, 0.0], &[1.0, 1.0], 1.0, None).unwrap();
        assert_eq!((e, v), (2.0, None));
        let (_, v) = unbiased_weighted_quadratic(&[2.0, 0.0], &[1.0, 3.0], 2.0, Some(&[0.0, 0.0])).unwrap();
        assert_eq!(v, Some(2.0 * 4.0 * 10.0));
        assert!(unbiased_weighted_quadratic(&[1.0], &[1.0, 1.0], 1.0, None).is_err());
        assert!(unbiased_weighted_quadratic(&[1.0], &[1.0], -1.0, None).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_g_and_x(
            g1 in proptest::collection::vec(-5f64..5.0, 8),
            g2 in proptest::collection::vec(-5f64..5.0, 8),
            x1 in proptest::collection::vec(-5f64..5.0, 8),
            x2 in proptest::collection::vec(-5f64..5.0, 8),
            a in -3f64..3.0,
        ) {
            let obs = |x: Vec<f64>| SeqObservation { x, n: 1.0, noiseless: false };
            let lf = |g: Vec<f64>| LinearFunctional::new(g);
            let gs: Vec<f64> = g1.iter().zip(&g2).map(|(p, q)| a * p + q).collect();
            let xs: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + q).collect();
            let lhs = linear_estimate(&lf(gs), &obs(x1.clone())).unwrap();
            let rhs = a * linear_estimate(&lf(g1.clone()), &obs(x1.clone())).unwrap()
                + linear_estimate(&lf(g2.clone()), &obs(x1.clone())).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            let lhs = linear_estimate(&lf(g1.clone()), &obs(xs)).unwrap();
            let rhs = a * linear_estimate(&lf(g1.clone()), &obs(x1)).unwrap()
                + linear_estimate(&lf(g1), &obs(x2)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn norm_invariant(g in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            let f = LinearFunctional::new(g.clone());
            let s: f64 = g.iter().map(|x| x * x).sum();
            prop_assert!((f.norm * f.norm - s).abs() <= 1e-12 * s.max(1e-300));
        }
    }
}
