//! Per-coordinate bias profiles of shrinkage estimators and the functionals
//! that make those biases add up.

use serde::Serialize;

use crate::bayes::Shape;
use crate::error::{Error, Result};
use crate::harness::{derive_stream, fold_chunks, map_reps, summarize};
use crate::sequence::{sample_wn, LinearFunctional, SeqObservation, SeqParam};

/// Coordinatewise estimator of β (or of β², for quadratic profiles).
pub type CoordEstimator<'a> = dyn Fn(&SeqObservation) -> Result<Vec<f64>> + Sync + Send + 'a;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasProfile {
    pub b: Vec<f64>,
    pub mc_se_per_coord: Vec<f64>,
    pub n: f64,
    pub alpha: f64,
}

pub const MIN_PROFILE_REPS: usize = 1000;
const CHUNK: usize = 64;

/// Chan-style mergeable per-coordinate mean and sum of squared deviations.
#[derive(Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    err: Option<Error>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; k],
            m2: vec![0.0; k],
            err: None,
        }
    }

    fn push(&mut self, d: &[f64]) {
        self.count += 1.0;
        for ((m, s), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(d) {
            let delta = x - *m;
            *m += delta / self.count;
            *s += delta * (x - *m);
        }
    }

    fn merge(&mut self, other: Moments) {
        if self.err.is_none() {
            self.err = other.err;
        }
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * other.count / n;
            self.m2[i] += other.m2[i] + delta * delta * self.count * other.count / n;
        }
        self.count = n;
    }
}

fn profile_against(
    estimator: &CoordEstimator,
    beta: &SeqParam,
    target: &[f64],
    n: f64,
    reps: usize,
    seed: u64,
) -> Result<BiasProfile> {
    if reps < MIN_PROFILE_REPS {
        return Err(Error::InvalidArgument(format!(
            "bias profiles need at least {MIN_PROFILE_REPS} replicates, got {reps}"
        )));
    }
    let k = beta.k();
    let acc = fold_chunks(
        reps,
        CHUNK,
        || Moments::new(k),
        |acc, r| {
            if acc.err.is_some() {
                return;
            }
            let out = sample_wn(beta, n, &mut derive_stream(seed, r as u64)).and_then(|obs| estimator(&obs));
            match out {
                Ok(est) if est.len() == k => {
                    let d: Vec<f64> = est.iter().zip(target).map(|(e, t)| e - t).collect();
                    acc.push(&d);
                }
                Ok(est) => acc.err = Some(Error::LengthMismatch { expected: k, got: est.len() }),
                Err(e) => acc.err = Some(e),
            }
        },
        Moments::merge,
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    let r = reps as f64;
    Ok(BiasProfile {
        b: acc.mean,
        mc_se_per_coord: acc.m2.iter().map(|s| (s / r / r).sqrt()).collect(),
        n,
        alpha: beta.alpha,
    })
}

/// MC estimate of `E β̂_i − β_i` for every coordinate.
pub fn estimate_coordinate_biases(
    estimator: &CoordEstimator,
    beta: &SeqParam,
    n: f64,
    reps: usize,
    seed: u64,
) -> Result<BiasProfile> {
    profile_against(estimator, beta, &beta.beta, n, reps, seed)
}

/// MC estimate of `E β̂²_i − β_i²` for an estimator of the squared coordinates.
pub fn estimate_quadratic_biases(
    estimator: &CoordEstimator,
    beta: &SeqParam,
    n: f64,
    reps: usize,
    seed: u64,
) -> Result<BiasProfile> {
    let sq: Vec<f64> = beta.beta.iter().map(|b| b * b).collect();
    profile_against(estimator, beta, &sq, n, reps, seed)
}

/// Indices `i ≤ 2 n^{1/(2α)}` (1-based) are left out of the attack.
pub fn attack_threshold(n: f64, alpha: f64) -> usize {
    (2.0 * n.powf(1.0 / (2.0 * alpha))).floor() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialFunctional {
    pub functional: LinearFunctional,
    /// Normalizing constant in `g_i = ±C n^{(2α−1)/(4α)} i^{-α}`.
    pub c: f64,
    pub threshold_index: usize,
    pub selected: usize,
}

/// Unit-norm g supported past `2 n^{1/(2α)}` whose signs follow the
/// coordinates with `|b_i| > i^{-α}/2`, judged conservatively on `|b̂_i| − 2 se`.
pub fn adversarial_linear_functional(profile: &BiasProfile) -> Result<AdversarialFunctional> {
    let (n, alpha) = (profile.n, profile.alpha);
    let thr = attack_threshold(n, alpha);
    let k = profile.b.len();
    if k <= thr {
        return Err(Error::InvalidArgument(format!(
            "profile has {k} coordinates, needs more than {thr}"
        )));
    }
    let scale = n.powf((2.0 * alpha - 1.0) / (4.0 * alpha));
    let mut g = vec![0.0; k];
    let mut ss = 0.0;
    let mut selected = 0;
    for i in thr..k {
        let cap = ((i + 1) as f64).powf(-alpha);
        let (b, se) = (profile.b[i], profile.mc_se_per_coord[i]);
        if b.abs() - 2.0 * se > cap / 2.0 {
            g[i] = b.signum() * cap;
            ss += cap * cap;
            selected += 1;
        }
    }
    if selected == 0 {
        return Err(Error::NotShrinking);
    }
    let c = 1.0 / (scale * ss.sqrt());
    for v in g.iter_mut() {
        *v *= c * scale;
    }
    Ok(AdversarialFunctional {
        functional: LinearFunctional::new(g),
        c,
        threshold_index: thr,
        selected,
    })
}

/// Index window `(n^{1/(2α)+ν}, m]` used by the quadratic attack.
pub const QUADRATIC_NU: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticSelection {
    /// `c_i ∈ {0, 1}`.
    pub c: Vec<u8>,
    /// +1 when the positively biased coordinates were chosen, −1 otherwise.
    pub sign: f64,
    pub positive: usize,
    pub negative: usize,
    pub window: (usize, usize),
}

/// Chooses coordinates whose squared-coordinate estimates are biased by more
/// than `i^{-2α}/4` in a common direction.
///
/// Without `eta` the more numerous direction wins (positive on ties). With
/// `eta`, the negative branch is taken when more than `η/3` of the window is
/// negatively biased.
pub fn adversarial_quadratic_selector(
    profile: &BiasProfile,
    alpha: f64,
    m: usize,
    eta: Option<f64>,
) -> Result<QuadraticSelection> {
    let k = profile.b.len();
    let m = m.min(k);
    let lo = profile.n.powf(1.0 / (2.0 * alpha) + QUADRATIC_NU).floor() as usize;
    let mut pos = vec![0u8; k];
    let mut neg = vec![0u8; k];
    for i in lo..m {
        let cap = ((i + 1) as f64).powf(-2.0 * alpha) / 4.0;
        let (b, se) = (profile.b[i], profile.mc_se_per_coord[i]);
        if b - 2.0 * se > cap {
            pos[i] = 1;
        } else if b + 2.0 * se < -cap {
            neg[i] = 1;
        }
    }
    let np = pos.iter().filter(|&&c| c == 1).count();
    let nn = neg.iter().filter(|&&c| c == 1).count();
    let take_negative = match eta {
        Some(eta) => nn as f64 > eta / 3.0 * m.saturating_sub(lo) as f64,
        None => nn > np,
    };
    let (c, sign) = if take_negative { (neg, -1.0) } else { (pos, 1.0) };
    if c.iter().all(|&v| v == 0) {
        return Err(Error::EmptySelection);
    }
    Ok(QuadraticSelection {
        c,
        sign,
        positive: np,
        negative: nn,
        window: (lo, m),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: f64,
    pub estimator: String,
    /// `n^{(2α−1)/(4α)} · (E g(β̂) − g(β))`.
    pub scaled_bias: f64,
    pub scaled_bias_se: f64,
    /// `√n · rmse` of `g(β̂)`.
    pub root_n_rmse: f64,
    /// Analytic scaled bias when an oracle is supplied.
    pub scaled_oracle: Option<f64>,
    pub c: f64,
    pub selected: usize,
}

pub type BiasOracle<'a> = dyn Fn(&[f64], f64) -> Result<f64> + Sync + 'a;

/// For each n, rebuilds the adversarial g against `attacked` and evaluates the
/// bias of `g(β̂)` for every listed estimator on fresh replicates.
pub fn bias_growth_scan(
    attacked: &CoordEstimator,
    evaluated: &[(&str, &CoordEstimator, Option<&BiasOracle>)],
    beta: &SeqParam,
    n_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<GrowthRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_grid must be strictly increasing".into()));
    }
    let alpha = beta.alpha;
    let eval_seed = seed ^ 0x5bd1_e995_0000_0001;
    let mut rows = Vec::new();
    for &n in n_grid {
        let profile = estimate_coordinate_biases(attacked, beta, n, reps, seed)?;
        let adv = adversarial_linear_functional(&profile)?;
        let g = &adv.functional;
        let theta = g.apply(&beta.beta)?;
        let scale = n.powf((2.0 * alpha - 1.0) / (4.0 * alpha));
        for (id, est, oracle) in evaluated {
            let vals = map_reps(reps, |r| -> Result<f64> {
                let obs = sample_wn(beta, n, &mut derive_stream(eval_seed, r as u64))?;
                g.apply(&est(&obs)?)
            });
            let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
            let s = summarize(&vals, theta, id)?;
            let scaled_oracle = match oracle {
                Some(f) => Some(scale * f(&g.g, n)?),
                None => None,
            };
            rows.push(GrowthRow {
                n,
                estimator: id.to_string(),
                scaled_bias: scale * s.bias,
                scaled_bias_se: scale * s.mc_se,
                root_n_rmse: n.sqrt() * s.rmse,
                scaled_oracle,
                c: adv.c,
                selected: adv.selected,
            });
        }
    }
    Ok(rows)
}

/// `P(β_i > ε i^{-α})` for a symmetric product prior on `[-i^{-α}, i^{-α}]`;
/// the marginal equals the conditional law given the other coordinates.
pub fn honest_tail_probability(shape: Shape, eps: f64) -> f64 {
    match shape {
        Shape::Uniform => ((1.0 - eps) / 2.0).max(0.0),
        Shape::SymmetricTwoPoint => {
            if eps < 1.0 {
                0.5
            } else {
                0.0
            }
        }
    }
}
