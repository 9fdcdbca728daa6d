//! Discrete partial linear model over pairs: `X_{i1} ~ N(g_i, 1)`,
//! `X_{i2} ~ N(g_i + η_i, 1)`, `Y_{ij} = θ X_{ij} + β_i (+ μ_i for j = 2) + ε_{ij}`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{cross_corr, matched_field_pair, standardize, SeriesKind};
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, summarize, RngStream};
use crate::numerics::{median, Neumaier};

pub const SCALE_CAP: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairsModel {
    pub theta: f64,
    pub g_loc: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta_loc: Vec<f64>,
    pub mu: Vec<f64>,
    /// True where the pair carries the smoother exponent δ₁.
    pub good: Vec<bool>,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub mixed_roughness: bool,
    pub realized_corr: f64,
}

impl PairsModel {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairsDraw {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

pub fn sample_pairs(model: &PairsModel, rng: &mut RngStream) -> PairsDraw {
    draw(model, Some(rng))
}

/// All four noise terms set to zero.
pub fn sample_pairs_noiseless(model: &PairsModel) -> PairsDraw {
    draw(model, None)
}

fn draw(m: &PairsModel, mut rng: Option<&mut RngStream>) -> PairsDraw {
    let k = m.len();
    let mut d = PairsDraw {
        x1: Vec::with_capacity(k),
        x2: Vec::with_capacity(k),
        y1: Vec::with_capacity(k),
        y2: Vec::with_capacity(k),
    };
    let mut e = || rng.as_mut().map_or(0.0, |r| r.normal());
    for i in 0..k {
        let x1 = m.g_loc[i] + e();
        let x2 = m.g_loc[i] + m.eta[i] + e();
        let y1 = m.theta * x1 + m.beta_loc[i] + e();
        let y2 = m.theta * x2 + m.beta_loc[i] + m.mu[i] + e();
        d.x1.push(x1);
        d.x2.push(x2);
        d.y1.push(y1);
        d.y2.push(y2);
    }
    d
}

fn ratio(d: &PairsDraw, keep: impl Fn(usize) -> bool) -> Result<f64> {
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for i in 0..d.x1.len() {
        if keep(i) {
            let dx = d.x2[i] - d.x1[i];
            let dy = d.y2[i] - d.y1[i];
            num.add(dx * dy);
            den.add(dx * dx);
        }
    }
    if den.value() <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num.value() / den.value())
}

/// Pair-difference regression restricted to pairs labelled good.
pub fn good_pairs_estimate(draw: &PairsDraw, good: &[bool]) -> Result<f64> {
    if good.len() != draw.x1.len() {
        return Err(Error::LengthMismatch { expected: draw.x1.len(), got: good.len() });
    }
    ratio(draw, |i| good[i])
}

/// Pair-difference regression over every pair.
pub fn all_pairs_estimate(draw: &PairsDraw) -> Result<f64> {
    ratio(draw, |_| true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairsFamily {
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub frac_good: f64,
    #[serde(default)]
    pub rho_target: f64,
    pub theta: f64,
    pub generator: SeriesKind,
}

fn unit_sup(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / m).collect()
    }
}

/// `n` pairs whose `(η, μ)` come from two independent draws of the same
/// series law, scaled to `3 n^{-δ_i}` and `3 n^{-α}`. A nonzero `rho_target`
/// mixes a share of the first draw into the second.
pub fn make_rough_model(n: usize, family: &PairsFamily, rng: &mut RngStream) -> Result<PairsModel> {
    let PairsFamily { alpha, delta0, delta1, frac_good, rho_target, theta, generator } = *family;
    if !(frac_good > 0.0 && frac_good <= 1.0) {
        return Err(Error::InvalidArgument(format!("frac_good must lie in (0, 1], got {frac_good}")));
    }
    if !(alpha + delta1 > 0.5) || (frac_good < 1.0 && !(alpha + delta0 < 0.5)) {
        return Err(Error::InvalidArgument(format!(
            "exponents need alpha + delta0 < 1/2 < alpha + delta1, got alpha = {alpha}, delta0 = {delta0}, delta1 = {delta1}"
        )));
    }
    if !(rho_target.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho_target must lie in [-1, 1], got {rho_target}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two pairs".into()));
    }
    let spec = generator.spec(n)?;
    let (u, v) = matched_field_pair(&spec, rng)?;
    let v = if rho_target != 0.0 {
        let (us, vs) = (standardize(&u), standardize(&v));
        let s = (1.0 - rho_target * rho_target).sqrt();
        us.iter().zip(&vs).map(|(a, b)| rho_target * a + s * b).collect()
    } else {
        v
    };
    let (u, v) = (unit_sup(&u), unit_sup(&v));
    let n_good = ((frac_good * n as f64).round() as usize).clamp(1, n);
    let mut good: Vec<bool> = (0..n).map(|i| i < n_good).collect();
    rng.shuffle(&mut good);
    let nf = n as f64;
    let eta: Vec<f64> = u
        .iter()
        .zip(&good)
        .map(|(x, &gd)| SCALE_CAP * nf.powf(-if gd { delta1 } else { delta0 }) * x)
        .collect();
    let mu: Vec<f64> = v.iter().map(|x| SCALE_CAP * nf.powf(-alpha) * x).collect();
    let realized_corr = cross_corr(&eta, &mu).unwrap_or(0.0);
    Ok(PairsModel {
        theta,
        g_loc: rng.normals(n),
        eta,
        beta_loc: rng.normals(n),
        mu,
        good,
        alpha,
        delta0,
        delta1,
        mixed_roughness: frac_good < 1.0,
        realized_corr,
    })
}

/// Bias of the all-pairs ratio implied by the realized sequences:
/// `Σ η_i μ_i / Σ (η_i² + 2)`.
pub fn all_pairs_bias_oracle(model: &PairsModel) -> f64 {
    let num: Neumaier = model.eta.iter().zip(&model.mu).map(|(e, m)| e * m).collect();
    let den: Neumaier = model.eta.iter().map(|e| e * e + 2.0).collect();
    num.value() / den.value()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: f64,
    pub estimator: String,
    /// Median over models of `√n |bias|`, the bias averaged over replicates.
    pub median_root_n_abs_bias: f64,
    /// `√n ·` RMSE pooled over models and replicates.
    pub root_n_rmse: f64,
    pub rmse: f64,
    /// Median over models of `√n |oracle bias|` (all-pairs only).
    pub median_root_n_oracle: Option<f64>,
    pub median_abs_corr: f64,
}

/// For every n, draws `models` independent models from the family and runs
/// `reps` replicates on each.
pub fn consistency_scan(
    family: &PairsFamily,
    n_grid: &[usize],
    models: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_grid must be strictly increasing".into()));
    }
    if models == 0 || reps == 0 {
        return Err(Error::InvalidArgument("models and reps must be positive".into()));
    }
    let mut rows = Vec::new();
    for (ni, &n) in n_grid.iter().enumerate() {
        let per_model = map_reps(models, |m| -> Result<([f64; 2], [f64; 2], f64, f64)> {
            let mut rng = derive_stream(seed, ((ni as u64) << 32) | m as u64);
            let model = make_rough_model(n, family, &mut rng)?;
            let mut errs = [Vec::with_capacity(reps), Vec::with_capacity(reps)];
            for _ in 0..reps {
                let d = sample_pairs(&model, &mut rng);
                errs[0].push(good_pairs_estimate(&d, &model.good)? - model.theta);
                errs[1].push(all_pairs_estimate(&d)? - model.theta);
            }
            let mut bias = [0.0; 2];
            let mut mse = [0.0; 2];
            for j in 0..2 {
                let s = summarize(&errs[j], 0.0, "")?;
                bias[j] = s.bias;
                mse[j] = s.rmse * s.rmse;
            }
            Ok((bias, mse, all_pairs_bias_oracle(&model), model.realized_corr))
        });
        let per_model = per_model.into_iter().collect::<Result<Vec<_>>>()?;
        let rn = (n as f64).sqrt();
        let corr = median(&per_model.iter().map(|p| p.3.abs()).collect::<Vec<_>>());
        for (j, id) in ["good-pairs", "all-pairs"].iter().enumerate() {
            let scaled: Vec<f64> = per_model.iter().map(|p| rn * p.0[j].abs()).collect();
            let mse = per_model.iter().map(|p| p.1[j]).sum::<f64>() / models as f64;
            let oracle = (j == 1).then(|| median(&per_model.iter().map(|p| rn * p.2.abs()).collect::<Vec<_>>()));
            rows.push(ScanRow {
                n: n as f64,
                estimator: id.to_string(),
                median_root_n_abs_bias: median(&scaled),
                root_n_rmse: rn * mse.sqrt(),
                rmse: mse.sqrt(),
                median_root_n_oracle: oracle,
                median_abs_corr: corr,
            });
        }
    }
    Ok(rows)
}
