//! Spurious cross-correlation between independent series, the kurtosis
//! null-set experiment and the posterior-chain tightness check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{derive_stream, fold_chunks, map_reps, RngStream};
use crate::numerics::{quantile, Neumaier};

/// `⟨u, v⟩₀ = n^{-1} Σ u_i v_i − n^{-2} Σ u_i Σ v_i`.
pub fn cross_cov(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), got: v.len() });
    }
    if u.len() < 2 {
        return Err(Error::InvalidArgument("cross_cov needs at least two points".into()));
    }
    let n = u.len() as f64;
    let mu = u.iter().copied().collect::<Neumaier>().value() / n;
    let mv = v.iter().copied().collect::<Neumaier>().value() / n;
    Ok(u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).collect::<Neumaier>().value() / n)
}

pub fn cross_corr(u: &[f64], v: &[f64]) -> Result<f64> {
    let uv = cross_cov(u, v)?;
    let uu = cross_cov(u, u)?;
    let vv = cross_cov(v, v)?;
    if uu <= 0.0 || vv <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((uv / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Covariance structure of a mean-zero Gaussian series of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum AutocovKind {
    Iid,
    /// Partial sums of iid standard normals: `A(i, j) = min(i, j)` (1-based).
    RandomWalk,
    /// Stationary AR(1) with unit variance: `A(i, j) = φ^{|i−j|}`.
    Ar1 { phi: f64 },
    /// Row-major `n × n` symmetric positive semidefinite matrix.
    Explicit(Vec<f64>),
}

/// Parametric series laws usable from configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeriesKind {
    Iid,
    RandomWalk,
    Ar1 { phi: f64 },
}

impl SeriesKind {
    pub fn spec(self, n: usize) -> Result<AutocovSpec> {
        let kind = match self {
            SeriesKind::Iid => AutocovKind::Iid,
            SeriesKind::RandomWalk => AutocovKind::RandomWalk,
            SeriesKind::Ar1 { phi } => AutocovKind::Ar1 { phi },
        };
        AutocovSpec::new(kind, n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutocovSpec {
    pub kind: AutocovKind,
    pub n: usize,
}

impl AutocovSpec {
    pub fn new(kind: AutocovKind, n: usize) -> Result<Self> {
        match &kind {
            AutocovKind::Ar1 { phi } if !(phi.abs() < 1.0) => {
                return Err(Error::InvalidArgument(format!("AR(1) needs |phi| < 1, got {phi}")))
            }
            AutocovKind::Explicit(m) => {
                if m.len() != n * n {
                    return Err(Error::LengthMismatch { expected: n * n, got: m.len() });
                }
                for i in 0..n {
                    for j in 0..i {
                        if (m[i * n + j] - m[j * n + i]).abs() > 1e-12 * (1.0 + m[i * n + j].abs()) {
                            return Err(Error::InvalidArgument("explicit autocovariance must be symmetric".into()));
                        }
                    }
                }
                let eig = DMatrix::from_row_slice(n, n, m).symmetric_eigenvalues();
                let scale = eig.iter().fold(0.0f64, |a, &e| a.max(e.abs())).max(1.0);
                if eig.iter().any(|&e| e < -1e-10 * scale) {
                    return Err(Error::InvalidArgument("explicit autocovariance must be positive semidefinite".into()));
                }
            }
            _ => {}
        }
        Ok(Self { kind, n })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            AutocovKind::Iid => (i == j) as u8 as f64,
            AutocovKind::RandomWalk => (i.min(j) + 1) as f64,
            AutocovKind::Ar1 { phi } => phi.powi((i as i64 - j as i64).unsigned_abs() as i32),
            AutocovKind::Explicit(m) => m[i * self.n + j],
        }
    }

    pub fn matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.entry(i, j);
            }
        }
        m
    }

    /// One draw of the series.
    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        let n = self.n;
        Ok(match &self.kind {
            AutocovKind::Iid => rng.normals(n),
            AutocovKind::RandomWalk => {
                let mut acc = 0.0;
                (0..n)
                    .map(|_| {
                        acc += rng.normal();
                        acc
                    })
                    .collect()
            }
            AutocovKind::Ar1 { phi } => {
                let s = (1.0 - phi * phi).sqrt();
                let mut x = rng.normal();
                let mut out = Vec::with_capacity(n);
                for t in 0..n {
                    if t > 0 {
                        x = phi * x + s * rng.normal();
                    }
                    out.push(x);
                }
                out
            }
            AutocovKind::Explicit(m) => {
                let mut a = DMatrix::from_row_slice(n, n, m);
                // a small ridge keeps semidefinite matrices factorable
                let ridge = 1e-12 * (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max).max(1.0);
                for i in 0..n {
                    a[(i, i)] += ridge;
                }
                let l = a.cholesky().ok_or(Error::InvalidArgument("autocovariance is not factorable".into()))?;
                let z = nalgebra::DVector::from_vec(rng.normals(n));
                (l.l() * z).as_slice().to_vec()
            }
        })
    }

    fn row_means(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j)).collect::<Neumaier>().value() / n)
            .collect()
    }
}

fn centered_inner(u: &[f64], v: &[f64]) -> f64 {
    cross_cov(u, v).unwrap_or(0.0)
}

/// Variance of `R = ⟨U, V⟩₀` for independent mean-zero Gaussian series with
/// autocovariances A and B.
pub fn var_r_formula(a: &AutocovSpec, b: &AutocovSpec) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::LengthMismatch { expected: a.n, got: b.n });
    }
    let n = a.n;
    if n < 2 {
        return Err(Error::InvalidArgument("series must have length at least 2".into()));
    }
    let ra = a.row_means();
    let rb = b.row_means();
    let constant = |r: &[f64]| {
        let s = r.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        r.iter().all(|x| (x - r[0]).abs() <= 1e-12 * s)
    };
    let nf = n as f64;
    if constant(&ra) && constant(&rb) {
        let (ca, cb) = (ra[0], rb[0]);
        let mut s = Neumaier::default();
        for i in 0..n {
            for j in 0..n {
                s.add((a.entry(i, j) - ca) * (b.entry(i, j) - cb));
            }
        }
        return Ok(s.value() / (nf * nf));
    }
    let am = a.matrix();
    let bm = b.matrix();
    let mut first = Neumaier::default();
    for i in 0..n {
        first.add(centered_inner(&am[i * n..(i + 1) * n], &bm[i * n..(i + 1) * n]));
    }
    Ok(first.value() / nf - centered_inner(&ra, &rb))
}

/// Centers and scales to unit population variance; a constant input maps to zeros.
pub fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| if s > 0.0 { (x - m) / s } else { 0.0 }).collect()
}

/// Two independent draws from the same series law.
pub fn matched_field_pair(spec: &AutocovSpec, rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = spec.sample(rng)?;
    let v = spec.sample(rng)?;
    Ok((u, v))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrSummary {
    pub reps: usize,
    pub mean: f64,
    pub sd: f64,
    pub p_abs_gt_half: f64,
    /// Counts over 20 equal bins of `[-1, 1]`.
    pub histogram: Vec<usize>,
    pub values: Vec<f64>,
}

pub const HIST_BINS: usize = 20;

pub fn summarize_correlations(values: Vec<f64>) -> CorrSummary {
    let r = values.len() as f64;
    let mean = values.iter().copied().collect::<Neumaier>().value() / r;
    let var = values.iter().map(|x| (x - mean).powi(2)).collect::<Neumaier>().value() / r;
    let mut histogram = vec![0; HIST_BINS];
    for &v in &values {
        let b = (((v + 1.0) / 2.0 * HIST_BINS as f64).floor() as usize).min(HIST_BINS - 1);
        histogram[b] += 1;
    }
    CorrSummary {
        reps: values.len(),
        mean,
        sd: var.sqrt(),
        p_abs_gt_half: values.iter().filter(|v| v.abs() > 0.5).count() as f64 / r,
        histogram,
        values,
    }
}

/// Distribution of the cross-correlation of independent series with law `spec`.
pub fn cross_corr_distribution(spec: &AutocovSpec, reps: usize, seed: u64) -> Result<CorrSummary> {
    let vals = map_reps(reps, |r| -> Result<f64> {
        let (u, v) = matched_field_pair(spec, &mut derive_stream(seed, r as u64))?;
        cross_corr(&u, &v)
    });
    Ok(summarize_correlations(vals.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Cross-correlation of two independent Gaussian random walks of length n.
pub fn random_walk_r(n: usize, reps: usize, seed: u64) -> Result<CorrSummary> {
    if reps < 1000 {
        return Err(Error::InvalidArgument(format!("random_walk_r needs at least 1000 replicates, got {reps}")));
    }
    cross_corr_distribution(&AutocovSpec::new(AutocovKind::RandomWalk, n)?, reps, seed)
}

/// MC variance of R, returned with the standard error of that variance.
pub fn var_r_monte_carlo(a: &AutocovSpec, b: &AutocovSpec, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let vals = map_reps(reps, |r| -> Result<f64> {
        let mut rng = derive_stream(seed, r as u64);
        let u = a.sample(&mut rng)?;
        let v = b.sample(&mut rng)?;
        cross_cov(&u, &v)
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let rf = reps as f64;
    // E R = 0 exactly, so the second moment is the variance
    let sq: Vec<f64> = vals.iter().map(|x| x * x).collect();
    let m2 = sq.iter().copied().collect::<Neumaier>().value() / rf;
    let v4 = sq.iter().map(|s| (s - m2).powi(2)).collect::<Neumaier>().value() / (rf - 1.0);
    Ok((m2, (v4 / rf).sqrt()))
}

/// `m4 < 2.5 m2²` with moments about the sample mean.
pub fn in_kurtosis_set(beta: &[f64]) -> bool {
    let k = beta.len() as f64;
    let mean = beta.iter().sum::<f64>() / k;
    let (mut m2, mut m4) = (0.0, 0.0);
    for b in beta {
        let d = (b - mean) * (b - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= k;
    m4 /= k;
    m4 < 2.5 * m2 * m2
}

/// Prior probability of the low-kurtosis set under `τ ~ Exp(1)`,
/// `β_i | τ ~ N(0, τ²)` iid. Returns `(p̂, mc_se)`.
pub fn kurtosis_set_prob(k: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    if reps < 10_000 {
        return Err(Error::InvalidArgument(format!("kurtosis_set_prob needs at least 10^4 replicates, got {reps}")));
    }
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    let hits = fold_chunks(
        reps,
        256,
        || 0usize,
        |acc, r| {
            let mut rng = derive_stream(seed, r as u64);
            let tau = rng.exp1();
            let beta: Vec<f64> = (0..k).map(|_| tau * rng.normal()).collect();
            *acc += in_kurtosis_set(&beta) as usize;
        },
        |a, b| *a += b,
    );
    let p = hits as f64 / reps as f64;
    Ok((p, (p * (1.0 - p) / reps as f64).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoobSummary {
    pub n: f64,
    pub reps: usize,
    pub probs: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub p_ge_3_5: f64,
    pub p_ge_3_5_se: f64,
}

pub const DOOB_PROBS: [f64; 5] = [0.25, 0.5, 0.75, 0.9, 0.95];

/// `d_n = √n |β_n − β_0|` along `β_0 ~ N(0, truth_var)`, `X̄ ~ N(β_0, 1/n)`,
/// `β_n ~` conjugate posterior under the prior `N(0, prior_var)`.
pub fn doob_chain(truth_var: f64, prior_var: f64, n: f64, reps: usize, seed: u64) -> Result<DoobSummary> {
    if !(truth_var >= 0.0 && prior_var > 0.0 && n > 0.0) {
        return Err(Error::InvalidArgument("doob_chain needs truth_var >= 0, prior_var > 0, n > 0".into()));
    }
    let prec = n + 1.0 / prior_var;
    let w = n / prec;
    let mut d: Vec<f64> = map_reps(reps, |r| {
        let mut rng = derive_stream(seed, r as u64);
        let b0 = truth_var.sqrt() * rng.normal();
        let xbar = b0 + rng.normal() / n.sqrt();
        let bn = w * xbar + rng.normal() / prec.sqrt();
        n.sqrt() * (bn - b0).abs()
    });
    d.sort_by(f64::total_cmp);
    let p = d.iter().filter(|&&x| x >= 3.5).count() as f64 / reps as f64;
    Ok(DoobSummary {
        n,
        reps,
        probs: DOOB_PROBS.to_vec(),
        quantiles: DOOB_PROBS.iter().map(|&q| quantile(&d, q)).collect(),
        p_ge_3_5: p,
        p_ge_3_5_se: (p * (1.0 - p) / reps as f64).sqrt(),
    })
}

/// Exact variance of `β_n − β_0` in the chain above.
pub fn doob_variance(truth_var: f64, prior_var: f64, n: f64) -> f64 {
    let prec = n + 1.0 / prior_var;
    let w = n / prec;
    (1.0 - w).powi(2) * truth_var + w * w / n + 1.0 / prec
}
