//! Stratified sampling with known inclusion probabilities: Horvitz-Thompson
//! estimation, a hyperprior estimator tied to the sampling design, and an
//! exact non-identifiability construction.

use num_rational::Ratio;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RngStream;
use crate::numerics::{logistic, Neumaier};

/// Finite population with response probabilities `g` and means `β`.
/// Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StratModel {
    pub g: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaLaw {
    Uniform,
    /// `β_i ~ Beta(p_τ(i), 1 − p_τ(i))`.
    BetaPrior { tau: f64 },
    /// `β_i = p_τ(i)`.
    Marginal { tau: f64 },
}

impl StratModel {
    pub fn new(g: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if g.len() != beta.len() || g.is_empty() {
            return Err(Error::LengthMismatch { expected: g.len(), got: beta.len() });
        }
        if let Some(i) = g.iter().position(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument(format!("g[{i}] = {} is outside (0, 1]", g[i])));
        }
        if let Some(i) = beta.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(format!("beta[{i}] = {} is outside [0, 1]", beta[i])));
        }
        Ok(Self { g, beta })
    }

    /// Population with `g_i ~ U[g_lo, g_hi]` and β drawn from `law`.
    pub fn random(size: usize, g_lo: f64, g_hi: f64, law: BetaLaw, rng: &mut RngStream) -> Result<Self> {
        if !(g_lo > 0.0 && g_lo <= g_hi && g_hi <= 1.0) {
            return Err(Error::InvalidArgument(format!("need 0 < g_lo <= g_hi <= 1, got [{g_lo}, {g_hi}]")));
        }
        let g: Vec<f64> = (0..size).map(|_| g_lo + (g_hi - g_lo) * rng.uniform()).collect();
        let beta = g
            .iter()
            .map(|&gi| match law {
                BetaLaw::Uniform => Ok(rng.uniform()),
                BetaLaw::Marginal { tau } => Ok(p_tau(tau, gi)),
                BetaLaw::BetaPrior { tau } => {
                    let p = p_tau(tau, gi).clamp(1e-12, 1.0 - 1e-12);
                    let d = Beta::new(p, 1.0 - p).map_err(|e| Error::InvalidArgument(e.to_string()))?;
                    Ok(d.sample(rng))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(g, beta)
    }

    pub fn size(&self) -> usize {
        self.g.len()
    }

    /// `θ = N^{-1} Σ β_i`.
    pub fn theta(&self) -> f64 {
        self.beta.iter().copied().collect::<Neumaier>().value() / self.size() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StratDraw {
    pub x: Vec<usize>,
    pub r: Vec<bool>,
    pub z: Vec<bool>,
}

pub fn sample_strat(model: &StratModel, n: usize, rng: &mut RngStream) -> Result<StratDraw> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut d = StratDraw {
        x: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let i = rng.index(model.size());
        let r = rng.bernoulli(model.g[i]);
        let y = rng.bernoulli(model.beta[i]);
        d.x.push(i);
        d.r.push(r);
        d.z.push(r && y);
    }
    Ok(d)
}

/// `n^{-1} Σ Z_i / g(X_i)`.
pub fn ht_estimate(draw: &StratDraw, g: &[f64]) -> Result<f64> {
    let mut s = Neumaier::default();
    for (&i, &z) in draw.x.iter().zip(&draw.z) {
        let gi = *g.get(i).ok_or_else(|| Error::InvalidArgument(format!("index {i} outside g")))?;
        if gi <= 0.0 {
            return Err(Error::ZeroProbability(i));
        }
        if z {
            s.add(1.0 / gi);
        }
    }
    Ok(s.value() / draw.x.len() as f64)
}

/// `p_τ(i) = e^{τ/g_i} / (1 + e^{τ/g_i})`.
pub fn p_tau(tau: f64, g_i: f64) -> f64 {
    logistic(tau / g_i)
}

pub const TAU_MAX: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauFit {
    pub tau: f64,
    /// The score has no root; `tau` is `±TAU_MAX`.
    pub boundary: bool,
    pub score: f64,
}

/// Score `n^{-1} Σ R_i (Z_i − p_τ(X_i)) / g(X_i)` and its τ-derivative, over
/// responders grouped by population index as `(g_i, #Z=1, #Z=0)`.
fn score(tau: f64, obs: &[(f64, f64, f64)], n: f64) -> (f64, f64) {
    let mut s = Neumaier::default();
    let mut d = Neumaier::default();
    for &(gi, ones, zeros) in obs {
        let p = p_tau(tau, gi);
        s.add((ones * (1.0 - p) - zeros * p) / gi);
        d.add(-(ones + zeros) * p * (1.0 - p) / (gi * gi));
    }
    (s.value() / n, d.value() / n)
}

/// Root of the (decreasing) score equation for τ.
pub fn fit_tau(draw: &StratDraw, g: &[f64]) -> Result<TauFit> {
    let mut counts = vec![(0.0f64, 0.0f64); g.len()];
    for ((&i, &r), &z) in draw.x.iter().zip(&draw.r).zip(&draw.z) {
        if r {
            let c = counts.get_mut(i).ok_or_else(|| Error::InvalidArgument(format!("index {i} outside g")))?;
            if z {
                c.0 += 1.0;
            } else {
                c.1 += 1.0;
            }
        }
    }
    let obs: Vec<(f64, f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.0 + c.1 > 0.0)
        .map(|(i, c)| (g[i], c.0, c.1))
        .collect();
    if obs.is_empty() {
        return Err(Error::InvalidArgument("no responding units".into()));
    }
    let n = draw.x.len() as f64;
    let f = |t: f64| score(t, &obs, n);
    let ones: f64 = obs.iter().map(|o| o.1).sum();
    let zeros: f64 = obs.iter().map(|o| o.2).sum();
    if ones == 0.0 || zeros == 0.0 {
        let tau = if zeros == 0.0 { TAU_MAX } else { -TAU_MAX };
        return Ok(TauFit { tau, boundary: true, score: f(tau).0 });
    }
    let (mut lo, mut hi) = (-50.0, 50.0);
    while f(lo).0 < 0.0 {
        lo *= 2.0;
        if lo < -TAU_MAX {
            return Ok(TauFit { tau: -TAU_MAX, boundary: true, score: f(-TAU_MAX).0 });
        }
    }
    while f(hi).0 > 0.0 {
        hi *= 2.0;
        if hi > TAU_MAX {
            return Ok(TauFit { tau: TAU_MAX, boundary: true, score: f(TAU_MAX).0 });
        }
    }
    // bisection until the bracket is small, then safeguarded Newton
    for _ in 0..60 {
        if hi - lo < 1e-3 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (s, d) = f(t);
        if s.abs() < 1e-12 {
            return Ok(TauFit { tau: t, boundary: false, score: s });
        }
        if s > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let step = if d < 0.0 { t - s / d } else { f64::NAN };
        t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * t.abs().max(1.0) {
            break;
        }
    }
    let s = f(t).0;
    if s.abs() < 1e-12 {
        Ok(TauFit { tau: t, boundary: false, score: s })
    } else {
        Err(Error::Quadrature { achieved: s.abs() })
    }
}

/// `θ̂*_B = N^{-1} Σ_i p_τ̂(i)` over the whole population.
pub fn theta_star_bayes(tau_hat: f64, g: &[f64]) -> f64 {
    g.iter().map(|&gi| p_tau(tau_hat, gi)).collect::<Neumaier>().value() / g.len() as f64
}

/// Which of the two indistinguishable mean functions is in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonidentModel {
    /// `β ≡ 5/8`.
    Constant,
    /// `β ≡ g`.
    EqualsG,
}

type Q = Ratio<i64>;

/// Response probability `g(x) = 1/2 + 1/4 Σ s_j ψ(mx − j)` on `[0, 1)`,
/// with `ψ = 1` on `[0, 1/2)` and `−1` on `[1/2, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonidentConstruction {
    pub m: usize,
    pub signs: Vec<i8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellLaw {
    pub r1_z1: Q,
    pub r1_z0: Q,
    pub r0: Q,
}

pub fn nonident_construct(m: usize, rng: &mut RngStream) -> Result<NonidentConstruction> {
    if m == 0 || m % 2 == 1 {
        return Err(Error::InvalidArgument(format!("strata count must be even and positive, got {m}")));
    }
    let mut signs: Vec<i8> = (0..m).map(|j| if j < m / 2 { 1 } else { -1 }).collect();
    rng.shuffle(&mut signs);
    Ok(NonidentConstruction { m, signs })
}

impl NonidentConstruction {
    /// Exact g on the half-cell `h` (cell `h / 2`, first half when `h` is even).
    pub fn g_half_cell(&self, h: usize) -> Q {
        let s = self.signs[h / 2] as i64;
        let psi = if h.is_multiple_of(2) { 1 } else { -1 };
        Q::new(1, 2) + Q::new(s * psi, 4)
    }

    /// g evaluated on a grid of `2m` half-cells.
    pub fn g_grid(&self) -> Vec<f64> {
        (0..2 * self.m)
            .map(|h| {
                let q = self.g_half_cell(h);
                *q.numer() as f64 / *q.denom() as f64
            })
            .collect()
    }

    pub fn g_at(&self, x: f64) -> f64 {
        let h = ((x * 2.0 * self.m as f64).floor() as usize).min(2 * self.m - 1);
        let q = self.g_half_cell(h);
        *q.numer() as f64 / *q.denom() as f64
    }

    fn beta(&self, h: usize, model: NonidentModel) -> Q {
        match model {
            NonidentModel::Constant => Q::new(5, 8),
            NonidentModel::EqualsG => self.g_half_cell(h),
        }
    }

    /// Law of `(R, Z)` for a single X uniform on cell `j`.
    pub fn cell_law(&self, j: usize, model: NonidentModel) -> CellLaw {
        let half = Q::new(1, 2);
        let mut law = CellLaw { r1_z1: Q::from(0), r1_z0: Q::from(0), r0: Q::from(0) };
        for h in [2 * j, 2 * j + 1] {
            let g = self.g_half_cell(h);
            let b = self.beta(h, model);
            law.r1_z1 += half * g * b;
            law.r1_z0 += half * g * (Q::from(1) - b);
            law.r0 += half * (Q::from(1) - g);
        }
        law
    }

    /// `θ = ∫ β`.
    pub fn theta(&self, model: NonidentModel) -> Q {
        let total: Q = (0..2 * self.m).map(|h| self.beta(h, model)).sum();
        total / Q::from(2 * self.m as i64)
    }
}
