use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, real, Output, Plot, Series, Table};
use crate::diagnostics::{
    doob_chain, kurtosis_set_prob, random_walk_r, var_r_formula, var_r_monte_carlo, SeriesKind, HIST_BINS,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum DiagnosticsConfig {
    Kurtosis(KurtosisConfig),
    VarR(VarRConfig),
    RandomWalkR(RandomWalkRConfig),
    Doob(DoobConfig),
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            DiagnosticsConfig::Kurtosis(c) => {
                check_reps(c.reps, 10_000)?;
                if c.k.is_empty() || c.k.iter().any(|&k| k < 2) {
                    return Err(Error::InvalidArgument("k must be a nonempty list of sizes >= 2".into()));
                }
                Ok(())
            }
            DiagnosticsConfig::VarR(c) => {
                check_reps(c.reps, 100)?;
                check_grid("n", &c.n.iter().map(|&n| n as f64).collect::<Vec<_>>())?;
                if c.series.is_empty() {
                    return Err(Error::InvalidArgument("series must be nonempty".into()));
                }
                for s in &c.series {
                    s.spec(2)?;
                }
                Ok(())
            }
            DiagnosticsConfig::RandomWalkR(c) => {
                check_reps(c.reps, 1000)?;
                if c.n < 2 {
                    return Err(Error::InvalidArgument("n must be at least 2".into()));
                }
                Ok(())
            }
            DiagnosticsConfig::Doob(c) => {
                check_reps(c.reps, 100)?;
                check_grid("n", &c.n)?;
                if !(c.truth_var >= 0.0 && c.prior_var > 0.0) {
                    return Err(Error::InvalidArgument("need truth_var >= 0 and prior_var > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            DiagnosticsConfig::Kurtosis(c) => c.run(),
            DiagnosticsConfig::VarR(c) => c.run(),
            DiagnosticsConfig::RandomWalkR(c) => c.run(),
            DiagnosticsConfig::Doob(c) => c.run(),
        }
    }
}

/// Prior mass of the low-kurtosis set for each dimension in `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KurtosisConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub k: Vec<usize>,
}

impl Default for KurtosisConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 100_000, k: vec![5, 50, 500, 5000] }
    }
}

impl KurtosisConfig {
    pub fn run(&self) -> Result<Output> {
        let mut table = Table::new(&["k", "p_hat", "mc_se", "reps"]);
        let mut pts = Vec::new();
        for &k in &self.k {
            let (p, se) = kurtosis_set_prob(k, self.reps, self.seed)?;
            table.push(vec![k.to_string(), real(p), real(se), self.reps.to_string()]);
            pts.push((k as f64, p));
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Prior probability of the low-kurtosis set".into(),
                x_label: "k".into(),
                y_label: "P(S)".into(),
                log_x: true,
                log_y: false,
                series: vec![Series { name: "p_hat".into(), points: pts }],
            }),
        })
    }
}

/// Closed-form vs simulated variance of the cross-covariance of independent series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarRConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub series: Vec<SeriesKind>,
}

impl Default for VarRConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 100_000,
            n: vec![100, 1000],
            series: vec![SeriesKind::Iid, SeriesKind::Ar1 { phi: 0.9 }, SeriesKind::RandomWalk],
        }
    }
}

pub(crate) fn series_name(s: SeriesKind) -> String {
    match s {
        SeriesKind::Iid => "iid".into(),
        SeriesKind::RandomWalk => "random-walk".into(),
        SeriesKind::Ar1 { phi } => format!("ar1({phi})"),
    }
}

impl VarRConfig {
    pub fn run(&self) -> Result<Output> {
        let mut table = Table::new(&["series", "n", "formula", "mc_var", "mc_se", "z"]);
        for (si, &s) in self.series.iter().enumerate() {
            for (ni, &n) in self.n.iter().enumerate() {
                let spec = s.spec(n)?;
                let f = var_r_formula(&spec, &spec)?;
                let seed = self.seed.wrapping_add(((si as u64) << 16) | ni as u64);
                let (v, se) = var_r_monte_carlo(&spec, &spec, self.reps, seed)?;
                table.push(vec![series_name(s), n.to_string(), real(f), real(v), real(se), real((v - f) / se)]);
            }
        }
        Ok(Output { table, plot: None })
    }
}

/// Distribution of the correlation of two independent random walks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomWalkRConfig {
    pub seed: u64,
    pub reps: usize,
    pub n: usize,
}

impl Default for RandomWalkRConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 10_000, n: 1000 }
    }
}

impl RandomWalkRConfig {
    pub fn run(&self) -> Result<Output> {
        let s = random_walk_r(self.n, self.reps, self.seed)?;
        let mut table = Table::new(&["n", "reps", "mean", "sd", "p_abs_gt_half"]);
        table.push(vec![self.n.to_string(), s.reps.to_string(), real(s.mean), real(s.sd), real(s.p_abs_gt_half)]);
        let edges = (0..=HIST_BINS).map(|b| -1.0 + 2.0 * b as f64 / HIST_BINS as f64).collect();
        Ok(Output {
            table,
            plot: Some(Plot::Histogram {
                title: format!("Correlation of independent random walks, n = {}", self.n),
                x_label: "R".into(),
                edges,
                counts: s.histogram.iter().map(|&c| c as f64).collect(),
            }),
        })
    }
}

/// Scaled posterior deviation `d_n` along the conjugate normal chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoobConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub truth_var: f64,
    pub prior_var: f64,
}

impl Default for DoobConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 100_000, n: vec![1e2, 1e3, 1e4], truth_var: 0.0, prior_var: 1.0 }
    }
}

impl DoobConfig {
    pub fn run(&self) -> Result<Output> {
        let mut table = Table::new(&["n", "reps", "p_ge_3_5", "mc_se", "q25", "q50", "q75", "q90", "q95"]);
        let mut series: Vec<Series> =
            ["q50", "q90", "q95"].iter().map(|s| Series { name: s.to_string(), points: Vec::new() }).collect();
        for (i, &n) in self.n.iter().enumerate() {
            let d = doob_chain(self.truth_var, self.prior_var, n, self.reps, self.seed.wrapping_add(i as u64))?;
            let mut row = vec![real(n), d.reps.to_string(), real(d.p_ge_3_5), real(d.p_ge_3_5_se)];
            row.extend(d.quantiles.iter().map(|&q| real(q)));
            table.push(row);
            for (s, q) in series.iter_mut().zip([1, 3, 4]) {
                s.points.push((n, d.quantiles[q]));
            }
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Quantiles of the scaled posterior deviation".into(),
                x_label: "n".into(),
                y_label: "d_n".into(),
                log_x: true,
                log_y: false,
                series,
            }),
        })
    }
}
