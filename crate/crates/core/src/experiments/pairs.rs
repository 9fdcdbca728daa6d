use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, opt_real, real, Output, Plot, Series, Table};
use crate::diagnostics::SeriesKind;
use crate::error::{Error, Result};
use crate::harness::rate_slope;
use crate::partial_linear::{consistency_scan, PairsFamily, ScanRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum PairsConfig {
    Scan(ScanConfig),
}

impl PairsConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            PairsConfig::Scan(c) => c.validate(),
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            PairsConfig::Scan(c) => c.run(),
        }
    }
}

/// Good-pairs and all-pairs differencing estimators over a grid of n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub seed: u64,
    /// Replicates per model.
    pub reps: usize,
    /// Independent models per n.
    pub models: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub frac_good: f64,
    pub rho_target: f64,
    pub theta: f64,
    pub generator: SeriesKind,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 4,
            models: 100,
            n: vec![1000, 10_000, 100_000],
            alpha: 0.2,
            delta0: 0.1,
            delta1: 0.5,
            frac_good: 0.5,
            rho_target: 0.0,
            theta: 1.0,
            generator: SeriesKind::RandomWalk,
        }
    }
}

pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Rate slope of the good-pairs rmse.
    pub good_slope: f64,
    /// All-pairs median √n |bias| at the last n over the first.
    pub all_pairs_growth: f64,
}

impl ScanConfig {
    pub fn family(&self) -> PairsFamily {
        PairsFamily {
            alpha: self.alpha,
            delta0: self.delta0,
            delta1: self.delta1,
            frac_good: self.frac_good,
            rho_target: self.rho_target,
            theta: self.theta,
            generator: self.generator,
        }
    }

    fn validate(&self) -> Result<()> {
        check_reps(self.reps, 1)?;
        if self.models == 0 {
            return Err(Error::InvalidArgument("models must be positive".into()));
        }
        check_grid("n", &self.n.iter().map(|&n| n as f64).collect::<Vec<_>>())?;
        if !(self.frac_good > 0.0 && self.frac_good <= 1.0) {
            return Err(Error::InvalidArgument("frac_good must lie in (0, 1]".into()));
        }
        if self.alpha + self.delta1 <= 0.5 {
            return Err(Error::InvalidArgument("need alpha + delta1 > 1/2".into()));
        }
        if self.frac_good < 1.0 && self.alpha + self.delta0 >= 0.5 {
            return Err(Error::InvalidArgument("need alpha + delta0 < 1/2 when rough pairs are present".into()));
        }
        self.generator.spec(2).map(|_| ())
    }

    pub fn solve(&self) -> Result<ScanReport> {
        let rows = consistency_scan(&self.family(), &self.n, self.models, self.reps, self.seed)?;
        let good: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.estimator == "good-pairs").map(|r| (r.n, r.rmse)).collect();
        let all: Vec<f64> =
            rows.iter().filter(|r| r.estimator == "all-pairs").map(|r| r.median_root_n_abs_bias).collect();
        let good_slope = if good.len() >= 3 { rate_slope(&good)? } else { f64::NAN };
        let all_pairs_growth = all.last().unwrap_or(&f64::NAN) / all.first().unwrap_or(&f64::NAN);
        Ok(ScanReport { rows, good_slope, all_pairs_growth })
    }

    pub fn run(&self) -> Result<Output> {
        let rep = self.solve()?;
        let mut table = Table::new(&[
            "n",
            "estimator",
            "median_root_n_abs_bias",
            "root_n_rmse",
            "rmse",
            "median_root_n_oracle",
            "median_abs_corr",
            "good_rmse_slope",
            "all_pairs_growth",
        ]);
        let mut series = vec![
            Series { name: "good-pairs".into(), points: Vec::new() },
            Series { name: "all-pairs".into(), points: Vec::new() },
        ];
        for r in &rep.rows {
            table.push(vec![
                real(r.n),
                r.estimator.clone(),
                real(r.median_root_n_abs_bias),
                real(r.root_n_rmse),
                real(r.rmse),
                opt_real(r.median_root_n_oracle),
                real(r.median_abs_corr),
                real(rep.good_slope),
                real(rep.all_pairs_growth),
            ]);
            let s = if r.estimator == "good-pairs" { 0 } else { 1 };
            series[s].points.push((r.n, r.median_root_n_abs_bias.max(1e-12)));
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Partially linear model: scaled bias against n".into(),
                x_label: "n".into(),
                y_label: "median sqrt(n) |bias|".into(),
                log_x: true,
                log_y: true,
                series,
            }),
        })
    }
}
