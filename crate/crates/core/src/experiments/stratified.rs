use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_grid, check_reps, default_seed, one_or_many, real, summary_cells, summary_table, Output, Plot, Series, Table};
use crate::error::{Error, Result};
use crate::harness::{derive_stream, map_reps, rate_slope, run_grid, Estimate, ExperimentSpec, GridRow, Model, Registry, RngStream, SETUP_STREAM};
use crate::numerics::median;
use crate::stratified::{
    fit_tau, ht_estimate, nonident_construct, sample_strat, theta_star_bayes, BetaLaw, NonidentModel, StratDraw,
    StratModel,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum StratifiedConfig {
    Ht(HtConfig),
    TypeIi(TypeIiConfig),
    Nonident(NonidentConfig),
}

impl StratifiedConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            StratifiedConfig::Ht(c) => {
                check_reps(c.reps, 2)?;
                check_grid("n", &c.n)?;
                c.population.check()
            }
            StratifiedConfig::TypeIi(c) => {
                check_reps(c.reps, 2)?;
                check_grid("n", &c.n)?;
                c.population.check()
            }
            StratifiedConfig::Nonident(c) => {
                if c.m == 0 || c.m % 2 == 1 {
                    return Err(Error::InvalidArgument("m must be even and positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            StratifiedConfig::Ht(c) => c.run(),
            StratifiedConfig::TypeIi(c) => c.run(),
            StratifiedConfig::Nonident(c) => c.run(),
        }
    }
}

/// Finite population drawn once per run from the setup stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Population {
    pub size: usize,
    pub g_lo: f64,
    pub g_hi: f64,
    pub beta: BetaLaw,
}

impl Default for Population {
    fn default() -> Self {
        Self { size: 1000, g_lo: 0.2, g_hi: 0.9, beta: BetaLaw::Uniform }
    }
}

impl Population {
    fn check(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidArgument("population size must be positive".into()));
        }
        if !(self.g_lo > 0.0 && self.g_lo <= self.g_hi && self.g_hi <= 1.0) {
            return Err(Error::InvalidArgument("need 0 < g_lo <= g_hi <= 1".into()));
        }
        Ok(())
    }

    pub fn build(&self, rng: &mut RngStream) -> Result<StratModel> {
        StratModel::random(self.size, self.g_lo, self.g_hi, self.beta, rng)
    }
}

struct StratData {
    draw: StratDraw,
    theta: f64,
    g: Arc<Vec<f64>>,
}

struct PopulationModel {
    model: StratModel,
    g: Arc<Vec<f64>>,
    theta: f64,
}

impl Model<StratData> for PopulationModel {
    fn draw(&self, n: f64, rng: &mut RngStream) -> Result<StratData> {
        Ok(StratData { draw: sample_strat(&self.model, n as usize, rng)?, theta: self.theta, g: self.g.clone() })
    }
}

fn registry(pop: Population) -> Registry<StratData> {
    Registry::new()
        .model("population", move |_, rng| {
            let model = pop.build(rng)?;
            let theta = model.theta();
            let g = Arc::new(model.g.clone());
            Ok(Box::new(PopulationModel { model, g, theta }) as Box<dyn Model<StratData>>)
        })
        .estimator("ht", |d: &StratData, _| Ok(Estimate { value: ht_estimate(&d.draw, &d.g)?, truth: d.theta }))
        .estimator("type-ii-bayes", |d: &StratData, _| {
            let fit = fit_tau(&d.draw, &d.g)?;
            Ok(Estimate { value: theta_star_bayes(fit.tau, &d.g), truth: d.theta })
        })
}

/// Horvitz-Thompson error over a grid of sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HtConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub population: Population,
    /// Also report the hyperprior estimator.
    pub with_bayes: bool,
}

impl Default for HtConfig {
    fn default() -> Self {
        Self { seed: default_seed(), reps: 2000, n: vec![1e2, 1e3, 1e4], population: Population::default(), with_bayes: false }
    }
}

pub struct HtReport {
    pub rows: Vec<GridRow>,
    pub slope: f64,
}

impl HtConfig {
    pub fn solve(&self) -> Result<HtReport> {
        let mut ids = vec!["ht".to_string()];
        if self.with_bayes {
            ids.push("type-ii-bayes".into());
        }
        let spec = ExperimentSpec {
            model_id: "population".into(),
            model_params: Default::default(),
            estimator_ids: ids,
            n_grid: self.n.clone(),
            n_reps: self.reps,
            seed: self.seed,
        };
        let rows = run_grid(&spec, &registry(self.population.clone()))?;
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.summary.estimator_id == "ht").map(|r| (r.n, r.summary.rmse)).collect();
        let slope = if pts.len() >= 3 { rate_slope(&pts)? } else { f64::NAN };
        Ok(HtReport { rows, slope })
    }

    pub fn run(&self) -> Result<Output> {
        let rep = self.solve()?;
        let mut table = summary_table(&["rmse_slope"]);
        let mut series: Vec<Series> = Vec::new();
        for r in &rep.rows {
            let mut cells = summary_cells(r.n, &r.summary);
            cells.push(real(rep.slope));
            table.push(cells);
            match series.iter_mut().find(|s| s.name == r.summary.estimator_id) {
                Some(s) => s.points.push((r.n, r.summary.rmse)),
                None => series.push(Series { name: r.summary.estimator_id.clone(), points: vec![(r.n, r.summary.rmse)] }),
            }
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Stratified sampling: rmse against n".into(),
                x_label: "n".into(),
                y_label: "rmse".into(),
                log_x: true,
                log_y: true,
                series,
            }),
        })
    }
}

/// Gap between the hyperprior estimator and Horvitz-Thompson.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TypeIiConfig {
    pub seed: u64,
    pub reps: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<f64>,
    pub population: Population,
}

impl Default for TypeIiConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            reps: 1000,
            n: vec![1e3, 1e4, 1e5],
            population: Population { beta: BetaLaw::Marginal { tau: 0.3 }, ..Population::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub n: f64,
    pub median_root_n_gap: f64,
    pub median_tau_hat: f64,
    pub boundary_fraction: f64,
}

impl TypeIiConfig {
    pub fn solve(&self) -> Result<Vec<GapRow>> {
        let model = self.population.build(&mut derive_stream(self.seed, SETUP_STREAM))?;
        self.n
            .iter()
            .map(|&n| {
                let per = map_reps(self.reps, |r| -> Result<(f64, f64, bool)> {
                    let d = sample_strat(&model, n as usize, &mut derive_stream(self.seed, r as u64))?;
                    let fit = fit_tau(&d, &model.g)?;
                    let gap = theta_star_bayes(fit.tau, &model.g) - ht_estimate(&d, &model.g)?;
                    Ok((n.sqrt() * gap.abs(), fit.tau, fit.boundary))
                });
                let per = per.into_iter().collect::<Result<Vec<_>>>()?;
                let gaps: Vec<f64> = per.iter().map(|p| p.0).collect();
                let taus: Vec<f64> = per.iter().map(|p| p.1).collect();
                Ok(GapRow {
                    n,
                    median_root_n_gap: median(&gaps),
                    median_tau_hat: median(&taus),
                    boundary_fraction: per.iter().filter(|p| p.2).count() as f64 / self.reps as f64,
                })
            })
            .collect()
    }

    pub fn run(&self) -> Result<Output> {
        let rows = self.solve()?;
        let mut table = Table::new(&["n", "median_root_n_gap", "median_tau_hat", "boundary_fraction", "reps"]);
        for r in &rows {
            table.push(vec![
                real(r.n),
                real(r.median_root_n_gap),
                real(r.median_tau_hat),
                real(r.boundary_fraction),
                self.reps.to_string(),
            ]);
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Hyperprior estimator minus Horvitz-Thompson".into(),
                x_label: "n".into(),
                y_label: "median sqrt(n) |gap|".into(),
                log_x: true,
                log_y: false,
                series: vec![Series {
                    name: "median sqrt(n) |gap|".into(),
                    points: rows.iter().map(|r| (r.n, r.median_root_n_gap)).collect(),
                }],
            }),
        })
    }
}

/// Exact cell laws of the two indistinguishable mean functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonidentConfig {
    pub seed: u64,
    pub m: usize,
}

impl Default for NonidentConfig {
    fn default() -> Self {
        Self { seed: default_seed(), m: 8 }
    }
}

impl NonidentConfig {
    pub fn run(&self) -> Result<Output> {
        let c = nonident_construct(self.m, &mut derive_stream(self.seed, 0))?;
        let mut table = Table::new(&[
            "cell",
            "r1_z1_constant",
            "r1_z1_equals_g",
            "r1_z0_constant",
            "r1_z0_equals_g",
            "r0_constant",
            "r0_equals_g",
            "theta_constant",
            "theta_equals_g",
        ]);
        let (tc, tg) = (c.theta(NonidentModel::Constant), c.theta(NonidentModel::EqualsG));
        for j in 0..self.m {
            let a = c.cell_law(j, NonidentModel::Constant);
            let b = c.cell_law(j, NonidentModel::EqualsG);
            table.push(vec![
                j.to_string(),
                a.r1_z1.to_string(),
                b.r1_z1.to_string(),
                a.r1_z0.to_string(),
                b.r1_z0.to_string(),
                a.r0.to_string(),
                b.r0.to_string(),
                tc.to_string(),
                tg.to_string(),
            ]);
        }
        Ok(Output { table, plot: None })
    }
}
