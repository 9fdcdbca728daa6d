use serde::{Deserialize, Serialize};

use super::{default_seed, real, Output, Plot, Series, Table};
use crate::error::{Error, Result};
use crate::games::{
    coin_game, coin_game_exact, combined_loss_game, fictitious_play, fictitious_play_with_progress, max_risk,
    minimax_oracle, minimax_oracle_exact, sequence_game, FiniteGame, SequenceGameSpec, Q,
};
use crate::harness::{derive_stream, map_reps};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum GamesConfig {
    Random(RandomGamesConfig),
    Coin(CoinConfig),
    Combined(CombinedConfig),
    Game(InlineGameConfig),
}

impl GamesConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            GamesConfig::Random(c) => {
                if c.count == 0 || c.min_size < 1 || c.min_size > c.max_size {
                    return Err(Error::InvalidArgument("need count >= 1 and 1 <= min_size <= max_size".into()));
                }
                check_solver(c.iters, c.epsilon)
            }
            GamesConfig::Coin(c) => {
                let p = c.p_exact()?;
                if p < Q::from_integer(0) || p > Q::from_integer(1) {
                    return Err(Error::InvalidArgument("p must lie in [0, 1]".into()));
                }
                Ok(())
            }
            GamesConfig::Combined(c) => {
                sequence_game(&c.spec)?;
                if let Some([b1, b2]) = c.weights {
                    if !(b1 >= 0.0 && b2 >= 0.0) {
                        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
                    }
                }
                Ok(())
            }
            GamesConfig::Game(c) => {
                c.game.validate()?;
                check_solver(c.iters, c.epsilon)
            }
        }
    }

    pub fn run(&self) -> Result<Output> {
        match self {
            GamesConfig::Random(c) => c.run(),
            GamesConfig::Coin(c) => c.run(),
            GamesConfig::Combined(c) => c.run(),
            GamesConfig::Game(c) => c.run(),
        }
    }
}

fn check_solver(iters: usize, eps: f64) -> Result<()> {
    if iters == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument("need iters >= 1 and epsilon > 0".into()));
    }
    Ok(())
}

/// Fictitious play against the LP oracle on random games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomGamesConfig {
    pub seed: u64,
    pub count: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub iters: usize,
    pub epsilon: f64,
    /// Iterations between recorded points of the gap curve.
    pub trace_every: usize,
}

impl Default for RandomGamesConfig {
    fn default() -> Self {
        Self { seed: default_seed(), count: 20, min_size: 2, max_size: 10, iters: 10_000, epsilon: 0.01, trace_every: 10 }
    }
}

pub struct RandomGameRow {
    pub sizes: (usize, usize, usize),
    pub oracle: f64,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<(f64, f64)>,
}

impl RandomGamesConfig {
    pub fn solve(&self) -> Result<Vec<RandomGameRow>> {
        let span = self.max_size - self.min_size + 1;
        let rows = map_reps(self.count, |g| -> Result<RandomGameRow> {
            let mut rng = derive_stream(self.seed, g as u64);
            let (j, s, a) = (
                self.min_size + rng.index(span),
                self.min_size + rng.index(span),
                self.min_size + rng.index(span),
            );
            let game = FiniteGame::random(j, s, a, &mut rng)?;
            let oracle = minimax_oracle(&game)?.value;
            let mut trace = Vec::new();
            let fp = fictitious_play_with_progress(&game, self.iters, self.epsilon, self.trace_every, |p| {
                trace.push((p.iteration as f64, p.gap.max(1e-12)))
            })?;
            Ok(RandomGameRow {
                sizes: (j, s, a),
                oracle,
                upper: fp.upper,
                lower: fp.lower,
                gap: fp.gap,
                iterations: fp.iterations,
                converged: fp.converged,
                trace,
            })
        });
        rows.into_iter().collect()
    }

    pub fn run(&self) -> Result<Output> {
        let rows = self.solve()?;
        let mut table = Table::new(&[
            "game", "params", "samples", "actions", "oracle", "fp_upper", "fp_lower", "gap", "iterations", "converged",
        ]);
        let mut series = Vec::new();
        for (g, r) in rows.into_iter().enumerate() {
            table.push(vec![
                g.to_string(),
                r.sizes.0.to_string(),
                r.sizes.1.to_string(),
                r.sizes.2.to_string(),
                real(r.oracle),
                real(r.upper),
                real(r.lower),
                real(r.gap),
                r.iterations.to_string(),
                r.converged.to_string(),
            ]);
            series.push(Series { name: format!("game {g}"), points: r.trace });
        }
        Ok(Output {
            table,
            plot: Some(Plot::Lines {
                title: "Fictitious play duality gap".into(),
                x_label: "iteration".into(),
                y_label: "upper - lower".into(),
                log_x: true,
                log_y: true,
                series,
            }),
        })
    }
}

/// Exact value of the two-coin game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoinConfig {
    pub seed: u64,
    /// Head probability of the first coin as a fraction, e.g. `"3/5"`.
    pub p: String,
}

impl Default for CoinConfig {
    fn default() -> Self {
        Self { seed: default_seed(), p: "3/5".into() }
    }
}

impl CoinConfig {
    pub fn p_exact(&self) -> Result<Q> {
        self.p.trim().parse::<Q>().map_err(|e| Error::InvalidArgument(format!("p = {:?}: {e}", self.p)))
    }

    pub fn run(&self) -> Result<Output> {
        let p = self.p_exact()?;
        let (pmf, loss) = coin_game_exact(p);
        let exact = minimax_oracle_exact(&pmf, &loss)?;
        let pf = *p.numer() as f64 / *p.denom() as f64;
        let float = minimax_oracle(&coin_game(pf))?;
        let fp = fictitious_play(&coin_game(pf), 10_000, 1e-6)?;
        let mut table = Table::new(&["p", "value_exact", "value", "lf_prior_first", "fp_upper", "fp_lower"]);
        table.push(vec![
            p.to_string(),
            exact.value.to_string(),
            real(float.value),
            exact.prior[0].to_string(),
            real(fp.upper),
            real(fp.lower),
        ]);
        Ok(Output { table, plot: None })
    }
}

/// Combined-loss game on the discretized two-coordinate sequence model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombinedConfig {
    pub seed: u64,
    pub spec: SequenceGameSpec,
    /// `[b1, b2]`; when absent each component is weighted by the reciprocal
    /// of its own minimax value.
    pub weights: Option<[f64; 2]>,
}

impl Default for CombinedConfig {
    fn default() -> Self {
        Self { seed: default_seed(), spec: SequenceGameSpec::default(), weights: None }
    }
}

pub struct CombinedReport {
    pub single: [f64; 2],
    pub combined_value: f64,
    pub component_max_risk: [f64; 2],
    pub weights: [f64; 2],
}

impl CombinedConfig {
    pub fn solve(&self) -> Result<CombinedReport> {
        let sg = sequence_game(&self.spec)?;
        let r1 = minimax_oracle(&FiniteGame::new(sg.pmf.clone(), sg.loss_first.clone(), 3)?)?.value;
        let r2 = minimax_oracle(&FiniteGame::new(sg.pmf.clone(), sg.loss_vector.clone(), 9)?)?.value;
        let [b1, b2] = self.weights.unwrap_or([1.0 / r1, 1.0 / r2]);
        let cg = combined_loss_game(&sg.pmf, &sg.loss_first, &sg.loss_vector, b1, b2)?;
        let sol = minimax_oracle(&cg.game)?;
        let m1 = max_risk(&cg.component(1)?, &sol.kernel)?;
        let m2 = max_risk(&cg.component(2)?, &sol.kernel)?;
        Ok(CombinedReport { single: [r1, r2], combined_value: sol.value, component_max_risk: [m1, m2], weights: [b1, b2] })
    }

    pub fn run(&self) -> Result<Output> {
        let r = self.solve()?;
        let mut table = Table::new(&["component", "weight", "single_value", "combined_max_risk", "ratio", "combined_value"]);
        for (k, name) in ["first-coordinate", "vector"].iter().enumerate() {
            table.push(vec![
                name.to_string(),
                real(r.weights[k]),
                real(r.single[k]),
                real(r.component_max_risk[k]),
                real(r.component_max_risk[k] / r.single[k]),
                real(r.combined_value),
            ]);
        }
        Ok(Output { table, plot: None })
    }
}

/// A user-supplied finite game solved by LP and by fictitious play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InlineGameConfig {
    pub seed: u64,
    pub game: FiniteGame,
    pub iters: usize,
    pub epsilon: f64,
}

impl Default for InlineGameConfig {
    fn default() -> Self {
        Self { seed: default_seed(), game: coin_game(0.6), iters: 10_000, epsilon: 1e-3 }
    }
}

impl InlineGameConfig {
    pub fn run(&self) -> Result<Output> {
        let sol = minimax_oracle(&self.game)?;
        let fp = fictitious_play(&self.game, self.iters, self.epsilon)?;
        let risks = crate::games::risks(&self.game, &sol.kernel)?;
        let mut table =
            Table::new(&["param", "lf_prior", "minimax_risk", "value", "fp_upper", "fp_lower", "fp_iterations"]);
        for (j, (w, r)) in sol.prior.w.iter().zip(&risks).enumerate() {
            table.push(vec![
                j.to_string(),
                real(*w),
                real(*r),
                real(sol.value),
                real(fp.upper),
                real(fp.lower),
                fp.iterations.to_string(),
            ]);
        }
        Ok(Output { table, plot: None })
    }
}
