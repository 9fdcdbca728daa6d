use serde::Serialize;

use super::{FiniteGame, PriorWeights, ProcedureKernel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FpProgress {
    pub iteration: usize,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpResult {
    /// Averaged prior with the best Bayes-risk lower bound seen.
    pub prior: PriorWeights,
    /// Averaged procedure with the best max-risk upper bound seen.
    pub kernel: ProcedureKernel,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fictitious_play(game: &FiniteGame, iters: usize, epsilon: f64) -> Result<FpResult> {
    fictitious_play_with_progress(game, iters, epsilon, 0, |_| {})
}

/// Nature best-responds with a point mass on the current max-risk parameter;
/// the statistician best-responds with the Bayes rule of nature's average.
/// `progress` fires every `every` iterations (never when `every == 0`) and
/// once at the end.
pub fn fictitious_play_with_progress(
    game: &FiniteGame,
    iters: usize,
    epsilon: f64,
    every: usize,
    mut progress: impl FnMut(&FpProgress),
) -> Result<FpResult> {
    if iters == 0 {
        return Err(Error::InvalidArgument("fictitious play needs at least one iteration".into()));
    }
    game.validate()?;
    let (nj, ns, na) = (game.params(), game.samples(), game.actions);
    let mut counts = vec![0usize; nj];
    counts[0] = 1;
    let mut choice_counts = vec![vec![0usize; na]; ns];
    let mut risk_sum = vec![0.0; nj];
    let mut post = vec![vec![0.0; na]; ns];
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut best_prior = Vec::new();
    let mut best_kernel = Vec::new();
    let mut done = 0;
    for t in 1..=iters {
        let total = t as f64;
        post.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.0));
        for (j, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let w = c as f64 / total;
            for (s, row) in post.iter_mut().enumerate() {
                let ws = w * game.pmf[j][s];
                if ws != 0.0 {
                    for (o, l) in row.iter_mut().zip(&game.loss[j]) {
                        *o += ws * l;
                    }
                }
            }
        }
        let mut lo = 0.0;
        for (s, row) in post.iter().enumerate() {
            let mut a = 0;
            for (b, v) in row.iter().enumerate() {
                if *v < row[a] {
                    a = b;
                }
            }
            lo += row[a];
            choice_counts[s][a] += 1;
            for j in 0..nj {
                risk_sum[j] += game.pmf[j][s] * game.loss[j][a];
            }
        }
        if lo > lower {
            lower = lo;
            best_prior = counts.iter().map(|&c| c as f64 / total).collect();
        }
        let mut worst = 0;
        for j in 1..nj {
            if risk_sum[j] > risk_sum[worst] {
                worst = j;
            }
        }
        let up = risk_sum[worst] / total;
        if up < upper {
            upper = up;
            best_kernel = choice_counts.iter().map(|r| r.iter().map(|&c| c as f64 / total).collect()).collect();
        }
        counts[worst] += 1;
        done = t;
        let gap = (upper - lower).max(0.0);
        if every > 0 && t % every == 0 {
            progress(&FpProgress { iteration: t, upper, lower, gap });
        }
        if gap <= epsilon {
            break;
        }
    }
    let gap = (upper - lower).max(0.0);
    progress(&FpProgress { iteration: done, upper, lower, gap });
    Ok(FpResult {
        prior: PriorWeights { w: best_prior },
        kernel: ProcedureKernel { rows: best_kernel },
        upper,
        lower,
        gap,
        iterations: done,
        converged: gap <= epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{bayes_risk, matching_game, max_risk, minimax_oracle};
    use super::*;
    use crate::harness::derive_stream;

    #[test]
    fn matching_game_converges() {
        let r = fictitious_play(&matching_game(2), 10_000, 1e-3).unwrap();
        assert!(r.converged);
        assert!((r.prior.w[0] - 0.5).abs() < 1e-2);
        assert!((r.upper - 0.5).abs() < 1e-3);
    }

    #[test]
    fn certificates_bracket_oracle() {
        let mut rng = derive_stream(21, 0);
        for _ in 0..10 {
            let g = FiniteGame::random(2 + rng.index(9), 2 + rng.index(9), 2 + rng.index(9), &mut rng).unwrap();
            let v = minimax_oracle(&g).unwrap().value;
            let r = fictitious_play(&g, 10_000, 0.01).unwrap();
            assert!(r.converged, "{:?}", (r.gap, r.iterations));
            assert!(r.lower <= v + 1e-9 && v <= r.upper + 1e-9);
            assert!((max_risk(&g, &r.kernel).unwrap() - r.upper).abs() < 1e-9);
            assert!((bayes_risk(&g, &r.prior).unwrap() - r.lower).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_nonincreasing_at_checkpoints() {
        let g = FiniteGame::random(6, 5, 7, &mut derive_stream(22, 0)).unwrap();
        let mut seen = Vec::new();
        fictitious_play_with_progress(&g, 2000, 0.0, 50, |p| seen.push(p.gap)).unwrap();
        assert!(seen.len() >= 40);
        assert!(seen.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(fictitious_play(&matching_game(2), 0, 0.1).is_err());
    }
}
