use serde::{Deserialize, Serialize};

use super::{risks, FiniteGame, ProcedureKernel};
use crate::error::{Error, Result};
use crate::numerics::normal_cdf;

/// Product-action game with loss `b₁ ℓ₁(j, a₁) + b₂ ℓ₂(j, a₂)`; action
/// `(a₁, a₂)` has index `a₁ · A₂ + a₂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinedGame {
    pub game: FiniteGame,
    pub loss1: Vec<Vec<f64>>,
    pub loss2: Vec<Vec<f64>>,
    pub b1: f64,
    pub b2: f64,
}

impl CombinedGame {
    pub fn actions1(&self) -> usize {
        self.loss1[0].len()
    }

    pub fn actions2(&self) -> usize {
        self.loss2[0].len()
    }

    /// The unweighted component-`k` loss lifted to product actions.
    pub fn component(&self, k: usize) -> Result<FiniteGame> {
        let a2 = self.actions2();
        let loss = match k {
            1 => self.loss1.iter().map(|r| (0..self.game.actions).map(|a| r[a / a2]).collect()).collect(),
            2 => self.loss2.iter().map(|r| (0..self.game.actions).map(|a| r[a % a2]).collect()).collect(),
            _ => return Err(Error::InvalidArgument(format!("component must be 1 or 2, got {k}"))),
        };
        FiniteGame::new(self.game.pmf.clone(), loss, self.game.actions)
    }
}

pub fn combined_loss_game(
    pmf: &[Vec<f64>],
    loss1: &[Vec<f64>],
    loss2: &[Vec<f64>],
    b1: f64,
    b2: f64,
) -> Result<CombinedGame> {
    if loss1.len() != pmf.len() || loss2.len() != pmf.len() {
        return Err(Error::LengthMismatch { expected: pmf.len(), got: loss1.len().min(loss2.len()) });
    }
    if !(b1 >= 0.0 && b2 >= 0.0 && b1.is_finite() && b2.is_finite()) {
        return Err(Error::InvalidArgument(format!("weights must be finite and nonnegative, got {b1}, {b2}")));
    }
    let (a1, a2) = (loss1.first().map_or(0, |r| r.len()), loss2.first().map_or(0, |r| r.len()));
    let loss = loss1
        .iter()
        .zip(loss2)
        .map(|(l1, l2)| {
            if l1.len() != a1 || l2.len() != a2 {
                return Err(Error::InvalidArgument("ragged loss matrix".into()));
            }
            Ok((0..a1 * a2).map(|a| b1 * l1[a / a2] + b2 * l2[a % a2]).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let game = FiniteGame::new(pmf.to_vec(), loss, a1 * a2)?;
    Ok(CombinedGame { game, loss1: loss1.to_vec(), loss2: loss2.to_vec(), b1, b2 })
}

/// Per-parameter risks of the kernel under each unweighted component loss.
pub fn component_risks(cg: &CombinedGame, kernel: &ProcedureKernel) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((risks(&cg.component(1)?, kernel)?, risks(&cg.component(2)?, kernel)?))
}

/// Two-coordinate Gaussian sequence model on the grid `{−h, 0, h}²`, each
/// coordinate observed once with noise `sd` and binned at `{−cut, 0, cut}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceGameSpec {
    pub h: f64,
    pub sd: f64,
    pub cut: f64,
}

impl Default for SequenceGameSpec {
    fn default() -> Self {
        Self { h: 1.0, sd: 1.0, cut: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceGame {
    /// `9 × 16`; parameter `3 i₁ + i₂`, sample point `4 bin₁ + bin₂`.
    pub pmf: Vec<Vec<f64>>,
    /// Squared error on `β₁`, actions `{−h, 0, h}`.
    pub loss_first: Vec<Vec<f64>>,
    /// Squared `ℓ₂` error on `(β₁, β₂)`, actions on the same 9-point grid.
    pub loss_vector: Vec<Vec<f64>>,
}

pub fn sequence_game(spec: &SequenceGameSpec) -> Result<SequenceGame> {
    if !(spec.h > 0.0 && spec.sd > 0.0 && spec.cut > 0.0) {
        return Err(Error::InvalidArgument("h, sd and cut must be positive".into()));
    }
    let grid = [-spec.h, 0.0, spec.h];
    let cuts = [f64::NEG_INFINITY, -spec.cut, 0.0, spec.cut, f64::INFINITY];
    let bins = |b: f64| -> Vec<f64> {
        (0..4).map(|i| normal_cdf((cuts[i + 1] - b) / spec.sd) - normal_cdf((cuts[i] - b) / spec.sd)).collect()
    };
    let params: Vec<(f64, f64)> = (0..9).map(|j| (grid[j / 3], grid[j % 3])).collect();
    let pmf = params
        .iter()
        .map(|&(b1, b2)| {
            let (p1, p2) = (bins(b1), bins(b2));
            let row: Vec<f64> = (0..16).map(|s| p1[s / 4] * p2[s % 4]).collect();
            let t: f64 = row.iter().sum();
            row.into_iter().map(|v| v / t).collect()
        })
        .collect();
    let loss_first = params.iter().map(|&(b1, _)| grid.iter().map(|a| (a - b1).powi(2)).collect()).collect();
    let loss_vector = params
        .iter()
        .map(|&(b1, b2)| params.iter().map(|&(a1, a2)| (a1 - b1).powi(2) + (a2 - b2).powi(2)).collect())
        .collect();
    Ok(SequenceGame { pmf, loss_first, loss_vector })
}
