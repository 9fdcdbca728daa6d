//! Finite statistical games: parameters with pmfs over a finite sample space,
//! a finite action set, and a bounded loss matrix.

mod combined;
mod fictitious;
pub mod lp;

pub use combined::{combined_loss_game, component_risks, sequence_game, CombinedGame, SequenceGameSpec};
pub use fictitious::{fictitious_play, fictitious_play_with_progress, FpProgress, FpResult};
pub use lp::{maximize, LpScalar, LpSolution, Q};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RngStream;
use num_traits::{One, Zero};

pub const SIMPLEX_TOL: f64 = 1e-12;
pub const ORACLE_SIZE_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteGame {
    /// `J × S`, one distribution per parameter.
    pub pmf: Vec<Vec<f64>>,
    /// `J × A`.
    pub loss: Vec<Vec<f64>>,
    pub actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_c: Option<f64>,
}

fn check_simplex(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL * row.len().max(1) as f64 {
        return Err(Error::InvalidArgument(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl FiniteGame {
    pub fn new(pmf: Vec<Vec<f64>>, loss: Vec<Vec<f64>>, actions: usize) -> Result<Self> {
        let g = Self { pmf, loss, actions, lipschitz_c: None };
        g.validate()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("game json: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pmf.is_empty() || self.actions == 0 {
            return Err(Error::InvalidArgument("game needs at least one parameter and one action".into()));
        }
        let s = self.pmf[0].len();
        if s == 0 {
            return Err(Error::InvalidArgument("empty sample space".into()));
        }
        if self.loss.len() != self.pmf.len() {
            return Err(Error::LengthMismatch { expected: self.pmf.len(), got: self.loss.len() });
        }
        for (j, (p, l)) in self.pmf.iter().zip(&self.loss).enumerate() {
            if p.len() != s {
                return Err(Error::LengthMismatch { expected: s, got: p.len() });
            }
            if l.len() != self.actions {
                return Err(Error::LengthMismatch { expected: self.actions, got: l.len() });
            }
            check_simplex(p, &format!("pmf row {j}"))?;
            if l.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("loss row {j} must be finite and nonnegative")));
            }
        }
        if let Some(c) = self.lipschitz_c {
            if !(c >= 0.0) {
                return Err(Error::InvalidArgument(format!("lipschitz constant must be nonnegative, got {c}")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> usize {
        self.pmf.len()
    }

    pub fn samples(&self) -> usize {
        self.pmf[0].len()
    }

    /// Largest loss entry, `L_n`.
    pub fn loss_bound(&self) -> f64 {
        self.loss.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// Dirichlet(1) pmf rows and U(0, 1) losses.
    pub fn random(j: usize, s: usize, a: usize, rng: &mut RngStream) -> Result<Self> {
        let pmf = (0..j)
            .map(|_| {
                let e: Vec<f64> = (0..s).map(|_| rng.exp1()).collect();
                let t: f64 = e.iter().sum();
                e.iter().map(|x| x / t).collect()
            })
            .collect();
        let loss = (0..j).map(|_| (0..a).map(|_| rng.uniform()).collect()).collect();
        Self::new(pmf, loss, a)
    }

    /// `Σ_j w_j p_j(s) L[j][a]` as an `S × A` table.
    pub fn posterior_loss(&self, prior: &PriorWeights) -> Result<Vec<Vec<f64>>> {
        if prior.w.len() != self.params() {
            return Err(Error::LengthMismatch { expected: self.params(), got: prior.w.len() });
        }
        let mut out = vec![vec![0.0; self.actions]; self.samples()];
        for (j, &w) in prior.w.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (s, row) in out.iter_mut().enumerate() {
                let ws = w * self.pmf[j][s];
                for (o, l) in row.iter_mut().zip(&self.loss[j]) {
                    *o += ws * l;
                }
            }
        }
        Ok(out)
    }

    /// Copy with `t` of row `j`'s mass moved from sample point `from` to `to`.
    pub fn perturb_row(&self, j: usize, from: usize, to: usize, t: f64) -> Result<Self> {
        if j >= self.params() || from >= self.samples() || to >= self.samples() {
            return Err(Error::InvalidArgument("perturbation index out of range".into()));
        }
        if !(t >= 0.0 && t <= self.pmf[j][from]) {
            return Err(Error::InvalidArgument(format!("cannot move {t} from a cell of mass {}", self.pmf[j][from])));
        }
        let mut g = self.clone();
        g.pmf[j][from] -= t;
        g.pmf[j][to] += t;
        Ok(g)
    }
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorWeights {
    pub w: Vec<f64>,
}

impl PriorWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        check_simplex(&w, "prior")?;
        Ok(Self { w })
    }

    pub fn uniform(j: usize) -> Self {
        Self { w: vec![1.0 / j as f64; j] }
    }

    pub fn point(j: usize, at: usize) -> Self {
        let mut w = vec![0.0; j];
        w[at] = 1.0;
        Self { w }
    }
}

/// Row `s` is a distribution over actions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcedureKernel {
    pub rows: Vec<Vec<f64>>,
}

impl ProcedureKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (s, r) in rows.iter().enumerate() {
            check_simplex(r, &format!("kernel row {s}"))?;
        }
        Ok(Self { rows })
    }

    pub fn deterministic(choice: &[usize], actions: usize) -> Self {
        let rows = choice
            .iter()
            .map(|&a| {
                let mut r = vec![0.0; actions];
                r[a] = 1.0;
                r
            })
            .collect();
        Self { rows }
    }

    pub fn uniform(samples: usize, actions: usize) -> Self {
        Self { rows: vec![vec![1.0 / actions as f64; actions]; samples] }
    }

    pub fn random(samples: usize, actions: usize, rng: &mut RngStream) -> Self {
        let rows = (0..samples)
            .map(|_| {
                let e: Vec<f64> = (0..actions).map(|_| rng.exp1()).collect();
                let t: f64 = e.iter().sum();
                e.iter().map(|x| x / t).collect()
            })
            .collect();
        Self { rows }
    }
}

fn argmin_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, v) in row.iter().enumerate() {
        if *v < row[best] {
            best = a;
        }
    }
    best
}

/// Per sample point, the action with least posterior expected loss (lowest index on ties).
pub fn bayes_procedure(game: &FiniteGame, prior: &PriorWeights) -> Result<ProcedureKernel> {
    let post = game.posterior_loss(prior)?;
    let choice: Vec<usize> = post.iter().map(|r| argmin_lowest(r)).collect();
    Ok(ProcedureKernel::deterministic(&choice, game.actions))
}

/// `Σ_s min_a Σ_j w_j p_j(s) L[j][a]`, a lower bound on the minimax value.
pub fn bayes_risk(game: &FiniteGame, prior: &PriorWeights) -> Result<f64> {
    Ok(game.posterior_loss(prior)?.iter().map(|r| r[argmin_lowest(r)]).sum())
}

fn check_kernel(game: &FiniteGame, kernel: &ProcedureKernel) -> Result<()> {
    if kernel.rows.len() != game.samples() {
        return Err(Error::LengthMismatch { expected: game.samples(), got: kernel.rows.len() });
    }
    if let Some(r) = kernel.rows.iter().find(|r| r.len() != game.actions) {
        return Err(Error::LengthMismatch { expected: game.actions, got: r.len() });
    }
    Ok(())
}

pub fn risk(game: &FiniteGame, kernel: &ProcedureKernel, j: usize) -> Result<f64> {
    check_kernel(game, kernel)?;
    if j >= game.params() {
        return Err(Error::InvalidArgument(format!("parameter {j} out of range")));
    }
    let mut acc = 0.0;
    for (p, k) in game.pmf[j].iter().zip(&kernel.rows) {
        if *p != 0.0 {
            acc += p * k.iter().zip(&game.loss[j]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(acc)
}

pub fn risks(game: &FiniteGame, kernel: &ProcedureKernel) -> Result<Vec<f64>> {
    (0..game.params()).map(|j| risk(game, kernel, j)).collect()
}

pub fn max_risk(game: &FiniteGame, kernel: &ProcedureKernel) -> Result<f64> {
    Ok(risks(game, kernel)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxSolution<T> {
    pub value: T,
    /// `S × A` minimax kernel.
    pub kernel: Vec<Vec<T>>,
    /// Least-favorable prior.
    pub prior: Vec<T>,
}

/// Exact value of the game between priors and randomized procedures.
///
/// LP over `(w, u)`: maximize `Σ_s u_s` with `u_s ≤ Σ_j w_j p_j(s) L[j][a]`
/// for every `(s, a)` and `Σ w ≤ 1`. Dual prices on the `(s, a)` rows,
/// normalized per `s`, give the minimax kernel.
pub fn minimax_lp<T: LpScalar>(pmf: &[Vec<T>], loss: &[Vec<T>]) -> Result<MinimaxSolution<T>> {
    let j = pmf.len();
    let s = pmf.first().map_or(0, |r| r.len());
    let a = loss.first().map_or(0, |r| r.len());
    if j == 0 || s == 0 || a == 0 {
        return Err(Error::InvalidArgument("empty game".into()));
    }
    if loss.len() != j {
        return Err(Error::LengthMismatch { expected: j, got: loss.len() });
    }
    let size = j * s * a;
    if size > ORACLE_SIZE_LIMIT {
        return Err(Error::SizeGuard { size, limit: ORACLE_SIZE_LIMIT });
    }
    let nv = j + s;
    let mut rows = Vec::with_capacity(s * a + 1);
    for si in 0..s {
        for ai in 0..a {
            let mut r = vec![T::zero(); nv];
            for jj in 0..j {
                r[jj] = -(pmf[jj][si].clone() * loss[jj][ai].clone());
            }
            r[j + si] = T::one();
            rows.push(r);
        }
    }
    let mut last = vec![T::zero(); nv];
    last[..j].iter_mut().for_each(|v| *v = T::one());
    rows.push(last);
    let mut b = vec![T::zero(); s * a];
    b.push(T::one());
    let mut c = vec![T::zero(); nv];
    c[j..].iter_mut().for_each(|v| *v = T::one());
    let sol = maximize(&c, &rows, &b)?;

    let mut kernel = Vec::with_capacity(s);
    for si in 0..s {
        let y: Vec<T> = sol.y[si * a..(si + 1) * a].to_vec();
        let tot = y.iter().fold(T::zero(), |acc, v| acc + v.clone());
        if tot.positive() {
            kernel.push(y.into_iter().map(|v| v / tot.clone()).collect());
        } else {
            let mut r = vec![T::zero(); a];
            r[0] = T::one();
            kernel.push(r);
        }
    }
    let w: Vec<T> = sol.x[..j].to_vec();
    let tot = w.iter().fold(T::zero(), |acc, v| acc + v.clone());
    let prior = if tot.positive() {
        w.into_iter().map(|v| v / tot.clone()).collect()
    } else {
        let mut p = vec![T::zero(); j];
        p[0] = T::one();
        p
    };
    Ok(MinimaxSolution { value: sol.value, kernel, prior })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimaxOracle {
    pub value: f64,
    pub kernel: ProcedureKernel,
    pub prior: PriorWeights,
}

pub fn minimax_oracle(game: &FiniteGame) -> Result<MinimaxOracle> {
    let sol = minimax_lp(&game.pmf, &game.loss)?;
    let clean = |v: Vec<f64>| -> Vec<f64> {
        let v: Vec<f64> = v.into_iter().map(|x| x.max(0.0)).collect();
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    };
    Ok(MinimaxOracle {
        value: sol.value,
        kernel: ProcedureKernel { rows: sol.kernel.into_iter().map(clean).collect() },
        prior: PriorWeights { w: clean(sol.prior) },
    })
}

/// Exact rational oracle; entries must be given as rationals.
pub fn minimax_oracle_exact(pmf: &[Vec<Q>], loss: &[Vec<Q>]) -> Result<MinimaxSolution<Q>> {
    minimax_lp(pmf, loss)
}

/// Matching game without data: one sample point, loss `1{j ≠ a}`.
pub fn matching_game(j: usize) -> FiniteGame {
    let loss = (0..j).map(|r| (0..j).map(|a| if r == a { 0.0 } else { 1.0 }).collect()).collect();
    FiniteGame { pmf: vec![vec![1.0]; j], loss, actions: j, lipschitz_c: None }
}

/// Two coins `(p, 1 − p)` and `(1 − p, p)` seen once, 0-1 loss.
pub fn coin_game(p: f64) -> FiniteGame {
    FiniteGame {
        pmf: vec![vec![p, 1.0 - p], vec![1.0 - p, p]],
        loss: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        actions: 2,
        lipschitz_c: None,
    }
}

pub fn coin_game_exact(p: Q) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    let one = Q::one();
    let zero = Q::zero();
    (
        vec![vec![p, one - p], vec![one - p, p]],
        vec![vec![zero, one], vec![one, zero]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::derive_stream;
    use proptest::prelude::*;

    #[test]
    fn single_param_bayes_rule() {
        let g = FiniteGame::new(vec![vec![0.3, 0.7]], vec![vec![2.0, 0.5, 0.5, 1.0]], 4).unwrap();
        let k = bayes_procedure(&g, &PriorWeights::uniform(1)).unwrap();
        assert_eq!(k, ProcedureKernel::deterministic(&[1, 1], 4));
    }

    #[test]
    fn tie_goes_to_lowest_action() {
        let k = bayes_procedure(&matching_game(2), &PriorWeights::uniform(2)).unwrap();
        assert_eq!(k.rows, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn posterior_by_hand() {
        // p_1 = (0.8, 0.2), p_2 = (0.3, 0.7), w = (0.25, 0.75), 0-1 loss.
        let g = FiniteGame::new(
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            2,
        )
        .unwrap();
        let w = PriorWeights::new(vec![0.25, 0.75]).unwrap();
        // s = 0: loss(a=0) = 0.75·0.3 = 0.225, loss(a=1) = 0.25·0.8 = 0.2 → a = 1
        // s = 1: loss(a=0) = 0.75·0.7 = 0.525, loss(a=1) = 0.25·0.2 = 0.05 → a = 1
        let post = g.posterior_loss(&w).unwrap();
        assert!((post[0][0] - 0.225).abs() < 1e-15 && (post[0][1] - 0.2).abs() < 1e-15);
        assert_eq!(bayes_procedure(&g, &w).unwrap(), ProcedureKernel::deterministic(&[1, 1], 2));
        assert!((bayes_risk(&g, &w).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn risk_examples() {
        let z = FiniteGame::new(vec![vec![0.5, 0.5]; 2], vec![vec![0.0; 3]; 2], 3).unwrap();
        assert_eq!(max_risk(&z, &ProcedureKernel::uniform(2, 3)).unwrap(), 0.0);
        let reveal = FiniteGame::new(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            matching_game(3).loss,
            3,
        )
        .unwrap();
        let k = bayes_procedure(&reveal, &PriorWeights::uniform(3)).unwrap();
        assert_eq!(max_risk(&reveal, &k).unwrap(), 0.0);
        let m = matching_game(2);
        assert_eq!(risks(&m, &ProcedureKernel::uniform(1, 2)).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn validation() {
        assert!(FiniteGame::new(vec![vec![0.5, 0.4]], vec![vec![1.0]], 1).is_err());
        assert!(FiniteGame::new(vec![vec![1.0]], vec![vec![-1.0]], 1).is_err());
        assert!(FiniteGame::new(vec![vec![1.0]], vec![vec![1.0, 2.0]], 1).is_err());
        let g = FiniteGame::from_json(r#"{"pmf": [[0.5, 0.5]], "loss": [[1, 0]], "actions": 2}"#).unwrap();
        assert_eq!(g.samples(), 2);
        assert!(FiniteGame::from_json(r#"{"pmf": [[0.5]], "loss": [[1]], "actions": 1}"#).is_err());
    }

    #[test]
    fn oracle_known_values() {
        assert!((minimax_oracle(&matching_game(2)).unwrap().value - 0.5).abs() < 1e-12);
        let o = minimax_oracle(&coin_game(0.6)).unwrap();
        assert!((o.value - 0.4).abs() < 1e-12);
        // every w₁ ∈ [0.4, 0.6] is least favorable here, (1/2, 1/2) among them
        assert!((bayes_risk(&coin_game(0.6), &o.prior).unwrap() - 0.4).abs() < 1e-12);
        assert!((bayes_risk(&coin_game(0.6), &PriorWeights::uniform(2)).unwrap() - 0.4).abs() < 1e-12);
        let (p, l) = coin_game_exact(Q::new(3, 5));
        let e = minimax_oracle_exact(&p, &l).unwrap();
        assert_eq!(e.value, Q::new(2, 5));
        assert!(e.prior[0] >= Q::new(2, 5) && e.prior[0] <= Q::new(3, 5));
    }

    #[test]
    fn coin_game_by_enumeration() {
        // all 4 deterministic rules and the mixed extension attain at least 0.4
        let g = coin_game(0.6);
        let mut best_pure = f64::INFINITY;
        for c in 0..4usize {
            let k = ProcedureKernel::deterministic(&[c & 1, c >> 1], 2);
            best_pure = best_pure.min(max_risk(&g, &k).unwrap());
        }
        assert!((best_pure - 0.4).abs() < 1e-12);
        assert!((bayes_risk(&g, &PriorWeights::uniform(2)).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn oracle_kernel_attains_value() {
        let mut rng = derive_stream(11, 0);
        for _ in 0..20 {
            let (j, s, a) = (2 + rng.index(9), 2 + rng.index(9), 2 + rng.index(9));
            let g = FiniteGame::random(j, s, a, &mut rng).unwrap();
            let o = minimax_oracle(&g).unwrap();
            assert!((max_risk(&g, &o.kernel).unwrap() - o.value).abs() < 1e-9);
            assert!((bayes_risk(&g, &o.prior).unwrap() - o.value).abs() < 1e-9);
        }
    }

    #[test]
    fn size_guard() {
        let g = FiniteGame::new(vec![vec![1.0]; 101], vec![vec![0.0; 100]; 101], 100).unwrap();
        assert!(matches!(minimax_oracle(&g), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn tv_lipschitz_transfer() {
        let mut rng = derive_stream(12, 0);
        for _ in 0..50 {
            let g = FiniteGame::random(4, 5, 3, &mut rng).unwrap();
            let k = ProcedureKernel::random(5, 3, &mut rng);
            let j = rng.index(4);
            let (from, to) = (rng.index(5), rng.index(5));
            let t = g.pmf[j][from] * rng.uniform();
            let h = g.perturb_row(j, from, to, t).unwrap();
            let tv = tv_distance(&g.pmf[j], &h.pmf[j]);
            let d = (max_risk(&g, &k).unwrap() - max_risk(&h, &k).unwrap()).abs();
            let c = g.lipschitz_c.unwrap_or(0.0);
            assert!(d <= (c + g.loss_bound()) * tv + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn weak_duality(seed in 0u64..10_000, j in 2usize..6, s in 1usize..6, a in 2usize..6) {
            let mut rng = derive_stream(seed, 1);
            let g = FiniteGame::random(j, s, a, &mut rng).unwrap();
            let v = minimax_oracle(&g).unwrap().value;
            let e: Vec<f64> = (0..j).map(|_| rng.exp1()).collect();
            let t: f64 = e.iter().sum();
            let w = PriorWeights { w: e.iter().map(|x| x / t).collect() };
            let k = ProcedureKernel::random(s, a, &mut rng);
            prop_assert!(bayes_risk(&g, &w).unwrap() <= v + 1e-9);
            prop_assert!(v <= max_risk(&g, &k).unwrap() + 1e-9);
        }

        #[test]
        fn bayes_rule_is_optimal_for_its_prior(seed in 0u64..10_000) {
            let mut rng = derive_stream(seed, 2);
            let g = FiniteGame::random(4, 5, 4, &mut rng).unwrap();
            let w = PriorWeights { w: vec![0.1, 0.2, 0.3, 0.4] };
            let b = bayes_procedure(&g, &w).unwrap();
            let avg = |k: &ProcedureKernel| -> f64 {
                risks(&g, k).unwrap().iter().zip(&w.w).map(|(r, w)| r * w).sum()
            };
            let rb = avg(&b);
            for _ in 0..100 {
                prop_assert!(rb <= avg(&ProcedureKernel::random(5, 4, &mut rng)) + 1e-12);
            }
        }
    }
}
