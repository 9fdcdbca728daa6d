mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use coda_lab::experiments::{default_config, load_config, Command};
use coda_lab::Error;
use serde_json::{Map, Value};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Monte Carlo laboratory for frequentist and Bayesian estimation in high
/// dimensions.
#[derive(Parser, Debug)]
#[command(name = "coda-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Linear functionals in the sequence model (minimax-rate, plug-in)
    WnLinear(RunArgs),
    /// Adversarial functionals and the bounded-prior bias bound (linear, quadratic, bias-bound)
    WnAdversarial(RunArgs),
    /// Quadratic functionals and norms (quadratic, norm-rate)
    Norm(RunArgs),
    /// Stratified sampling with known response probabilities (ht, type-ii, nonident)
    Stratified(RunArgs),
    /// Differencing estimators in the partially linear model (scan)
    PartialLinear(RunArgs),
    /// Estimation with coordinate-specific stopping times (fields, regime)
    Stopping(RunArgs),
    /// Finite decision games (random, coin, combined, game)
    Games(RunArgs),
    /// Prior null sets, spurious correlation and posterior concentration (kurtosis, var-r, random-walk-r, doob)
    Diagnostics(RunArgs),
}

impl Sub {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::WnLinear(a) => (Command::WnLinear, a),
            Sub::WnAdversarial(a) => (Command::WnAdversarial, a),
            Sub::Norm(a) => (Command::Norm, a),
            Sub::Stratified(a) => (Command::Stratified, a),
            Sub::PartialLinear(a) => (Command::PartialLinear, a),
            Sub::Stopping(a) => (Command::Stopping, a),
            Sub::Games(a) => (Command::Games, a),
            Sub::Diagnostics(a) => (Command::Diagnostics, a),
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON configuration file (must contain "schema": 1)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment name; overrides the one in the config file
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory for results.csv and plot.svg
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write plot.svg
    #[arg(long)]
    plot: bool,
    /// Worker threads; results do not depend on this
    #[arg(long, env = "CODA_LAB_THREADS")]
    threads: Option<usize>,
    /// Validate the configuration and exit
    #[arg(long)]
    dry_run: bool,
    /// Override a config field, e.g. --set population.size=500 (value parsed as JSON)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set k=VALUE
    #[arg(long)]
    k: Option<String>,
    /// Shorthand for --set n=VALUE
    #[arg(long)]
    n: Option<String>,
    /// JSON file with a finite game, stored under the "game" key
    #[arg(long)]
    game: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

fn set_path(obj: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), Failure> {
    let mut parts = key.split('.').peekable();
    let mut cur = obj;
    while let Some(p) = parts.next() {
        if p.is_empty() {
            return Err(Failure::Config(format!("bad key `{key}`")));
        }
        if parts.peek().is_none() {
            cur.insert(p.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = next
            .as_object_mut()
            .ok_or_else(|| Failure::Config(format!("`{p}` in `{key}` is not an object")))?;
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn build_config(command: Command, args: &RunArgs) -> Result<Map<String, Value>, Failure> {
    let mut obj = match &args.config {
        Some(path) => match read_json(path)? {
            Value::Object(m) => m,
            _ => return Err(Failure::Config(format!("{}: expected a JSON object", path.display()))),
        },
        None => default_config(command, args.experiment.as_deref())?,
    };
    if let Some(e) = &args.experiment {
        obj.insert("experiment".into(), Value::from(e.as_str()));
    }
    if let Some(s) = args.seed {
        obj.insert("seed".into(), Value::from(s));
    }
    if let Some(r) = args.reps {
        obj.insert("reps".into(), Value::from(r));
    }
    if let Some(k) = &args.k {
        obj.insert("k".into(), parse_value(k));
    }
    if let Some(n) = &args.n {
        obj.insert("n".into(), parse_value(n));
    }
    if let Some(g) = &args.game {
        obj.insert("game".into(), read_json(g)?);
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        set_path(&mut obj, k.trim(), parse_value(v.trim()))?;
    }
    Ok(obj)
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(Failure::Config("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::info!("built without the parallel feature; --threads {t} ignored");
    Ok(())
}

fn run(command: Command, args: &RunArgs) -> Result<(), Failure> {
    let obj = build_config(command, args)?;
    let config = load_config(command, obj)?;
    config.validate()?;
    if args.dry_run {
        println!("ok {}", config.resolved());
        return Ok(());
    }
    configure_threads(args.threads)?;
    let started = Instant::now();
    let output = config.run()?;
    log::info!("{} finished in {:.2?}", command.name(), started.elapsed());

    fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let mut csv = Vec::new();
    output.table.write_csv(&mut csv).map_err(|e| Failure::Io(e.to_string()))?;
    let csv_path = args.out.join("results.csv");
    fs::write(&csv_path, &csv).map_err(|e| Failure::Io(format!("{}: {e}", csv_path.display())))?;
    print!("{}", String::from_utf8_lossy(&csv));
    if args.plot {
        match &output.plot {
            Some(p) => {
                let path = args.out.join("plot.svg");
                fs::write(&path, svg::render(p)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            }
            None => log::warn!("this experiment has no plot"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical error: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys() {
        let mut m = Map::new();
        set_path(&mut m, "population.size", Value::from(5)).unwrap();
        set_path(&mut m, "population.g_lo", Value::from(0.1)).unwrap();
        assert_eq!(m["population"]["size"], 5);
        assert_eq!(m["population"]["g_lo"], 0.1);
        m.insert("x".into(), Value::from(1));
        assert!(set_path(&mut m, "x.y", Value::Null).is_err());
    }

    #[test]
    fn values_fall_back_to_strings() {
        assert_eq!(parse_value("1e3"), Value::from(1000.0));
        assert_eq!(parse_value("[5, 50]"), serde_json::json!([5, 50]));
        assert_eq!(parse_value("3/5"), Value::from("3/5"));
    }
}
