//! Configured experiments shared by the command line and the acceptance suite.
//!
//! A configuration is a JSON object carrying `"schema": 1`, an `"experiment"`
//! name and that experiment's fields (including `seed` and, where relevant,
//! `reps`). Every runner is deterministic given its configuration.

pub mod adversarial;
pub mod diagnostics;
pub mod games;
pub mod norm;
pub mod pairs;
pub mod stopping;
pub mod stratified;
pub mod wn;

use std::io::{self, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::harness::{format_real, write_table_csv, McSummary, SUMMARY_HEADER};

pub const SCHEMA: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    WnLinear,
    WnAdversarial,
    Norm,
    Stratified,
    PartialLinear,
    Stopping,
    Games,
    Diagnostics,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::WnLinear,
        Command::WnAdversarial,
        Command::Norm,
        Command::Stratified,
        Command::PartialLinear,
        Command::Stopping,
        Command::Games,
        Command::Diagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::WnLinear => "wn-linear",
            Command::WnAdversarial => "wn-adversarial",
            Command::Norm => "norm",
            Command::Stratified => "stratified",
            Command::PartialLinear => "partial-linear",
            Command::Stopping => "stopping",
            Command::Games => "games",
            Command::Diagnostics => "diagnostics",
        }
    }

    /// Experiments accepted by the subcommand; the first is the default.
    pub fn experiments(self) -> &'static [&'static str] {
        match self {
            Command::WnLinear => &["minimax-rate", "plug-in"],
            Command::WnAdversarial => &["linear", "quadratic", "bias-bound"],
            Command::Norm => &["quadratic", "norm-rate"],
            Command::Stratified => &["ht", "type-ii", "nonident"],
            Command::PartialLinear => &["scan"],
            Command::Stopping => &["fields", "regime"],
            Command::Games => &["random", "coin", "combined", "game"],
            Command::Diagnostics => &["kurtosis", "var-r", "random-walk-r", "doob"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Config {
    WnLinear(wn::WnLinearConfig),
    WnAdversarial(adversarial::AdversarialConfig),
    Norm(norm::NormConfig),
    Stratified(stratified::StratifiedConfig),
    PartialLinear(pairs::PairsConfig),
    Stopping(stopping::StoppingConfig),
    Games(games::GamesConfig),
    Diagnostics(diagnostics::DiagnosticsConfig),
}

/// A configuration object containing only the schema and experiment name,
/// so every other field takes its default.
pub fn default_config(command: Command, experiment: Option<&str>) -> Result<Map<String, Value>> {
    let exp = experiment.unwrap_or(command.experiments()[0]);
    if !command.experiments().contains(&exp) {
        return Err(Error::UnknownId(format!("{} experiment {exp}", command.name())));
    }
    let mut m = Map::new();
    m.insert("schema".into(), Value::from(SCHEMA));
    m.insert("experiment".into(), Value::from(exp));
    Ok(m)
}

fn parse<T: DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
}

/// Checks the schema version and decodes the subcommand's configuration.
pub fn load_config(command: Command, mut obj: Map<String, Value>) -> Result<Config> {
    match obj.remove("schema") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA) => {}
        Some(other) => return Err(Error::InvalidArgument(format!("config: unsupported schema {other}"))),
        None => return Err(Error::InvalidArgument("config: missing \"schema\": 1".into())),
    }
    if !obj.contains_key("experiment") {
        obj.insert("experiment".into(), Value::from(command.experiments()[0]));
    }
    let v = Value::Object(obj);
    Ok(match command {
        Command::WnLinear => Config::WnLinear(parse(v)?),
        Command::WnAdversarial => Config::WnAdversarial(parse(v)?),
        Command::Norm => Config::Norm(parse(v)?),
        Command::Stratified => Config::Stratified(parse(v)?),
        Command::PartialLinear => Config::PartialLinear(parse(v)?),
        Command::Stopping => Config::Stopping(parse(v)?),
        Command::Games => Config::Games(parse(v)?),
        Command::Diagnostics => Config::Diagnostics(parse(v)?),
    })
}

impl Config {
    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Config::WnLinear(c) => c.validate(),
            Config::WnAdversarial(c) => c.validate(),
            Config::Norm(c) => c.validate(),
            Config::Stratified(c) => c.validate(),
            Config::PartialLinear(c) => c.validate(),
            Config::Stopping(c) => c.validate(),
            Config::Games(c) => c.validate(),
            Config::Diagnostics(c) => c.validate(),
        }
    }

    /// Every field with defaults filled in, in the on-disk format.
    pub fn resolved(&self) -> Value {
        let v = match self {
            Config::WnLinear(c) => serde_json::to_value(c),
            Config::WnAdversarial(c) => serde_json::to_value(c),
            Config::Norm(c) => serde_json::to_value(c),
            Config::Stratified(c) => serde_json::to_value(c),
            Config::PartialLinear(c) => serde_json::to_value(c),
            Config::Stopping(c) => serde_json::to_value(c),
            Config::Games(c) => serde_json::to_value(c),
            Config::Diagnostics(c) => serde_json::to_value(c),
        };
        let mut out = Map::new();
        out.insert("schema".into(), Value::from(SCHEMA));
        if let Ok(Value::Object(m)) = v {
            out.extend(m);
        }
        Value::Object(out)
    }

    pub fn run(&self) -> Result<Output> {
        self.validate()?;
        match self {
            Config::WnLinear(c) => c.run(),
            Config::WnAdversarial(c) => c.run(),
            Config::Norm(c) => c.run(),
            Config::Stratified(c) => c.run(),
            Config::PartialLinear(c) => c.run(),
            Config::Stopping(c) => c.run(),
            Config::Games(c) => c.run(),
            Config::Diagnostics(c) => c.run(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        write_table_csv(out, &header, &self.rows)
    }

    /// Column `name` of row `i` parsed as a real.
    pub fn real(&self, i: usize, name: &str) -> Option<f64> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows.get(i)?.get(j)?.parse().ok()
    }
}

/// Table with the standard summary columns followed by `extra`.
pub(crate) fn summary_table(extra: &[&str]) -> Table {
    let mut h: Vec<&str> = SUMMARY_HEADER.split(',').collect();
    h.extend_from_slice(extra);
    Table::new(&h)
}

pub(crate) fn summary_cells(n: f64, s: &McSummary) -> Vec<String> {
    vec![
        format_real(n),
        s.estimator_id.clone(),
        format_real(s.mean),
        format_real(s.bias),
        format_real(s.variance),
        format_real(s.rmse),
        format_real(s.mc_se),
        s.n_reps.to_string(),
    ]
}

pub(crate) fn real(x: f64) -> String {
    format_real(x)
}

pub(crate) fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Plot {
    Lines {
        title: String,
        x_label: String,
        y_label: String,
        log_x: bool,
        log_y: bool,
        series: Vec<Series>,
    },
    Histogram {
        title: String,
        x_label: String,
        /// `counts.len() + 1` bin edges.
        edges: Vec<f64>,
        counts: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Output {
    pub table: Table,
    pub plot: Option<Plot>,
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("{name} must be nonempty and positive")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

pub(crate) fn check_reps(reps: usize, min: usize) -> Result<()> {
    if reps < min {
        return Err(Error::InvalidArgument(format!("reps must be at least {min}, got {reps}")));
    }
    Ok(())
}

fn default_seed() -> u64 {
    1
}
