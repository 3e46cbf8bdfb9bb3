//! Option resolution: command-line flags, then `LEVELCI_*` environment
//! variables (both handled by clap), then a `key = value` config file, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use levelci::experiments::Scale;
use levelci::inference::{Method, DEFAULT_REPLICATES};
use levelci::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "levelci", version, about = "Density level sets with bootstrap confidence sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Levelset,
    Confset,
    Visualize,
    Coverage,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the level set {x : p̂_h(x) = λ}.
    Levelset(Flags),
    /// Bootstrap confidence sets for the level set, with pointwise regions.
    Confset(Flags),
    /// Mode-cluster graph across levels (tomographic or confidence overlay).
    Visualize(Flags),
    /// Coverage study on a simulation scenario.
    Coverage(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Levelset(f) => (CommandKind::Levelset, f),
            Command::Confset(f) => (CommandKind::Confset, f),
            Command::Visualize(f) => (CommandKind::Visualize, f),
            Command::Coverage(f) => (CommandKind::Coverage, f),
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Levelset => "levelset",
            CommandKind::Confset => "confset",
            CommandKind::Visualize => "visualize",
            CommandKind::Coverage => "coverage",
        })
    }
}

/// Raw flags. Every value is optional here so a config file can fill gaps.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Delimited numeric data file.
    #[arg(long, env = "LEVELCI_INPUT")]
    pub input: Option<PathBuf>,
    /// Simulation scenario or synthetic data preset instead of --input.
    #[arg(long, env = "LEVELCI_SCENARIO")]
    pub scenario: Option<String>,
    /// Sample size drawn from --scenario.
    #[arg(long, env = "LEVELCI_N")]
    pub n: Option<usize>,
    /// Bandwidth: a positive number or "silverman".
    #[arg(long, env = "LEVELCI_H")]
    pub h: Option<String>,
    /// Level: an absolute density or "qmax:f" for f times the estimated maximum.
    #[arg(long, env = "LEVELCI_LAMBDA")]
    pub lambda: Option<String>,
    /// Comma-separated levels for the tomographic view (absolute or qmax:f).
    #[arg(long, env = "LEVELCI_LEVELS")]
    pub levels: Option<String>,
    /// Comma-separated significance levels.
    #[arg(long, env = "LEVELCI_ALPHAS")]
    pub alphas: Option<String>,
    /// Comma-separated methods: hausdorff, sup, scaled, or all.
    #[arg(long, env = "LEVELCI_METHOD")]
    pub method: Option<String>,
    /// Bootstrap replicates.
    #[arg(long = "B", env = "LEVELCI_B")]
    pub replicates: Option<usize>,
    /// Coverage trials.
    #[arg(long, env = "LEVELCI_TRIALS")]
    pub trials: Option<usize>,
    #[arg(long, env = "LEVELCI_SEED")]
    pub seed: Option<u64>,
    /// Grid nodes per axis.
    #[arg(long, env = "LEVELCI_GRID")]
    pub grid: Option<usize>,
    /// Connectivity radius for components and basin adjacency (default h).
    #[arg(long, env = "LEVELCI_EPS")]
    pub eps: Option<f64>,
    /// Input scaling: none or standardize.
    #[arg(long, env = "LEVELCI_SCALE")]
    pub scale: Option<String>,
    /// Field delimiter of --input (one character; "tab" for tabs).
    #[arg(long, env = "LEVELCI_DELIMITER")]
    pub delimiter: Option<String>,
    /// Density tolerance for point-cloud level sets (dimension above 2).
    #[arg(long, env = "LEVELCI_TOL")]
    pub tol: Option<f64>,
    #[arg(long = "out-json", env = "LEVELCI_OUT_JSON")]
    pub out_json: Option<PathBuf>,
    #[arg(long = "out-svg", env = "LEVELCI_OUT_SVG")]
    pub out_svg: Option<PathBuf>,
    /// File of `key = value` lines supplying any option not set above.
    #[arg(long, env = "LEVELCI_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Silverman => s.serialize_str("silverman"),
            Bandwidth::Fixed(h) => s.serialize_f64(*h),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "silverman" {
            return Ok(Bandwidth::Silverman);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
            _ => Err(config_error(format!("bandwidth must be a positive number or \"silverman\", got {s:?}"))),
        }
    }
}

/// A level given absolutely or relative to the estimated density maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    Absolute(f64),
    QMax(f64),
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (value, rel) = match s.strip_prefix("qmax:") {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        match value.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(if rel { Level::QMax(v) } else { Level::Absolute(v) }),
            _ => Err(config_error(format!("level must be a positive number or qmax:f, got {s:?}"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Absolute(v) => write!(f, "{v}"),
            Level::QMax(v) => write!(f, "qmax:{v}"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Absolute(v) => s.serialize_f64(*v),
            Level::QMax(_) => s.serialize_str(&self.to_string()),
        }
    }
}

/// Fully resolved options, echoed into every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub h: Bandwidth,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Level>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Level>>,
    pub alphas: Vec<f64>,
    pub method: Vec<Method>,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub trials: usize,
    pub seed: u64,
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub scale: Scale,
    pub delimiter: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_svg: Option<String>,
}

pub fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped;
/// keys use the flag names (`out-json` and `out_json` are both accepted).
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_error(format!("{}:{}: expected key = value", path.display(), k + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(config_error(format!("{}:{}: unknown key {key:?}", path.display(), k + 1)));
        }
        map.insert(key, value.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 18] = [
    "input",
    "scenario",
    "n",
    "h",
    "lambda",
    "levels",
    "alphas",
    "method",
    "B",
    "trials",
    "seed",
    "grid",
    "eps",
    "scale",
    "delimiter",
    "tol",
    "out_json",
    "out_svg",
];

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|e| config_error(format!("config key {key}: {e}"))),
    }
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| config_error(format!("{what}: {e}"))))
        .collect()
}

impl RunConfig {
    /// Applies the config file and defaults, then rejects invalid combinations.
    pub fn resolve(kind: CommandKind, flags: Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let input: Option<PathBuf> = pick(flags.input, &file, "input")?;
        let scenario: Option<String> = pick(flags.scenario, &file, "scenario")?;
        let n: Option<usize> = pick(flags.n, &file, "n")?;
        let h: Option<String> = pick(flags.h, &file, "h")?;
        let lambda: Option<String> = pick(flags.lambda, &file, "lambda")?;
        let levels: Option<String> = pick(flags.levels, &file, "levels")?;
        let alphas: Option<String> = pick(flags.alphas, &file, "alphas")?;
        let method: Option<String> = pick(flags.method, &file, "method")?;
        let replicates = pick(flags.replicates, &file, "B")?;
        let trials = pick(flags.trials, &file, "trials")?;
        let seed = pick(flags.seed, &file, "seed")?;
        let grid = pick(flags.grid, &file, "grid")?;
        let eps: Option<f64> = pick(flags.eps, &file, "eps")?;
        let scale: Option<String> = pick(flags.scale, &file, "scale")?;
        let delimiter: Option<String> = pick(flags.delimiter, &file, "delimiter")?;
        let tol: Option<f64> = pick(flags.tol, &file, "tol")?;
        let out_json: Option<PathBuf> = pick(flags.out_json, &file, "out_json")?;
        let out_svg: Option<PathBuf> = pick(flags.out_svg, &file, "out_svg")?;

        if kind == CommandKind::Coverage {
            if input.is_some() {
                return Err(config_error("coverage runs on a --scenario, not --input"));
            }
            if scenario.is_none() {
                return Err(config_error("coverage needs --scenario"));
            }
        } else if input.is_some() == scenario.is_some() {
            return Err(config_error("give exactly one of --input or --scenario"));
        }
        if input.is_some() && n.is_some() {
            return Err(config_error("--n applies to --scenario data only"));
        }
        if let Some(e) = eps {
            if !(e > 0.0) {
                return Err(config_error(format!("--eps must be positive, got {e}")));
            }
        }
        if let Some(t) = tol {
            if !(t >= 0.0) {
                return Err(config_error(format!("--tol must be non-negative, got {t}")));
            }
        }

        let default_h = match kind {
            CommandKind::Coverage => "0.2",
            _ => "silverman",
        };
        let h: Bandwidth = h.as_deref().unwrap_or(default_h).parse()?;
        if kind == CommandKind::Coverage && h != Bandwidth::Fixed(0.2) {
            return Err(config_error("coverage scenarios fix h = 0.2"));
        }
        let lambda: Option<Level> = lambda.as_deref().map(str::parse).transpose()?;
        let levels: Option<Vec<Level>> = levels.as_deref().map(|s| parse_list(s, "levels")).transpose()?;
        if levels.as_ref().is_some_and(Vec::is_empty) {
            return Err(config_error("--levels is empty"));
        }
        let default_alphas = match kind {
            CommandKind::Coverage => "0.05,0.1",
            _ => "0.1",
        };
        let alphas_given = alphas.is_some();
        let alphas: Vec<f64> = parse_list(alphas.as_deref().unwrap_or(default_alphas), "alphas")?;
        if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(config_error("alphas must lie strictly between 0 and 1"));
        }
        let method_given = method.is_some();
        let method: Vec<Method> = match method.as_deref().unwrap_or(match kind {
            CommandKind::Confset => "hausdorff",
            CommandKind::Coverage => "all",
            _ => "sup",
        }) {
            "all" => Method::ALL.to_vec(),
            other => parse_list(other, "method")?,
        };
        if method.is_empty() {
            return Err(config_error("--method is empty"));
        }

        match kind {
            CommandKind::Levelset | CommandKind::Confset if lambda.is_none() => {
                return Err(config_error(format!("{kind} needs --lambda")));
            }
            CommandKind::Levelset | CommandKind::Confset if levels.is_some() => {
                return Err(config_error("--levels applies to visualize only"));
            }
            CommandKind::Visualize => {
                if levels.is_some() == lambda.is_some() {
                    return Err(config_error("visualize needs either --levels or --lambda with --alphas"));
                }
                if levels.is_some() && alphas_given {
                    return Err(config_error("--alphas applies to the confidence view (--lambda), not --levels"));
                }
                if method_given && method != [Method::Sup] {
                    return Err(config_error("the confidence view uses the sup method only"));
                }
            }
            CommandKind::Coverage if lambda.is_some() || levels.is_some() => {
                return Err(config_error("coverage scenarios fix their own level"));
            }
            _ => {}
        }

        let scale = match scale {
            Some(s) => s.parse::<Scale>()?,
            None => Scale::None,
        };
        let delimiter = delimiter.unwrap_or_else(|| ",".into());
        delimiter_byte(&delimiter)?;
        let grid = grid.unwrap_or(128);
        if grid < 2 {
            return Err(config_error("--grid must be at least 2"));
        }
        let replicates = replicates.unwrap_or(match kind {
            CommandKind::Coverage => 300,
            _ => DEFAULT_REPLICATES,
        });
        let trials = trials.unwrap_or(200);
        if replicates == 0 || trials == 0 {
            return Err(config_error("--B and --trials must be positive"));
        }
        Ok(RunConfig {
            command: kind.to_string(),
            input: input.map(|p| p.display().to_string()),
            scenario,
            n: n.or(if kind == CommandKind::Coverage { Some(500) } else { None }),
            h,
            lambda,
            levels,
            alphas,
            method,
            replicates,
            trials,
            seed: seed.unwrap_or(1),
            grid,
            eps,
            scale,
            delimiter,
            tol,
            out_json: out_json.map(|p| p.display().to_string()),
            out_svg: out_svg.map(|p| p.display().to_string()),
        })
    }

    pub fn delimiter_byte(&self) -> u8 {
        delimiter_byte(&self.delimiter).expect("validated during resolution")
    }
}

fn delimiter_byte(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        "space" => Ok(b' '),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(config_error(format!("delimiter must be one ASCII character, got {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags { scenario: Some("three-gmm".into()), lambda: Some("0.3".into()), ..Flags::default() }
    }

    #[test]
    fn parses_levels_and_bandwidths() {
        assert_eq!("qmax:0.4".parse::<Level>().unwrap(), Level::QMax(0.4));
        assert_eq!("0.05".parse::<Level>().unwrap(), Level::Absolute(0.05));
        assert!("qmax:-1".parse::<Level>().is_err());
        assert_eq!("silverman".parse::<Bandwidth>().unwrap(), Bandwidth::Silverman);
        assert!("0".parse::<Bandwidth>().is_err());
    }

    #[test]
    fn config_file_fills_only_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nh = 0.25\nseed = 9\nlambda = 0.9\nout-json = x.json\n").unwrap();
        let f = Flags { config: Some(path), ..flags() };
        let c = RunConfig::resolve(CommandKind::Levelset, f).unwrap();
        assert_eq!(c.h, Bandwidth::Fixed(0.25));
        assert_eq!(c.seed, 9);
        assert_eq!(c.lambda, Some(Level::Absolute(0.3)));
        assert_eq!(c.out_json.as_deref(), Some("x.json"));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "bandwith = 3\n").unwrap();
        assert!(RunConfig::resolve(CommandKind::Levelset, Flags { config: Some(path), ..flags() }).is_err());
    }

    #[test]
    fn invalid_combinations() {
        let both = Flags { input: Some("a.csv".into()), ..flags() };
        assert!(RunConfig::resolve(CommandKind::Levelset, both).is_err());
        let no_level = Flags { lambda: None, ..flags() };
        assert!(RunConfig::resolve(CommandKind::Confset, no_level).is_err());
        let both_views = Flags { levels: Some("0.1,0.2".into()), ..flags() };
        assert!(RunConfig::resolve(CommandKind::Visualize, both_views).is_err());
        let bad_alpha = Flags { alphas: Some("0.1,1.5".into()), ..flags() };
        assert!(RunConfig::resolve(CommandKind::Confset, bad_alpha).is_err());
        let cov = Flags { lambda: None, ..flags() };
        let c = RunConfig::resolve(CommandKind::Coverage, cov).unwrap();
        assert_eq!((c.n, c.replicates, c.trials), (Some(500), 300, 200));
        assert_eq!(c.method, Method::ALL.to_vec());
    }
}
