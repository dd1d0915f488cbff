use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use vg_pricing::Payoff;

#[derive(Debug, Parser)]
#[command(name = "vgprice", version, about = "Variance Gamma option pricing")]
pub struct Cli {
    /// JSON file whose keys mirror the command's long flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one contract.
    Price(PriceArgs),
    /// Regenerate a published table (1-7, or `gl` for the Laguerre rules).
    Table(TableArgs),
    /// Sample the density: closed form, mixture integral and Gauss-Laguerre.
    Density(DensityArgs),
    /// Series truncation vs Fourier cutoff convergence race.
    Converge(ConvergeArgs),
    /// Time every method on one contract.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Series,
    Fourier,
    Quadrature,
    Mc,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Series,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPolicyArg {
    Error,
    Nudge,
}

fn parse_payoff(s: &str) -> Result<Payoff, String> {
    s.parse()
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Asymmetry; 0 gives the symmetric model.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MarketArgs {
    #[arg(long)]
    pub spot: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
    /// Trigger strike of a gap option (payment strike is --strike).
    #[arg(long)]
    pub trigger_strike: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dividend_yield: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Exponent of the power asset-or-nothing payoff.
    #[arg(long)]
    pub power: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SeriesArgs {
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub alpha_policy: Option<AlphaPolicyArg>,
    /// Return unconverged sums flagged in the diagnostics instead of failing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub non_strict: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FourierArgs {
    #[arg(long)]
    pub u_max: Option<f64>,
    #[arg(long)]
    pub panels: Option<usize>,
    /// Carr-Madan damping exponent.
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub fourier_tol: Option<f64>,
    /// Integrate beyond --u-max with tail extrapolation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tail: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct McArgs {
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub antithetic: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Omit wall-clock fields so output is byte-stable.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_timing: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PriceArgs {
    #[arg(long, value_parser = parse_payoff)]
    pub payoff: Option<Payoff>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Gauss-Laguerre nodes for --method quadrature.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// One JSON object per line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stream: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub fourier: FourierArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TableArgs {
    /// Table id: 1-7, or `gl` (8) for the Gauss-Laguerre nodes and weights.
    pub id: Option<String>,
    /// Append the printed value and absolute deviation for every column.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Horizon of the density.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConvergeArgs {
    #[arg(long, value_parser = parse_payoff)]
    pub payoff: Option<Payoff>,
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    /// Series truncation orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Fourier cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub u_maxes: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_payoff)]
    pub payoff: Option<Payoff>,
    /// Repetitions per method.
    #[arg(long)]
    pub repeat: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutputArgs,
}

/// Overlays the flags on the config object. Keys in the config that are not
/// flags of the command are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Value>) -> Result<T, String> {
    let Some(config) = config else {
        return from_value(serde_json::to_value(flags).map_err(|e| e.to_string())?);
    };
    let Value::Object(cfg) = config else {
        return Err("config file must hold a JSON object".into());
    };
    let Value::Object(flag_map) = serde_json::to_value(flags).map_err(|e| e.to_string())? else {
        unreachable!("argument structs serialize to objects");
    };
    let mut merged = serde_json::Map::new();
    for (k, v) in cfg {
        if !flag_map.contains_key(k) {
            return Err(format!("unknown config key '{k}'"));
        }
        merged.insert(k.clone(), v.clone());
    }
    for (k, v) in flag_map {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    from_value(Value::Object(merged))
}

fn from_value<T: DeserializeOwned>(v: Value) -> Result<T, String> {
    serde_json::from_value(v).map_err(|e| format!("invalid config: {e}"))
}
