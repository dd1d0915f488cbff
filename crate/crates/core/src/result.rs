use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Fourier,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Otm,
    Itm,
    Atm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payoff {
    European,
    CashOrNothing,
    AssetOrNothing,
    Gap,
    PowerAssetOrNothing,
    LogCall,
}

impl Payoff {
    pub const ALL: [Payoff; 6] = [
        Payoff::European,
        Payoff::CashOrNothing,
        Payoff::AssetOrNothing,
        Payoff::Gap,
        Payoff::PowerAssetOrNothing,
        Payoff::LogCall,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Payoff::European => "european",
            Payoff::CashOrNothing => "cash-or-nothing",
            Payoff::AssetOrNothing => "asset-or-nothing",
            Payoff::Gap => "gap",
            Payoff::PowerAssetOrNothing => "power-asset-or-nothing",
            Payoff::LogCall => "log-call",
        }
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Payoff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Payoff::ALL
            .iter()
            .find(|p| p.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown payoff '{s}'"))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Series => "series",
            Method::Fourier => "fourier",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Otm => "otm",
            Branch::Itm => "itm",
            Branch::Atm => "atm",
        })
    }
}

/// A price with the diagnostics of the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub value: f64,
    pub method: Method,
    pub terms_evaluated: usize,
    pub truncation_estimate: f64,
    pub branch: Branch,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub diagnostics: BTreeMap<String, String>,
}

impl PriceResult {
    pub fn new(value: f64, method: Method, branch: Branch) -> Self {
        PriceResult {
            value,
            method,
            terms_evaluated: 0,
            truncation_estimate: 0.0,
            branch,
            std_error: None,
            ci: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.diagnostics.insert(key.to_string(), value.to_string());
    }
}

/// Branch selected by the sign of a risk-neutral moneyness.
pub fn branch_of(moneyness: f64) -> Branch {
    if moneyness.abs() < 1e-12 {
        Branch::Atm
    } else if moneyness < 0.0 {
        Branch::Otm
    } else {
        Branch::Itm
    }
}
