//! Reproduction grids for the published tables, and the embedded reference
//! values they are compared against.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, VgError};
use crate::fourier::{self, FourierConfig};
use crate::mc::{self, McConfig};
use crate::model::{atm_spot, MarketInputs, VgParams};
use crate::quad::gl_european;
use crate::result::Payoff;
use crate::series::{self, SeriesControl};
use crate::specfun::laguerre_rule;

pub const TABLE_IDS: [&str; 8] = ["1", "2", "3", "4", "5", "6", "7", "gl"];

const REFERENCE_CSV: &str = include_str!("../data/paper_tables.csv");

const STRIKE: f64 = 4000.0;
const RATE: f64 = 0.01;
const SIGMA: f64 = 0.2;
const NU: f64 = 0.85;

/// One printed cell of a published table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefCell {
    pub table: String,
    pub row: String,
    pub col: String,
    pub value: f64,
    pub suspect: bool,
}

/// All printed cells, in file order.
pub fn reference() -> &'static [RefCell] {
    static CELLS: OnceLock<Vec<RefCell>> = OnceLock::new();
    CELLS.get_or_init(|| {
        REFERENCE_CSV
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                assert_eq!(f.len(), 5, "malformed reference row: {l}");
                RefCell {
                    table: f[0].to_string(),
                    row: f[1].to_string(),
                    col: f[2].to_string(),
                    value: f[3].parse().expect("reference value"),
                    suspect: f[4] == "true",
                }
            })
            .collect()
    })
}

pub fn reference_cell(table: &str, row: &str, col: &str) -> Option<&'static RefCell> {
    reference().iter().find(|c| c.table == table && c.row == row && c.col == col)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub id: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| c == col)?;
        self.rows.iter().find(|r| r.label == row).map(|r| r.values[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    /// Seed for the Monte Carlo columns of table 7.
    pub seed: u64,
    pub fourier: FourierConfig,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            seed: 42,
            fourier: FourierConfig::default(),
        }
    }
}

fn sym() -> VgParams {
    VgParams::symmetric(SIGMA, NU).expect("table parameters")
}

fn asym(theta: f64) -> VgParams {
    VgParams::new(SIGMA, NU, theta).expect("table parameters")
}

fn market(s: f64, tau: f64) -> MarketInputs {
    MarketInputs::new(s, STRIKE, RATE, tau)
}

fn spot(label: &str, params: &VgParams, tau: f64) -> Result<f64> {
    match label {
        "ATM" => atm_spot(params, STRIKE, RATE, tau),
        s => s
            .strip_prefix("S=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| VgError::InvalidInput(format!("bad spot label {s}"))),
    }
}

fn tau_of(label: &str) -> f64 {
    match label {
        "1/2" | "0.5" => 0.5,
        "1/12" => 1.0 / 12.0,
        "1/52" => 1.0 / 52.0,
        "1/360" => 1.0 / 360.0,
        other => other.parse().expect("maturity label"),
    }
}

fn cols(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn truncated(payoff: Payoff, p: &VgParams, m: &MarketInputs, max: usize) -> Result<f64> {
    Ok(series::price(payoff, p, m, &SeriesControl::truncated(max))?.value)
}

/// Rows priced in parallel; output order is that of `labels`.
fn rows<F>(labels: &[String], f: F) -> Result<Vec<TableRow>>
where
    F: Fn(&str) -> Result<Vec<f64>> + Sync,
{
    labels
        .par_iter()
        .map(|l| {
            Ok(TableRow {
                label: l.clone(),
                values: f(l)?,
            })
        })
        .collect()
}

fn digital_grid(payoff: Payoff, opts: &TableOptions) -> Result<(Vec<String>, Vec<TableRow>)> {
    let mut labels = Vec::new();
    for tau in ["2", "0.5"] {
        for s in ["S=5000", "S=4200", "ATM", "S=3800", "S=3000"] {
            labels.push(format!("tau={tau};{s}"));
        }
    }
    let p = sym();
    let body = rows(&labels, |l| {
        let (t, s) = l.split_once(';').expect("row label");
        let tau = tau_of(t.trim_start_matches("tau="));
        let m = market(spot(s, &p, tau)?, tau);
        let mut v = Vec::new();
        for max in [3, 5, 10, 15] {
            v.push(truncated(payoff, &p, &m, max)?);
        }
        v.push(fourier::price(payoff, &p, &m, &opts.fourier)?.value);
        Ok(v)
    })?;
    Ok((cols(&["max=3", "max=5", "max=10", "max=15", "lewis"]), body))
}

fn table3(opts: &TableOptions) -> Result<(Vec<String>, Vec<TableRow>)> {
    let mut labels = Vec::new();
    for s in ["S=3000", "S=2000"] {
        for t in ["1/12", "1/52", "1/360"] {
            labels.push(format!("{s};tau={t}"));
        }
    }
    let p = sym();
    let body = rows(&labels, |l| {
        let (s, t) = l.split_once(';').expect("row label");
        let tau = tau_of(t.trim_start_matches("tau="));
        let m = market(spot(s, &p, tau)?, tau);
        let mut v = Vec::new();
        for max in [5, 10, 20, 30] {
            v.push(truncated(Payoff::European, &p, &m, max)?);
        }
        for u_max in [1e2, 1e3, 1e4] {
            let cfg = FourierConfig { u_max, ..opts.fourier };
            v.push(fourier::carr_madan_european(&p, &m, &cfg)?.value);
        }
        Ok(v)
    })?;
    Ok((
        cols(&[
            "series max=5",
            "series max=10",
            "series max=20",
            "series max=30",
            "cm u_max=1e2",
            "cm u_max=1e3",
            "cm u_max=1e4",
        ]),
        body,
    ))
}

fn theta_of(label: &str) -> f64 {
    label.trim_start_matches("theta=").parse().expect("theta label")
}

fn table4(opts: &TableOptions) -> Result<(Vec<String>, Vec<TableRow>)> {
    let labels: Vec<String> = [
        "theta=+0.1;S=6000",
        "theta=+0.1;ATM",
        "theta=+0.1;S=3000",
        "theta=-0.1;S=5000",
        "theta=-0.1;ATM",
        "theta=-0.1;S=2000",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body = rows(&labels, |l| {
        let (th, s) = l.split_once(';').expect("row label");
        let p = asym(theta_of(th));
        let m = market(spot(s, &p, 2.0)?, 2.0);
        let mut v = Vec::new();
        for max in [3, 5, 10, 15] {
            v.push(truncated(Payoff::CashOrNothing, &p, &m, max)?);
        }
        v.push(fourier::lewis_cash_or_nothing(&p, &m, &opts.fourier)?.value);
        Ok(v)
    })?;
    Ok((cols(&["max=3", "max=5", "max=10", "max=15", "lewis"]), body))
}

fn table5() -> Result<(Vec<String>, Vec<TableRow>)> {
    let mut labels = Vec::new();
    for th in ["+0.1", "-0.1"] {
        for t in ["1/2", "1/12", "1/52", "1/360"] {
            labels.push(format!("theta={th};tau={t}"));
        }
    }
    let body = rows(&labels, |l| {
        let (th, t) = l.split_once(';').expect("row label");
        let p = asym(theta_of(th));
        let m = market(4200.0, tau_of(t.trim_start_matches("tau=")));
        [3, 5, 10, 15]
            .iter()
            .map(|&max| truncated(Payoff::CashOrNothing, &p, &m, max))
            .collect()
    })?;
    Ok((cols(&["max=3", "max=5", "max=10", "max=15"]), body))
}

fn table6() -> Result<(Vec<String>, Vec<TableRow>)> {
    let labels = cols(&["S=4500", "ATM", "S=3500"]);
    let p = sym();
    let body = rows(&labels, |l| {
        let m = market(spot(l, &p, 2.0)?, 2.0);
        let mut v = Vec::new();
        for max in [5, 10, 15] {
            v.push(truncated(Payoff::European, &p, &m, max)?);
        }
        for n in [5, 10, 15] {
            v.push(gl_european(&p, &m, n)?.value);
        }
        Ok(v)
    })?;
    Ok((
        cols(&["series max=5", "series max=10", "series max=15", "gl n=5", "gl n=10", "gl n=15"]),
        body,
    ))
}

fn table7(opts: &TableOptions) -> Result<(Vec<String>, Vec<TableRow>)> {
    let labels = cols(&[
        "european;S=4500",
        "european;ATM",
        "european;S=3500",
        "cash-or-nothing;S=4500",
        "cash-or-nothing;ATM",
        "cash-or-nothing;S=3000",
    ]);
    let body = rows(&labels, |l| {
        let (pay, s) = l.split_once(';').expect("row label");
        let payoff: Payoff = pay.parse().map_err(VgError::InvalidInput)?;
        let p = if payoff == Payoff::European { sym() } else { asym(-0.1) };
        let m = market(spot(s, &p, 2.0)?, 2.0);
        let mut v = Vec::new();
        for max in [5, 10, 15] {
            v.push(truncated(payoff, &p, &m, max)?);
        }
        for n in [100, 1000, 10_000] {
            v.push(mc::mc_price(payoff, &p, &m, &McConfig::new(n, opts.seed))?.value);
        }
        Ok(v)
    })?;
    Ok((
        cols(&["series max=5", "series max=10", "series max=15", "mc n=1e2", "mc n=1e3", "mc n=1e4"]),
        body,
    ))
}

fn table_gl() -> Result<(Vec<String>, Vec<TableRow>)> {
    let mut body = Vec::new();
    for n in 1..=6 {
        let r = laguerre_rule(n)?;
        for (i, (u, w)) in r.nodes.iter().zip(&r.weights).enumerate() {
            body.push(TableRow {
                label: format!("n={n};i={}", i + 1),
                values: vec![*u, *w],
            });
        }
    }
    Ok((cols(&["node", "weight"]), body))
}

/// Regenerates a table by id (`1`..`7`, or `gl` for the Laguerre rules).
pub fn build(id: &str, opts: &TableOptions) -> Result<Table> {
    let (columns, rows) = match id {
        "1" => digital_grid(Payoff::CashOrNothing, opts)?,
        "2" => digital_grid(Payoff::AssetOrNothing, opts)?,
        "3" => table3(opts)?,
        "4" => table4(opts)?,
        "5" => table5()?,
        "6" => table6()?,
        "7" => table7(opts)?,
        "8" | "gl" => table_gl()?,
        other => {
            return Err(VgError::InvalidInput(format!(
                "unknown table '{other}', expected one of {}",
                TABLE_IDS.join(", ")
            )))
        }
    };
    let id = if id == "8" { "gl" } else { id };
    Ok(Table {
        id: id.to_string(),
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parses() {
        let r = reference();
        assert!(r.len() > 250);
        assert!(reference_cell("2", "tau=0.5;ATM", "lewis").unwrap().suspect);
        assert!(!reference_cell("1", "tau=2;S=4200", "max=15").unwrap().suspect);
    }

    #[test]
    fn every_reference_cell_has_a_generated_slot() {
        for id in ["1", "2", "4", "5", "6", "gl"] {
            let t = build(id, &TableOptions::default()).unwrap();
            for c in reference().iter().filter(|c| c.table == id) {
                assert!(t.get(&c.row, &c.col).is_some(), "{id} {} {}", c.row, c.col);
            }
        }
    }

    #[test]
    fn unknown_table_rejected() {
        assert!(build("9", &TableOptions::default()).is_err());
    }
}
