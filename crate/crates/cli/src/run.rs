use std::fs;
use std::io::{self, Write};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use vg_pricing::fourier::{self, FourierConfig};
use vg_pricing::mc::{self, McConfig};
use vg_pricing::model::{density, mixture_density, MarketInputs, VgParams};
use vg_pricing::quad::{gl_density, gl_european};
use vg_pricing::series::{self, AlphaPolicy, SeriesControl};
use vg_pricing::tables::{self, reference_cell, TableOptions};
use vg_pricing::{Payoff, PriceResult, VgError};

use crate::args::*;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message}).to_string()
    }
}

impl From<VgError> for Failure {
    fn from(e: VgError) -> Self {
        let code = match e {
            VgError::NonConvergence { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            kind: "io".into(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure {
            code: 1,
            kind: "io".into(),
            message: e.to_string(),
        }
    }
}

type Res<T> = Result<T, Failure>;

pub fn run(cli: Cli) -> Res<()> {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
            Some(serde_json::from_str::<Value>(&text).map_err(|e| Failure::usage(format!("config is not JSON: {e}")))?)
        }
        None => None,
    };
    let cfg = config.as_ref();
    match cli.command {
        Command::Price(a) => price(merge(&a, cfg).map_err(Failure::usage)?),
        Command::Table(a) => table(merge(&a, cfg).map_err(Failure::usage)?),
        Command::Density(a) => density_cmd(merge(&a, cfg).map_err(Failure::usage)?),
        Command::Converge(a) => converge(merge(&a, cfg).map_err(Failure::usage)?),
        Command::Bench(a) => bench(merge(&a, cfg).map_err(Failure::usage)?),
    }
}

fn sink(out: &OutputArgs) -> Res<Box<dyn Write>> {
    Ok(match &out.output {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or_else(|| Failure::usage(format!("missing required flag --{flag}")))
}

fn model(m: &ModelArgs) -> Res<VgParams> {
    let sigma = required(m.sigma, "sigma")?;
    let nu = required(m.nu, "nu")?;
    Ok(VgParams::new(sigma, nu, m.theta.unwrap_or(0.0))?)
}

fn market(m: &MarketArgs) -> Res<MarketInputs> {
    let mut mk = MarketInputs::new(
        required(m.spot, "spot")?,
        required(m.strike, "strike")?,
        m.rate.unwrap_or(0.0),
        required(m.tau, "tau")?,
    );
    mk.trigger_strike = m.trigger_strike;
    mk.dividend_yield = m.dividend_yield.unwrap_or(0.0);
    mk.power = m.power.unwrap_or(1.0);
    mk.validate()?;
    Ok(mk)
}

fn check_payoff_flags(payoff: Payoff, m: &MarketArgs) -> Res<()> {
    if m.trigger_strike.is_some() && payoff != Payoff::Gap {
        return Err(Failure::usage("--trigger-strike only applies to --payoff gap"));
    }
    if m.power.is_some_and(|q| q != 1.0) && payoff != Payoff::PowerAssetOrNothing {
        return Err(Failure::usage("--power only applies to --payoff power-asset-or-nothing"));
    }
    Ok(())
}

fn series_control(s: &SeriesArgs) -> Res<SeriesControl> {
    let mut c = SeriesControl::default();
    if let Some(m) = s.max_order {
        c.max_order = m;
    }
    if let Some(t) = s.tail_tol {
        c.tail_tol = t;
    }
    c.alpha_policy = match s.alpha_policy {
        Some(AlphaPolicyArg::Nudge) => AlphaPolicy::Nudge,
        _ => AlphaPolicy::Error,
    };
    c.strict = !s.non_strict.unwrap_or(false);
    c.validate()?;
    Ok(c)
}

fn fourier_config(f: &FourierArgs) -> Res<FourierConfig> {
    let d = FourierConfig::default();
    let c = FourierConfig {
        u_max: f.u_max.unwrap_or(d.u_max),
        panels: f.panels.unwrap_or(d.panels),
        damping_a: f.damping.unwrap_or(d.damping_a),
        abs_tol: f.fourier_tol.unwrap_or(d.abs_tol),
        tail: f.tail.unwrap_or(false),
    };
    c.validate()?;
    Ok(c)
}

fn mc_config(m: &McArgs, default_paths: usize) -> Res<McConfig> {
    let c = McConfig {
        n_paths: m.paths.unwrap_or(default_paths),
        seed: m.seed.unwrap_or(42),
        antithetic: m.antithetic.unwrap_or(false),
    };
    c.validate()?;
    Ok(c)
}

struct Contract {
    payoff: Payoff,
    params: VgParams,
    market: MarketInputs,
    ctrl: SeriesControl,
    fourier: FourierConfig,
    nodes: usize,
    mc: McConfig,
}

impl Contract {
    fn price(&self, method: MethodArg) -> Result<PriceResult, VgError> {
        let (p, m) = (&self.params, &self.market);
        match method {
            MethodArg::Series => series::price(self.payoff, p, m, &self.ctrl),
            MethodArg::Fourier => fourier::price(self.payoff, p, m, &self.fourier),
            MethodArg::Quadrature => match self.payoff {
                Payoff::European => gl_european(p, m, self.nodes),
                other => Err(VgError::Unsupported(format!("no quadrature engine for {other}"))),
            },
            MethodArg::Mc => mc::price(self.payoff, p, m, &self.mc),
            MethodArg::All => unreachable!("expanded by the caller"),
        }
    }
}

const METHODS: [MethodArg; 4] = [MethodArg::Series, MethodArg::Fourier, MethodArg::Quadrature, MethodArg::Mc];

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Series => "series",
        MethodArg::Fourier => "fourier",
        MethodArg::Quadrature => "quadrature",
        MethodArg::Mc => "monte_carlo",
        MethodArg::All => "all",
    }
}

fn price_row(c: &Contract, method: MethodArg, r: &Result<PriceResult, VgError>, ms: Option<f64>) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("payoff".into(), json!(c.payoff.name()));
    o.insert("method".into(), json!(method_name(method)));
    o.insert("params".into(), json!(c.params));
    o.insert("market".into(), json!(c.market));
    match r {
        Ok(p) => {
            o.insert("value".into(), json!(p.value));
            o.insert("branch".into(), json!(p.branch));
            o.insert("terms_evaluated".into(), json!(p.terms_evaluated));
            o.insert("truncation_estimate".into(), json!(p.truncation_estimate));
            if let Some(se) = p.std_error {
                o.insert("std_error".into(), json!(se));
            }
            if let Some((lo, hi)) = p.ci {
                o.insert("ci".into(), json!([lo, hi]));
            }
            o.insert("diagnostics".into(), json!(p.diagnostics));
        }
        Err(e) => {
            o.insert("error".into(), json!({"kind": e.kind(), "message": e.to_string()}));
        }
    }
    if let Some(ms) = ms {
        o.insert("runtime_ms".into(), json!(ms));
    }
    o
}

const PRICE_CSV: [&str; 19] = [
    "payoff",
    "method",
    "value",
    "branch",
    "terms_evaluated",
    "truncation_estimate",
    "std_error",
    "ci_low",
    "ci_high",
    "sigma",
    "nu",
    "theta",
    "spot",
    "strike",
    "rate",
    "tau",
    "dividend_yield",
    "runtime_ms",
    "error",
];

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

fn price_csv_record(o: &Map<String, Value>) -> Vec<String> {
    let ci = o.get("ci").and_then(|v| v.as_array());
    PRICE_CSV
        .iter()
        .map(|&k| match k {
            "ci_low" => csv_cell(ci.map(|a| &a[0])),
            "ci_high" => csv_cell(ci.map(|a| &a[1])),
            "sigma" | "nu" | "theta" => csv_cell(o["params"].get(k)),
            "spot" | "strike" | "rate" | "tau" | "dividend_yield" => csv_cell(o["market"].get(k)),
            "error" => csv_cell(o.get("error").and_then(|e| e.get("message"))),
            _ => csv_cell(o.get(k)),
        })
        .collect()
}

fn price(a: PriceArgs) -> Res<()> {
    let payoff = a.payoff.unwrap_or(Payoff::European);
    let method = a.method.unwrap_or(MethodArg::Series);
    let format = a.out.format.unwrap_or(Format::Json);
    let stream = a.stream.unwrap_or(false);
    if stream && format != Format::Json {
        return Err(Failure::usage("--stream requires --format json"));
    }
    check_payoff_flags(payoff, &a.market)?;
    let c = Contract {
        payoff,
        params: model(&a.model)?,
        market: market(&a.market)?,
        ctrl: series_control(&a.series)?,
        fourier: fourier_config(&a.fourier)?,
        nodes: a.nodes.unwrap_or(15),
        mc: mc_config(&a.mc, 100_000)?,
    };
    let timing = !a.out.no_timing.unwrap_or(false);
    let methods: Vec<MethodArg> = if method == MethodArg::All { METHODS.to_vec() } else { vec![method] };
    let mut rows = Vec::new();
    let mut failure = None;
    for m in methods.iter().copied() {
        let t0 = Instant::now();
        let r = c.price(m);
        let ms = timing.then(|| t0.elapsed().as_secs_f64() * 1e3);
        if let Err(e) = &r {
            if method != MethodArg::All {
                return Err(e.clone().into());
            }
            if !matches!(e, VgError::Unsupported(_)) && failure.is_none() {
                failure = Some(Failure::from(e.clone()));
            }
        }
        rows.push(price_row(&c, m, &r, ms));
    }
    let mut w = sink(&a.out)?;
    match format {
        Format::Json if stream || rows.len() == 1 => {
            for r in &rows {
                writeln!(w, "{}", Value::Object(r.clone()))?;
            }
        }
        Format::Json => writeln!(w, "{}", Value::Array(rows.into_iter().map(Value::Object).collect()))?,
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(PRICE_CSV)?;
            for r in &rows {
                cw.write_record(price_csv_record(r))?;
            }
            cw.flush()?;
        }
    }
    w.flush()?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct Records {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn emit(out: &OutputArgs, rec: Records) -> Res<()> {
    let mut w = sink(out)?;
    match out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(&rec.header)?;
            for r in &rec.rows {
                cw.write_record(r)?;
            }
            cw.flush()?;
        }
        Format::Json => {
            for r in &rec.rows {
                let o: Map<String, Value> = rec
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| {
                        let val = v.parse::<f64>().map(|x| json!(x)).unwrap_or_else(|_| json!(v));
                        (k.clone(), if v.is_empty() { Value::Null } else { val })
                    })
                    .collect();
                writeln!(w, "{}", Value::Object(o))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn table(a: TableArgs) -> Res<()> {
    let id = a.id.clone().ok_or_else(|| Failure::usage("missing table id"))?;
    let opts = TableOptions {
        seed: a.seed.unwrap_or(42),
        ..Default::default()
    };
    let t = tables::build(&id, &opts).map_err(|e| match e {
        VgError::InvalidInput(m) => Failure::usage(m),
        e => e.into(),
    })?;
    let compare = a.compare.unwrap_or(false);
    let mut header = vec!["row".to_string()];
    header.extend(t.columns.iter().cloned());
    if compare {
        for c in &t.columns {
            header.push(format!("{c}_paper"));
            header.push(format!("{c}_dev"));
        }
        header.push("suspect".into());
    }
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.values.iter().map(|v| num(*v)));
            if compare {
                let mut suspect = Vec::new();
                for (c, v) in t.columns.iter().zip(&r.values) {
                    match reference_cell(&t.id, &r.label, c) {
                        Some(cell) => {
                            rec.push(num(cell.value));
                            rec.push(num((v - cell.value).abs()));
                            if cell.suspect {
                                suspect.push(c.clone());
                            }
                        }
                        None => {
                            rec.push(String::new());
                            rec.push(String::new());
                        }
                    }
                }
                rec.push(suspect.join("|"));
            }
            rec
        })
        .collect();
    emit(&a.out, Records { header, rows })
}

fn density_cmd(a: DensityArgs) -> Res<()> {
    let p = model(&a.model)?;
    let t = required(a.t, "t")?;
    let lo = a.x_min.unwrap_or(-1.0);
    let hi = a.x_max.unwrap_or(1.0);
    let n = a.points.unwrap_or(201);
    let nodes = a.nodes.unwrap_or(15);
    if !(hi > lo) || n < 2 {
        return Err(Failure::usage("need --x-max > --x-min and --points >= 2"));
    }
    let header = vec![
        "x".to_string(),
        "closed_form".to_string(),
        "mixture".to_string(),
        format!("gauss_laguerre_{nodes}"),
    ];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        // mirrored indices give exactly negated abscissae when lo = -hi
        let x = ((n - 1 - i) as f64 * lo + i as f64 * hi) / (n - 1) as f64;
        rows.push(vec![
            num(x),
            num(density(&p, x, t)?),
            num(mixture_density(&p, x, t)?),
            num(gl_density(&p, x, t, nodes)?),
        ]);
    }
    emit(&a.out, Records { header, rows })
}

fn converge(a: ConvergeArgs) -> Res<()> {
    let payoff = a.payoff.unwrap_or(Payoff::European);
    if !matches!(payoff, Payoff::European | Payoff::CashOrNothing | Payoff::AssetOrNothing) {
        return Err(Failure::usage("converge supports european, cash-or-nothing and asset-or-nothing"));
    }
    let p = model(&a.model)?;
    let m = market(&a.market)?;
    let orders = a.orders.clone().unwrap_or_else(|| vec![3, 5, 10, 15, 20, 30]);
    let u_maxes = a.u_maxes.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let reference = match a.reference.unwrap_or(Reference::Series) {
        Reference::Series => {
            let ctrl = SeriesControl {
                max_order: 60,
                tail_tol: 1e-13,
                strict: false,
                ..Default::default()
            };
            series::price(payoff, &p, &m, &ctrl)?.value
        }
        Reference::Fourier => {
            let cfg = FourierConfig {
                u_max: 1e5,
                tail: true,
                ..Default::default()
            };
            fourier::price(payoff, &p, &m, &cfg)?.value
        }
    };
    let header = ["method", "truncation_or_umax", "value", "abs_error_vs_reference"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for n in orders {
        let v = series::price(payoff, &p, &m, &SeriesControl::truncated(n))?.value;
        rows.push(vec!["series".into(), n.to_string(), num(v), num((v - reference).abs())]);
    }
    for u in u_maxes {
        let v = fourier::price(payoff, &p, &m, &FourierConfig::with_u_max(u))?.value;
        rows.push(vec!["fourier".into(), num(u), num(v), num((v - reference).abs())]);
    }
    emit(&a.out, Records { header, rows })
}

fn bench(a: BenchArgs) -> Res<()> {
    let payoff = a.payoff.unwrap_or(Payoff::European);
    check_payoff_flags(payoff, &a.market)?;
    let c = Contract {
        payoff,
        params: model(&a.model)?,
        market: market(&a.market)?,
        ctrl: SeriesControl::default(),
        fourier: FourierConfig::default(),
        nodes: a.nodes.unwrap_or(15),
        mc: mc_config(&a.mc, 10_000)?,
    };
    let repeat = a.repeat.unwrap_or(20).max(1);
    let header = ["method", "payoff", "value", "runs", "mean_us", "min_us", "error"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for m in METHODS {
        let mut times = Vec::with_capacity(repeat);
        let mut last = None;
        for _ in 0..repeat {
            let t0 = Instant::now();
            let r = c.price(m);
            times.push(t0.elapsed().as_secs_f64() * 1e6);
            let failed = r.is_err();
            last = Some(r);
            if failed {
                break;
            }
        }
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let min = times.iter().cloned().fold(f64::INFINITY, f64::min);
        let row = match last.expect("at least one run") {
            Ok(r) => vec![
                method_name(m).into(),
                payoff.name().into(),
                num(r.value),
                times.len().to_string(),
                format!("{mean:.1}"),
                format!("{min:.1}"),
                String::new(),
            ],
            Err(e) => vec![
                method_name(m).into(),
                payoff.name().into(),
                String::new(),
                "0".into(),
                String::new(),
                String::new(),
                e.to_string(),
            ],
        };
        rows.push(row);
    }
    emit(&a.out, Records { header, rows })
}
