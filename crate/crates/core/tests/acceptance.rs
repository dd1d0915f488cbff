//! Acceptance report: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report is always printed; exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vg_pricing::fourier::{self, FourierConfig};
use vg_pricing::integrate;
use vg_pricing::mc::{mc_price, McConfig};
use vg_pricing::model::{atm_spot, density, mixture_density, normalized_characteristic_fn, MarketInputs, VgParams};
use vg_pricing::series::{self, AlphaPolicy, SeriesControl};
use vg_pricing::specfun::{laguerre_rule, laguerre_weight};
use vg_pricing::tables::{build, reference, RefCell, Table, TableOptions};
use vg_pricing::Payoff;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Largest deviation over the non-suspect reference cells of `table` selected
/// by `keep`, and the cells exceeding `tol`.
fn compare(table: &Table, keep: impl Fn(&RefCell) -> bool, tol: f64) -> (f64, usize, Vec<String>) {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut bad = Vec::new();
    for c in reference().iter().filter(|c| c.table == table.id && !c.suspect && keep(c)) {
        let v = table.get(&c.row, &c.col).expect("generated cell");
        let d = (v - c.value).abs();
        worst = worst.max(d);
        n += 1;
        if d > tol {
            bad.push(format!("{} / {}: ours {v:.6} printed {} (dev {d:.2e})", c.row, c.col, c.value));
        }
    }
    (worst, n, bad)
}

fn opts() -> TableOptions {
    TableOptions::default()
}

fn criterion1() -> Outcome {
    let t0 = Instant::now();
    let t = build("1", &opts()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let (worst, n, bad) = compare(&t, |c| c.col == "max=15", 5e-4);
    outcome(
        bad.is_empty() && n == 10 && secs < 1.0,
        format!("{n} cells at max=15, worst dev {worst:.1e} (tol 5e-4), {secs:.2}s (limit 1s) {}", bad.join("; ")),
    )
}

fn criterion2() -> Outcome {
    let t = build("2", &opts()).unwrap();
    let (worst, n, bad) = compare(&t, |c| c.col == "max=15" || c.col == "lewis", 0.05);
    let lewis = t.get("tau=0.5;ATM", "lewis").unwrap();
    let ser = t.get("tau=0.5;ATM", "max=15").unwrap();
    let oracle = (lewis - ser).abs() < 0.05 && (ser - 2197.07).abs() < 0.05;
    outcome(
        bad.is_empty() && n == 19 && oracle,
        format!(
            "{n} cells (max=15 and Lewis), worst dev {worst:.1e} (tol 0.05); short ATM Lewis {lewis:.3} vs series {ser:.3} (printed 2797.07 excluded) {}",
            bad.join("; ")
        ),
    )
}

fn criterion3() -> Outcome {
    let t0 = Instant::now();
    let t = build("3", &opts()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let (ws, ns, bs) = compare(&t, |c| c.col.starts_with("series"), 5e-4);
    let (wc, nc, bc) = compare(&t, |c| c.col.starts_with("cm"), 5e-3);
    outcome(
        bs.is_empty() && bc.is_empty() && secs < 5.0,
        format!(
            "series {ns} cells worst {ws:.1e} (tol 5e-4); Carr-Madan {nc} cells worst {wc:.1e} (tol 5e-3); {secs:.2}s; out of tolerance: {}",
            if bs.is_empty() && bc.is_empty() { "none".to_string() } else { [bs, bc].concat().join("; ") }
        ),
    )
}

fn criterion4() -> Outcome {
    let t4 = build("4", &opts()).unwrap();
    let t5 = build("5", &opts()).unwrap();
    let (w4, n4, b4) = compare(&t4, |c| c.col == "max=15", 5e-4);
    let (w5, n5, b5) = compare(&t5, |c| c.col == "max=15", 5e-4);
    let up = atm_spot(&VgParams::new(0.2, 0.85, 0.1).unwrap(), 4000.0, 0.01, 2.0).unwrap();
    let dn = atm_spot(&VgParams::new(0.2, 0.85, -0.1).unwrap(), 4000.0, 0.01, 2.0).unwrap();
    let spots = (up - 5050.24).abs() < 0.01 && (dn - 3358.52).abs() < 0.01;
    outcome(
        b4.is_empty() && b5.is_empty() && n4 == 6 && n5 == 8 && spots,
        format!(
            "table 4 worst {w4:.1e}, table 5 worst {w5:.1e} (tol 5e-4); ATM spots {up:.2} / {dn:.2} {}",
            [b4, b5].concat().join("; ")
        ),
    )
}

fn criterion5() -> Outcome {
    let t0 = Instant::now();
    let t = build("6", &opts()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let (worst, n, bad) = compare(&t, |_| true, 5e-3);
    outcome(
        bad.is_empty() && n == 18 && secs < 2.0,
        format!("{n} cells, worst dev {worst:.1e} (tol 5e-3), {secs:.3}s (limit 2s) {}", bad.join("; ")),
    )
}

/// Significant figures carried by a printed decimal string.
fn last_digit_unit(printed: f64) -> f64 {
    let s = format!("{printed}");
    let (mant, exp) = match s.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i32>().unwrap()),
        None => (s, 0),
    };
    let decimals = mant.split_once('.').map(|(_, d)| d.len()).unwrap_or(0) as i32;
    10f64.powi(exp - decimals)
}

fn criterion6() -> Outcome {
    let mut worst_node: f64 = 0.0;
    let mut worst_weight: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    let mut bad = Vec::new();
    for n in 1..=6 {
        let rule = laguerre_rule(n).unwrap();
        for i in 0..n {
            let row = format!("n={n};i={}", i + 1);
            let cell = |col: &str| reference().iter().find(|c| c.table == "gl" && c.row == row && c.col == col).unwrap();
            let node = cell("node");
            let weight = cell("weight");
            // nodes to 6 significant figures
            let rel = ((rule.nodes[i] - node.value) / node.value).abs();
            worst_node = worst_node.max(rel);
            if rel > 5e-6 {
                bad.push(format!("node {row}: {} vs {}", rule.nodes[i], node.value));
            }
            if weight.suspect {
                continue;
            }
            // printed weights are the weight formula at the printed nodes
            let w_at_printed = laguerre_weight(n, node.value);
            let ulp = last_digit_unit(weight.value);
            let dw = (w_at_printed - weight.value).abs() / ulp;
            worst_weight = worst_weight.max(dw);
            if dw > 1.0 {
                bad.push(format!("weight {row}: w(printed node) {w_at_printed:.7e} vs {}", weight.value));
            }
            let ex = ((rule.weights[i] - weight.value) / weight.value).abs();
            worst_exact = worst_exact.max(ex);
            if ex > 1e-4 {
                bad.push(format!("exact weight {row}: {} vs {}", rule.weights[i], weight.value));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "nodes worst rel {worst_node:.1e} (6 s.f.); weights at printed nodes within {worst_weight:.2} of a last-digit unit; exact weights worst rel {worst_exact:.1e}; 2 suspect n=4 weights excluded {}",
            bad.join("; ")
        ),
    )
}

fn criterion7() -> Outcome {
    let sym = VgParams::new(0.2, 0.85, 0.0).unwrap();
    let neg = VgParams::new(0.2, 0.85, -0.1).unwrap();
    let m = |s: f64| MarketInputs::new(s, 4000.0, 0.01, 2.0);
    let cfg = McConfig::new(100_000, 42);
    let mut lines = Vec::new();
    let mut all_in = true;
    let cases = [
        (Payoff::European, sym, m(4500.0), 799.497),
        (Payoff::European, sym, m(atm_spot(&sym, 4000.0, 0.01, 2.0).unwrap()), 514.325),
        (Payoff::European, sym, m(3500.0), 232.197),
        (Payoff::CashOrNothing, neg, m(4500.0), 0.658968),
        (Payoff::CashOrNothing, neg, m(atm_spot(&neg, 4000.0, 0.01, 2.0).unwrap()), 0.251402),
        (Payoff::CashOrNothing, neg, m(3000.0), 0.123843),
    ];
    for (payoff, p, mk, target) in cases {
        let e = mc_price(payoff, &p, &mk, &cfg).unwrap();
        let inside = e.contains(target);
        all_in &= inside;
        lines.push(format!("{} {target} in [{:.6}, {:.6}]: {inside}", payoff.name(), e.ci_low, e.ci_high));
    }
    let (hits, runs) = coverage();
    let calibrated = (180..=199).contains(&hits);
    outcome(
        all_in && calibrated,
        format!("n=1e5 seed 42: {}; coverage {hits}/{runs} (band 180..199)", lines.join(", ")),
    )
}

/// Coverage of the 95% CI for the ATM European over 200 seeds at n=1e3.
fn coverage() -> (usize, usize) {
    let p = VgParams::new(0.2, 0.85, 0.0).unwrap();
    let m = MarketInputs::new(atm_spot(&p, 4000.0, 0.01, 2.0).unwrap(), 4000.0, 0.01, 2.0);
    let target = series::european(&p, &m, &SeriesControl::default()).unwrap().value;
    let hits = (0..200u64)
        .filter(|&s| mc_price(Payoff::European, &p, &m, &McConfig::new(1000, 1000 + s)).unwrap().contains(target))
        .count();
    (hits, 200)
}

fn criterion8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ctrl = SeriesControl {
        max_order: 120,
        tail_tol: 1e-12,
        alpha_policy: AlphaPolicy::Nudge,
        strict: false,
    };
    let fcfg = FourierConfig {
        tail: true,
        ..Default::default()
    };
    let (mut w_cn, mut w_an, mut w_eu, mut w_mart, mut w_dec) = (0f64, 0f64, 0f64, 0f64, 0f64);
    let mut bad = Vec::new();
    for case in 0..50 {
        let sigma = rng.random_range(0.1..0.4);
        let nu = rng.random_range(0.2..1.5);
        let theta = rng.random_range(-0.15..0.15);
        let tau = rng.random_range(0.1..3.0);
        let moneyness = rng.random_range(0.6..1.6);
        let asym = VgParams::new(sigma, nu, theta).unwrap();
        let sym = VgParams::new(sigma, nu, 0.0).unwrap();
        let mk = MarketInputs::new(moneyness, 1.0, 0.01, tau);
        let tag = format!("#{case} (sigma {sigma:.3}, nu {nu:.3}, theta {theta:.3}, tau {tau:.3}, S/K {moneyness:.3})");
        let mut check = |name: &str, a: f64, b: f64, tol: f64, worst: &mut f64| {
            let d = (a - b).abs();
            *worst = worst.max(d);
            if !(d < tol) {
                bad.push(format!("{name} {tag}: {a} vs {b}"));
            }
        };
        let cn = series::price(Payoff::CashOrNothing, &asym, &mk, &ctrl).unwrap().value;
        let cn_l = fourier::lewis_cash_or_nothing(&asym, &mk, &fcfg).unwrap().value;
        check("c/n", cn, cn_l, 5e-3, &mut w_cn);
        let an = series::asset_or_nothing(&sym, &mk, &ctrl).unwrap().value;
        let an_l = fourier::lewis_asset_or_nothing(&sym, &mk, &fcfg).unwrap().value;
        check("a/n", an, an_l, 5e-3, &mut w_an);
        let eu = series::european(&sym, &mk, &ctrl).unwrap().value;
        let eu_cm = fourier::carr_madan_european(&sym, &mk, &fcfg).unwrap().value;
        check("european", eu, eu_cm, 5e-3, &mut w_eu);
        let phi = normalized_characteristic_fn(&asym, Complex64::new(0.0, -1.0), tau).unwrap();
        check("martingale", phi.norm(), 1.0, 1e-12, &mut w_mart);
        check("martingale", (phi - 1.0).norm(), 0.0, 1e-12, &mut w_mart);
        let cn_sym = series::cash_or_nothing(&sym, &mk, &ctrl).unwrap().value;
        check("decomposition", cn_sym, an - eu, 5e-3, &mut w_dec);
    }
    outcome(
        bad.is_empty(),
        format!(
            "50 sets (K=1): worst |series-Lewis| c/n {w_cn:.1e}, a/n {w_an:.1e}; |series-CM| {w_eu:.1e}; |phi(-i)-1| {w_mart:.1e}; decomposition {w_dec:.1e} {}",
            bad.join("; ")
        ),
    )
}

fn criterion9() -> Outcome {
    let p = VgParams::new(0.2, 0.85, 0.0).unwrap();
    let m = MarketInputs::new(4200.0, 4000.0, 0.01, 1.0 / 360.0);
    let v = |n| series::cash_or_nothing(&p, &m, &SeriesControl::truncated(n)).unwrap().value;
    let (v3, v15) = (v(3), v(15));
    outcome(
        (v3 - v15).abs() < 1e-3,
        format!("max=3 {v3:.7} vs max=15 {v15:.7}, |diff| {:.1e} (tol 1e-3)", (v3 - v15).abs()),
    )
}

fn criterion10() -> Outcome {
    let t = 2.0;
    let mut worst_pt: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut symmetric = true;
    for theta in [0.0, -0.1, 0.1] {
        let p = VgParams::new(0.2, 0.85, theta).unwrap();
        for i in 0..100 {
            let x = (i as f64 - (99 - i) as f64) / 99.0;
            let d = density(&p, x, t).unwrap();
            worst_pt = worst_pt.max((d - mixture_density(&p, x, t).unwrap()).abs());
            if theta == 0.0 {
                symmetric &= d == density(&p, -x, t).unwrap();
            }
        }
        let f = |x: f64| density(&p, x, t).unwrap();
        let right = integrate::semi_infinite(&f, 0.0, 1e-13, 1e-12).value;
        let left = integrate::semi_infinite(&|x: f64| f(-x), 0.0, 1e-13, 1e-12).value;
        worst_norm = worst_norm.max((left + right - 1.0).abs());
    }
    outcome(
        worst_pt < 1e-8 && worst_norm < 1e-5 && symmetric,
        format!(
            "closed form vs mixture worst {worst_pt:.1e} (tol 1e-8); |integral - 1| {worst_norm:.1e} (tol 1e-5); theta=0 symmetry exact: {symmetric}"
        ),
    )
}

fn speed() -> Outcome {
    let p = VgParams::new(0.2, 0.85, 0.0).unwrap();
    let ctrl = SeriesControl::truncated(15);
    let mut n = 0;
    let t0 = Instant::now();
    for payoff in [Payoff::European, Payoff::CashOrNothing, Payoff::AssetOrNothing] {
        for s in [3000.0, 3800.0, 4200.0, 5000.0] {
            let m = MarketInputs::new(s, 4000.0, 0.01, 2.0);
            std::hint::black_box(series::price(payoff, &p, &m, &ctrl).unwrap());
            n += 1;
        }
    }
    let per = t0.elapsed().as_secs_f64() * 1e3 / n as f64;
    outcome(per < 1.0, format!("{per:.4} ms per contract at max=15 (limit 1 ms)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("criterion 1 (table 1, cash-or-nothing)", criterion1),
        ("criterion 2 (table 2, asset-or-nothing)", criterion2),
        ("criterion 3 (table 3, short maturities)", criterion3),
        ("criterion 4 (tables 4-5, asymmetric)", criterion4),
        ("criterion 5 (table 6, series and Gauss-Laguerre)", criterion5),
        ("criterion 6 (table 8, Laguerre rule)", criterion6),
        ("criterion 7 (Monte Carlo)", criterion7),
        ("criterion 8 (cross-method properties)", criterion8),
        ("criterion 9 (short-maturity acceleration)", criterion9),
        ("criterion 10 (density suite)", criterion10),
        ("runtime (series per contract)", speed),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail.trim_end());
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
