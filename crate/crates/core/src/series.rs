//! Closed-form residue series for digital, European, gap, power and log
//! options (symmetric model) and for the asymmetric cash-or-nothing call.
//!
//! Every Gamma factor is evaluated on log scale with its sign carried
//! separately, and double series are summed along anti-diagonals
//! `n1 + n2 = const` with compensated accumulation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VgError};
use crate::model::{derive, DerivedQuantities, MarketInputs, VgParams};
use crate::result::{branch_of, Branch, Method, Payoff, PriceResult};
use crate::specfun::{gamma, ln_gamma, log_gamma, sin_pi};

const ALPHA_GUARD: f64 = 1e-8;
const NUDGE: f64 = 1e-8;
const CONVERGENCE_REL: f64 = 1e-6;

/// What to do when `alpha = tau/nu - 1/2` is (nearly) an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    #[default]
    Error,
    /// Scale `nu` by `1 + 1e-8` until alpha clears the guard band.
    Nudge,
}

/// Truncation and convergence settings for the series pricers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Largest index used for each summation variable.
    pub max_order: usize,
    /// Early stop once two consecutive anti-diagonals fall below `tail_tol * |sum|`.
    pub tail_tol: f64,
    pub alpha_policy: AlphaPolicy,
    /// Report a truncated, unconverged sum as an error (`true`) or return it
    /// flagged in the diagnostics (`false`, used to reproduce truncation tables).
    pub strict: bool,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_order: 25,
            tail_tol: 1e-10,
            alpha_policy: AlphaPolicy::Error,
            strict: true,
        }
    }
}

impl SeriesControl {
    pub fn with_max_order(max_order: usize) -> Self {
        SeriesControl {
            max_order,
            ..Default::default()
        }
    }

    /// Fixed truncation, no early stop, unconverged sums allowed.
    pub fn truncated(max_order: usize) -> Self {
        SeriesControl {
            max_order,
            tail_tol: 0.0,
            alpha_policy: AlphaPolicy::Error,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=200).contains(&self.max_order) {
            return Err(VgError::InvalidInput(format!(
                "max_order must be in [1, 200], got {}",
                self.max_order
            )));
        }
        if !(self.tail_tol >= 0.0) {
            return Err(VgError::InvalidInput("tail_tol must be >= 0".into()));
        }
        Ok(())
    }
}

fn alpha_degenerate(alpha: f64) -> bool {
    (alpha - alpha.round()).abs() < ALPHA_GUARD
}

struct Prepared {
    params: VgParams,
    d: DerivedQuantities,
    nudged_nu: Option<f64>,
}

fn prepare(
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
    symmetric: bool,
) -> Result<Prepared> {
    ctrl.validate()?;
    params.validate()?;
    if symmetric && params.theta != 0.0 {
        return Err(VgError::Unsupported(format!(
            "this series requires theta = 0 (got {}); only the cash-or-nothing call has an asymmetric series",
            params.theta
        )));
    }
    let mut p = *params;
    let mut d = derive(&p, market)?;
    let mut nudged_nu = None;
    if alpha_degenerate(d.alpha) {
        match ctrl.alpha_policy {
            AlphaPolicy::Error => return Err(VgError::DegenerateAlpha { alpha: d.alpha }),
            AlphaPolicy::Nudge => {
                while alpha_degenerate(d.alpha) {
                    p.nu *= 1.0 + NUDGE;
                    d = derive(&p, market)?;
                }
                nudged_nu = Some(p.nu);
            }
        }
    }
    Ok(Prepared {
        params: p,
        d,
        nudged_nu,
    })
}

#[derive(Debug, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new() -> Self {
        Kahan { sum: 0.0, c: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SumOut {
    value: f64,
    terms: usize,
    truncation: f64,
    stopped_early: bool,
}

impl SumOut {
    fn zero() -> Self {
        SumOut {
            value: 0.0,
            terms: 0,
            truncation: 0.0,
            stopped_early: true,
        }
    }

    fn merge(self, other: SumOut) -> SumOut {
        SumOut {
            value: self.value + other.value,
            terms: self.terms + other.terms,
            truncation: self.truncation + other.truncation,
            stopped_early: self.stopped_early && other.stopped_early,
        }
    }

    fn scale(self, a: f64) -> SumOut {
        SumOut {
            value: a * self.value,
            truncation: a.abs() * self.truncation,
            ..self
        }
    }
}

/// Sums `term(n1, n2)` over `0 <= n1 <= max`, `n2_lo <= n2 <= n2_hi`, by anti-diagonals.
///
/// The truncation estimate is the absolute mass of the last anti-diagonal when
/// the early stop fires, otherwise that of the outer shell of the index box.
/// A single series (`n2_hi == 0`) uses its last two terms, since alternate
/// terms can vanish identically.
fn sum_diagonals<F>(max: usize, n2_lo: usize, n2_hi: usize, tail_tol: f64, mut term: F) -> Result<SumOut>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let mut acc = Kahan::new();
    let mut terms = 0;
    let mut shell = 0.0;
    let mut small_run = 0;
    for d in n2_lo..=(max + n2_hi) {
        let mut diag_abs = 0.0;
        let mut any = false;
        let lo = d.saturating_sub(n2_hi);
        let hi = d.saturating_sub(n2_lo).min(max);
        for n1 in lo..=hi {
            let n2 = d - n1;
            let t = term(n1, n2)?;
            if !t.is_finite() {
                return Err(VgError::Overflow {
                    what: format!("series term ({n1}, {n2})"),
                });
            }
            acc.add(t);
            terms += 1;
            diag_abs += t.abs();
            any = true;
            let single_edge = n2_hi == 0 && n1 + 1 == max;
            if n1 == max || single_edge || (n2 == n2_hi && n2_hi == max) {
                shell += t.abs();
            }
        }
        if !any {
            continue;
        }
        if diag_abs <= tail_tol * acc.sum.abs() {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= 2 {
            return Ok(SumOut {
                value: acc.sum,
                terms,
                truncation: diag_abs,
                stopped_early: true,
            });
        }
    }
    Ok(SumOut {
        value: acc.sum,
        terms,
        truncation: shell,
        stopped_early: false,
    })
}

/// Single series `sum_{n = lo}^{max} term(n)`.
fn sum_single<F>(lo: usize, max: usize, tail_tol: f64, mut term: F) -> Result<SumOut>
where
    F: FnMut(usize) -> Result<f64>,
{
    if lo > max {
        return Ok(SumOut::zero());
    }
    sum_diagonals(max, 0, 0, tail_tol, |n1, _| {
        if n1 < lo {
            Ok(0.0)
        } else {
            term(n1)
        }
    })
    .map(|mut s| {
        s.terms -= lo.min(s.terms);
        s
    })
}

fn ln_factorials(max: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    v.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        v.push(acc);
    }
    v
}

fn parity(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Symmetric OTM double series in the rescaled form
/// `sum (-1)^n1/n1! rho^n2 p^n2 [G1 x^n1 s^n2 + 2 G2 x^(2n1+1+2a) kappa^n2]`,
/// `x = kappa/s`, with `rho = -1` for the reflected (ITM) evaluation.
struct SymSeries {
    alpha: f64,
    s: f64,
    kappa: f64,
    rho: f64,
    power: f64,
    ln_pref: f64,
}

impl SymSeries {
    fn sum(&self, max: usize, n2_lo: usize, n2_hi: usize, tail_tol: f64) -> Result<SumOut> {
        let a = self.alpha;
        let ln_x = (self.kappa / self.s).ln();
        let ln_s = self.s.ln();
        let ln_k = self.kappa.ln();
        let ln_p = self.power.ln();
        let lf = ln_factorials(max);
        let sin = sin_pi(a);
        let ln_sin = sin.abs().ln();
        let sin_sign = sin.signum();
        sum_diagonals(max, n2_lo, n2_hi, tail_tol, |n1, n2| {
            let (f1, f2) = (n1 as f64, n2 as f64);
            let dd = n2 as i64 - n1 as i64;
            let t1 = if dd % 2 == 0 && dd <= -2 {
                0.0
            } else {
                let (lgn, sgn) = log_gamma((dd as f64 + 1.0) / 2.0 + a)?;
                let (lgd, sgd) = log_gamma(dd as f64 / 2.0 + 1.0)?;
                let sign = sgn * sgd * parity(n1) * self.rho.powi(n2 as i32);
                sign * (self.ln_pref + lgn - lgd + f1 * ln_x + f2 * (ln_s + ln_p) - lf[n1]).exp()
            };
            let (lga, _) = log_gamma(f1 + 0.5 + a)?;
            let (lgb, _) = log_gamma(2.0 * f1 + f2 + 2.0 + 2.0 * a)?;
            let sign2 = (-self.rho).powi(n2 as i32) * sin_sign;
            let t2 = sign2
                * (self.ln_pref + lga - lgb + (2.0 * f1 + 1.0 + 2.0 * a) * ln_x + f2 * (ln_k + ln_p)
                    - lf[n1]
                    - ln_sin)
                    .exp();
            Ok(t1 + t2)
        })
    }
}

/// `pref * sum_{n >= lo} Gamma((n+1)/2 + a) / Gamma(n/2 + 1) z^n`, the ATM series.
fn atm_series(alpha: f64, z: f64, ln_pref: f64, lo: usize, ctrl: &SeriesControl) -> Result<SumOut> {
    let ln_z = z.ln();
    sum_single(lo, ctrl.max_order, ctrl.tail_tol, |n| {
        let nf = n as f64;
        let l = ln_pref + ln_gamma((nf + 1.0) / 2.0 + alpha)? - ln_gamma(nf / 2.0 + 1.0)? + nf * ln_z;
        Ok(l.exp())
    })
}

fn finish(
    value: f64,
    out: SumOut,
    branch: Branch,
    prep: &Prepared,
    ctrl: &SeriesControl,
) -> Result<PriceResult> {
    let converged = out.stopped_early || out.truncation <= CONVERGENCE_REL * value.abs();
    if ctrl.strict && !converged {
        return Err(VgError::NonConvergence {
            value,
            truncation_estimate: out.truncation,
            max_order: ctrl.max_order,
        });
    }
    let mut r = PriceResult::new(value, Method::Series, branch);
    r.terms_evaluated = out.terms;
    r.truncation_estimate = out.truncation;
    r.note("converged", converged);
    r.note("max_order", ctrl.max_order);
    r.note("alpha", prep.d.alpha);
    if let Some(nu) = prep.nudged_nu {
        r.note("nudged_nu", nu);
    }
    Ok(r)
}

fn ln_gamma_shape(p: &VgParams, tau: f64) -> Result<f64> {
    ln_gamma(tau / p.nu)
}

/// Shared driver for the asset-or-nothing (`n2_lo = 0`) and European (`n2_lo = 1`) calls.
fn symmetric_call(
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
    n2_lo: usize,
) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, true)?;
    let d = &prep.d;
    let f = d.forward_strike;
    let ln_pref = f.ln() - 2f64.ln() - ln_gamma_shape(&prep.params, market.tau)?;
    let branch = branch_of(d.rn_moneyness);
    let max = ctrl.max_order;
    let (value, out) = match branch {
        Branch::Atm => {
            let o = atm_series(d.alpha, d.sigma_nu, ln_pref, n2_lo, ctrl)?;
            (o.value, o)
        }
        Branch::Otm | Branch::Itm => {
            let itm = branch == Branch::Itm;
            let ser = SymSeries {
                alpha: d.alpha,
                s: d.sigma_nu,
                kappa: d.rn_moneyness.abs(),
                rho: if itm { -1.0 } else { 1.0 },
                power: 1.0,
                ln_pref,
            };
            let o = ser.sum(max, n2_lo, max, ctrl.tail_tol)?;
            if itm {
                let base = if n2_lo == 0 {
                    d.effective_spot
                } else {
                    d.effective_spot - f
                };
                (base - o.value, o)
            } else {
                (o.value, o)
            }
        }
    };
    finish(value, out, branch, &prep, ctrl)
}

/// Asset-or-nothing call, paying `S_T` when `S_T > K`.
pub fn asset_or_nothing(params: &VgParams, market: &MarketInputs, ctrl: &SeriesControl) -> Result<PriceResult> {
    symmetric_call(params, market, ctrl, 0)
}

/// European call.
pub fn european(params: &VgParams, market: &MarketInputs, ctrl: &SeriesControl) -> Result<PriceResult> {
    symmetric_call(params, market, ctrl, 1)
}

/// Cash-or-nothing call, paying 1 when `S_T > K` (symmetric model).
pub fn cash_or_nothing(params: &VgParams, market: &MarketInputs, ctrl: &SeriesControl) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, true)?;
    let d = &prep.d;
    let disc = d.discount;
    let branch = branch_of(d.rn_moneyness);
    if branch == Branch::Atm {
        return finish(disc / 2.0, SumOut::zero(), branch, &prep, ctrl);
    }
    let itm = branch == Branch::Itm;
    let ln_pref = disc.ln() - 2f64.ln() - ln_gamma_shape(&prep.params, market.tau)?;
    let ser = SymSeries {
        alpha: d.alpha,
        s: d.sigma_nu,
        kappa: d.rn_moneyness.abs(),
        rho: if itm { -1.0 } else { 1.0 },
        power: 1.0,
        ln_pref,
    };
    let o = ser.sum(ctrl.max_order, 0, 0, ctrl.tail_tol)?;
    let value = if itm { disc - o.value } else { o.value };
    finish(value, o, branch, &prep, ctrl)
}

/// Gap call paying `S_T - K1` when `S_T > K2`; `K1 = market.strike`,
/// `K2 = market.trigger_strike` (defaults to `K1`).
pub fn gap(params: &VgParams, market: &MarketInputs, ctrl: &SeriesControl) -> Result<PriceResult> {
    let k1 = market.strike;
    let k2 = market.trigger_strike.unwrap_or(k1);
    let m2 = MarketInputs {
        strike: k2,
        trigger_strike: None,
        ..*market
    };
    let an = asset_or_nothing(params, &m2, ctrl)?;
    let cn = cash_or_nothing(params, &m2, ctrl)?;
    let mut r = PriceResult::new(an.value - k1 * cn.value, Method::Series, an.branch);
    r.terms_evaluated = an.terms_evaluated + cn.terms_evaluated;
    r.truncation_estimate = an.truncation_estimate + k1 * cn.truncation_estimate;
    r.diagnostics = an.diagnostics;
    r.note("trigger_strike", k2);
    Ok(r)
}

/// Power asset-or-nothing call, paying `S_T^q` when `S_T^q > K`.
pub fn power_asset_or_nothing(
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, true)?;
    let d = &prep.d;
    let q = market.power;
    let f = d.forward_strike;
    let ln_pref = f.ln() - 2f64.ln() - ln_gamma_shape(&prep.params, market.tau)?;
    let kt = d.power_moneyness;
    let branch = branch_of(kt);
    let max = ctrl.max_order;
    let (value, out) = match branch {
        Branch::Atm => {
            let o = atm_series(d.alpha, q * d.sigma_nu, ln_pref, 0, ctrl)?;
            (o.value, o)
        }
        Branch::Otm | Branch::Itm => {
            let itm = branch == Branch::Itm;
            let ser = SymSeries {
                alpha: d.alpha,
                s: d.sigma_nu,
                kappa: kt.abs(),
                rho: if itm { -1.0 } else { 1.0 },
                power: q,
                ln_pref,
            };
            let o = ser.sum(max, 0, max, ctrl.tail_tol)?;
            if itm {
                (discounted_power_moment(&prep.params, market, d)? - o.value, o)
            } else {
                (o.value, o)
            }
        }
    };
    finish(value, out, branch, &prep, ctrl)
}

/// `e^{-r tau} E[S_T^q]` from the characteristic function at `u = -iq`.
fn discounted_power_moment(p: &VgParams, market: &MarketInputs, d: &DerivedQuantities) -> Result<f64> {
    let q = market.power;
    let tau = market.tau;
    let base = 1.0 - p.theta * p.nu * q - 0.5 * p.sigma * p.sigma * p.nu * q * q;
    if !(base > 0.0) {
        return Err(VgError::Domain(format!(
            "E[S_T^{q}] is infinite: 1 - theta nu q - sigma^2 nu q^2 / 2 = {base} <= 0"
        )));
    }
    let l = q * d.effective_spot.ln() + (q - 1.0) * market.rate * tau + q * d.omega * tau
        - (tau / p.nu) * base.ln();
    Ok(l.exp())
}

/// Call on the log return, paying `(ln S_T - ln K)^+`. ITM inputs are rejected.
pub fn log_call(params: &VgParams, market: &MarketInputs, ctrl: &SeriesControl) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, true)?;
    let d = &prep.d;
    let a = d.alpha;
    let s = d.sigma_nu;
    let lg_shape = ln_gamma_shape(&prep.params, market.tau)?;
    let branch = branch_of(d.rn_moneyness);
    match branch {
        Branch::Itm => Err(VgError::Domain(format!(
            "log call series needs risk-neutral moneyness <= 0, got {}",
            d.rn_moneyness
        ))),
        Branch::Atm => {
            let v = d.discount / PI.sqrt() * (ln_gamma(1.0 + a)? - lg_shape).exp() * s;
            finish(v, SumOut::zero(), branch, &prep, ctrl)
        }
        Branch::Otm => {
            let kappa = -d.rn_moneyness;
            let ln_k = kappa.ln();
            let ln_2s = (2.0 * s).ln();
            let lf = ln_factorials(ctrl.max_order);
            let o = sum_single(0, ctrl.max_order, ctrl.tail_tol, |n| {
                let nf = n as f64;
                let (g1, s1) = log_gamma(a - nf)?;
                let (g2, s2) = log_gamma(-a - nf)?;
                let c1 = (2.0 * nf + 2.0) * (2.0 * nf + 1.0);
                let c2 = (2.0 * nf + 2.0 * a + 2.0) * (2.0 * nf + 2.0 * a + 1.0);
                let t1 = s1 / c1 * (g1 - lf[n] + (2.0 * nf + 2.0) * ln_k - (2.0 * nf + 1.0) * ln_2s).exp();
                let t2 = s2 / c2
                    * (g2 - lf[n] + (2.0 * nf + 2.0 * a + 2.0) * ln_k - (2.0 * a + 2.0 * nf + 1.0) * ln_2s)
                        .exp();
                Ok(parity(n) * (t1 + t2))
            })?;
            let head = gamma(1.0 + a)? * s - PI.sqrt() / 2.0 * gamma(0.5 + a)? * kappa;
            let pref = d.discount / (PI.sqrt() * lg_shape.exp());
            let out = o.scale(pref);
            finish(pref * head + out.value, out, branch, &prep, ctrl)
        }
    }
}

/// Asymmetric cash-or-nothing call (any `theta`).
pub fn asym_cash_or_nothing(
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, false)?;
    let d = &prep.d;
    let a = d.alpha;
    let s = d.sigma_nu;
    let q = d.q_factor;
    let ln_pref = d.discount.ln()
        - (2.0 + 2.0 * a) * 2f64.ln()
        - 0.5 * PI.ln()
        - (1.0 + 2.0 * a) * s.ln()
        - ln_gamma_shape(&prep.params, market.tau)?;
    let branch = branch_of(d.rn_moneyness);
    let max = ctrl.max_order;
    let lf = ln_factorials(max);
    let ln_q = q.ln();

    let series_one = |ths: f64| -> Result<SumOut> {
        let ln_t = ths.abs().ln();
        let sg = ths.signum();
        sum_single(0, max, ctrl.tail_tol, |n| {
            if n > 0 && ths == 0.0 {
                return Ok(0.0);
            }
            let nf = n as f64;
            let pw = if n == 0 { 0.0 } else { nf * ln_t };
            let l = ln_pref + ln_gamma((nf + 1.0) / 2.0)? + ln_gamma((nf + 1.0) / 2.0 + a)?
                - ((nf + 1.0) / 2.0 + a) * ln_q
                + pw
                - lf[n];
            Ok(sg.powi(n as i32) * l.exp())
        })
    };
    let series_two = |kappa: f64, ths: f64| -> Result<SumOut> {
        let ln_k = kappa.ln();
        let ln_t = ths.abs().ln();
        let sg = ths.signum();
        sum_diagonals(max, 0, max, ctrl.tail_tol, |n1, n2| {
            if n2 > 0 && ths == 0.0 {
                return Ok(0.0);
            }
            let (f1, f2) = (n1 as f64, n2 as f64);
            let m = 2.0 * f1 + f2 + 1.0;
            let (g1, s1) = log_gamma(a - f1)?;
            let (g2, s2) = log_gamma(-a - f1)?;
            let pw = if n2 == 0 { 0.0 } else { f2 * ln_t };
            let common = ln_pref + 2f64.ln() - lf[n1] - lf[n2] + pw;
            let ta = -s1 / m * (common + g1 + m * ln_k + (f1 - a) * ln_q).exp();
            let tb = -s2 / (m + 2.0 * a) * (common + g2 + (m + 2.0 * a) * ln_k + f1 * ln_q).exp();
            Ok(parity(n1) * sg.powi(n2 as i32) * (ta + tb))
        })
    };

    let ths = d.theta_sigma;
    let (value, out) = match branch {
        Branch::Atm => {
            let o = series_one(ths)?;
            (o.value, o)
        }
        Branch::Otm => {
            let o = series_one(ths)?.merge(series_two(-d.rn_moneyness, ths)?);
            (o.value, o)
        }
        Branch::Itm => {
            let o = series_one(-ths)?.merge(series_two(d.rn_moneyness, -ths)?);
            (d.discount - o.value, o)
        }
    };
    finish(value, out, branch, &prep, ctrl)
}

/// At-the-money-forward European call (`S = F`) under `omega ~ -sigma^2/2`.
/// With `leading_only` returns the one-term estimate
/// `S / sqrt(2 pi) Gamma(1/2 + tau/nu) / Gamma(tau/nu) sigma sqrt(nu)`.
pub fn european_atmf(
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
    leading_only: bool,
) -> Result<PriceResult> {
    let prep = prepare(params, market, ctrl, true)?;
    let p = &prep.params;
    let tau = market.tau;
    let spot = prep.d.effective_spot;
    let lg_shape = ln_gamma_shape(p, tau)?;
    if leading_only {
        let v = spot / (2.0 * PI).sqrt() * (ln_gamma(0.5 + tau / p.nu)? - lg_shape).exp() * p.sigma * p.nu.sqrt();
        let mut out = SumOut::zero();
        out.terms = 1;
        return finish(v, out, Branch::Otm, &prep, ctrl);
    }
    let ser = SymSeries {
        alpha: prep.d.alpha,
        s: prep.d.sigma_nu,
        kappa: 0.5 * p.sigma * p.sigma * tau,
        rho: 1.0,
        power: 1.0,
        ln_pref: spot.ln() - 2f64.ln() - lg_shape,
    };
    let o = ser.sum(ctrl.max_order, 1, ctrl.max_order, ctrl.tail_tol)?;
    finish(o.value, o, Branch::Otm, &prep, ctrl)
}

/// Implied ATM-forward volatility from the leading-term estimate.
pub fn implied_atmf_vol(observed_price: f64, spot: f64, tau: f64, nu: f64) -> Result<f64> {
    for (name, v) in [("price", observed_price), ("spot", spot), ("tau", tau), ("nu", nu)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(VgError::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let ratio = (ln_gamma(tau / nu)? - ln_gamma(0.5 + tau / nu)?).exp();
    Ok((2.0 * PI / nu).sqrt() * ratio * observed_price / spot)
}

/// Series price of any supported payoff. The cash-or-nothing call switches to
/// the asymmetric series when `theta != 0`.
pub fn price(
    payoff: Payoff,
    params: &VgParams,
    market: &MarketInputs,
    ctrl: &SeriesControl,
) -> Result<PriceResult> {
    match payoff {
        Payoff::European => european(params, market, ctrl),
        Payoff::AssetOrNothing => asset_or_nothing(params, market, ctrl),
        Payoff::CashOrNothing if params.theta != 0.0 => asym_cash_or_nothing(params, market, ctrl),
        Payoff::CashOrNothing => cash_or_nothing(params, market, ctrl),
        Payoff::Gap => gap(params, market, ctrl),
        Payoff::PowerAssetOrNothing => power_asset_or_nothing(params, market, ctrl),
        Payoff::LogCall => log_call(params, market, ctrl),
    }
}
