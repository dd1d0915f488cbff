//! Fourier benchmarks: Lewis integrals for the digitals and the damped
//! Carr-Madan integral for the European call.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VgError};
use crate::integrate::{self, Quad};
use crate::model::{derive, martingale_adjustment, normalized_characteristic_fn, MarketInputs, VgParams};
use crate::result::{branch_of, Method, Payoff, PriceResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierConfig {
    /// Upper limit of the integration in the Fourier variable.
    pub u_max: f64,
    /// Initial number of panels on `[0, u_max]` before adaptive refinement.
    pub panels: usize,
    /// Carr-Madan damping exponent.
    pub damping_a: f64,
    pub abs_tol: f64,
    /// Add the integral beyond `u_max` (log-variable quadrature, then
    /// half-period blocks accelerated by Wynn's epsilon).
    pub tail: bool,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            u_max: 1e4,
            panels: 2000,
            damping_a: 1.0,
            abs_tol: 1e-9,
            tail: false,
        }
    }
}

impl FourierConfig {
    pub fn with_u_max(u_max: f64) -> Self {
        FourierConfig {
            u_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0) || !self.u_max.is_finite() {
            return Err(VgError::InvalidInput(format!("u_max must be > 0, got {}", self.u_max)));
        }
        if self.panels == 0 {
            return Err(VgError::InvalidInput("panels must be >= 1".into()));
        }
        if !(self.abs_tol > 0.0) {
            return Err(VgError::InvalidInput("abs_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Integrates `f` over `[0, u_max]` (plus the tail when requested) with panels
/// no wider than the oscillation scale `pi / (2|freq| + 1)`.
fn oscillatory<F: Fn(f64) -> f64>(f: &F, freq: f64, cfg: &FourierConfig) -> Quad {
    let width = (cfg.u_max / cfg.panels as f64).min(PI / (2.0 * freq.abs() + 1.0));
    let n = (cfg.u_max / width).ceil().max(1.0) as usize;
    let edges: Vec<f64> = (0..=n).map(|i| cfg.u_max * i as f64 / n as f64).collect();
    let mut q = integrate::adaptive_from(f, &edges, cfg.abs_tol, 0.0, 4 * n + 64);
    if cfg.tail {
        let t = tail(f, cfg.u_max, freq, cfg.abs_tol);
        q.value += t.value;
        q.error += t.error;
        q.evals += t.evals;
        q.converged &= t.converged;
    }
    q
}

/// `int_{u0}^inf f` for an integrand oscillating like `e^{i freq u}` with slowly
/// decaying amplitude.
fn tail<F: Fn(f64) -> f64>(f: &F, u0: f64, freq: f64, abs_tol: f64) -> Quad {
    let w = freq.abs();
    let u1 = if w > 0.0 { (40.0 * PI / w).min(1e15).max(u0) } else { 1e15 };
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evals = 0;
    if u1 > u0 {
        // non-oscillatory stretch, smooth in log u
        let g = |z: f64| {
            let u = z.exp();
            f(u) * u
        };
        let (z0, z1) = (u0.ln(), u1.ln());
        let n = ((z1 - z0) * 8.0).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=n).map(|i| z0 + (z1 - z0) * i as f64 / n as f64).collect();
        let q = integrate::adaptive_from(&g, &edges, abs_tol, 0.0, 8 * n + 64);
        value += q.value;
        error += q.error;
        evals += q.evals;
    }
    if w == 0.0 || u1 >= 1e15 {
        return Quad {
            value,
            error,
            evals,
            converged: true,
        };
    }
    let half = PI / w;
    let mut partial = Vec::with_capacity(40);
    let mut s = 0.0;
    let mut a = u1;
    for _ in 0..40 {
        let q = integrate::adaptive_from(f, &[a, a + 0.5 * half, a + half], abs_tol * 1e-2, 0.0, 64);
        evals += q.evals;
        error += q.error;
        s += q.value;
        partial.push(s);
        a += half;
        if q.value.abs() < abs_tol * 1e-3 {
            break;
        }
    }
    let lim = integrate::wynn_epsilon(&partial);
    let n = partial.len();
    let acc_err = if n >= 2 {
        (lim - integrate::wynn_epsilon(&partial[..n - 1])).abs()
    } else {
        0.0
    };
    Quad {
        value: value + lim,
        error: error + acc_err,
        evals,
        converged: true,
    }
}

fn finish(value: f64, q: &Quad, scale: f64, rn_moneyness: f64, cfg: &FourierConfig) -> PriceResult {
    let mut r = PriceResult::new(value, Method::Fourier, branch_of(rn_moneyness));
    r.terms_evaluated = q.evals;
    r.truncation_estimate = q.error * scale.abs();
    r.note("u_max", cfg.u_max);
    r.note("tail", cfg.tail);
    r.note("quad_converged", q.converged);
    r
}

/// Gil-Pelaez probability `P(X_tau + omega tau > -k)` under the measure whose
/// normalized characteristic function is `u -> phi(u - shift i)`.
fn lewis_probability(
    params: &VgParams,
    k: f64,
    rn_moneyness: f64,
    tau: f64,
    shift: f64,
    cfg: &FourierConfig,
) -> Result<(f64, Quad)> {
    // surface branch-cut problems before integrating
    normalized_characteristic_fn(params, Complex64::new(0.0, -shift), tau)?;
    let f = |u: f64| {
        let z = Complex64::new(u, -shift);
        match normalized_characteristic_fn(params, z, tau) {
            Ok(phi) => {
                let v = Complex64::new(0.0, u * k).exp() * phi / Complex64::new(0.0, u);
                v.re
            }
            Err(_) => f64::NAN,
        }
    };
    let q = oscillatory(&f, rn_moneyness, cfg);
    if !q.value.is_finite() {
        return Err(VgError::Domain("Lewis integrand is not finite".into()));
    }
    Ok((0.5 + q.value / PI, q))
}

/// Asset-or-nothing call by the Lewis representation (any theta).
pub fn lewis_asset_or_nothing(params: &VgParams, market: &MarketInputs, cfg: &FourierConfig) -> Result<PriceResult> {
    cfg.validate()?;
    let d = derive(params, market)?;
    let (p, q) = lewis_probability(params, d.log_fwd_moneyness, d.rn_moneyness, market.tau, 1.0, cfg)?;
    let s = d.effective_spot;
    Ok(finish(s * p, &q, s / PI, d.rn_moneyness, cfg))
}

/// Cash-or-nothing call by the Lewis representation (any theta).
pub fn lewis_cash_or_nothing(params: &VgParams, market: &MarketInputs, cfg: &FourierConfig) -> Result<PriceResult> {
    cfg.validate()?;
    let d = derive(params, market)?;
    let (p, q) = lewis_probability(params, d.log_fwd_moneyness, d.rn_moneyness, market.tau, 0.0, cfg)?;
    Ok(finish(d.discount * p, &q, d.discount / PI, d.rn_moneyness, cfg))
}

/// Largest admissible Carr-Madan damping, `sqrt(2/nu)/sigma - 1` (symmetric model only).
pub fn a_max(params: &VgParams) -> Result<f64> {
    if params.theta != 0.0 {
        return Err(VgError::Unsupported(
            "a_max is only known for theta = 0; probe the characteristic function at u = -(a+1)i instead".into(),
        ));
    }
    Ok((2.0 / params.nu).sqrt() / params.sigma - 1.0)
}

/// Whether `E[S_T^{a+1}]` is finite, i.e. `1 - theta nu (a+1) - sigma^2 nu (a+1)^2 / 2 > 0`.
pub fn damping_admissible(params: &VgParams, a: f64) -> bool {
    let b = a + 1.0;
    a > 0.0 && 1.0 - params.theta * params.nu * b - 0.5 * params.sigma * params.sigma * params.nu * b * b > 0.0
}

/// Root of the admissibility condition in `a` (equals [`a_max`] when theta = 0).
fn damping_bound(params: &VgParams) -> f64 {
    let VgParams { sigma, nu, theta } = *params;
    let s2n = sigma * sigma * nu;
    (-theta * nu + (theta * theta * nu * nu + 2.0 * s2n).sqrt()) / s2n - 1.0
}

/// European call by the damped Carr-Madan integral.
pub fn carr_madan_european(params: &VgParams, market: &MarketInputs, cfg: &FourierConfig) -> Result<PriceResult> {
    cfg.validate()?;
    let d = derive(params, market)?;
    let a = cfg.damping_a;
    let bound = if params.theta == 0.0 { a_max(params)? } else { damping_bound(params) };
    if !(a > 0.0) || a >= bound || !damping_admissible(params, a) {
        return Err(VgError::DampingOutOfRange { a, a_max: bound });
    }
    let tau = market.tau;
    let omega = martingale_adjustment(params)?;
    let ln_k = market.strike.ln();
    let drift = d.effective_spot.ln() + (market.rate + omega) * tau;
    let f = |u: f64| {
        let v = Complex64::new(u, -(a + 1.0));
        let phi = match crate::model::characteristic_fn(params, v, tau) {
            Ok(p) => p,
            Err(_) => return f64::NAN,
        };
        let i = Complex64::i();
        let num = (i * v * drift - i * u * ln_k).exp() * phi;
        let den = Complex64::new(a * a + a - u * u, (2.0 * a + 1.0) * u);
        (num / den).re
    };
    let q = oscillatory(&f, d.rn_moneyness, cfg);
    if !q.value.is_finite() {
        return Err(VgError::Domain("Carr-Madan integrand is not finite".into()));
    }
    let scale = (-a * ln_k - market.rate * tau).exp() / PI;
    let mut r = finish(scale * q.value, &q, scale, d.rn_moneyness, cfg);
    r.note("damping_a", a);
    Ok(r)
}

/// Fourier price of a payoff, where a Fourier engine exists.
pub fn price(payoff: Payoff, params: &VgParams, market: &MarketInputs, cfg: &FourierConfig) -> Result<PriceResult> {
    match payoff {
        Payoff::European => carr_madan_european(params, market, cfg),
        Payoff::AssetOrNothing => lewis_asset_or_nothing(params, market, cfg),
        Payoff::CashOrNothing => lewis_cash_or_nothing(params, market, cfg),
        Payoff::Gap => {
            let k1 = market.strike;
            let m2 = MarketInputs {
                strike: market.trigger_strike.unwrap_or(k1),
                trigger_strike: None,
                ..*market
            };
            let an = lewis_asset_or_nothing(params, &m2, cfg)?;
            let cn = lewis_cash_or_nothing(params, &m2, cfg)?;
            let mut r = an.clone();
            r.value = an.value - k1 * cn.value;
            r.terms_evaluated += cn.terms_evaluated;
            r.truncation_estimate += k1 * cn.truncation_estimate;
            Ok(r)
        }
        other => Err(VgError::Unsupported(format!("no Fourier engine for {other}"))),
    }
}
