//! Gauss-Laguerre discretisation of the Gamma time change: the VG law becomes
//! a finite mixture of Gaussians and the European call a convex combination
//! of Black-Scholes prices.

use serde::Serialize;

use crate::error::{Result, VgError};
use crate::model::{derive, MarketInputs, VgParams};
use crate::result::{branch_of, Method, PriceResult};
use crate::specfun::{laguerre_rule, normal_cdf, QuadratureRule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlWeights {
    pub rule: QuadratureRule,
    /// Gamma shape `t / nu`.
    pub shape: f64,
    /// `w_i u_i^(shape-1)`, normalised to sum to one.
    pub p_weights: Vec<f64>,
}

impl GlWeights {
    pub fn new(n: usize, shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(VgError::InvalidInput(format!("shape must be > 0, got {shape}")));
        }
        let rule = laguerre_rule(n)?;
        let logs: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(u, w)| w.ln() + (shape - 1.0) * u.ln())
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        let p_weights = raw.into_iter().map(|p| p / total).collect();
        Ok(GlWeights { rule, shape, p_weights })
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rule.nodes.iter().copied().zip(self.p_weights.iter().copied())
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(VgError::InvalidInput(format!("t must be > 0, got {t}")));
    }
    Ok(())
}

/// Gaussian-mixture approximation of the VG density of `X_t`.
pub fn gl_density(params: &VgParams, x: f64, t: f64, n: usize) -> Result<f64> {
    params.validate()?;
    check_t(t)?;
    let g = GlWeights::new(n, t / params.nu)?;
    let VgParams { sigma, nu, theta } = *params;
    Ok(g
        .iter()
        .map(|(u, p)| {
            let sd = sigma * (nu * u).sqrt();
            let z = (x - theta * nu * u) / sd;
            p * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum())
}

/// Quadrature approximation of the martingale adjustment.
pub fn gl_omega(params: &VgParams, t: f64, n: usize) -> Result<f64> {
    params.validate()?;
    check_t(t)?;
    let g = GlWeights::new(n, t / params.nu)?;
    omega_from(params, t, &g)
}

fn omega_from(params: &VgParams, t: f64, g: &GlWeights) -> Result<f64> {
    let VgParams { sigma, nu, theta } = *params;
    let m: f64 = g
        .iter()
        .map(|(u, p)| p * (theta * nu * u + 0.5 * sigma * sigma * nu * u).exp())
        .sum();
    if !m.is_finite() {
        return Err(VgError::Overflow {
            what: "exp(theta nu u + sigma^2 nu u / 2) in the quadrature martingale adjustment".into(),
        });
    }
    Ok(-m.ln() / t)
}

/// European call as a `p`-weighted sum of Black-Scholes prices.
pub fn gl_european(params: &VgParams, market: &MarketInputs, n: usize) -> Result<PriceResult> {
    let d = derive(params, market)?;
    let tau = market.tau;
    let shape = tau / params.nu;
    let g = GlWeights::new(n, shape)?;
    let w_bar = omega_from(params, tau, &g)?;
    let VgParams { sigma, nu, theta } = *params;
    let s = d.effective_spot;
    let k = market.strike;
    let r = market.rate;
    let mut asset = 0.0;
    let mut cash = 0.0;
    for (u, p) in g.iter() {
        let sd = sigma * (nu * u).sqrt();
        let d1 = ((s / k).ln() + (r + w_bar) * tau + (sigma * sigma + theta) * nu * u) / sd;
        let d2 = d1 - sd;
        asset += (theta * nu * u + w_bar * tau + 0.5 * sigma * sigma * nu * u).exp() * normal_cdf(d1) * p;
        cash += normal_cdf(d2) * p;
    }
    let value = s * asset - k * d.discount * cash;
    let mut res = PriceResult::new(value, Method::Quadrature, branch_of(d.rn_moneyness));
    res.terms_evaluated = n;
    res.note("nodes", n);
    res.note("omega_bar", w_bar);
    if shape < 1.0 {
        res.note(
            "warning",
            format!("shape tau/nu = {shape} < 1: the Laguerre rule resolves the singular Gamma density poorly"),
        );
    }
    Ok(res)
}
