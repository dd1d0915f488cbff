//! The Variance Gamma process: parameters, shorthand quantities, densities,
//! characteristic function and Levy measure.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VgError};
use crate::integrate;
use crate::specfun::{ln_bessel_k, ln_gamma};

/// Model triple: scale `sigma`, kurtosis `nu`, asymmetry `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub sigma: f64,
    pub nu: f64,
    pub theta: f64,
}

impl VgParams {
    /// Validated constructor; fails when the martingale adjustment does not exist.
    pub fn new(sigma: f64, nu: f64, theta: f64) -> Result<Self> {
        let p = VgParams { sigma, nu, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn symmetric(sigma: f64, nu: f64) -> Result<Self> {
        Self::new(sigma, nu, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(VgError::InvalidInput(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(VgError::InvalidInput(format!("nu must be > 0, got {}", self.nu)));
        }
        if !self.theta.is_finite() {
            return Err(VgError::InvalidInput("theta must be finite".into()));
        }
        let arg = self.log_arg();
        if !(arg > 0.0) {
            return Err(VgError::MartingaleUndefined { log_arg: arg });
        }
        Ok(())
    }

    fn log_arg(&self) -> f64 {
        1.0 - self.theta * self.nu - 0.5 * self.sigma * self.sigma * self.nu
    }

    pub fn is_symmetric(&self) -> bool {
        self.theta == 0.0
    }
}

/// Contract and market data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketInputs {
    pub spot: f64,
    pub strike: f64,
    /// Trigger strike of a gap option; `strike` is then the payment strike.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_strike: Option<f64>,
    pub rate: f64,
    #[serde(default)]
    pub dividend_yield: f64,
    pub tau: f64,
    /// Exponent of power options.
    #[serde(default = "one")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

impl MarketInputs {
    pub fn new(spot: f64, strike: f64, rate: f64, tau: f64) -> Self {
        MarketInputs {
            spot,
            strike,
            trigger_strike: None,
            rate,
            dividend_yield: 0.0,
            tau,
            power: 1.0,
        }
    }

    pub fn with_spot(mut self, spot: f64) -> Self {
        self.spot = spot;
        self
    }

    pub fn with_strike(mut self, strike: f64) -> Self {
        self.strike = strike;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(VgError::InvalidInput(format!("{name} must be > 0, got {v}")))
            }
        };
        pos("spot", self.spot)?;
        pos("strike", self.strike)?;
        pos("tau", self.tau)?;
        if let Some(k2) = self.trigger_strike {
            pos("trigger_strike", k2)?;
        }
        if !(self.power >= 1.0) || !self.power.is_finite() {
            return Err(VgError::InvalidInput(format!("power must be >= 1, got {}", self.power)));
        }
        if !self.rate.is_finite() || !self.dividend_yield.is_finite() {
            return Err(VgError::InvalidInput("rate and dividend_yield must be finite".into()));
        }
        Ok(())
    }

    /// Spot net of the dividend yield, `S e^{-q tau}`.
    pub fn effective_spot(&self) -> f64 {
        self.spot * (-self.dividend_yield * self.tau).exp()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.tau).exp()
    }
}

/// Shorthand quantities shared by the pricing formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub forward_strike: f64,
    pub log_fwd_moneyness: f64,
    pub sigma_nu: f64,
    pub alpha: f64,
    pub omega: f64,
    pub rn_moneyness: f64,
    pub theta_sigma: f64,
    pub q_factor: f64,
    pub power_moneyness: f64,
    pub effective_spot: f64,
    pub discount: f64,
}

pub fn martingale_adjustment(params: &VgParams) -> Result<f64> {
    params.validate()?;
    let VgParams { sigma, nu, theta } = *params;
    Ok((-theta * nu - 0.5 * sigma * sigma * nu).ln_1p() / nu)
}

pub fn derive(params: &VgParams, market: &MarketInputs) -> Result<DerivedQuantities> {
    params.validate()?;
    market.validate()?;
    let VgParams { sigma, nu, theta } = *params;
    let tau = market.tau;
    let omega = martingale_adjustment(params)?;
    let s = market.effective_spot();
    let discount = market.discount();
    let forward_strike = market.strike * discount;
    let k = (s / forward_strike).ln();
    let s2 = sigma * sigma;
    Ok(DerivedQuantities {
        forward_strike,
        log_fwd_moneyness: k,
        sigma_nu: sigma * (nu / 2.0).sqrt(),
        alpha: tau / nu - 0.5,
        omega,
        rn_moneyness: k + omega * tau,
        theta_sigma: theta / s2,
        q_factor: 1.0 / (2.0 * s2 * nu) + (theta / (2.0 * s2)).powi(2),
        power_moneyness: s.ln() - market.strike.ln() / market.power
            + market.rate * tau
            + omega * tau,
        effective_spot: s,
        discount,
    })
}

/// Spot at which the risk-neutral moneyness vanishes, `K e^{-(r+omega) tau}`.
pub fn atm_spot(params: &VgParams, strike: f64, rate: f64, tau: f64) -> Result<f64> {
    let omega = martingale_adjustment(params)?;
    Ok(strike * (-(rate + omega) * tau).exp())
}

/// Parameters of the representation as a difference of two Gamma processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDecomposition {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
}

pub fn gamma_decomposition(params: &VgParams) -> GammaDecomposition {
    let VgParams { sigma, nu, theta } = *params;
    let root = 0.5 * (theta * theta + 2.0 * sigma * sigma / nu).sqrt();
    let mu_plus = root + theta / 2.0;
    let mu_minus = root - theta / 2.0;
    GammaDecomposition {
        mu_plus,
        mu_minus,
        nu_plus: mu_plus * mu_plus * nu,
        nu_minus: mu_minus * mu_minus * nu,
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(VgError::Domain(format!("time must be > 0, got {t}")))
    }
}

/// Closed-form density of `X(t)` in terms of the Bessel function `K`.
pub fn density(params: &VgParams, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    params.validate()?;
    let VgParams { sigma, nu, theta } = *params;
    let s2 = sigma * sigma;
    let shape = t / nu;
    let order = shape - 0.5;
    let c = 2.0 * s2 / nu + theta * theta;
    let log_pre = 2f64.ln()
        - shape * nu.ln()
        - 0.5 * (2.0 * PI).ln()
        - sigma.ln()
        - ln_gamma(shape)?;
    if x == 0.0 {
        if order <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let l = log_pre - 2f64.ln() + ln_gamma(order)? + order * (2.0 * s2 / c).ln();
        return Ok(l.exp());
    }
    let ax = x.abs();
    let z = c.sqrt() * ax / s2;
    let l = log_pre + theta * x / s2 + (0.5 * order) * (2.0 * ax.ln() - c.ln()) + ln_bessel_k(order, z)?;
    Ok(l.exp())
}

/// Density as the Gamma mixture of normal densities, integrated numerically.
pub fn mixture_density(params: &VgParams, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    params.validate()?;
    let VgParams { sigma, nu, theta } = *params;
    let s2 = sigma * sigma;
    let shape = t / nu;
    if x == 0.0 && shape <= 0.5 {
        return Ok(f64::INFINITY);
    }
    let norm = -shape * nu.ln() - ln_gamma(shape)?;
    // integrand in z = ln g, including the Jacobian g
    let h = |z: f64| {
        let g = z.exp();
        let d = x - theta * g;
        -d * d / (2.0 * s2 * g) - 0.5 * (2.0 * PI * s2 * g).ln() + shape * z - g / nu + norm
    };
    let dh = |z: f64| {
        let g = z.exp();
        x * x / (2.0 * s2 * g) - theta * theta * g / (2.0 * s2) - 0.5 + shape - g / nu
    };
    let (mut lo, mut hi) = (-750.0, 750.0f64.min(50.0 + nu.ln()));
    while dh(hi) > 0.0 {
        hi += 10.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dh(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z_star = 0.5 * (lo + hi);
    let h_star = h(z_star);
    let drop = 60.0;
    let mut step = 0.5;
    while h(z_star + step) - h_star > -drop {
        step *= 2.0;
    }
    let z_hi = z_star + step;
    let mut step = 0.5;
    while h(z_star - step) - h_star > -drop && step < 2000.0 {
        step *= 2.0;
    }
    let z_lo = z_star - step;
    let f = |z: f64| (h(z) - h_star).exp();
    let n = 32;
    let edges: Vec<f64> = (0..=n)
        .map(|i| z_lo + (z_hi - z_lo) * i as f64 / n as f64)
        .collect();
    let q = integrate::adaptive_from(&f, &edges, 1e-300, 1e-13, 5000);
    Ok(q.value * h_star.exp())
}

fn char_base(params: &VgParams, u: Complex64) -> Result<Complex64> {
    let VgParams { sigma, nu, theta } = *params;
    let i = Complex64::i();
    let base = 1.0 - i * theta * nu * u + 0.5 * sigma * sigma * nu * u * u;
    if base.im.abs() < 1e-14 && base.re <= 0.0 {
        return Err(VgError::BranchCut { u });
    }
    Ok(base)
}

/// `E[e^{iuX(t)}] = (1 - i theta nu u + sigma^2 nu u^2 / 2)^{-t/nu}`, principal branch.
pub fn characteristic_fn(params: &VgParams, u: Complex64, t: f64) -> Result<Complex64> {
    let base = char_base(params, u)?;
    Ok((-(t / params.nu) * base.ln()).exp())
}

/// Characteristic function of `X(t) + omega t`, a martingale at `u = -i`.
pub fn normalized_characteristic_fn(params: &VgParams, u: Complex64, t: f64) -> Result<Complex64> {
    let omega = martingale_adjustment(params)?;
    let base = char_base(params, u)?;
    Ok((Complex64::i() * u * t * omega - (t / params.nu) * base.ln()).exp())
}

/// Characteristic exponent `Psi(u)` with `Phi(u, t) = exp(-t Psi(u))`.
pub fn levy_symbol(params: &VgParams, u: Complex64) -> Result<Complex64> {
    let base = char_base(params, u)?;
    Ok(base.ln() / params.nu)
}

pub fn levy_measure_density(params: &VgParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(VgError::Domain("Levy measure density needs x != 0".into()));
    }
    let VgParams { sigma, nu, theta } = *params;
    let s2 = sigma * sigma;
    let rate = (theta * theta / s2 + 2.0 / nu).sqrt() / sigma;
    Ok((theta * x / s2 - rate * x.abs()).exp() / (nu * x.abs()))
}

/// Two-sided Gamma form of the Levy density, `C e^{-M x}/x` and `C e^{-G|x|}/|x|`.
pub fn levy_measure_density_two_sided(params: &VgParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(VgError::Domain("Levy measure density needs x != 0".into()));
    }
    let d = gamma_decomposition(params);
    let c = 1.0 / params.nu;
    let rate = if x > 0.0 {
        1.0 / (d.mu_plus * params.nu)
    } else {
        1.0 / (d.mu_minus * params.nu)
    };
    Ok(c * (-rate * x.abs()).exp() / x.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(theta: f64) -> VgParams {
        VgParams::new(0.2, 0.85, theta).unwrap()
    }

    #[test]
    fn derive_hand_values() {
        let m = MarketInputs::new(4000.0, 4000.0, 0.01, 2.0);
        let d = derive(&p(0.0), &m).unwrap();
        assert_relative_eq!(d.log_fwd_moneyness, 0.02, max_relative = 1e-12);
        assert!((d.sigma_nu - 0.130_384).abs() < 1e-6);
        assert!((d.alpha - 1.852_941).abs() < 1e-6);
        assert_relative_eq!(
            d.q_factor,
            1.0 / (4.0 * d.sigma_nu * d.sigma_nu),
            max_relative = 1e-14
        );
    }

    #[test]
    fn atm_spots_asymmetric() {
        let up = atm_spot(&p(0.1), 4000.0, 0.01, 2.0).unwrap();
        let dn = atm_spot(&p(-0.1), 4000.0, 0.01, 2.0).unwrap();
        assert!((up - 5050.24).abs() < 0.01, "{up}");
        assert!((dn - 3358.52).abs() < 0.01, "{dn}");
        let m = MarketInputs::new(up, 4000.0, 0.01, 2.0);
        assert!(derive(&p(0.1), &m).unwrap().rn_moneyness.abs() < 1e-12);
    }

    #[test]
    fn martingale_adjustment_values() {
        let w = martingale_adjustment(&p(0.0)).unwrap();
        let oracle = (1.0 - 0.04 * 0.85 / 2.0f64).ln() / 0.85;
        assert_relative_eq!(w, oracle, max_relative = 1e-15);
        assert!((w + 0.020_171_9).abs() < 5e-7, "{w}");
        let small = VgParams::new(0.2, 1e-8, 0.0).unwrap();
        assert!((martingale_adjustment(&small).unwrap() + 0.02).abs() < 1e-11);
        let bad = VgParams::new(0.2, 0.85, 1.2);
        assert!(matches!(bad, Err(VgError::MartingaleUndefined { .. })));
        assert!(bad.unwrap_err().to_string().contains("martingale adjustment undefined"));
    }

    #[test]
    fn density_matches_mixture() {
        let prm = p(0.1);
        for &x in &[0.3, -0.4, 0.01, 1.2] {
            let a = density(&prm, x, 1.0).unwrap();
            let b = mixture_density(&prm, x, 1.0).unwrap();
            assert!((a - b).abs() < 1e-8, "x={x} {a} {b}");
        }
        // shape one: t = nu
        let a = density(&prm, 0.2, 0.85).unwrap();
        let b = mixture_density(&prm, 0.2, 0.85).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn density_at_origin() {
        let prm = p(0.0);
        let a = density(&prm, 0.0, 2.0).unwrap();
        let b = mixture_density(&prm, 0.0, 2.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
        assert!(density(&prm, 0.0, 0.3).unwrap().is_infinite());
        for &x in &[0.01, 0.1, 0.5] {
            assert!(mixture_density(&prm, x, 2.0).unwrap() <= b);
        }
    }

    #[test]
    fn density_symmetric_and_normalized() {
        let prm = p(0.0);
        for &x in &[0.05, 0.3, 0.9] {
            assert_eq!(density(&prm, x, 1.0).unwrap(), density(&prm, -x, 1.0).unwrap());
        }
        let f = |x: f64| density(&prm, x, 1.0).unwrap();
        let q = integrate::adaptive_from(&f, &[-3.0, -1.0, -1e-9, 1e-9, 1.0, 3.0], 1e-12, 1e-12, 2000);
        assert!((q.value - 1.0).abs() < 1e-6, "{}", q.value);
        assert!(density(&prm, 0.1, 0.0).is_err());
    }

    #[test]
    fn characteristic_function_identities() {
        let prm = p(0.1);
        let one = characteristic_fn(&prm, Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        let m = normalized_characteristic_fn(&prm, Complex64::new(0.0, -1.0), 1.7).unwrap();
        assert!((m - 1.0).norm() < 1e-12);
        let w = martingale_adjustment(&prm).unwrap();
        let ls = levy_symbol(&prm, Complex64::new(0.0, -1.0)).unwrap();
        assert!((ls.re - w).abs() < 1e-15 && ls.im.abs() < 1e-15);
        let u = Complex64::new(1.3, 0.0);
        let a = characteristic_fn(&prm, u, 0.7).unwrap();
        let b = characteristic_fn(&prm, -u, 0.7).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        let c = (-0.7 * levy_symbol(&prm, u).unwrap()).exp();
        assert!((a - c).norm() < 1e-15);
    }

    #[test]
    fn branch_cut_reported() {
        // base = 1 - sigma^2 nu b^2 / 2 at u = -ib, zero at b = sqrt(2/(sigma^2 nu))
        let prm = p(0.0);
        let b = (2.0 / (0.04 * 0.85f64)).sqrt() + 0.5;
        let e = characteristic_fn(&prm, Complex64::new(0.0, -b), 1.0).unwrap_err();
        assert!(matches!(e, VgError::BranchCut { .. }));
    }

    #[test]
    fn levy_measure_forms_agree() {
        let prm = p(0.1);
        for &x in &[0.5, -0.5, 0.01, -2.0] {
            let a = levy_measure_density(&prm, x).unwrap();
            let b = levy_measure_density_two_sided(&prm, x).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        let sym = p(0.0);
        assert_eq!(
            levy_measure_density(&sym, 0.3).unwrap(),
            levy_measure_density(&sym, -0.3).unwrap()
        );
        assert!(levy_measure_density(&prm, 0.0).is_err());
    }

    #[test]
    fn gamma_decomposition_identities() {
        let d = gamma_decomposition(&p(0.1));
        assert!((d.mu_plus - d.mu_minus - 0.1).abs() < 1e-15);
        assert_relative_eq!(d.nu_plus / d.mu_plus.powi(2), 0.85, max_relative = 1e-12);
        let s = gamma_decomposition(&p(0.0));
        assert_relative_eq!(s.mu_plus, 0.2 / (2.0f64 * 0.85).sqrt(), max_relative = 1e-14);
        assert_eq!(s.mu_plus, s.mu_minus);
    }
}
