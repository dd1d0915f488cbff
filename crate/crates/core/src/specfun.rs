//! Special functions used by the pricers: log-Gamma with sign, Gamma,
//! modified Bessel K of real order, the normal CDF and Gauss-Laguerre rules.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, VgError};

const POLE_BAND: f64 = 1e-12;
const LN_MAX: f64 = 709.782_712_893_384;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(pi x)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64).rem_euclid(2) == 0 {
        s
    } else {
        -s
    }
}

fn is_pole(x: f64) -> bool {
    x <= POLE_BAND && (x - x.round()).abs() < POLE_BAND
}

fn lanczos_ln(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Returns `(ln|Gamma(x)|, sign(Gamma(x)))`.
pub fn log_gamma(x: f64) -> Result<(f64, f64)> {
    if x.is_nan() {
        return Err(VgError::Domain("log_gamma of NaN".into()));
    }
    if is_pole(x) {
        return Err(VgError::Pole { x });
    }
    if x >= 0.5 {
        if x == 1.0 || x == 2.0 {
            return Ok((0.0, 1.0));
        }
        return Ok((lanczos_ln(x), 1.0));
    }
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    let s = sin_pi(x);
    let lg = PI.ln() - s.abs().ln() - lanczos_ln(1.0 - x);
    Ok((lg, s.signum()))
}

/// `ln|Gamma(x)|`, ignoring the sign.
pub fn ln_gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(|(v, _)| v)
}

pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sign) = log_gamma(x)?;
    if lg > LN_MAX {
        return Err(VgError::Overflow {
            what: format!("gamma({x})"),
        });
    }
    Ok(sign * lg.exp())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `ln K_order(x)` for real order and `x > 0`.
///
/// Uses `K_v(x) = 1/2 int_R exp(-x cosh t + v t) dt` with the peak of the
/// exponent factored out, integrated by the trapezoid rule with step halving
/// (the integrand is entire, so the rule converges geometrically).
pub fn ln_bessel_k(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(VgError::Domain(format!("bessel_k requires x > 0, got {x}")));
    }
    let v = order.abs();
    let g = |t: f64| -x * t.cosh() + v * t;
    let t_star = (v / x).asinh();
    let g_star = g(t_star);
    let drop = 50.0;

    // g is concave: bracket each side of the peak, then bisect.
    let mut step = 1.0;
    let mut hi = t_star + step;
    while g(hi) - g_star > -drop {
        step *= 2.0;
        hi = t_star + step;
    }
    let mut lo_b = t_star;
    for _ in 0..100 {
        let mid = 0.5 * (lo_b + hi);
        if g(mid) - g_star > -drop {
            lo_b = mid;
        } else {
            hi = mid;
        }
    }
    let t_hi = hi;
    let mut step = 1.0;
    let mut lo = t_star - step;
    while g(lo) - g_star > -drop {
        step *= 2.0;
        lo = t_star - step;
    }
    let mut hi_b = t_star;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi_b);
        if g(mid) - g_star > -drop {
            hi_b = mid;
        } else {
            lo = mid;
        }
    }
    let t_lo = lo;

    let f = |t: f64| (g(t) - g_star).exp();
    let mut n: usize = 32;
    let mut h = (t_hi - t_lo) / n as f64;
    let mut sum = 0.5 * (f(t_lo) + f(t_hi));
    for i in 1..n {
        sum += f(t_lo + i as f64 * h);
    }
    let mut est = sum * h;
    for _ in 0..16 {
        let mut mid = 0.0;
        for i in 0..n {
            mid += f(t_lo + (i as f64 + 0.5) * h);
        }
        sum += mid;
        n *= 2;
        h *= 0.5;
        let new = sum * h;
        let done = (new - est).abs() <= 1e-14 * new;
        est = new;
        if done {
            break;
        }
    }
    Ok(g_star + (0.5 * est).ln())
}

/// Modified Bessel function of the second kind `K_order(x)`.
///
/// Symmetric in `order`. Underflows to 0 for large `x` (beyond ~700);
/// reports overflow when the value is not representable.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    let l = ln_bessel_k(order, x)?;
    if l > LN_MAX {
        return Err(VgError::Overflow {
            what: format!("bessel_k({order}, {x})"),
        });
    }
    Ok(l.exp())
}

/// Nodes and weights of the n-point Gauss-Laguerre rule for `int_0^inf f(u) e^{-u} du`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(L_n(u), L_{n-1}(u))` by the three-term recurrence.
fn laguerre_pair(n: usize, u: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (p0, 0.0);
    }
    let mut p1 = 1.0 - u;
    for j in 1..n {
        let j = j as f64;
        let p2 = ((2.0 * j + 1.0 - u) * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Weight attached to the node `u` of the n-point rule: `u / ((n+1)^2 L_{n+1}(u)^2)`.
pub fn laguerre_weight(n: usize, u: f64) -> f64 {
    let (l, _) = laguerre_pair(n + 1, u);
    u / ((n as f64 + 1.0).powi(2) * l * l)
}

pub fn laguerre_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=64).contains(&n) {
        return Err(VgError::InvalidInput(format!(
            "laguerre_rule order must be in [1, 64], got {n}"
        )));
    }
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut z = 0.0;
    for i in 0..n {
        // Initial guesses after Stroud and Secrest.
        z = if i == 0 {
            3.0 / (1.0 + 2.4 * nf)
        } else if i == 1 {
            z + 15.0 / (1.0 + 2.5 * nf)
        } else {
            let ai = (i - 1) as f64;
            z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
        };
        for _ in 0..100 {
            let (p, pm1) = laguerre_pair(n, z);
            let dp = nf * (p - pm1) / z;
            let dz = p / dp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        nodes.push(z);
    }
    let weights: Vec<f64> = nodes.iter().map(|&u| laguerre_weight(n, u)).collect();
    Ok(QuadratureRule {
        order: n,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Stirling series with upward shift, 20 Bernoulli terms.
    fn stirling_ln_gamma(x: f64) -> f64 {
        const B: [f64; 20] = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
            -3617.0 / 510.0,
            43867.0 / 798.0,
            -174611.0 / 330.0,
            854513.0 / 138.0,
            -236364091.0 / 2730.0,
            8553103.0 / 6.0,
            -23749461029.0 / 870.0,
            8615841276005.0 / 14322.0,
            -7709321041217.0 / 510.0,
            2577687858367.0 / 6.0,
            -26315271553053477373.0 / 1919190.0,
            2929993913841559.0 / 6.0,
            -261082718496449122051.0 / 13530.0,
        ];
        let shift = 30;
        let mut lp = 0.0;
        for i in 0..shift {
            lp += (x + i as f64).ln();
        }
        let z = x + shift as f64;
        let mut s = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln();
        let mut zp = z;
        for (k, b) in B.iter().enumerate() {
            let m = 2.0 * (k as f64 + 1.0);
            s += b / (m * (m - 1.0) * zp);
            zp *= z * z;
        }
        s - lp
    }

    #[test]
    fn log_gamma_trivial_points() {
        assert_eq!(log_gamma(1.0).unwrap(), (0.0, 1.0));
        assert_relative_eq!(
            ln_gamma(0.5).unwrap(),
            0.572_364_942_924_700_1,
            max_relative = 1e-14
        );
    }

    #[test]
    fn log_gamma_matches_stirling() {
        for &x in &[10.3, 0.7, 1.5, 3.25, 47.9, 123.456] {
            let lg = ln_gamma(x).unwrap();
            let oracle = stirling_ln_gamma(x);
            assert!(
                (lg - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
                "x={x} lg={lg} oracle={oracle}"
            );
        }
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert_relative_eq!(
            gamma(-0.5).unwrap(),
            -2.0 * PI.sqrt(),
            max_relative = 1e-13
        );
        let x = -2.3;
        let rec = gamma(x + 3.0).unwrap() / (x * (x + 1.0) * (x + 2.0));
        assert_relative_eq!(gamma(x).unwrap(), rec, max_relative = 1e-12);
    }

    #[test]
    fn gamma_poles_and_overflow() {
        for &x in &[0.0, -1.0, -7.0, -3.0 + 1e-13] {
            assert!(matches!(gamma(x), Err(VgError::Pole { .. })));
        }
        assert!(gamma(-3.0 + 1e-9).is_ok());
        assert!(matches!(gamma(200.0), Err(VgError::Overflow { .. })));
        assert!(log_gamma(200.0).is_ok());
    }

    #[test]
    fn gamma_recurrence_and_reflection() {
        let mut x = 0.05;
        while x < 50.0 {
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
            x += 0.37;
        }
        for &x in &[-0.3, -1.7, -5.5] {
            let lhs = gamma(x).unwrap() * gamma(1.0 - x).unwrap();
            assert_relative_eq!(lhs, PI / (PI * x).sin(), max_relative = 1e-10);
        }
    }

    #[test]
    fn bessel_half_integer_closed_form() {
        let k = bessel_k(0.5, 1.0).unwrap();
        assert_relative_eq!(k, (PI / 2.0).sqrt() * (-1.0f64).exp(), max_relative = 1e-12);
        for &x in &[1e-5, 0.3, 4.0, 50.0, 600.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 1.0 / x);
            assert_relative_eq!(bessel_k(1.5, x).unwrap(), exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn bessel_against_direct_quadrature() {
        // int_0^inf exp(-x cosh t) cosh(v t) dt by a plain fine trapezoid
        let (v, x): (f64, f64) = (1.85, 2.0);
        let h: f64 = 1e-4;
        let mut s = 0.5 * (-x).exp();
        let mut t = h;
        while t < 12.0 {
            s += (-x * t.cosh()).exp() * (v * t).cosh();
            t += h;
        }
        let oracle = s * h;
        assert_relative_eq!(bessel_k(v, x).unwrap(), oracle, max_relative = 1e-10);
        assert_eq!(bessel_k(-v, x).unwrap(), bessel_k(v, x).unwrap());
    }

    #[test]
    fn bessel_domain_and_extremes() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
        assert!(bessel_k(50.0, 1e-6).is_err());
        assert!(ln_bessel_k(50.0, 1e-6).unwrap().is_finite());
        assert!(bessel_k(0.0, 800.0).unwrap() >= 0.0);
        // K_0 small-x behaviour: -ln(x/2) - euler gamma
        let x = 1e-6;
        let approx = -(x / 2.0f64).ln() - 0.577_215_664_901_532_9;
        assert_relative_eq!(bessel_k(0.0, x).unwrap(), approx, max_relative = 1e-9);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        let t = normal_cdf(-38.0);
        assert!((0.0..1e-300).contains(&t));
        for &x in &[0.1, 1.0, 2.5, 7.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn laguerre_small_orders() {
        let r1 = laguerre_rule(1).unwrap();
        assert_relative_eq!(r1.nodes[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(r1.weights[0], 1.0, max_relative = 1e-14);
        let r2 = laguerre_rule(2).unwrap();
        assert_relative_eq!(r2.nodes[0], 2.0 - 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(r2.nodes[1], 2.0 + 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(r2.weights[0], (2.0 + 2f64.sqrt()) / 4.0, max_relative = 1e-13);
        assert!(laguerre_rule(0).is_err());
        assert!(laguerre_rule(65).is_err());
    }

    #[test]
    fn laguerre_moments() {
        for n in 1..=64 {
            let r = laguerre_rule(n).unwrap();
            assert_eq!(r.nodes.len(), n);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]), "n={n}");
            assert!(r.nodes[0] > 0.0);
            assert!(r.weights.iter().all(|&w| w > 0.0), "n={n}");
            let s0: f64 = r.weights.iter().sum();
            let s1: f64 = r.weights.iter().zip(&r.nodes).map(|(w, u)| w * u).sum();
            assert!((s0 - 1.0).abs() < 1e-10, "n={n} s0={s0}");
            assert!((s1 - 1.0).abs() < 1e-9, "n={n} s1={s1}");
        }
    }
}
