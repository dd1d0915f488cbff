//! Monte Carlo under the Gamma time change.
//!
//! Path `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `i`, so every estimate depends only on `(seed, path index)`. Paths are
//! processed in fixed blocks of [`BLOCK`] and block statistics are merged in
//! order, which keeps results bit-identical for any rayon thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VgError};
use crate::model::{derive, martingale_adjustment, MarketInputs, VgParams};
use crate::result::{branch_of, Method, Payoff, PriceResult};

pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Pair each normal draw with its negative; a pair counts as one sample.
    #[serde(default)]
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(VgError::InvalidInput("n_paths must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// CI length over `|value|`.
    pub confidence_ratio: f64,
    pub n_paths: usize,
}

impl McEstimate {
    fn from_stats(s: &Stats, scale: f64) -> Self {
        let value = s.mean * scale;
        let var = if s.n > 1 { s.m2 / (s.n - 1) as f64 } else { 0.0 };
        let std_error = scale.abs() * (var / s.n as f64).sqrt();
        let half = 1.96 * std_error;
        McEstimate {
            value,
            std_error,
            ci_low: value - half,
            ci_high: value + half,
            confidence_ratio: if value != 0.0 { 2.0 * half / value.abs() } else { f64::INFINITY },
            n_paths: s.n,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn to_result(&self, moneyness: f64) -> PriceResult {
        let mut r = PriceResult::new(self.value, Method::MonteCarlo, branch_of(moneyness));
        r.terms_evaluated = self.n_paths;
        r.truncation_estimate = self.std_error;
        r.std_error = Some(self.std_error);
        r.ci = Some((self.ci_low, self.ci_high));
        r.note("confidence_ratio", self.confidence_ratio);
        r
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Stats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Stats) -> Stats {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Stats {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

struct Sampler {
    gamma: Gamma<f64>,
    sigma: f64,
    theta: f64,
    base: ChaCha8Rng,
}

impl Sampler {
    fn new(params: &VgParams, t: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(VgError::InvalidInput(format!("t must be > 0, got {t}")));
        }
        let gamma = Gamma::new(t / params.nu, params.nu)
            .map_err(|e| VgError::InvalidInput(format!("gamma time change: {e}")))?;
        Ok(Sampler {
            gamma,
            sigma: params.sigma,
            theta: params.theta,
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut r = self.base.clone();
        r.set_stream(path as u64);
        r
    }

    /// `(theta G + sigma sqrt(G) Z, theta G - sigma sqrt(G) Z)` for path `i`.
    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let g: f64 = self.gamma.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let drift = self.theta * g;
        let diff = self.sigma * g.sqrt() * z;
        (drift + diff, drift - diff)
    }
}

/// `n` i.i.d. draws of `X_t`.
pub fn sample_vg(params: &VgParams, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let s = Sampler::new(params, t, seed)?;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        for (j, x) in chunk.iter_mut().enumerate() {
            *x = s.draw(&mut s.rng(b * BLOCK + j)).0;
        }
    });
    Ok(out)
}

/// Undiscounted payoff as a function of `S_T`.
fn payoff_fn(payoff: Payoff, market: &MarketInputs) -> Box<dyn Fn(f64) -> f64 + Sync> {
    let k = market.strike;
    match payoff {
        Payoff::European => Box::new(move |s| (s - k).max(0.0)),
        Payoff::CashOrNothing => Box::new(move |s| if s > k { 1.0 } else { 0.0 }),
        Payoff::AssetOrNothing => Box::new(move |s| if s > k { s } else { 0.0 }),
        Payoff::Gap => {
            let k2 = market.trigger_strike.unwrap_or(k);
            Box::new(move |s| if s > k2 { s - k } else { 0.0 })
        }
        Payoff::PowerAssetOrNothing => {
            let q = market.power;
            Box::new(move |s| {
                let p = s.powf(q);
                if p > k {
                    p
                } else {
                    0.0
                }
            })
        }
        Payoff::LogCall => {
            let lk = k.ln();
            Box::new(move |s| (s.ln() - lk).max(0.0))
        }
    }
}

/// Discounted Monte Carlo price with a 95% confidence interval.
pub fn mc_price(payoff: Payoff, params: &VgParams, market: &MarketInputs, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    market.validate()?;
    let omega = martingale_adjustment(params)?;
    let sampler = Sampler::new(params, market.tau, cfg.seed)?;
    let ln_s0 = market.effective_spot().ln() + (market.rate + omega) * market.tau;
    let f = payoff_fn(payoff, market);
    let n = cfg.n_paths;
    let blocks = n.div_ceil(BLOCK);
    let stats: Vec<Stats> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut st = Stats::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let mut rng = sampler.rng(i);
                let (x, xa) = sampler.draw(&mut rng);
                let v = f((ln_s0 + x).exp());
                if cfg.antithetic {
                    st.push(0.5 * (v + f((ln_s0 + xa).exp())));
                } else {
                    st.push(v);
                }
            }
            st
        })
        .collect();
    let total = stats.into_iter().fold(Stats::default(), Stats::merge);
    Ok(McEstimate::from_stats(&total, market.discount()))
}

/// [`mc_price`] wrapped as a [`PriceResult`].
pub fn price(payoff: Payoff, params: &VgParams, market: &MarketInputs, cfg: &McConfig) -> Result<PriceResult> {
    let est = mc_price(payoff, params, market, cfg)?;
    let d = derive(params, market)?;
    let m = if payoff == Payoff::PowerAssetOrNothing {
        d.power_moneyness
    } else {
        d.rn_moneyness
    };
    let mut r = est.to_result(m);
    r.note("seed", cfg.seed);
    r.note("antithetic", cfg.antithetic);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let mut all = Stats::default();
        xs.iter().for_each(|x| all.push(*x));
        let mut a = Stats::default();
        let mut b = Stats::default();
        xs[..313].iter().for_each(|x| a.push(*x));
        xs[313..].iter().for_each(|x| b.push(*x));
        let m = a.merge(b);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let p = VgParams::new(0.2, 0.85, -0.1).unwrap();
        let m = MarketInputs::new(4000.0, 4000.0, 0.01, 2.0);
        let cfg = McConfig::new(10_000, 7);
        let a = mc_price(Payoff::European, &p, &m, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_price(Payoff::European, &p, &m, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(sample_vg(&p, 1.0, 5000, 3).unwrap(), pool.install(|| sample_vg(&p, 1.0, 5000, 3).unwrap()));
    }

    #[test]
    fn digital_with_tiny_strike_is_discount() {
        let p = VgParams::new(0.2, 0.85, 0.0).unwrap();
        let m = MarketInputs::new(4000.0, 1e-12, 0.01, 2.0);
        let e = mc_price(Payoff::CashOrNothing, &p, &m, &McConfig::new(1000, 1)).unwrap();
        assert!((e.value - (-0.02f64).exp()).abs() < 1e-15);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn antithetic_shrinks_error_for_monotone_payoff() {
        let p = VgParams::new(0.2, 0.85, 0.0).unwrap();
        let m = MarketInputs::new(4000.0, 4000.0, 0.01, 2.0);
        let plain = mc_price(Payoff::AssetOrNothing, &p, &m, &McConfig::new(20_000, 5)).unwrap();
        let anti = mc_price(
            Payoff::AssetOrNothing,
            &p,
            &m,
            &McConfig {
                antithetic: true,
                ..McConfig::new(20_000, 5)
            },
        )
        .unwrap();
        assert!(anti.std_error < plain.std_error);
    }

    #[test]
    fn small_shape_sampling_is_finite() {
        let p = VgParams::new(0.2, 0.85, 0.1).unwrap();
        let xs = sample_vg(&p, 1.0 / 360.0, 10_000, 11).unwrap();
        assert!(xs.iter().all(|x| x.is_finite()));
    }
}
