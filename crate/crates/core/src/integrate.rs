//! Adaptive Gauss-Kronrod quadrature and series acceleration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

/// One 15-point Kronrod panel; returns `(kronrod, |kronrod - gauss|)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Globally adaptive Gauss-Kronrod on `[a, b]`, bisecting the worst panel.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quad {
    adaptive_from(f, &[a, b], abs_tol, rel_tol, max_panels)
}

/// Same as [`adaptive`] but starting from the given panel edges.
pub fn adaptive_from<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quad {
    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    for w in edges.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        heap.push(Panel { lo: w[0], hi: w[1], value: v, error: e });
    }
    let mut evals = 15 * heap.len();
    let total = |h: &BinaryHeap<Panel>| {
        let mut v: Vec<&Panel> = h.iter().collect();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        (v.iter().map(|p| p.value).sum::<f64>(), v.iter().map(|p| p.error).sum::<f64>())
    };
    let (mut value, mut error) = total(&heap);
    let mut since_resum = 0;
    loop {
        let tol = abs_tol.max(rel_tol * value.abs());
        if error <= tol || heap.len() >= max_panels.max(edges.len()) {
            let (value, error) = total(&heap);
            return Quad {
                value,
                error,
                evals,
                converged: error <= tol,
            };
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            let (value, error) = total(&heap);
            return Quad {
                value,
                error,
                evals,
                converged: false,
            };
        }
        let (v1, e1) = gk15(f, worst.lo, mid);
        let (v2, e2) = gk15(f, mid, worst.hi);
        evals += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { lo: worst.lo, hi: mid, value: v1, error: e1 });
        heap.push(Panel { lo: mid, hi: worst.hi, value: v2, error: e2 });
        since_resum += 1;
        if since_resum == 256 {
            (value, error) = total(&heap);
            since_resum = 0;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integral over `[a, inf)` through the map `x = a + t / (1 - t)`.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: &F, a: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    let g = |t: f64| {
        let s = 1.0 - t;
        let v = f(a + t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    adaptive(&g, 0.0, 1.0, abs_tol, rel_tol, 4000)
}

/// Limit of a sequence of partial sums by Wynn's epsilon algorithm.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    if n < 3 {
        return partial.last().copied().unwrap_or(0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = *partial.last().unwrap();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let v = if d == 0.0 {
                f64::INFINITY
            } else {
                prev[i + 1] + 1.0 / d
            };
            next.push(v);
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                } else {
                    break;
                }
            }
        } else if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    best
}
