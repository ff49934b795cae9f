//! Numerical integration rules.
//!
//! Gauss–Legendre nodes are generated by Newton iteration on the Legendre
//! recurrence; the adaptive integrator is a Gauss–Kronrod 7/15 pair with
//! bisection of the worst interval. Sampled-data rules (trapezoid, Simpson)
//! work on uniform grids.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        pairwise_sum(self.mapped(a, b).map(|(x, w)| w * f(x)))
    }

    /// Composite rule: `panels` equal sub-intervals, each with this rule.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let parts: Vec<f64> = (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .collect();
        pairwise_sum(parts)
    }

    /// Tensor-product rule over [a0,b0]×[a1,b1].
    pub fn integrate_2d<T, F>(&self, x_range: (f64, f64), y_range: (f64, f64), mut f: F) -> T
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64, f64) -> T,
    {
        let mut total = T::default();
        for (x, wx) in self.mapped(x_range.0, x_range.1) {
            let mut row = T::default();
            for (y, wy) in self.mapped(y_range.0, y_range.1) {
                row = row + f(x, y) * wy;
            }
            total = total + row * wx;
        }
        total
    }
}

/// P_n(x) and P_n'(x).
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise summation; deterministic for a fixed input order.
pub fn pairwise_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    pairwise(&v)
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise(&v[..mid]) + pairwise(&v[mid..])
}

// Gauss–Kronrod 7/15 abscissae and weights (positive half, centre last).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Number of equal panels seeded before adaptation.
    pub initial_panels: usize,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 0.0,
            rel_tol: 1e-8,
            initial_panels: 16,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over [a, b].
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: AdaptiveOptions) -> AdaptiveResult {
    if a == b {
        return AdaptiveResult { value: 0.0, error: 0.0, intervals: 0 };
    }
    let panels = opts.initial_panels.max(1);
    let h = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(opts.max_intervals + 2);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let (value, error) = gk15(&mut f, lo, hi);
        heap.push(Interval { a: lo, b: hi, value, error });
    }
    loop {
        let (total, err) = totals(&heap);
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) || heap.len() >= opts.max_intervals {
            return AdaptiveResult { value: total, error: err, intervals: heap.len() };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (total, err) = totals(&heap);
            return AdaptiveResult { value: total, error: err, intervals: heap.len() };
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

fn totals(heap: &BinaryHeap<Interval>) -> (f64, f64) {
    // Sort by position so the reduction order does not depend on heap layout.
    let mut items: Vec<(f64, f64, f64)> = heap.iter().map(|i| (i.a, i.value, i.error)).collect();
    items.sort_by(|x, y| x.0.total_cmp(&y.0));
    (
        pairwise_sum(items.iter().map(|i| i.1)),
        pairwise_sum(items.iter().map(|i| i.2)),
    )
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid_uniform(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => h * (pairwise_sum(samples[1..n - 1].iter().copied()) + 0.5 * (samples[0] + samples[n - 1])),
    }
}

/// Composite Simpson rule on uniformly spaced samples; falls back to the
/// trapezoid rule on the last interval when the count of intervals is odd.
pub fn simpson_uniform(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    if n < 3 {
        return trapezoid_uniform(samples, h);
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut odd_sum = Vec::with_capacity(even / 2);
    let mut even_sum = Vec::with_capacity(even / 2);
    for (i, &s) in samples.iter().enumerate().take(even).skip(1) {
        if i % 2 == 1 {
            odd_sum.push(s);
        } else {
            even_sum.push(s);
        }
    }
    let mut total =
        h / 3.0 * (samples[0] + samples[even] + 4.0 * pairwise_sum(odd_sum) + 2.0 * pairwise_sum(even_sum));
    if even < intervals {
        total += 0.5 * h * (samples[n - 2] + samples[n - 1]);
    }
    total
}

/// Trapezoid rule on an arbitrary (strictly increasing) abscissa.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    pairwise_sum(x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])))
}
