//! One-dimensional quadrature building blocks and the deterministic
//! reduction used everywhere results are summed.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (x, w) in self.mapped(a, b) {
            acc += w * f(x);
        }
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre rule on `[lo, hi]`, with panel edges forced onto
/// every breakpoint inside the interval.
pub fn composite_gauss(
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    panel_width: f64,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(order);
    let edges = segment_edges(lo, hi, breakpoints);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let panels = ((b - a) / panel_width).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        for k in 0..panels {
            let pa = a + k as f64 * width;
            for (x, w) in gl.mapped(pa, pa + width) {
                nodes.push(x);
                weights.push(w);
            }
        }
    }
    (nodes, weights)
}

/// Trapezoid rule on `[lo, hi]` with spacing no larger than `spacing`.
pub fn trapezoid(lo: f64, hi: f64, spacing: f64) -> (Vec<f64>, Vec<f64>) {
    let cells = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let nodes: Vec<f64> = (0..=cells).map(|k| lo + k as f64 * h).collect();
    let mut weights = vec![h; cells + 1];
    weights[0] *= 0.5;
    weights[cells] *= 0.5;
    (nodes, weights)
}

/// Sorted, de-duplicated segment edges of `[lo, hi]` cut at `breakpoints`.
pub fn segment_edges(lo: f64, hi: f64, breakpoints: &[f64]) -> Vec<f64> {
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    let mut edges = vec![lo, hi];
    edges.extend(breakpoints.iter().copied().filter(|&b| b > lo + tol && b < hi - tol));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= tol);
    edges
}

/// Pairwise (tree) sum in index order. The result depends only on the slice
/// contents, never on how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 1..40 {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-12);
            let even = 2 * (n - 1);
            let got = gl.integrate(-1.0, 1.0, |x| x.powi(even as i32));
            assert!((got - 2.0 / (even as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn composite_rule_respects_breakpoints() {
        let (x, w) = composite_gauss(-1.0, 1.0, &[0.0], 0.3, 4);
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.abs()).sum();
        assert!((got - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let (_, w) = trapezoid(-2.0, 3.0, 0.7);
        assert!((w.iter().sum::<f64>() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive_for_integers() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
