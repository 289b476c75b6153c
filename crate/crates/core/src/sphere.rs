//! Quadrature rules on the unit sphere S^{N-1}.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::convex_body::ConvexBody;
use crate::error::{invalid, Result};
use crate::quadrature::{segment_edges, GaussLegendre};
use crate::rng;

/// Surface measure of S^{N-1}; counting measure on {-1, 1} for N = 1.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => {
            let n = dim as f64;
            2.0 * PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0)
        }
    }
}

/// Default node counts: 2048 on the circle, 64 x 128 on S^2, 2^16 random
/// points on S^3.
pub fn default_nodes(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 2048,
        3 => 64 * 128,
        _ => 1 << 16,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    random: bool,
    /// Same family at half the resolution, used for error estimates.
    coarse: Option<Box<SphereRule>>,
}

impl SphereRule {
    /// Custom rule; weights must be positive and sum to the sphere area.
    pub fn new(dim: usize, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(invalid("sphere rule needs matching, nonempty nodes and weights"));
        }
        let mut flat = Vec::with_capacity(dim * nodes.len());
        for n in &nodes {
            if n.len() != dim {
                return Err(invalid("sphere node has the wrong dimension"));
            }
            let r: f64 = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (r - 1.0).abs() > 1e-10 {
                return Err(invalid("sphere nodes must be unit vectors"));
            }
            flat.extend_from_slice(n);
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("sphere weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - sphere_area(dim)).abs() > 1e-12 * sphere_area(dim) {
            return Err(invalid("sphere weights must sum to the sphere area"));
        }
        Ok(Self { dim, nodes: flat, weights, random: false, coarse: None })
    }

    /// The two points of S^0 with unit weights.
    pub fn s0() -> Self {
        Self { dim: 1, nodes: vec![1.0, -1.0], weights: vec![1.0, 1.0], random: false, coarse: None }
    }

    /// Equispaced trapezoid rule on the circle, first node at `phase`.
    pub fn circle_trapezoid(m: usize, phase: f64) -> Self {
        let mut r = Self::raw_trapezoid(m, phase);
        if m >= 2 {
            r.coarse = Some(Box::new(Self::raw_trapezoid(m / 2, phase)));
        }
        r
    }

    fn raw_trapezoid(m: usize, phase: f64) -> Self {
        let m = m.max(1);
        let h = 2.0 * PI / m as f64;
        let mut nodes = Vec::with_capacity(2 * m);
        for k in 0..m {
            let t = phase + k as f64 * h;
            nodes.push(t.cos());
            nodes.push(t.sin());
        }
        Self { dim: 2, nodes, weights: vec![h; m], random: false, coarse: None }
    }

    /// Composite Gauss-Legendre on the circle with panel edges on every
    /// angle in `breaks`, roughly `m` nodes in total.
    pub fn circle_gauss(breaks: &[f64], m: usize, order: usize) -> Self {
        let mut r = Self::raw_gauss(breaks, m, order);
        r.coarse = Some(Box::new(Self::raw_gauss(breaks, m / 2, order)));
        r
    }

    fn raw_gauss(breaks: &[f64], m: usize, order: usize) -> Self {
        let two_pi = 2.0 * PI;
        let mut b: Vec<f64> = breaks.iter().map(|t| t.rem_euclid(two_pi)).collect();
        b.sort_by(f64::total_cmp);
        let start = b.first().copied().unwrap_or(0.0);
        let edges = segment_edges(start, start + two_pi, &b.iter().map(|t| if *t < start { t + two_pi } else { *t }).collect::<Vec<_>>());
        let panel = two_pi * order as f64 / m.max(order) as f64;
        let gl = GaussLegendre::new(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in edges.windows(2) {
            let (a, c) = (pair[0], pair[1]);
            let k = ((c - a) / panel).ceil().max(1.0) as usize;
            let w = (c - a) / k as f64;
            for j in 0..k {
                let pa = a + j as f64 * w;
                for (t, wt) in gl.mapped(pa, pa + w) {
                    nodes.push(t.cos());
                    nodes.push(t.sin());
                    weights.push(wt);
                }
            }
        }
        Self { dim: 2, nodes, weights, random: false, coarse: None }
    }

    /// Product rule on S^2: Gauss-Legendre in `cos(theta)` (split at the
    /// equator, `n_theta` nodes in total) times an `n_phi`-point trapezoid in
    /// `phi`, with the polar axis along `pole`.
    pub fn sphere_product(n_theta: usize, n_phi: usize, pole: [f64; 3]) -> Self {
        let mut r = Self::raw_product(n_theta, n_phi, pole);
        r.coarse = Some(Box::new(Self::raw_product(n_theta / 2, n_phi / 2, pole)));
        r
    }

    fn raw_product(n_theta: usize, n_phi: usize, pole: [f64; 3]) -> Self {
        let half = (n_theta / 2).max(1);
        let gl = GaussLegendre::new(half);
        let (e1, e2, e3) = frame(pole);
        let h = 2.0 * PI / n_phi.max(1) as f64;
        let mut nodes = Vec::with_capacity(3 * 2 * half * n_phi);
        let mut weights = Vec::with_capacity(2 * half * n_phi);
        for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
            for (t, wt) in gl.mapped(lo, hi) {
                let st = (1.0 - t * t).max(0.0).sqrt();
                for k in 0..n_phi.max(1) {
                    let phi = (k as f64 + 0.5) * h;
                    let (s, c) = phi.sin_cos();
                    for d in 0..3 {
                        nodes.push(st * c * e1[d] + st * s * e2[d] + t * e3[d]);
                    }
                    weights.push(wt * h);
                }
            }
        }
        Self { dim: 3, nodes, weights, random: false, coarse: None }
    }

    /// Equal-weight random points on S^{N-1}.
    pub fn monte_carlo(dim: usize, m: usize, seed: u64) -> Self {
        let m = m.max(1);
        let mut r = rng::stream(seed, 0);
        let mut nodes = Vec::with_capacity(dim * m);
        let mut x = vec![0.0; dim];
        for _ in 0..m {
            loop {
                let mut n2: f64 = 0.0;
                for v in x.iter_mut() {
                    *v = r.sample(StandardNormal);
                    n2 += *v * *v;
                }
                if n2 > 1e-300 {
                    let n = n2.sqrt();
                    nodes.extend(x.iter().map(|v| v / n));
                    break;
                }
            }
        }
        let w = sphere_area(dim) / m as f64;
        Self { dim, nodes, weights: vec![w; m], random: true, coarse: None }
    }

    /// Rule suited to integrands that are smooth on the sphere apart from
    /// the kinks of `body`'s gauge: kink-aligned panels on the circle, product
    /// rule on S^2, random points beyond.
    pub fn for_body(body: &ConvexBody, nodes: usize, seed: u64) -> Self {
        match body.dim() {
            1 => Self::s0(),
            2 => {
                let kinks = body.kink_angles();
                if kinks.is_empty() {
                    Self::circle_trapezoid(nodes, PI / nodes.max(1) as f64)
                } else {
                    Self::circle_gauss(&kinks, nodes, 8)
                }
            }
            3 => {
                let n_theta = (((nodes / 2) as f64).sqrt().round() as usize).max(2);
                Self::sphere_product(n_theta, 2 * n_theta, [0.0, 0.0, 1.0])
            }
            d => Self::monte_carlo(d, nodes, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True for Monte Carlo rules, whose error is statistical.
    pub fn is_random(&self) -> bool {
        self.random
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let vals: Vec<f64> = self.iter().map(|(s, w)| w * f(s)).collect();
        crate::quadrature::pairwise_sum(&vals)
    }

    /// Integral with an error estimate: the standard error for Monte Carlo
    /// rules, otherwise the difference from the half-resolution companion.
    /// Custom rules are compared against their even-indexed nodes with doubled
    /// weights; S^0 is exact.
    pub fn integrate_with_error(&self, mut f: impl FnMut(&[f64]) -> f64) -> (f64, f64) {
        if self.random {
            let vals: Vec<f64> = self.iter().map(|(s, _)| f(s)).collect();
            let area = sphere_area(self.dim);
            let (mean, se) = mean_and_se(&vals);
            return (area * mean, area * se);
        }
        if self.dim == 1 {
            return (self.integrate(f), 0.0);
        }
        let fine = self.integrate(&mut f);
        let crude = match &self.coarse {
            Some(c) => c.integrate(&mut f),
            None => {
                let vals: Vec<f64> = self
                    .iter()
                    .step_by(2)
                    .map(|(s, w)| 2.0 * w * f(s))
                    .collect();
                let scale = sphere_area(self.dim) / (2.0 * self.weights.iter().step_by(2).sum::<f64>());
                scale * crate::quadrature::pairwise_sum(&vals)
            }
        };
        (fine, (fine - crude).abs())
    }

    /// The half-resolution companion, if the rule has one.
    pub fn coarse(&self) -> Option<&SphereRule> {
        self.coarse.as_deref()
    }
}

pub(crate) fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = crate::quadrature::pairwise_sum(vals) / n;
    if vals.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = crate::quadrature::pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Right-handed orthonormal frame whose third vector is `pole` (normalized).
pub(crate) fn frame(pole: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = (pole[0] * pole[0] + pole[1] * pole[1] + pole[2] * pole[2]).sqrt();
    let e3 = if n > 0.0 { [pole[0] / n, pole[1] / n, pole[2] / n] } else { [0.0, 0.0, 1.0] };
    let helper = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * e3[0] + helper[1] * e3[1] + helper[2] * e3[2];
    let mut e1 = [helper[0] - d * e3[0], helper[1] - d * e3[1], helper[2] - d * e3[2]];
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= l);
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    (e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_quadratics(rule: &SphereRule) {
        let d = rule.dim();
        let area = sphere_area(d);
        assert!((rule.weights().iter().sum::<f64>() - area).abs() < 1e-12 * area);
        for i in 0..d {
            for j in 0..d {
                let got = rule.integrate(|s| s[i] * s[j]);
                let want = if i == j { area / d as f64 } else { 0.0 };
                assert!((got - want).abs() < 1e-10, "{i}{j}: {got} vs {want}");
            }
            assert!(rule.integrate(|s| s[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn built_in_rules_integrate_quadratics() {
        check_quadratics(&SphereRule::s0());
        check_quadratics(&SphereRule::circle_trapezoid(16, 0.1));
        check_quadratics(&SphereRule::circle_gauss(&[0.3, 2.0], 64, 8));
        check_quadratics(&SphereRule::sphere_product(8, 16, [0.0, 0.0, 1.0]));
        check_quadratics(&SphereRule::sphere_product(8, 16, [0.3, -1.0, 0.4]));
    }

    #[test]
    fn monte_carlo_rule_weights() {
        let r = SphereRule::monte_carlo(4, 1000, 1);
        assert!((r.weights().iter().sum::<f64>() - 2.0 * PI * PI).abs() < 1e-10);
        assert!(r.is_random());
    }

    #[test]
    fn areas_match_general_formula() {
        for d in 2..=4 {
            let n = d as f64;
            let g = 2.0 * PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0);
            assert!((sphere_area(d) - g).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_rule_validation() {
        assert!(SphereRule::new(2, vec![vec![1.0, 0.0]], vec![1.0]).is_err());
        assert!(SphereRule::new(1, vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]).is_ok());
    }
}
