//! Per-ray radial integrals and the outer assembly.

use num_complex::Complex64;

use super::{FunctionalSpec, IntegrationBudget, RadialScheme, MAX_DIM};
use crate::convex_body::ConvexBody;
use crate::error::Result;
use crate::estimate::Estimate;
use crate::fields::{Field, Potential};
use crate::grid::{integrate_box, Level};
use crate::norms::scalar_pow;
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::sphere::{mean_and_se, sphere_area, SphereRule};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Kernel {
    pub coef: f64,
    pub g_exp: f64,
    pub beta: f64,
    pub r_max: Option<f64>,
    pub threshold: Option<f64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ANGLE_SAMPLES: usize = 256;

/// `int_a^b h^beta dh`, infinite when divergent.
pub(crate) fn power_integral(beta: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let q = beta + 1.0;
    if q.abs() < 1e-14 {
        return (b / a).ln();
    }
    if b.is_infinite() {
        return if q < 0.0 { -a.powf(q) / q } else { f64::INFINITY };
    }
    if a == 0.0 && q < 0.0 {
        return f64::INFINITY;
    }
    (b.powf(q) - a.powf(q)) / q
}

struct Ray<'a> {
    u: &'a Field,
    a: &'a Potential,
    body: &'a ConvexBody,
    p: f64,
    k: Kernel,
    rs: &'a RadialScheme,
    gl: GaussLegendre,
    lo: Vec<f64>,
    hi: Vec<f64>,
    ball: Option<f64>,
    panel: f64,
    h_lin: f64,
    gamma: f64,
    zero_a: bool,
    dim: usize,
    rule: SphereRule,
    nodes: usize,
}

impl Ray<'_> {
    fn box_exit(&self, x: &[f64], s: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for j in 0..self.dim {
            if s[j] > 0.0 {
                t = t.min((self.hi[j] - x[j]) / s[j]);
            } else if s[j] < 0.0 {
                t = t.min((self.lo[j] - x[j]) / s[j]);
            }
        }
        t.max(0.0)
    }

    /// A distance past which `u(x + h s)` vanishes.
    fn support_exit(&self, x: &[f64], s: &[f64]) -> f64 {
        let t = self.box_exit(x, s);
        if let Some(r) = self.ball {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 < r * r {
                let b: f64 = x.iter().zip(s).map(|(p, q)| p * q).sum();
                return t.min(-b + (b * b - r2 + r * r).sqrt());
            }
        }
        t
    }

    /// `Psi(x, x + h s) - u(x)`.
    #[inline]
    fn near_diff(&self, x: &[f64], s: &[f64], h: f64, ux: Complex64) -> Complex64 {
        let mut y = [0.0; MAX_DIM];
        for j in 0..self.dim {
            y[j] = x[j] + h * s[j];
        }
        let v = self.u.value_unchecked(&y[..self.dim]);
        if self.zero_a || v == ZERO {
            return v - ux;
        }
        let mut mid = [0.0; MAX_DIM];
        for j in 0..self.dim {
            mid[j] = x[j] + 0.5 * h * s[j];
        }
        Complex64::from_polar(1.0, -h * self.a.dot_at(s, &mid[..self.dim])) * v - ux
    }

    /// `Psi(y + h s, y)` for `y + h s` outside the support.
    #[inline]
    fn far_value(&self, y: &[f64], s: &[f64], h: f64, uy: Complex64) -> Complex64 {
        let mut mid = [0.0; MAX_DIM];
        for j in 0..self.dim {
            mid[j] = y[j] + 0.5 * h * s[j];
        }
        Complex64::from_polar(1.0, h * self.a.dot_at(s, &mid[..self.dim])) * uy
    }

    fn phi_const(&self, z: Complex64) -> f64 {
        let v = scalar_pow(z, self.p);
        match self.k.threshold {
            None => v,
            Some(d) => f64::from(v > d.powf(self.p)),
        }
    }

    /// `int_a^b f` on panels growing geometrically away from the origin,
    /// then uniform. From `a = 0` the first `h_lin` uses the linearization
    /// `|D|_p^p ~ slope h^p`.
    fn graded(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, slope: f64) -> f64 {
        let mut acc = 0.0;
        let mut e = a;
        if a == 0.0 {
            let hl = self.h_lin.min(b);
            acc += slope * hl.powf(self.gamma) / self.gamma;
            e = hl;
        }
        while e < b {
            let next = (e * self.rs.growth).min(e + self.panel).min(b);
            acc += self.gl.integrate(e, next, &f);
            e = next;
        }
        acc
    }

    /// `sum (a^{-p} - b^{-p}) / p` over the intervals of `[lo, hi]` where
    /// `|D|_p > delta`, located by a geometric scan and bisection.
    fn scan(&self, d: impl Fn(f64) -> Complex64, lo: f64, hi: f64, slope: f64) -> f64 {
        let delta = self.k.threshold.expect("threshold kernel");
        let dp = delta.powf(self.p);
        let on = |h: f64| scalar_pow(d(h), self.p) > dp;
        let beta = self.k.beta;
        let mut h = if lo == 0.0 { self.h_lin } else { lo };
        if h >= hi {
            return 0.0;
        }
        let mut state = on(h);
        let mut open = if !state {
            None
        } else if lo == 0.0 {
            let modulus = slope.powf(1.0 / self.p);
            Some(if modulus > 0.0 { (delta / modulus).min(h) } else { h })
        } else {
            Some(lo)
        };
        let mut acc = 0.0;
        while h < hi {
            let next = (h * self.rs.scan_ratio).min(h + self.rs.scan_step).min(hi);
            let s2 = on(next);
            if s2 != state {
                let (mut l, mut r) = (h, next);
                while r - l > self.rs.bisection_tol {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    if on(m) == state {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                let c = 0.5 * (l + r);
                if s2 {
                    open = Some(c);
                } else if let Some(a) = open.take() {
                    acc += power_integral(beta, a, c);
                }
                state = s2;
            }
            h = next;
        }
        if let Some(a) = open {
            acc += power_integral(beta, a, hi);
        }
        acc
    }

    /// Ray from `x` inside the box, without `c(sigma)`.
    fn near(&self, x: &[f64], s: &[f64], ux: Complex64, slope: f64, hk: f64) -> f64 {
        let beta = self.k.beta;
        let p = self.p;
        let (inner, exit) = match self.u {
            Field::Indicator { region, amplitude } => {
                let exit = self.box_exit(x, s);
                (self.indicator_pieces(region.line_interval(x, s), *amplitude, x, s, ux, slope, exit.min(hk)), exit)
            }
            _ => {
                let exit = self.support_exit(x, s);
                let l = exit.min(hk);
                let v = match self.k.threshold {
                    None => self.graded(|h| scalar_pow(self.near_diff(x, s, h, ux), p) * h.powf(beta), 0.0, l, slope),
                    Some(_) => self.scan(|h| self.near_diff(x, s, h, ux), 0.0, l, slope),
                };
                (v, exit)
            }
        };
        let tail = if exit < hk && ux != ZERO {
            self.phi_const(ux) * power_integral(beta, exit, hk)
        } else {
            0.0
        };
        inner + tail
    }

    #[allow(clippy::too_many_arguments)]
    fn indicator_pieces(
        &self,
        chord: Option<(f64, f64)>,
        amp: f64,
        x: &[f64],
        s: &[f64],
        ux: Complex64,
        slope: f64,
        l: f64,
    ) -> f64 {
        let beta = self.k.beta;
        let mut edges = vec![0.0, l];
        if let Some((t0, t1)) = chord {
            edges.extend([t0, t1].into_iter().filter(|t| *t > 0.0 && *t < l));
        }
        edges.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let inside = chord.is_some_and(|(t0, t1)| t0 < mid && mid < t1);
            if inside && !self.zero_a {
                acc += self.graded(|h| scalar_pow(self.near_diff(x, s, h, ux), self.p) * h.powf(beta), a, b, slope);
                continue;
            }
            let d = Complex64::new(if inside { amp } else { 0.0 }, 0.0) - ux;
            if d == ZERO || (a == 0.0 && beta <= -1.0) {
                // The second case needs x on the boundary of the region.
                continue;
            }
            acc += scalar_pow(d, self.p) * power_integral(beta, a, b);
        }
        acc
    }

    /// Ray from `y` inside the box to points `x` outside it: value and
    /// bound, without `c(sigma)`.
    fn far(&self, y: &[f64], s: &[f64], uy: Complex64, hk: f64) -> (f64, f64) {
        if uy == ZERO {
            return (0.0, 0.0);
        }
        let rho = self.box_exit(y, s);
        if rho >= hk {
            return (0.0, 0.0);
        }
        let beta = self.k.beta;
        let p = self.p;
        if self.zero_a || p == 2.0 {
            return (self.phi_const(uy) * power_integral(beta, rho, hk), 0.0);
        }
        let top = hk.min(self.rs.far_span * rho.max(self.h_lin));
        let main = match self.k.threshold {
            None => self.graded(|h| scalar_pow(self.far_value(y, s, h, uy), p) * h.powf(beta), rho, top, 0.0),
            Some(_) => self.scan(|h| self.far_value(y, s, h, uy), rho, top, 0.0),
        };
        if top >= hk {
            return (main, 0.0);
        }
        // |e^{i t} z|_p^p / |z|^p ranges over [2^{1-p/2}, 1] or [1, 2^{1-p/2}].
        let t = power_integral(beta, top, hk);
        let rp = uy.norm().powf(p);
        let q = 2f64.powf(1.0 - 0.5 * p);
        let (qmin, qmax) = (q.min(1.0), q.max(1.0));
        let (lo, hi) = match self.k.threshold {
            None => (rp * qmin * t, rp * qmax * t),
            Some(d) => {
                let dp = d.powf(p);
                (if rp * qmin > dp { t } else { 0.0 }, if rp * qmax > dp { t } else { 0.0 })
            }
        };
        (main + 0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    /// Panel edges on the circle for indicator fields: gauge kinks, the
    /// directions of the region and box vertices, and the directions where
    /// the radial cut meets a facet.
    fn indicator_circle(&self, z: &[f64], region: &crate::fields::Region) -> SphereRule {
        let mut angles = self.body.kink_angles();
        let corners = [
            [self.lo[0], self.lo[1]],
            [self.hi[0], self.lo[1]],
            [self.hi[0], self.hi[1]],
            [self.lo[0], self.hi[1]],
        ];
        for v in region.vertices().iter().map(|v| [v[0], v[1]]).chain(corners) {
            let (dx, dy) = (v[0] - z[0], v[1] - z[1]);
            if dx != 0.0 || dy != 0.0 {
                angles.push(dy.atan2(dx));
            }
        }
        if let Some(r_max) = self.k.r_max {
            let mut facets: Vec<([f64; 2], f64)> =
                region.normals().iter().zip(region.offsets()).map(|(n, c)| ([n[0], n[1]], *c)).collect();
            facets.extend([
                ([1.0, 0.0], self.hi[0]),
                ([-1.0, 0.0], -self.lo[0]),
                ([0.0, 1.0], self.hi[1]),
                ([0.0, -1.0], -self.lo[1]),
            ]);
            for (n, c) in facets {
                let d = c - n[0] * z[0] - n[1] * z[1];
                if d > 0.0 {
                    self.cut_crossings(n, d, r_max, &mut angles);
                }
            }
        }
        SphereRule::circle_gauss(&angles, self.nodes, 8)
    }

    /// Roots of `r_max (sigma . n) = d g(sigma)` on the circle.
    fn cut_crossings(&self, n: [f64; 2], d: f64, r_max: f64, out: &mut Vec<f64>) {
        let f = |t: f64| {
            let s = [t.cos(), t.sin()];
            r_max * (s[0] * n[0] + s[1] * n[1]) - d * self.body.gauge_unchecked(&s)
        };
        let step = 2.0 * std::f64::consts::PI / ANGLE_SAMPLES as f64;
        let mut prev = f(0.0);
        for i in 1..=ANGLE_SAMPLES {
            let t = i as f64 * step;
            let cur = f(t);
            if (prev > 0.0) != (cur > 0.0) {
                let (mut a, mut b) = (t - step, t);
                let fa_pos = prev > 0.0;
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if (f(m) > 0.0) == fa_pos {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
            prev = cur;
        }
    }

    fn node(&self, z: &[f64], level: Level) -> (f64, f64) {
        let dim = self.dim;
        let uz = self.u.value_unchecked(z);
        let mut w = [ZERO; MAX_DIM];
        self.u.gradient_into(z, &mut w[..dim]);
        if !self.zero_a && uz != ZERO {
            let mut av = [0.0; MAX_DIM];
            self.a.evaluate_into(z, &mut av[..dim]);
            for j in 0..dim {
                w[j] -= Complex64::new(0.0, av[j]) * uz;
            }
        }
        let own;
        let base = match self.u {
            Field::Indicator { region, .. } if dim == 2 => {
                own = self.indicator_circle(z, region);
                &own
            }
            _ => &self.rule,
        };
        let rule = match level {
            Level::Fine => base,
            Level::Coarse => base.coarse().unwrap_or(base),
        };
        let k = self.k;
        let mut vals = Vec::with_capacity(rule.len());
        let mut bounds = Vec::with_capacity(rule.len());
        for (s, wt) in rule.iter() {
            let g = self.body.gauge_unchecked(s);
            let c = k.coef * g.powf(k.g_exp);
            let hk = k.r_max.map_or(f64::INFINITY, |r| r / g);
            let ws: Complex64 = w[..dim].iter().zip(s).map(|(a, b)| a * b).sum();
            let slope = scalar_pow(ws, self.p);
            let near = self.near(z, s, uz, slope, hk);
            let (far, fb) = self.far(z, s, uz, hk);
            vals.push(c * (near + far));
            bounds.push(wt * c * fb);
        }
        let bound = pairwise_sum(&bounds);
        if rule.is_random() {
            let area = sphere_area(dim);
            let (mean, se) = mean_and_se(&vals);
            return (area * mean, bound + area * se);
        }
        let weighted: Vec<f64> = vals.iter().zip(rule.weights()).map(|(v, w)| v * w).collect();
        (pairwise_sum(&weighted), bound)
    }
}

pub(crate) fn integrate(u: &Field, spec: &FunctionalSpec, budget: &IntegrationBudget) -> Result<Estimate> {
    let Some((lo, hi)) = u.support_box() else { return Ok(Estimate::ZERO) };
    let k = spec.kernel();
    let p = spec.p();
    let dim = u.dim();
    let radius = u.support_radius();
    let ball = match u {
        Field::Gaussian { cutoff, .. } | Field::ModulatedGaussian { cutoff, .. } => Some(*cutoff),
        Field::Bump { .. } => Some(1.0),
        _ => None,
    };
    let rs = &budget.radial;
    let seed = crate::rng::derive_seed(budget.seed, "sphere");
    let ev = Ray {
        u,
        a: spec.potential(),
        body: spec.body(),
        p,
        k,
        rs,
        gl: GaussLegendre::new(rs.order),
        ball,
        panel: rs.panel.unwrap_or(0.5 * u.length_scale()),
        h_lin: rs.h_min * radius.max(f64::MIN_POSITIVE),
        gamma: k.beta + p + 1.0,
        zero_a: spec.potential().is_zero(),
        dim,
        rule: SphereRule::for_body(spec.body(), budget.sphere_nodes, seed),
        nodes: budget.sphere_nodes,
        lo,
        hi,
    };
    let mut breaks = u.axis_breaks();
    if let (Some(r_max), false) = (k.r_max, u.is_smooth()) {
        let ext = spec.body().axis_extents();
        for (j, b) in breaks.iter_mut().enumerate() {
            let reach = ext[j] * r_max;
            let shifted: Vec<f64> = b.iter().flat_map(|v| [v - reach, v + reach]).collect();
            b.extend(shifted);
            b.sort_by(f64::total_cmp);
        }
    }
    integrate_box(&budget.outer, &ev.lo, &ev.hi, &breaks, |z, level| ev.node(z, level))
}
