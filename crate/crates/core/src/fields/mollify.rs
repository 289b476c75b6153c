use num_complex::Complex64;

use super::Field;
use crate::error::{invalid, Result};
use crate::polytope::dot;
use crate::quadrature::GaussLegendre;
use crate::sphere::SphereRule;

const RADIAL_ORDER: usize = 48;

/// Unnormalized bump `exp(-1/(1 - r^2))` on `[0, 1)`.
fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

fn bump_derivative(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        let q = 1.0 - r * r;
        bump(r) * (-2.0 * r / (q * q))
    }
}

/// `u_m = tau_m * u`, with `tau_m(z) = m^N tau(m z)` and `tau` the bump
/// normalized so that the polar quadrature used here sums to exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollified {
    inner: Field,
    m: u32,
    /// Normalization constant of `tau` (continuous variable `r = m |z|`).
    norm: f64,
    angular: SphereRule,
    /// Radial nodes and weights `w_k tau(r_k) r_k^{N-1} norm` on `[0, 1]`.
    radial: Vec<(f64, f64)>,
    /// Radial nodes and weights `w_k tau'(r_k) r_k^{N-1} norm`.
    radial_derivative: Vec<(f64, f64)>,
}

fn angular_rule(dim: usize) -> SphereRule {
    match dim {
        1 => SphereRule::s0(),
        2 => SphereRule::circle_trapezoid(256, 0.0),
        3 => SphereRule::sphere_product(16, 32, [0.0, 0.0, 1.0]),
        d => SphereRule::monte_carlo(d, 4096, 0),
    }
}

impl Mollified {
    pub fn new(inner: Field, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("mollification index m must be positive"));
        }
        let dim = inner.dim();
        let angular = angular_rule(dim);
        let gl = GaussLegendre::new(RADIAL_ORDER);
        let raw: Vec<(f64, f64)> = gl
            .mapped(0.0, 1.0)
            .map(|(r, w)| (r, w * r.powi(dim as i32 - 1)))
            .collect();
        let mass: f64 = raw.iter().map(|(r, w)| w * bump(*r)).sum::<f64>()
            * angular.weights().iter().sum::<f64>();
        let norm = 1.0 / mass;
        let radial = raw.iter().map(|(r, w)| (*r, w * bump(*r) * norm)).collect();
        let radial_derivative = raw.iter().map(|(r, w)| (*r, w * bump_derivative(*r) * norm)).collect();
        Ok(Self { inner, m, norm, angular, radial, radial_derivative })
    }

    pub fn inner(&self) -> &Field {
        &self.inner
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn radius(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `tau_m(z)` for `|z| = s`.
    fn tau_m(&self, s: f64) -> f64 {
        let m = self.m as f64;
        m.powi(self.inner.dim() as i32) * self.norm * bump(m * s)
    }

    pub fn value(&self, x: &[f64]) -> Complex64 {
        let dim = x.len();
        let eps = self.radius();
        let mut y = vec![0.0; dim];
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.inner {
            Field::Indicator { region, amplitude } => {
                let gl = GaussLegendre::new(RADIAL_ORDER);
                for (s, ws) in self.angular.iter() {
                    // u(x - r s / m) is the indicator of an interval in r.
                    let d: Vec<f64> = s.iter().map(|v| -v * eps).collect();
                    let Some((t0, t1)) = region.line_interval(x, &d) else { continue };
                    let (a, b) = (t0.max(0.0), t1.min(1.0));
                    if b <= a {
                        continue;
                    }
                    let ray = if a == 0.0 && b == 1.0 {
                        self.radial.iter().map(|(_, w)| w).sum::<f64>()
                    } else {
                        gl.integrate(a, b, |r| bump(r) * r.powi(dim as i32 - 1)) * self.norm
                    };
                    acc += ws * ray;
                }
                acc * *amplitude
            }
            inner => {
                for (s, ws) in self.angular.iter() {
                    for (r, wr) in &self.radial {
                        for j in 0..dim {
                            y[j] = x[j] - r * eps * s[j];
                        }
                        acc += inner.value_unchecked(&y) * (ws * wr);
                    }
                }
                acc
            }
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [Complex64]) {
        let dim = x.len();
        let eps = self.radius();
        out.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
        match &self.inner {
            Field::Indicator { region, amplitude } if dim == 2 => {
                // grad u_m(x) = -amp sum_f nu_f int_{facet} tau_m(x - y) dS(y).
                let gl = GaussLegendre::new(RADIAL_ORDER);
                for (i, nu) in region.normals().iter().enumerate() {
                    let verts = region.facet_vertices(i);
                    if verts.len() < 2 {
                        continue;
                    }
                    let (p, q) = (&verts[0], &verts[1]);
                    let e = [q[0] - p[0], q[1] - p[1]];
                    let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                    let t = [e[0] / len, e[1] / len];
                    // |p + s t - x|^2 < eps^2.
                    let w = [p[0] - x[0], p[1] - x[1]];
                    let b = dot(&w, &t);
                    let c = dot(&w, &w) - eps * eps;
                    let disc = b * b - c;
                    if disc <= 0.0 {
                        continue;
                    }
                    let root = disc.sqrt();
                    let (s0, s1) = ((-b - root).max(0.0), (-b + root).min(len));
                    if s1 <= s0 {
                        continue;
                    }
                    let val = gl.integrate(s0, s1, |s| {
                        let dx = p[0] + s * t[0] - x[0];
                        let dy = p[1] + s * t[1] - x[1];
                        self.tau_m((dx * dx + dy * dy).sqrt())
                    });
                    out[0] -= Complex64::new(amplitude * nu[0] * val, 0.0);
                    out[1] -= Complex64::new(amplitude * nu[1] * val, 0.0);
                }
            }
            Field::Indicator { region, amplitude } => {
                // grad u_m(x) = m sum_s s int_0^1 tau'(r) r^{N-1} 1_E(x - r s/m) dr.
                let gl = GaussLegendre::new(RADIAL_ORDER);
                let m = self.m as f64;
                for (s, ws) in self.angular.iter() {
                    let d: Vec<f64> = s.iter().map(|v| -v * eps).collect();
                    let Some((t0, t1)) = region.line_interval(x, &d) else { continue };
                    let (a, b) = (t0.max(0.0), t1.min(1.0));
                    if b <= a {
                        continue;
                    }
                    let ray = if a == 0.0 && b == 1.0 {
                        self.radial_derivative.iter().map(|(_, w)| w).sum::<f64>()
                    } else {
                        gl.integrate(a, b, |r| bump_derivative(r) * r.powi(dim as i32 - 1)) * self.norm
                    };
                    for j in 0..dim {
                        out[j] += Complex64::new(amplitude * m * ws * ray * s[j], 0.0);
                    }
                }
            }
            inner => {
                let mut y = vec![0.0; dim];
                let mut g = vec![Complex64::new(0.0, 0.0); dim];
                for (s, ws) in self.angular.iter() {
                    for (r, wr) in &self.radial {
                        for j in 0..dim {
                            y[j] = x[j] - r * eps * s[j];
                        }
                        inner.gradient_into(&y, &mut g);
                        for j in 0..dim {
                            out[j] += g[j] * (ws * wr);
                        }
                    }
                }
            }
        }
    }

    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let eps = self.radius();
        self.inner.support_box().map(|(lo, hi)| {
            (lo.iter().map(|v| v - eps).collect(), hi.iter().map(|v| v + eps).collect())
        })
    }

    pub fn axis_breaks(&self) -> Vec<Vec<f64>> {
        let eps = self.radius();
        self.inner
            .axis_breaks()
            .into_iter()
            .map(|b| {
                let mut out: Vec<f64> = b.iter().flat_map(|v| [v - eps, *v, v + eps]).collect();
                out.sort_by(f64::total_cmp);
                out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                out
            })
            .collect()
    }
}
