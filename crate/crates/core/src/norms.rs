//! Mixed complex modulus, the BBM constant K_{p,N}, the polar L_p-moment
//! body norm and the dual of the p = 1 moment norm.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::convex_body::ConvexBody;
use crate::error::{check_dim, invalid, Error, Result};
use crate::estimate::Estimate;
use crate::quadrature::{pairwise_sum, GaussLegendre};
use crate::sphere::{self, SphereRule};

/// `(|Re z|^p + |Im z|^p)^{1/p}` with Euclidean `|.|` on each part.
pub fn mixed_modulus(z: &[Complex64], p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(mixed_modulus_pow(z, p).powf(1.0 / p))
}

/// `|z|_p^p`, the form that is additive over real and imaginary parts.
pub fn mixed_modulus_pow(z: &[Complex64], p: f64) -> f64 {
    let re: f64 = z.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
    let im: f64 = z.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    re.powf(p) + im.powf(p)
}

/// `|z|_p^p` for a complex scalar.
#[inline]
pub fn scalar_pow(z: Complex64, p: f64) -> f64 {
    if p == 2.0 {
        z.re * z.re + z.im * z.im
    } else if p == 1.0 {
        z.re.abs() + z.im.abs()
    } else {
        z.re.abs().powf(p) + z.im.abs().powf(p)
    }
}

/// Rejects exponents below 1 and non-finite ones.
pub fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("exponent p must be finite and >= 1, got {p}")))
    }
}

/// `K_{p,N} = (1/p) * integral over S^{N-1} of |omega . x|^p`, in closed form
/// `2 pi^{(N-1)/2} Gamma((p+1)/2) / (p Gamma((N+p)/2))`.
pub fn kpn_constant(p: f64, n: usize) -> Result<f64> {
    check_p(p)?;
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let nf = n as f64;
    let ln = (2.0f64).ln() + 0.5 * (nf - 1.0) * PI.ln() + ln_gamma(0.5 * (p + 1.0))
        - ln_gamma(0.5 * (nf + p));
    Ok(ln.exp() / p)
}

/// `K_{p,N}` by quadrature along an arbitrary direction `omega` (N <= 3);
/// used to confirm the constant does not depend on the direction.
pub fn kpn_constant_along(p: f64, omega: &[f64]) -> Result<f64> {
    check_p(p)?;
    let n = omega.len();
    let len = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(len > 0.0) {
        return Err(invalid("direction must be nonzero"));
    }
    let w: Vec<f64> = omega.iter().map(|v| v / len).collect();
    let body = ConvexBody::ball(n, 1.0)?;
    let (val, _) = aligned_power(&body, p, &w, 8192, 0)?;
    Ok(val)
}

/// Evaluation strategy for the moment norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentMethod {
    /// `vol(K)` times the sample mean over uniform points of K.
    BodyMonteCarlo { samples: usize, seed: u64 },
    /// Sphere representation with rules aligned to the integrand's kinks.
    SphereQuadrature { nodes: usize },
}

/// Evaluator for `||v||_{Z*_p K} = ((N+p)/p * integral over K of |v.x|_p^p)^{1/p}`.
#[derive(Clone, Debug)]
pub struct MomentNormEvaluator {
    body: ConvexBody,
    p: f64,
    method: MomentMethod,
    normalizer: f64,
    samples: Option<Arc<Vec<f64>>>,
    second_moment: Option<Vec<f64>>,
}

impl MomentNormEvaluator {
    pub fn new(body: ConvexBody, p: f64, method: MomentMethod) -> Result<Self> {
        check_p(p)?;
        let n = body.dim();
        let samples = match &method {
            MomentMethod::BodyMonteCarlo { samples, seed } => {
                if *samples < 2 {
                    return Err(invalid("Monte Carlo evaluator needs at least 2 samples"));
                }
                let pts = body.sample_uniform_stream(*samples, *seed, 0)?;
                Some(Arc::new(pts.into_iter().flatten().collect()))
            }
            MomentMethod::SphereQuadrature { nodes } => {
                if *nodes < 8 {
                    return Err(invalid("sphere quadrature needs at least 8 nodes"));
                }
                None
            }
        };
        let mut ev = Self {
            normalizer: (n as f64 + p) / p,
            body,
            p,
            method,
            samples,
            second_moment: None,
        };
        if p == 2.0 && matches!(ev.method, MomentMethod::SphereQuadrature { .. }) && n <= 3 {
            ev.second_moment = Some(ev.second_moment_matrix());
        }
        Ok(ev)
    }

    /// Quadrature evaluator with the default resolution.
    pub fn quadrature(body: ConvexBody, p: f64) -> Result<Self> {
        Self::new(body, p, MomentMethod::SphereQuadrature { nodes: 2048 })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn method(&self) -> &MomentMethod {
        &self.method
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// The norm, by the configured method. Monte Carlo evaluators reuse the
    /// sample set drawn at construction.
    pub fn moment_norm(&self, v: &[Complex64]) -> Result<Estimate> {
        check_dim(self.body.dim(), v.len())?;
        let (pow, err) = match &self.method {
            MomentMethod::BodyMonteCarlo { .. } => {
                let pts = self.samples.as_ref().expect("samples drawn at construction");
                self.mc_power(v, pts)
            }
            MomentMethod::SphereQuadrature { nodes } => self.quad_power(v, *nodes),
        };
        Ok(root(pow, err, self.p))
    }

    /// Monte Carlo norm from a fresh sample stream indexed by `counter`, so
    /// concurrent callers can draw independent samples deterministically.
    pub fn moment_norm_with_stream(&self, v: &[Complex64], counter: u64) -> Result<Estimate> {
        check_dim(self.body.dim(), v.len())?;
        let MomentMethod::BodyMonteCarlo { samples, seed } = &self.method else {
            return self.moment_norm(v);
        };
        let pts: Vec<f64> = self
            .body
            .sample_uniform_stream(*samples, *seed, counter + 1)?
            .into_iter()
            .flatten()
            .collect();
        let (pow, err) = self.mc_power(v, &pts);
        Ok(root(pow, err, self.p))
    }

    /// The sphere representation `((1/p) int |v.s|_p^p / g(s)^{N+p} ds)^{1/p}`
    /// on a caller-supplied rule.
    pub fn moment_norm_sphere(&self, v: &[Complex64], rule: &SphereRule) -> Result<Estimate> {
        check_dim(self.body.dim(), v.len())?;
        check_dim(self.body.dim(), rule.dim())?;
        let n = self.body.dim() as f64;
        let p = self.p;
        let (int, err) = rule.integrate_with_error(|s| {
            let z = dot_c(v, s);
            scalar_pow(z, p) / self.body.gauge_unchecked(s).powf(n + p)
        });
        Ok(root(int / p, err / p, p))
    }

    /// The sphere representation with kink-aligned rules, at the given
    /// resolution; this is the accurate deterministic route.
    pub fn moment_norm_quadrature(&self, v: &[Complex64], nodes: usize) -> Result<Estimate> {
        check_dim(self.body.dim(), v.len())?;
        let (pow, err) = self.quad_power(v, nodes);
        Ok(root(pow, err, self.p))
    }

    /// `||v||^p` with its error, by the configured method.
    pub fn power(&self, v: &[Complex64]) -> (f64, f64) {
        match &self.method {
            MomentMethod::BodyMonteCarlo { .. } => {
                self.mc_power(v, self.samples.as_ref().expect("samples drawn at construction"))
            }
            MomentMethod::SphereQuadrature { nodes } => self.quad_power(v, *nodes),
        }
    }

    /// `||a||^p` for a real vector by the quadrature route.
    pub fn power_real(&self, a: &[f64]) -> (f64, f64) {
        let nodes = match self.method {
            MomentMethod::SphereQuadrature { nodes } => nodes,
            MomentMethod::BodyMonteCarlo { .. } => sphere::default_nodes(self.body.dim()),
        };
        if let Some(s) = &self.second_moment {
            return (quad_form(s, a), 0.0);
        }
        aligned_power(&self.body, self.p, a, nodes, 0).expect("validated at construction")
    }

    fn quad_power(&self, v: &[Complex64], nodes: usize) -> (f64, f64) {
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        let im: Vec<f64> = v.iter().map(|c| c.im).collect();
        if let Some(s) = &self.second_moment {
            return (quad_form(s, &re) + quad_form(s, &im), 0.0);
        }
        let (a, ea) = aligned_power(&self.body, self.p, &re, nodes, 0).expect("validated");
        let (b, eb) = aligned_power(&self.body, self.p, &im, nodes, 1).expect("validated");
        (a + b, ea + eb)
    }

    fn mc_power(&self, v: &[Complex64], pts: &[f64]) -> (f64, f64) {
        let n = self.body.dim();
        let vals: Vec<f64> = pts
            .chunks_exact(n)
            .map(|x| scalar_pow(dot_c(v, x), self.p))
            .collect();
        let (mean, se) = sphere::mean_and_se(&vals);
        let c = self.normalizer * self.body.volume();
        (c * mean, c * se)
    }

    /// `((N+2)/2) * integral over K of x x^T`, by the sphere representation.
    fn second_moment_matrix(&self) -> Vec<f64> {
        let n = self.body.dim();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0.0; n];
                e[i] += 1.0;
                e[j] += 1.0;
                let mut f = vec![0.0; n];
                f[i] += 1.0;
                f[j] -= 1.0;
                let qe = aligned_power(&self.body, 2.0, &e, 4096, 0).expect("valid").0;
                let qf = if i == j { 0.0 } else { aligned_power(&self.body, 2.0, &f, 4096, 0).expect("valid").0 };
                let v = if i == j { qe / 4.0 } else { (qe - qf) / 4.0 };
                s[i * n + j] = v;
                s[j * n + i] = v;
            }
        }
        s
    }
}

fn quad_form(s: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a[i] * s[i * n + j] * a[j];
        }
    }
    acc
}

fn root(pow: f64, err: f64, p: f64) -> Estimate {
    if pow <= 0.0 {
        return Estimate { value: 0.0, error: err.max(0.0).powf(1.0 / p) };
    }
    let value = pow.powf(1.0 / p);
    Estimate { value, error: value * err / (p * pow) }
}

#[inline]
pub(crate) fn dot_c(v: &[Complex64], x: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (c, xi) in v.iter().zip(x) {
        re += c.re * xi;
        im += c.im * xi;
    }
    Complex64::new(re, im)
}

/// `(1/p) int_{S^{N-1}} |a.s|^p g(s)^{-(N+p)} ds` for a real vector `a`, i.e.
/// `||a||^p_{Z*_p K}`, with a rule aligned to the zero set of `a.s` and to
/// the body's kinks. Returns the value and a half-resolution error estimate.
pub fn aligned_power(body: &ConvexBody, p: f64, a: &[f64], nodes: usize, seed: u64) -> Result<(f64, f64)> {
    check_p(p)?;
    let n = body.dim();
    check_dim(n, a.len())?;
    let len: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len == 0.0 {
        return Ok((0.0, 0.0));
    }
    let e = n as f64 + p;
    let f = |s: &[f64]| {
        let d: f64 = a.iter().zip(s).map(|(x, y)| x * y).sum();
        d.abs().powf(p) / body.gauge_unchecked(s).powf(e)
    };
    let (int, err) = match n {
        1 => (f(&[1.0]) + f(&[-1.0]), 0.0),
        2 => {
            let t0 = a[1].atan2(a[0]) + 0.5 * PI;
            let mut breaks = body.kink_angles();
            breaks.push(t0);
            breaks.push(t0 + PI);
            SphereRule::circle_gauss(&breaks, nodes, 8).integrate_with_error(f)
        }
        3 => {
            let n_theta = (((nodes / 2) as f64).sqrt().round() as usize).max(4);
            let pole = [a[0] / len, a[1] / len, a[2] / len];
            SphereRule::sphere_product(n_theta, 2 * n_theta, pole).integrate_with_error(f)
        }
        _ => SphereRule::monte_carlo(n, nodes.max(1 << 14), seed).integrate_with_error(f),
    };
    Ok((int / p, err / p))
}

/// `sup { <v, w> : ||v||_{Z*_1 K} <= 1 }` for real `w`, as the maximum over
/// unit directions of `<s, w> / ||s||_{Z*_1 K}`. The rule's nodes seed a
/// local ascent; the result is a lower bound of the true supremum.
pub fn dual_norm_z1(body: &ConvexBody, w: &[Complex64], rule: &SphereRule) -> Result<f64> {
    if w.iter().any(|c| c.im != 0.0) {
        return Err(Error::Unsupported("the dual norm is defined for real vectors only".into()));
    }
    let wr: Vec<f64> = w.iter().map(|c| c.re).collect();
    dual_norm_z1_real(body, &wr, rule)
}

pub fn dual_norm_z1_real(body: &ConvexBody, w: &[f64], rule: &SphereRule) -> Result<f64> {
    let n = body.dim();
    check_dim(n, w.len())?;
    check_dim(n, rule.dim())?;
    if w.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let z1 = |s: &[f64]| aligned_power(body, 1.0, s, 512, 0).expect("validated").0;
    let ratio = |s: &[f64]| {
        let d: f64 = s.iter().zip(w).map(|(x, y)| x * y).sum();
        d / z1(s)
    };
    if n == 1 {
        return Ok(ratio(&[1.0]).max(ratio(&[-1.0])));
    }
    // Only directions with <s, w> > 0 can be maximizers.
    let seeds: Vec<(f64, Vec<f64>)> = rule
        .iter()
        .filter(|(s, _)| s.iter().zip(w).map(|(x, y)| x * y).sum::<f64>() > 0.0)
        .map(|(s, _)| s.to_vec())
        .map(|s| (ratio(&s), s))
        .collect();
    let best = seeds
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| invalid("sphere rule has no node in the half-space of w"))?;
    let spacing = (sphere::sphere_area(n) / rule.len() as f64).powf(1.0 / (n as f64 - 1.0));
    Ok(local_ascent(&ratio, best.1, spacing, n))
}

/// `min over unit s of ||s||_{Z*_1 K}`; `1 / min_z1` bounds the dual norm of
/// unit vectors.
pub fn min_z1(body: &ConvexBody) -> Result<f64> {
    let n = body.dim();
    let z1 = |s: &[f64]| aligned_power(body, 1.0, s, 512, 0).expect("validated").0;
    if n == 1 {
        return Ok(z1(&[1.0]));
    }
    let rule = match n {
        2 => SphereRule::circle_trapezoid(1024, 0.0),
        3 => SphereRule::sphere_product(32, 64, [0.0, 0.0, 1.0]),
        d => SphereRule::monte_carlo(d, 4096, 0),
    };
    let (best, _) = rule
        .iter()
        .map(|(s, _)| (s.to_vec(), z1(s)))
        .fold((Vec::new(), f64::INFINITY), |acc, (s, v)| if v < acc.1 { (s, v) } else { acc });
    let spacing = (sphere::sphere_area(n) / rule.len() as f64).powf(1.0 / (n as f64 - 1.0));
    let neg = |s: &[f64]| -z1(s);
    Ok(-local_ascent(&neg, best, spacing, n))
}

fn local_ascent(f: &dyn Fn(&[f64]) -> f64, start: Vec<f64>, spacing: f64, n: usize) -> f64 {
    if n == 2 {
        let t0 = start[1].atan2(start[0]);
        let g = |t: f64| -f(&[t.cos(), t.sin()]);
        let (mut a, mut b) = (t0 - 2.0 * spacing, t0 + 2.0 * spacing);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (g(c), g(d));
        while b - a > 1e-10 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = g(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = g(d);
            }
        }
        return (-g(0.5 * (a + b))).max(-g(t0));
    }
    // Compass search on the sphere: step along tangent coordinate directions
    // and renormalize.
    let mut x = start;
    let mut fx = f(&x);
    let mut step = spacing;
    while step > 1e-9 {
        let mut improved = false;
        for j in 0..n {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] += sgn * step;
                let l = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                y.iter_mut().for_each(|v| *v /= l);
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    fx
}

/// Integral of a univariate function with a Gauss-Legendre rule on fixed
/// panels; used by tests as an independent oracle.
pub fn gauss_panels(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(20);
    let h = (b - a) / panels as f64;
    let vals: Vec<f64> = (0..panels)
        .map(|k| gl.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &f))
        .collect();
    pairwise_sum(&vals)
}
