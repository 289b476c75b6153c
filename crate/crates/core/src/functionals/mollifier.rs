use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Radial mollifier sequences `rho_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MollifierKind {
    /// `rho_n(r) = p (1 - s_n) r^{p - N - p s_n}` for an increasing sequence
    /// `s_n` in (0, 1); the index n is 1-based.
    Ludwig { s_values: Vec<f64> },
    /// `rho_n(r) = N n^N 1_{[0, 1/n]}(r)`.
    ShrinkingUniform,
}

/// `rho(r) = kappa r^exponent` on `(0, r_max]`, zero beyond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    pub kappa: f64,
    pub exponent: f64,
    pub r_max: Option<f64>,
}

impl RadialProfile {
    pub fn rho(&self, r: f64) -> f64 {
        if r <= 0.0 || self.r_max.is_some_and(|m| r > m) {
            0.0
        } else {
            self.kappa * r.powf(self.exponent)
        }
    }

    /// `kappa * int_a^b r^q dr` in closed form.
    fn power_integral(&self, q: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let v = if (q + 1.0).abs() < 1e-14 {
            (b / a).ln()
        } else if b.is_infinite() {
            if q + 1.0 < 0.0 {
                -a.powf(q + 1.0) / (q + 1.0)
            } else {
                f64::INFINITY
            }
        } else {
            (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0)
        };
        self.kappa * v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierFamily {
    pub kind: MollifierKind,
    pub p: f64,
    pub dim: usize,
}

impl MollifierFamily {
    pub fn new(kind: MollifierKind, p: f64, dim: usize) -> Result<Self> {
        crate::norms::check_p(p)?;
        if dim == 0 {
            return Err(invalid("mollifier dimension must be positive"));
        }
        if let MollifierKind::Ludwig { s_values } = &kind {
            if s_values.is_empty() || s_values.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
                return Err(invalid("Ludwig sequence needs values in (0, 1)"));
            }
            if s_values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("Ludwig sequence must be strictly increasing"));
            }
        }
        Ok(Self { kind, p, dim })
    }

    /// `s_n` of the Ludwig family.
    pub fn s_at(&self, n: usize) -> Result<f64> {
        match &self.kind {
            MollifierKind::Ludwig { s_values } => s_values
                .get(n.wrapping_sub(1))
                .copied()
                .ok_or_else(|| invalid(format!("index {n} outside the Ludwig sequence of length {}", s_values.len()))),
            MollifierKind::ShrinkingUniform => Err(invalid("the uniform family has no s_n")),
        }
    }

    pub fn profile(&self, n: usize) -> Result<RadialProfile> {
        if n == 0 {
            return Err(invalid("mollifier index must be at least 1"));
        }
        let (p, nd) = (self.p, self.dim as f64);
        Ok(match &self.kind {
            MollifierKind::Ludwig { .. } => {
                let s = self.s_at(n)?;
                RadialProfile { kappa: p * (1.0 - s), exponent: p - nd - p * s, r_max: None }
            }
            MollifierKind::ShrinkingUniform => {
                let nf = n as f64;
                RadialProfile { kappa: nd * nf.powf(nd), exponent: 0.0, r_max: Some(1.0 / nf) }
            }
        })
    }

    pub fn rho(&self, n: usize, r: f64) -> Result<f64> {
        Ok(self.profile(n)?.rho(r))
    }

    /// `int_0^1 rho_n(r) r^{N-1} dr`, in closed form.
    pub fn normalization(&self, n: usize) -> Result<f64> {
        let pr = self.profile(n)?;
        let top = pr.r_max.map_or(1.0, |m| m.min(1.0));
        Ok(pr.power_integral(pr.exponent + self.dim as f64 - 1.0, 0.0, top))
    }

    /// `int_delta^inf rho_n(r) r^{N-1-p} dr`, in closed form.
    pub fn tail(&self, n: usize, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(invalid("tail threshold must be positive"));
        }
        let pr = self.profile(n)?;
        let top = pr.r_max.unwrap_or(f64::INFINITY);
        Ok(pr.power_integral(pr.exponent + self.dim as f64 - 1.0 - self.p, delta, top))
    }
}
