//! Complex fields, magnetic potentials and the local quantities built on
//! them.

mod energy;
mod mollify;
mod potential;
mod region;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{check_dim, invalid, Error, Result};

pub use energy::{
    anisotropic_perimeter, local_energy, magnetic_gradient, psi, total_variation_routes,
    total_variation_smooth, variational_pairing, TestField, TvRoutes,
};
pub use mollify::Mollified;
pub use potential::Potential;
pub use region::Region;

/// Radius beyond which `e^{-|x|^2/2} < 1e-16`; Gaussians are cut off there.
pub const GAUSSIAN_CUTOFF: f64 = 8.6;

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Zero { dim: usize },
    /// `e^{-|x|^2/2}`.
    Gaussian { dim: usize, cutoff: f64 },
    /// `e^{i k.x} e^{-|x|^2/2}`.
    ModulatedGaussian { wave: Vec<f64>, cutoff: f64 },
    /// `exp(1 - 1/(1 - |x|^2))` on the open unit ball.
    Bump { dim: usize },
    /// `amplitude * 1_E`.
    Indicator { region: Region, amplitude: f64 },
    Mollified(Arc<Mollified>),
}

impl Field {
    pub fn zero(dim: usize) -> Self {
        Field::Zero { dim }
    }

    pub fn gaussian(dim: usize) -> Self {
        Field::Gaussian { dim, cutoff: GAUSSIAN_CUTOFF }
    }

    pub fn modulated_gaussian(wave: Vec<f64>) -> Self {
        Field::ModulatedGaussian { wave, cutoff: GAUSSIAN_CUTOFF }
    }

    pub fn bump(dim: usize) -> Self {
        Field::Bump { dim }
    }

    pub fn indicator(region: Region, amplitude: f64) -> Self {
        Field::Indicator { region, amplitude }
    }

    /// `tau_m * u` with the normalized bump of radius `1/m`.
    pub fn mollify(&self, m: u32) -> Result<Self> {
        Ok(Field::Mollified(Arc::new(Mollified::new(self.clone(), m)?)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Field::Zero { dim } | Field::Gaussian { dim, .. } | Field::Bump { dim } => *dim,
            Field::ModulatedGaussian { wave, .. } => wave.len(),
            Field::Indicator { region, .. } => region.dim(),
            Field::Mollified(m) => m.inner().dim(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Field::Indicator { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Zero { .. } => true,
            Field::Indicator { region, amplitude } => *amplitude == 0.0 || region.volume() == 0.0,
            Field::Mollified(m) => m.inner().is_zero(),
            _ => false,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<Complex64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_unchecked(x))
    }

    #[inline]
    pub fn value_unchecked(&self, x: &[f64]) -> Complex64 {
        match self {
            Field::Zero { .. } => Complex64::new(0.0, 0.0),
            Field::Gaussian { cutoff, .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= cutoff * cutoff {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-0.5 * r2).exp(), 0.0)
                }
            }
            Field::ModulatedGaussian { wave, cutoff } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= cutoff * cutoff {
                    return Complex64::new(0.0, 0.0);
                }
                let phase: f64 = wave.iter().zip(x).map(|(k, v)| k * v).sum();
                Complex64::from_polar((-0.5 * r2).exp(), phase)
            }
            Field::Bump { .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((1.0 - 1.0 / (1.0 - r2)).exp(), 0.0)
                }
            }
            Field::Indicator { region, amplitude } => {
                if region.contains(x) {
                    Complex64::new(*amplitude, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Field::Mollified(m) => m.value(x),
        }
    }

    /// Analytic gradient; indicator fields have none.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), x.len())?;
        let mut g = vec![Complex64::new(0.0, 0.0); self.dim()];
        if self.gradient_into(x, &mut g) {
            Ok(g)
        } else {
            Err(Error::Unsupported("indicator fields have no pointwise gradient".into()))
        }
    }

    /// Writes the gradient into `out`; returns false for indicator fields.
    pub fn gradient_into(&self, x: &[f64], out: &mut [Complex64]) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Field::Zero { .. } => out.iter_mut().for_each(|g| *g = zero),
            Field::Gaussian { .. } => {
                let u = self.value_unchecked(x);
                out.iter_mut().zip(x).for_each(|(g, xi)| *g = -u * xi);
            }
            Field::ModulatedGaussian { wave, .. } => {
                let u = self.value_unchecked(x);
                out.iter_mut()
                    .zip(x.iter().zip(wave))
                    .for_each(|(g, (xi, k))| *g = u * Complex64::new(-xi, *k));
            }
            Field::Bump { .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 >= 1.0 {
                    out.iter_mut().for_each(|g| *g = zero);
                } else {
                    let u = (1.0 - 1.0 / (1.0 - r2)).exp();
                    let f = -2.0 * u / ((1.0 - r2) * (1.0 - r2));
                    out.iter_mut().zip(x).for_each(|(g, xi)| *g = Complex64::new(f * xi, 0.0));
                }
            }
            Field::Indicator { .. } => return false,
            Field::Mollified(m) => m.gradient_into(x, out),
        }
        true
    }

    /// Box outside which the field vanishes; `None` for the zero field.
    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        match self {
            Field::Zero { .. } => None,
            Field::Gaussian { cutoff, .. } | Field::ModulatedGaussian { cutoff, .. } => {
                Some((vec![-cutoff; d], vec![*cutoff; d]))
            }
            Field::Bump { .. } => Some((vec![-1.0; d], vec![1.0; d])),
            Field::Indicator { region, amplitude } => {
                if *amplitude == 0.0 || region.volume() == 0.0 {
                    None
                } else {
                    Some(region.bounding_box())
                }
            }
            Field::Mollified(m) => m.support_box(),
        }
    }

    /// Radius of the smallest centered ball containing the support.
    pub fn support_radius(&self) -> f64 {
        match self {
            Field::Zero { .. } => 0.0,
            Field::Gaussian { cutoff, .. } | Field::ModulatedGaussian { cutoff, .. } => *cutoff,
            Field::Bump { .. } => 1.0,
            Field::Indicator { region, .. } => region
                .vertices()
                .iter()
                .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            Field::Mollified(m) => m.inner().support_radius() + 1.0 / m.m() as f64,
        }
    }

    /// Per-axis coordinates where the field or its gradient is not smooth.
    pub fn axis_breaks(&self) -> Vec<Vec<f64>> {
        match self {
            Field::Indicator { region, .. } => region.axis_breaks(),
            Field::Mollified(m) => m.axis_breaks(),
            _ => vec![Vec::new(); self.dim()],
        }
    }

    /// The region of an indicator field.
    pub fn region(&self) -> Option<&Region> {
        match self {
            Field::Indicator { region, .. } => Some(region),
            _ => None,
        }
    }

    /// Typical length over which the field varies, used to size radial panels.
    pub fn length_scale(&self) -> f64 {
        match self {
            Field::ModulatedGaussian { wave, .. } => {
                let k = wave.iter().map(|v| v * v).sum::<f64>().sqrt();
                1.0 / (1.0 + k)
            }
            Field::Bump { .. } => 0.25,
            Field::Mollified(m) => (0.5 / m.m() as f64).min(m.inner().length_scale()),
            _ => 1.0,
        }
    }
}

pub(crate) fn validate_field(u: &Field) -> Result<()> {
    let ok = match u {
        Field::Zero { dim } | Field::Bump { dim } => *dim > 0,
        Field::Gaussian { dim, cutoff } => *dim > 0 && *cutoff > 0.0,
        Field::ModulatedGaussian { wave, cutoff } => {
            !wave.is_empty() && wave.iter().all(|k| k.is_finite()) && *cutoff > 0.0
        }
        Field::Indicator { amplitude, .. } => amplitude.is_finite(),
        Field::Mollified(_) => true,
    };
    if ok {
        Ok(())
    } else {
        Err(invalid("field parameters out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn fields() -> Vec<Field> {
        vec![
            Field::gaussian(2),
            Field::gaussian(3),
            Field::modulated_gaussian(vec![1.0, -0.5]),
            Field::bump(2),
            Field::modulated_gaussian(vec![0.5, 1.0]).mollify(4).unwrap(),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut r = rng::stream(11, 0);
        for u in fields() {
            let d = u.dim();
            for _ in 0..50 {
                let x: Vec<f64> = (0..d).map(|_| r.random::<f64>() * 1.4 - 0.5).collect();
                let g = u.gradient(&x).unwrap();
                let scale = g.iter().map(|c| c.norm()).fold(1.0, f64::max);
                // Order-2 convergence: the error drops ~4x when h halves.
                let fd = |h: f64, j: usize| {
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[j] += h;
                    b[j] -= h;
                    (u.value(&a).unwrap() - u.value(&b).unwrap()) / (2.0 * h)
                };
                for j in 0..d {
                    let e1 = (fd(1e-3, j) - g[j]).norm();
                    assert!(e1 < 1e-4 * scale, "{u:?} at {x:?}: {e1}");
                }
            }
        }
    }

    #[test]
    fn indicator_has_no_gradient() {
        let u = Field::indicator(Region::aligned_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(u.gradient(&[0.5, 0.5]).is_err());
        assert!(!u.is_smooth());
    }

    #[test]
    fn dimension_is_checked() {
        assert!(Field::gaussian(2).value(&[0.0; 3]).is_err());
    }
}
