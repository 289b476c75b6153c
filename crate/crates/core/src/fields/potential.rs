use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Magnetic potential `A : R^N -> R^N`.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero { dim: usize },
    Constant { a: Vec<f64> },
    /// `A(x) = B x`, `matrix` row-major N x N.
    Linear { dim: usize, matrix: Vec<f64> },
    /// `A(x) = (b/2)(-x_2, x_1)`, planar only.
    Rotational { b: f64 },
}

impl Potential {
    pub fn zero(dim: usize) -> Self {
        Potential::Zero { dim }
    }

    pub fn constant(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("constant potential needs a finite nonempty vector"));
        }
        Ok(Potential::Constant { a })
    }

    pub fn linear(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim || matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("linear potential needs a finite N x N matrix"));
        }
        Ok(Potential::Linear { dim, matrix })
    }

    pub fn rotational(b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(invalid("rotational strength must be finite"));
        }
        Ok(Potential::Rotational { b })
    }

    pub fn dim(&self) -> usize {
        match self {
            Potential::Zero { dim } | Potential::Linear { dim, .. } => *dim,
            Potential::Constant { a } => a.len(),
            Potential::Rotational { .. } => 2,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero { .. } => true,
            Potential::Constant { a } => a.iter().all(|v| *v == 0.0),
            Potential::Linear { matrix, .. } => matrix.iter().all(|v| *v == 0.0),
            Potential::Rotational { b } => *b == 0.0,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(x, &mut out);
        out
    }

    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Potential::Zero { .. } => out.iter_mut().for_each(|v| *v = 0.0),
            Potential::Constant { a } => out.copy_from_slice(a),
            Potential::Linear { dim, matrix } => {
                for i in 0..*dim {
                    out[i] = (0..*dim).map(|j| matrix[i * dim + j] * x[j]).sum();
                }
            }
            Potential::Rotational { b } => {
                out[0] = -0.5 * b * x[1];
                out[1] = 0.5 * b * x[0];
            }
        }
    }

    /// `d . A(z)` without allocating.
    #[inline]
    pub fn dot_at(&self, d: &[f64], z: &[f64]) -> f64 {
        match self {
            Potential::Zero { .. } => 0.0,
            Potential::Constant { a } => a.iter().zip(d).map(|(x, y)| x * y).sum(),
            Potential::Linear { dim, matrix } => {
                let mut acc = 0.0;
                for i in 0..*dim {
                    let row: f64 = (0..*dim).map(|j| matrix[i * dim + j] * z[j]).sum();
                    acc += d[i] * row;
                }
                acc
            }
            Potential::Rotational { b } => 0.5 * b * (d[1] * z[0] - d[0] * z[1]),
        }
    }

    /// Smallest L with `|A(x) - A(y)| <= L |x - y|`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            Potential::Zero { .. } | Potential::Constant { .. } => 0.0,
            Potential::Linear { dim, matrix } => {
                DMatrix::from_row_slice(*dim, *dim, matrix).singular_values().max()
            }
            Potential::Rotational { b } => 0.5 * b.abs(),
        }
    }
}
