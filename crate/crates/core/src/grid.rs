//! Outer integration over x: tensor rules on a box, or Monte Carlo.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimate::Estimate;
use crate::quadrature::{composite_gauss, pairwise_sum, trapezoid};
use crate::rng;
use crate::sphere::mean_and_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterScheme {
    /// Tensor trapezoid rule; spectrally accurate for smooth decaying
    /// integrands.
    Trapezoid { spacing: f64 },
    /// Tensor composite Gauss-Legendre with panel edges on the field's
    /// breakpoints.
    Gauss { panel_width: f64, order: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

/// Resolution level handed to integrands, so they can coarsen their own
/// inner rules together with the outer grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fine,
    Coarse,
}

impl OuterScheme {
    pub fn validate(&self) -> Result<()> {
        match self {
            OuterScheme::Trapezoid { spacing } if !(*spacing > 0.0 && spacing.is_finite()) => {
                Err(invalid("trapezoid spacing must be positive"))
            }
            OuterScheme::Gauss { panel_width, order }
                if !(*panel_width > 0.0 && panel_width.is_finite()) || *order == 0 =>
            {
                Err(invalid("Gauss panels need positive width and order"))
            }
            OuterScheme::MonteCarlo { samples, .. } if *samples < 2 => {
                Err(invalid("Monte Carlo needs at least 2 samples"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, OuterScheme::MonteCarlo { .. })
    }

    fn at_level(&self, level: Level) -> OuterScheme {
        match (self, level) {
            (OuterScheme::Trapezoid { spacing }, Level::Coarse) => {
                OuterScheme::Trapezoid { spacing: 2.0 * spacing }
            }
            (OuterScheme::Gauss { panel_width, order }, Level::Coarse) => OuterScheme::Gauss {
                panel_width: 2.0 * panel_width,
                order: *order,
            },
            _ => self.clone(),
        }
    }

    /// Nodes and weights on the box `[lo, hi]`; `breaks[j]` lists panel edges
    /// along axis j (ignored by the trapezoid and Monte Carlo schemes).
    pub fn grid(&self, lo: &[f64], hi: &[f64], breaks: &[Vec<f64>], level: Level) -> OuterGrid {
        let dim = lo.len();
        match self.at_level(level) {
            OuterScheme::MonteCarlo { samples, seed } => {
                let mut r = rng::stream(seed, 0);
                let mut nodes = Vec::with_capacity(samples * dim);
                for _ in 0..samples {
                    for j in 0..dim {
                        nodes.push(lo[j] + (hi[j] - lo[j]) * r.random::<f64>());
                    }
                }
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                OuterGrid { dim, weights: vec![vol / samples as f64; samples], nodes, volume: vol, random: true }
            }
            scheme => {
                let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
                    .map(|j| {
                        if hi[j] <= lo[j] {
                            return (Vec::new(), Vec::new());
                        }
                        match &scheme {
                            OuterScheme::Trapezoid { spacing } => trapezoid(lo[j], hi[j], *spacing),
                            OuterScheme::Gauss { panel_width, order } => {
                                let b = breaks.get(j).map(Vec::as_slice).unwrap_or(&[]);
                                composite_gauss(lo[j], hi[j], b, *panel_width, *order)
                            }
                            OuterScheme::MonteCarlo { .. } => unreachable!(),
                        }
                    })
                    .collect();
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| (b - a).max(0.0)).product();
                tensor(dim, &axes, vol)
            }
        }
    }
}

fn tensor(dim: usize, axes: &[(Vec<f64>, Vec<f64>)], volume: f64) -> OuterGrid {
    let total: usize = axes.iter().map(|a| a.0.len()).product();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    if total > 0 {
        loop {
            let mut w = 1.0;
            for j in 0..dim {
                nodes.push(axes[j].0[idx[j]]);
                w *= axes[j].1[idx[j]];
            }
            weights.push(w);
            let mut j = dim;
            loop {
                if j == 0 {
                    return OuterGrid { dim, nodes, weights, volume, random: false };
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < axes[j].0.len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
    OuterGrid { dim, nodes, weights, volume, random: false }
}

#[derive(Clone, Debug)]
pub struct OuterGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    volume: f64,
    random: bool,
}

impl OuterGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Integral of `f`, which returns a value and a deterministic error bound
    /// for that value. The reduction order is fixed, so results do not depend
    /// on the number of threads. Monte Carlo grids add their standard error.
    pub fn integrate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64]) -> (f64, f64) + Sync,
    {
        if self.is_empty() {
            return Estimate::ZERO;
        }
        let vals: Vec<(f64, f64)> = (0..self.len()).into_par_iter().map(|i| f(self.node(i))).collect();
        let bound: Vec<f64> = vals.iter().zip(&self.weights).map(|(v, w)| v.1 * w).collect();
        let bound = pairwise_sum(&bound);
        if self.random {
            let raw: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let (mean, se) = mean_and_se(&raw);
            Estimate::new(self.volume * mean, self.volume * se + bound)
        } else {
            let terms: Vec<f64> = vals.iter().zip(&self.weights).map(|(v, w)| v.0 * w).collect();
            Estimate::new(pairwise_sum(&terms), bound)
        }
    }
}

/// Integral over `[lo, hi]` with an error estimate: the difference between
/// the fine and coarse tensor evaluations, or the Monte Carlo standard error.
/// The integrand receives the level so it can coarsen its inner rules too.
pub fn integrate_box<F>(scheme: &OuterScheme, lo: &[f64], hi: &[f64], breaks: &[Vec<f64>], f: F) -> Result<Estimate>
where
    F: Fn(&[f64], Level) -> (f64, f64) + Sync,
{
    scheme.validate()?;
    let fine = scheme.grid(lo, hi, breaks, Level::Fine).integrate(|x| f(x, Level::Fine));
    if scheme.is_random() {
        return Ok(fine);
    }
    let coarse = scheme.grid(lo, hi, breaks, Level::Coarse).integrate(|x| f(x, Level::Coarse));
    Ok(Estimate::new(fine.value, (fine.value - coarse.value).abs() + fine.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral_on_trapezoid_grid() {
        let s = OuterScheme::Trapezoid { spacing: 0.5 };
        let e = integrate_box(&s, &[-8.6, -8.6], &[8.6, 8.6], &[], |x, _| ((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap();
        assert!((e.value - std::f64::consts::PI).abs() < 1e-12, "{e:?}");
        assert!(e.error < 1e-3 && e.error >= (e.value - std::f64::consts::PI).abs());
    }

    #[test]
    fn gauss_grid_with_breaks_is_exact_for_kinks() {
        let s = OuterScheme::Gauss { panel_width: 0.5, order: 4 };
        let f = |x: &[f64], _| ((x[0] - 0.3).abs() * (x[1] + 0.1).abs(), 0.0);
        let e = integrate_box(&s, &[-1.0, -1.0], &[1.0, 1.0], &[vec![0.3], vec![-0.1]], f).unwrap();
        let want = (0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7) * (0.5 * 0.9 * 0.9 + 0.5 * 1.1 * 1.1);
        assert!((e.value - want).abs() < 1e-13);
    }

    #[test]
    fn monte_carlo_grid_reports_standard_error() {
        let s = OuterScheme::MonteCarlo { samples: 20_000, seed: 9 };
        let e = integrate_box(&s, &[0.0], &[1.0], &[], |x, _| (x[0] * x[0], 0.0)).unwrap();
        assert!(e.error > 0.0 && (e.value - 1.0 / 3.0).abs() < 4.0 * e.error);
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let s = OuterScheme::Trapezoid { spacing: 0.013 };
        let f = |x: &[f64], _| ((x[0] * 3.1).sin() * (x[1] * 1.7).cos() + 0.1, 0.0);
        let run = |t| {
            rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| {
                integrate_box(&s, &[0.0, 0.0], &[1.0, 1.0], &[], f).unwrap()
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error.to_bits(), b.error.to_bits());
    }
}
