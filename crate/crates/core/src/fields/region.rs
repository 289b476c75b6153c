use crate::error::{invalid, Result};
use crate::polytope::{dot, HPolytope};

/// Bounded polytope `{x : n_i.x <= c_i}` used as the support of indicator
/// fields. Unlike convex bodies it need not contain the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    poly: HPolytope,
    /// Vertices on each facet, aligned with the facet list.
    facet_vertices: Vec<Vec<Vec<f64>>>,
}

impl Region {
    pub fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let poly = HPolytope::new(normals, offsets, true)?;
        let facet_vertices = poly
            .normals
            .iter()
            .zip(&poly.offsets)
            .map(|(n, &c)| {
                poly.vertices
                    .iter()
                    .filter(|v| (dot(n, v) - c).abs() <= 1e-9 * c.abs().max(1.0))
                    .cloned()
                    .collect()
            })
            .collect();
        Ok(Self { poly, facet_vertices })
    }

    /// Axis-aligned box `[lo, hi]`; `lo == hi` along an axis gives a flat box.
    pub fn aligned_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box corners must have the same positive dimension"));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("box needs finite lo <= hi"));
        }
        let d = lo.len();
        let mut normals = Vec::with_capacity(2 * d);
        let mut offsets = Vec::with_capacity(2 * d);
        for j in 0..d {
            let mut n = vec![0.0; d];
            n[j] = 1.0;
            normals.push(n.clone());
            offsets.push(hi[j]);
            n[j] = -1.0;
            normals.push(n);
            offsets.push(-lo[j]);
        }
        Self::polytope(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.poly.dim
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.poly.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.poly.offsets
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.poly.vertices
    }

    pub fn facet_measures(&self) -> &[f64] {
        &self.poly.facet_measures
    }

    pub fn facet_vertices(&self, i: usize) -> &[Vec<f64>] {
        &self.facet_vertices[i]
    }

    pub fn volume(&self) -> f64 {
        self.poly.volume
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.poly.contains(x)
    }

    /// Parameters `(t0, t1)` with `x + t d` inside the region.
    pub fn line_interval(&self, x: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        self.poly.line_interval(x, d)
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for v in self.vertices() {
            for j in 0..d {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        }
        (lo, hi)
    }

    /// Distinct vertex coordinates along each axis, the natural panel edges
    /// for integrating functions that jump on the boundary.
    pub fn axis_breaks(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| {
                let mut b: Vec<f64> = self.vertices().iter().map(|v| v[j]).collect();
                b.sort_by(f64::total_cmp);
                b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                b
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let r = Region::aligned_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.volume(), 1.0);
        assert!((r.facet_measures().iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(r.contains(&[0.5, 1.0]));
        assert!(!r.contains(&[0.5, 1.01]));
        assert_eq!(r.facet_vertices(0).len(), 2);
        assert_eq!(r.axis_breaks(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn flat_box_has_zero_volume() {
        let r = Region::aligned_box(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(r.volume(), 0.0);
    }

    #[test]
    fn half_plane_is_rejected() {
        assert!(Region::polytope(vec![vec![1.0, 0.0]], vec![1.0]).is_err());
    }
}
