//! H-representation polytopes: vertices, facet measures and volume.
//!
//! Only intended for the small dimensions used here (N <= 4); vertices are
//! found by brute force over N-subsets of the facet hyperplanes.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    pub dim: usize,
    /// Unit outward normals.
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
    /// (N-1)-dimensional measure of each facet, aligned with `normals`.
    pub facet_measures: Vec<f64>,
    pub volume: f64,
}

impl HPolytope {
    /// Builds `{x : n_i . x <= c_i}`. Normals are normalized here; the set must
    /// be bounded and have nonempty interior unless `allow_flat` is set, in
    /// which case a zero-volume set is accepted.
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>, allow_flat: bool) -> Result<Self> {
        if normals.is_empty() {
            return Err(invalid("polytope needs at least one facet"));
        }
        if normals.len() != offsets.len() {
            return Err(invalid("normals and offsets differ in length"));
        }
        let dim = normals[0].len();
        if dim == 0 {
            return Err(invalid("polytope dimension must be positive"));
        }
        let mut unit = Vec::with_capacity(normals.len());
        let mut offs = Vec::with_capacity(normals.len());
        for (n, &c) in normals.iter().zip(&offsets) {
            if n.len() != dim {
                return Err(invalid("normals have inconsistent dimensions"));
            }
            let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(len > 0.0) || !len.is_finite() || !c.is_finite() {
                return Err(invalid("facet normals must be finite and nonzero"));
            }
            unit.push(n.iter().map(|v| v / len).collect::<Vec<_>>());
            offs.push(c / len);
        }
        if rank(&unit) < dim {
            return Err(invalid("polytope is unbounded: normals do not span the space"));
        }
        if !positively_spanning(&unit) {
            return Err(invalid("polytope is unbounded: normals do not positively span"));
        }
        let vertices = enumerate_vertices(&unit, &offs);
        if vertices.is_empty() {
            return Err(invalid("polytope is empty"));
        }
        let interior = vertices.len() > dim && affine_rank(&vertices) == dim;
        if !interior && !allow_flat {
            return Err(invalid("polytope has empty interior"));
        }
        let (facet_measures, volume) = if interior {
            let facets: Vec<Vec<Vec<f64>>> = (0..unit.len())
                .map(|i| on_plane(&vertices, &unit[i], offs[i]))
                .collect();
            let fm: Vec<f64> = facets
                .iter()
                .map(|f| {
                    if f.len() >= dim && affine_rank(f) == dim - 1 {
                        face_measure(f, dim - 1, &unit, &offs)
                    } else {
                        0.0
                    }
                })
                .collect();
            let c = centroid(&vertices);
            let vol = fm
                .iter()
                .zip(unit.iter().zip(&offs))
                .map(|(a, (n, o))| a * (o - dot(n, &c)) / dim as f64)
                .sum();
            (fm, vol)
        } else {
            (vec![0.0; unit.len()], 0.0)
        };
        Ok(Self {
            dim,
            normals: unit,
            offsets: offs,
            vertices,
            facet_measures,
            volume,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(n, &c)| dot(n, x) <= c)
    }

    /// Parameter interval `(t0, t1)` of the line `x + t d` inside the polytope.
    pub fn line_interval(&self, x: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (n, &c) in self.normals.iter().zip(&self.offsets) {
            let nd = dot(n, d);
            let slack = c - dot(n, x);
            if nd.abs() < 1e-300 {
                if slack < 0.0 {
                    return None;
                }
            } else if nd > 0.0 {
                hi = hi.min(slack / nd);
            } else {
                lo = lo.max(slack / nd);
            }
        }
        (lo < hi).then_some((lo, hi))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|v| *v /= points.len() as f64);
    c
}

fn rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    m.svd(false, false).rank(1e-10)
}

fn affine_rank(points: &[Vec<f64>]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let scale = diffs
        .iter()
        .flat_map(|d| d.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let scaled: Vec<Vec<f64>> = diffs
        .iter()
        .map(|d| d.iter().map(|v| v / scale).collect())
        .collect();
    rank(&scaled)
}

/// The recession cone `{d : n_i . d <= 0}` is trivial. When the normals span,
/// any nontrivial cone has an extreme ray cut out by `dim - 1` of the
/// constraints, so those candidate rays are all that need checking.
fn positively_spanning(normals: &[Vec<f64>]) -> bool {
    let dim = normals[0].len();
    let in_cone = |d: &[f64]| normals.iter().all(|m| dot(m, d) <= 1e-12);
    if dim == 1 {
        return !in_cone(&[1.0]) && !in_cone(&[-1.0]);
    }
    let mut idx: Vec<usize> = (0..dim - 1).collect();
    loop {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| normals[i].clone()).collect();
        if let Some(d) = null_direction(&rows, dim) {
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            if in_cone(&d) || in_cone(&neg) {
                return false;
            }
        }
        if !next_combination(&mut idx, normals.len()) {
            break;
        }
    }
    true
}

fn null_direction(rows: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_fn(dim, dim, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let vt = svd.v_t?;
    let s = &svd.singular_values;
    let (k, _) = s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let smax = s.max();
    let nonzero = s.iter().filter(|v| **v > 1e-10 * smax.max(1e-300)).count();
    if nonzero != rows.len() {
        return None;
    }
    Some(vt.row(k).iter().copied().collect())
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn enumerate_vertices(normals: &[Vec<f64>], offsets: &[f64]) -> Vec<Vec<f64>> {
    let dim = normals[0].len();
    let n = normals.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if n < dim {
        return out;
    }
    let scale = offsets.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let a = DMatrix::from_fn(dim, dim, |i, j| normals[idx[i]][j]);
        let b = DVector::from_fn(dim, |i, _| offsets[idx[i]]);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            let feasible = x.iter().all(|v| v.is_finite())
                && normals
                    .iter()
                    .zip(offsets)
                    .all(|(m, &c)| dot(m, &x) <= c + FEAS_TOL * scale);
            let fresh = !out.iter().any(|v| {
                v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= FEAS_TOL * scale)
            });
            if feasible && fresh {
                out.push(x);
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    out
}

fn on_plane(points: &[Vec<f64>], n: &[f64], c: f64) -> Vec<Vec<f64>> {
    let scale = c.abs().max(1.0);
    points
        .iter()
        .filter(|p| (dot(n, p) - c).abs() <= 1e-8 * scale)
        .cloned()
        .collect()
}

/// Orthonormal basis of the span of `vectors`.
fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let scale = vectors
        .iter()
        .map(|v| dot(v, v).sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= proj * bi);
            }
        }
        let len = dot(&w, &w).sqrt();
        if len > 1e-9 * scale {
            basis.push(w.iter().map(|x| x / len).collect());
        }
    }
    basis
}

/// k-dimensional measure of the convex hull of `points`, which lie in a
/// k-dimensional affine subspace, using the ambient facet hyperplanes to
/// identify its faces. Cone decomposition from the vertex centroid.
fn face_measure(points: &[Vec<f64>], k: usize, normals: &[Vec<f64>], offsets: &[f64]) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k == 1 {
        let dirs: Vec<Vec<f64>> = points[1..]
            .iter()
            .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
            .collect();
        let basis = orthonormal_basis(&dirs);
        let Some(e) = basis.first() else { return 0.0 };
        let t: Vec<f64> = points.iter().map(|p| dot(p, e)).collect();
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return hi - lo;
    }
    let c = centroid(points);
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut total = 0.0;
    for (n, &o) in normals.iter().zip(offsets) {
        let ids: Vec<usize> = (0..points.len())
            .filter(|&i| (dot(n, &points[i]) - o).abs() <= 1e-8 * o.abs().max(1.0))
            .collect();
        if ids.len() < k || ids.len() == points.len() || seen.contains(&ids) {
            continue;
        }
        let sub: Vec<Vec<f64>> = ids.iter().map(|&i| points[i].clone()).collect();
        if affine_rank(&sub) != k - 1 {
            continue;
        }
        seen.push(ids);
        let dirs: Vec<Vec<f64>> = sub[1..]
            .iter()
            .map(|p| p.iter().zip(&sub[0]).map(|(a, b)| a - b).collect())
            .collect();
        let basis = orthonormal_basis(&dirs);
        let mut r: Vec<f64> = c.iter().zip(&sub[0]).map(|(a, b)| a - b).collect();
        for b in &basis {
            let proj = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= proj * bi);
        }
        let height = dot(&r, &r).sqrt();
        total += height * face_measure(&sub, k - 1, normals, offsets) / k as f64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(dim: usize, half: f64) -> HPolytope {
        let mut normals = Vec::new();
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut n = vec![0.0; dim];
                n[j] = s;
                normals.push(n);
            }
        }
        HPolytope::new(normals, vec![half; 2 * dim], false).unwrap()
    }

    #[test]
    fn cube_volumes_and_facets() {
        for dim in 1..=4 {
            let p = cube(dim, 1.0);
            assert_eq!(p.vertices.len(), 1 << dim);
            assert!((p.volume - 2f64.powi(dim as i32)).abs() < 1e-10, "dim {dim}");
            for a in &p.facet_measures {
                assert!((a - 2f64.powi(dim as i32 - 1)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cross_polytope_volume() {
        // {|x|+|y|+|z| <= 1} has volume 4/3.
        let mut normals = Vec::new();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    normals.push(vec![sx, sy, sz]);
                }
            }
        }
        let p = HPolytope::new(normals, vec![1.0; 8], false).unwrap();
        assert_eq!(p.vertices.len(), 6);
        assert!((p.volume - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn simplex_off_origin() {
        let p = HPolytope::new(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            vec![-1.0, -1.0, 3.0],
            false,
        )
        .unwrap();
        assert!((p.volume - 0.5).abs() < 1e-12);
        let per: f64 = p.facet_measures.iter().sum();
        assert!((per - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbounded() {
        assert!(HPolytope::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0], false).is_err());
        assert!(HPolytope::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            vec![1.0, 1.0, 1.0],
            false
        )
        .is_err());
    }

    #[test]
    fn flat_region_has_zero_volume() {
        let p = HPolytope::new(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 0.0, 0.0],
            true,
        )
        .unwrap();
        assert_eq!(p.volume, 0.0);
    }

    #[test]
    fn line_interval_through_square() {
        let p = cube(2, 1.0);
        let (a, b) = p.line_interval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((a + 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        assert!(p.line_interval(&[0.0, 3.0], &[1.0, 0.0]).is_none());
    }
}
