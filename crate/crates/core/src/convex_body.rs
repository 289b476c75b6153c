//! Origin-symmetric convex bodies and their gauges.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

use crate::error::{check_dim, invalid, Error, Result};
use crate::polytope::{dot, HPolytope};
use crate::rng;

/// Rejection attempts allowed per accepted sample.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    EuclideanBall { radius: f64 },
    /// `{x : x.Mx <= 1}`, `matrix` row-major N x N.
    Ellipsoid { matrix: Vec<f64> },
    SymmetricPolytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// Unit ball of the l_q norm, `q = inf` allowed.
    LqBall { q: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    r_in: f64,
    r_out: f64,
    volume: f64,
    extents: Vec<f64>,
    vertices: Vec<Vec<f64>>,
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI.powf(n / 2.0) / gamma(n / 2.0 + 1.0)
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("ball radius must be positive"));
        }
        Ok(Self {
            dim,
            shape: Shape::EuclideanBall { radius },
            r_in: radius,
            r_out: radius,
            volume: unit_ball_volume(dim) * radius.powi(dim as i32),
            extents: vec![radius; dim],
            vertices: Vec::new(),
        })
    }

    /// `[-half, half]^N`.
    pub fn cube(dim: usize, half: f64) -> Result<Self> {
        if !(half > 0.0 && half.is_finite()) {
            return Err(invalid("cube half-width must be positive"));
        }
        let mut normals = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            for s in [1.0, -1.0] {
                let mut n = vec![0.0; dim];
                n[j] = s;
                normals.push(n);
            }
        }
        Self::polytope(normals, vec![half; 2 * dim])
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid_axes(axes: &[f64]) -> Result<Self> {
        let n = axes.len();
        if axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("ellipsoid semi-axes must be positive"));
        }
        let mut m = vec![0.0; n * n];
        for (j, a) in axes.iter().enumerate() {
            m[j * n + j] = 1.0 / (a * a);
        }
        Self::ellipsoid(n, m)
    }

    pub fn ellipsoid(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim {
            return Err(invalid("ellipsoid matrix must be N x N"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ellipsoid matrix must be finite"));
        }
        let m = DMatrix::from_row_slice(dim, dim, &matrix);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(invalid("ellipsoid matrix must be symmetric"));
        }
        let eig = SymmetricEigen::new(m.clone());
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if !(lmin > 0.0) {
            return Err(invalid("ellipsoid matrix must be positive definite"));
        }
        let inv = m
            .try_inverse()
            .ok_or_else(|| invalid("ellipsoid matrix is singular"))?;
        let det: f64 = eig.eigenvalues.iter().product();
        Ok(Self {
            dim,
            shape: Shape::Ellipsoid { matrix },
            r_in: 1.0 / lmax.sqrt(),
            r_out: 1.0 / lmin.sqrt(),
            volume: unit_ball_volume(dim) / det.sqrt(),
            extents: (0..dim).map(|j| inv[(j, j)].sqrt()).collect(),
            vertices: Vec::new(),
        })
    }

    /// Symmetric polytope `{x : n_i.x <= c_i}`; facets must come in `±` pairs
    /// with equal offsets. Normals are normalized on construction.
    pub fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if offsets.iter().any(|c| !(*c > 0.0)) {
            return Err(invalid("polytope offsets must be positive"));
        }
        let hp = HPolytope::new(normals, offsets, false)?;
        for (n, c) in hp.normals.iter().zip(&hp.offsets) {
            let paired = hp.normals.iter().zip(&hp.offsets).any(|(m, d)| {
                n.iter().zip(m).all(|(a, b)| (a + b).abs() < 1e-9) && (c - d).abs() < 1e-9 * c
            });
            if !paired {
                return Err(invalid("polytope is not origin-symmetric: facets must come in ± pairs"));
            }
        }
        let dim = hp.dim;
        let r_in = hp.offsets.iter().copied().fold(f64::INFINITY, f64::min);
        let r_out = hp
            .vertices
            .iter()
            .map(|v| dot(v, v).sqrt())
            .fold(0.0, f64::max);
        let extents = (0..dim)
            .map(|j| hp.vertices.iter().map(|v| v[j].abs()).fold(0.0, f64::max))
            .collect();
        Ok(Self {
            dim,
            shape: Shape::SymmetricPolytope {
                normals: hp.normals.clone(),
                offsets: hp.offsets.clone(),
            },
            r_in,
            r_out,
            volume: hp.volume,
            extents,
            vertices: hp.vertices,
        })
    }

    /// Regular polygon in the plane with `sides` (even) sides and the given
    /// inradius; one facet normal is `e_1`.
    pub fn regular_polygon(sides: usize, inradius: f64) -> Result<Self> {
        if sides < 4 || !sides.is_multiple_of(2) {
            return Err(invalid("regular polygon needs an even number of sides >= 4"));
        }
        let normals = (0..sides)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Self::polytope(normals, vec![inradius; sides])
    }

    pub fn lq_ball(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(q >= 1.0) {
            return Err(invalid("l_q exponent must be in [1, inf]"));
        }
        let n = dim as f64;
        let e = if q.is_infinite() { 0.5 } else { 0.5 - 1.0 / q };
        let (r_in, r_out) = if e >= 0.0 { (1.0, n.powf(e)) } else { (n.powf(e), 1.0) };
        let volume = if q.is_infinite() {
            2f64.powi(dim as i32)
        } else {
            (2.0 * gamma(1.0 + 1.0 / q)).powi(dim as i32) / gamma(1.0 + n / q)
        };
        Ok(Self {
            dim,
            shape: Shape::LqBall { q },
            r_in,
            r_out,
            volume,
            extents: vec![1.0; dim],
            vertices: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// `(r_in, r_out)`: largest inscribed and smallest circumscribed centered balls.
    pub fn bounding_radii(&self) -> (f64, f64) {
        (self.r_in, self.r_out)
    }

    /// Half-width of the body along each coordinate axis.
    pub fn axis_extents(&self) -> &[f64] {
        &self.extents
    }

    /// Polytope vertices (empty for smooth shapes).
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.gauge_unchecked(x))
    }

    /// Gauge without the dimension check, for inner loops.
    pub fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::EuclideanBall { radius } => dot(x, x).sqrt() / radius,
            Shape::Ellipsoid { matrix } => {
                let n = self.dim;
                let mut acc = 0.0;
                for i in 0..n {
                    let row = &matrix[i * n..(i + 1) * n];
                    acc += x[i] * dot(row, x);
                }
                acc.max(0.0).sqrt()
            }
            Shape::SymmetricPolytope { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .map(|(n, c)| dot(n, x) / c)
                .fold(0.0, f64::max),
            Shape::LqBall { q } => lq_norm(x, *q),
        }
    }

    /// Exact membership test; the boundary is inside.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.shape {
            Shape::EuclideanBall { radius } => dot(x, x) <= radius * radius,
            Shape::Ellipsoid { .. } => {
                let g = self.gauge_unchecked(x);
                g * g <= 1.0
            }
            Shape::SymmetricPolytope { normals, offsets } => {
                normals.iter().zip(offsets).all(|(n, &c)| dot(n, x) <= c)
            }
            Shape::LqBall { q } => {
                if q.is_infinite() {
                    x.iter().all(|v| v.abs() <= 1.0)
                } else {
                    x.iter().map(|v| v.abs().powf(*q)).sum::<f64>() <= 1.0
                }
            }
        })
    }

    /// Uniform samples by rejection from the circumscribed ball.
    pub fn sample_uniform(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.sample_uniform_stream(count, seed, 0)
    }

    pub fn sample_uniform_stream(&self, count: usize, seed: u64, stream: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        let mut rng = rng::stream(seed, stream);
        let mut out = Vec::with_capacity(count);
        let mut x = vec![0.0; self.dim];
        for _ in 0..count {
            let mut accepted = false;
            for _ in 0..MAX_REJECTIONS {
                ball_point(&mut rng, self.r_out, &mut x);
                if self.contains(&x)? {
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                return Err(Error::SamplingExhausted { attempts: MAX_REJECTIONS });
            }
            out.push(x.clone());
        }
        Ok(out)
    }

    /// Polar angles (in `[0, 2pi)`) where the planar gauge restricted to the
    /// circle fails to be smooth. Empty outside N = 2.
    pub fn kink_angles(&self) -> Vec<f64> {
        if self.dim != 2 {
            return Vec::new();
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut out: Vec<f64> = match &self.shape {
            Shape::SymmetricPolytope { .. } => self
                .vertices
                .iter()
                .map(|v| v[1].atan2(v[0]).rem_euclid(two_pi))
                .collect(),
            Shape::LqBall { q } if *q != 2.0 => {
                (0..8).map(|k| k as f64 * std::f64::consts::FRAC_PI_4).collect()
            }
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out
    }
}

fn lq_norm(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if q == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

fn ball_point(rng: &mut impl Rng, radius: f64, x: &mut [f64]) {
    loop {
        let mut r2 = 0.0;
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
            r2 += *v * *v;
        }
        if r2 > 0.0 {
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / x.len() as f64) / r2.sqrt();
            x.iter_mut().for_each(|v| *v *= scale);
            return;
        }
    }
}
