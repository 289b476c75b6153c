//! Python module `anisobbm`: convex bodies, moment norms, fields and the
//! nonlocal functionals, plus limit studies driven by JSON documents.

use anisobbm_core as ab;
use anisobbm_core::functionals::{FunctionalKind, IntegrationBudget, MollifierKind};
use anisobbm_core::sphere::SphereRule;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: ab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "ConvexBody", module = "anisobbm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConvexBody(ab::ConvexBody);

#[pymethods]
impl PyConvexBody {
    #[staticmethod]
    #[pyo3(signature = (dim, radius = 1.0))]
    fn ball(dim: usize, radius: f64) -> PyResult<Self> {
        ab::ConvexBody::ball(dim, radius).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (dim, half = 1.0))]
    fn cube(dim: usize, half: f64) -> PyResult<Self> {
        ab::ConvexBody::cube(dim, half).map(Self).map_err(err)
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    #[staticmethod]
    fn ellipse(axes: Vec<f64>) -> PyResult<Self> {
        ab::ConvexBody::ellipsoid_axes(&axes).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (sides, inradius = 1.0))]
    fn regular_polygon(sides: usize, inradius: f64) -> PyResult<Self> {
        ab::ConvexBody::regular_polygon(sides, inradius).map(Self).map_err(err)
    }

    #[staticmethod]
    fn lq_ball(dim: usize, q: f64) -> PyResult<Self> {
        ab::ConvexBody::lq_ball(dim, q).map(Self).map_err(err)
    }

    /// Symmetric polytope `{x : |n_i . x| <= b_i}`.
    #[staticmethod]
    fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> PyResult<Self> {
        ab::ConvexBody::polytope(normals, offsets).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn volume(&self) -> f64 {
        self.0.volume()
    }

    fn gauge(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.gauge(&x).map_err(err)
    }

    fn contains(&self, x: Vec<f64>) -> PyResult<bool> {
        self.0.contains(&x).map_err(err)
    }

    #[pyo3(signature = (count, seed = 0))]
    fn sample_uniform(&self, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        self.0.sample_uniform(count, seed).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ConvexBody({:?})", self.0.shape())
    }
}

#[pyclass(name = "Field", module = "anisobbm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(ab::fields::Field);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zero(dim: usize) -> Self {
        Self(ab::fields::Field::zero(dim))
    }

    /// `exp(-|x|^2 / 2)`.
    #[staticmethod]
    fn gaussian(dim: usize) -> Self {
        Self(ab::fields::Field::gaussian(dim))
    }

    /// `exp(i k.x) exp(-|x|^2 / 2)`.
    #[staticmethod]
    fn modulated_gaussian(wave: Vec<f64>) -> Self {
        Self(ab::fields::Field::modulated_gaussian(wave))
    }

    #[staticmethod]
    fn bump(dim: usize) -> Self {
        Self(ab::fields::Field::bump(dim))
    }

    #[staticmethod]
    #[pyo3(signature = (lo, hi, amplitude = 1.0))]
    fn indicator_box(lo: Vec<f64>, hi: Vec<f64>, amplitude: f64) -> PyResult<Self> {
        let region = ab::fields::Region::aligned_box(&lo, &hi).map_err(err)?;
        Ok(Self(ab::fields::Field::indicator(region, amplitude)))
    }

    fn mollify(&self, m: u32) -> PyResult<Self> {
        self.0.mollify(m).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<Complex64> {
        self.0.value(&x).map_err(err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<Complex64>> {
        self.0.gradient(&x).map_err(err)
    }
}

#[pyclass(name = "Potential", module = "anisobbm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPotential(ab::fields::Potential);

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn zero(dim: usize) -> Self {
        Self(ab::fields::Potential::zero(dim))
    }

    #[staticmethod]
    fn constant(a: Vec<f64>) -> PyResult<Self> {
        ab::fields::Potential::constant(a).map(Self).map_err(err)
    }

    /// `A(x) = M x` with `M` row-major.
    #[staticmethod]
    fn linear(dim: usize, matrix: Vec<f64>) -> PyResult<Self> {
        ab::fields::Potential::linear(dim, matrix).map(Self).map_err(err)
    }

    /// `A(x) = (b / 2) (-x_2, x_1)` in the plane.
    #[staticmethod]
    fn rotational(b: f64) -> PyResult<Self> {
        ab::fields::Potential::rotational(b).map(Self).map_err(err)
    }

    fn evaluate(&self, x: Vec<f64>) -> Vec<f64> {
        self.0.evaluate(&x)
    }
}

fn potential_or_zero(a: Option<&PyPotential>, dim: usize) -> ab::fields::Potential {
    a.map_or_else(|| ab::fields::Potential::zero(dim), |a| a.0.clone())
}

#[pyfunction]
fn mixed_modulus(z: Vec<Complex64>, p: f64) -> PyResult<f64> {
    ab::norms::mixed_modulus(&z, p).map_err(err)
}

#[pyfunction]
fn kpn_constant(p: f64, n: usize) -> PyResult<f64> {
    ab::norms::kpn_constant(p, n).map_err(err)
}

/// `(value, error)` of the polar moment-body norm by the quadrature route,
/// or by Monte Carlo over the body when `samples` is given.
#[pyfunction]
#[pyo3(signature = (body, v, p, samples = None, seed = 0))]
fn moment_norm(body: &PyConvexBody, v: Vec<Complex64>, p: f64, samples: Option<usize>, seed: u64) -> PyResult<(f64, f64)> {
    let method = match samples {
        Some(samples) => ab::MomentMethod::BodyMonteCarlo { samples, seed },
        None => ab::MomentMethod::SphereQuadrature { nodes: 2048 },
    };
    let ev = ab::MomentNormEvaluator::new(body.0.clone(), p, method).map_err(err)?;
    let e = ev.moment_norm(&v).map_err(err)?;
    Ok((e.value, e.error))
}

/// The sphere representation of the same norm.
#[pyfunction]
#[pyo3(signature = (body, v, p, nodes = 4096))]
fn moment_norm_sphere(body: &PyConvexBody, v: Vec<Complex64>, p: f64, nodes: usize) -> PyResult<(f64, f64)> {
    let ev = ab::MomentNormEvaluator::quadrature(body.0.clone(), p).map_err(err)?;
    let rule = SphereRule::for_body(&body.0, nodes, 0);
    let e = ev.moment_norm_sphere(&v, &rule).map_err(err)?;
    Ok((e.value, e.error))
}

#[pyfunction]
#[pyo3(signature = (body, w, nodes = 256))]
fn dual_norm_z1(body: &PyConvexBody, w: Vec<f64>, nodes: usize) -> PyResult<f64> {
    let rule = SphereRule::for_body(&body.0, nodes, 0);
    ab::norms::dual_norm_z1_real(&body.0, &w, &rule).map_err(err)
}

fn functional(u: &PyField, body: &PyConvexBody, p: f64, kind: FunctionalKind, a: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    let spec = ab::FunctionalSpec::new(kind, p, body.0.clone(), potential_or_zero(a, u.0.dim())).map_err(err)?;
    let e = ab::functionals::evaluate(&u.0, &spec, &IntegrationBudget::for_field(&u.0)).map_err(err)?;
    Ok((e.value, e.error))
}

/// Raw anisotropic Gagliardo double integral (without the `1 - s` factor).
#[pyfunction]
#[pyo3(signature = (u, body, p, s, potential = None))]
fn gagliardo(u: &PyField, body: &PyConvexBody, p: f64, s: f64, potential: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    functional(u, body, p, FunctionalKind::Gagliardo { s }, potential)
}

#[pyfunction]
#[pyo3(signature = (u, body, p, delta, potential = None))]
fn nguyen(u: &PyField, body: &PyConvexBody, p: f64, delta: f64, potential: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    functional(u, body, p, FunctionalKind::Nguyen { delta }, potential)
}

/// BBM functional with the shrinking uniform mollifier at index `n`.
#[pyfunction]
#[pyo3(signature = (u, body, p, n, potential = None))]
fn bbm_uniform(u: &PyField, body: &PyConvexBody, p: f64, n: usize, potential: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    functional(u, body, p, FunctionalKind::Bbm { mollifier: MollifierKind::ShrinkingUniform, n }, potential)
}

#[pyfunction]
#[pyo3(signature = (u, body, p, potential = None))]
fn local_energy(u: &PyField, body: &PyConvexBody, p: f64, potential: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    let grid = IntegrationBudget::for_field(&u.0).outer;
    let e = ab::fields::local_energy(&u.0, &potential_or_zero(potential, u.0.dim()), &body.0, p, &grid).map_err(err)?;
    Ok((e.value, e.error))
}

#[pyfunction]
#[pyo3(signature = (u, body, potential = None))]
fn total_variation(u: &PyField, body: &PyConvexBody, potential: Option<&PyPotential>) -> PyResult<(f64, f64)> {
    let grid = IntegrationBudget::for_field(&u.0).outer;
    let e = ab::fields::total_variation_smooth(&u.0, &potential_or_zero(potential, u.0.dim()), &body.0, &grid)
        .map_err(err)?;
    Ok((e.value, e.error))
}

#[pyfunction]
fn box_perimeter(lo: Vec<f64>, hi: Vec<f64>, body: &PyConvexBody) -> PyResult<f64> {
    let region = ab::fields::Region::aligned_box(&lo, &hi).map_err(err)?;
    ab::fields::anisotropic_perimeter(&region, &body.0).map_err(err)
}

/// Runs a study given as JSON (the `study` object of a report) and returns
/// the report as JSON.
#[pyfunction]
fn run_study(py: Python<'_>, study_json: &str) -> PyResult<String> {
    let study: ab::limit::Study =
        serde_json::from_str(study_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = py.detach(|| ab::limit::run_study(&study)).map_err(err)?;
    Ok(report.to_json())
}

/// `(limit, limit_error, rate)` of the fit `value ~ C + a t^b`.
#[pyfunction]
fn extrapolate(points: Vec<(f64, f64, f64)>) -> PyResult<(f64, f64, Option<f64>)> {
    let ex = ab::limit::extrapolate(&points).map_err(err)?;
    Ok((ex.limit, ex.limit_error, ex.rate))
}

#[pymodule]
fn anisobbm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConvexBody>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyPotential>()?;
    m.add_function(wrap_pyfunction!(mixed_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(kpn_constant, m)?)?;
    m.add_function(wrap_pyfunction!(moment_norm, m)?)?;
    m.add_function(wrap_pyfunction!(moment_norm_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(dual_norm_z1, m)?)?;
    m.add_function(wrap_pyfunction!(gagliardo, m)?)?;
    m.add_function(wrap_pyfunction!(nguyen, m)?)?;
    m.add_function(wrap_pyfunction!(bbm_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(local_energy, m)?)?;
    m.add_function(wrap_pyfunction!(total_variation, m)?)?;
    m.add_function(wrap_pyfunction!(box_perimeter, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(extrapolate, m)?)?;
    Ok(())
}
