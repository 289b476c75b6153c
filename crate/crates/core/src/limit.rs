//! Parameter schedules, the normalizations of each functional, extrapolation
//! to the limit and the comparison with the local target.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::convex_body::ConvexBody;
use crate::descriptor::{BodyDescriptor, FieldDescriptor, PotentialDescriptor};
use crate::error::{check_dim, invalid, Error, Result};
use crate::fields::{anisotropic_perimeter, local_energy, Field, Potential};
use crate::functionals::{evaluate, FunctionalKind, FunctionalSpec, IntegrationBudget, MollifierKind};
use crate::grid::OuterScheme;

pub const SCHEMA_VERSION: u32 = 1;

/// Condition number above which a fit is considered ill-posed.
pub const CONDITION_LIMIT: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Increasing values in (0, 1); `t = 1 - s`.
    SValues { values: Vec<f64> },
    /// Decreasing positive values; `t = delta`.
    DeltaValues { values: Vec<f64> },
    /// Increasing positive integers; `t = 1/n`.
    NValues { values: Vec<usize> },
}

impl Schedule {
    pub fn default_s() -> Self {
        Schedule::SValues { values: vec![0.80, 0.88, 0.93, 0.96, 0.98, 0.99] }
    }

    pub fn default_delta() -> Self {
        Schedule::DeltaValues { values: vec![0.1, 0.05, 0.02, 0.01, 0.005] }
    }

    pub fn default_n() -> Self {
        Schedule::NValues { values: vec![4, 8, 16, 32, 64] }
    }

    pub fn len(&self) -> usize {
        match self {
            Schedule::SValues { values } | Schedule::DeltaValues { values } => values.len(),
            Schedule::NValues { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn parameter(&self, i: usize) -> f64 {
        match self {
            Schedule::SValues { values } | Schedule::DeltaValues { values } => values[i],
            Schedule::NValues { values } => values[i] as f64,
        }
    }

    /// Distance to the limit: `1 - s`, `delta` or `1/n`.
    pub fn t(&self, i: usize) -> f64 {
        match self {
            Schedule::SValues { values } => 1.0 - values[i],
            Schedule::DeltaValues { values } => values[i],
            Schedule::NValues { values } => 1.0 / values[i] as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.len() < 4 {
            return Err(invalid(format!("schedule needs at least 4 points, got {}", self.len())));
        }
        let ok = match self {
            Schedule::SValues { values } => {
                values.iter().all(|s| *s > 0.0 && *s < 1.0) && values.windows(2).all(|w| w[1] > w[0])
            }
            Schedule::DeltaValues { values } => {
                values.iter().all(|d| *d > 0.0 && d.is_finite()) && values.windows(2).all(|w| w[1] < w[0])
            }
            Schedule::NValues { values } => values.iter().all(|n| *n > 0) && values.windows(2).all(|w| w[1] > w[0]),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("schedule values out of range or not monotone toward the limit"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierChoice {
    Ludwig,
    ShrinkingUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyFunctional {
    Gagliardo,
    Nguyen,
    Bbm { mollifier: MollifierChoice },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    pub functional: StudyFunctional,
    pub p: f64,
    pub body: BodyDescriptor,
    pub field: FieldDescriptor,
    /// Zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDescriptor>,
    pub schedule: Schedule,
    /// Chosen from the field when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<IntegrationBudget>,
    /// Grow Monte Carlo outer samples like `t_0 / t` along the schedule.
    #[serde(default)]
    pub scale_samples: bool,
    pub tolerance: f64,
}

impl Study {
    fn check_schedule(&self) -> Result<()> {
        self.schedule.validate()?;
        let ok = matches!(
            (&self.functional, &self.schedule),
            (StudyFunctional::Gagliardo, Schedule::SValues { .. })
                | (StudyFunctional::Nguyen, Schedule::DeltaValues { .. })
                | (StudyFunctional::Bbm { mollifier: MollifierChoice::Ludwig }, Schedule::SValues { .. })
                | (StudyFunctional::Bbm { mollifier: MollifierChoice::ShrinkingUniform }, Schedule::NValues { .. })
        );
        if !ok {
            return Err(invalid("schedule kind does not match the functional"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance must be a finite nonnegative number"));
        }
        Ok(())
    }

    fn kind_at(&self, i: usize) -> FunctionalKind {
        match (&self.functional, &self.schedule) {
            (StudyFunctional::Gagliardo, Schedule::SValues { values }) => FunctionalKind::Gagliardo { s: values[i] },
            (StudyFunctional::Nguyen, Schedule::DeltaValues { values }) => FunctionalKind::Nguyen { delta: values[i] },
            (StudyFunctional::Bbm { mollifier: MollifierChoice::Ludwig }, Schedule::SValues { values }) => {
                FunctionalKind::Bbm { mollifier: MollifierKind::Ludwig { s_values: values.clone() }, n: i + 1 }
            }
            (StudyFunctional::Bbm { .. }, Schedule::NValues { values }) => {
                FunctionalKind::Bbm { mollifier: MollifierKind::ShrinkingUniform, n: values[i] }
            }
            _ => unreachable!("checked schedule"),
        }
    }

    /// Factor applied to the raw functional: `1 - s` for the Gagliardo
    /// seminorm, 1 otherwise.
    pub fn normalization(&self, i: usize) -> f64 {
        match self.functional {
            StudyFunctional::Gagliardo => self.schedule.t(i),
            _ => 1.0,
        }
    }

    /// Every check `run_study` makes before evaluating anything.
    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    fn build(&self) -> Result<(ConvexBody, Field, Potential)> {
        self.check_schedule()?;
        crate::norms::check_p(self.p)?;
        let body = self.body.build()?;
        let u = self.field.build()?;
        let a = match &self.potential {
            Some(d) => d.build()?,
            None => Potential::zero(u.dim()),
        };
        check_dim(body.dim(), u.dim())?;
        check_dim(body.dim(), a.dim())?;
        if let Some(b) = &self.budget {
            b.validate()?;
        }
        for i in 0..self.schedule.len() {
            let spec = FunctionalSpec::new(self.kind_at(i), self.p, body.clone(), a.clone())?;
            spec.check_field(&u)?;
        }
        if matches!(u, Field::Indicator { .. }) && !u.is_zero() {
            if self.p != 1.0 {
                return Err(Error::Unsupported("no local target for indicator fields with p != 1".into()));
            }
            if !a.is_zero() {
                return Err(Error::Unsupported("perimeter target needs A = 0".into()));
            }
        }
        Ok((body, u, a))
    }

    fn budget_at(&self, base: &IntegrationBudget, i: usize) -> IntegrationBudget {
        let mut b = base.clone();
        if let (true, OuterScheme::MonteCarlo { samples, .. }) = (self.scale_samples, &mut b.outer) {
            let grow = self.schedule.t(0) / self.schedule.t(i);
            *samples = (*samples as f64 * grow).ceil() as usize;
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub parameter: f64,
    pub t: f64,
    /// Normalized value and its error estimate.
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extrapolation {
    pub limit: f64,
    /// Standard deviation of the limit from the fit covariance, inflated by
    /// the reduced chi-square when that exceeds 1.
    pub limit_error: f64,
    /// `None` when the values do not vary beyond their errors.
    pub rate: Option<f64>,
    pub amplitude: f64,
    pub chi2: f64,
    /// Root-mean-square residual of the fitted model.
    pub residual: f64,
    /// The free-rate fit was ill-conditioned and `b = 1` was used instead.
    pub linear_fallback: bool,
    /// Aitken's delta-squared value from the last three points.
    pub aitken: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    LocalEnergy,
    PLocalEnergy,
    Perimeter,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub kind: TargetKind,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    Quadrature,
    ScheduleTruncation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub pass: bool,
    pub gap: f64,
    /// `|C - T| / |T|`, absent in absolute mode.
    pub relative_gap: Option<f64>,
    pub allowed: f64,
    pub tolerance: f64,
    pub fit_uncertainty: f64,
    /// Largest point error estimate.
    pub quadrature_error: f64,
    /// Distance of the last point from the extrapolated limit.
    pub truncation_error: f64,
    pub dominant_error: ErrorSource,
    /// Set for the Nguyen functional at p = 1, where only a lower bound holds.
    pub lower_bound_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub study: Study,
    pub points: Vec<Point>,
    pub extrapolation: Extrapolation,
    pub target: Target,
    pub pass: bool,
    pub diagnostics: Comparison,
}

impl ConvergenceReport {
    /// Recomputes the comparison from the stored values.
    pub fn compare(&self, tolerance: f64) -> Comparison {
        let mut c = compare(&self.extrapolation, self.target.value, tolerance, &self.points);
        c.lower_bound_only = self.diagnostics.lower_bound_only;
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| invalid(format!("report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema version {}", r.schema_version)));
        }
        Ok(r)
    }

    /// `parameter,value,error` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["parameter", "value", "error"]).expect("in-memory write");
        for pt in &self.points {
            w.write_record([pt.parameter.to_string(), pt.value.to_string(), pt.error.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    /// Two space-separated columns: parameter and normalized value.
    pub fn to_plot_data(&self) -> String {
        self.points.iter().map(|pt| format!("{} {}\n", pt.parameter, pt.value)).collect()
    }
}

/// Evaluates the study's functional along its schedule, extrapolates and
/// compares with the local target.
pub fn run_study(study: &Study) -> Result<ConvergenceReport> {
    let (body, u, a) = study.build()?;
    let base = study.budget.clone().unwrap_or_else(|| IntegrationBudget::for_field(&u));
    let target = target(study, &u, &a, &body, &base)?;

    let mut points = Vec::with_capacity(study.schedule.len());
    for i in 0..study.schedule.len() {
        let spec = FunctionalSpec::new(study.kind_at(i), study.p, body.clone(), a.clone())?;
        let est = evaluate(&u, &spec, &study.budget_at(&base, i))?;
        let k = study.normalization(i);
        points.push(Point {
            parameter: study.schedule.parameter(i),
            t: study.schedule.t(i),
            value: k * est.value,
            error: k * est.error,
        });
    }
    let triples: Vec<(f64, f64, f64)> = points.iter().map(|p| (p.t, p.value, p.error)).collect();
    let extrapolation = extrapolate(&triples)?;
    let mut diagnostics = compare(&extrapolation, target.value, study.tolerance, &points);
    diagnostics.lower_bound_only = study.functional == StudyFunctional::Nguyen && study.p == 1.0;
    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        study: study.clone(),
        points,
        extrapolation,
        target,
        pass: diagnostics.pass,
        diagnostics,
    })
}

fn target(
    study: &Study,
    u: &Field,
    a: &Potential,
    body: &ConvexBody,
    budget: &IntegrationBudget,
) -> Result<Target> {
    if u.is_zero() {
        return Ok(Target { kind: TargetKind::Zero, value: 0.0, error: 0.0 });
    }
    if let Field::Indicator { region, amplitude } = u {
        if study.p != 1.0 {
            return Err(Error::Unsupported("no local target for indicator fields with p != 1".into()));
        }
        if !a.is_zero() {
            return Err(Error::Unsupported("perimeter target needs A = 0".into()));
        }
        let per = amplitude.abs() * anisotropic_perimeter(region, body)?;
        return Ok(Target { kind: TargetKind::Perimeter, value: per, error: 0.0 });
    }
    let outer = match &budget.outer {
        OuterScheme::MonteCarlo { .. } => IntegrationBudget::for_field(u).outer,
        o => o.clone(),
    };
    let e = local_energy(u, a, body, study.p, &outer)?;
    Ok(match study.functional {
        StudyFunctional::Bbm { .. } => {
            let t = e.scaled(study.p);
            Target { kind: TargetKind::PLocalEnergy, value: t.value, error: t.error }
        }
        _ => Target { kind: TargetKind::LocalEnergy, value: e.value, error: e.error },
    })
}

struct LinearFit {
    c: f64,
    a: f64,
    chi2: f64,
    cond: f64,
}

fn condition2(m: &Matrix2<f64>) -> f64 {
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev.min().abs(), ev.max().abs());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Weighted least squares for `v = c + a t^b` at fixed `b`.
fn fit_fixed(t: &[f64], v: &[f64], w: &[f64], b: f64) -> LinearFit {
    let mut m = Matrix2::<f64>::zeros();
    let mut r = Vector2::zeros();
    for ((&ti, &vi), &wi) in t.iter().zip(v).zip(w) {
        let x = ti.powf(b);
        m[(0, 0)] += wi;
        m[(0, 1)] += wi * x;
        m[(1, 1)] += wi * x * x;
        r[0] += wi * vi;
        r[1] += wi * vi * x;
    }
    m[(1, 0)] = m[(0, 1)];
    let cond = condition2(&m);
    let sol = m.lu().solve(&r).unwrap_or_else(Vector2::zeros);
    let chi2 = t
        .iter()
        .zip(v)
        .zip(w)
        .map(|((&ti, &vi), &wi)| wi * (vi - sol[0] - sol[1] * ti.powf(b)).powi(2))
        .sum();
    LinearFit { c: sol[0], a: sol[1], chi2, cond }
}

/// Weighted fit of `value ~ C + a t^b`, with `b` searched on `[0.2, 4]` and
/// refined by golden section. Falls back to `b = 1` when the free-rate fit
/// is ill-conditioned, and to a constant when the values do not vary beyond
/// their errors.
pub fn extrapolate(points: &[(f64, f64, f64)]) -> Result<Extrapolation> {
    if points.len() < 4 {
        return Err(invalid(format!("extrapolation needs at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(t, v, e)| !(*t > 0.0 && t.is_finite() && v.is_finite() && *e >= 0.0)) {
        return Err(invalid("points need finite t > 0, finite values and errors >= 0"));
    }
    if points.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(invalid("t must decrease strictly toward the limit"));
    }
    let n = points.len();
    let t: Vec<f64> = points.iter().map(|p| p.0).collect();
    let v: Vec<f64> = points.iter().map(|p| p.1).collect();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = if scale > 0.0 { 1e-14 * scale } else { 1.0 };
    let sig: Vec<f64> = points.iter().map(|p| p.2.max(floor)).collect();
    // Weights relative to the largest error keep the normal equations in
    // range; `ref2` restores absolute units.
    let max_sig = sig.iter().fold(0.0f64, |m, s| m.max(*s));
    let ref2 = max_sig * max_sig;
    let w: Vec<f64> = sig.iter().map(|s| (max_sig / s).powi(2)).collect();
    let aitken = aitken(&v[n - 3..]);

    // Constant model when the values do not move beyond their errors.
    let spread = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x)) - v.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if spread <= max_sig {
        let sw: f64 = w.iter().sum();
        let c = v[0] + v.iter().zip(&w).map(|(a, b)| (a - v[0]) * b).sum::<f64>() / sw;
        let chi2: f64 = v.iter().zip(&w).map(|(x, wi)| wi * (x - c).powi(2)).sum::<f64>() / ref2;
        let inflate = (chi2 / (n - 1) as f64).max(1.0);
        return Ok(Extrapolation {
            limit: c,
            limit_error: (inflate * ref2 / sw).sqrt(),
            rate: None,
            amplitude: 0.0,
            chi2,
            residual: rms(&v, |_| c),
            linear_fallback: false,
            aitken,
        });
    }

    let usable = |b: f64| {
        let f = fit_fixed(&t, &v, &w, b);
        (f.cond <= CONDITION_LIMIT).then_some(f)
    };
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=76 {
        let b = 0.2 + 0.05 * k as f64;
        if let Some(f) = usable(b) {
            if best.is_none_or(|(_, c)| f.chi2 < c) {
                best = Some((b, f.chi2));
            }
        }
    }
    let free = best.map(|(b0, _)| {
        let chi = |b: f64| usable(b).map_or(f64::INFINITY, |f| f.chi2);
        let b = golden(chi, (b0 - 0.05).max(0.2), (b0 + 0.05).min(4.0));
        let b = if chi(b) <= chi(b0) { b } else { b0 };
        (b, fit_fixed(&t, &v, &w, b))
    });
    let (b, fit, cov00, linear_fallback) = match free.and_then(|(b, f)| {
        let (cov, cond) = covariance3(&t, &w, b, f.a);
        (cond <= CONDITION_LIMIT).then_some((b, f, cov, false))
    }) {
        Some(x) => x,
        None => {
            let f = fit_fixed(&t, &v, &w, 1.0);
            let cov = linear_cov00(&t, &w);
            (1.0, f, cov, true)
        }
    };
    let params = if linear_fallback { 2 } else { 3 };
    let dof = (n - params).max(1) as f64;
    let chi2 = fit.chi2 / ref2;
    let inflate = (chi2 / dof).max(1.0);
    Ok(Extrapolation {
        limit: fit.c,
        limit_error: (cov00 * ref2 * inflate).sqrt(),
        rate: Some(b),
        amplitude: fit.a,
        chi2,
        residual: rms(&v, |i| fit.c + fit.a * t[i].powf(b)),
        linear_fallback,
        aitken,
    })
}

fn rms(v: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    (v.iter().enumerate().map(|(i, x)| (x - model(i)).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// `[0, 0]` entry of the inverse Fisher matrix of `(C, a, b)`, with its
/// condition number.
fn covariance3(t: &[f64], w: &[f64], b: f64, a: f64) -> (f64, f64) {
    let mut m = Matrix3::<f64>::zeros();
    for (&ti, &wi) in t.iter().zip(w) {
        let x = ti.powf(b);
        let j = [1.0, x, a * x * ti.ln()];
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] += wi * j[r] * j[c];
            }
        }
    }
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev.min().abs(), ev.max().abs());
    let cond = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    match m.try_inverse() {
        Some(inv) if cond.is_finite() => (inv[(0, 0)].max(0.0), cond),
        _ => (f64::INFINITY, f64::INFINITY),
    }
}

fn linear_cov00(t: &[f64], w: &[f64]) -> f64 {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (&ti, &wi) in t.iter().zip(w) {
        s0 += wi;
        s1 += wi * ti;
        s2 += wi * ti * ti;
    }
    s2 / (s0 * s2 - s1 * s1)
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn aitken(v: &[f64]) -> Option<f64> {
    let (x0, x1, x2) = (v[0], v[1], v[2]);
    let den = (x2 - x1) - (x1 - x0);
    (den != 0.0).then(|| x2 - (x2 - x1).powi(2) / den)
}

/// Pass iff `|C - T| <= tolerance |T| + 3 sigma_C`; absolute tolerance when
/// the target is zero or not finite.
pub fn compare(ex: &Extrapolation, target: f64, tolerance: f64, points: &[Point]) -> Comparison {
    let gap = (ex.limit - target).abs();
    let relative = target.is_finite() && target != 0.0;
    let allowed = if relative { tolerance * target.abs() } else { tolerance } + 3.0 * ex.limit_error;
    let quadrature_error = points.iter().fold(0.0f64, |m, p| m.max(p.error));
    let truncation_error = points.last().map_or(0.0, |p| (p.value - ex.limit).abs());
    Comparison {
        pass: gap <= allowed,
        gap,
        relative_gap: relative.then(|| gap / target.abs()),
        allowed,
        tolerance,
        fit_uncertainty: ex.limit_error,
        quadrature_error,
        truncation_error,
        dominant_error: if quadrature_error >= truncation_error {
            ErrorSource::Quadrature
        } else {
            ErrorSource::ScheduleTruncation
        },
        lower_bound_only: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn ts() -> Vec<f64> {
        vec![0.2, 0.12, 0.07, 0.04, 0.02, 0.01]
    }

    #[test]
    fn recovers_linear_model_exactly() {
        let pts: Vec<_> = ts().into_iter().map(|t| (t, 3.0 + 2.0 * t, 0.0)).collect();
        let e = extrapolate(&pts).unwrap();
        assert!((e.limit - 3.0).abs() < 1e-10, "{e:?}");
        assert!((e.rate.unwrap() - 1.0).abs() < 1e-6, "{e:?}");
        assert!(e.residual < 1e-10);
    }

    #[test]
    fn constant_values_flag_the_rate() {
        let pts: Vec<_> = ts().into_iter().map(|t| (t, 1.5, 0.0)).collect();
        let e = extrapolate(&pts).unwrap();
        assert_eq!(e.limit, 1.5);
        assert_eq!(e.rate, None);
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn recovers_square_root_model_under_noise() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1e-6).unwrap();
        let pts: Vec<_> = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005]
            .into_iter()
            .map(|t: f64| (t, 2.0 + t.sqrt() + noise.sample(&mut r), 1e-6))
            .collect();
        let e = extrapolate(&pts).unwrap();
        assert!((e.limit - 2.0).abs() < 1e-4, "{e:?}");
        assert!((e.rate.unwrap() - 0.5).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn rejects_bad_point_sets() {
        assert!(extrapolate(&[(0.1, 1.0, 0.0); 3]).is_err());
        assert!(extrapolate(&[(0.1, 1.0, 0.0), (0.2, 1.0, 0.0), (0.05, 1.0, 0.0), (0.01, 1.0, 0.0)]).is_err());
        assert!(extrapolate(&[(0.4, 1.0, 0.0), (0.2, 1.0, 0.0), (0.1, 1.0, 0.0), (0.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn aitken_of_geometric_sequence_is_exact() {
        let pts: Vec<_> = [0.4, 0.2, 0.1, 0.05].into_iter().map(|t| (t, 1.0 + t, 0.0)).collect();
        let e = extrapolate(&pts).unwrap();
        assert!((e.aitken.unwrap() - 1.0).abs() < 1e-12);
    }

    fn exact(c: f64) -> Extrapolation {
        Extrapolation {
            limit: c,
            limit_error: 0.0,
            rate: Some(1.0),
            amplitude: 1.0,
            chi2: 0.0,
            residual: 0.0,
            linear_fallback: false,
            aitken: None,
        }
    }

    #[test]
    fn comparison_thresholds() {
        assert!(compare(&exact(5.0), 5.0, 0.0, &[]).pass);
        assert!(!compare(&exact(1.02), 1.0, 0.01, &[]).pass);
        assert!(compare(&exact(1.02), 1.0, 0.03, &[]).pass);
        let zero = compare(&exact(1e-3), 0.0, 1e-2, &[]);
        assert!(zero.pass && zero.relative_gap.is_none());
    }

    #[test]
    fn schedules_validate() {
        for s in [Schedule::default_s(), Schedule::default_delta(), Schedule::default_n()] {
            s.validate().unwrap();
            assert!((1..s.len()).all(|i| s.t(i) < s.t(i - 1)));
        }
        assert!(Schedule::SValues { values: vec![0.5, 0.6, 0.7] }.validate().is_err());
        assert!(Schedule::DeltaValues { values: vec![0.1, 0.2, 0.05, 0.01] }.validate().is_err());
        assert!(Schedule::NValues { values: vec![4, 4, 8, 16] }.validate().is_err());
    }

    fn zero_study(functional: StudyFunctional, schedule: Schedule) -> Study {
        Study {
            functional,
            p: 2.0,
            body: BodyDescriptor::Ball { dim: 2, radius: 1.0 },
            field: FieldDescriptor::Zero { dim: 2 },
            potential: None,
            schedule,
            budget: None,
            scale_samples: false,
            tolerance: 0.01,
        }
    }

    #[test]
    fn zero_field_studies_pass_trivially() {
        for (f, s) in [
            (StudyFunctional::Gagliardo, Schedule::default_s()),
            (StudyFunctional::Nguyen, Schedule::default_delta()),
            (StudyFunctional::Bbm { mollifier: MollifierChoice::ShrinkingUniform }, Schedule::default_n()),
            (StudyFunctional::Bbm { mollifier: MollifierChoice::Ludwig }, Schedule::default_s()),
        ] {
            let r = run_study(&zero_study(f, s)).unwrap();
            assert!(r.pass && r.points.iter().all(|p| p.value == 0.0));
            assert_eq!(r.extrapolation.limit, 0.0);
            assert_eq!(r.target.value, 0.0);
        }
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        assert!(run_study(&zero_study(StudyFunctional::Nguyen, Schedule::default_s())).is_err());
        let mut s = zero_study(StudyFunctional::Gagliardo, Schedule::default_s());
        s.p = 2.0;
        s.field = FieldDescriptor::Indicator {
            region: crate::descriptor::RegionDescriptor::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            amplitude: 1.0,
        };
        assert!(matches!(run_study(&s), Err(Error::Unsupported(_))));
    }

    #[test]
    fn report_round_trips() {
        let mut s = zero_study(StudyFunctional::Nguyen, Schedule::default_delta());
        s.field = FieldDescriptor::Gaussian { dim: 2 };
        s.budget = Some(IntegrationBudget {
            outer: OuterScheme::Trapezoid { spacing: 1.0 },
            sphere_nodes: 16,
            radial: Default::default(),
            seed: 3,
        });
        let r = run_study(&s).unwrap();
        let back = ConvergenceReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.compare(s.tolerance), r.diagnostics);
        let csv = r.to_csv();
        assert!(csv.starts_with("parameter,value,error\n"));
        assert_eq!(csv.lines().count(), 1 + s.schedule.len());
        for (line, pt) in csv.lines().skip(1).zip(&r.points) {
            let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(f, vec![pt.parameter, pt.value, pt.error]);
        }
        assert_eq!(r.to_plot_data().lines().count(), s.schedule.len());
    }
}
