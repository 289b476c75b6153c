//! Subcommand implementations. Each returns its result as data; `main`
//! decides what to print and which files to write.

use anisobbm::fields::{anisotropic_perimeter, total_variation_smooth, Field, Potential, Region};
use anisobbm::limit::{run_study, ConvergenceReport, Study};
use anisobbm::rng::{derive_seed, stream};
use anisobbm::sphere::SphereRule;
use anisobbm::{ConvexBody, Estimate, MomentMethod, MomentNormEvaluator, OuterScheme};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CheckId2, Norms};

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn fmt_vec(v: &[Complex64]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|c| if c.im == 0.0 { c.re.to_string() } else { format!("{}{:+}i", c.re, c.im) })
        .collect();
    format!("({})", parts.join(" "))
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub vector: String,
    pub gauge: Option<f64>,
    pub moment_norm: f64,
    pub error: f64,
}

/// Gauge (real vectors only) and moment norm of every configured vector.
pub fn norms(cfg: &Norms) -> anisobbm::Result<Vec<NormRow>> {
    let ev = MomentNormEvaluator::new(cfg.body.clone(), cfg.p, cfg.method.clone())?;
    cfg.vectors
        .iter()
        .map(|v| {
            let gauge = if v.iter().all(|c| c.im == 0.0) {
                let re: Vec<f64> = v.iter().map(|c| c.re).collect();
                Some(cfg.body.gauge(&re)?)
            } else {
                None
            };
            let m = ev.moment_norm(v)?;
            Ok(NormRow { vector: fmt_vec(v), gauge, moment_norm: m.value, error: m.error })
        })
        .collect()
}

pub fn norms_csv(rows: &[NormRow]) -> String {
    csv_text(
        &["vector", "gauge", "moment_norm", "error"],
        rows.iter().map(|r| {
            vec![
                r.vector.clone(),
                r.gauge.map_or(String::new(), |g| g.to_string()),
                r.moment_norm.to_string(),
                r.error.to_string(),
            ]
        }),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct Id2Row {
    pub body: String,
    pub p: f64,
    pub index: usize,
    /// Volume route (Monte Carlo over the body).
    pub volume: Estimate,
    /// Sphere route.
    pub sphere: Estimate,
    pub gap: f64,
    pub allowed: f64,
    pub pass: bool,
}

/// Random complex vector with entries uniform in the square `[-1, 1]^2`.
fn random_vector(dim: usize, seed: u64, index: u64) -> Vec<Complex64> {
    let mut rng = stream(seed, index);
    (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Compares the volume representation (Monte Carlo, one sample set per
/// body and exponent, shared by all vectors) with the sphere representation.
/// A vector passes when the gap is within `tolerance` times the sum of the
/// two error estimates.
pub fn check_id2(cfg: &CheckId2) -> anisobbm::Result<Vec<Id2Row>> {
    let mut rows = Vec::new();
    for (label, body) in &cfg.bodies {
        let n = body.dim();
        let rule = SphereRule::for_body(body, cfg.sphere_nodes, derive_seed(cfg.seed, &format!("id2/rule/{label}")));
        let vseed = derive_seed(cfg.seed, &format!("id2/vectors/{label}"));
        for &p in &cfg.p_values {
            let mseed = derive_seed(cfg.seed, &format!("id2/samples/{label}/{p}"));
            let ev = MomentNormEvaluator::new(body.clone(), p, MomentMethod::BodyMonteCarlo { samples: cfg.samples, seed: mseed })?;
            let part: Vec<Id2Row> = (0..cfg.vectors)
                .into_par_iter()
                .map(|i| {
                    let v = random_vector(n, vseed, i as u64);
                    let volume = ev.moment_norm(&v)?;
                    let sphere = ev.moment_norm_sphere(&v, &rule)?;
                    let gap = (volume.value - sphere.value).abs();
                    let allowed = cfg.tolerance * (volume.error + sphere.error);
                    Ok(Id2Row { body: label.clone(), p, index: i, volume, sphere, gap, allowed, pass: gap <= allowed })
                })
                .collect::<anisobbm::Result<_>>()?;
            rows.extend(part);
        }
    }
    Ok(rows)
}

pub fn id2_csv(rows: &[Id2Row]) -> String {
    csv_text(
        &["body", "p", "index", "volume", "volume_error", "sphere", "sphere_error", "gap", "allowed", "pass"],
        rows.iter().map(|r| {
            vec![
                r.body.clone(),
                r.p.to_string(),
                r.index.to_string(),
                r.volume.value.to_string(),
                r.volume.error.to_string(),
                r.sphere.value.to_string(),
                r.sphere.error.to_string(),
                r.gap.to_string(),
                r.allowed.to_string(),
                r.pass.to_string(),
            ]
        }),
    )
}

pub fn limit_study(study: &Study) -> anisobbm::Result<ConvergenceReport> {
    run_study(study)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerimeterRow {
    /// 0 for the sharp indicator.
    pub m: u32,
    pub value: f64,
    pub error: f64,
    pub relative_gap: f64,
}

/// Anisotropic perimeter of the region, then the smoothed total variation
/// of its mollified indicator at each requested level.
pub fn perimeter(region: &Region, body: &ConvexBody, levels: &[u32], grid: Option<&OuterScheme>) -> anisobbm::Result<Vec<PerimeterRow>> {
    let per = anisotropic_perimeter(region, body)?;
    let mut rows = vec![PerimeterRow { m: 0, value: per, error: 0.0, relative_gap: 0.0 }];
    let indicator = Field::indicator(region.clone(), 1.0);
    let a = Potential::zero(region.dim());
    for &m in levels {
        let u = indicator.mollify(m)?;
        let grid = grid.cloned().unwrap_or(anisobbm::IntegrationBudget::for_field(&u).outer);
        let tv = total_variation_smooth(&u, &a, body, &grid)?;
        let relative_gap = if per > 0.0 { (tv.value - per).abs() / per } else { tv.value.abs() };
        rows.push(PerimeterRow { m, value: tv.value, error: tv.error, relative_gap });
    }
    Ok(rows)
}

pub fn perimeter_csv(rows: &[PerimeterRow]) -> String {
    csv_text(
        &["m", "value", "error", "relative_gap"],
        rows.iter().map(|r| vec![r.m.to_string(), r.value.to_string(), r.error.to_string(), r.relative_gap.to_string()]),
    )
}
