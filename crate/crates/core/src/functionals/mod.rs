//! The singular double integrals: anisotropic Gagliardo seminorm, the
//! magnetic Nguyen functional and the magnetic BBM functional.
//!
//! Each is evaluated as `int_x int_sigma int_h Phi(D) c(sigma) h^beta dh`
//! with `y = x + h sigma`, split at the support box `X`: outer points inside
//! `X` carry the ray integral from `x`, and the contribution of `x` outside
//! `X` is reparametrized from `y` inside `X` along the ray leaving `X`.

mod mollifier;
mod ray;

use serde::{Deserialize, Serialize};

use crate::convex_body::ConvexBody;
use crate::error::{check_dim, invalid, Error, Result};
use crate::estimate::Estimate;
use crate::fields::{validate_field, Field, Potential};
use crate::grid::OuterScheme;

pub use mollifier::{MollifierFamily, MollifierKind, RadialProfile};

/// Largest supported dimension; ray points live on the stack.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalKind {
    Gagliardo { s: f64 },
    Nguyen { delta: f64 },
    Bbm { mollifier: MollifierKind, n: usize },
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::Gagliardo { .. } => "gagliardo",
            FunctionalKind::Nguyen { .. } => "nguyen",
            FunctionalKind::Bbm { .. } => "bbm",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalSpec {
    kind: FunctionalKind,
    p: f64,
    body: ConvexBody,
    potential: Potential,
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind, p: f64, body: ConvexBody, potential: Potential) -> Result<Self> {
        crate::norms::check_p(p)?;
        check_dim(body.dim(), potential.dim())?;
        if body.dim() > MAX_DIM {
            return Err(Error::Unsupported(format!("dimension above {MAX_DIM}")));
        }
        match &kind {
            FunctionalKind::Gagliardo { s } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(invalid(format!("s must lie in (0, 1), got {s}")));
                }
                if !potential.is_zero() {
                    return Err(Error::Unsupported("the Gagliardo seminorm takes no magnetic potential".into()));
                }
            }
            FunctionalKind::Nguyen { delta } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(invalid(format!("delta must be positive, got {delta}")));
                }
            }
            FunctionalKind::Bbm { mollifier, n } => {
                MollifierFamily::new(mollifier.clone(), p, body.dim())?.profile(*n)?;
            }
        }
        Ok(Self { kind, p, body, potential })
    }

    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn with_kind(&self, kind: FunctionalKind) -> Result<Self> {
        Self::new(kind, self.p, self.body.clone(), self.potential.clone())
    }

    pub fn mollifier(&self) -> Option<MollifierFamily> {
        match &self.kind {
            FunctionalKind::Bbm { mollifier, .. } => {
                Some(MollifierFamily::new(mollifier.clone(), self.p, self.body.dim()).expect("validated"))
            }
            _ => None,
        }
    }

    /// Rejects fields the functional is not defined for.
    pub fn check_field(&self, u: &Field) -> Result<()> {
        check_dim(self.body.dim(), u.dim())?;
        validate_field(u)?;
        if u.is_smooth() {
            return Ok(());
        }
        match self.kind {
            FunctionalKind::Nguyen { .. } => Err(Error::Unsupported(
                "the Nguyen functional rejects indicator fields; the delta characterization fails for BV".into(),
            )),
            _ if self.p != 1.0 => Err(Error::Unsupported("indicator fields need p = 1".into())),
            _ => Ok(()),
        }
    }

    /// `c(sigma) = coef * g(sigma)^g_exp`, `h^beta` and the radial cut
    /// `r_max / g(sigma)` of the unified ray integrand.
    pub(crate) fn kernel(&self) -> ray::Kernel {
        let (p, nd) = (self.p, self.body.dim() as f64);
        match &self.kind {
            FunctionalKind::Gagliardo { s } => ray::Kernel {
                coef: 1.0,
                g_exp: -(nd + p * s),
                beta: -1.0 - p * s,
                r_max: None,
                threshold: None,
            },
            FunctionalKind::Nguyen { delta } => ray::Kernel {
                coef: delta.powf(p),
                g_exp: -(nd + p),
                beta: -1.0 - p,
                r_max: None,
                threshold: Some(*delta),
            },
            FunctionalKind::Bbm { n, .. } => {
                let pr = self.mollifier().expect("bbm").profile(*n).expect("validated");
                ray::Kernel {
                    coef: pr.kappa,
                    g_exp: pr.exponent - p,
                    beta: pr.exponent - p + nd - 1.0,
                    r_max: pr.r_max,
                    threshold: None,
                }
            }
        }
    }
}

/// Radial rule parameters shared by all rays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialScheme {
    /// Gauss-Legendre order per radial panel.
    pub order: usize,
    /// Growth ratio of the graded panels near the singular endpoint.
    pub growth: f64,
    /// Width of the uniform panels; the field's length scale when absent.
    pub panel: Option<f64>,
    /// Innermost radius, relative to the field's support radius; below it
    /// the difference is replaced by its linearization.
    pub h_min: f64,
    /// Step ratio and maximum step of the level-crossing scan.
    pub scan_ratio: f64,
    pub scan_step: f64,
    pub bisection_tol: f64,
    /// The far ray from `y` is integrated numerically up to `far_span`
    /// times the exit distance and bounded beyond (only when the phase
    /// changes the integrand).
    pub far_span: f64,
}

impl Default for RadialScheme {
    fn default() -> Self {
        Self {
            order: 8,
            growth: 4.0,
            panel: None,
            h_min: 1e-6,
            scan_ratio: 1.05,
            scan_step: 0.1,
            bisection_tol: 1e-12,
            far_span: 1024.0,
        }
    }
}

impl RadialScheme {
    fn validate(&self) -> Result<()> {
        let ok = self.order >= 1
            && self.growth > 1.0
            && self.panel.is_none_or(|w| w > 0.0 && w.is_finite())
            && self.h_min > 0.0
            && self.h_min < 1.0
            && self.scan_ratio > 1.0
            && self.scan_step > 0.0
            && self.bisection_tol > 0.0
            && self.far_span > 1.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("radial scheme parameters out of range"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationBudget {
    pub outer: OuterScheme,
    /// Nodes of the sphere rule (ignored for N = 1).
    pub sphere_nodes: usize,
    #[serde(default)]
    pub radial: RadialScheme,
    /// Seed for random sphere rules (N >= 4).
    #[serde(default)]
    pub seed: u64,
}

impl IntegrationBudget {
    /// Spectral trapezoid grid for smooth fields, breakpoint-aligned Gauss
    /// panels for indicators and mollified fields.
    pub fn for_field(u: &Field) -> Self {
        let outer = match u {
            Field::Indicator { .. } | Field::Mollified(_) => OuterScheme::Gauss { panel_width: 0.1, order: 6 },
            Field::Bump { .. } => OuterScheme::Trapezoid { spacing: 0.125 },
            _ => OuterScheme::Trapezoid { spacing: 0.5 },
        };
        let sphere_nodes = match u.dim() {
            2 => 64,
            3 => 512,
            _ => 4096,
        };
        Self { outer, sphere_nodes, radial: RadialScheme::default(), seed: 0 }
    }

    /// Every resolution doubled.
    pub fn refined(&self) -> Self {
        let outer = match &self.outer {
            OuterScheme::Trapezoid { spacing } => OuterScheme::Trapezoid { spacing: 0.5 * spacing },
            OuterScheme::Gauss { panel_width, order } => {
                OuterScheme::Gauss { panel_width: 0.5 * panel_width, order: *order }
            }
            OuterScheme::MonteCarlo { samples, seed } => {
                OuterScheme::MonteCarlo { samples: 2 * samples, seed: *seed }
            }
        };
        let mut radial = self.radial.clone();
        radial.order *= 2;
        Self { outer, sphere_nodes: 2 * self.sphere_nodes, radial, seed: self.seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.radial.validate()?;
        if self.sphere_nodes < 8 {
            return Err(invalid("sphere rule needs at least 8 nodes"));
        }
        Ok(())
    }
}

/// Raw anisotropic Gagliardo double integral, without the `(1 - s)` factor.
pub fn gagliardo(u: &Field, spec: &FunctionalSpec, budget: &IntegrationBudget) -> Result<Estimate> {
    if !matches!(spec.kind, FunctionalKind::Gagliardo { .. }) {
        return Err(invalid("spec is not a Gagliardo functional"));
    }
    evaluate(u, spec, budget)
}

/// `I_delta^K(u)`.
pub fn nguyen(u: &Field, spec: &FunctionalSpec, budget: &IntegrationBudget) -> Result<Estimate> {
    if !matches!(spec.kind, FunctionalKind::Nguyen { .. }) {
        return Err(invalid("spec is not a Nguyen functional"));
    }
    evaluate(u, spec, budget)
}

pub fn bbm(u: &Field, spec: &FunctionalSpec, budget: &IntegrationBudget) -> Result<Estimate> {
    if !matches!(spec.kind, FunctionalKind::Bbm { .. }) {
        return Err(invalid("spec is not a BBM functional"));
    }
    evaluate(u, spec, budget)
}

/// Any of the three functionals, dispatched on its `FunctionalKind`.
pub fn evaluate(u: &Field, spec: &FunctionalSpec, budget: &IntegrationBudget) -> Result<Estimate> {
    spec.check_field(u)?;
    budget.validate()?;
    if u.is_zero() {
        return Ok(Estimate::ZERO);
    }
    ray::integrate(u, spec, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Region;

    fn disk() -> ConvexBody {
        ConvexBody::ball(2, 1.0).unwrap()
    }

    fn gagliardo_spec(s: f64, body: ConvexBody) -> FunctionalSpec {
        FunctionalSpec::new(FunctionalKind::Gagliardo { s }, 2.0, body, Potential::zero(2)).unwrap()
    }

    fn coarse(u: &Field) -> IntegrationBudget {
        let mut b = IntegrationBudget::for_field(u);
        b.outer = OuterScheme::Trapezoid { spacing: 1.0 };
        b.sphere_nodes = 32;
        b
    }

    #[test]
    fn zero_field_vanishes() {
        let u = Field::zero(2);
        let a = Potential::rotational(1.0).unwrap();
        let b = IntegrationBudget::for_field(&u);
        for kind in [
            FunctionalKind::Gagliardo { s: 0.5 },
            FunctionalKind::Nguyen { delta: 0.1 },
            FunctionalKind::Bbm { mollifier: MollifierKind::ShrinkingUniform, n: 4 },
        ] {
            let pot = if matches!(kind, FunctionalKind::Gagliardo { .. }) { Potential::zero(2) } else { a.clone() };
            let spec = FunctionalSpec::new(kind, 2.0, disk(), pot).unwrap();
            assert_eq!(evaluate(&u, &spec, &b).unwrap(), Estimate::ZERO);
        }
    }

    #[test]
    fn rejects_bad_combinations() {
        let a = Potential::rotational(1.0).unwrap();
        assert!(FunctionalSpec::new(FunctionalKind::Gagliardo { s: 0.5 }, 2.0, disk(), a.clone()).is_err());
        assert!(FunctionalSpec::new(FunctionalKind::Gagliardo { s: 1.0 }, 2.0, disk(), Potential::zero(2)).is_err());
        assert!(FunctionalSpec::new(FunctionalKind::Nguyen { delta: 0.0 }, 2.0, disk(), a.clone()).is_err());
        assert!(FunctionalSpec::new(FunctionalKind::Nguyen { delta: 0.1 }, 0.5, disk(), a.clone()).is_err());
        let ind = Field::indicator(Region::aligned_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let b = IntegrationBudget::for_field(&ind);
        let ng = FunctionalSpec::new(FunctionalKind::Nguyen { delta: 0.1 }, 1.0, disk(), a.clone()).unwrap();
        assert!(matches!(nguyen(&ind, &ng, &b), Err(Error::Unsupported(_))));
        let bb = FunctionalSpec::new(
            FunctionalKind::Bbm { mollifier: MollifierKind::ShrinkingUniform, n: 4 },
            2.0,
            disk(),
            Potential::zero(2),
        )
        .unwrap();
        assert!(matches!(bbm(&ind, &bb, &b), Err(Error::Unsupported(_))));
        assert!(gagliardo(&Field::gaussian(2), &bb, &b).is_err());
        assert!(evaluate(&Field::gaussian(3), &bb, &b).is_err());
    }

    #[test]
    fn ludwig_bbm_is_scaled_gagliardo() {
        let u = Field::gaussian(2);
        let b = coarse(&u);
        let s_values = vec![0.6, 0.9];
        for (n, s) in [(1, 0.6), (2, 0.9)] {
            let g = gagliardo(&u, &gagliardo_spec(s, disk()), &b).unwrap();
            let kind = FunctionalKind::Bbm { mollifier: MollifierKind::Ludwig { s_values: s_values.clone() }, n };
            let spec = FunctionalSpec::new(kind, 2.0, disk(), Potential::zero(2)).unwrap();
            let v = bbm(&u, &spec, &b).unwrap();
            let want = 2.0 * (1.0 - s) * g.value;
            assert!((v.value - want).abs() <= 1e-10 * want, "{} vs {want}", v.value);
        }
    }

    #[test]
    fn larger_body_gives_larger_seminorm() {
        // K1 in K2 gives g1 >= g2, so g1^{-(N+ps)} <= g2^{-(N+ps)} pointwise.
        let u = Field::gaussian(2);
        let b = coarse(&u);
        let inner = gagliardo(&u, &gagliardo_spec(0.5, disk()), &b).unwrap();
        let outer = gagliardo(&u, &gagliardo_spec(0.5, ConvexBody::cube(2, 1.0).unwrap()), &b).unwrap();
        assert!(inner.value + inner.error <= outer.value - outer.error, "{inner:?} {outer:?}");
    }

    #[test]
    fn nguyen_superlevel_measure_shrinks() {
        let u = Field::modulated_gaussian(vec![1.0, 0.0]);
        let a = Potential::rotational(1.0).unwrap();
        let b = coarse(&u);
        let raw: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
            .iter()
            .map(|&delta| {
                let spec = FunctionalSpec::new(FunctionalKind::Nguyen { delta }, 2.0, disk(), a.clone()).unwrap();
                nguyen(&u, &spec, &b).unwrap().value / (delta * delta)
            })
            .collect();
        assert!(raw.windows(2).all(|w| w[1] <= w[0]), "{raw:?}");
    }

    #[test]
    fn one_dimensional_grid_matches_monte_carlo() {
        let u = Field::gaussian(1);
        let body = ConvexBody::cube(1, 1.0).unwrap();
        let spec = FunctionalSpec::new(FunctionalKind::Gagliardo { s: 0.5 }, 2.0, body, Potential::zero(1)).unwrap();
        let grid = gagliardo(&u, &spec, &IntegrationBudget::for_field(&u)).unwrap();
        let mut mc_budget = IntegrationBudget::for_field(&u);
        mc_budget.outer = OuterScheme::MonteCarlo { samples: 20_000, seed: 7 };
        let mc = gagliardo(&u, &spec, &mc_budget).unwrap();
        assert!((grid.value - mc.value).abs() <= 3.0 * (grid.error + mc.error), "{grid:?} {mc:?}");
    }

    #[test]
    fn magnetic_indicator_runs_and_exceeds_perimeter() {
        // At p = 1 the magnetic limit of a real indicator adds int_E ||A||.
        let u = Field::indicator(Region::aligned_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let kind = FunctionalKind::Bbm { mollifier: MollifierKind::ShrinkingUniform, n: 16 };
        let plain = FunctionalSpec::new(kind.clone(), 1.0, disk(), Potential::zero(2)).unwrap();
        let mag = FunctionalSpec::new(kind, 1.0, disk(), Potential::constant(vec![1.0, 0.0]).unwrap()).unwrap();
        let b = IntegrationBudget::for_field(&u);
        let v0 = bbm(&u, &plain, &b).unwrap();
        let v1 = bbm(&u, &mag, &b).unwrap();
        assert!(v1.value > v0.value && v1.value.is_finite(), "{v0:?} {v1:?}");
    }

    #[test]
    fn budget_serde_is_strict() {
        let b = IntegrationBudget::for_field(&Field::gaussian(2));
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<IntegrationBudget>(&text).unwrap(), b);
        let bad = text.replacen("sphere_nodes", "sphere_node", 1);
        assert!(serde_json::from_str::<IntegrationBudget>(&bad).is_err());
        let kind: FunctionalKind =
            serde_json::from_str(r#"{"kind":"bbm","mollifier":{"family":"ludwig","s_values":[0.5]},"n":1}"#).unwrap();
        assert_eq!(kind.name(), "bbm");
        assert!(serde_json::from_str::<FunctionalKind>(r#"{"kind":"nguyen","delta":0.1,"x":1}"#).is_err());
    }
}
