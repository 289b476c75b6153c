//! Serializable descriptions of bodies, fields, regions and potentials, as
//! they appear in configuration files and reports.

use serde::{Deserialize, Serialize};

use crate::convex_body::ConvexBody;
use crate::error::Result;
use crate::fields::{Field, Potential, Region};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    Ball {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Cube {
        dim: usize,
        #[serde(default = "one")]
        half: f64,
    },
    /// Axis-aligned ellipsoid with the given semi-axes.
    Ellipse { axes: Vec<f64> },
    /// `{x : x.M x <= 1}`, `matrix` row-major.
    Ellipsoid { dim: usize, matrix: Vec<f64> },
    RegularPolygon {
        sides: usize,
        #[serde(default = "one")]
        inradius: f64,
    },
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    LqBall { dim: usize, q: f64 },
}

impl BodyDescriptor {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodyDescriptor::Ball { dim, radius } => ConvexBody::ball(*dim, *radius),
            BodyDescriptor::Cube { dim, half } => ConvexBody::cube(*dim, *half),
            BodyDescriptor::Ellipse { axes } => ConvexBody::ellipsoid_axes(axes),
            BodyDescriptor::Ellipsoid { dim, matrix } => ConvexBody::ellipsoid(*dim, matrix.clone()),
            BodyDescriptor::RegularPolygon { sides, inradius } => ConvexBody::regular_polygon(*sides, *inradius),
            BodyDescriptor::Polytope { normals, offsets } => ConvexBody::polytope(normals.clone(), offsets.clone()),
            BodyDescriptor::LqBall { dim, q } => ConvexBody::lq_ball(*dim, *q),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionDescriptor {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

impl RegionDescriptor {
    pub fn build(&self) -> Result<Region> {
        match self {
            RegionDescriptor::Box { lo, hi } => Region::aligned_box(lo, hi),
            RegionDescriptor::Polytope { normals, offsets } => Region::polytope(normals.clone(), offsets.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDescriptor {
    Zero { dim: usize },
    Gaussian { dim: usize },
    ModulatedGaussian { wave: Vec<f64> },
    Bump { dim: usize },
    Indicator {
        region: RegionDescriptor,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Mollified { inner: Box<FieldDescriptor>, m: u32 },
}

impl FieldDescriptor {
    pub fn build(&self) -> Result<Field> {
        let u = match self {
            FieldDescriptor::Zero { dim } => Field::zero(*dim),
            FieldDescriptor::Gaussian { dim } => Field::gaussian(*dim),
            FieldDescriptor::ModulatedGaussian { wave } => Field::modulated_gaussian(wave.clone()),
            FieldDescriptor::Bump { dim } => Field::bump(*dim),
            FieldDescriptor::Indicator { region, amplitude } => Field::indicator(region.build()?, *amplitude),
            FieldDescriptor::Mollified { inner, m } => inner.build()?.mollify(*m)?,
        };
        crate::fields::validate_field(&u)?;
        Ok(u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDescriptor {
    Zero { dim: usize },
    Constant { a: Vec<f64> },
    Linear { dim: usize, matrix: Vec<f64> },
    Rotational { b: f64 },
}

impl PotentialDescriptor {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialDescriptor::Zero { dim } => Ok(Potential::zero(*dim)),
            PotentialDescriptor::Constant { a } => Potential::constant(a.clone()),
            PotentialDescriptor::Linear { dim, matrix } => Potential::linear(*dim, matrix.clone()),
            PotentialDescriptor::Rotational { b } => Potential::rotational(*b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_build() {
        let b: BodyDescriptor = serde_json::from_str(r#"{"shape":"ball","dim":2}"#).unwrap();
        assert_eq!(b.build().unwrap().volume(), std::f64::consts::PI);
        let f: FieldDescriptor = serde_json::from_str(
            r#"{"family":"indicator","region":{"type":"box","lo":[0,0],"hi":[1,1]}}"#,
        )
        .unwrap();
        assert!(!f.build().unwrap().is_smooth());
        let p: PotentialDescriptor = serde_json::from_str(r#"{"kind":"rotational","b":1}"#).unwrap();
        assert_eq!(p.build().unwrap().dim(), 2);
        let m: FieldDescriptor =
            serde_json::from_str(r#"{"family":"mollified","inner":{"family":"gaussian","dim":2},"m":4}"#).unwrap();
        assert!(m.build().unwrap().is_smooth());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<BodyDescriptor>(r#"{"shape":"ball","dim":2,"radias":1}"#).is_err());
        assert!(serde_json::from_str::<FieldDescriptor>(r#"{"family":"gaussian","dim":2,"k":1}"#).is_err());
        assert!(serde_json::from_str::<PotentialDescriptor>(r#"{"kind":"zero","dim":2,"b":0}"#).is_err());
        assert!(serde_json::from_str::<BodyDescriptor>(r#"{"shape":"sphere","dim":2}"#).is_err());
    }

    #[test]
    fn invalid_parameters_fail_at_build() {
        let b: BodyDescriptor = serde_json::from_str(r#"{"shape":"ball","dim":2,"radius":-1}"#).unwrap();
        assert!(b.build().is_err());
        let f: FieldDescriptor = serde_json::from_str(r#"{"family":"modulated_gaussian","wave":[]}"#).unwrap();
        assert!(f.build().is_err());
    }
}
