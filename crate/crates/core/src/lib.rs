//! Anisotropic moment-body norms, magnetic nonlocal functionals and
//! numerical studies of their local limits.

pub mod convex_body;
pub mod descriptor;
pub mod error;
pub mod estimate;
pub mod fields;
pub mod functionals;
pub mod grid;
pub mod limit;
pub mod norms;
pub mod polytope;
pub mod quadrature;
pub mod rng;
pub mod sphere;

pub use convex_body::{ConvexBody, Shape};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use functionals::{FunctionalKind, FunctionalSpec, IntegrationBudget};
pub use grid::OuterScheme;
pub use norms::{MomentMethod, MomentNormEvaluator};
