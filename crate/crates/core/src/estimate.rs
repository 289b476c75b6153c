use serde::{Deserialize, Serialize};

/// A computed value with its error estimate (quadrature difference,
/// standard error, or a bound, depending on the producer).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { value: k * self.value, error: k.abs() * self.error }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}
