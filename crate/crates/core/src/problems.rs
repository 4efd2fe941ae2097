//! Benchmark objectives: the generalized De Jong power function, Keane's
//! bump function and the pressure-vessel cost model.
//!
//! All constraints follow the convention `g(x) <= 0` is feasible.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("coordinate {index} = {value} lies outside the domain {domain}")]
    OutOfDomain { index: usize, value: f64, domain: String },
    #[error("expected {expected} coordinates, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid problem parameter: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Maps an objective value onto the minimization scale.
    #[inline]
    pub fn to_cost(self, value: f64) -> f64 {
        match self {
            Sense::Minimize => value,
            Sense::Maximize => -value,
        }
    }

    #[inline]
    pub fn from_cost(self, cost: f64) -> f64 {
        self.to_cost(cost)
    }
}

/// An optimization problem over a box.
///
/// Implementations must be pure: equal inputs give equal outputs, which is
/// what makes parallel evaluation deterministic.
pub trait Problem: Sync {
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn bounds(&self) -> Vec<(f64, f64)>;

    fn objective(&self, x: &[f64]) -> f64;

    /// Constraint values, feasible when every entry is `<= 0`.
    fn constraints(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// `Σ x_i^(2α)` on `|x_i| <= r`.
pub fn dejong(x: &[f64], alpha: u32, half_length: f64) -> Result<f64, ProblemError> {
    for (index, &value) in x.iter().enumerate() {
        if !(value.abs() <= half_length) {
            return Err(ProblemError::OutOfDomain { index, value, domain: format!("|x| <= {half_length}") });
        }
    }
    Ok(dejong_unchecked(x, alpha))
}

#[inline]
fn dejong_unchecked(x: &[f64], alpha: u32) -> f64 {
    let power = 2 * alpha as i32;
    x.iter().map(|v| v.powi(power)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeJong {
    pub alpha: u32,
    pub half_length: f64,
    pub dimension: usize,
}

impl DeJong {
    pub fn new(alpha: u32, half_length: f64, dimension: usize) -> Result<Self, ProblemError> {
        if alpha == 0 {
            return Err(ProblemError::Invalid("De Jong exponent must be >= 1".into()));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(ProblemError::Invalid("De Jong half-length must be positive".into()));
        }
        if dimension == 0 {
            return Err(ProblemError::Invalid("De Jong dimension must be >= 1".into()));
        }
        Ok(Self { alpha, half_length, dimension })
    }
}

impl Problem for DeJong {
    fn name(&self) -> &str {
        "dejong"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-self.half_length, self.half_length); self.dimension]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        dejong_unchecked(x, self.alpha)
    }
}

/// Keane's bump, `sin²(x−y) sin²(x+y) / √(x²+y²)` on `0 < x, y < 10`.
pub fn keane_bump(x: f64, y: f64) -> Result<f64, ProblemError> {
    for (index, value) in [x, y].into_iter().enumerate() {
        if !(value > 0.0 && value < 10.0) {
            return Err(ProblemError::OutOfDomain { index, value, domain: "0 < x, y < 10".into() });
        }
    }
    Ok(bump_unchecked(x, y))
}

#[inline]
fn bump_unchecked(x: f64, y: f64) -> f64 {
    let a = (x - y).sin();
    let b = (x + y).sin();
    a * a * b * b / (x * x + y * y).sqrt()
}

/// `(x + y − 15, 3/4 − x y)`.
pub fn keane_bump_constraints(x: f64, y: f64) -> [f64; 2] {
    [x + y - 15.0, 0.75 - x * y]
}

/// Open-domain margin used for the search box of the bump problem.
pub const BUMP_EDGE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KeaneBump;

impl KeaneBump {
    /// The conventional starting design.
    pub const START: [f64; 2] = [5.0, 5.0];
}

impl Problem for KeaneBump {
    fn name(&self) -> &str {
        "bump"
    }

    fn dimension(&self) -> usize {
        2
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(BUMP_EDGE, 10.0 - BUMP_EDGE); 2]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        bump_unchecked(x[0], x[1])
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        keane_bump_constraints(x[0], x[1]).to_vec()
    }
}

/// Which first cost term the vessel model uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VesselVariant {
    /// `0.6224 x1 x3 x4`: shell material cost, thickness × radius × length.
    #[default]
    KannanKramer,
    /// `0.6224 x1 x2 x3`, as sometimes printed.
    Printed,
}

impl fmt::Display for VesselVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VesselVariant::KannanKramer => "kannan-kramer",
            VesselVariant::Printed => "printed",
        })
    }
}

impl FromStr for VesselVariant {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kannan-kramer" => Ok(Self::KannanKramer),
            "printed" => Ok(Self::Printed),
            other => Err(ProblemError::Invalid(format!("unknown vessel variant {other:?}"))),
        }
    }
}

/// Cost in dollars of a vessel `x = (T_s, T_h, R, L)`.
pub fn vessel_objective(x: &[f64; 4], variant: VesselVariant) -> f64 {
    let [x1, x2, x3, x4] = *x;
    let first = match variant {
        VesselVariant::KannanKramer => 0.6224 * x1 * x3 * x4,
        VesselVariant::Printed => 0.6224 * x1 * x2 * x3,
    };
    first + 1.7781 * x2 * x3 * x3 + 3.1611 * x1 * x1 * x4 + 19.84 * x1 * x1 * x3
}

/// `(g1, g2, g3, g4)`: shell and head thickness, minimum volume, maximum length.
pub fn vessel_constraints(x: &[f64; 4]) -> [f64; 4] {
    let [x1, x2, x3, x4] = *x;
    [-x1 + 0.0193 * x3, -x2 + 0.00954 * x3, -PI * x3 * x3 * x4 - 4.0 * PI * x3.powi(3) / 3.0 + 1_296_000.0, x4 - 240.0]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureVessel {
    pub variant: VesselVariant,
    pub bounds: [(f64, f64); 4],
}

impl PressureVessel {
    pub fn new(variant: VesselVariant) -> Self {
        Self { variant, bounds: [(1.0, 1.9375), (0.3125, 1.25), (10.0, 100.0), (10.0, 100.0)] }
    }
}

impl Default for PressureVessel {
    fn default() -> Self {
        Self::new(VesselVariant::default())
    }
}

fn as_array4(x: &[f64]) -> [f64; 4] {
    [x[0], x[1], x[2], x[3]]
}

impl Problem for PressureVessel {
    fn name(&self) -> &str {
        "vessel"
    }

    fn dimension(&self) -> usize {
        4
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.to_vec()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        vessel_objective(&as_array4(x), self.variant)
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        vessel_constraints(&as_array4(x)).to_vec()
    }
}
