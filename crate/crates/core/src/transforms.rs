//! Stationary-frame (αβ) vectors and the Clarke transformation pair.
//!
//! The amplitude-invariant form is used throughout, so a balanced three-phase
//! set of peak `X` maps to an αβ vector of magnitude `X`.

use std::ops::{Add, Mul, Neg, Sub};

const SQRT_3_2: f64 = 0.866_025_403_784_438_6;
const FRAC_1_SQRT_3: f64 = 0.577_350_269_189_625_8;

/// A two-axis quantity in the stationary reference frame. Voltage, current
/// and flux linkage all use this type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

impl AlphaBeta {
    pub const ZERO: AlphaBeta = AlphaBeta { alpha: 0.0, beta: 0.0 };

    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// Unit vector at `angle` radians from the α axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn norm(self) -> f64 {
        self.alpha.hypot(self.beta)
    }

    pub fn dot(self, other: AlphaBeta) -> f64 {
        self.alpha * other.alpha + self.beta * other.beta
    }

    /// Scalar cross product `self.alpha * other.beta - self.beta * other.alpha`.
    pub fn cross(self, other: AlphaBeta) -> f64 {
        self.alpha * other.beta - self.beta * other.alpha
    }

    /// Four-quadrant angle in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.beta.atan2(self.alpha)
    }

    /// Rotates the vector by +90° (multiplication by `j`).
    pub fn rotate_quarter(self) -> Self {
        Self::new(-self.beta, self.alpha)
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.alpha - s * self.beta, s * self.alpha + c * self.beta)
    }

    pub fn is_finite(self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

impl Add for AlphaBeta {
    type Output = AlphaBeta;
    fn add(self, rhs: AlphaBeta) -> AlphaBeta {
        AlphaBeta::new(self.alpha + rhs.alpha, self.beta + rhs.beta)
    }
}

impl Sub for AlphaBeta {
    type Output = AlphaBeta;
    fn sub(self, rhs: AlphaBeta) -> AlphaBeta {
        AlphaBeta::new(self.alpha - rhs.alpha, self.beta - rhs.beta)
    }
}

impl Neg for AlphaBeta {
    type Output = AlphaBeta;
    fn neg(self) -> AlphaBeta {
        AlphaBeta::new(-self.alpha, -self.beta)
    }
}

impl Mul<f64> for AlphaBeta {
    type Output = AlphaBeta;
    fn mul(self, rhs: f64) -> AlphaBeta {
        AlphaBeta::new(self.alpha * rhs, self.beta * rhs)
    }
}

/// Three per-phase values `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Abc {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn sum(self) -> f64 {
        self.a + self.b + self.c
    }
}

/// Clarke transformation, amplitude-invariant form.
pub fn clarke(a: f64, b: f64, c: f64) -> AlphaBeta {
    AlphaBeta {
        alpha: (2.0 / 3.0) * (a - 0.5 * b - 0.5 * c),
        beta: FRAC_1_SQRT_3 * (b - c),
    }
}

/// Inverse Clarke transformation. The result carries no zero-sequence part.
pub fn inverse_clarke(v: AlphaBeta) -> Abc {
    let half_alpha = 0.5 * v.alpha;
    let scaled_beta = SQRT_3_2 * v.beta;
    Abc {
        a: v.alpha,
        b: -half_alpha + scaled_beta,
        c: -half_alpha - scaled_beta,
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= std::f64::consts::TAU {
        0.0
    } else {
        wrapped
    }
}
