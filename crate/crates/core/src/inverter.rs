//! Ideal two-level voltage-source inverter.

use std::fmt;

use crate::transforms::{clarke, Abc, AlphaBeta};

/// Leg commands of the three inverter legs; `true` means the upper device
/// conducts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SwitchState {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl SwitchState {
    pub const fn new(a: bool, b: bool, c: bool) -> Self {
        Self { a, b, c }
    }

    /// Builds a state from 0/1 leg values; any non-zero value means "on".
    pub const fn from_bits(a: u8, b: u8, c: u8) -> Self {
        Self::new(a != 0, b != 0, c != 0)
    }

    pub fn legs(self) -> [bool; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_legs(legs: [bool; 3]) -> Self {
        Self::new(legs[0], legs[1], legs[2])
    }

    pub fn complement(self) -> Self {
        Self::new(!self.a, !self.b, !self.c)
    }

    /// Number of legs that differ between `self` and `other`.
    pub fn transitions_to(self, other: SwitchState) -> u32 {
        self.legs()
            .iter()
            .zip(other.legs())
            .filter(|(x, y)| **x != *y)
            .count() as u32
    }

    pub fn ones(self) -> u32 {
        self.legs().iter().filter(|x| **x).count() as u32
    }

    pub fn is_zero_vector(self) -> bool {
        self.a == self.b && self.b == self.c
    }

    /// All eight states in `VoltageVectorId` order V0..V7.
    pub fn all() -> [SwitchState; 8] {
        VoltageVectorId::ALL.map(VoltageVectorId::switch_state)
    }
}

impl fmt::Display for SwitchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a as u8, self.b as u8, self.c as u8)
    }
}

/// Conventional voltage-vector naming: V0 = 000, V1 = 100, V2 = 110,
/// V3 = 010, V4 = 011, V5 = 001, V6 = 101, V7 = 111.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoltageVectorId(u8);

const ENCODING: [SwitchState; 8] = [
    SwitchState::from_bits(0, 0, 0),
    SwitchState::from_bits(1, 0, 0),
    SwitchState::from_bits(1, 1, 0),
    SwitchState::from_bits(0, 1, 0),
    SwitchState::from_bits(0, 1, 1),
    SwitchState::from_bits(0, 0, 1),
    SwitchState::from_bits(1, 0, 1),
    SwitchState::from_bits(1, 1, 1),
];

impl VoltageVectorId {
    pub const V0: Self = Self(0);
    pub const V7: Self = Self(7);
    pub const ALL: [Self; 8] = [
        Self(0),
        Self(1),
        Self(2),
        Self(3),
        Self(4),
        Self(5),
        Self(6),
        Self(7),
    ];

    pub fn new(id: u8) -> Option<Self> {
        (id < 8).then_some(Self(id))
    }

    /// Active vector `V(k)` with `k` wrapped into 1..=6.
    pub fn active(k: i32) -> Self {
        Self((k - 1).rem_euclid(6) as u8 + 1)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn is_active(self) -> bool {
        (1..=6).contains(&self.0)
    }

    pub fn switch_state(self) -> SwitchState {
        ENCODING[self.0 as usize]
    }

    pub fn of(sw: SwitchState) -> Self {
        let id = ENCODING
            .iter()
            .position(|s| *s == sw)
            .expect("encoding covers all eight states");
        Self(id as u8)
    }
}

impl fmt::Display for VoltageVectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

pub fn vector_of(sw: SwitchState) -> VoltageVectorId {
    VoltageVectorId::of(sw)
}

/// Line-to-neutral phase voltages of an ideal inverter feeding a balanced
/// star-connected load.
pub fn phase_voltages(sw: SwitchState, v_dc: f64) -> Abc {
    let [a, b, c] = sw.legs().map(|on| if on { 1.0 } else { 0.0 });
    let k = v_dc / 3.0;
    Abc::new(
        k * (2.0 * a - b - c),
        k * (2.0 * b - c - a),
        k * (2.0 * c - a - b),
    )
}

/// Stator voltage space vector produced by `sw`.
pub fn output_voltage(sw: SwitchState, v_dc: f64) -> AlphaBeta {
    let v = phase_voltages(sw, v_dc);
    clarke(v.a, v.b, v.c)
}
