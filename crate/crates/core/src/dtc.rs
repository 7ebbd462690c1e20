//! Direct torque control.
//!
//! Each control period the stator flux is integrated from the applied voltage
//! and measured current, torque is computed from the estimated flux, the two
//! errors are quantized by hysteresis comparators, and the switching table
//! picks the inverter vector for the flux sector.

use crate::error::{Error, Result};
use crate::inverter::{SwitchState, VoltageVectorId};
use crate::transforms::AlphaBeta;

/// Below this fraction of the flux reference the controller magnetizes with a
/// fixed flux demand and sector.
pub const STARTUP_FLUX_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtcConfig {
    /// Stator flux reference (Wb).
    pub flux_ref: f64,
    /// Torque comparator half-band (N·m).
    pub torque_band: f64,
    /// Flux comparator half-band (Wb).
    pub flux_band: f64,
}

impl Default for DtcConfig {
    fn default() -> Self {
        Self {
            flux_ref: 0.86,
            torque_band: 4.0,
            flux_band: 0.01462,
        }
    }
}

impl DtcConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("dtc.lambda_ref", self.flux_ref),
            ("dtc.torque_band", self.torque_band),
            ("dtc.flux_band", self.flux_band),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Observed flux and torque for one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxTorqueEstimate {
    pub flux: AlphaBeta,
    pub magnitude: f64,
    /// Flux angle in `(-π, π]`.
    pub angle: f64,
    /// 1..=6, or 0 while the flux is zero.
    pub sector: u8,
    pub torque: f64,
}

impl Default for FluxTorqueEstimate {
    fn default() -> Self {
        Self {
            flux: AlphaBeta::ZERO,
            magnitude: 0.0,
            angle: 0.0,
            sector: 0,
            torque: 0.0,
        }
    }
}

/// One explicit-Euler step of the stator flux integral `∫(v − Rs·i) dt`.
pub fn estimate_flux(prev: AlphaBeta, v: AlphaBeta, i: AlphaBeta, r_s: f64, dt: f64) -> AlphaBeta {
    prev + (v - i * r_s) * dt
}

pub fn flux_magnitude(flux: AlphaBeta) -> f64 {
    flux.norm()
}

/// `(3/2)·p·(λα·iβ − λβ·iα)`.
pub fn estimate_torque(flux: AlphaBeta, i: AlphaBeta, pole_pairs: u32) -> f64 {
    1.5 * f64::from(pole_pairs) * flux.cross(i)
}

/// Flux sector: sector `k` covers `[(2k−3)·30°, (2k−1)·30°)`.
pub fn sector(flux: AlphaBeta) -> Result<u8> {
    if flux.alpha == 0.0 && flux.beta == 0.0 {
        return Err(Error::UndefinedSector);
    }
    // shift so sector 1 starts at zero, then bucket into 60° slices; degrees
    // keep the representable boundaries (0°, ±90°, 180°) exact
    let shifted = (flux.angle().to_degrees() + 30.0).rem_euclid(360.0);
    let k = (shifted / 60.0).floor() as i64;
    Ok((k.clamp(0, 5) + 1) as u8)
}

/// Two-level flux comparator. Output `true` requests a flux increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluxComparator {
    output: bool,
}

impl Default for FluxComparator {
    fn default() -> Self {
        Self { output: true }
    }
}

impl FluxComparator {
    pub fn with_output(output: bool) -> Self {
        Self { output }
    }

    pub fn output(&self) -> bool {
        self.output
    }

    /// `error = λ_ref − λ`.
    pub fn update(&mut self, error: f64, band: f64) -> bool {
        if error > band {
            self.output = true;
        } else if error < -band {
            self.output = false;
        }
        self.output
    }
}

/// Three-level torque comparator with outputs −1, 0, +1.
///
/// A saturated output returns to 0 once the error falls back inside half the
/// band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TorqueComparator {
    output: i8,
}

impl TorqueComparator {
    pub fn with_output(output: i8) -> Self {
        Self { output: output.signum() }
    }

    pub fn output(&self) -> i8 {
        self.output
    }

    /// `error = T_ref − T_e`.
    pub fn update(&mut self, error: f64, band: f64) -> i8 {
        if error > band {
            self.output = 1;
        } else if error < -band {
            self.output = -1;
        } else if self.output != 0 && error.abs() < 0.5 * band {
            self.output = 0;
        }
        self.output
    }
}

/// The null vector (V0 or V7) reachable from `prev` with fewer leg changes;
/// ties go to V0.
pub fn nearest_zero_vector(prev: SwitchState) -> SwitchState {
    let v0 = VoltageVectorId::V0.switch_state();
    let v7 = VoltageVectorId::V7.switch_state();
    if prev.transitions_to(v7) < prev.transitions_to(v0) {
        v7
    } else {
        v0
    }
}

/// Classic six-sector optimum switching table.
pub fn select_vector(flux_up: bool, torque_demand: i8, sector: u8, prev: SwitchState) -> SwitchState {
    let k = i32::from(sector);
    let offset = match (flux_up, torque_demand.signum()) {
        (_, 0) => return nearest_zero_vector(prev),
        (true, 1) => 1,
        (true, _) => -1,
        (false, 1) => 2,
        (false, _) => -2,
    };
    VoltageVectorId::active(k + offset).switch_state()
}

/// Controller memory for one DTC drive.
#[derive(Debug, Clone)]
pub struct DtcController {
    config: DtcConfig,
    r_s: f64,
    pole_pairs: u32,
    period: f64,
    flux: AlphaBeta,
    flux_cmp: FluxComparator,
    torque_cmp: TorqueComparator,
    prev: SwitchState,
    estimate: FluxTorqueEstimate,
}

impl DtcController {
    pub fn new(config: DtcConfig, r_s: f64, pole_pairs: u32, period: f64) -> Result<Self> {
        config.validate()?;
        if period.is_nan() || period <= 0.0 {
            return Err(Error::invalid("ctrl_dt", "must be > 0"));
        }
        Ok(Self {
            config,
            r_s,
            pole_pairs,
            period,
            flux: AlphaBeta::ZERO,
            flux_cmp: FluxComparator::default(),
            torque_cmp: TorqueComparator::default(),
            prev: SwitchState::default(),
            estimate: FluxTorqueEstimate::default(),
        })
    }

    pub fn config(&self) -> &DtcConfig {
        &self.config
    }

    pub fn estimate(&self) -> &FluxTorqueEstimate {
        &self.estimate
    }

    pub fn switch_state(&self) -> SwitchState {
        self.prev
    }

    /// Runs one control period. `v` is the stator voltage applied over the
    /// period that just ended and `i` the stator current sampled now.
    pub fn step(&mut self, v: AlphaBeta, i: AlphaBeta, torque_ref: f64) -> Result<SwitchState> {
        self.flux = estimate_flux(self.flux, v, i, self.r_s, self.period);
        if !self.flux.is_finite() {
            return Err(Error::NonFinite { what: "estimated flux" });
        }
        let magnitude = flux_magnitude(self.flux);
        let torque = estimate_torque(self.flux, i, self.pole_pairs);

        let flux_demand = self.flux_cmp.update(self.config.flux_ref - magnitude, self.config.flux_band);
        let torque_demand = self
            .torque_cmp
            .update(torque_ref - torque, self.config.torque_band);

        let startup = magnitude < STARTUP_FLUX_FRACTION * self.config.flux_ref;
        let (flux_demand, sector) = if startup {
            (true, 1)
        } else {
            (flux_demand, sector(self.flux)?)
        };

        let next = select_vector(flux_demand, torque_demand, sector, self.prev);
        self.estimate = FluxTorqueEstimate {
            flux: self.flux,
            magnitude,
            angle: self.flux.angle(),
            sector,
            torque,
        };
        self.prev = next;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flux_integration_examples() {
        let z = AlphaBeta::ZERO;
        assert_eq!(estimate_flux(z, z, z, 7.2, 1e-4), z);
        let f = estimate_flux(z, AlphaBeta::new(100.0, 0.0), z, 7.2, 1e-4);
        assert_abs_diff_eq!(f.alpha, 0.01, epsilon = 1e-15);
        assert_eq!(f.beta, 0.0);
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(flux_magnitude(AlphaBeta::ZERO), 0.0);
        assert_eq!(flux_magnitude(AlphaBeta::new(3.0, 4.0)), 5.0);
        assert_abs_diff_eq!(flux_magnitude(AlphaBeta::new(-0.6, 0.8)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn torque_examples() {
        assert_eq!(estimate_torque(AlphaBeta::new(1.0, 0.0), AlphaBeta::new(0.0, 1.0), 2), 3.0);
        assert_eq!(estimate_torque(AlphaBeta::new(1.0, 1.0), AlphaBeta::new(1.0, 1.0), 2), 0.0);
    }

    #[test]
    fn sector_examples() {
        let deg = |d: f64| AlphaBeta::from_angle(d.to_radians());
        assert_eq!(sector(AlphaBeta::new(1.0, 0.0)).unwrap(), 1);
        assert_eq!(sector(deg(50.0)).unwrap(), 2);
        assert_eq!(sector(AlphaBeta::new(-1.0, 0.0)).unwrap(), 4);
        assert!(matches!(sector(AlphaBeta::ZERO), Err(Error::UndefinedSector)));
    }

    #[test]
    fn sector_boundaries_are_lower_inclusive() {
        assert_eq!(sector(AlphaBeta::new(0.0, 1.0)).unwrap(), 3);
        assert_eq!(sector(AlphaBeta::new(0.0, -1.0)).unwrap(), 6);
        assert_eq!(sector(AlphaBeta::new(-1.0, -1e-300)).unwrap(), 4);
        assert_eq!(sector(AlphaBeta::new(1.0, -1e-300)).unwrap(), 1);
    }

    #[test]
    fn flux_comparator_examples() {
        let band = 0.02;
        let mut c = FluxComparator::with_output(false);
        assert!(c.update(2.0 * band, band));
        assert!(c.update(0.5 * band, band));
        assert!(c.update(-0.9 * band, band));
        assert!(!c.update(-2.0 * band, band));
        assert!(!c.update(0.9 * band, band));
    }

    #[test]
    fn torque_comparator_examples() {
        let band = 1.0;
        let mut c = TorqueComparator::default();
        assert_eq!(c.update(2.0, band), 1);
        assert_eq!(c.update(0.0, band), 0);
        assert_eq!(c.update(-2.0, band), -1);
        // retained between band/2 and band
        assert_eq!(c.update(-0.7, band), -1);
        assert_eq!(c.update(-0.4, band), 0);
        assert_eq!(c.update(0.9, band), 0);
    }

    #[test]
    fn table_examples() {
        let prev = SwitchState::from_bits(1, 0, 0);
        assert_eq!(select_vector(true, 1, 1, prev), SwitchState::from_bits(1, 1, 0));
        assert_eq!(select_vector(false, 1, 1, prev), SwitchState::from_bits(0, 1, 0));
        assert_eq!(select_vector(true, -1, 1, prev), SwitchState::from_bits(1, 0, 1));
        assert_eq!(select_vector(false, -1, 1, prev), SwitchState::from_bits(0, 0, 1));
        assert_eq!(select_vector(true, 1, 6, prev), SwitchState::from_bits(1, 0, 0));
    }

    #[test]
    fn zero_vector_minimizes_transitions() {
        for sector in 1..=6 {
            for flux_up in [false, true] {
                assert_eq!(
                    select_vector(flux_up, 0, sector, SwitchState::from_bits(1, 1, 0)),
                    SwitchState::from_bits(1, 1, 1)
                );
            }
        }
        assert_eq!(
            select_vector(true, 0, 1, SwitchState::from_bits(1, 0, 0)),
            SwitchState::from_bits(0, 0, 0)
        );
        // tie between V0 and V7 is impossible from an active state; zero states stay put
        assert_eq!(nearest_zero_vector(SwitchState::from_bits(0, 0, 0)), SwitchState::from_bits(0, 0, 0));
        assert_eq!(nearest_zero_vector(SwitchState::from_bits(1, 1, 1)), SwitchState::from_bits(1, 1, 1));
    }

    #[test]
    fn startup_magnetizes_with_sector_one() {
        let mut ctl = DtcController::new(DtcConfig::default(), 7.2, 2, 50e-6).unwrap();
        let sw = ctl.step(AlphaBeta::ZERO, AlphaBeta::ZERO, 10.0).unwrap();
        // flux demand 1, torque demand +1, sector 1 -> V2
        assert_eq!(sw, SwitchState::from_bits(1, 1, 0));
        assert_eq!(ctl.estimate().sector, 1);
    }
}
