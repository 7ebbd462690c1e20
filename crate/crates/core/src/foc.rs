//! Indirect rotor-flux-oriented control with hysteresis current regulation.
//!
//! Pipeline per control period: speed PI → (i_qs*, i_ds*) → slip speed →
//! flux angle integration → inverse Park to phase references → one
//! two-level hysteresis comparator per inverter leg.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inverter::SwitchState;
use crate::machine::MotorParams;
use crate::transforms::{wrap_angle, Abc};

/// How the `p` in the q-axis current reference is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoleInterpretation {
    /// `p` is the pole-pair count: `i_qs* = (2/3)(1/p)(L_r/L_m)(T*/λr*)`,
    /// the exact inverse of the oriented torque expression.
    #[default]
    Pairs,
    /// Literal `(2/3)(2/p)` factor with `p` still the pole-pair count.
    Count,
}

impl FromStr for PoleInterpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" => Ok(Self::Pairs),
            "count" => Ok(Self::Count),
            other => Err(Error::invalid(
                "foc.eq1_pole_interpretation",
                format!("expected `pairs` or `count`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for PoleInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pairs => "pairs",
            Self::Count => "count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocConfig {
    /// Rotor flux reference (Wb).
    pub rotor_flux_ref: f64,
    /// Speed PI proportional gain (N·m·s/rad).
    pub kp: f64,
    /// Speed PI integral gain (N·m/rad).
    pub ki: f64,
    /// Torque command clamp (N·m).
    pub torque_max: f64,
    /// Current hysteresis half-band (A).
    pub current_band: f64,
    pub pole_interpretation: PoleInterpretation,
}

impl Default for FocConfig {
    fn default() -> Self {
        Self {
            rotor_flux_ref: 0.73,
            kp: 0.5,
            ki: 5.0,
            torque_max: 40.0,
            current_band: 0.25,
            pole_interpretation: PoleInterpretation::Pairs,
        }
    }
}

impl FocConfig {
    pub fn validate(&self, params: &MotorParams) -> Result<()> {
        for (field, value) in [
            ("foc.lambda_r_ref", self.rotor_flux_ref),
            ("foc.Kp", self.kp),
            ("foc.Ki", self.ki),
            ("foc.T_max", self.torque_max),
            ("foc.i_band", self.current_band),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.torque_max > 2.0 * params.rated_torque {
            return Err(Error::invalid(
                "foc.T_max",
                format!(
                    "must not exceed twice the rated torque ({:.3} N·m)",
                    2.0 * params.rated_torque
                ),
            ));
        }
        Ok(())
    }
}

/// Speed PI with output clamp and conditional-integration anti-windup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedPi {
    kp: f64,
    ki: f64,
    limit: f64,
    integral: f64,
}

impl SpeedPi {
    pub fn new(kp: f64, ki: f64, limit: f64) -> Self {
        Self {
            kp,
            ki,
            limit,
            integral: 0.0,
        }
    }

    pub fn from_config(config: &FocConfig) -> Self {
        Self::new(config.kp, config.ki, config.torque_max)
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    /// Returns the torque command for speed error `reference − measured`.
    pub fn update(&mut self, reference: f64, measured: f64, dt: f64) -> f64 {
        let error = reference - measured;
        let proportional = self.kp * error;
        let candidate = (self.integral + self.ki * error * dt).clamp(-self.limit, self.limit);
        let unclamped = proportional + candidate;
        // hold the integrator while the output is saturated in the error's direction
        let winding_up = unclamped.abs() > self.limit && unclamped.signum() == error.signum();
        if !winding_up {
            self.integral = candidate;
        }
        (proportional + self.integral).clamp(-self.limit, self.limit)
    }
}

/// Stator current references `(i_qs*, i_ds*)` for a torque command.
pub fn current_refs(
    torque_ref: f64,
    rotor_flux_ref: f64,
    params: &MotorParams,
    interpretation: PoleInterpretation,
) -> (f64, f64) {
    let pole_factor = match interpretation {
        PoleInterpretation::Pairs => 1.0 / params.p(),
        PoleInterpretation::Count => 2.0 / params.p(),
    };
    let i_qs = (2.0 / 3.0) * pole_factor * (params.l_r / params.l_m) * (torque_ref / rotor_flux_ref);
    let i_ds = rotor_flux_ref / params.l_m;
    (i_qs, i_ds)
}

/// Torque produced by a rotor-flux-oriented machine: `(3/2)·p·(L_m/L_r)·λr·i_qs`.
pub fn oriented_torque(i_qs: f64, rotor_flux: f64, params: &MotorParams) -> f64 {
    1.5 * params.p() * (params.l_m / params.l_r) * rotor_flux * i_qs
}

/// Commanded electrical slip speed (rad/s).
pub fn slip_speed(i_qs_ref: f64, rotor_flux_ref: f64, params: &MotorParams) -> f64 {
    (params.l_m * params.r_r) / (params.l_r * rotor_flux_ref) * i_qs_ref
}

/// Integrates the flux angle over `dt` at electrical rotor speed plus slip.
pub fn advance_angle(theta: f64, speed: f64, slip: f64, pole_pairs: u32, dt: f64) -> f64 {
    wrap_angle(theta + (f64::from(pole_pairs) * speed + slip) * dt)
}

/// Rotating (q, d, 0) references to phase references.
pub fn inverse_park_abc(i_q: f64, i_d: f64, i_0: f64, theta: f64) -> Abc {
    let phase = |shift: f64| {
        let (s, c) = (theta + shift).sin_cos();
        c * i_q + s * i_d + i_0
    };
    Abc::new(phase(0.0), phase(-TAU / 3.0), phase(TAU / 3.0))
}

/// Independent two-level hysteresis on each phase current error.
pub fn hysteresis_current_regulator(
    reference: Abc,
    measured: Abc,
    band: f64,
    prev: SwitchState,
) -> SwitchState {
    let refs = reference.as_array();
    let meas = measured.as_array();
    let mut legs = prev.legs();
    for (leg, (r, m)) in legs.iter_mut().zip(refs.iter().zip(meas)) {
        let error = r - m;
        if error > band {
            *leg = true;
        } else if error < -band {
            *leg = false;
        }
    }
    SwitchState::from_legs(legs)
}

/// References computed during the latest control period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FocReferences {
    pub torque: f64,
    pub i_qs: f64,
    pub i_ds: f64,
    pub slip: f64,
    pub currents: Abc,
}

/// Controller memory for one FOC drive.
#[derive(Debug, Clone)]
pub struct FocController {
    config: FocConfig,
    params: MotorParams,
    period: f64,
    theta: f64,
    pi: SpeedPi,
    prev: SwitchState,
    refs: FocReferences,
}

impl FocController {
    pub fn new(config: FocConfig, params: MotorParams, period: f64) -> Result<Self> {
        config.validate(&params)?;
        params.validate()?;
        if period.is_nan() || period <= 0.0 {
            return Err(Error::invalid("ctrl_dt", "must be > 0"));
        }
        Ok(Self {
            config,
            params,
            period,
            theta: 0.0,
            pi: SpeedPi::from_config(&config),
            prev: SwitchState::default(),
            refs: FocReferences::default(),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn references(&self) -> &FocReferences {
        &self.refs
    }

    pub fn speed_pi(&self) -> &SpeedPi {
        &self.pi
    }

    pub fn switch_state(&self) -> SwitchState {
        self.prev
    }

    /// Runs one control period from the speed reference, measured mechanical
    /// speed (rad/s) and measured phase currents.
    pub fn step(&mut self, speed_ref: f64, speed: f64, currents: Abc) -> SwitchState {
        let torque = self.pi.update(speed_ref, speed, self.period);
        let (i_qs, i_ds) = current_refs(
            torque,
            self.config.rotor_flux_ref,
            &self.params,
            self.config.pole_interpretation,
        );
        let slip = slip_speed(i_qs, self.config.rotor_flux_ref, &self.params);
        self.theta = advance_angle(self.theta, speed, slip, self.params.pole_pairs, self.period);
        let reference = inverse_park_abc(i_qs, i_ds, 0.0, self.theta);
        let next = hysteresis_current_regulator(reference, currents, self.config.current_band, self.prev);
        self.refs = FocReferences {
            torque,
            i_qs,
            i_ds,
            slip,
            currents: reference,
        };
        self.prev = next;
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> MotorParams {
        MotorParams::default()
    }

    #[test]
    fn pi_zero_error_returns_integral() {
        let mut pi = SpeedPi::new(0.5, 5.0, 40.0);
        pi.update(10.0, 0.0, 0.01);
        let integral = pi.integral();
        assert_eq!(pi.update(3.0, 3.0, 0.01), integral);
    }

    #[test]
    fn pi_saturates() {
        let mut pi = SpeedPi::new(0.5, 5.0, 40.0);
        assert_eq!(pi.update(1000.0, 0.0, 1e-3), 40.0);
        assert_eq!(pi.update(-1000.0, 0.0, 1e-3), -40.0);
    }

    #[test]
    fn pi_integral_holds_while_saturated() {
        let mut pi = SpeedPi::new(0.5, 5.0, 40.0);
        for _ in 0..10_000 {
            pi.update(157.0, 0.0, 1e-3);
        }
        // proportional term alone saturates, so integration never starts
        assert_eq!(pi.integral(), 0.0);
    }

    #[test]
    fn current_ref_examples() {
        let p = MotorParams { l_m: 0.44, ..params() };
        assert_eq!(current_refs(0.0, 0.88, &p, PoleInterpretation::Pairs).0, 0.0);
        assert_abs_diff_eq!(current_refs(0.0, 0.88, &p, PoleInterpretation::Pairs).1, 2.0, epsilon = 1e-15);
        let (i_qs, _) = current_refs(12.5, 0.88, &p, PoleInterpretation::Pairs);
        assert_relative_eq!(oriented_torque(i_qs, 0.88, &p), 12.5, max_relative = 1e-14);
    }

    #[test]
    fn literal_pole_factor_doubles_q_current() {
        let p = params();
        let (pairs, _) = current_refs(10.0, 0.88, &p, PoleInterpretation::Pairs);
        let (count, _) = current_refs(10.0, 0.88, &p, PoleInterpretation::Count);
        assert_relative_eq!(count, 2.0 * pairs, max_relative = 1e-15);
        assert_eq!("count".parse::<PoleInterpretation>().unwrap(), PoleInterpretation::Count);
        assert!("poles".parse::<PoleInterpretation>().is_err());
    }

    #[test]
    fn slip_examples() {
        let p = params();
        assert_eq!(slip_speed(0.0, 0.88, &p), 0.0);
        assert_relative_eq!(slip_speed(2.0, 0.88, &p), 9.090_909_090_909_09, max_relative = 1e-14);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(advance_angle(1.25, 0.0, 0.0, 2, 1e-3), 1.25);
        let dt = 1e-3;
        let rate = TAU / dt / 4.0;
        let mut theta = 0.0;
        for _ in 0..4 {
            theta = advance_angle(theta, 0.0, rate, 2, dt);
        }
        assert!(theta < 1e-12 || TAU - theta < 1e-12);
        let theta = advance_angle(0.0, 10.0, 3.0, 2, 0.01);
        assert_abs_diff_eq!(theta, 0.23, epsilon = 1e-15);
    }

    #[test]
    fn inverse_park_examples() {
        let h = 3f64.sqrt() / 2.0;
        let x = inverse_park_abc(1.0, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(x.a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.b, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x.c, -0.5, epsilon = 1e-15);
        let y = inverse_park_abc(0.0, 1.0, 0.0, 0.0);
        assert_abs_diff_eq!(y.a, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.b, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(y.c, h, epsilon = 1e-15);
    }

    #[test]
    fn regulator_examples() {
        let prev = SwitchState::from_bits(0, 1, 0);
        let zero = Abc::default();
        let inside = Abc::new(0.1, -0.2, 0.3);
        assert_eq!(hysteresis_current_regulator(inside, zero, 0.35, prev), prev);
        let a_high = Abc::new(0.7, -0.2, 0.3);
        assert_eq!(
            hysteresis_current_regulator(a_high, zero, 0.35, prev),
            SwitchState::from_bits(1, 1, 0)
        );
        let b_low = Abc::new(0.0, -0.7, 0.0);
        assert_eq!(
            hysteresis_current_regulator(b_low, zero, 0.35, prev),
            SwitchState::from_bits(0, 0, 0)
        );
    }

    #[test]
    fn standstill_magnetizes_without_torque() {
        let p = params();
        let config = FocConfig { rotor_flux_ref: 0.88, ..FocConfig::default() };
        let mut ctl = FocController::new(config, p, 50e-6).unwrap();
        ctl.step(0.0, 0.0, Abc::default());
        let r = ctl.references();
        assert_eq!(r.i_qs, 0.0);
        assert_abs_diff_eq!(r.i_ds, 2.0, epsilon = 1e-12);
        assert_eq!(ctl.theta(), 0.0);
    }

    #[test]
    fn config_rejects_excess_clamp() {
        let c = FocConfig { torque_max: 60.0, ..FocConfig::default() };
        assert!(c.validate(&params()).is_err());
    }
}
