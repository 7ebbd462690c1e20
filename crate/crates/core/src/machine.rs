//! Induction machine plant in the stationary αβ frame.
//!
//! Stator and rotor flux linkages are the electrical state variables; the
//! currents are recovered from them by inverting the inductance matrix. The
//! state is advanced with classical fixed-step RK4.
//!
//! ```text
//! dλs/dt = vs − Rs·is
//! dλr/dt = −Rr·ir + j·p·ωm·λr
//! J·dωm/dt = Te − T_load − B·ωm
//! ```

use crate::error::{Error, Result};
use crate::transforms::{wrap_angle, AlphaBeta};

/// Upper bound on the plant step size.
pub const MAX_STEP: f64 = 100e-6;

/// Electrical and mechanical constants of the machine and its DC link.
///
/// Only `r_s` and the nameplate values are published for the reference
/// 4 kW motor; the equivalent-circuit values in [`Default`] are estimates
/// representative of that size class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Stator resistance (Ω).
    pub r_s: f64,
    /// Rotor resistance referred to the stator (Ω).
    pub r_r: f64,
    /// Stator self-inductance (H).
    pub l_s: f64,
    /// Rotor self-inductance (H).
    pub l_r: f64,
    /// Mutual inductance (H).
    pub l_m: f64,
    /// Pole pairs.
    pub pole_pairs: u32,
    /// Rotor inertia (kg·m²).
    pub inertia: f64,
    /// Viscous friction (N·m·s/rad).
    pub friction: f64,
    /// DC-link voltage (V).
    pub v_dc: f64,
    /// Rated mechanical speed (rpm).
    pub rated_speed: f64,
    /// Rated torque (N·m).
    pub rated_torque: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            r_s: 7.2,
            r_r: 4.2,
            l_s: 0.462,
            l_r: 0.462,
            l_m: 0.44,
            pole_pairs: 2,
            inertia: 0.012,
            friction: 0.001,
            v_dc: 540.0,
            rated_speed: 1425.0,
            // 4 kW at 1425 rpm
            rated_torque: 4000.0 / (1425.0 * std::f64::consts::TAU / 60.0),
        }
    }
}

impl MotorParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("motor.R_s", self.r_s),
            ("motor.R_r", self.r_r),
            ("motor.L_s", self.l_s),
            ("motor.L_r", self.l_r),
            ("motor.L_m", self.l_m),
            ("motor.J", self.inertia),
            ("motor.V_dc", self.v_dc),
            ("motor.rated_speed", self.rated_speed),
            ("motor.rated_torque", self.rated_torque),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(Error::invalid("motor.B", format!("must be >= 0, got {}", self.friction)));
        }
        if self.pole_pairs < 1 {
            return Err(Error::invalid("motor.p", "must be >= 1"));
        }
        if self.inductance_determinant() <= 0.0 {
            return Err(Error::invalid(
                "motor.L_m",
                "L_s·L_r − L_m² must be > 0 (leakage coefficient outside (0, 1))",
            ));
        }
        Ok(())
    }

    /// `L_s·L_r − L_m²`.
    pub fn inductance_determinant(&self) -> f64 {
        self.l_s * self.l_r - self.l_m * self.l_m
    }

    /// Leakage coefficient σ = 1 − L_m²/(L_s·L_r).
    pub fn leakage_coefficient(&self) -> f64 {
        1.0 - self.l_m * self.l_m / (self.l_s * self.l_r)
    }

    pub fn p(&self) -> f64 {
        f64::from(self.pole_pairs)
    }
}

/// Continuous plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorState {
    /// Stator flux linkage (Wb).
    pub stator_flux: AlphaBeta,
    /// Rotor flux linkage (Wb).
    pub rotor_flux: AlphaBeta,
    /// Mechanical speed (rad/s).
    pub speed: f64,
    /// Mechanical angle (rad) in `[0, 2π)`.
    pub angle: f64,
}

impl MotorState {
    pub fn is_finite(&self) -> bool {
        self.stator_flux.is_finite()
            && self.rotor_flux.is_finite()
            && self.speed.is_finite()
            && self.angle.is_finite()
    }
}

/// Stator and rotor currents implied by a flux state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Currents {
    pub stator: AlphaBeta,
    pub rotor: AlphaBeta,
}

/// Electromagnetic torque `(3/2)·p·(λsα·isβ − λsβ·isα)`.
pub fn plant_torque(state: &MotorState, i_s: AlphaBeta, params: &MotorParams) -> f64 {
    1.5 * params.p() * state.stator_flux.cross(i_s)
}

/// Inverts the flux/current relation `λs = Ls·is + Lm·ir`, `λr = Lr·ir + Lm·is`.
pub fn derive_currents(state: &MotorState, params: &MotorParams) -> Result<Currents> {
    let det = params.inductance_determinant();
    if det <= 0.0 {
        return Err(Error::invalid("motor.L_m", "L_s·L_r − L_m² must be > 0"));
    }
    Ok(currents_unchecked(state.stator_flux, state.rotor_flux, params, 1.0 / det))
}

fn currents_unchecked(
    stator_flux: AlphaBeta,
    rotor_flux: AlphaBeta,
    params: &MotorParams,
    inv_det: f64,
) -> Currents {
    Currents {
        stator: (stator_flux * params.l_r - rotor_flux * params.l_m) * inv_det,
        rotor: (rotor_flux * params.l_s - stator_flux * params.l_m) * inv_det,
    }
}

#[derive(Clone, Copy)]
struct Derivative {
    stator_flux: AlphaBeta,
    rotor_flux: AlphaBeta,
    speed: f64,
    angle: f64,
}

#[derive(Clone, Copy)]
struct Inputs {
    v_s: AlphaBeta,
    t_load: f64,
}

fn derivative(x: &MotorState, u: Inputs, params: &MotorParams, inv_det: f64) -> Derivative {
    let i = currents_unchecked(x.stator_flux, x.rotor_flux, params, inv_det);
    let electrical_speed = params.p() * x.speed;
    let torque = 1.5 * params.p() * x.stator_flux.cross(i.stator);
    Derivative {
        stator_flux: u.v_s - i.stator * params.r_s,
        rotor_flux: x.rotor_flux.rotate_quarter() * electrical_speed - i.rotor * params.r_r,
        speed: (torque - u.t_load - params.friction * x.speed) / params.inertia,
        angle: x.speed,
    }
}

fn offset(x: &MotorState, k: &Derivative, h: f64) -> MotorState {
    MotorState {
        stator_flux: x.stator_flux + k.stator_flux * h,
        rotor_flux: x.rotor_flux + k.rotor_flux * h,
        speed: x.speed + k.speed * h,
        angle: x.angle + k.angle * h,
    }
}

/// Advances the plant by one RK4 step of length `dt` with the stator voltage
/// and load torque held constant over the step.
pub fn step(
    state: &MotorState,
    v_s: AlphaBeta,
    t_load: f64,
    dt: f64,
    params: &MotorParams,
) -> Result<MotorState> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(Error::invalid("dt", format!("must be in (0, {MAX_STEP}], got {dt}")));
    }
    if !v_s.is_finite() {
        return Err(Error::NonFinite { what: "stator voltage" });
    }
    if !t_load.is_finite() {
        return Err(Error::NonFinite { what: "load torque" });
    }
    let det = params.inductance_determinant();
    if det <= 0.0 {
        return Err(Error::invalid("motor.L_m", "L_s·L_r − L_m² must be > 0"));
    }
    let inv_det = 1.0 / det;
    let u = Inputs { v_s, t_load };

    let k1 = derivative(state, u, params, inv_det);
    let k2 = derivative(&offset(state, &k1, 0.5 * dt), u, params, inv_det);
    let k3 = derivative(&offset(state, &k2, 0.5 * dt), u, params, inv_det);
    let k4 = derivative(&offset(state, &k3, dt), u, params, inv_det);

    let w = dt / 6.0;
    let combine = |a: f64, b: f64, c: f64, d: f64| w * (a + 2.0 * b + 2.0 * c + d);
    let next = MotorState {
        stator_flux: AlphaBeta::new(
            state.stator_flux.alpha
                + combine(
                    k1.stator_flux.alpha,
                    k2.stator_flux.alpha,
                    k3.stator_flux.alpha,
                    k4.stator_flux.alpha,
                ),
            state.stator_flux.beta
                + combine(
                    k1.stator_flux.beta,
                    k2.stator_flux.beta,
                    k3.stator_flux.beta,
                    k4.stator_flux.beta,
                ),
        ),
        rotor_flux: AlphaBeta::new(
            state.rotor_flux.alpha
                + combine(
                    k1.rotor_flux.alpha,
                    k2.rotor_flux.alpha,
                    k3.rotor_flux.alpha,
                    k4.rotor_flux.alpha,
                ),
            state.rotor_flux.beta
                + combine(
                    k1.rotor_flux.beta,
                    k2.rotor_flux.beta,
                    k3.rotor_flux.beta,
                    k4.rotor_flux.beta,
                ),
        ),
        speed: state.speed + combine(k1.speed, k2.speed, k3.speed, k4.speed),
        angle: wrap_angle(state.angle + combine(k1.angle, k2.angle, k3.angle, k4.angle)),
    };
    if !next.is_finite() {
        return Err(Error::NonFinite { what: "plant state" });
    }
    Ok(next)
}

/// Magnetic co-energy stored in the machine, `(3/2)·½·(λs·is + λr·ir)` (J).
pub fn magnetic_energy(state: &MotorState, params: &MotorParams) -> Result<f64> {
    let i = derive_currents(state, params)?;
    Ok(0.75 * (state.stator_flux.dot(i.stator) + state.rotor_flux.dot(i.rotor)))
}
