//! Independent reference computations shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use drivesim_core::dtc::{estimate_flux, select_vector};
use drivesim_core::foc::inverse_park_abc;
use drivesim_core::inverter::{output_voltage, VoltageVectorId};
use drivesim_core::machine::{derive_currents, magnetic_energy, plant_torque, step, Currents};
use drivesim_core::{clarke, inverse_clarke, AlphaBeta, MotorParams, MotorState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn params() -> MotorParams {
    MotorParams::default()
}

/// Practically infinite inertia: the rotor does not move over a test run.
pub fn locked(params: MotorParams) -> MotorParams {
    MotorParams {
        inertia: 1e12,
        ..params
    }
}

/// Solves `[[a, b], [c, d]]·x = r` by Gaussian elimination with partial pivoting.
pub fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> [f64; 2] {
    let (mut m, mut r) = (m, r);
    if m[1][0].abs() > m[0][0].abs() {
        m.swap(0, 1);
        r.swap(0, 1);
    }
    let f = m[1][0] / m[0][0];
    let m11 = m[1][1] - f * m[0][1];
    let r1 = r[1] - f * r[0];
    let x1 = r1 / m11;
    let x0 = (r[0] - m[0][1] * x1) / m[0][0];
    [x0, x1]
}

/// Stator and rotor currents from fluxes by solving the inductance system per axis.
pub fn currents_by_solve(state: &MotorState, p: &MotorParams) -> Currents {
    let l = [[p.l_s, p.l_m], [p.l_m, p.l_r]];
    let a = solve2(l, [state.stator_flux.alpha, state.rotor_flux.alpha]);
    let b = solve2(l, [state.stator_flux.beta, state.rotor_flux.beta]);
    Currents {
        stator: AlphaBeta::new(a[0], b[0]),
        rotor: AlphaBeta::new(a[1], b[1]),
    }
}

/// Largest |λsα| deviation over 1 ms of a 100 V step into a locked rotor,
/// against a current-form Heun integration at a 100× finer step.
pub fn fine_step_locked_rotor_error() -> f64 {
    let p = locked(params());
    let v = 100.0;
    let dt = 5e-6;
    let substeps = 100;
    let h = dt / substeps as f64;
    let l = [[p.l_s, p.l_m], [p.l_m, p.l_r]];
    // α-axis currents only: L·di/dt = [v, 0] − diag(Rs, Rr)·i
    let deriv = |i: [f64; 2]| solve2(l, [v - p.r_s * i[0], -p.r_r * i[1]]);

    let mut state = MotorState::default();
    let mut i = [0.0, 0.0];
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        state = step(&state, AlphaBeta::new(v, 0.0), 0.0, dt, &p).unwrap();
        for _ in 0..substeps {
            let k1 = deriv(i);
            let pred = [i[0] + h * k1[0], i[1] + h * k1[1]];
            let k2 = deriv(pred);
            i = [i[0] + 0.5 * h * (k1[0] + k2[0]), i[1] + 0.5 * h * (k1[1] + k2[1])];
        }
        let flux = p.l_s * i[0] + p.l_m * i[1];
        worst = worst.max((state.stator_flux.alpha - flux).abs());
    }
    worst
}

/// Stator current phasor of a locked rotor fed from a balanced 50 Hz source,
/// from the per-phase equivalent circuit.
pub fn locked_rotor_phasor(p: &MotorParams, amplitude: f64, freq: f64) -> Complex64 {
    let w = TAU * freq;
    let j = Complex64::i();
    let z_s = Complex64::new(p.r_s, 0.0) + j * w * (p.l_s - p.l_m);
    let z_r = Complex64::new(p.r_r, 0.0) + j * w * (p.l_r - p.l_m);
    let z_m = j * w * p.l_m;
    let z = z_s + z_m * z_r / (z_m + z_r);
    Complex64::new(amplitude, 0.0) / z
}

/// Relative error between the simulated steady locked-rotor stator current
/// and the equivalent-circuit phasor.
pub fn locked_rotor_phasor_error() -> f64 {
    let p = locked(params());
    let (amplitude, freq, dt) = (200.0, 50.0, 5e-6);
    let w = TAU * freq;
    let per_period = (1.0 / (freq * dt)).round() as usize;
    let settle_periods = 40;
    let mut state = MotorState::default();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..per_period * (settle_periods + 1) {
        let t = k as f64 * dt;
        if k >= per_period * settle_periods {
            let i = derive_currents(&state, &p).unwrap().stator;
            // single-bin DFT of i_α over one period
            acc += Complex64::from_polar(i.alpha, -w * t);
        }
        let tm = t + 0.5 * dt;
        let v = AlphaBeta::new(amplitude * (w * tm).cos(), amplitude * (w * tm).sin());
        state = step(&state, v, 0.0, dt, &p).unwrap();
    }
    let simulated = acc * (2.0 / per_period as f64);
    let expected = locked_rotor_phasor(&p, amplitude, freq);
    (simulated - expected).norm() / expected.norm()
}

/// Energy bookkeeping accumulated between two instants.
#[derive(Debug, Default, Clone, Copy)]
pub struct EnergyLedger {
    pub electrical_in: f64,
    pub magnetic_change: f64,
    pub copper_loss: f64,
    pub air_gap: f64,
    pub kinetic_change: f64,
    pub friction_loss: f64,
    pub load_work: f64,
}

impl EnergyLedger {
    /// Ledger of two back-to-back intervals.
    pub fn merge(&self, next: &EnergyLedger) -> EnergyLedger {
        EnergyLedger {
            electrical_in: self.electrical_in + next.electrical_in,
            magnetic_change: self.magnetic_change + next.magnetic_change,
            copper_loss: self.copper_loss + next.copper_loss,
            air_gap: self.air_gap + next.air_gap,
            kinetic_change: self.kinetic_change + next.kinetic_change,
            friction_loss: self.friction_loss + next.friction_loss,
            load_work: self.load_work + next.load_work,
        }
    }

    /// `|in − (ΔW + losses + air-gap)| / in`.
    pub fn electrical_error(&self) -> f64 {
        (self.electrical_in - (self.magnetic_change + self.copper_loss + self.air_gap)).abs() / self.electrical_in
    }

    /// Mechanical side, normalised by the electrical input.
    pub fn mechanical_error(&self) -> f64 {
        (self.air_gap - (self.kinetic_change + self.friction_loss + self.load_work)).abs() / self.electrical_in
    }
}

/// One-second ledgers starting every 0.5 s over a 2 s direct-on-line start.
pub fn energy_balance_1s(dt: f64) -> Vec<EnergyLedger> {
    let halves = energy_balance(dt, 2.0, 0.5);
    halves.windows(2).map(|w| w[0].merge(&w[1])).collect()
}

/// Direct-on-line start against a constant load, bookkept over consecutive
/// windows of `window` seconds.
pub fn energy_balance(dt: f64, duration: f64, window: f64) -> Vec<EnergyLedger> {
    let p = params();
    let (amplitude, w, load) = (300.0, TAU * 50.0, 2.0);
    let steps = (duration / dt).round() as usize;
    let per_window = (window / dt).round() as usize;
    let mut state = MotorState::default();
    let mut ledgers = Vec::new();
    let mut ledger = EnergyLedger::default();
    let mut w_start = magnetic_energy(&state, &p).unwrap();
    let mut ke_start = 0.5 * p.inertia * state.speed * state.speed;
    for k in 0..steps {
        let t = k as f64 * dt;
        let tm = t + 0.5 * dt;
        let v = AlphaBeta::new(amplitude * (w * tm).cos(), amplitude * (w * tm).sin());
        let next = step(&state, v, load, dt, &p).unwrap();

        let i0 = currents_by_solve(&state, &p);
        let i1 = currents_by_solve(&next, &p);
        let te0 = plant_torque(&state, i0.stator, &p);
        let te1 = plant_torque(&next, i1.stator, &p);
        let trap = |a: f64, b: f64| 0.5 * (a + b) * dt;
        ledger.electrical_in += 1.5 * v.dot((i0.stator + i1.stator) * 0.5) * dt;
        ledger.copper_loss += 1.5
            * trap(
                p.r_s * i0.stator.dot(i0.stator) + p.r_r * i0.rotor.dot(i0.rotor),
                p.r_s * i1.stator.dot(i1.stator) + p.r_r * i1.rotor.dot(i1.rotor),
            );
        ledger.air_gap += trap(te0 * state.speed, te1 * next.speed);
        ledger.friction_loss += trap(p.friction * state.speed.powi(2), p.friction * next.speed.powi(2));
        ledger.load_work += trap(load * state.speed, load * next.speed);
        state = next;

        if (k + 1) % per_window == 0 {
            let w_end = magnetic_energy(&state, &p).unwrap();
            let ke_end = 0.5 * p.inertia * state.speed * state.speed;
            ledger.magnetic_change = w_end - w_start;
            ledger.kinetic_change = ke_end - ke_start;
            ledgers.push(ledger);
            ledger = EnergyLedger::default();
            w_start = w_end;
            ke_start = ke_end;
        }
    }
    ledgers
}

fn trajectory_endpoint(dt: f64, duration: f64) -> [f64; 6] {
    let p = params();
    let mut state = MotorState {
        stator_flux: AlphaBeta::new(0.8, 0.1),
        rotor_flux: AlphaBeta::new(0.7, -0.1),
        speed: 100.0,
        angle: 0.0,
    };
    let n = (duration / dt).round() as usize;
    for _ in 0..n {
        state = step(&state, AlphaBeta::new(300.0, 50.0), 3.0, dt, &p).unwrap();
    }
    [
        state.stator_flux.alpha,
        state.stator_flux.beta,
        state.rotor_flux.alpha,
        state.rotor_flux.beta,
        // scale speed and angle so all components weigh alike
        state.speed / 100.0,
        state.angle,
    ]
}

/// Observed convergence order from endpoints at dt = 100, 50, 25 µs.
pub fn rk4_observed_order() -> f64 {
    let duration = 10e-3;
    let x1 = trajectory_endpoint(100e-6, duration);
    let x2 = trajectory_endpoint(50e-6, duration);
    let x3 = trajectory_endpoint(25e-6, duration);
    let dist = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    (dist(&x1, &x2) / dist(&x2, &x3)).log2()
}

/// Max error of the Euler flux estimator over one 50 Hz period, relative to
/// the flux amplitude, with inputs sampled at each step's midpoint.
pub fn estimator_error(dt: f64) -> f64 {
    let (v_amp, i_amp, phi, r_s) = (311.0, 5.0, 0.5, 7.2);
    let w = TAU * 50.0;
    let v = |t: f64| AlphaBeta::from_angle(w * t) * v_amp;
    let i = |t: f64| AlphaBeta::from_angle(w * t - phi) * i_amp;
    // ∫0^t of the rotating vectors above
    let integral = |t: f64, amp: f64, shift: f64| {
        AlphaBeta::new(((w * t - shift).sin() + shift.sin()) / w, ((-(w * t - shift).cos()) + shift.cos()) / w) * amp
    };
    let exact = |t: f64| integral(t, v_amp, 0.0) - integral(t, i_amp, phi) * r_s;
    let amplitude = (Complex64::new(v_amp, 0.0) - Complex64::from_polar(r_s * i_amp, -phi)).norm() / w;

    let n = (0.02 / dt).round() as usize;
    let mut flux = AlphaBeta::ZERO;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let tm = (k as f64 + 0.5) * dt;
        flux = estimate_flux(flux, v(tm), i(tm), r_s, dt);
        let t = (k + 1) as f64 * dt;
        worst = worst.max((flux - exact(t)).norm());
    }
    worst / amplitude
}

/// Worst relative Clarke round-trip error over random zero-sum triples.
pub fn clarke_roundtrip_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let a: f64 = rng.gen_range(-1e3..1e3);
        let b: f64 = rng.gen_range(-1e3..1e3);
        let c = -a - b;
        let back = inverse_clarke(clarke(a, b, c));
        let scale = a.abs().max(b.abs()).max(c.abs());
        let err = (back.a - a).abs().max((back.b - b).abs()).max((back.c - c).abs());
        worst = worst.max(err / scale);
    }
    worst
}

/// Worst relative magnitude error of inverse Park followed by Clarke.
pub fn inverse_park_magnitude_error(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let i_q: f64 = rng.gen_range(-50.0..50.0);
        let i_d: f64 = rng.gen_range(-50.0..50.0);
        let theta: f64 = rng.gen_range(-4.0 * PI..4.0 * PI);
        let abc = inverse_park_abc(i_q, i_d, 0.0, theta);
        let norm = clarke(abc.a, abc.b, abc.c).norm();
        let expected = i_q.hypot(i_d);
        worst = worst.max((norm - expected).abs() / expected);
    }
    worst
}

/// Direction of flux-magnitude and torque change for each active vector.
#[derive(Debug, Clone, Copy)]
pub struct VectorEffect {
    pub index: u8,
    pub flux_rate: f64,
    pub torque_rate: f64,
}

/// Incremental flux/torque rates from a short plant step with each vector,
/// starting from a loaded operating point whose stator flux sits at `angle`.
pub fn vector_effects(angle: f64, v_dc: f64) -> Vec<VectorEffect> {
    let p = params();
    let flux = 0.86;
    // rotor flux lags the stator flux by a load angle and is slightly smaller
    let state = MotorState {
        stator_flux: AlphaBeta::from_angle(angle) * flux,
        rotor_flux: AlphaBeta::from_angle(angle - 0.15) * (flux * p.l_m / p.l_s * 0.98),
        speed: 0.0,
        angle: 0.0,
    };
    let h = 1e-7;
    let torque = |s: &MotorState| plant_torque(s, derive_currents(s, &p).unwrap().stator, &p);
    let t0 = torque(&state);
    (0..8)
        .map(|index| {
            let sw = VoltageVectorId::new(index).unwrap().switch_state();
            let next = step(&state, output_voltage(sw, v_dc), 0.0, h, &p).unwrap();
            VectorEffect {
                index,
                flux_rate: (next.stator_flux.norm() - state.stator_flux.norm()) / h,
                torque_rate: (torque(&next) - t0) / h,
            }
        })
        .collect()
}

/// Checks all 6 sectors × 6 comparator states against a brute-force search
/// over the vectors' incremental effects. Returns one message per failure.
pub fn switching_table_failures() -> Vec<String> {
    let mut failures = Vec::new();
    for sector in 1..=6u8 {
        let center = f64::from(sector - 1) * PI / 3.0;
        let effects = vector_effects(center, params().v_dc);
        let active: Vec<_> = effects.iter().filter(|e| (1..=6).contains(&e.index)).collect();
        for flux_up in [true, false] {
            for torque_demand in [1i8, 0, -1] {
                let prev = VoltageVectorId::active(i32::from(sector)).switch_state();
                let chosen = VoltageVectorId::of(select_vector(flux_up, torque_demand, sector, prev));
                let e = effects[chosen.index() as usize];
                let label = format!("sector {sector}, dphi={}, dtau={torque_demand:+}", u8::from(flux_up));
                if torque_demand == 0 {
                    // a null vector barely moves the flux compared with any active vector
                    let slowest_active = active.iter().map(|a| a.flux_rate.abs()).fold(f64::INFINITY, f64::min);
                    if chosen.is_active() || e.flux_rate.abs() >= slowest_active {
                        failures.push(format!("{label}: chose V{}", chosen.index()));
                    }
                    continue;
                }
                // brute force: among vectors moving the flux the right way,
                // the one with the strongest torque change in the demanded direction
                let want_flux = if flux_up { 1.0 } else { -1.0 };
                let want_torque = f64::from(torque_demand);
                let best = active
                    .iter()
                    .filter(|a| a.flux_rate * want_flux > 0.0)
                    .max_by(|a, b| (a.torque_rate * want_torque).total_cmp(&(b.torque_rate * want_torque)))
                    .map(|a| a.index);
                let signs_ok = e.flux_rate * want_flux > 0.0 && e.torque_rate * want_torque > 0.0;
                if !signs_ok || best != Some(chosen.index()) {
                    failures.push(format!(
                        "{label}: chose V{} (flux rate {:.3}, torque rate {:.1}), brute force V{:?}",
                        chosen.index(),
                        e.flux_rate,
                        e.torque_rate,
                        best
                    ));
                }
            }
        }
    }
    failures
}
