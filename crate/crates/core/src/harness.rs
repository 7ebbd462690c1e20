//! Closed-loop scenario runner.
//!
//! The plant is stepped every `plant_dt`; the controller runs every `ctrl_dt`
//! and its switch state is held in between. Switching events are counted at
//! full rate; only trace logging is decimated.

use crate::config::{ControllerKind, LoadProfile, ScenarioConfig};
use crate::dtc::DtcController;
use crate::error::{Error, Result};
use crate::foc::{FocController, SpeedPi};
use crate::inverter::{output_voltage, SwitchState};
use crate::machine::{derive_currents, plant_torque, step, MotorState};
use crate::metrics::{
    median, settling_time, switching_loss_proxy, torque_ripple, window_frequency, RippleStats,
    SwitchingCounter,
};
use crate::transforms::{inverse_clarke, Abc};

const RAD_S_TO_RPM: f64 = 60.0 / std::f64::consts::TAU;

/// Speed band used for settling and recovery figures (fraction of setpoint).
pub const SPEED_TOLERANCE: f64 = 0.01;

/// One logged simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Mechanical speed (rpm).
    pub speed: f64,
    /// Plant electromagnetic torque (N·m).
    pub torque: f64,
    /// Torque command from the speed loop (N·m).
    pub torque_ref: f64,
    pub load: f64,
    /// Estimated stator flux magnitude for DTC, plant stator flux magnitude
    /// for FOC (Wb).
    pub flux: f64,
    pub currents: Abc,
    pub switches: SwitchState,
    /// Switching frequency of the last completed window (Hz).
    pub f_sw: Option<f64>,
}

/// A completed switching-frequency window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    pub counts: [u64; 3],
    pub frequency: f64,
    pub loss_proxy: f64,
}

/// Scalar results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub controller: ControllerKind,
    pub speed_ref: f64,
    pub load_profile: LoadProfile,
    pub duration: f64,
    pub steady_start: f64,
    pub steady_end: f64,
    /// Median switching frequency over complete windows inside the steady
    /// interval (Hz).
    pub median_frequency: Option<f64>,
    pub median_loss_proxy: Option<f64>,
    pub ripple: RippleStats,
    /// Mean steady-state speed error relative to the setpoint (%).
    pub speed_error_pct: f64,
    /// Time at which the speed enters and stays within ±1% before the first
    /// load step (s).
    pub settling_time: Option<f64>,
    /// Time from the first load step until the speed is back within ±1% for
    /// good (s).
    pub recovery_time: Option<f64>,
    pub controller_calls: u64,
    /// Hysteresis band settings used by the run, for the report.
    pub bands: Vec<(&'static str, f64)>,
    pub windows: Vec<WindowRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub trace: Vec<TraceRow>,
    pub summary: RunSummary,
}

enum Drive {
    Foc(FocController),
    Dtc { ctl: DtcController, pi: SpeedPi },
}

impl Drive {
    fn new(config: &ScenarioConfig) -> Result<Self> {
        Ok(match config.controller {
            ControllerKind::Foc => Drive::Foc(FocController::new(config.foc, config.motor, config.ctrl_dt)?),
            ControllerKind::Dtc => Drive::Dtc {
                ctl: DtcController::new(config.dtc, config.motor.r_s, config.motor.pole_pairs, config.ctrl_dt)?,
                pi: SpeedPi::from_config(&config.foc),
            },
        })
    }
}

fn bands(config: &ScenarioConfig) -> Vec<(&'static str, f64)> {
    match config.controller {
        ControllerKind::Foc => vec![("foc.i_band", config.foc.current_band)],
        ControllerKind::Dtc => vec![
            ("dtc.torque_band", config.dtc.torque_band),
            ("dtc.flux_band", config.dtc.flux_band),
        ],
    }
}

/// Runs one deterministic closed-loop simulation.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    let params = config.motor;
    let dt = config.plant_dt;
    let total = config.total_steps();
    let per_ctrl = config.steps_per_control();
    let per_window = config.steps_per_window();
    let decimation = u64::from(config.trace_decimation);
    let steady_start = config.steady_start();
    let speed_ref = config.speed_ref_rad();

    let mut drive = Drive::new(config)?;
    let mut state = MotorState::default();
    let mut switches = SwitchState::default();
    let mut torque_ref = 0.0;
    let mut counter = SwitchingCounter::new(0.0, config.switching_window);
    let mut last_frequency = None;
    let mut windows = Vec::new();
    let mut trace = Vec::with_capacity((total / decimation + 1) as usize);
    let mut steady_torque = Vec::new();
    let mut speed_samples = Vec::with_capacity((total / per_ctrl + 1) as usize);
    let mut controller_calls = 0u64;

    let numerical = |t: f64| move |e: Error| Error::Numerical { t, source: Box::new(e) };

    for k in 0..total {
        let t = k as f64 * dt;
        let currents = derive_currents(&state, &params).map_err(numerical(t))?;
        let i_abc = inverse_clarke(currents.stator);

        if k % per_ctrl == 0 && k + per_ctrl <= total {
            let next = match &mut drive {
                Drive::Foc(ctl) => {
                    let sw = ctl.step(speed_ref, state.speed, i_abc);
                    torque_ref = ctl.references().torque;
                    sw
                }
                Drive::Dtc { ctl, pi } => {
                    torque_ref = pi.update(speed_ref, state.speed, config.ctrl_dt);
                    let v = output_voltage(switches, params.v_dc);
                    ctl.step(v, currents.stator, torque_ref).map_err(numerical(t))?
                }
            };
            counter.record_transition_with_currents(switches, next, i_abc);
            switches = next;
            controller_calls += 1;
            speed_samples.push((t, state.speed * RAD_S_TO_RPM));
        }

        let torque = plant_torque(&state, currents.stator, &params);
        let load = config.load_profile.torque_at(t);
        if k % decimation == 0 {
            let flux = match &drive {
                Drive::Foc(_) => state.stator_flux.norm(),
                Drive::Dtc { ctl, .. } => ctl.estimate().magnitude,
            };
            trace.push(TraceRow {
                t,
                speed: state.speed * RAD_S_TO_RPM,
                torque,
                torque_ref,
                load,
                flux,
                currents: i_abc,
                switches,
                f_sw: last_frequency,
            });
        }
        if t >= steady_start {
            steady_torque.push((t, torque));
        }

        let v = output_voltage(switches, params.v_dc);
        state = step(&state, v, load, dt, &params).map_err(numerical(t))?;

        if (k + 1) % per_window == 0 {
            counter.finish();
            let frequency = window_frequency(&counter)?;
            let loss_proxy = switching_loss_proxy(
                &counter,
                params.v_dc,
                counter.transition_currents(),
                config.loss_coefficient,
            )?;
            let end = (k + 1) as f64 * dt;
            windows.push(WindowRecord {
                start: counter.window_start(),
                end,
                counts: counter.counts(),
                frequency,
                loss_proxy,
            });
            last_frequency = Some(frequency);
            counter.reset(end);
        }
    }

    let end_time = total as f64 * dt;
    let final_currents = derive_currents(&state, &params).map_err(numerical(end_time))?;
    if end_time >= steady_start {
        steady_torque.push((end_time, plant_torque(&state, final_currents.stator, &params)));
    }
    speed_samples.push((end_time, state.speed * RAD_S_TO_RPM));

    let summary = summarize(config, &windows, &steady_torque, &speed_samples, controller_calls)?;
    Ok(RunOutput {
        config: config.clone(),
        trace,
        summary,
    })
}

pub(crate) fn summarize(
    config: &ScenarioConfig,
    windows: &[WindowRecord],
    steady_torque: &[(f64, f64)],
    speed_samples: &[(f64, f64)],
    controller_calls: u64,
) -> Result<RunSummary> {
    let steady_start = config.steady_start();
    let end = config.duration;
    // tolerate rounding in window boundaries
    let eps = 1e-9 * end.max(1.0);
    let steady: Vec<&WindowRecord> = windows.iter().filter(|w| w.start >= steady_start - eps).collect();
    let median_frequency = median(&steady.iter().map(|w| w.frequency).collect::<Vec<_>>());
    let median_loss_proxy = median(&steady.iter().map(|w| w.loss_proxy).collect::<Vec<_>>());

    let mut ripple = torque_ripple(steady_torque, steady_start - eps, end + eps)?;
    ripple.window = end - steady_start;

    let steady_speed: Vec<f64> = speed_samples
        .iter()
        .filter(|(t, _)| *t >= steady_start - eps)
        .map(|(_, v)| *v)
        .collect();
    let mean_speed = steady_speed.iter().sum::<f64>() / steady_speed.len().max(1) as f64;
    let speed_error_pct = if config.speed_ref != 0.0 {
        100.0 * (mean_speed - config.speed_ref) / config.speed_ref
    } else {
        mean_speed
    };

    let first_load = config.load_profile.first_loaded_step().map(|s| s.time);
    let settle_until = first_load.unwrap_or(end);
    let settling = settling_time(speed_samples, config.speed_ref, SPEED_TOLERANCE, 0.0, settle_until);
    let recovery = first_load.and_then(|t_load| {
        settling_time(speed_samples, config.speed_ref, SPEED_TOLERANCE, t_load, end).map(|t| t - t_load)
    });

    Ok(RunSummary {
        controller: config.controller,
        speed_ref: config.speed_ref,
        load_profile: config.load_profile.clone(),
        duration: config.duration,
        steady_start,
        steady_end: end,
        median_frequency,
        median_loss_proxy,
        ripple,
        speed_error_pct,
        settling_time: settling,
        recovery_time: recovery,
        controller_calls,
        bands: bands(config),
        windows: windows.to_vec(),
    })
}

/// `100·(f_foc − f_dtc)/f_dtc`.
pub fn percent_excess(f_foc: f64, f_dtc: f64) -> f64 {
    100.0 * (f_foc - f_dtc) / f_dtc
}

/// FOC-versus-DTC comparison of two runs of the same operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub foc: RunSummary,
    pub dtc: RunSummary,
    /// `f_foc / f_dtc`.
    pub frequency_ratio: f64,
    /// `100·(f_foc − f_dtc)/f_dtc`.
    pub percent_excess: f64,
    /// `p2p_dtc / p2p_foc`.
    pub ripple_ratio: f64,
}

/// Compares one FOC and one DTC run (in either order) that share the speed
/// setpoint and load profile.
pub fn compare(a: &RunSummary, b: &RunSummary) -> Result<ComparisonReport> {
    let (foc, dtc) = match (a.controller, b.controller) {
        (ControllerKind::Foc, ControllerKind::Dtc) => (a, b),
        (ControllerKind::Dtc, ControllerKind::Foc) => (b, a),
        (x, y) => {
            return Err(Error::Mismatch(format!(
                "need one foc and one dtc run, got {x} and {y}"
            )))
        }
    };
    if foc.speed_ref != dtc.speed_ref {
        return Err(Error::Mismatch(format!(
            "speed_ref differs: {} vs {} rpm",
            foc.speed_ref, dtc.speed_ref
        )));
    }
    if foc.load_profile != dtc.load_profile {
        return Err(Error::Mismatch(format!(
            "load_profile differs: `{}` vs `{}`",
            foc.load_profile, dtc.load_profile
        )));
    }
    let f_foc = foc
        .median_frequency
        .ok_or_else(|| Error::Mismatch("foc run has no steady switching window".into()))?;
    let f_dtc = dtc
        .median_frequency
        .ok_or_else(|| Error::Mismatch("dtc run has no steady switching window".into()))?;
    Ok(ComparisonReport {
        foc: foc.clone(),
        dtc: dtc.clone(),
        frequency_ratio: f_foc / f_dtc,
        percent_excess: percent_excess(f_foc, f_dtc),
        ripple_ratio: dtc.ripple.peak_to_peak / foc.ripple.peak_to_peak,
    })
}

/// The four reference experiments and their two comparisons.
#[derive(Debug, Clone)]
pub struct Replication {
    /// DTC unloaded, FOC unloaded, DTC loaded, FOC loaded.
    pub runs: Vec<RunOutput>,
    /// Unloaded, loaded.
    pub reports: Vec<ComparisonReport>,
}

/// Scenario names used for the reference experiments, in run order.
pub const REPLICATION_NAMES: [&str; 4] = ["dtc_noload", "foc_noload", "dtc_loaded", "foc_loaded"];

/// Time and magnitude of the reference load step.
pub const REFERENCE_LOAD: (f64, f64) = (1.5, 10.0);

/// Configs for the four reference experiments derived from `base`.
pub fn replication_configs(base: &ScenarioConfig) -> Vec<ScenarioConfig> {
    let loaded = LoadProfile::step(REFERENCE_LOAD.0, REFERENCE_LOAD.1);
    [
        (ControllerKind::Dtc, LoadProfile::none()),
        (ControllerKind::Foc, LoadProfile::none()),
        (ControllerKind::Dtc, loaded.clone()),
        (ControllerKind::Foc, loaded),
    ]
    .into_iter()
    .map(|(controller, load_profile)| ScenarioConfig {
        controller,
        load_profile,
        ..base.clone()
    })
    .collect()
}

/// Runs DTC and FOC unloaded and with the reference load step, one thread per
/// scenario, and compares each load case.
pub fn replicate_paper(base: &ScenarioConfig) -> Result<Replication> {
    let configs = replication_configs(base);
    let results: Vec<Result<RunOutput>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_scenario(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let reports = vec![
        compare(&runs[0].summary, &runs[1].summary)?,
        compare(&runs[2].summary, &runs[3].summary)?,
    ];
    Ok(Replication { runs, reports })
}
