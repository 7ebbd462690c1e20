//! Switching-event accounting and signal statistics.

use crate::error::{Error, Result};
use crate::inverter::SwitchState;
use crate::transforms::Abc;

/// Default averaging window for the switching frequency (s).
pub const DEFAULT_WINDOW: f64 = 0.1;

/// Default loss-proxy constant (J per V·A per transition).
pub const DEFAULT_LOSS_COEFFICIENT: f64 = 1e-6;

/// Per-leg transition counts over one averaging window.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingCounter {
    counts: [u64; 3],
    window_start: f64,
    window_len: f64,
    elapsed: f64,
    transition_currents: Vec<f64>,
}

impl SwitchingCounter {
    pub fn new(window_start: f64, window_len: f64) -> Self {
        Self {
            counts: [0; 3],
            window_start,
            window_len,
            elapsed: 0.0,
            transition_currents: Vec::new(),
        }
    }

    pub fn counts(&self) -> [u64; 3] {
        self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn window_start(&self) -> f64 {
        self.window_start
    }

    pub fn window_len(&self) -> f64 {
        self.window_len
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Sets the time elapsed since the window start.
    pub fn set_elapsed(&mut self, elapsed: f64) {
        self.elapsed = elapsed;
    }

    /// Marks the window as fully elapsed.
    pub fn finish(&mut self) {
        self.elapsed = self.window_len;
    }

    pub fn is_complete(&self) -> bool {
        self.elapsed >= self.window_len
    }

    /// |i| of the switched leg for every transition recorded with currents.
    pub fn transition_currents(&self) -> &[f64] {
        &self.transition_currents
    }

    /// Counts one transition for each leg whose command changed. Returns the
    /// number of legs that changed.
    pub fn record_transition(&mut self, prev: SwitchState, next: SwitchState) -> u32 {
        let mut changed = 0;
        for (count, (p, n)) in self.counts.iter_mut().zip(prev.legs().iter().zip(next.legs())) {
            if *p != n {
                *count += 1;
                changed += 1;
            }
        }
        changed
    }

    /// Like [`record_transition`](Self::record_transition), also remembering
    /// the magnitude of the switched leg's current.
    pub fn record_transition_with_currents(
        &mut self,
        prev: SwitchState,
        next: SwitchState,
        currents: Abc,
    ) -> u32 {
        let i = currents.as_array();
        for (leg, (p, n)) in prev.legs().iter().zip(next.legs()).enumerate() {
            if *p != n {
                self.transition_currents.push(i[leg].abs());
            }
        }
        self.record_transition(prev, next)
    }

    /// Starts a new empty window at `window_start`.
    pub fn reset(&mut self, window_start: f64) {
        self.counts = [0; 3];
        self.window_start = window_start;
        self.elapsed = 0.0;
        self.transition_currents.clear();
    }
}

/// Inverter switching frequency over a completed window: the mean of the
/// three leg frequencies, where one switching cycle is two transitions.
pub fn window_frequency(counter: &SwitchingCounter) -> Result<f64> {
    if !counter.is_complete() {
        return Err(Error::IncompleteWindow {
            elapsed: counter.elapsed(),
            window: counter.window_len(),
        });
    }
    let per_leg = counter.counts().map(|n| n as f64 / (2.0 * counter.window_len()));
    Ok(per_leg.iter().sum::<f64>() / 3.0)
}

/// Relative switching-loss figure for a completed window:
/// `k·Σ V_dc·|i|` over the transitions in the window.
pub fn switching_loss_proxy(
    counter: &SwitchingCounter,
    v_dc: f64,
    i_at_transitions: &[f64],
    coefficient: f64,
) -> Result<f64> {
    if !counter.is_complete() {
        return Err(Error::IncompleteWindow {
            elapsed: counter.elapsed(),
            window: counter.window_len(),
        });
    }
    if i_at_transitions.len() as u64 != counter.total() {
        return Err(Error::invalid(
            "i_at_transitions",
            format!(
                "{} currents given for {} transitions",
                i_at_transitions.len(),
                counter.total()
            ),
        ));
    }
    Ok(coefficient * v_dc * i_at_transitions.iter().map(|i| i.abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RippleStats {
    pub mean: f64,
    pub peak_to_peak: f64,
    pub std_dev: f64,
    /// Window length (s).
    pub window: f64,
}

/// Mean, peak-to-peak and population standard deviation of the samples with
/// `t0 <= t <= t1`.
pub fn torque_ripple(trace: &[(f64, f64)], t0: f64, t1: f64) -> Result<RippleStats> {
    let values: Vec<f64> = trace
        .iter()
        .filter(|(t, _)| *t >= t0 && *t <= t1)
        .map(|(_, v)| *v)
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyWindow { t0, t1 });
    }
    if values.len() < 2 {
        return Err(Error::invalid("window", "at least two samples are required"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    // a constant signal has no spread even when the mean does not round exactly
    let variance = if max == min {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    };
    Ok(RippleStats {
        mean,
        peak_to_peak: max - min,
        std_dev: variance.sqrt(),
        window: t1 - t0,
    })
}

/// Earliest time in `[from, until]` after which every sample stays within
/// `tolerance·|target|` of `target`. `None` if the last sample in range is
/// outside the band or there are no samples.
pub fn settling_time(
    samples: &[(f64, f64)],
    target: f64,
    tolerance: f64,
    from: f64,
    until: f64,
) -> Option<f64> {
    let band = tolerance * target.abs();
    let mut settled_at = None;
    for &(t, v) in samples.iter().filter(|(t, _)| *t >= from && *t <= until) {
        if (v - target).abs() > band {
            settled_at = None;
        } else if settled_at.is_none() {
            settled_at = Some(t);
        }
    }
    settled_at
}

/// Median of a non-empty slice; the mean of the two middle values for even
/// lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    })
}
