//! Trace CSV files, run summaries and comparison reports.
//!
//! Traces are written with nine significant digits. Summaries and reports use
//! the config file's `key = value` syntax with shortest round-trip floats, so a
//! summary read back compares exactly like the in-memory run.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::config::{parse_entries, ControllerKind, ScenarioConfig, KEYS};
use crate::error::{Error, Result};
use crate::harness::{summarize, ComparisonReport, Replication, RunSummary, TraceRow, WindowRecord, REPLICATION_NAMES};
use crate::inverter::SwitchState;
use crate::metrics::RippleStats;
use crate::transforms::Abc;

/// Trace column names, in [`TraceRow`] field order.
pub const CSV_HEADER: [&str; 13] = [
    "t", "omega_m", "T_e", "T_ref", "T_load", "lambda", "i_a", "i_b", "i_c", "s_a", "s_b", "s_c", "f_sw",
];

/// Formats `x` rounded to nine significant digits, without trailing zeros.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("float formatting round-trips");
    let magnitude = rounded.abs();
    if (1e-5..1e15).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn write_row(out: &mut String, row: &TraceRow) {
    let bit = |b: bool| if b { "1" } else { "0" };
    let legs = row.switches.legs();
    let floats = [
        row.t,
        row.speed,
        row.torque,
        row.torque_ref,
        row.load,
        row.flux,
        row.currents.a,
        row.currents.b,
        row.currents.c,
    ];
    for v in floats {
        out.push_str(&format_sig9(v));
        out.push(',');
    }
    for leg in legs {
        out.push_str(bit(leg));
        out.push(',');
    }
    if let Some(f) = row.f_sw {
        out.push_str(&format_sig9(f));
    }
    out.push('\n');
}

/// Renders a trace as CSV text, header included.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::with_capacity(128 * (trace.len() + 1));
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for row in trace {
        write_row(&mut out, row);
    }
    out
}

pub fn export_csv(trace: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &trace_to_csv(trace))
}

/// Parses CSV text produced by [`trace_to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != CSV_HEADER.join(",") {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected trace header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, got {}", CSV_HEADER.len(), fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("column `{}`: bad number `{}`", CSV_HEADER[i], fields[i]),
            })
        };
        let bit = |i: usize| -> Result<bool> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse {
                    line: line_no,
                    message: format!("column `{}`: expected 0 or 1, got `{other}`", CSV_HEADER[i]),
                }),
            }
        };
        rows.push(TraceRow {
            t: num(0)?,
            speed: num(1)?,
            torque: num(2)?,
            torque_ref: num(3)?,
            load: num(4)?,
            flux: num(5)?,
            currents: Abc::new(num(6)?, num(7)?, num(8)?),
            switches: SwitchState::new(bit(9)?, bit(10)?, bit(11)?),
            f_sw: if fields[12].is_empty() { None } else { Some(num(12)?) },
        });
    }
    Ok(rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    parse_csv(&read_file(path.as_ref())?)
}

/// Rebuilds a run summary from a logged trace and the config that produced
/// it.
///
/// Window frequencies are recovered from the `f_sw` column, so the last
/// window of the run (completed after the final row) is missing and per-leg
/// counts and the loss proxy are unavailable. Ripple and speed statistics use
/// the logged rows only and are therefore subject to trace decimation.
pub fn summary_from_trace(config: &ScenarioConfig, trace: &[TraceRow]) -> Result<RunSummary> {
    config.validate()?;
    let window = config.switching_window;
    let per_window = config.steps_per_window();
    let boundary = |n: u64| (n * per_window) as f64 * config.plant_dt;
    let eps = 1e-9 * config.duration.max(1.0);
    let mut windows = Vec::new();
    let mut n = 1;
    for row in trace {
        if row.t + eps < boundary(n) {
            continue;
        }
        // the first row at or after a window boundary reports that window
        if let Some(frequency) = row.f_sw {
            let per_leg = (frequency * 2.0 * window).round() as u64;
            windows.push(WindowRecord {
                start: boundary(n - 1),
                end: boundary(n),
                counts: [per_leg; 3],
                frequency,
                loss_proxy: f64::NAN,
            });
        }
        while boundary(n) <= row.t + eps {
            n += 1;
        }
    }
    let steady_start = config.steady_start();
    let torque: Vec<(f64, f64)> = trace
        .iter()
        .filter(|r| r.t >= steady_start - eps)
        .map(|r| (r.t, r.torque))
        .collect();
    let speed: Vec<(f64, f64)> = trace.iter().map(|r| (r.t, r.speed)).collect();
    let calls = config.total_steps() / config.steps_per_control();
    let mut summary = summarize(config, &windows, &torque, &speed, calls)?;
    summary.median_loss_proxy = None;
    Ok(summary)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// Machine-readable run summary. `defaulted` lists config keys that were not
/// given explicitly.
pub fn summary_to_kv(summary: &RunSummary, defaulted: &[&str]) -> String {
    let mut out = String::new();
    let s = summary;
    let _ = writeln!(out, "controller = {}", s.controller);
    let _ = writeln!(out, "speed_ref = {}", s.speed_ref);
    let _ = writeln!(out, "load_profile = {}", s.load_profile);
    let _ = writeln!(out, "duration = {}", s.duration);
    let _ = writeln!(out, "steady_start = {}", s.steady_start);
    let _ = writeln!(out, "steady_end = {}", s.steady_end);
    let _ = writeln!(out, "f_sw_median = {}", opt(s.median_frequency));
    let _ = writeln!(out, "loss_proxy_median = {}", opt(s.median_loss_proxy));
    let _ = writeln!(out, "ripple.mean = {}", s.ripple.mean);
    let _ = writeln!(out, "ripple.p2p = {}", s.ripple.peak_to_peak);
    let _ = writeln!(out, "ripple.std = {}", s.ripple.std_dev);
    let _ = writeln!(out, "ripple.window = {}", s.ripple.window);
    let _ = writeln!(out, "speed_error_pct = {}", s.speed_error_pct);
    let _ = writeln!(out, "settling_time = {}", opt(s.settling_time));
    let _ = writeln!(out, "recovery_time = {}", opt(s.recovery_time));
    let _ = writeln!(out, "controller_calls = {}", s.controller_calls);
    for (name, value) in &s.bands {
        let _ = writeln!(out, "band.{name} = {value}");
    }
    let defaulted = if defaulted.is_empty() {
        "none".to_string()
    } else {
        defaulted.join(", ")
    };
    let _ = writeln!(out, "defaulted = {defaulted}");
    for (i, w) in s.windows.iter().enumerate() {
        let _ = writeln!(
            out,
            "window.{i:03} = {} {} {} {} {} {} {}",
            w.start, w.end, w.counts[0], w.counts[1], w.counts[2], w.frequency, w.loss_proxy
        );
    }
    out
}

/// Parses the output of [`summary_to_kv`].
pub fn parse_summary(text: &str) -> Result<RunSummary> {
    let entries = parse_entries(text)?;
    let raw = |key: &str| -> Result<&str> {
        entries
            .get(key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::invalid(key, "missing from summary"))
    };
    let num = |key: &str| -> Result<f64> {
        let v = raw(key)?;
        v.parse().map_err(|_| Error::invalid(key, format!("expected a number, got `{v}`")))
    };
    let optional = |key: &str| -> Result<Option<f64>> {
        match raw(key)? {
            "none" => Ok(None),
            _ => num(key).map(Some),
        }
    };

    let mut bands = Vec::new();
    let mut windows = Vec::new();
    for (key, (line, value)) in &entries {
        if let Some(name) = key.strip_prefix("band.") {
            let name = KEYS
                .iter()
                .copied()
                .find(|k| *k == name)
                .ok_or_else(|| Error::invalid(key, "unknown band"))?;
            bands.push((name, num(key)?));
        } else if key.starts_with("window.") {
            let parts: Vec<&str> = value.split_whitespace().collect();
            let bad = || Error::Parse {
                line: *line,
                message: format!("malformed window record `{value}`"),
            };
            if parts.len() != 7 {
                return Err(bad());
            }
            let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
            let c = |i: usize| parts[i].parse::<u64>().map_err(|_| bad());
            windows.push(WindowRecord {
                start: f(0)?,
                end: f(1)?,
                counts: [c(2)?, c(3)?, c(4)?],
                frequency: f(5)?,
                loss_proxy: f(6)?,
            });
        }
    }
    // keep the controller's own band order
    bands.sort_by_key(|(name, _)| KEYS.iter().position(|k| k == name));

    Ok(RunSummary {
        controller: raw("controller")?.parse::<ControllerKind>()?,
        speed_ref: num("speed_ref")?,
        load_profile: raw("load_profile")?.parse()?,
        duration: num("duration")?,
        steady_start: num("steady_start")?,
        steady_end: num("steady_end")?,
        median_frequency: optional("f_sw_median")?,
        median_loss_proxy: optional("loss_proxy_median")?,
        ripple: RippleStats {
            mean: num("ripple.mean")?,
            peak_to_peak: num("ripple.p2p")?,
            std_dev: num("ripple.std")?,
            window: num("ripple.window")?,
        },
        speed_error_pct: num("speed_error_pct")?,
        settling_time: optional("settling_time")?,
        recovery_time: optional("recovery_time")?,
        controller_calls: num("controller_calls")? as u64,
        bands,
        windows,
    })
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<RunSummary> {
    parse_summary(&read_file(path.as_ref())?)
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3} s"))
}

/// Human-readable block for one run.
pub fn summary_text(summary: &RunSummary, defaulted: &[&str]) -> String {
    let s = summary;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} | speed_ref {} rpm | load {} | {} s",
        s.controller.to_string().to_uppercase(),
        s.speed_ref,
        s.load_profile,
        s.duration
    );
    let _ = writeln!(out, "  steady window        [{:.3}, {:.3}] s", s.steady_start, s.steady_end);
    let _ = writeln!(
        out,
        "  median f_sw          {}",
        s.median_frequency.map_or_else(|| "-".to_string(), |f| format!("{f:.1} Hz"))
    );
    if let Some(loss) = s.median_loss_proxy {
        let _ = writeln!(out, "  loss proxy / window  {loss:.4e}");
    }
    let _ = writeln!(
        out,
        "  torque ripple        p2p {:.4} N·m, std {:.4} N·m, mean {:.4} N·m",
        s.ripple.peak_to_peak, s.ripple.std_dev, s.ripple.mean
    );
    let _ = writeln!(out, "  speed error          {:+.4} %", s.speed_error_pct);
    let _ = writeln!(out, "  settling (±1%)       {}", secs(s.settling_time));
    if s.load_profile.first_loaded_step().is_some() {
        let _ = writeln!(out, "  load recovery (±1%)  {}", secs(s.recovery_time));
    }
    for (name, value) in &s.bands {
        let _ = writeln!(out, "  {name:<20} {}", format_sig9(*value));
    }
    if !defaulted.is_empty() {
        let _ = writeln!(out, "  defaults used        {}", defaulted.join(", "));
    }
    out
}

/// Machine-readable comparison of one FOC/DTC pair.
pub fn comparison_to_kv(report: &ComparisonReport) -> String {
    let mut out = String::new();
    write_comparison_kv(&mut out, "", report);
    out
}

fn write_comparison_kv(out: &mut String, prefix: &str, r: &ComparisonReport) {
    let _ = writeln!(out, "{prefix}speed_ref = {}", r.foc.speed_ref);
    let _ = writeln!(out, "{prefix}load_profile = {}", r.foc.load_profile);
    for (name, s) in [("foc", &r.foc), ("dtc", &r.dtc)] {
        let _ = writeln!(out, "{prefix}{name}.f_sw_median = {}", opt(s.median_frequency));
        let _ = writeln!(out, "{prefix}{name}.ripple.p2p = {}", s.ripple.peak_to_peak);
        let _ = writeln!(out, "{prefix}{name}.ripple.std = {}", s.ripple.std_dev);
        let _ = writeln!(out, "{prefix}{name}.ripple.mean = {}", s.ripple.mean);
        let _ = writeln!(out, "{prefix}{name}.speed_error_pct = {}", s.speed_error_pct);
        for (band, value) in &s.bands {
            let _ = writeln!(out, "{prefix}{name}.band.{band} = {value}");
        }
    }
    let _ = writeln!(out, "{prefix}frequency_ratio = {}", r.frequency_ratio);
    let _ = writeln!(out, "{prefix}percent_excess = {}", r.percent_excess);
    let _ = writeln!(out, "{prefix}ripple_ratio = {}", r.ripple_ratio);
}

/// Human-readable comparison of one FOC/DTC pair.
pub fn comparison_text(report: &ComparisonReport) -> String {
    let r = report;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "FOC vs DTC at {} rpm, load {}",
        r.foc.speed_ref, r.foc.load_profile
    );
    out.push_str(&summary_text(&r.foc, &[]));
    out.push_str(&summary_text(&r.dtc, &[]));
    let _ = writeln!(out, "  f_foc / f_dtc        {:.4}", r.frequency_ratio);
    let _ = writeln!(out, "  FOC excess           {:.1} %", r.percent_excess);
    let _ = writeln!(out, "  ripple p2p dtc/foc   {:.3}", r.ripple_ratio);
    out
}

/// Text and key-value reports for the four reference runs.
pub fn replication_reports(rep: &Replication, defaulted: &[&str]) -> (String, String) {
    let mut text = String::new();
    let mut kv = String::new();
    for (name, report) in ["noload", "loaded"].iter().zip(&rep.reports) {
        text.push_str(&comparison_text(report));
        text.push('\n');
        write_comparison_kv(&mut kv, &format!("{name}."), report);
    }
    if let [a, b] = rep.reports.as_slice() {
        let spread = (a.percent_excess - b.percent_excess).abs();
        let _ = writeln!(text, "excess difference between load cases: {spread:.1} percentage points");
        let _ = writeln!(kv, "excess_spread = {spread}");
    }
    for (name, run) in REPLICATION_NAMES.iter().zip(&rep.runs) {
        let _ = writeln!(kv, "{name}.f_sw_median = {}", opt(run.summary.median_frequency));
        let _ = writeln!(kv, "{name}.settling_time = {}", opt(run.summary.settling_time));
        let _ = writeln!(kv, "{name}.recovery_time = {}", opt(run.summary.recovery_time));
    }
    let defaulted_line = if defaulted.is_empty() {
        "none".to_string()
    } else {
        defaulted.join(", ")
    };
    let _ = writeln!(text, "config keys left at defaults: {defaulted_line}");
    let _ = writeln!(kv, "defaulted = {defaulted_line}");
    (text, kv)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
