//! Weather, price, and occupancy traces on a fixed simulation-step grid.
//!
//! Traces either come from a CSV file
//! (`timestamp,tdb_c,twb_c,rh_pct,wind_mps,wind_deg,solar_wm2,price_per_kwh,occupancy`,
//! RFC 3339 timestamps, constant cadence) or from the built-in synthetic
//! generator, which produces a warm-season span with a two-tier tariff.

use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDateTime};
use rand::Rng as _;
use sha2::{Digest, Sha256};

use crate::config::{ScheduleSection, SyntheticSection};
use crate::env::schedule::Calendar;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

pub const TRACE_HEADER: &str =
    "timestamp,tdb_c,twb_c,rh_pct,wind_mps,wind_deg,solar_wm2,price_per_kwh,occupancy";

/// One row of input data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub timestamp: NaiveDateTime,
    pub tdb_c: f64,
    pub twb_c: f64,
    pub rh_pct: f64,
    pub wind_mps: f64,
    pub wind_deg: f64,
    pub solar_wm2: f64,
    pub price_per_kwh: f64,
    pub occupancy: f64,
}

/// An immutable, validated trace span.
#[derive(Debug, Clone)]
pub struct TraceSet {
    rows: Vec<TraceRow>,
    step_minutes: u32,
}

fn parse_timestamp(text: &str, line: usize) -> Result<NaiveDateTime> {
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(text) {
        return Ok(dt.naive_utc());
    }
    NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S")
        .map_err(|_| Error::trace(Some(line), format!("invalid timestamp {text:?}")))
}

fn parse_field(fields: &csv::StringRecord, ix: usize, name: &str, line: usize) -> Result<f64> {
    let raw = fields
        .get(ix)
        .ok_or_else(|| Error::trace(Some(line), format!("missing column {name}")))?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::trace(Some(line), format!("invalid {name} value {raw:?}")))?;
    if !v.is_finite() {
        return Err(Error::trace(Some(line), format!("{name} is not finite")));
    }
    Ok(v)
}

impl TraceSet {
    /// Wrap pre-built rows, enforcing grid and range invariants.
    pub fn new(rows: Vec<TraceRow>, step_minutes: u32) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::trace(None, "trace contains no rows"));
        }
        if step_minutes == 0 {
            return Err(Error::trace(None, "trace step must be positive"));
        }
        let step = Duration::minutes(step_minutes as i64);
        for (i, pair) in rows.windows(2).enumerate() {
            let gap = pair[1].timestamp - pair[0].timestamp;
            if gap != step {
                return Err(Error::trace(
                    Some(i + 3),
                    format!(
                        "expected {} after {}, found {} (non-uniform cadence)",
                        pair[0].timestamp + step,
                        pair[0].timestamp,
                        pair[1].timestamp
                    ),
                ));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            let line = i + 2;
            if r.price_per_kwh <= 0.0 {
                return Err(Error::trace(
                    Some(line),
                    format!("price must be positive, got {}", r.price_per_kwh),
                ));
            }
            if !(0.0..=1.0).contains(&r.occupancy) {
                return Err(Error::trace(
                    Some(line),
                    format!("occupancy must be in [0, 1], got {}", r.occupancy),
                ));
            }
        }
        Ok(TraceSet { rows, step_minutes })
    }

    /// Load and validate a trace CSV.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_step(path, 15)
    }

    pub fn load_with_step(path: &Path, step_minutes: u32) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::trace(None, format!("cannot open {}: {e}", path.display())))?;

        let header = reader
            .headers()
            .map_err(|e| Error::trace(None, format!("cannot read header: {e}")))?;
        let expected: Vec<&str> = TRACE_HEADER.split(',').collect();
        let got: Vec<&str> = header.iter().collect();
        if got != expected {
            return Err(Error::trace(
                Some(1),
                format!("unexpected header {got:?}, expected {expected:?}"),
            ));
        }

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::trace(Some(line), format!("malformed row: {e}")))?;
            if record.len() != expected.len() {
                return Err(Error::trace(
                    Some(line),
                    format!("expected {} fields, got {}", expected.len(), record.len()),
                ));
            }
            let ts_raw = record.get(0).unwrap();
            rows.push(TraceRow {
                timestamp: parse_timestamp(ts_raw, line)?,
                tdb_c: parse_field(&record, 1, "tdb_c", line)?,
                twb_c: parse_field(&record, 2, "twb_c", line)?,
                rh_pct: parse_field(&record, 3, "rh_pct", line)?,
                wind_mps: parse_field(&record, 4, "wind_mps", line)?,
                wind_deg: parse_field(&record, 5, "wind_deg", line)?,
                solar_wm2: parse_field(&record, 6, "solar_wm2", line)?,
                price_per_kwh: parse_field(&record, 7, "price_per_kwh", line)?,
                occupancy: parse_field(&record, 8, "occupancy", line)?,
            });
        }
        Self::new(rows, step_minutes)
    }

    /// Serialize to the canonical CSV form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 64 + 64);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{}Z,{},{},{},{},{},{},{},{}\n",
                r.timestamp.format("%Y-%m-%dT%H:%M:%S"),
                r.tdb_c,
                r.twb_c,
                r.rh_pct,
                r.wind_mps,
                r.wind_deg,
                r.solar_wm2,
                r.price_per_kwh,
                r.occupancy
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// SHA-256 of the canonical CSV serialization, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_csv_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn start(&self) -> NaiveDateTime {
        self.rows[0].timestamp
    }

    pub fn end(&self) -> NaiveDateTime {
        self.rows[self.rows.len() - 1].timestamp
    }

    pub fn row(&self, ix: usize) -> &TraceRow {
        &self.rows[ix]
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// Grid index of `ts`, which must lie exactly on the trace grid.
    pub fn index_of(&self, ts: NaiveDateTime) -> Result<usize> {
        let offset = ts - self.start();
        let step_s = self.step_minutes as i64 * 60;
        let secs = offset.num_seconds();
        if secs < 0 || secs % step_s != 0 {
            return Err(Error::trace(
                None,
                format!("timestamp {ts} is not on the trace grid starting {}", self.start()),
            ));
        }
        let ix = (secs / step_s) as usize;
        if ix >= self.rows.len() {
            return Err(Error::trace(
                None,
                format!("timestamp {ts} is beyond the end of the trace ({})", self.end()),
            ));
        }
        Ok(ix)
    }

    /// Row at `ix + steps_ahead`, used for look-ahead features.
    pub fn ahead(&self, ix: usize, steps_ahead: usize) -> Result<&TraceRow> {
        self.rows.get(ix + steps_ahead).ok_or_else(|| {
            Error::trace(
                None,
                format!(
                    "look-ahead of {steps_ahead} steps from {} runs past the end of the trace",
                    self.rows[ix.min(self.rows.len() - 1)].timestamp
                ),
            )
        })
    }
}

/// Wet-bulb temperature from dry bulb and relative humidity
/// (Stull's regression, valid for ordinary ambient conditions).
fn wet_bulb_c(tdb_c: f64, rh_pct: f64) -> f64 {
    let rh = rh_pct.clamp(5.0, 99.0);
    tdb_c * (0.151977 * (rh + 8.313659).sqrt()).atan() + (tdb_c + rh).atan()
        - (rh - 1.676331).atan()
        + 0.00391838 * rh.powf(1.5) * (0.023101 * rh).atan()
        - 4.686035
}

/// Generate a synthetic trace span.
///
/// Weather follows a diurnal sinusoid with a seasonal ramp and per-day noise
/// drawn from a dedicated seed; the tariff repeats a fixed hourly profile
/// every day; occupancy follows the calendar.
pub fn synthesize(
    synth: &SyntheticSection,
    schedule: &ScheduleSection,
    step_minutes: u32,
) -> Result<TraceSet> {
    synth.validate().map_err(|e| Error::trace(None, e.to_string()))?;
    let calendar = Calendar::new(schedule);
    let mut rng = seeded_rng(synth.seed, "trace-synthesis");

    let days = synth.days as usize;
    let steps_per_day = (24 * 60 / step_minutes) as usize;

    // Per-day draws, interpolated across each day so midnight stays smooth.
    let day_offsets: Vec<f64> =
        (0..=days).map(|_| rng.gen_range(-1.0..1.0) * synth.t_noise_c).collect();
    let cloud: Vec<f64> = (0..=days).map(|_| rng.gen_range(0.72..1.0)).collect();

    let start = synth.start.and_hms_opt(0, 0, 0).unwrap();
    let mut rows = Vec::with_capacity(days * steps_per_day);
    for day in 0..days {
        let season = if days > 1 { day as f64 / (days - 1) as f64 } else { 0.0 };
        let t_mean = synth.t_mean_start_c + (synth.t_mean_end_c - synth.t_mean_start_c) * season;
        for s in 0..steps_per_day {
            let ts = start + Duration::minutes((day * steps_per_day + s) as i64 * step_minutes as i64);
            let d = s as f64 * step_minutes as f64 / 60.0;
            let day_frac = d / 24.0;

            // Coolest around 05:00, warmest around 17:00.
            let diurnal = -((d - 5.0) / 24.0 * std::f64::consts::TAU).cos();
            let noise = day_offsets[day] * (1.0 - day_frac) + day_offsets[day + 1] * day_frac;
            let tdb = t_mean + synth.t_diurnal_amplitude_c * diurnal + noise;

            let rh = (synth.rh_mean_pct - synth.rh_diurnal_amplitude_pct * diurnal).clamp(5.0, 100.0);
            let twb = wet_bulb_c(tdb, rh);

            let wind = (synth.wind_mean_mps
                + synth.wind_amplitude_mps * ((d - 13.0) / 24.0 * std::f64::consts::TAU).sin())
            .max(0.0);
            let wind_deg = (200.0
                + 90.0 * ((day as f64) / 6.3 + day_frac * std::f64::consts::TAU / 3.0).sin())
            .rem_euclid(360.0);

            let solar = if (6.0..20.0).contains(&d) {
                let arc = ((d - 6.0) / 14.0 * std::f64::consts::PI).sin();
                synth.solar_peak_wm2 * (0.85 + 0.15 * season) * cloud[day] * arc
            } else {
                0.0
            };

            let hour = (d.floor() as usize).min(23);
            let price = synth.price_profile[hour];

            let occupancy = if calendar.occupied(ts) { 1.0 } else { 0.0 };

            rows.push(TraceRow {
                timestamp: ts,
                tdb_c: round6(tdb),
                twb_c: round6(twb),
                rh_pct: round6(rh),
                wind_mps: round6(wind),
                wind_deg: round6(wind_deg),
                solar_wm2: round6(solar),
                price_per_kwh: price,
                occupancy,
            });
        }
    }
    TraceSet::new(rows, step_minutes)
}

/// Round to 1e-6 so the canonical CSV stays compact and stable.
fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
