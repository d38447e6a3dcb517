//! Observation vectors for the three nested state-space sets.
//!
//! Feature order is canonical and nested so that a smaller set is always a
//! prefix of a larger one:
//!
//! * `0..12` (Set I): price, HVAC kW, whole-building kW, zone temperature,
//!   day-of-week, hour-of-day, dry bulb, wet bulb, wind speed, wind
//!   direction, relative humidity, solar.
//! * `12..26` (Set II adds): price look-ahead +1h..+4h, storage state of
//!   charge, occupancy, HVAC kW lags -15m..-60m, zone temperature lags
//!   -15m..-60m.
//! * `26..42` (Set III adds): +1h..+4h look-ahead for dry bulb, wet bulb,
//!   relative humidity, and solar.
//!
//! Every feature is min-max scaled to [0, 1] with clamping. Calendar
//! features use 1-based indices (Monday = 1, midnight = hour 1), so both
//! scale to exactly 0 at their origin.

use chrono::{Datelike, Timelike};

use crate::config::StateSpaceSet;
use crate::env::traces::TraceSet;
use crate::error::Result;
use crate::norm::{NormalizationSpec, Quantity};

/// Everything the observation builder needs about the current instant.
#[derive(Debug, Clone, Copy)]
pub struct ObsContext<'a> {
    pub traces: &'a TraceSet,
    /// Trace row of the current instant (the step about to run).
    pub trace_ix: usize,
    pub t_zone: f64,
    /// Electric HVAC demand over the most recent completed step, kW.
    pub hvac_kw: f64,
    /// Whole-building electric demand over that step, kW.
    pub total_kw: f64,
    pub tes_soc: f64,
    /// HVAC kW at 1..=4 steps before the most recent step, most recent first.
    pub hvac_lags: &'a [f64; 4],
    /// Zone temperature at 1..=4 steps before now, most recent first.
    pub tzone_lags: &'a [f64; 4],
}

/// Build the scaled observation vector for `set`.
pub fn build_observation(
    set: StateSpaceSet,
    ctx: &ObsContext,
    norm: &NormalizationSpec,
) -> Result<Vec<f64>> {
    let t = ctx.traces;
    let row = t.row(ctx.trace_ix);
    let steps_per_hour = 60 / t.step_minutes() as usize;
    let ts = row.timestamp;

    let mut obs = Vec::with_capacity(set.dim());
    let mut push = |q: Quantity, v: f64| obs.push(norm.scale(q, v));

    push(Quantity::Price, row.price_per_kwh);
    push(Quantity::HvacKw, ctx.hvac_kw);
    push(Quantity::TotalKw, ctx.total_kw);
    push(Quantity::TZone, ctx.t_zone);
    push(Quantity::DayOfWeek, ts.weekday().number_from_monday() as f64);
    push(Quantity::HourOfDay, (ts.hour() + 1) as f64);
    push(Quantity::Tdb, row.tdb_c);
    push(Quantity::Twb, row.twb_c);
    push(Quantity::WindSpeed, row.wind_mps);
    push(Quantity::WindDir, row.wind_deg);
    push(Quantity::Rh, row.rh_pct);
    push(Quantity::Solar, row.solar_wm2);

    if set == StateSpaceSet::One {
        return Ok(obs);
    }

    for k in 1..=4usize {
        let ahead = t.ahead(ctx.trace_ix, k * steps_per_hour)?;
        obs.push(norm.scale(Quantity::Price, ahead.price_per_kwh));
    }
    obs.push(norm.scale(Quantity::TesSoc, ctx.tes_soc));
    obs.push(norm.scale(Quantity::Occupancy, row.occupancy));
    for k in 0..4 {
        obs.push(norm.scale(Quantity::HvacKw, ctx.hvac_lags[k]));
    }
    for k in 0..4 {
        obs.push(norm.scale(Quantity::TZone, ctx.tzone_lags[k]));
    }

    if set == StateSpaceSet::Two {
        return Ok(obs);
    }

    for (q, get) in [
        (Quantity::Tdb, 0usize),
        (Quantity::Twb, 1),
        (Quantity::Rh, 2),
        (Quantity::Solar, 3),
    ] {
        for k in 1..=4usize {
            let ahead = t.ahead(ctx.trace_ix, k * steps_per_hour)?;
            let v = match get {
                0 => ahead.tdb_c,
                1 => ahead.twb_c,
                2 => ahead.rh_pct,
                _ => ahead.solar_wm2,
            };
            obs.push(norm.scale(q, v));
        }
    }

    debug_assert_eq!(obs.len(), set.dim());
    Ok(obs)
}
