//! Min-max feature scaling and the action/setpoint mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest setpoint the agent can command, in degrees Celsius.
pub const SETPOINT_MIN_C: f64 = 21.0;
/// Highest setpoint the agent can command, in degrees Celsius.
pub const SETPOINT_MAX_C: f64 = 28.0;

/// Scale `value` from `[lo, hi]` into `[0, 1]`, clamping out-of-range inputs.
pub fn normalize(value: f64, lo: f64, hi: f64) -> f64 {
    ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Map a policy action in `[0, 1]` onto the cooling setpoint range.
/// Out-of-range actions are clamped before mapping.
pub fn denormalize_action(action: f64) -> f64 {
    SETPOINT_MIN_C + (SETPOINT_MAX_C - SETPOINT_MIN_C) * action.clamp(0.0, 1.0)
}

/// The scalar quantities that can appear in an observation vector. Lagged and
/// look-ahead copies of a quantity share its scaling bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Price,
    HvacKw,
    TotalKw,
    TZone,
    DayOfWeek,
    HourOfDay,
    Tdb,
    Twb,
    WindSpeed,
    WindDir,
    Rh,
    Solar,
    TesSoc,
    Occupancy,
}

/// Per-quantity `[lo, hi]` scaling bounds.
///
/// Defaults cover the synthetic traces with headroom; measured data from a
/// different site can override any entry in the `[normalization]` config
/// section. Calendar quantities use the convention that day-of-week runs
/// 1..=7 (Monday = 1) and hour-of-day runs 1..=24, so midnight scales to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationSpec {
    pub price: [f64; 2],
    pub hvac_kw: [f64; 2],
    pub total_kw: [f64; 2],
    pub t_zone: [f64; 2],
    pub day_of_week: [f64; 2],
    pub hour_of_day: [f64; 2],
    pub tdb: [f64; 2],
    pub twb: [f64; 2],
    pub wind_speed: [f64; 2],
    pub wind_dir: [f64; 2],
    pub rh: [f64; 2],
    pub solar: [f64; 2],
    pub tes_soc: [f64; 2],
    pub occupancy: [f64; 2],
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        NormalizationSpec {
            price: [0.0, 250.0],
            hvac_kw: [0.0, 1200.0],
            total_kw: [0.0, 1600.0],
            t_zone: [10.0, 40.0],
            day_of_week: [1.0, 7.0],
            hour_of_day: [1.0, 24.0],
            tdb: [-30.0, 45.0],
            twb: [-30.0, 40.0],
            wind_speed: [0.0, 25.0],
            wind_dir: [0.0, 360.0],
            rh: [0.0, 100.0],
            solar: [0.0, 1100.0],
            tes_soc: [0.0, 1.0],
            occupancy: [0.0, 1.0],
        }
    }
}

impl NormalizationSpec {
    pub fn bounds(&self, q: Quantity) -> (f64, f64) {
        let b = match q {
            Quantity::Price => self.price,
            Quantity::HvacKw => self.hvac_kw,
            Quantity::TotalKw => self.total_kw,
            Quantity::TZone => self.t_zone,
            Quantity::DayOfWeek => self.day_of_week,
            Quantity::HourOfDay => self.hour_of_day,
            Quantity::Tdb => self.tdb,
            Quantity::Twb => self.twb,
            Quantity::WindSpeed => self.wind_speed,
            Quantity::WindDir => self.wind_dir,
            Quantity::Rh => self.rh,
            Quantity::Solar => self.solar,
            Quantity::TesSoc => self.tes_soc,
            Quantity::Occupancy => self.occupancy,
        };
        (b[0], b[1])
    }

    pub fn scale(&self, q: Quantity, value: f64) -> f64 {
        let (lo, hi) = self.bounds(q);
        normalize(value, lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("price", self.price),
            ("hvac_kw", self.hvac_kw),
            ("total_kw", self.total_kw),
            ("t_zone", self.t_zone),
            ("day_of_week", self.day_of_week),
            ("hour_of_day", self.hour_of_day),
            ("tdb", self.tdb),
            ("twb", self.twb),
            ("wind_speed", self.wind_speed),
            ("wind_dir", self.wind_dir),
            ("rh", self.rh),
            ("solar", self.solar),
            ("tes_soc", self.tes_soc),
            ("occupancy", self.occupancy),
        ];
        for (name, [lo, hi]) in all {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::config(format!(
                    "normalization.{name}: bounds [{lo}, {hi}] must be finite with hi > lo"
                )));
            }
        }
        Ok(())
    }
}
