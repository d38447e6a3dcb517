//! Occupancy calendar, comfort bands, and the rule-based baseline controller.

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};

use crate::config::{ComfortSection, RbcSection, ScheduleSection};

/// Weekly occupancy calendar derived from the schedule config.
#[derive(Debug, Clone)]
pub struct Calendar {
    weekday: (u32, u32),
    saturday: (u32, u32),
    sunday: (u32, u32),
}

impl Calendar {
    pub fn new(s: &ScheduleSection) -> Self {
        Calendar {
            weekday: (s.weekday_open_hour, s.weekday_close_hour),
            saturday: (s.saturday_open_hour, s.saturday_close_hour),
            sunday: (s.sunday_open_hour, s.sunday_close_hour),
        }
    }

    pub fn occupied(&self, ts: NaiveDateTime) -> bool {
        let (open, close) = match ts.weekday() {
            Weekday::Sat => self.saturday,
            Weekday::Sun => self.sunday,
            _ => self.weekday,
        };
        let h = ts.hour();
        h >= open && h < close
    }
}

/// Time-varying comfort band: tight while the building is occupied, wide
/// (setback) when it is empty.
#[derive(Debug, Clone)]
pub struct ComfortSchedule {
    calendar: Calendar,
    occupied: (f64, f64),
    unoccupied: (f64, f64),
}

impl ComfortSchedule {
    pub fn new(schedule: &ScheduleSection, comfort: &ComfortSection) -> Self {
        ComfortSchedule {
            calendar: Calendar::new(schedule),
            occupied: (comfort.occupied_min_c, comfort.occupied_max_c),
            unoccupied: (comfort.unoccupied_min_c, comfort.unoccupied_max_c),
        }
    }

    pub fn occupied(&self, ts: NaiveDateTime) -> bool {
        self.calendar.occupied(ts)
    }

    /// Comfort bounds `(t_min, t_max)` in effect at `ts`.
    pub fn bounds(&self, ts: NaiveDateTime) -> (f64, f64) {
        if self.calendar.occupied(ts) {
            self.occupied
        } else {
            self.unoccupied
        }
    }

    pub fn calendar(&self) -> &Calendar {
        &self.calendar
    }
}

/// Baseline controller: fixed occupied setpoint, night/weekend setback.
pub fn rbc_policy(ts: NaiveDateTime, calendar: &Calendar, rbc: &RbcSection) -> f64 {
    if calendar.occupied(ts) {
        rbc.occupied_setpoint_c
    } else {
        rbc.setback_setpoint_c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(y: i32, m: u32, d: u32, h: u32, min: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(h, min, 0).unwrap()
    }

    fn default_calendar() -> Calendar {
        Calendar::new(&ScheduleSection::default())
    }

    #[test]
    fn weekday_hours() {
        let cal = default_calendar();
        // 2017-07-03 is a Monday.
        assert!(!cal.occupied(at(2017, 7, 3, 5, 45)));
        assert!(cal.occupied(at(2017, 7, 3, 6, 0)));
        assert!(cal.occupied(at(2017, 7, 3, 10, 0)));
        assert!(cal.occupied(at(2017, 7, 3, 23, 45)));
        assert!(!cal.occupied(at(2017, 7, 4, 0, 0)));
    }

    #[test]
    fn saturday_closes_early_sunday_closed() {
        let cal = default_calendar();
        // 2017-07-08 Saturday, 2017-07-09 Sunday.
        assert!(cal.occupied(at(2017, 7, 8, 16, 45)));
        assert!(!cal.occupied(at(2017, 7, 8, 17, 0)));
        assert!(!cal.occupied(at(2017, 7, 9, 12, 0)));
    }

    #[test]
    fn rbc_switches_with_occupancy() {
        let cal = default_calendar();
        let rbc = RbcSection::default();
        assert_eq!(rbc_policy(at(2017, 7, 3, 10, 0), &cal, &rbc), 24.0);
        assert_eq!(rbc_policy(at(2017, 7, 3, 3, 0), &cal, &rbc), 30.0);
        assert_eq!(rbc_policy(at(2017, 7, 9, 12, 0), &cal, &rbc), 30.0);
    }

    #[test]
    fn comfort_band_follows_calendar() {
        let cs = ComfortSchedule::new(&ScheduleSection::default(), &ComfortSection::default());
        assert_eq!(cs.bounds(at(2017, 7, 3, 10, 0)), (21.0, 26.0));
        assert_eq!(cs.bounds(at(2017, 7, 3, 2, 0)), (15.0, 32.0));
        assert_eq!(cs.bounds(at(2017, 7, 9, 12, 0)), (15.0, 32.0));
    }
}
