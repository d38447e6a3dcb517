//! Chilled-water thermal energy storage as a bounded energy bucket.

use crate::config::TesSection;

#[derive(Debug, Clone)]
pub struct Tes {
    capacity_kwh: f64,
    charge_rate_kw: f64,
    discharge_rate_kw: f64,
    soc: f64,
}

impl Tes {
    pub fn new(cfg: &TesSection) -> Self {
        Tes {
            capacity_kwh: cfg.capacity_kwh(),
            charge_rate_kw: cfg.charge_rate_kw,
            discharge_rate_kw: cfg.discharge_rate_kw,
            soc: cfg.initial_soc,
        }
    }

    pub fn reset(&mut self, soc: f64) {
        self.soc = soc.clamp(0.0, 1.0);
    }

    pub fn soc(&self) -> f64 {
        self.soc
    }

    pub fn capacity_kwh(&self) -> f64 {
        self.capacity_kwh
    }

    /// Charge for `step_hours`; returns the thermal power actually drawn by
    /// the charging chiller. Rate-limited and headroom-limited, so the state
    /// of charge can never exceed 1.
    pub fn charge(&mut self, step_hours: f64) -> f64 {
        let headroom_kw = (1.0 - self.soc) * self.capacity_kwh / step_hours;
        let q = self.charge_rate_kw.min(headroom_kw).max(0.0);
        self.soc = (self.soc + q * step_hours / self.capacity_kwh).min(1.0);
        q
    }

    /// Serve up to `load_kw` from storage for `step_hours`; returns the
    /// thermal power actually served. Bounded by the discharge rate and the
    /// stored energy, so the state of charge can never drop below 0.
    pub fn discharge(&mut self, load_kw: f64, step_hours: f64) -> f64 {
        let available_kw = self.soc * self.capacity_kwh / step_hours;
        let q = load_kw.max(0.0).min(self.discharge_rate_kw).min(available_kw);
        self.soc = (self.soc - q * step_hours / self.capacity_kwh).max(0.0);
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tes() -> Tes {
        Tes::new(&TesSection::default())
    }

    #[test]
    fn charges_at_rate_until_full() {
        let mut t = tes();
        // 697.7 kWh at 400 kW charges in under two hours.
        let q1 = t.charge(1.0);
        assert_eq!(q1, 400.0);
        assert!((t.soc() - 400.0 / t.capacity_kwh()).abs() < 1e-12);
        let q2 = t.charge(1.0);
        assert!((q2 - (t.capacity_kwh() - 400.0)).abs() < 1e-9);
        assert!((t.soc() - 1.0).abs() < 1e-12);
        assert_eq!(t.charge(1.0), 0.0);
    }

    #[test]
    fn discharge_is_bounded_by_load_rate_and_energy() {
        let mut t = tes();
        t.reset(1.0);
        // Load below the rate: serves the load.
        assert_eq!(t.discharge(150.0, 0.25), 150.0);
        // Load above the rate: clipped to the rate.
        assert_eq!(t.discharge(900.0, 0.25), 400.0);
        // Nearly empty: clipped to the remaining energy.
        let cap = t.capacity_kwh();
        t.reset(10.0 / cap);
        let q = t.discharge(900.0, 0.25);
        assert!((q - 40.0).abs() < 1e-9, "10 kWh over 15 min is 40 kW, got {q}");
        assert!(t.soc().abs() < 1e-12);
        assert_eq!(t.discharge(900.0, 0.25), 0.0);
    }

    #[test]
    fn empty_store_serves_nothing() {
        let mut t = tes();
        assert_eq!(t.discharge(500.0, 0.25), 0.0);
        assert_eq!(t.soc(), 0.0);
    }

    proptest! {
        #[test]
        fn soc_stays_in_unit_interval(
            ops in prop::collection::vec((0u8..2, 0.0f64..1200.0), 1..200),
            soc0 in 0.0f64..=1.0,
        ) {
            let mut t = tes();
            t.reset(soc0);
            for (kind, load) in ops {
                if kind == 0 {
                    t.charge(0.25);
                } else {
                    t.discharge(load, 0.25);
                }
                prop_assert!((0.0..=1.0).contains(&t.soc()), "soc = {}", t.soc());
            }
        }

        #[test]
        fn energy_is_conserved(
            charges in prop::collection::vec(0.0f64..500.0, 1..50),
        ) {
            // Alternating charge/discharge bookkeeping: stored energy equals
            // charged minus discharged.
            let mut t = tes();
            let mut stored = 0.0;
            for (i, c) in charges.iter().enumerate() {
                if i % 2 == 0 {
                    stored += t.charge(0.25) * 0.25;
                } else {
                    stored -= t.discharge(*c, 0.25) * 0.25;
                }
            }
            prop_assert!((t.soc() * t.capacity_kwh() - stored).abs() < 1e-9);
        }
    }
}
