//! Two-node RC thermal model of the building.
//!
//! The zone air node exchanges heat with outdoors (envelope plus
//! ventilation) and with a lumped structural mass node:
//!
//! ```text
//! C_z dT_z/dt = UA (T_out - T_z) + U_m (T_m - T_z) + Q_gain - Q_cool
//! C_m dT_m/dt = U_m (T_z - T_m)
//! ```
//!
//! Inputs are held constant across one simulation step, so the step is
//! integrated exactly with the matrix exponential of the 2x2 system; no
//! integration error accumulates regardless of step size.

use crate::config::EnvSection;
use crate::error::{Error, Result};

type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

#[derive(Debug, Clone)]
pub struct ThermalModel {
    /// Zone-outdoor conductance, kW/K.
    ua: f64,
    /// Zone air capacity, kJ/K.
    c_zone_kj: f64,
    /// Step length, seconds.
    h: f64,
    /// e^{Ah} over one simulation step.
    exp_ah: Mat2,
    /// Integral of e^{As} ds over the step (= A^{-1}(e^{Ah} - I)), seconds.
    phi: Mat2,
    /// Double integral of the exponential (= A^{-1}(phi - h I)), seconds^2.
    psi: Mat2,
}

impl ThermalModel {
    pub fn new(env: &EnvSection, step_minutes: u32) -> Result<Self> {
        env.validate()?;
        let ua = env.ua_out_kw_per_k;
        let um = env.u_mass_kw_per_k;
        let cz = env.c_zone_kwh_per_k * 3600.0; // kJ/K
        let cm = env.c_mass_kwh_per_k * 3600.0;
        let h = step_minutes as f64 * 60.0; // s

        // State matrix in 1/s.
        let a: Mat2 = [
            [-(ua + um) / cz, um / cz],
            [um / cm, -um / cm],
        ];

        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr - 4.0 * det;
        if disc <= 0.0 {
            return Err(Error::config("thermal model eigenvalues are not real and distinct"));
        }
        let sq = disc.sqrt();
        let l1 = 0.5 * (tr + sq);
        let l2 = 0.5 * (tr - sq);
        if !(l1 < 0.0 && l2 < 0.0) || (l1 - l2).abs() < 1e-18 {
            return Err(Error::config("thermal model must be strictly stable with distinct modes"));
        }

        // Lagrange form of the matrix exponential for distinct eigenvalues:
        // e^{Ah} = e^{l1 h} (A - l2 I)/(l1 - l2) + e^{l2 h} (A - l1 I)/(l2 - l1).
        let e1 = (l1 * h).exp();
        let e2 = (l2 * h).exp();
        let mut exp_ah = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { 1.0 } else { 0.0 };
                let p1 = (a[r][c] - l2 * id) / (l1 - l2);
                let p2 = (a[r][c] - l1 * id) / (l2 - l1);
                exp_ah[r][c] = e1 * p1 + e2 * p2;
            }
        }

        // phi = A^{-1}(e^{Ah} - I); inverse via the 2x2 adjugate.
        let inv_det = 1.0 / det;
        let a_inv: Mat2 = [
            [a[1][1] * inv_det, -a[0][1] * inv_det],
            [-a[1][0] * inv_det, a[0][0] * inv_det],
        ];
        let em_i: Mat2 = [
            [exp_ah[0][0] - 1.0, exp_ah[0][1]],
            [exp_ah[1][0], exp_ah[1][1] - 1.0],
        ];
        let mut phi = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                phi[r][c] = a_inv[r][0] * em_i[0][c] + a_inv[r][1] * em_i[1][c];
            }
        }
        if phi[0][0] <= 0.0 {
            return Err(Error::config("thermal response coefficient must be positive"));
        }
        let phi_m_h: Mat2 = [
            [phi[0][0] - h, phi[0][1]],
            [phi[1][0], phi[1][1] - h],
        ];
        let mut psi = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                psi[r][c] = a_inv[r][0] * phi_m_h[0][c] + a_inv[r][1] * phi_m_h[1][c];
            }
        }

        Ok(ThermalModel {
            ua,
            c_zone_kj: cz,
            h,
            exp_ah,
            phi,
            psi,
        })
    }

    fn forcing(&self, t_out: f64, q_gain_kw: f64, q_cool_kw: f64) -> [f64; 2] {
        [
            (self.ua * t_out + q_gain_kw - q_cool_kw) / self.c_zone_kj,
            0.0,
        ]
    }

    /// End-of-step `(t_zone, t_mass)` with inputs held constant.
    pub fn advance(
        &self,
        t_zone: f64,
        t_mass: f64,
        t_out: f64,
        q_gain_kw: f64,
        q_cool_kw: f64,
    ) -> (f64, f64) {
        let hom = mat_vec(&self.exp_ah, [t_zone, t_mass]);
        let part = mat_vec(&self.phi, self.forcing(t_out, q_gain_kw, q_cool_kw));
        (hom[0] + part[0], hom[1] + part[1])
    }

    /// Like [`advance`](Self::advance), additionally returning the exact
    /// time-average zone temperature over the step (from the second integral
    /// of the matrix exponential), which is what comfort is judged on.
    pub fn advance_with_average(
        &self,
        t_zone: f64,
        t_mass: f64,
        t_out: f64,
        q_gain_kw: f64,
        q_cool_kw: f64,
    ) -> (f64, f64, f64) {
        let b = self.forcing(t_out, q_gain_kw, q_cool_kw);
        let hom = mat_vec(&self.exp_ah, [t_zone, t_mass]);
        let part = mat_vec(&self.phi, b);
        let int_hom = mat_vec(&self.phi, [t_zone, t_mass]);
        let int_part = mat_vec(&self.psi, b);
        let avg_zone = (int_hom[0] + int_part[0]) / self.h;
        (hom[0] + part[0], hom[1] + part[1], avg_zone)
    }

    /// Thermal power that lands the zone exactly on `setpoint_c` at the end
    /// of the step, before any capacity clamp. Negative demand means the
    /// zone would end below the setpoint even without cooling.
    pub fn cooling_demand_kw(
        &self,
        t_zone: f64,
        t_mass: f64,
        t_out: f64,
        q_gain_kw: f64,
        setpoint_c: f64,
    ) -> f64 {
        let (t_free, _) = self.advance(t_zone, t_mass, t_out, q_gain_kw, 0.0);
        // The end-of-step zone temperature is affine in Q_cool with slope
        // -phi[0][0] / C_z.
        (t_free - setpoint_c) * self.c_zone_kj / self.phi[0][0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EnvSection;
    use proptest::prelude::*;

    fn model() -> ThermalModel {
        ThermalModel::new(&EnvSection::default(), 15).unwrap()
    }

    /// Reference integrator: classic RK4 at a 1 s step, written directly
    /// against the ODE right-hand side.
    fn rk4_advance(
        env: &EnvSection,
        mut t_zone: f64,
        mut t_mass: f64,
        t_out: f64,
        q_gain: f64,
        q_cool: f64,
        seconds: f64,
    ) -> (f64, f64) {
        let cz = env.c_zone_kwh_per_k * 3600.0;
        let cm = env.c_mass_kwh_per_k * 3600.0;
        let f = |tz: f64, tm: f64| {
            (
                (env.ua_out_kw_per_k * (t_out - tz) + env.u_mass_kw_per_k * (tm - tz) + q_gain
                    - q_cool)
                    / cz,
                env.u_mass_kw_per_k * (tz - tm) / cm,
            )
        };
        let n = seconds.round() as usize;
        let h = seconds / n as f64;
        for _ in 0..n {
            let (k1z, k1m) = f(t_zone, t_mass);
            let (k2z, k2m) = f(t_zone + 0.5 * h * k1z, t_mass + 0.5 * h * k1m);
            let (k3z, k3m) = f(t_zone + 0.5 * h * k2z, t_mass + 0.5 * h * k2m);
            let (k4z, k4m) = f(t_zone + h * k3z, t_mass + h * k3m);
            t_zone += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            t_mass += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        }
        (t_zone, t_mass)
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let m = model();
        let (tz, tm) = m.advance(22.0, 22.0, 22.0, 0.0, 0.0);
        assert!((tz - 22.0).abs() < 1e-9);
        assert!((tm - 22.0).abs() < 1e-9);
    }

    #[test]
    fn free_float_decays_towards_outdoor() {
        let m = model();
        let (mut tz, mut tm) = (30.0, 30.0);
        let mut last = tz;
        for _ in 0..96 * 4 {
            let (z, mm) = m.advance(tz, tm, 20.0, 0.0, 0.0);
            tz = z;
            tm = mm;
            assert!(tz <= last + 1e-12);
            last = tz;
        }
        assert!(tz > 20.0 && tz < 21.5, "after four days t_zone = {tz}");
    }

    #[test]
    fn matches_rk4_per_step() {
        let env = EnvSection::default();
        let m = ThermalModel::new(&env, 15).unwrap();
        let cases = [
            (26.0, 25.0, 32.0, 600.0, 0.0),
            (24.0, 26.5, 18.0, 0.0, 900.0),
            (21.0, 27.0, 35.0, 1200.0, 2500.0),
            (28.0, 22.0, 28.0, 300.0, 100.0),
        ];
        for (tz0, tm0, tout, qg, qc) in cases {
            let (az, am) = m.advance(tz0, tm0, tout, qg, qc);
            let (rz, rm) = rk4_advance(&env, tz0, tm0, tout, qg, qc, 900.0);
            assert!((az - rz).abs() < 1e-7, "zone: {az} vs {rz}");
            assert!((am - rm).abs() < 1e-7, "mass: {am} vs {rm}");
        }
    }

    #[test]
    fn matches_constant_input_eigen_solution() {
        // Independent closed form: x(t) = x_p + sum_i c_i v_i e^{l_i t} with
        // x_p the static solution and (l_i, v_i) from the quadratic formula.
        let env = EnvSection::default();
        let m = ThermalModel::new(&env, 15).unwrap();
        let (ua, um) = (env.ua_out_kw_per_k, env.u_mass_kw_per_k);
        let (cz, cm) = (env.c_zone_kwh_per_k * 3600.0, env.c_mass_kwh_per_k * 3600.0);
        let (t_out, qg, qc) = (31.0, 450.0, 800.0);
        let (tz0, tm0) = (25.0, 26.0);

        let a = [[-(ua + um) / cz, um / cz], [um / cm, -um / cm]];
        let b = [(ua * t_out + qg - qc) / cz, 0.0];
        // Static solution solved with Cramer's rule.
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let xp = [
            (-b[0] * a[1][1] + b[1] * a[0][1]) / det,
            (-b[1] * a[0][0] + b[0] * a[1][0]) / det,
        ];
        let tr = a[0][0] + a[1][1];
        let sq = (tr * tr - 4.0 * det).sqrt();
        let (l1, l2) = (0.5 * (tr + sq), 0.5 * (tr - sq));
        // Eigenvectors (a01, l - a00).
        let v1 = [a[0][1], l1 - a[0][0]];
        let v2 = [a[0][1], l2 - a[0][0]];
        // Coefficients from the initial deviation, solved 2x2.
        let d0 = [tz0 - xp[0], tm0 - xp[1]];
        let vdet = v1[0] * v2[1] - v2[0] * v1[1];
        let c1 = (d0[0] * v2[1] - v2[0] * d0[1]) / vdet;
        let c2 = (v1[0] * d0[1] - d0[0] * v1[1]) / vdet;

        let (mut tz, mut tm) = (tz0, tm0);
        for step in 1..=96 {
            let prev = (tz, tm);
            let r = m.advance(tz, tm, t_out, qg, qc);
            tz = r.0;
            tm = r.1;
            let t = step as f64 * 900.0;
            let want_z = xp[0] + c1 * v1[0] * (l1 * t).exp() + c2 * v2[0] * (l2 * t).exp();
            let want_m = xp[1] + c1 * v1[1] * (l1 * t).exp() + c2 * v2[1] * (l2 * t).exp();
            assert!((tz - want_z).abs() < 1e-8, "step {step}: {tz} vs {want_z}");
            assert!((tm - want_m).abs() < 1e-8, "step {step}: {tm} vs {want_m}");

            // Exact average over the step from the integrated closed form.
            let t0 = t - 900.0;
            let gz = |tau: f64| {
                c1 * v1[0] * (l1 * tau).exp() / l1 + c2 * v2[0] * (l2 * tau).exp() / l2
            };
            let want_avg = xp[0] + (gz(t) - gz(t0)) / 900.0;
            let (_, _, avg) = m.advance_with_average(prev.0, prev.1, t_out, qg, qc);
            assert!((avg - want_avg).abs() < 1e-8, "step {step}: avg {avg} vs {want_avg}");
        }
    }

    #[test]
    fn average_temperature_matches_fine_quadrature() {
        let env = EnvSection::default();
        let m = ThermalModel::new(&env, 15).unwrap();
        let fine = ThermalModel::new(&env, 1).unwrap();
        let (tz0, tm0, tout, qg, qc) = (27.5, 26.8, 30.0, 400.0, 1800.0);
        let (ez, em, avg) = m.advance_with_average(tz0, tm0, tout, qg, qc);

        // Trapezoid over sixty exact one-minute sub-steps.
        let (mut tz, mut tm) = (tz0, tm0);
        let mut sum = 0.0;
        for _ in 0..15 {
            let (nz, nm) = fine.advance(tz, tm, tout, qg, qc);
            sum += 0.5 * (tz + nz);
            tz = nz;
            tm = nm;
        }
        let trap = sum / 15.0;
        assert!((tz - ez).abs() < 1e-9);
        assert!((tm - em).abs() < 1e-9);
        // Trapezoid error over one-minute panels bounds the difference.
        assert!((avg - trap).abs() < 5e-3, "avg {avg} vs trapezoid {trap}");
        // The zone cools through the step, so the average sits between the
        // endpoints.
        assert!(avg < tz0 && avg > ez);
    }

    #[test]
    fn cooling_demand_lands_on_setpoint() {
        let m = model();
        let q = m.cooling_demand_kw(26.0, 26.5, 33.0, 700.0, 24.0);
        assert!(q > 0.0);
        let (tz, _) = m.advance(26.0, 26.5, 33.0, 700.0, q);
        assert!((tz - 24.0).abs() < 1e-9, "ended at {tz}");
    }

    #[test]
    fn no_cooling_needed_when_already_cold() {
        let m = model();
        let q = m.cooling_demand_kw(18.0, 18.0, 15.0, 0.0, 24.0);
        assert!(q < 0.0);
    }

    proptest! {
        #[test]
        fn demand_decreases_with_setpoint(
            tz in 15.0f64..35.0,
            tm in 15.0f64..35.0,
            tout in 0.0f64..40.0,
            qg in 0.0f64..1500.0,
            sp_lo in 18.0f64..27.0,
            extra in 0.1f64..5.0,
        ) {
            let m = model();
            let lo = m.cooling_demand_kw(tz, tm, tout, qg, sp_lo);
            let hi = m.cooling_demand_kw(tz, tm, tout, qg, sp_lo + extra);
            prop_assert!(lo > hi);
        }

        #[test]
        fn exact_step_commutes_with_two_half_steps(
            tz in 15.0f64..35.0,
            tm in 15.0f64..35.0,
            tout in 0.0f64..40.0,
            qg in 0.0f64..1500.0,
            qc in 0.0f64..2500.0,
        ) {
            let env = EnvSection::default();
            let full = ThermalModel::new(&env, 30).unwrap();
            let half = ThermalModel::new(&env, 15).unwrap();
            let a = full.advance(tz, tm, tout, qg, qc);
            let h1 = half.advance(tz, tm, tout, qg, qc);
            let h2 = half.advance(h1.0, h1.1, tout, qg, qc);
            prop_assert!((a.0 - h2.0).abs() < 1e-9);
            prop_assert!((a.1 - h2.1).abs() < 1e-9);
        }
    }
}
