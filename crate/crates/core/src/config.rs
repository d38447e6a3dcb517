//! Run configuration: TOML schema, defaults, validation.
//!
//! Every tunable in the workspace lives here so that a run directory's
//! `config.toml` snapshot fully determines the run. Unknown keys are
//! rejected rather than ignored; a typo in a sweep config should fail loudly
//! before any compute is spent.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormalizationSpec;

/// Schema revision understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Which observation vector the agent sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpaceSet {
    /// Instantaneous measurements only (12 features).
    One,
    /// Adds price look-ahead, storage state, occupancy, and short lags (26).
    Two,
    /// Adds weather look-ahead on top of Set II (42).
    Three,
}

impl StateSpaceSet {
    pub fn from_index(ix: u8) -> Result<Self> {
        match ix {
            1 => Ok(StateSpaceSet::One),
            2 => Ok(StateSpaceSet::Two),
            3 => Ok(StateSpaceSet::Three),
            other => Err(Error::config(format!(
                "state_space_set must be 1, 2, or 3 (got {other})"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            StateSpaceSet::One => 1,
            StateSpaceSet::Two => 2,
            StateSpaceSet::Three => 3,
        }
    }

    /// Observation vector length.
    pub fn dim(self) -> usize {
        match self {
            StateSpaceSet::One => 12,
            StateSpaceSet::Two => 26,
            StateSpaceSet::Three => 42,
        }
    }
}

/// Agent hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Discount factor per control step.
    pub gamma: f64,
    /// Entropy temperature (fixed, no auto-tuning).
    pub alpha: f64,
    /// Weight of the comfort penalty in the reward.
    pub lambda_comfort: f64,
    /// Weight of the energy-cost penalty in the reward.
    pub beta: f64,
    /// Adam learning rate shared by actor and critics.
    pub learning_rate: f64,
    /// Polyak coefficient for target network smoothing.
    pub tau: f64,
    /// Replay buffer capacity in transitions.
    pub buffer_capacity: usize,
    /// Minibatch size per gradient step.
    pub minibatch_size: usize,
    /// Gradient updates trigger every this many simulation steps.
    pub update_interval_steps: u64,
    /// Gradient steps executed per trigger.
    pub gradient_steps: u32,
    /// Width of both hidden layers in every network.
    pub hidden_size: usize,
    /// Control steps of uniform-random exploration before the policy is used.
    pub warmup_control_steps: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma: 0.99,
            alpha: 0.05,
            lambda_comfort: 100.0,
            beta: 1e-5,
            learning_rate: 1e-3,
            tau: 3e-3,
            buffer_capacity: 2_000_000,
            minibatch_size: 2048,
            update_interval_steps: 96,
            gradient_steps: 2,
            hidden_size: 64,
            warmup_control_steps: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lambda_comfort >= 0.0 && self.lambda_comfort.is_finite()) {
            return Err(Error::config(format!(
                "lambda_comfort must be >= 0, got {}",
                self.lambda_comfort
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::config("buffer_capacity must be positive"));
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.buffer_capacity {
            return Err(Error::config(format!(
                "minibatch_size must be in 1..=buffer_capacity, got {}",
                self.minibatch_size
            )));
        }
        if self.update_interval_steps == 0 {
            return Err(Error::config("update_interval_steps must be positive"));
        }
        if self.gradient_steps == 0 {
            return Err(Error::config("gradient_steps must be positive"));
        }
        if self.hidden_size == 0 {
            return Err(Error::config("hidden_size must be positive"));
        }
        Ok(())
    }
}

/// How actions are drawn when a trained policy is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploymentMode {
    /// Squashed mean of the policy distribution.
    Deterministic,
    /// Sample from the squashed distribution.
    Stochastic,
}

/// Episode layout, timing grid, and evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// 1, 2, or 3.
    pub state_space_set: u8,
    /// Number of passes over the training window.
    pub episodes: u32,
    pub train_start: NaiveDate,
    /// Inclusive.
    pub train_end: NaiveDate,
    pub eval_start: NaiveDate,
    /// Inclusive.
    pub eval_end: NaiveDate,
    pub sim_step_minutes: u32,
    pub control_step_minutes: u32,
    pub deployment: DeploymentMode,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 1,
            state_space_set: 2,
            episodes: 50,
            train_start: NaiveDate::from_ymd_opt(2017, 4, 1).unwrap(),
            train_end: NaiveDate::from_ymd_opt(2017, 6, 30).unwrap(),
            eval_start: NaiveDate::from_ymd_opt(2017, 7, 3).unwrap(),
            eval_end: NaiveDate::from_ymd_opt(2017, 7, 7).unwrap(),
            sim_step_minutes: 15,
            control_step_minutes: 60,
            deployment: DeploymentMode::Deterministic,
        }
    }
}

impl RunSection {
    pub fn validate(&self) -> Result<()> {
        StateSpaceSet::from_index(self.state_space_set)?;
        if self.episodes == 0 {
            return Err(Error::config("episodes must be positive"));
        }
        if self.train_end < self.train_start {
            return Err(Error::config("train_end must not precede train_start"));
        }
        if self.eval_end < self.eval_start {
            return Err(Error::config("eval_end must not precede eval_start"));
        }
        if self.sim_step_minutes == 0 || self.control_step_minutes == 0 {
            return Err(Error::config("step sizes must be positive"));
        }
        if self.control_step_minutes % self.sim_step_minutes != 0 {
            return Err(Error::config(format!(
                "control_step_minutes ({}) must be a multiple of sim_step_minutes ({})",
                self.control_step_minutes, self.sim_step_minutes
            )));
        }
        if 1440 % self.sim_step_minutes != 0 {
            return Err(Error::config(format!(
                "sim_step_minutes ({}) must divide a day evenly",
                self.sim_step_minutes
            )));
        }
        Ok(())
    }

    pub fn set(&self) -> StateSpaceSet {
        StateSpaceSet::from_index(self.state_space_set).expect("validated")
    }

    /// Simulation steps held per control step.
    pub fn hold_steps(&self) -> u32 {
        self.control_step_minutes / self.sim_step_minutes
    }
}

/// Synthetic trace generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    /// First day of the generated span.
    pub start: NaiveDate,
    pub days: u32,
    /// Weather noise stream; independent of the run seed so every run in a
    /// sweep sees identical traces.
    pub seed: u64,
    /// Daily-mean dry bulb at the start of the span, degrees C.
    pub t_mean_start_c: f64,
    /// Daily-mean dry bulb at the end of the span (linear ramp between).
    pub t_mean_end_c: f64,
    pub t_diurnal_amplitude_c: f64,
    pub t_noise_c: f64,
    pub rh_mean_pct: f64,
    pub rh_diurnal_amplitude_pct: f64,
    pub wind_mean_mps: f64,
    pub wind_amplitude_mps: f64,
    pub solar_peak_wm2: f64,
    /// Tariff by hour of day, same every day. Units are the currency scale
    /// the cost weight `beta` is calibrated against (mills per kWh). The
    /// default is a two-tier day/night tariff: cheap nights, a flat daytime
    /// peak from 07:00 to 21:00.
    pub price_profile: Vec<f64>,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection {
            start: NaiveDate::from_ymd_opt(2017, 3, 31).unwrap(),
            days: 124,
            seed: 7,
            t_mean_start_c: 27.5,
            t_mean_end_c: 33.0,
            t_diurnal_amplitude_c: 5.0,
            t_noise_c: 0.6,
            rh_mean_pct: 55.0,
            rh_diurnal_amplitude_pct: 18.0,
            wind_mean_mps: 3.5,
            wind_amplitude_mps: 2.0,
            solar_peak_wm2: 870.0,
            price_profile: {
                let mut p = vec![30.0; 24];
                for h in 7..21 {
                    p[h] = 180.0;
                }
                p
            },
        }
    }
}

impl SyntheticSection {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::config("synthetic.days must be positive"));
        }
        if self.price_profile.len() != 24 {
            return Err(Error::config(format!(
                "synthetic.price_profile must have 24 hourly entries, got {}",
                self.price_profile.len()
            )));
        }
        if self.price_profile.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::config("synthetic.price_profile entries must be positive"));
        }
        if self.t_diurnal_amplitude_c < 0.0 || self.t_noise_c < 0.0 {
            return Err(Error::config("temperature amplitudes must be non-negative"));
        }
        if self.solar_peak_wm2 < 0.0 {
            return Err(Error::config("solar_peak_wm2 must be non-negative"));
        }
        Ok(())
    }
}

/// Where trace data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TracesSection {
    /// CSV file to load. When absent, traces are synthesized.
    pub path: Option<PathBuf>,
    pub synthetic: SyntheticSection,
}

/// Building envelope, plant, and electrical loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    /// Zone-to-outdoor conductance (envelope plus ventilation), kW/K.
    pub ua_out_kw_per_k: f64,
    /// Zone-air-to-thermal-mass conductance, kW/K.
    pub u_mass_kw_per_k: f64,
    /// Zone air heat capacity, kWh/K.
    pub c_zone_kwh_per_k: f64,
    /// Structural mass heat capacity, kWh/K.
    pub c_mass_kwh_per_k: f64,
    /// Primary chiller capacity, thermal kW.
    pub cooling_capacity_kw: f64,
    /// Plant coefficient of performance (thermal out per electric in).
    pub cop: f64,
    /// Always-on internal gains (servers, standby equipment), kW.
    pub internal_gain_base_kw: f64,
    /// Additional internal gains at full occupancy, kW.
    pub internal_gain_occupied_kw: f64,
    /// Effective solar aperture (glazing area times gain coefficient), m^2.
    pub solar_aperture_m2: f64,
    /// Non-HVAC electrical base load, kW.
    pub base_load_kw: f64,
    /// Additional non-HVAC load at full occupancy, kW.
    pub occupied_load_kw: f64,
    /// Zone air temperature at episode start, degrees C.
    pub t_zone_init_c: f64,
    /// Mass temperature at episode start, degrees C.
    pub t_mass_init_c: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection {
            ua_out_kw_per_k: 90.0,
            u_mass_kw_per_k: 110.0,
            c_zone_kwh_per_k: 65.0,
            c_mass_kwh_per_k: 900.0,
            cooling_capacity_kw: 2450.0,
            cop: 3.5,
            internal_gain_base_kw: 280.0,
            internal_gain_occupied_kw: 520.0,
            solar_aperture_m2: 900.0,
            base_load_kw: 80.0,
            occupied_load_kw: 220.0,
            t_zone_init_c: 26.0,
            t_mass_init_c: 26.0,
        }
    }
}

impl EnvSection {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ua_out_kw_per_k", self.ua_out_kw_per_k),
            ("u_mass_kw_per_k", self.u_mass_kw_per_k),
            ("c_zone_kwh_per_k", self.c_zone_kwh_per_k),
            ("c_mass_kwh_per_k", self.c_mass_kwh_per_k),
            ("cooling_capacity_kw", self.cooling_capacity_kw),
            ("cop", self.cop),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("env.{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("internal_gain_base_kw", self.internal_gain_base_kw),
            ("internal_gain_occupied_kw", self.internal_gain_occupied_kw),
            ("solar_aperture_m2", self.solar_aperture_m2),
            ("base_load_kw", self.base_load_kw),
            ("occupied_load_kw", self.occupied_load_kw),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("env.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Chilled-water thermal energy storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TesSection {
    pub volume_m3: f64,
    /// Usable temperature differential of the store, K.
    pub delta_t_k: f64,
    /// Secondary chiller charging rate, thermal kW.
    pub charge_rate_kw: f64,
    /// Maximum discharge rate, thermal kW.
    pub discharge_rate_kw: f64,
    pub initial_soc: f64,
}

impl Default for TesSection {
    fn default() -> Self {
        TesSection {
            volume_m3: 100.0,
            delta_t_k: 6.0,
            charge_rate_kw: 400.0,
            discharge_rate_kw: 400.0,
            initial_soc: 0.0,
        }
    }
}

impl TesSection {
    /// Storage capacity in thermal kWh: V * rho * c_p * dT.
    pub fn capacity_kwh(&self) -> f64 {
        self.volume_m3 * 1000.0 * 4.186 * self.delta_t_k / 3600.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_m3 > 0.0 && self.delta_t_k > 0.0) {
            return Err(Error::config("tes volume and delta_t must be > 0"));
        }
        if self.charge_rate_kw < 0.0 || self.discharge_rate_kw < 0.0 {
            return Err(Error::config("tes rates must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::config(format!(
                "tes.initial_soc must be in [0, 1], got {}",
                self.initial_soc
            )));
        }
        Ok(())
    }
}

/// Occupancy calendar: [open, close) hours per day class; open == close
/// means closed all day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub weekday_open_hour: u32,
    pub weekday_close_hour: u32,
    pub saturday_open_hour: u32,
    pub saturday_close_hour: u32,
    pub sunday_open_hour: u32,
    pub sunday_close_hour: u32,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            weekday_open_hour: 6,
            weekday_close_hour: 24,
            saturday_open_hour: 6,
            saturday_close_hour: 17,
            sunday_open_hour: 0,
            sunday_close_hour: 0,
        }
    }
}

impl ScheduleSection {
    pub fn validate(&self) -> Result<()> {
        for (name, open, close) in [
            ("weekday", self.weekday_open_hour, self.weekday_close_hour),
            ("saturday", self.saturday_open_hour, self.saturday_close_hour),
            ("sunday", self.sunday_open_hour, self.sunday_close_hour),
        ] {
            if open > 24 || close > 24 || open > close {
                return Err(Error::config(format!(
                    "schedule.{name}: hours [{open}, {close}) must satisfy open <= close <= 24"
                )));
            }
        }
        Ok(())
    }
}

/// Comfort band by occupancy state, degrees C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComfortSection {
    pub occupied_min_c: f64,
    pub occupied_max_c: f64,
    pub unoccupied_min_c: f64,
    pub unoccupied_max_c: f64,
}

impl Default for ComfortSection {
    fn default() -> Self {
        ComfortSection {
            occupied_min_c: 21.0,
            occupied_max_c: 26.0,
            unoccupied_min_c: 15.0,
            unoccupied_max_c: 32.0,
        }
    }
}

impl ComfortSection {
    pub fn validate(&self) -> Result<()> {
        if self.occupied_min_c >= self.occupied_max_c {
            return Err(Error::config("comfort occupied band must have min < max"));
        }
        if self.unoccupied_min_c >= self.unoccupied_max_c {
            return Err(Error::config("comfort unoccupied band must have min < max"));
        }
        Ok(())
    }
}

/// Fixed-schedule baseline controller setpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbcSection {
    pub occupied_setpoint_c: f64,
    pub setback_setpoint_c: f64,
}

impl Default for RbcSection {
    fn default() -> Self {
        RbcSection {
            occupied_setpoint_c: 24.0,
            setback_setpoint_c: 30.0,
        }
    }
}

/// Hyperparameter sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            gammas: vec![0.99, 0.95, 0.90],
            alphas: vec![0.05, 0.2],
            lambdas: vec![100.0, 500.0, 1000.0],
            seeds: vec![1, 2, 3],
        }
    }
}

impl SweepSection {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.alphas.is_empty() || self.lambdas.is_empty() || self.seeds.is_empty()
        {
            return Err(Error::config("sweep axes must be non-empty"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.gammas.len() * self.alphas.len() * self.lambdas.len()
    }
}

/// Training-budget robustness grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessSection {
    pub episodes: Vec<u32>,
    pub update_intervals: Vec<u64>,
    /// Training window used by every cell (shorter than the main season).
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    /// Minibatch override so single-episode cells still reach the batch size.
    pub minibatch_size: usize,
    pub seed: u64,
    /// Cells whose discomfort exceeds this percentage of the baseline's are
    /// flagged as excluded in the summary.
    pub exclusion_threshold_pct: f64,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection {
            episodes: vec![1, 2, 5, 10, 50],
            update_intervals: vec![4, 96, 672],
            train_start: NaiveDate::from_ymd_opt(2017, 5, 1).unwrap(),
            train_end: NaiveDate::from_ymd_opt(2017, 5, 31).unwrap(),
            minibatch_size: 128,
            seed: 1,
            exclusion_threshold_pct: 150.0,
        }
    }
}

impl RobustnessSection {
    pub fn validate(&self) -> Result<()> {
        if self.episodes.is_empty() || self.update_intervals.is_empty() {
            return Err(Error::config("robustness axes must be non-empty"));
        }
        if self.episodes.contains(&0) {
            return Err(Error::config("robustness episode counts must be positive"));
        }
        if self.update_intervals.contains(&0) {
            return Err(Error::config("robustness update intervals must be positive"));
        }
        if self.train_end < self.train_start {
            return Err(Error::config("robustness train window is inverted"));
        }
        if self.minibatch_size == 0 {
            return Err(Error::config("robustness minibatch_size must be positive"));
        }
        if self.exclusion_threshold_pct <= 0.0 {
            return Err(Error::config("exclusion_threshold_pct must be positive"));
        }
        Ok(())
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub hyperparams: HyperParams,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub traces: TracesSection,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub tes: TesSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub comfort: ComfortSection,
    #[serde(default)]
    pub rbc: RbcSection,
    #[serde(default)]
    pub normalization: NormalizationSpec,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub robustness: RobustnessSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            hyperparams: HyperParams::default(),
            run: RunSection::default(),
            traces: TracesSection::default(),
            env: EnvSection::default(),
            tes: TesSection::default(),
            schedule: ScheduleSection::default(),
            comfort: ComfortSection::default(),
            rbc: RbcSection::default(),
            normalization: NormalizationSpec::default(),
            sweep: SweepSection::default(),
            robustness: RobustnessSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("failed to parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.hyperparams.validate()?;
        self.run.validate()?;
        self.traces.synthetic.validate()?;
        self.env.validate()?;
        self.tes.validate()?;
        self.schedule.validate()?;
        self.comfort.validate()?;
        self.normalization.validate()?;
        self.sweep.validate()?;
        self.robustness.validate()?;
        Ok(())
    }
}
