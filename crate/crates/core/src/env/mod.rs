//! Building simulator: thermal dynamics, storage, schedules, traces, and
//! observation construction.

pub mod building;
pub mod observation;
pub mod schedule;
pub mod tes;
pub mod thermal;
pub mod traces;

pub use building::{BuildingEnv, BuildingState, SimStepRecord, StepResult};
pub use observation::{build_observation, ObsContext};
pub use schedule::{rbc_policy, Calendar, ComfortSchedule};
pub use tes::Tes;
pub use thermal::ThermalModel;
pub use traces::{synthesize, TraceRow, TraceSet, TRACE_HEADER};
