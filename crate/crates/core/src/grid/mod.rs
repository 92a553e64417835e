//! Microgrid data model, per-step dynamics, stage cost and the dispatch
//! program builder.

mod builder;
mod dynamics;
mod planner;
mod scenario;
mod spec;
mod validate;

pub use builder::{
    build_horizon_program, BuildOptions, HorizonProgram, InitialState, SegVars, SegmentPolicy, SocPenalty, StepSegments,
    StepVars,
};
pub use dynamics::{battery_soc_step, hydrogen_soc_step, stage_cost, CostBreakdown, DispatchDecision};
pub use planner::{plan, Plan, PlanMethod, PlanMode, PlanOptions};
pub use scenario::{Provenance, ScenarioSeries};
pub use spec::{
    BatterySpec, Capacities, CurveSettings, DieselSpec, EfficiencyModel, HydrogenSpec, MicrogridSpec, Prices,
};
pub use validate::{validate_trajectory, validate_trajectory_with, ConstraintTag, ValidateOptions, Violation, FEAS_TOL};
