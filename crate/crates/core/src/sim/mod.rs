//! Rollouts of the dispatch methods with physical reconciliation.

mod forecast;
mod method;
mod mpc;
mod oco_dispatch;
mod reconcile;
mod rollout;
mod synth;

pub use forecast::Forecaster;
pub use method::{ForecastKind, MethodConfig, MethodKind, MpcConfig, ReferenceSource, DEFAULT_PHI, DEFAULT_SIGMA};
pub use mpc::{mpc_step, MpcStep};
pub use oco_dispatch::{best_segment, DirMode, OcoDispatcher};
pub use reconcile::{reconcile, StepInput, StepState};
pub use rollout::{
    evaluate_methods, metrics_jsonl, results_csv, run_rollout, trajectory_csv, write_results_csv, RolloutContext, RolloutResult,
    Totals, RESULTS_HEADER, TRAJECTORY_HEADER,
};
pub use synth::{synthetic_year, SynthConfig};
