//! Virtual-queue online convex optimization with a parallel expert ensemble.
//!
//! Each expert runs the proximal step
//! `min α⟨∂f, x⟩ + αβ⟨Q, [g(x)]₊⟩ + ‖x − x_prev‖²` over a static feasible set
//! with its own step size; the clipped term is written with non-negative
//! slacks so the inner problem is a convex QP. Exponential weights on the
//! linearized losses mix the experts into the committed decision.

mod config;
mod ensemble;
mod regret;
mod stream;

pub use config::{initial_weights, num_experts, OcoConfig};
pub use ensemble::{
    aggregate_decision, clipped_objective, expert_decision, expert_decision_with, KnownTerm, update_expert_weights, update_virtual_queue, Affine,
    Ensemble, ExpertState, ExpertTrace, FeasibleSet, StepFeedback, StepTrace,
};
pub use regret::{compute_regret, log_log_slope, RegretReport};
pub use stream::{bench_regret, ConvexStream, RegretPoint};
