use super::reconcile::StepState;
use crate::error::{Error, Result};
use crate::grid::{
    build_horizon_program, BuildOptions, DispatchDecision, InitialState, MicrogridSpec, ScenarioSeries, SocPenalty,
    StepSegments,
};
use crate::milp::{self, SolveOptions, Status};

/// Settings of one receding-horizon solve.
#[derive(Debug, Clone, Copy)]
pub struct MpcStep<'a> {
    /// Absolute index of the first window step.
    pub offset: usize,
    pub phi: f64,
    /// Hydrogen reference over the window (kg).
    pub reference: Option<&'a [f64]>,
    pub segments: &'a [StepSegments],
    /// Require the window to end with the storages at least as full as they
    /// started.
    pub terminal: bool,
}

fn start_of(spec: &MicrogridSpec, state: StepState) -> InitialState {
    let (b, h) = (&spec.battery, &spec.hydrogen);
    InitialState {
        e_b: state.e_b.clamp(b.e_min, b.e_max),
        e_h: state.e_h.clamp(h.e_min, h.e_max),
        p_d_prev: state.p_d_prev,
    }
}

/// First action of the fixed-segment window program on `window`.
///
/// Forced segment minimums are elastic, priced like ten times load
/// shedding. When the window is still infeasible (for instance a forced
/// electrolyzer with a full tank) the solve is repeated with the hydrogen
/// system idle.
pub fn mpc_step(spec: &MicrogridSpec, state: StepState, window: &ScenarioSeries, step: &MpcStep, opts: &SolveOptions) -> Result<DispatchDecision> {
    let n = window.len();
    if n == 0 {
        return Err(Error::Parameter("MPC window is empty".into()));
    }
    let soc_penalty = match step.reference {
        Some(r) if step.phi > 0.0 => Some(SocPenalty { phi: step.phi, reference: r[..n.min(r.len())].to_vec() }),
        _ => None,
    };
    let build = BuildOptions {
        start: Some(start_of(spec, state)),
        offset: step.offset,
        segments: Some(step.segments[..n.min(step.segments.len())].to_vec()),
        soc_penalty,
        terminal: step.terminal,
        elastic_penalty: Some(10.0 * spec.prices.c_l.max(1.0) * spec.dt),
    };
    let attempt = |b: &BuildOptions| -> Result<Option<DispatchDecision>> {
        let hp = build_horizon_program(spec, window, n, b)?;
        let sol = milp::solve(&hp.program, opts)?;
        Ok(match sol.status {
            Status::Optimal => Some(hp.decision(&sol.x, 0)),
            Status::LimitHit if sol.objective.is_finite() => Some(hp.decision(&sol.x, 0)),
            _ => None,
        })
    };
    if let Some(d) = attempt(&build)? {
        return Ok(d);
    }
    log::debug!("MPC window at step {} infeasible with its segments; retrying idle", step.offset);
    let idle = BuildOptions { segments: Some(vec![StepSegments::IDLE; n]), ..build };
    attempt(&idle)?.ok_or_else(|| Error::Solver(format!("MPC window at step {} has no feasible dispatch", step.offset)))
}
