use serde::Serialize;

use super::builder::InitialState;
use super::dynamics::{battery_soc_step, hydrogen_soc_step, DispatchDecision};
use super::{MicrogridSpec, ScenarioSeries};

/// Absolute feasibility tolerance in native units.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintTag {
    Nonnegative,
    BatteryPower,
    BatterySoc,
    BatteryDynamics,
    HydrogenPower,
    HydrogenRate,
    HydrogenSoc,
    HydrogenDynamics,
    Segment,
    DieselBounds,
    DieselRamp,
    LoadCurtailment,
    Renewable,
    GridImport,
    Balance,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub tag: ConstraintTag,
    /// Signed amount by which the constraint is exceeded.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub start: Option<InitialState>,
    /// Absolute index of the first step.
    pub offset: usize,
    pub terminal: bool,
    pub tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { start: None, offset: 0, terminal: false, tol: FEAS_TOL }
    }
}

/// Every violated constraint of the trajectory, starting from the spec's
/// initial state.
pub fn validate_trajectory(traj: &[DispatchDecision], spec: &MicrogridSpec, scenario: &ScenarioSeries) -> Vec<Violation> {
    validate_trajectory_with(traj, spec, scenario, &ValidateOptions::default())
}

pub fn validate_trajectory_with(
    traj: &[DispatchDecision],
    spec: &MicrogridSpec,
    scenario: &ScenarioSeries,
    opts: &ValidateOptions,
) -> Vec<Violation> {
    let tol = opts.tol;
    let start = opts.start.unwrap_or_else(|| InitialState::from_spec(spec));
    let (b, h, d) = (&spec.battery, &spec.hydrogen, &spec.diesel);
    let dt = spec.dt;
    let mut out = Vec::new();
    let flag = |out: &mut Vec<Violation>, step: usize, tag: ConstraintTag, residual: f64| {
        if residual > tol {
            out.push(Violation { step, tag, residual });
        }
    };
    let mut e_b = start.e_b;
    let mut e_h = start.e_h;
    let mut p_d_prev = start.p_d_prev;
    for (t, x) in traj.iter().enumerate().take(scenario.len()) {
        let abs = opts.offset + t;
        let powers = [x.p_b_c, x.p_b_d, x.p_h_c, x.p_h_d, x.p_d, x.p_l, x.p_r, x.p_g, x.h_c, x.h_d];
        let neg = powers.iter().fold(0.0f64, |m, v| m.max(-v));
        flag(&mut out, t, ConstraintTag::Nonnegative, neg);

        flag(&mut out, t, ConstraintTag::BatteryPower, (x.p_b_c - b.p_max).max(x.p_b_d - b.p_max));
        flag(&mut out, t, ConstraintTag::BatterySoc, (x.e_b - b.e_max).max(b.e_min - x.e_b));
        let eb_next = battery_soc_step(e_b, x.p_b_c, x.p_b_d, spec, dt);
        flag(&mut out, t, ConstraintTag::BatteryDynamics, (x.e_b - eb_next).abs());

        flag(&mut out, t, ConstraintTag::HydrogenPower, (x.p_h_c - h.p_max).max(x.p_h_d - h.p_max));
        for (p, rate, seg, curve) in [
            (x.p_h_c, x.h_c, x.seg_c, &h.charge_curve),
            (x.p_h_d, x.h_d, x.seg_d, &h.discharge_curve),
        ] {
            match seg {
                None => flag(&mut out, t, ConstraintTag::Segment, p.abs().max(rate.abs())),
                Some(k) if k >= curve.n_segments() => flag(&mut out, t, ConstraintTag::Segment, f64::INFINITY),
                Some(k) => {
                    let s = curve.segments[k];
                    let linear = curve.is_linear_through_origin();
                    let lo = if linear { 0.0 } else { s.p_lo };
                    flag(&mut out, t, ConstraintTag::Segment, (lo - p).max(p - s.p_hi));
                    let want = s.slope * p + if linear { 0.0 } else { s.intercept };
                    flag(&mut out, t, ConstraintTag::HydrogenRate, (rate - want).abs());
                }
            }
        }
        flag(&mut out, t, ConstraintTag::HydrogenSoc, (x.e_h - h.e_max).max(h.e_min - x.e_h));
        let eh_next = hydrogen_soc_step(e_h, x.h_c, x.h_d, spec.hydrogen_load_at(abs), dt);
        flag(&mut out, t, ConstraintTag::HydrogenDynamics, (x.e_h - eh_next).abs());

        flag(&mut out, t, ConstraintTag::DieselBounds, (x.p_d - d.p_max).max(d.p_min - x.p_d));
        if let Some(prev) = p_d_prev {
            flag(&mut out, t, ConstraintTag::DieselRamp, (x.p_d - prev - d.ru).max(prev - x.p_d - d.rd));
        }
        flag(&mut out, t, ConstraintTag::LoadCurtailment, x.p_l - scenario.load[t]);
        flag(&mut out, t, ConstraintTag::Renewable, x.p_r - scenario.renewable(t));
        let mut cap = spec.grid_cap_at(abs);
        if let Some(g) = scenario.grid_at(t) {
            cap = cap.min(g);
        }
        flag(&mut out, t, ConstraintTag::GridImport, x.p_g - cap);
        let r = x.balance_residual(scenario.load[t]);
        if r.abs() > tol {
            out.push(Violation { step: t, tag: ConstraintTag::Balance, residual: r });
        }
        e_b = x.e_b;
        e_h = x.e_h;
        p_d_prev = Some(x.p_d);
    }
    if opts.terminal && !traj.is_empty() {
        let last = traj.len() - 1;
        let r = (start.e_h - e_h).max(start.e_b - e_b);
        if r > tol {
            out.push(Violation { step: last, tag: ConstraintTag::Terminal, residual: r });
        }
    }
    out
}
