//! Rollouts of the five dispatch methods and their comparison table.
//!
//! Every method plans with the hydrogen curves of its efficiency model and
//! is replayed against the true physics (the piecewise fit of the
//! semi-empirical curves). "Theoretical" totals are those of the committed
//! decisions, "practical" totals those of the reconciled trajectory.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::forecast::Forecaster;
use super::method::{MethodConfig, MethodKind, ReferenceSource};
use super::mpc::{mpc_step, MpcStep};
use super::oco_dispatch::{best_segment, DirMode, OcoDispatcher};
use super::reconcile::{reconcile, StepInput, StepState};
use crate::error::{Error, Result};
use crate::grid::{
    plan, stage_cost, BuildOptions, Capacities, CostBreakdown, CurveSettings, DispatchDecision, MicrogridSpec, PlanOptions,
    ScenarioSeries, SegmentPolicy, StepSegments,
};
use crate::io::write_atomic;
use crate::milp::SolveOptions;
use crate::oco::{compute_regret, RegretReport};
use crate::reference::{blend_reference, reference_rmse, Blend, KernelTracker, ReferenceSet, ScenarioLibrary};

/// Yearly totals of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Totals {
    pub cost: CostBreakdown,
    pub dg_mwh: f64,
    pub lol_mwh: f64,
    /// Electrical energy into the electrolyzer and out of the fuel cell.
    pub h2_charge_mwh: f64,
    pub h2_discharge_mwh: f64,
}

impl Totals {
    pub fn of(traj: &[DispatchDecision], spec: &MicrogridSpec) -> Self {
        let mut t = Totals::default();
        let k = spec.dt / 1000.0;
        for d in traj {
            t.cost += stage_cost(d, spec, spec.dt);
            t.dg_mwh += d.p_d * k;
            t.lol_mwh += d.p_l * k;
            t.h2_charge_mwh += d.p_h_c * k;
            t.h2_discharge_mwh += d.p_h_d * k;
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RolloutResult {
    pub method: MethodKind,
    pub label: String,
    #[serde(skip)]
    pub committed: Vec<DispatchDecision>,
    #[serde(skip)]
    pub trajectory: Vec<DispatchDecision>,
    pub theoretical: Totals,
    pub practical: Totals,
    /// Hydrogen reference the method tracked (kg), when it used one.
    #[serde(skip)]
    pub reference: Option<Vec<f64>>,
    /// Hydrogen trajectory against the M0 trajectory, in percent of the tank.
    pub rmse_pct: Option<f64>,
    pub regret: Option<RegretReport>,
    /// Mean decision time per step (ms).
    pub step_ms: f64,
    #[serde(skip)]
    pub stage_costs: Vec<f64>,
}

/// Shared inputs of the rollouts of one comparison.
#[derive(Debug, Clone)]
pub struct RolloutContext<'a> {
    /// Builds the hydrogen curves of each efficiency model.
    pub curves: CurveSettings,
    pub library: Option<&'a ScenarioLibrary>,
    pub references: Option<&'a ReferenceSet>,
    /// M0 result the online methods are measured against.
    pub baseline: Option<&'a RolloutResult>,
    pub plan: PlanOptions,
    pub solve: SolveOptions,
}

impl<'a> RolloutContext<'a> {
    pub fn new(curves: CurveSettings) -> Self {
        Self { curves, library: None, references: None, baseline: None, plan: PlanOptions::default(), solve: SolveOptions::default() }
    }
}

fn step_input(spec: &MicrogridSpec, s: &ScenarioSeries, t: usize) -> StepInput {
    StepInput {
        load: s.load[t],
        renewable: s.renewable(t),
        grid_cap: s.grid_at(t).unwrap_or_else(|| spec.grid_cap_at(t)),
        hydrogen_load: spec.hydrogen_load_at(t),
    }
}

/// Source of the per-step hydrogen reference.
enum RefSource<'a> {
    None,
    Fixed(Vec<f64>, &'a ReferenceSet),
    Tracked(KernelTracker<'a>, &'a ReferenceSet),
}

impl<'a> RefSource<'a> {
    fn new(cfg: &MethodConfig, ctx: &RolloutContext<'a>, n: usize, caps: Capacities) -> Result<Self> {
        let need = |what: &str| Error::Config(format!("{} needs {what}", cfg.method.as_str()));
        match cfg.reference {
            ReferenceSource::None => Ok(Self::None),
            ReferenceSource::Fixed => {
                let refs = ctx.references.ok_or_else(|| need("offline references"))?;
                if refs.is_empty() || refs.horizon() < n {
                    return Err(Error::Dimension(format!("references cover {} of {n} steps", refs.horizon())));
                }
                let w = vec![1.0 / refs.len() as f64; refs.len()];
                let avg = (0..n).map(|t| blend_reference(&w, refs, t).map(|b| b.value)).collect::<Result<_>>()?;
                Ok(Self::Fixed(avg, refs))
            }
            ReferenceSource::Tracked { sigma } => {
                let refs = ctx.references.ok_or_else(|| need("offline references"))?;
                let lib = ctx.library.ok_or_else(|| need("a scenario library"))?;
                if refs.len() != lib.len() {
                    return Err(Error::Dimension(format!("{} references for {} library scenarios", refs.len(), lib.len())));
                }
                if refs.horizon() < n || lib.horizon() < n {
                    return Err(Error::Dimension(format!("library covers {} of {n} steps", refs.horizon().min(lib.horizon()))));
                }
                Ok(Self::Tracked(KernelTracker::new(lib, caps, sigma)?, refs))
            }
        }
    }

    /// Blend for step `t` with the weights known now.
    fn blend(&self, t: usize) -> Result<Option<Blend>> {
        match self {
            Self::None => Ok(None),
            Self::Fixed(avg, refs) => {
                let w = vec![1.0 / refs.len() as f64; refs.len()];
                let mut b = blend_reference(&w, refs, t)?;
                b.value = avg[t];
                Ok(Some(b))
            }
            Self::Tracked(tr, refs) => blend_reference(tr.weights(), refs, t).map(Some),
        }
    }

    fn observe(&mut self, s: &ScenarioSeries, t: usize) -> Result<()> {
        if let Self::Tracked(tr, _) = self {
            tr.observe(s.load[t], s.solar[t], s.wind[t])?;
        }
        Ok(())
    }
}

/// Per-unit power vector used for path lengths.
fn decision_vector(d: &DispatchDecision, base: f64) -> Vec<f64> {
    [d.p_b_c, d.p_b_d, d.p_h_c, d.p_h_d, d.p_d, d.p_l, d.p_r, d.p_g].iter().map(|v| v / base).collect()
}

/// Runs one method over the whole scenario. `truth` carries the physical
/// hydrogen curves used for reconciliation.
pub fn run_rollout(truth: &MicrogridSpec, scenario: &ScenarioSeries, cfg: &MethodConfig, ctx: &RolloutContext) -> Result<RolloutResult> {
    cfg.validate()?;
    scenario.validate()?;
    let n = scenario.len();
    if n == 0 {
        return Err(Error::Data("empty scenario".into()));
    }
    let model = truth.with_curves(ctx.curves.curves(cfg.efficiency_model)?);
    let mut committed = Vec::with_capacity(n);
    let mut trajectory = Vec::with_capacity(n);
    let mut reference = cfg.method.uses_reference().then(|| Vec::with_capacity(n));
    let mut busy = 0.0f64;
    let mut state = StepState::initial(truth);

    match cfg.method {
        MethodKind::M0 => {
            let t0 = Instant::now();
            let p = plan(&model, scenario, n, &BuildOptions::default(), &ctx.plan)?;
            busy = t0.elapsed().as_secs_f64();
            for (t, d) in p.trajectory.iter().enumerate() {
                let r = reconcile(d, step_input(truth, scenario, t), truth, state);
                state = StepState::after(&r);
                trajectory.push(r);
            }
            committed = p.trajectory;
        }
        MethodKind::M1 | MethodKind::M3 => {
            let oco = cfg.oco.clone().expect("validated");
            let oco = crate::oco::OcoConfig { horizon: n, ..oco };
            let mut disp = OcoDispatcher::new(&model, oco, cfg.phi, false)?;
            let mut refs = RefSource::new(cfg, ctx, n, truth.capacities)?;
            let h = &model.hydrogen;
            let statics = (DirMode::Free(best_segment(&h.charge_curve)), DirMode::Free(best_segment(&h.discharge_curve)));
            for t in 0..n {
                let t0 = Instant::now();
                let blend = refs.blend(t)?;
                let modes = match &blend {
                    Some(b) => (
                        b.seg_c.map_or(DirMode::Idle, DirMode::Forced),
                        b.seg_d.map_or(DirMode::Idle, DirMode::Forced),
                    ),
                    None => statics,
                };
                let r_t = blend.as_ref().map(|b| b.value);
                let x = disp.commit(&model, state, t, modes, r_t)?;
                busy += t0.elapsed().as_secs_f64();
                let input = step_input(truth, scenario, t);
                let real = reconcile(&x, input, truth, state);
                state = StepState::after(&real);
                let t1 = Instant::now();
                refs.observe(scenario, t)?;
                disp.learn(&model, input.load, input.renewable, r_t);
                busy += t1.elapsed().as_secs_f64();
                if let (Some(v), Some(r)) = (reference.as_mut(), r_t) {
                    v.push(r);
                }
                committed.push(x);
                trajectory.push(real);
            }
        }
        MethodKind::M2 | MethodKind::M4 => {
            let mpc = cfg.mpc.expect("validated");
            let mut fc = Forecaster::new(mpc.forecast);
            let mut refs = RefSource::new(cfg, ctx, n, truth.capacities)?;
            let h = &model.hydrogen;
            let statics = StepSegments {
                charge: SegmentPolicy::Relaxed(Some(best_segment(&h.charge_curve))),
                discharge: SegmentPolicy::Relaxed(Some(best_segment(&h.discharge_curve))),
            };
            for t in 0..n {
                let t0 = Instant::now();
                let len = mpc.horizon.min(n - t);
                let window = fc.window(scenario, t, len);
                let mut segs = Vec::with_capacity(len);
                let mut rvals = Vec::with_capacity(len);
                for k in 0..len {
                    match refs.blend(t + k)? {
                        Some(b) => {
                            segs.push(StepSegments::fixed(b.seg_c, b.seg_d));
                            rvals.push(b.value);
                        }
                        None => segs.push(statics),
                    }
                }
                let step = MpcStep {
                    offset: t,
                    phi: cfg.phi,
                    reference: (!rvals.is_empty()).then_some(&rvals[..]),
                    segments: &segs,
                    terminal: false,
                };
                let x = mpc_step(&model, state, &window, &step, &ctx.solve)?;
                busy += t0.elapsed().as_secs_f64();
                let real = reconcile(&x, step_input(truth, scenario, t), truth, state);
                state = StepState::after(&real);
                let t1 = Instant::now();
                refs.observe(scenario, t)?;
                busy += t1.elapsed().as_secs_f64();
                if let (Some(v), Some(r)) = (reference.as_mut(), rvals.first()) {
                    v.push(*r);
                }
                committed.push(x);
                trajectory.push(real);
            }
        }
    }

    let stage_costs: Vec<f64> = trajectory.iter().map(|d| stage_cost(d, truth, truth.dt).total).collect();
    let (rmse_pct, regret) = match ctx.baseline {
        Some(b) if b.trajectory.len() == n => {
            let eh: Vec<f64> = trajectory.iter().map(|d| d.e_h).collect();
            let beh: Vec<f64> = b.trajectory.iter().map(|d| d.e_h).collect();
            let rmse = 100.0 * reference_rmse(&eh, &beh, truth.hydrogen.e_max)?;
            let base = truth.capacities.load.max(1.0);
            let path: Vec<Vec<f64>> = b.trajectory.iter().map(|d| decision_vector(d, base)).collect();
            (Some(rmse), Some(compute_regret(&stage_costs, &b.stage_costs, &path)?))
        }
        _ if cfg.method == MethodKind::M0 => (Some(0.0), None),
        _ => (None, None),
    };
    Ok(RolloutResult {
        method: cfg.method,
        label: scenario.label.clone(),
        theoretical: Totals::of(&committed, &model),
        practical: Totals::of(&trajectory, truth),
        committed,
        trajectory,
        reference,
        rmse_pct,
        regret,
        step_ms: 1000.0 * busy / n as f64,
        stage_costs,
    })
}

/// Runs M0 first (the baseline of the others), then the remaining methods in
/// parallel. Rows come back in the order of `methods`.
pub fn evaluate_methods(
    truth: &MicrogridSpec,
    scenario: &ScenarioSeries,
    methods: &[MethodConfig],
    ctx: &RolloutContext,
) -> Result<Vec<RolloutResult>> {
    if methods.is_empty() {
        return Err(Error::Config("no methods to evaluate".into()));
    }
    let baseline = match methods.iter().find(|m| m.method == MethodKind::M0) {
        Some(m0) => Some(run_rollout(truth, scenario, m0, ctx)?),
        None => None,
    };
    let inner = RolloutContext { baseline: baseline.as_ref().or(ctx.baseline), ..ctx.clone() };
    let mut rest: Vec<(usize, RolloutResult)> = methods
        .par_iter()
        .enumerate()
        .filter(|(_, m)| m.method != MethodKind::M0)
        .map(|(i, m)| run_rollout(truth, scenario, m, &inner).map(|r| (i, r)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(methods.len());
    let mut base = baseline;
    for (i, m) in methods.iter().enumerate() {
        if m.method == MethodKind::M0 {
            out.push(base.take().ok_or_else(|| Error::Config("M0 listed twice".into()))?);
        } else {
            let k = rest.iter().position(|(j, _)| *j == i).expect("every row ran");
            out.push(rest.swap_remove(k).1);
        }
    }
    Ok(out)
}

pub const RESULTS_HEADER: &str = "method,cost_usd,dg_mwh,lol_mwh,rmse_pct,step_ms";
pub const TRAJECTORY_HEADER: &str = "t,p_b_c,p_b_d,p_h_c,p_h_d,p_d,p_l,p_r,p_g,e_b,e_h";

/// Comparison table with practical totals. The time column is left empty
/// unless `timing` is set, so that the table is reproducible byte for byte.
pub fn results_csv(results: &[RolloutResult], timing: bool) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in results {
        let p = &r.practical;
        let rmse = r.rmse_pct.map(|v| format!("{v:.4}")).unwrap_or_default();
        let ms = if timing { format!("{:.3}", r.step_ms) } else { String::new() };
        let _ = writeln!(s, "{},{:.4},{:.4},{:.4},{rmse},{ms}", r.method.as_str(), p.cost.total, p.dg_mwh, p.lol_mwh);
    }
    s
}

pub fn trajectory_csv(traj: &[DispatchDecision]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for (t, d) in traj.iter().enumerate() {
        let _ = writeln!(
            s,
            "{t},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            d.p_b_c, d.p_b_d, d.p_h_c, d.p_h_d, d.p_d, d.p_l, d.p_r, d.p_g, d.e_b, d.e_h
        );
    }
    s
}

/// One JSON object per result with theoretical and practical totals.
pub fn metrics_jsonl(results: &[RolloutResult], timing: bool) -> Result<String> {
    let mut s = String::new();
    for r in results {
        let mut v = serde_json::to_value(r).map_err(|e| Error::Data(e.to_string()))?;
        if !timing {
            v.as_object_mut().map(|o| o.remove("step_ms"));
        }
        s.push_str(&v.to_string());
        s.push('\n');
    }
    Ok(s)
}

pub fn write_results_csv(path: &std::path::Path, results: &[RolloutResult], timing: bool) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Data("no results to write".into()));
    }
    write_atomic(path, results_csv(results, timing).as_bytes())
}
