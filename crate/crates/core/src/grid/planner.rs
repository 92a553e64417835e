//! Perfect-foresight planning over a horizon.
//!
//! Small instances go to branch and bound, started from the relax-and-fix
//! plan and capped at a node budget in automatic mode. Long horizons (a year of
//! hourly steps carries tens of thousands of binaries) use a relax-and-fix
//! scheme instead: solve the convex hull relaxation, round the segment
//! choices with error diffusion on the on-fraction, solve the fixed-segment
//! LP with priced slack on forced minimum powers, switch the steps that used
//! slack to idle and repeat. The relaxation bound gives the reported gap.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::builder::{build_horizon_program, BuildOptions, HorizonProgram, SegVars, SegmentPolicy, StepSegments};
use super::dynamics::DispatchDecision;
use super::{MicrogridSpec, ScenarioSeries};
use crate::error::{Error, Result};
use crate::milp::{self, SolveOptions, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    /// Branch and bound to proven optimality.
    Exact,
    /// Relax-and-fix with a gap against the hull relaxation.
    RelaxAndFix,
    /// The program had no segment choice to make.
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    Auto,
    Exact,
    RelaxAndFix,
}

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub mode: PlanMode,
    /// Auto mode uses branch and bound up to this many binaries.
    pub exact_binary_limit: usize,
    /// Node budget of that branch and bound. It starts from the relax-and-fix
    /// plan, which is kept when the budget runs out.
    pub auto_node_limit: usize,
    pub rounds: usize,
    pub solve: SolveOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { mode: PlanMode::Auto, exact_binary_limit: 160, auto_node_limit: 500, rounds: 5, solve: SolveOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub trajectory: Vec<DispatchDecision>,
    pub segments: Vec<StepSegments>,
    pub objective: f64,
    pub bound: f64,
    pub method: PlanMethod,
    pub nodes: usize,
    pub wall_time: Duration,
}

impl Plan {
    pub fn gap(&self) -> f64 {
        (self.objective - self.bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

fn schedule_of(traj: &[DispatchDecision]) -> Vec<StepSegments> {
    traj.iter().map(|d| StepSegments::fixed(d.seg_c, d.seg_d)).collect()
}

fn check(sol: &milp::Solution, what: &str) -> Result<()> {
    match sol.status {
        Status::Optimal => Ok(()),
        Status::LimitHit if sol.objective.is_finite() => {
            log::warn!("{what}: limit hit, using best iterate (gap {:.2e})", sol.gap());
            Ok(())
        }
        Status::Infeasible => Err(Error::Infeasible(what.to_string())),
        s => Err(Error::Solver(format!("{what}: {s:?}"))),
    }
}

/// Plans the first `horizon` steps of `scenario` with full knowledge.
/// `options.segments` is ignored: the planner chooses the segments.
pub fn plan(
    spec: &MicrogridSpec,
    scenario: &ScenarioSeries,
    horizon: usize,
    build: &BuildOptions,
    options: &PlanOptions,
) -> Result<Plan> {
    let start = Instant::now();
    let base = BuildOptions { segments: None, ..build.clone() };
    let hp = build_horizon_program(spec, scenario, horizon, &base)?;
    let nb = hp.program.num_binaries();
    let exact = match options.mode {
        PlanMode::Exact => true,
        PlanMode::RelaxAndFix => false,
        PlanMode::Auto => nb <= options.exact_binary_limit,
    };
    if nb == 0 || (exact && options.mode == PlanMode::Exact) {
        let sol = milp::solve(&hp.program, &options.solve)?;
        check(&sol, "perfect-foresight program")?;
        return Ok(exact_plan(&hp, &sol, nb, start));
    }
    let heur = relax_and_fix(spec, scenario, horizon, &base, options, start)?;
    if !exact {
        return Ok(heur);
    }
    let warm = fixed_point(&hp, &heur.segments, &options.solve);
    let mut solve = options.solve.clone();
    solve.node_limit = Some(solve.node_limit.map_or(options.auto_node_limit, |l| l.min(options.auto_node_limit)));
    let sol = milp::solve_milp_from(&hp.program, &solve, warm.as_deref())?;
    if sol.status == Status::Optimal {
        return Ok(exact_plan(&hp, &sol, nb, start));
    }
    if sol.status == Status::LimitHit && sol.objective < heur.objective - 1e-9 * heur.objective.abs().max(1.0) {
        let mut p = exact_plan(&hp, &sol, nb, start);
        p.method = PlanMethod::RelaxAndFix;
        p.bound = sol.bound.max(heur.bound);
        return Ok(p);
    }
    log::info!("branch and bound stopped after {} nodes; keeping the relax-and-fix plan", sol.nodes);
    let bound = if sol.status == Status::LimitHit { sol.bound.max(heur.bound) } else { heur.bound };
    Ok(Plan { bound, nodes: sol.nodes, wall_time: start.elapsed(), ..heur })
}

fn exact_plan(hp: &HorizonProgram, sol: &milp::Solution, nb: usize, start: Instant) -> Plan {
    let trajectory = hp.trajectory(&sol.x);
    Plan {
        segments: schedule_of(&trajectory),
        trajectory,
        objective: sol.objective,
        bound: if sol.status == Status::Optimal { sol.objective } else { sol.bound },
        method: if nb == 0 { PlanMethod::Convex } else { PlanMethod::Exact },
        nodes: sol.nodes,
        wall_time: start.elapsed(),
    }
}

/// Point of the binary program that follows `schedule`: the segment binaries
/// are fixed and the remaining LP is solved.
fn fixed_point(hp: &HorizonProgram, schedule: &[StepSegments], opts: &SolveOptions) -> Option<Vec<f64>> {
    let mut p = hp.program.clone();
    for (v, seg) in hp.steps.iter().zip(schedule) {
        for (segs, policy) in [(&v.charge, seg.charge), (&v.discharge, seg.discharge)] {
            let pick = match policy {
                SegmentPolicy::Fixed(k) => k,
                _ => return None,
            };
            for s in segs {
                if let Some(j) = s.on {
                    let on = if pick == Some(s.seg) { 1.0 } else { 0.0 };
                    p.lower[j] = on;
                    p.upper[j] = on;
                }
            }
        }
    }
    let sol = milp::solve(&p.relaxed(), opts).ok()?;
    (sol.status == Status::Optimal).then_some(sol.x)
}

/// Per-step on-fraction and the segment carrying most of it.
fn hull_choice(x: &[f64], segs: &[SegVars]) -> (f64, Option<usize>) {
    let mut total = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for s in segs {
        let z = s.on.map_or(0.0, |j| x[j]);
        total += z;
        if z > 1e-9 && best.is_none_or(|b| z > b.1 + 1e-12) {
            best = Some((s.seg, z));
        }
    }
    (total, best.map(|b| b.0))
}

/// Error-diffusion rounding of on-fractions to a fixed schedule.
fn round_schedule(hp: &HorizonProgram, x: &[f64]) -> Vec<StepSegments> {
    let mut carry = [0.0f64; 2];
    hp.steps
        .iter()
        .map(|v| {
            let mut pick = |dir: usize, segs: &[SegVars]| -> SegmentPolicy {
                let (frac, seg) = hull_choice(x, segs);
                if segs.iter().all(|s| s.on.is_none()) {
                    // linear curve: nothing to decide
                    return SegmentPolicy::Fixed(segs.first().map(|s| s.seg));
                }
                let level = frac + carry[dir];
                match seg {
                    Some(k) if level >= 0.5 => {
                        carry[dir] = level - 1.0;
                        SegmentPolicy::Fixed(Some(k))
                    }
                    _ => {
                        carry[dir] = level;
                        SegmentPolicy::Fixed(None)
                    }
                }
            };
            let charge = pick(0, &v.charge);
            let discharge = pick(1, &v.discharge);
            StepSegments { charge, discharge }
        })
        .collect()
}

fn relax_and_fix(
    spec: &MicrogridSpec,
    scenario: &ScenarioSeries,
    horizon: usize,
    base: &BuildOptions,
    options: &PlanOptions,
    start: Instant,
) -> Result<Plan> {
    let hull = BuildOptions { segments: Some(vec![StepSegments::HULL; horizon]), ..base.clone() };
    let hp = build_horizon_program(spec, scenario, horizon, &hull)?;
    let rel = milp::solve(&hp.program, &options.solve)?;
    check(&rel, "hull relaxation")?;
    let bound = if rel.status == Status::Optimal { rel.objective } else { f64::NEG_INFINITY };
    let mut schedule = round_schedule(&hp, &rel.x);

    let penalty = 10.0 * spec.prices.c_l.max(1.0) * spec.dt;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let elastic = rounds <= options.rounds;
        let opts = BuildOptions {
            segments: Some(schedule.clone()),
            elastic_penalty: elastic.then_some(penalty),
            ..base.clone()
        };
        let fp = build_horizon_program(spec, scenario, horizon, &opts)?;
        let sol = milp::solve(&fp.program, &options.solve)?;
        check(&sol, "fixed-segment program")?;
        let mut changed = false;
        if elastic {
            for t in 0..horizon {
                let (sc, sd) = fp.elastic_slack(&sol.x, t);
                if sc > 1e-7 {
                    schedule[t].charge = SegmentPolicy::Fixed(None);
                    changed = true;
                }
                if sd > 1e-7 {
                    schedule[t].discharge = SegmentPolicy::Fixed(None);
                    changed = true;
                }
            }
        }
        if !elastic || !changed {
            let trajectory = fp.trajectory(&sol.x);
            log::info!("relax-and-fix finished after {rounds} round(s), objective {:.4}, bound {bound:.4}", sol.objective);
            return Ok(Plan {
                segments: schedule_of(&trajectory),
                trajectory,
                objective: sol.objective,
                bound,
                method: PlanMethod::RelaxAndFix,
                nodes: 0,
                wall_time: start.elapsed(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::validate_trajectory_with;
    use crate::grid::ValidateOptions;
    use chrono::NaiveDate;

    fn scenario(n: usize) -> ScenarioSeries {
        let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let load = (0..n).map(|t| 55.0 + 25.0 * ((t as f64) * 0.7).sin()).collect();
        let solar = (0..n).map(|t| (60.0 * ((t as f64) * 0.5).cos()).max(0.0)).collect();
        let wind = (0..n).map(|t| 15.0 + 10.0 * ((t as f64) * 1.3).sin()).collect();
        ScenarioSeries::hourly("p", start, load, solar, wind).unwrap()
    }

    #[test]
    fn relax_and_fix_is_feasible_and_close() {
        let spec = MicrogridSpec::test_system().unwrap();
        let s = scenario(24);
        let exact = plan(&spec, &s, 24, &BuildOptions::default(), &PlanOptions { mode: PlanMode::Exact, ..Default::default() }).unwrap();
        let heur = plan(&spec, &s, 24, &BuildOptions::default(), &PlanOptions { mode: PlanMode::RelaxAndFix, ..Default::default() }).unwrap();
        assert!(heur.objective >= exact.objective - 1e-6);
        assert!(heur.bound <= exact.objective + 1e-6);
        let opts = ValidateOptions { terminal: true, ..Default::default() };
        let v = validate_trajectory_with(&heur.trajectory, &spec, &s, &opts);
        assert!(v.is_empty(), "{v:?}");
        assert!(validate_trajectory_with(&exact.trajectory, &spec, &s, &opts).is_empty());
    }
}
