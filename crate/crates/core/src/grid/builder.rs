//! Assembly of horizon dispatch programs.
//!
//! Variables per step, in order: `p_bc, p_bd, e_b, e_h, p_d, p_l, p_r, p_g`,
//! then the electrolyzer segment variables, then the fuel cell ones. A
//! segment contributes a power variable `P` and, unless its on-state is fixed,
//! an on variable `z` linked by `lo·z ≤ P ≤ hi·z`; its hydrogen rate is
//! `slope·P + intercept·z`. Rows per step, in order: battery balance,
//! hydrogen balance, power balance, then per direction the two linking rows
//! of every segment with an on variable and one `Σz ≤ 1` row (binary or
//! full-hull relaxed policy), then two ramp rows when the ramp limits bind.
//! The terminal rows `E_T ≥ E_0` for both storages close the program.
//!
//! With `n_c + n_d` binary segments, horizon `T`, non-binding ramps and
//! terminal rows this gives `T·(8 + 2n_c + 2n_d)` variables and
//! `T·(5 + 2n_c + 2n_d) + 2` rows. Curves that are a single line through the
//! origin (constant efficiency) need no on variable: one power variable on
//! `[0, hi]` and no extra rows. Charging and discharging are not excluded by
//! binaries; with positive storage losses simultaneous operation is never
//! optimal.

use super::dynamics::DispatchDecision;
use super::{MicrogridSpec, ScenarioSeries};
use crate::electrochem::PiecewiseCurve;
use crate::error::{Error, Result};
use crate::milp::{Sense, StandardFormProgram};

/// How the hydrogen segment choice of one direction is modelled at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentPolicy {
    /// Binary on variables, at most one segment active.
    Binary,
    /// Segment fixed in advance (`None` = idle); yields a pure LP.
    Fixed(Option<usize>),
    /// Continuous on variables in `[0, 1]`: the convex hull of idle and the
    /// given segment, or of idle and every segment for `None`.
    Relaxed(Option<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StepSegments {
    pub charge: SegmentPolicy,
    pub discharge: SegmentPolicy,
}

impl StepSegments {
    pub const BINARY: Self = Self { charge: SegmentPolicy::Binary, discharge: SegmentPolicy::Binary };
    pub const HULL: Self = Self { charge: SegmentPolicy::Relaxed(None), discharge: SegmentPolicy::Relaxed(None) };
    pub const IDLE: Self = Self { charge: SegmentPolicy::Fixed(None), discharge: SegmentPolicy::Fixed(None) };

    pub fn fixed(charge: Option<usize>, discharge: Option<usize>) -> Self {
        Self { charge: SegmentPolicy::Fixed(charge), discharge: SegmentPolicy::Fixed(discharge) }
    }
}

/// Storage state and previous diesel output at the start of a program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub e_b: f64,
    pub e_h: f64,
    pub p_d_prev: Option<f64>,
}

impl InitialState {
    pub fn from_spec(spec: &MicrogridSpec) -> Self {
        Self { e_b: spec.battery.e0, e_h: spec.hydrogen.e0, p_d_prev: spec.diesel.initial }
    }
}

/// Quadratic penalty `φ·(e_h[t] − reference[t])²` on the end-of-step hydrogen mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SocPenalty {
    pub phi: f64,
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Defaults to the spec's initial state.
    pub start: Option<InitialState>,
    /// Absolute index of the first step, for the spec's per-step series.
    pub offset: usize,
    /// Per-step segment policies; `None` means binary everywhere.
    pub segments: Option<Vec<StepSegments>>,
    pub soc_penalty: Option<SocPenalty>,
    /// Add `E_T ≥ E_0` for both storages.
    pub terminal: bool,
    /// Soften the lower power bound of fixed segments with a priced slack.
    pub elastic_penalty: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { start: None, offset: 0, segments: None, soc_penalty: None, terminal: true, elastic_penalty: None }
    }
}

/// Variables of one hydrogen segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegVars {
    pub seg: usize,
    pub power: usize,
    pub on: Option<usize>,
    /// The segment is forced on (fixed policy): the intercept always applies.
    pub forced_on: bool,
    pub slack: Option<usize>,
    pub slope: f64,
    pub intercept: f64,
}

/// Column indices of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepVars {
    pub p_bc: usize,
    pub p_bd: usize,
    pub e_b: usize,
    pub e_h: usize,
    pub p_d: usize,
    pub p_l: usize,
    pub p_r: usize,
    pub p_g: usize,
    pub charge: Vec<SegVars>,
    pub discharge: Vec<SegVars>,
}

/// An assembled program with its column layout.
#[derive(Debug, Clone)]
pub struct HorizonProgram {
    pub program: StandardFormProgram,
    pub steps: Vec<StepVars>,
    pub start: InitialState,
    pub dt: f64,
}

fn seg_rate(x: &[f64], s: &SegVars) -> f64 {
    let z = match (s.on, s.forced_on) {
        (Some(j), _) => x[j],
        (None, true) => 1.0,
        (None, false) => 0.0,
    };
    s.slope * x[s.power] + s.intercept * z
}

fn active_segment(x: &[f64], segs: &[SegVars]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for s in segs {
        let level = match s.on {
            Some(j) => x[j],
            None if s.forced_on => 1.0,
            None => {
                if x[s.power] > 1e-9 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        if level > 1e-9 && best.is_none_or(|b| level > b.1) {
            best = Some((s.seg, level));
        }
    }
    best.map(|b| b.0)
}

impl HorizonProgram {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Decision of step `t` read from a solution vector.
    pub fn decision(&self, x: &[f64], t: usize) -> DispatchDecision {
        let v = &self.steps[t];
        DispatchDecision {
            p_b_c: x[v.p_bc],
            p_b_d: x[v.p_bd],
            p_h_c: v.charge.iter().map(|s| x[s.power]).sum(),
            p_h_d: v.discharge.iter().map(|s| x[s.power]).sum(),
            seg_c: active_segment(x, &v.charge),
            seg_d: active_segment(x, &v.discharge),
            p_d: x[v.p_d],
            p_l: x[v.p_l],
            p_r: x[v.p_r],
            p_g: x[v.p_g],
            h_c: v.charge.iter().map(|s| seg_rate(x, s)).sum(),
            h_d: v.discharge.iter().map(|s| seg_rate(x, s)).sum(),
            e_b: x[v.e_b],
            e_h: x[v.e_h],
        }
    }

    pub fn trajectory(&self, x: &[f64]) -> Vec<DispatchDecision> {
        (0..self.horizon()).map(|t| self.decision(x, t)).collect()
    }

    /// Elastic slack used at step `t` by the (charge, discharge) direction.
    pub fn elastic_slack(&self, x: &[f64], t: usize) -> (f64, f64) {
        let f = |segs: &[SegVars]| segs.iter().filter_map(|s| s.slack).map(|j| x[j]).sum::<f64>();
        (f(&self.steps[t].charge), f(&self.steps[t].discharge))
    }
}

fn add_direction(
    p: &mut StandardFormProgram,
    curve: &PiecewiseCurve,
    policy: SegmentPolicy,
    p_cap: f64,
    t: usize,
    tag: &str,
    elastic: Option<f64>,
) -> Result<Vec<SegVars>> {
    let n = curve.n_segments();
    let check = |k: usize| -> Result<()> {
        if k >= n {
            Err(Error::Dimension(format!("segment {k} of the {tag} curve does not exist (curve has {n})")))
        } else {
            Ok(())
        }
    };
    if curve.is_linear_through_origin() {
        if policy == SegmentPolicy::Fixed(None) {
            return Ok(Vec::new());
        }
        if let SegmentPolicy::Fixed(Some(k)) | SegmentPolicy::Relaxed(Some(k)) = policy {
            check(k)?;
        }
        let s = curve.segments[0];
        let power = p.add_var(format!("p_{tag}[{t}]"), 0.0, s.p_hi.min(p_cap), 0.0);
        return Ok(vec![SegVars { seg: 0, power, on: None, forced_on: false, slack: None, slope: s.slope, intercept: 0.0 }]);
    }
    let chosen: Vec<usize> = match policy {
        SegmentPolicy::Binary | SegmentPolicy::Relaxed(None) => (0..n).collect(),
        SegmentPolicy::Relaxed(Some(k)) | SegmentPolicy::Fixed(Some(k)) => {
            check(k)?;
            vec![k]
        }
        SegmentPolicy::Fixed(None) => Vec::new(),
    };
    let mut out = Vec::with_capacity(chosen.len());
    for k in chosen {
        let s = curve.segments[k];
        let hi = s.p_hi.min(p_cap);
        match policy {
            SegmentPolicy::Fixed(_) => {
                if hi < s.p_lo {
                    log::warn!("{tag} segment {k} lies above the power cap; step {t} set idle");
                    continue;
                }
                let (lo, slack) = match elastic {
                    Some(pen) => {
                        let power = p.add_var(format!("p_{tag}{k}[{t}]"), 0.0, hi, 0.0);
                        let sl = p.add_var(format!("slack_{tag}{k}[{t}]"), 0.0, s.p_lo, pen);
                        p.add_row(format!("elastic_{tag}{k}[{t}]"), vec![(power, 1.0), (sl, 1.0)], Sense::Ge, s.p_lo);
                        out.push(SegVars { seg: k, power, on: None, forced_on: true, slack: Some(sl), slope: s.slope, intercept: s.intercept });
                        continue;
                    }
                    None => (s.p_lo, None),
                };
                let power = p.add_var(format!("p_{tag}{k}[{t}]"), lo, hi, 0.0);
                out.push(SegVars { seg: k, power, on: None, forced_on: true, slack, slope: s.slope, intercept: s.intercept });
            }
            _ => {
                let power = p.add_var(format!("p_{tag}{k}[{t}]"), 0.0, hi.max(0.0), 0.0);
                let on = if policy == SegmentPolicy::Binary {
                    p.add_binary(format!("z_{tag}{k}[{t}]"), 0.0)
                } else {
                    p.add_var(format!("z_{tag}{k}[{t}]"), 0.0, 1.0, 0.0)
                };
                out.push(SegVars { seg: k, power, on: Some(on), forced_on: false, slack: None, slope: s.slope, intercept: s.intercept });
            }
        }
    }
    Ok(out)
}

fn add_link_rows(p: &mut StandardFormProgram, curve: &PiecewiseCurve, p_cap: f64, segs: &[SegVars], policy: SegmentPolicy, t: usize, tag: &str) {
    let mut sum = Vec::new();
    for s in segs {
        if let Some(z) = s.on {
            let seg = curve.segments[s.seg];
            let hi = seg.p_hi.min(p_cap).max(0.0);
            p.add_row(format!("lo_{tag}{}[{t}]", s.seg), vec![(z, seg.p_lo), (s.power, -1.0)], Sense::Le, 0.0);
            p.add_row(format!("hi_{tag}{}[{t}]", s.seg), vec![(s.power, 1.0), (z, -hi)], Sense::Le, 0.0);
            sum.push((z, 1.0));
        }
    }
    if matches!(policy, SegmentPolicy::Binary | SegmentPolicy::Relaxed(None)) && !sum.is_empty() {
        p.add_row(format!("one_{tag}[{t}]"), sum, Sense::Le, 1.0);
    }
}

/// Builds the dispatch program over the first `horizon` steps of `scenario`.
pub fn build_horizon_program(
    spec: &MicrogridSpec,
    scenario: &ScenarioSeries,
    horizon: usize,
    options: &BuildOptions,
) -> Result<HorizonProgram> {
    spec.validate()?;
    if horizon == 0 || horizon > scenario.len() {
        return Err(Error::Dimension(format!("horizon {horizon} does not fit a scenario of {} steps", scenario.len())));
    }
    if let Some(s) = &options.segments {
        if s.len() < horizon {
            return Err(Error::Dimension(format!("segment schedule covers {} of {horizon} steps", s.len())));
        }
    }
    if let Some(pen) = &options.soc_penalty {
        if pen.reference.len() < horizon {
            return Err(Error::Dimension(format!("reference covers {} of {horizon} steps", pen.reference.len())));
        }
        if !(pen.phi >= 0.0) {
            return Err(Error::Parameter("penalty coefficient must be non-negative".into()));
        }
    }
    let start = options.start.unwrap_or_else(|| InitialState::from_spec(spec));
    let (b, h, d) = (&spec.battery, &spec.hydrogen, &spec.diesel);
    let tol = 1e-9;
    if start.e_b < b.e_min - tol || start.e_b > b.e_max + tol {
        return Err(Error::Spec(format!("initial battery energy {} outside bounds", start.e_b)));
    }
    if start.e_h < h.e_min - tol || start.e_h > h.e_max + tol {
        return Err(Error::Spec(format!("initial hydrogen mass {} outside bounds", start.e_h)));
    }
    let dt = spec.dt;
    let keep = 1.0 - b.eps * dt;
    let pr = &spec.prices;
    let ramp = spec.ramp_binding();
    let mut p = StandardFormProgram::new();
    let mut steps: Vec<StepVars> = Vec::with_capacity(horizon);

    for t in 0..horizon {
        let abs = options.offset + t;
        let policies = options.segments.as_ref().map_or(StepSegments::BINARY, |s| s[t]);
        let load = scenario.load[t];
        let mut grid_cap = spec.grid_cap_at(abs);
        if let Some(g) = scenario.grid_at(t) {
            grid_cap = grid_cap.min(g);
        }
        let (mut d_lo, mut d_hi) = (d.p_min, d.p_max);
        if t == 0 {
            if let (Some(prev), true) = (start.p_d_prev, ramp) {
                d_lo = d_lo.max(prev - d.rd);
                d_hi = d_hi.min(prev + d.ru);
            }
        }
        let v_pbc = p.add_var(format!("p_bc[{t}]"), 0.0, b.p_max, 0.0);
        let v_pbd = p.add_var(format!("p_bd[{t}]"), 0.0, b.p_max, pr.c_b * dt);
        let v_eb = p.add_var(format!("e_b[{t}]"), b.e_min, b.e_max, 0.0);
        let v_eh = p.add_var(format!("e_h[{t}]"), h.e_min, h.e_max, 0.0);
        let v_pd = p.add_var(format!("p_d[{t}]"), d_lo, d_hi.max(d_lo), pr.c_d * dt);
        let v_pl = p.add_var(format!("p_l[{t}]"), 0.0, load, pr.c_l * dt);
        let v_pr = p.add_var(format!("p_r[{t}]"), 0.0, scenario.renewable(t), 0.0);
        let v_pg = p.add_var(format!("p_g[{t}]"), 0.0, grid_cap, 0.0);
        let charge = add_direction(&mut p, &h.charge_curve, policies.charge, h.p_max, t, "hc", options.elastic_penalty)?;
        let discharge = add_direction(&mut p, &h.discharge_curve, policies.discharge, h.p_max, t, "hd", options.elastic_penalty)?;
        for s in &discharge {
            p.objective[s.power] += pr.c_h * dt;
        }
        if let Some(pen) = &options.soc_penalty {
            let r = pen.reference[t];
            if pen.phi > 0.0 {
                p.add_quadratic(v_eh, 2.0 * pen.phi);
                p.objective[v_eh] -= 2.0 * pen.phi * r;
                p.objective_offset += pen.phi * r * r;
            }
        }

        // battery balance
        let mut row = vec![(v_eb, 1.0), (v_pbc, -dt * b.eta_c), (v_pbd, dt / b.eta_d)];
        let mut rhs = 0.0;
        if t == 0 {
            rhs = keep * start.e_b;
        } else {
            row.push((steps[t - 1].e_b, -keep));
        }
        p.add_row(format!("bat[{t}]"), row, Sense::Eq, rhs);

        // hydrogen balance
        let mut row = vec![(v_eh, 1.0)];
        let mut rhs = -spec.hydrogen_load_at(abs);
        if t == 0 {
            rhs += start.e_h;
        } else {
            row.push((steps[t - 1].e_h, -1.0));
        }
        for s in &charge {
            row.push((s.power, -dt * s.slope));
            match (s.on, s.forced_on) {
                (Some(z), _) => row.push((z, -dt * s.intercept)),
                (None, true) => rhs += dt * s.intercept,
                _ => {}
            }
        }
        for s in &discharge {
            row.push((s.power, dt * s.slope));
            match (s.on, s.forced_on) {
                (Some(z), _) => row.push((z, dt * s.intercept)),
                (None, true) => rhs -= dt * s.intercept,
                _ => {}
            }
        }
        p.add_row(format!("h2[{t}]"), row, Sense::Eq, rhs);

        // power balance
        let mut row = vec![(v_pg, 1.0), (v_pr, 1.0), (v_pd, 1.0), (v_pbd, 1.0), (v_pbc, -1.0)];
        row.extend(discharge.iter().map(|s| (s.power, 1.0)));
        row.extend(charge.iter().map(|s| (s.power, -1.0)));
        row.push((v_pl, 1.0));
        p.add_row(format!("balance[{t}]"), row, Sense::Eq, load);

        add_link_rows(&mut p, &h.charge_curve, h.p_max, &charge, policies.charge, t, "hc");
        add_link_rows(&mut p, &h.discharge_curve, h.p_max, &discharge, policies.discharge, t, "hd");

        if ramp && t > 0 {
            let prev = steps[t - 1].p_d;
            p.add_row(format!("ramp_up[{t}]"), vec![(v_pd, 1.0), (prev, -1.0)], Sense::Le, d.ru);
            p.add_row(format!("ramp_down[{t}]"), vec![(prev, 1.0), (v_pd, -1.0)], Sense::Le, d.rd);
        }

        steps.push(StepVars {
            p_bc: v_pbc,
            p_bd: v_pbd,
            e_b: v_eb,
            e_h: v_eh,
            p_d: v_pd,
            p_l: v_pl,
            p_r: v_pr,
            p_g: v_pg,
            charge,
            discharge,
        });
    }
    if options.terminal {
        let last = &steps[horizon - 1];
        p.add_row("terminal_h2", vec![(last.e_h, 1.0)], Sense::Ge, start.e_h);
        p.add_row("terminal_bat", vec![(last.e_b, 1.0)], Sense::Ge, start.e_b);
    }
    Ok(HorizonProgram { program: p, steps, start, dt })
}
