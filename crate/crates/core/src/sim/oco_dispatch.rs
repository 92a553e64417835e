//! Dispatch decisions from the OCO ensemble.
//!
//! Decision vector in per-unit of the load capacity: `p_bc, p_bd, p_d, p_l,
//! p_r, p_g, p_hc, z_c, p_hd, z_d`, plus the end-of-step hydrogen content as
//! a fraction of the tank. The static set holds the power bounds, the diesel
//! ramp from the last realized output, the battery energy window and the
//! hydrogen balance of the chosen segments; power balance and the caps on
//! load shedding and renewable use are the time-varying constraints carried
//! by the virtual queues. The SoC tracking term depends only on the decision,
//! the measured state and the reference, so each expert keeps it exact
//! instead of linearizing it.

use super::reconcile::StepState;
use crate::electrochem::{PiecewiseCurve, LHV_KWH_PER_KG};
use crate::error::Result;
use crate::grid::{DispatchDecision, MicrogridSpec};
use crate::milp::{Row, Sense};
use crate::oco::{Affine, Ensemble, FeasibleSet, KnownTerm, OcoConfig, StepFeedback, StepTrace};

pub(crate) const PBC: usize = 0;
pub(crate) const PBD: usize = 1;
pub(crate) const PD: usize = 2;
pub(crate) const PL: usize = 3;
pub(crate) const PR: usize = 4;
pub(crate) const PG: usize = 5;
pub(crate) const PHC: usize = 6;
pub(crate) const ZC: usize = 7;
pub(crate) const PHD: usize = 8;
pub(crate) const ZD: usize = 9;
pub(crate) const EH: usize = 10;
const DIM: usize = 11;

/// Segment handling of one conversion direction at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirMode {
    Idle,
    /// Segment on, power within its range.
    Forced(usize),
    /// Segment available with a continuous on-fraction.
    Free(usize),
}

/// Segment with the highest conversion efficiency, used when no reference
/// chooses segments.
pub fn best_segment(curve: &PiecewiseCurve) -> usize {
    let (lo, hi) = (curve.p_min(), curve.p_max());
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..=400 {
        let p = lo + (hi - lo) * k as f64 / 400.0;
        if p <= 0.0 {
            continue;
        }
        let r = curve.eval(p).unwrap_or(0.0);
        if r <= 0.0 {
            continue;
        }
        let eff = match curve.direction {
            crate::electrochem::Direction::Charging => r * LHV_KWH_PER_KG / p,
            crate::electrochem::Direction::Discharging => p / (r * LHV_KWH_PER_KG),
        };
        if eff > best.1 {
            best = (curve.segment_of(p).unwrap_or(0), eff);
        }
    }
    best.0
}

struct DirBounds {
    p: (f64, f64),
    z: (f64, f64),
    slope: f64,
    intercept: f64,
    seg: Option<usize>,
    link: Option<(f64, f64)>,
}

fn dir_bounds(curve: &PiecewiseCurve, mode: DirMode, cap: f64) -> DirBounds {
    let idle = DirBounds { p: (0.0, 0.0), z: (0.0, 0.0), slope: 0.0, intercept: 0.0, seg: None, link: None };
    let k = match mode {
        DirMode::Idle => return idle,
        DirMode::Forced(k) | DirMode::Free(k) => k,
    };
    let Some(s) = curve.segments.get(k).copied() else { return idle };
    let hi = s.p_hi.min(cap);
    if curve.is_linear_through_origin() {
        return DirBounds { p: (0.0, hi.max(0.0)), z: (0.0, 0.0), slope: s.slope, intercept: 0.0, seg: Some(k), link: None };
    }
    if hi < s.p_lo {
        return idle;
    }
    match mode {
        DirMode::Forced(_) => DirBounds { p: (s.p_lo, hi), z: (1.0, 1.0), slope: s.slope, intercept: s.intercept, seg: Some(k), link: None },
        _ => DirBounds { p: (0.0, hi), z: (0.0, 1.0), slope: s.slope, intercept: s.intercept, seg: Some(k), link: Some((s.p_lo, hi)) },
    }
}

/// Zero powers moved into the bounds, with the hydrogen content that
/// follows from them.
fn zero_point(set: &FeasibleSet) -> Vec<f64> {
    let mut y: Vec<f64> = (0..set.dim()).map(|j| 0.0f64.clamp(set.lower[j], set.upper[j])).collect();
    if let Some(r) = set.rows.iter().find(|r| r.name == "eh") {
        let rest: f64 = r.coefs[1..].iter().map(|&(j, a)| a * y[j]).sum();
        y[EH] = ((r.rhs - rest) / r.coefs[0].1).clamp(set.lower[EH], set.upper[EH]);
    }
    y
}

/// Online dispatcher wrapping one ensemble.
pub struct OcoDispatcher {
    base: f64,
    e_scale: f64,
    ens: Ensemble,
    phi: f64,
    modes: (DirMode, DirMode),
    pending: Option<StepFeedback>,
    pub traces: Option<Vec<StepTrace>>,
}

impl OcoDispatcher {
    pub fn new(spec: &MicrogridSpec, config: OcoConfig, phi: f64, keep_traces: bool) -> Result<Self> {
        let base = spec.capacities.load.max(1.0);
        let e_scale = spec.hydrogen.e_max.max(1e-9);
        let mut x0 = vec![0.0; DIM];
        x0[EH] = spec.hydrogen.e0 / e_scale;
        let ens = Ensemble::new(config, x0, 4)?;
        Ok(Self {
            base,
            e_scale,
            ens,
            phi,
            modes: (DirMode::Idle, DirMode::Idle),
            pending: None,
            traces: keep_traces.then(Vec::new),
        })
    }

    /// Static decision set of a step and the segment modes it honours.
    fn feasible_set(&self, spec: &MicrogridSpec, state: StepState, abs: usize, modes: (DirMode, DirMode)) -> (FeasibleSet, (DirMode, DirMode)) {
        let (b, h, d) = (&spec.battery, &spec.hydrogen, &spec.diesel);
        let dt = spec.dt;
        let base = self.base;
        let mut lower = vec![0.0; DIM];
        let mut upper = vec![0.0; DIM];
        upper[PBC] = b.p_max / base;
        upper[PBD] = b.p_max / base;
        let (mut d_lo, mut d_hi) = (d.p_min, d.p_max);
        if let (Some(prev), true) = (state.p_d_prev, spec.ramp_binding()) {
            d_lo = d_lo.max(prev - d.rd);
            d_hi = d_hi.min(prev + d.ru).max(d_lo);
        }
        lower[PD] = d_lo / base;
        upper[PD] = d_hi / base;
        upper[PL] = spec.capacities.load / base;
        upper[PR] = (spec.capacities.solar + spec.capacities.wind) / base;
        upper[PG] = spec.grid_cap_at(abs) / base;

        // hydrogen: drop forced directions the tank cannot honour
        let h_load = spec.hydrogen_load_at(abs);
        let (mut cm, mut dm) = modes;
        let c0 = dir_bounds(&h.charge_curve, cm, h.p_max);
        let min_in = dt * (c0.slope * c0.p.0 + c0.intercept * c0.z.0);
        if matches!(cm, DirMode::Forced(_)) && state.e_h + min_in - h_load > h.e_max {
            cm = DirMode::Idle;
        }
        let c0 = dir_bounds(&h.charge_curve, cm, h.p_max);
        let d0 = dir_bounds(&h.discharge_curve, dm, h.p_max);
        let min_in = dt * (c0.slope * c0.p.0 + c0.intercept * c0.z.0);
        let min_out = dt * (d0.slope * d0.p.0 + d0.intercept * d0.z.0);
        if matches!(dm, DirMode::Forced(_)) && state.e_h + min_in - min_out - h_load < h.e_min {
            dm = DirMode::Idle;
        }
        let c = dir_bounds(&h.charge_curve, cm, h.p_max);
        let dd = dir_bounds(&h.discharge_curve, dm, h.p_max);
        (lower[PHC], upper[PHC]) = (c.p.0 / base, c.p.1 / base);
        (lower[ZC], upper[ZC]) = c.z;
        (lower[PHD], upper[PHD]) = (dd.p.0 / base, dd.p.1 / base);
        (lower[ZD], upper[ZD]) = dd.z;

        let es = self.e_scale;
        let idle_next = state.e_h - h_load + dt * (c.intercept * c.z.0 - dd.intercept * dd.z.0);
        lower[EH] = h.e_min.min(idle_next) / es;
        upper[EH] = h.e_max.max(idle_next) / es;

        let mut rows = Vec::new();
        let keep = 1.0 - b.eps * dt;
        let eb_coefs = vec![(PBC, dt * b.eta_c * base), (PBD, -dt * base / b.eta_d)];
        rows.push(Row { name: "eb_min".into(), coefs: eb_coefs.clone(), sense: Sense::Ge, rhs: (b.e_min - keep * state.e_b).min(0.0) });
        rows.push(Row { name: "eb_max".into(), coefs: eb_coefs, sense: Sense::Le, rhs: (b.e_max - keep * state.e_b).max(0.0) });
        rows.push(Row {
            name: "eh".into(),
            coefs: vec![
                (EH, es),
                (PHC, -dt * c.slope * base),
                (ZC, -dt * c.intercept),
                (PHD, dt * dd.slope * base),
                (ZD, dt * dd.intercept),
            ],
            sense: Sense::Eq,
            rhs: state.e_h - h_load,
        });
        for (p, z, b) in [(PHC, ZC, &c), (PHD, ZD, &dd)] {
            if let Some((lo, hi)) = b.link {
                rows.push(Row { name: format!("lo{p}"), coefs: vec![(z, lo / base), (p, -1.0)], sense: Sense::Le, rhs: 0.0 });
                rows.push(Row { name: format!("hi{p}"), coefs: vec![(p, 1.0), (z, -hi / base)], sense: Sense::Le, rhs: 0.0 });
            }
        }
        (FeasibleSet { lower, upper, rows }, (cm, dm))
    }

    /// Committed decision for step `abs`, given the measured state, the
    /// segment modes and (when tracking) the reference of the step.
    pub fn commit(
        &mut self,
        spec: &MicrogridSpec,
        state: StepState,
        abs: usize,
        modes: (DirMode, DirMode),
        reference: Option<f64>,
    ) -> Result<DispatchDecision> {
        let (set, modes) = self.feasible_set(spec, state, abs, modes);
        if let Some(fb) = self.pending.take() {
            // the SoC term of the coming step is known, so it is kept exact
            let known: Vec<KnownTerm> = reference
                .filter(|_| self.phi > 0.0)
                .map(|r| KnownTerm { index: EH, weight: self.phi * self.e_scale * self.e_scale, target: r / self.e_scale })
                .into_iter()
                .collect();
            let idle_modes = (DirMode::Idle, DirMode::Idle);
            let backup = self.ens.clone();
            let mut attempt = self.ens.step_with_known(&fb, &set, &known).map(|t| (t, modes));
            if let Err(e) = &attempt {
                if modes != idle_modes {
                    log::debug!("expert step at {abs} failed ({e}); retrying with the hydrogen system idle");
                    self.ens = backup.clone();
                    let (idle, m) = self.feasible_set(spec, state, abs, idle_modes);
                    attempt = self.ens.step_with_known(&fb, &idle, &known).map(|t| (t, m));
                }
            }
            match attempt {
                Ok((trace, m)) => {
                    self.modes = m;
                    if let Some(t) = self.traces.as_mut() {
                        t.push(trace);
                    }
                }
                Err(e) => {
                    // online operation never stops: hold the zero-dispatch point
                    log::warn!("expert step at {abs} failed ({e}); committing zero dispatch");
                    let (idle, m) = self.feasible_set(spec, state, abs, idle_modes);
                    self.ens = backup;
                    self.ens.t += 1;
                    self.ens.x = zero_point(&idle);
                    self.modes = m;
                }
            }
        } else {
            // first step: the zero-dispatch point moved into the set
            self.modes = modes;
            self.ens.x = zero_point(&set);
            for e in &mut self.ens.experts {
                e.x = self.ens.x.clone();
            }
        }
        Ok(self.to_decision(spec, &self.ens.x.clone()))
    }

    fn to_decision(&self, spec: &MicrogridSpec, x: &[f64]) -> DispatchDecision {
        let h = &spec.hydrogen;
        let base = self.base;
        let p = |j: usize| (x[j] * base).max(0.0);
        let c = dir_bounds(&h.charge_curve, self.modes.0, h.p_max);
        let d = dir_bounds(&h.discharge_curve, self.modes.1, h.p_max);
        let p_hc = p(PHC);
        let p_hd = p(PHD);
        DispatchDecision {
            p_b_c: p(PBC),
            p_b_d: p(PBD),
            p_h_c: p_hc,
            p_h_d: p_hd,
            seg_c: c.seg.filter(|_| p_hc > 0.0),
            seg_d: d.seg.filter(|_| p_hd > 0.0),
            p_d: p(PD),
            p_l: p(PL),
            p_r: p(PR),
            p_g: p(PG),
            h_c: (c.slope * p_hc + c.intercept * x[ZC]).max(0.0),
            h_d: (d.slope * p_hd + d.intercept * x[ZD]).max(0.0),
            e_b: 0.0,
            e_h: x[EH] * self.e_scale,
        }
    }

    /// Records the feedback of the step just realized: the cost gradient at
    /// the committed decision and the balance and cap constraints of the
    /// observed load and renewables.
    pub fn learn(&mut self, spec: &MicrogridSpec, load: f64, renewable: f64, reference: Option<f64>) {
        let pr = &spec.prices;
        let dt = spec.dt;
        let base = self.base;
        let mut grad = vec![0.0; DIM];
        grad[PBD] = pr.c_b * dt * base;
        grad[PD] = pr.c_d * dt * base;
        grad[PL] = pr.c_l * dt * base;
        grad[PHD] = pr.c_h * dt * base;
        if let Some(r) = reference {
            let es = self.e_scale;
            grad[EH] = 2.0 * self.phi * es * es * (self.ens.x[EH] - r / es);
        }
        let supply = [PG, PR, PD, PBD, PHD, PL].map(|j| (j, 1.0));
        let mut bal: Vec<(usize, f64)> = supply.to_vec();
        bal.push((PBC, -1.0));
        bal.push((PHC, -1.0));
        let neg: Vec<(usize, f64)> = bal.iter().map(|&(j, a)| (j, -a)).collect();
        let g = vec![
            Affine { coefs: bal, constant: -load / base },
            Affine { coefs: neg, constant: load / base },
            Affine { coefs: vec![(PL, 1.0)], constant: -load / base },
            Affine { coefs: vec![(PR, 1.0)], constant: -renewable / base },
        ];
        self.pending = Some(StepFeedback { grad_f: grad, g });
    }
}
