//! Ex-post physical reconciliation of a committed decision.
//!
//! Merit order, applied after the storages have been clamped to their power
//! and energy limits:
//!
//! * shortfall: renewables up to availability, diesel up to its ramp-limited
//!   maximum, grid import up to its cap, less battery charging, more battery
//!   discharge, less electrolysis, more fuel cell output, and whatever is left
//!   becomes loss of load;
//! * surplus: less load shedding, diesel down to its ramp-limited minimum,
//!   less grid import, renewable curtailment, less battery discharge, less
//!   fuel cell output, then extra battery charging and electrolysis.
//!
//! Hydrogen rates always come from the true curves of the spec. The
//! electrolyzer cannot run below the lower end of its curve, so a committed
//! power below it is rounded down to idle.

use crate::electrochem::PiecewiseCurve;
use crate::grid::{DispatchDecision, MicrogridSpec};

/// Storage state entering a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub e_b: f64,
    pub e_h: f64,
    pub p_d_prev: Option<f64>,
}

impl StepState {
    pub fn initial(spec: &MicrogridSpec) -> Self {
        Self { e_b: spec.battery.e0, e_h: spec.hydrogen.e0, p_d_prev: spec.diesel.initial }
    }

    pub fn after(d: &DispatchDecision) -> Self {
        Self { e_b: d.e_b, e_h: d.e_h, p_d_prev: Some(d.p_d) }
    }
}

/// Realised exogenous values of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub load: f64,
    pub renewable: f64,
    pub grid_cap: f64,
    pub hydrogen_load: f64,
}

const EPS: f64 = 1e-12;

struct Ctx<'a> {
    spec: &'a MicrogridSpec,
    state: StepState,
    input: StepInput,
    d_lo: f64,
    d_hi: f64,
}

fn rate(curve: &PiecewiseCurve, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        curve.eval(p).unwrap_or(0.0).max(0.0)
    }
}

/// Snaps a power to the operable range of a curve: zero, or within its domain.
fn operable(curve: &PiecewiseCurve, p: f64, cap: f64) -> f64 {
    let hi = curve.p_max().min(cap);
    if p <= EPS || p < curve.p_min() - 1e-9 || hi < curve.p_min() {
        0.0
    } else {
        p.clamp(curve.p_min(), hi)
    }
}

impl Ctx<'_> {
    fn keep(&self) -> f64 {
        1.0 - self.spec.battery.eps * self.spec.dt
    }

    /// Largest battery discharge given the charge power.
    fn bd_max(&self, p_bc: f64) -> f64 {
        let b = &self.spec.battery;
        let dt = self.spec.dt;
        let energy = b.eta_d * (self.keep() * self.state.e_b + dt * b.eta_c * p_bc - b.e_min) / dt;
        energy.min(b.p_max).max(0.0)
    }

    /// Largest battery charge given the discharge power.
    fn bc_max(&self, p_bd: f64) -> f64 {
        let b = &self.spec.battery;
        let dt = self.spec.dt;
        let energy = (b.e_max - self.keep() * self.state.e_b + dt * p_bd / b.eta_d) / (dt * b.eta_c);
        energy.min(b.p_max).max(0.0)
    }

    fn hydrogen_next(&self, p_hc: f64, p_hd: f64) -> f64 {
        let h = &self.spec.hydrogen;
        self.state.e_h + self.spec.dt * (rate(&h.charge_curve, p_hc) - rate(&h.discharge_curve, p_hd)) - self.input.hydrogen_load
    }

    /// Largest fuel cell power given the electrolyzer power.
    fn hd_max(&self, p_hc: f64) -> f64 {
        let h = &self.spec.hydrogen;
        let c = &h.discharge_curve;
        let cap = c.p_max().min(h.p_max);
        let avail = (self.hydrogen_next(p_hc, 0.0) - h.e_min) / self.spec.dt;
        if avail <= 0.0 {
            return 0.0;
        }
        if rate(c, cap) <= avail {
            return cap;
        }
        let p = c.invert(avail).min(cap);
        // invert returns the smallest power reaching the rate; step down if needed
        if rate(c, p) > avail {
            operable(c, (p - 1e-9).max(0.0), cap)
        } else {
            operable(c, p, cap)
        }
    }

    /// Largest electrolyzer power given the fuel cell power.
    fn hc_max(&self, p_hd: f64) -> f64 {
        let h = &self.spec.hydrogen;
        let c = &h.charge_curve;
        let cap = c.p_max().min(h.p_max);
        let room = (h.e_max - self.hydrogen_next(0.0, p_hd)) / self.spec.dt;
        if room <= 0.0 || cap < c.p_min() {
            return 0.0;
        }
        if rate(c, cap) <= room {
            return cap;
        }
        if rate(c, c.p_min()) > room {
            return 0.0;
        }
        let mut p = c.invert(room).min(cap);
        while p > c.p_min() && rate(c, p) > room {
            p = (p - 1e-9).max(c.p_min());
        }
        p
    }
}

/// Maps a committed decision onto physically realisable operation.
pub fn reconcile(committed: &DispatchDecision, input: StepInput, spec: &MicrogridSpec, state: StepState) -> DispatchDecision {
    let d = &spec.diesel;
    let (mut d_lo, mut d_hi) = (d.p_min, d.p_max);
    if let Some(prev) = state.p_d_prev {
        if spec.ramp_binding() {
            d_lo = d_lo.max(prev - d.rd);
            d_hi = d_hi.min(prev + d.ru).max(d_lo);
        }
    }
    let cx = Ctx { spec, state, input, d_lo, d_hi };
    let h = &spec.hydrogen;
    let pos = |v: f64| if v.is_finite() { v.max(0.0) } else { 0.0 };

    // storages within power and energy limits
    let mut p_bc = pos(committed.p_b_c).min(spec.battery.p_max);
    let mut p_bd = pos(committed.p_b_d).min(cx.bd_max(p_bc));
    p_bc = p_bc.min(cx.bc_max(p_bd));
    let mut p_hc = operable(&h.charge_curve, pos(committed.p_h_c), h.p_max);
    let mut p_hd = operable(&h.discharge_curve, pos(committed.p_h_d), h.p_max).min(cx.hd_max(p_hc));
    p_hc = p_hc.min(cx.hc_max(p_hd));

    let mut p_r = pos(committed.p_r).min(input.renewable);
    let mut p_d = pos(committed.p_d).clamp(cx.d_lo, cx.d_hi);
    let mut p_g = pos(committed.p_g).min(input.grid_cap);
    let mut p_l = pos(committed.p_l).min(input.load);

    let deficit = |p_r: f64, p_d: f64, p_g: f64, p_l: f64, p_bc: f64, p_bd: f64, p_hc: f64, p_hd: f64| {
        input.load + p_bc + p_hc - (p_g + p_r + p_d + p_bd + p_hd + p_l)
    };
    for _ in 0..4 {
        let mut gap = deficit(p_r, p_d, p_g, p_l, p_bc, p_bd, p_hc, p_hd);
        if gap > EPS {
            let take = |v: &mut f64, room: f64, gap: &mut f64| {
                let dv = room.min(*gap).max(0.0);
                *v += dv;
                *gap -= dv;
            };
            let room = input.renewable - p_r;
            take(&mut p_r, room, &mut gap);
            let room = cx.d_hi - p_d;
            take(&mut p_d, room, &mut gap);
            let room = input.grid_cap - p_g;
            take(&mut p_g, room, &mut gap);
            let cut = p_bc.min(gap);
            p_bc -= cut;
            gap -= cut;
            let room = cx.bd_max(p_bc) - p_bd;
            take(&mut p_bd, room, &mut gap);
            if gap > EPS && p_hc > 0.0 {
                let new = operable(&h.charge_curve, p_hc - gap, h.p_max);
                gap -= p_hc - new;
                p_hc = new;
            }
            if gap > EPS {
                let room = cx.hd_max(p_hc);
                let target = operable(&h.discharge_curve, p_hd + gap, room);
                if target > p_hd {
                    gap -= target - p_hd;
                    p_hd = target;
                }
            }
            if gap > EPS {
                p_l += gap.min(input.load - p_l);
            }
        } else if gap < -EPS {
            let mut surplus = -gap;
            let give = |v: &mut f64, floor: f64, s: &mut f64| {
                let dv = (*v - floor).min(*s).max(0.0);
                *v -= dv;
                *s -= dv;
            };
            give(&mut p_l, 0.0, &mut surplus);
            let floor = cx.d_lo;
            give(&mut p_d, floor, &mut surplus);
            give(&mut p_g, 0.0, &mut surplus);
            give(&mut p_r, 0.0, &mut surplus);
            give(&mut p_bd, 0.0, &mut surplus);
            if surplus > EPS && p_hd > 0.0 {
                let new = operable(&h.discharge_curve, p_hd - surplus, h.p_max);
                surplus -= p_hd - new;
                p_hd = new;
            }
            if surplus > EPS {
                let room = cx.bc_max(p_bd) - p_bc;
                let dv = room.min(surplus).max(0.0);
                p_bc += dv;
                surplus -= dv;
            }
            if surplus > EPS {
                let room = cx.hc_max(p_hd);
                let target = operable(&h.charge_curve, p_hc + surplus, room);
                if target > p_hc && target - p_hc <= surplus + EPS {
                    surplus -= target - p_hc;
                    p_hc = target;
                }
            }
            let _ = surplus;
        } else {
            break;
        }
    }
    // the last correction is exact when load shedding can absorb it
    let gap = deficit(p_r, p_d, p_g, p_l, p_bc, p_bd, p_hc, p_hd);
    if gap > 0.0 {
        p_l = (p_l + gap).min(input.load);
    } else if gap < 0.0 {
        let s = -gap;
        let cut = s.min(p_l);
        p_l -= cut;
        let s = s - cut;
        let cut = s.min(p_r);
        p_r -= cut;
    }

    let keep = cx.keep();
    let dt = spec.dt;
    let b = &spec.battery;
    let e_b = (keep * state.e_b + dt * (b.eta_c * p_bc - p_bd / b.eta_d)).clamp(b.e_min.min(state.e_b), b.e_max);
    let h_c = rate(&h.charge_curve, p_hc);
    let h_d = rate(&h.discharge_curve, p_hd);
    let e_h = state.e_h + dt * (h_c - h_d) - input.hydrogen_load;
    DispatchDecision {
        p_b_c: p_bc,
        p_b_d: p_bd,
        p_h_c: p_hc,
        p_h_d: p_hd,
        seg_c: if p_hc > 0.0 { h.charge_curve.segment_of(p_hc) } else { None },
        seg_d: if p_hd > 0.0 { h.discharge_curve.segment_of(p_hd) } else { None },
        p_d,
        p_l,
        p_r,
        p_g,
        h_c,
        h_d,
        e_b,
        e_h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::battery_soc_step;

    fn spec() -> MicrogridSpec {
        MicrogridSpec::test_system().unwrap()
    }

    fn input(load: f64, renewable: f64) -> StepInput {
        StepInput { load, renewable, grid_cap: 0.0, hydrogen_load: 0.0 }
    }

    #[test]
    fn feasible_decision_unchanged() {
        let s = spec();
        let st = StepState::initial(&s);
        let p_hc = 20.0;
        let h_c = s.hydrogen.charge_curve.eval(p_hc).unwrap();
        let x = DispatchDecision {
            p_b_c: 10.0,
            p_h_c: p_hc,
            seg_c: s.hydrogen.charge_curve.segment_of(p_hc),
            p_r: 70.0,
            p_d: 0.0,
            h_c,
            e_b: battery_soc_step(st.e_b, 10.0, 0.0, &s, 1.0),
            e_h: st.e_h + h_c,
            ..Default::default()
        };
        let r = reconcile(&x, input(40.0, 80.0), &s, st);
        assert_eq!(r, x);
    }

    #[test]
    fn balance_is_exact() {
        let s = spec();
        let st = StepState::initial(&s);
        for (load, ren) in [(90.0f64, 0.0), (10.0, 95.0), (130.0, 10.0), (0.0, 0.0)] {
            let x = DispatchDecision { p_b_d: 30.0, p_h_c: 12.0, p_d: 20.0, ..Default::default() };
            let r = reconcile(&x, input(load.min(100.0), ren), &s, st);
            assert!(r.balance_residual(load.min(100.0)).abs() < 1e-9, "{load} {ren}: {r:?}");
        }
    }

    #[test]
    fn optimistic_charging_stores_less() {
        let s = spec();
        let st = StepState::initial(&s);
        let p = 40.0;
        let planned = 0.63 * p / crate::electrochem::LHV_KWH_PER_KG;
        let x = DispatchDecision { p_h_c: p, p_r: p, h_c: planned, e_h: st.e_h + planned, ..Default::default() };
        let r = reconcile(&x, input(0.0, p), &s, st);
        let true_rate = s.hydrogen.charge_curve.eval(p).unwrap();
        assert!((x.e_h - r.e_h - (planned - true_rate)).abs() < 1e-12);
        assert!(r.e_h < x.e_h);
    }
}
