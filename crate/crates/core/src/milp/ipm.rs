//! Mehrotra predictor-corrector interior point method for
//! `min cᵀx + ½ xᵀ diag(q) x` over linear rows and box bounds.
//!
//! Inequality rows get a slack column so every row is an equality. The
//! normal equations `A D⁻¹ Aᵀ Δy = r` are factored with an envelope Cholesky
//! after ordering rows by their lowest referenced column; horizon programs
//! laid out step by step then have a narrow band.

use super::envelope::Envelope;
use super::program::{Sense, StandardFormProgram};
use super::{SolveOptions, Solution, Status};

const STEP_FRACTION: f64 = 0.995;
const PRIMAL_REG: f64 = 1e-9;
const DUAL_REG: f64 = 1e-12;
const TIGHT_TOL: f64 = 1e-9;
const LOOSE_TOL: f64 = 1e-6;
const STALL_GAP_TOL: f64 = 1e-4;

struct Problem {
    /// columns: (permuted row index, coefficient)
    cols: Vec<Vec<(usize, f64)>>,
    c: Vec<f64>,
    q: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
    /// rhs in permuted order
    b: Vec<f64>,
    /// permuted position of each original row
    pos: Vec<usize>,
    first: Vec<usize>,
    /// columns with `l = u`, held at their value
    fixed: Vec<bool>,
}

fn build(p: &StandardFormProgram, lower: &[f64], upper: &[f64]) -> Problem {
    let n = p.num_vars();
    let m = p.num_rows();
    let key: Vec<usize> = p
        .rows
        .iter()
        .map(|r| r.coefs.iter().map(|&(j, _)| j).min().unwrap_or(n))
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (key[i], i));
    let mut pos = vec![0; m];
    for (k, &i) in order.iter().enumerate() {
        pos[i] = k;
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut c = p.objective.clone();
    let mut q: Vec<f64> = (0..n).map(|j| p.quad(j)).collect();
    let mut l = lower.to_vec();
    let mut u = upper.to_vec();
    let mut b = vec![0.0; m];
    // fixed columns are moved to the right-hand side and left uncoupled
    let fixed: Vec<bool> = (0..n).map(|j| l[j].is_finite() && u[j] - l[j] <= 1e-12 * (1.0 + l[j].abs())).collect();
    for j in 0..n {
        if fixed[j] {
            c[j] = 0.0;
            q[j] = 0.0;
            u[j] = l[j];
        }
    }
    for (i, row) in p.rows.iter().enumerate() {
        let r = pos[i];
        b[r] = row.rhs;
        for &(j, a) in &row.coefs {
            if fixed[j] {
                b[r] -= a * l[j];
            } else if a != 0.0 {
                cols[j].push((r, a));
            }
        }
        let slack = match row.sense {
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
            Sense::Eq => None,
        };
        if let Some(s) = slack {
            cols.push(vec![(r, s)]);
            c.push(0.0);
            q.push(0.0);
            l.push(0.0);
            u.push(f64::INFINITY);
        }
    }
    // merge duplicate entries and sort by row
    for col in cols.iter_mut() {
        col.sort_by_key(|e| e.0);
        col.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
    }
    let mut first: Vec<usize> = (0..m).collect();
    for col in &cols {
        if let Some(&(r0, _)) = col.first() {
            for &(r, _) in col {
                first[r] = first[r].min(r0);
            }
        }
    }
    Problem { cols, c, q, l, u, b, pos, first, fixed }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub(crate) fn solve(p: &StandardFormProgram, lower: &[f64], upper: &[f64], opts: &SolveOptions) -> Solution {
    let n_orig = p.num_vars();
    for j in 0..n_orig {
        if lower[j] > upper[j] + opts.feasibility_tol {
            return Solution::empty(Status::Infeasible, n_orig);
        }
    }
    let pr = build(p, lower, upper);
    let n = pr.c.len();
    let m = pr.b.len();
    let is_fixed = |j: usize| j < pr.fixed.len() && pr.fixed[j];
    let has_l: Vec<bool> = (0..n).map(|j| pr.l[j].is_finite() && !is_fixed(j)).collect();
    let has_u: Vec<bool> = (0..n).map(|j| pr.u[j].is_finite() && !is_fixed(j)).collect();
    let quadratic = pr.q.iter().any(|&v| v > 0.0);
    let ncomp = has_l.iter().filter(|&&b| b).count() + has_u.iter().filter(|&&b| b).count();

    // starting point: box midpoints, slacks at the row residual
    let mut x = vec![0.0; n];
    for j in 0..n {
        let (lo, hi) = (pr.l[j], pr.u[j]);
        x[j] = match (has_l[j], has_u[j]) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo.max(0.0) + 1.0,
            (false, true) => hi.min(0.0) - 1.0,
            (false, false) => if is_fixed(j) { lo } else { 0.0 },
        };
    }
    let n_struct = pr.fixed.len();
    {
        let mut act = vec![0.0; m];
        for j in 0..n_struct {
            for &(r, a) in &pr.cols[j] {
                act[r] += a * x[j];
            }
        }
        for j in n_struct..n {
            let (r, sgn) = pr.cols[j][0];
            x[j] = (sgn * (pr.b[r] - act[r])).max(1.0);
        }
    }
    let mut zl: Vec<f64> = has_l.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = has_u.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let mut y = vec![0.0; m];
    let lo_eff = &pr.l;
    let hi_eff = &pr.u;

    let mut env = Envelope::new(pr.first.clone());
    let b_norm = inf_norm(&pr.b);
    let c_norm = inf_norm(&pr.c);

    let mut rp = vec![0.0; m];
    let mut rd = vec![0.0; n];
    let mut sl = vec![0.0; n];
    let mut su = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut status = Status::LimitHit;
    let mut iters = 0;
    // best iterate meeting the loose tolerances, kept in case the iteration
    // later breaks down numerically
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    // search direction solve for given complementarity targets
    let direction = |env: &Envelope,
                     d: &[f64],
                     rp: &[f64],
                     rd: &[f64],
                     sl: &[f64],
                     su: &[f64],
                     zl: &[f64],
                     zu: &[f64],
                     rl: &[f64],
                     ru: &[f64]|
     -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut h = vec![0.0; n];
        for j in 0..n {
            let mut v = -rd[j];
            if has_l[j] {
                v += rl[j] / sl[j];
            }
            if has_u[j] {
                v -= ru[j] / su[j];
            }
            h[j] = v;
        }
        let mut rhs = rp.to_vec();
        for (j, col) in pr.cols.iter().enumerate() {
            let t = h[j] / d[j];
            for &(r, a) in col {
                rhs[r] -= a * t;
            }
        }
        env.solve(&mut rhs);
        let dy = rhs;
        let mut dx = vec![0.0; n];
        let mut dzl = vec![0.0; n];
        let mut dzu = vec![0.0; n];
        for (j, col) in pr.cols.iter().enumerate() {
            let aty: f64 = col.iter().map(|&(r, a)| a * dy[r]).sum();
            dx[j] = (h[j] + aty) / d[j];
            if has_l[j] {
                dzl[j] = (rl[j] - zl[j] * dx[j]) / sl[j];
            }
            if has_u[j] {
                dzu[j] = (ru[j] + zu[j] * dx[j]) / su[j];
            }
        }
        (dx, dy, dzl, dzu)
    };

    let step_lengths = |dx: &[f64], dzl: &[f64], dzu: &[f64], sl: &[f64], su: &[f64], zl: &[f64], zu: &[f64]| {
        let mut ap: f64 = 1.0;
        let mut ad: f64 = 1.0;
        for j in 0..n {
            if has_l[j] {
                if dx[j] < 0.0 {
                    ap = ap.min(-sl[j] / dx[j]);
                }
                if dzl[j] < 0.0 {
                    ad = ad.min(-zl[j] / dzl[j]);
                }
            }
            if has_u[j] {
                if dx[j] > 0.0 {
                    ap = ap.min(su[j] / dx[j]);
                }
                if dzu[j] < 0.0 {
                    ad = ad.min(-zu[j] / dzu[j]);
                }
            }
        }
        (ap, ad)
    };

    for it in 0..opts.max_ipm_iterations.max(1) {
        iters = it;
        // residuals
        rp.copy_from_slice(&pr.b);
        for (j, col) in pr.cols.iter().enumerate() {
            for &(r, a) in col {
                rp[r] -= a * x[j];
            }
        }
        let mut pobj = 0.0;
        let mut dobj: f64 = pr.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        for (j, col) in pr.cols.iter().enumerate() {
            let aty: f64 = col.iter().map(|&(r, a)| a * y[r]).sum();
            rd[j] = pr.c[j] + pr.q[j] * x[j] - aty - zl[j] + zu[j];
            pobj += pr.c[j] * x[j] + 0.5 * pr.q[j] * x[j] * x[j];
            dobj -= 0.5 * pr.q[j] * x[j] * x[j];
            if has_l[j] {
                sl[j] = (x[j] - lo_eff[j]).max(1e-300);
                dobj += pr.l[j] * zl[j];
            }
            if has_u[j] {
                su[j] = (hi_eff[j] - x[j]).max(1e-300);
                dobj -= pr.u[j] * zu[j];
            }
        }
        let mut comp = 0.0;
        for j in 0..n {
            if has_l[j] {
                comp += sl[j] * zl[j];
            }
            if has_u[j] {
                comp += su[j] * zu[j];
            }
        }
        let mu = if ncomp > 0 { comp / ncomp as f64 } else { 0.0 };
        let pres = inf_norm(&rp) / (1.0 + b_norm);
        let dres = inf_norm(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        if pres <= TIGHT_TOL && dres <= TIGHT_TOL && gap <= TIGHT_TOL {
            status = Status::Optimal;
            break;
        }
        let score = pres.max(dres).max(gap);
        if !x.iter().all(|v| v.is_finite()) || inf_norm(&x) > 1e14 {
            status = Status::Infeasible;
            break;
        }
        if score <= LOOSE_TOL && best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), y.clone()));
        }
        // Complementarity exhausted with feasible residuals: the remaining
        // gap is rounding in the objective sums and cannot shrink further.
        if mu <= 1e-13 * (1.0 + pobj.abs()) && pres <= LOOSE_TOL && dres <= LOOSE_TOL {
            if gap <= STALL_GAP_TOL {
                status = Status::Optimal;
            }
            break;
        }

        for j in 0..n {
            let mut v = pr.q[j] + PRIMAL_REG;
            if has_l[j] {
                v += zl[j] / sl[j];
            }
            if has_u[j] {
                v += zu[j] / su[j];
            }
            d[j] = v;
        }
        env.clear();
        for (j, col) in pr.cols.iter().enumerate() {
            let inv = 1.0 / d[j];
            for (k, &(r1, a1)) in col.iter().enumerate() {
                for &(r2, a2) in &col[..=k] {
                    env.add(r1, r2, a1 * a2 * inv);
                }
            }
        }
        for r in 0..m {
            env.add(r, r, DUAL_REG * (1.0 + b_norm));
        }
        env.factor();

        // predictor
        let rl: Vec<f64> = (0..n).map(|j| if has_l[j] { -sl[j] * zl[j] } else { 0.0 }).collect();
        let ru: Vec<f64> = (0..n).map(|j| if has_u[j] { -su[j] * zu[j] } else { 0.0 }).collect();
        let (dxa, _, dzla, dzua) = direction(&env, &d, &rp, &rd, &sl, &su, &zl, &zu, &rl, &ru);
        let (apa, ada) = step_lengths(&dxa, &dzla, &dzua, &sl, &su, &zl, &zu);
        let (apa, ada) = if quadratic { (apa.min(ada), apa.min(ada)) } else { (apa, ada) };
        let mut sigma = 0.0;
        if ncomp > 0 && mu > 0.0 {
            let mut comp_aff = 0.0;
            for j in 0..n {
                if has_l[j] {
                    comp_aff += (sl[j] + apa * dxa[j]) * (zl[j] + ada * dzla[j]);
                }
                if has_u[j] {
                    comp_aff += (su[j] - apa * dxa[j]) * (zu[j] + ada * dzua[j]);
                }
            }
            let mu_aff = comp_aff / ncomp as f64;
            sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        }
        // corrector
        let rl: Vec<f64> = (0..n)
            .map(|j| if has_l[j] { sigma * mu - sl[j] * zl[j] - dxa[j] * dzla[j] } else { 0.0 })
            .collect();
        let ru: Vec<f64> = (0..n)
            .map(|j| if has_u[j] { sigma * mu - su[j] * zu[j] + dxa[j] * dzua[j] } else { 0.0 })
            .collect();
        let (dx, dy, dzl, dzu) = direction(&env, &d, &rp, &rd, &sl, &su, &zl, &zu, &rl, &ru);
        let (ap, ad) = step_lengths(&dx, &dzl, &dzu, &sl, &su, &zl, &zu);
        let (mut ap, mut ad) = ((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0));
        if quadratic {
            ap = ap.min(ad);
            ad = ap;
        }
        for j in 0..n {
            x[j] += ap * dx[j];
            if has_l[j] {
                zl[j] = (zl[j] + ad * dzl[j]).max(1e-300);
            }
            if has_u[j] {
                zu[j] = (zu[j] + ad * dzu[j]).max(1e-300);
            }
        }
        for r in 0..m {
            y[r] += ad * dy[r];
        }
        iters = it + 1;
    }
    if status != Status::Optimal {
        if let Some((_, bx, by)) = best {
            x = bx;
            y = by;
            status = Status::Optimal;
        }
    }
    if status == Status::Infeasible {
        let mut s = Solution::empty(Status::Infeasible, n_orig);
        s.iterations = iters;
        return s;
    }
    let mut xo: Vec<f64> = x[..n_orig].to_vec();
    for j in 0..n_orig {
        xo[j] = xo[j].clamp(lower[j], upper[j]);
    }
    let duals: Vec<f64> = (0..m).map(|i| y[pr.pos[i]]).collect();
    let objective = p.evaluate_objective(&xo);
    Solution {
        status,
        objective,
        bound: objective,
        x: xo,
        duals: Some(duals),
        nodes: 0,
        iterations: iters,
        wall_time: Default::default(),
        incumbent_history: Vec::new(),
    }
}
