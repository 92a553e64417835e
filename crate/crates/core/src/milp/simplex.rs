//! Dense two-phase tableau simplex.
//!
//! Variables are shifted onto `x' ≥ 0`; finite upper bounds become explicit
//! `x' ≤ u − l` rows and fixed variables are substituted out. Artificial
//! columns stay in the tableau through phase 2 (never re-entering) so the row
//! duals can be read off their reduced costs.

use super::program::{Sense, StandardFormProgram};
use super::{SolveOptions, Solution, Status};

const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
enum Map {
    Fixed(f64),
    /// `x = offset + sign · x'[col]`
    Shift { col: usize, offset: f64, sign: f64 },
    /// `x = x'[pos] − x'[neg]`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    w: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs (phase 1 and phase 2), rhs slot holds −objective.
    d1: Vec<f64>,
    d2: Vec<f64>,
    first_art: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.w + self.w - 1]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.w;
        let piv = self.a[r * w + e];
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[e] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[e];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[e] = 0.0;
            }
        };
        for row in before.chunks_mut(w) {
            eliminate(row);
        }
        for row in after.chunks_mut(w) {
            eliminate(row);
        }
        eliminate(&mut self.d1);
        eliminate(&mut self.d2);
        self.basis[r] = e;
    }

    /// Runs simplex iterations on the given objective row. Returns `None` on
    /// success, `Some(Status)` for unbounded or iteration limit.
    fn optimize(&mut self, phase2: bool, opts: &SolveOptions, iters: &mut usize, cap: usize) -> Option<Status> {
        let ncols = self.w - 1;
        let eligible = if phase2 { self.first_art } else { ncols };
        let mut degenerate_run = 0usize;
        loop {
            let d = if phase2 { &self.d2 } else { &self.d1 };
            let bland = degenerate_run >= opts.bland_threshold;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for (j, &dj) in d.iter().enumerate().take(eligible) {
                if dj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let e = enter?;
            // ratio test
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let aie = self.a[i * self.w + e];
                if aie > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / aie;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    aie > self.a[l * self.w + e]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = ratio;
                    }
                }
            }
            let Some(r) = leave else { return Some(Status::Unbounded) };
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
            *iters += 1;
            if *iters > cap {
                return Some(Status::LimitHit);
            }
        }
    }
}

pub(crate) fn solve(p: &StandardFormProgram, lower: &[f64], upper: &[f64], opts: &SolveOptions) -> Solution {
    let n = p.num_vars();
    let tol = opts.feasibility_tol;
    // column maps
    let mut maps = Vec::with_capacity(n);
    let mut ncol = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lower[j], upper[j]);
        if lo > hi + tol {
            return Solution::empty(Status::Infeasible, n);
        }
        if lo.is_finite() && hi.is_finite() && (hi - lo).abs() <= 0.0 {
            maps.push(Map::Fixed(lo));
        } else if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncol, (hi - lo).max(0.0)));
            }
            maps.push(Map::Shift { col: ncol, offset: lo, sign: 1.0 });
            ncol += 1;
        } else if hi.is_finite() {
            maps.push(Map::Shift { col: ncol, offset: hi, sign: -1.0 });
            ncol += 1;
        } else {
            maps.push(Map::Split { pos: ncol, neg: ncol + 1 });
            ncol += 2;
        }
    }
    let ns = ncol;

    // transformed rows: (dense-ish sparse coefs, sense, rhs, flipped)
    struct TRow {
        coefs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        flipped: bool,
    }
    let mut trows: Vec<TRow> = Vec::with_capacity(p.num_rows() + bound_rows.len());
    for row in &p.rows {
        let mut rhs = row.rhs;
        let mut coefs = Vec::with_capacity(row.coefs.len());
        for &(j, a) in &row.coefs {
            match maps[j] {
                Map::Fixed(v) => rhs -= a * v,
                Map::Shift { col, offset, sign } => {
                    rhs -= a * offset;
                    coefs.push((col, a * sign));
                }
                Map::Split { pos, neg } => {
                    coefs.push((pos, a));
                    coefs.push((neg, -a));
                }
            }
        }
        trows.push(TRow { coefs, sense: row.sense, rhs, flipped: false });
    }
    for &(col, ub) in &bound_rows {
        trows.push(TRow { coefs: vec![(col, 1.0)], sense: Sense::Le, rhs: ub, flipped: false });
    }
    for r in trows.iter_mut() {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            r.coefs.iter_mut().for_each(|c| c.1 = -c.1);
            r.sense = match r.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
            r.flipped = true;
        }
    }
    let m = trows.len();
    let nslack = trows.iter().filter(|r| r.sense != Sense::Eq).count();
    let nart = trows.iter().filter(|r| r.sense != Sense::Le).count();
    let first_art = ns + nslack;
    let w = ns + nslack + nart + 1;

    let mut t = Tableau {
        m,
        w,
        a: vec![0.0; m * w],
        basis: vec![0; m],
        d1: vec![0.0; w],
        d2: vec![0.0; w],
        first_art,
    };
    // identity column per row (slack for Le, artificial otherwise), used for duals
    let mut ident = vec![0usize; m];
    let mut s_next = ns;
    let mut a_next = first_art;
    for (i, r) in trows.iter().enumerate() {
        let row = &mut t.a[i * w..(i + 1) * w];
        for &(c, v) in &r.coefs {
            row[c] += v;
        }
        row[w - 1] = r.rhs;
        match r.sense {
            Sense::Le => {
                row[s_next] = 1.0;
                t.basis[i] = s_next;
                ident[i] = s_next;
                s_next += 1;
            }
            Sense::Ge => {
                row[s_next] = -1.0;
                s_next += 1;
                row[a_next] = 1.0;
                t.basis[i] = a_next;
                ident[i] = a_next;
                a_next += 1;
            }
            Sense::Eq => {
                row[a_next] = 1.0;
                t.basis[i] = a_next;
                ident[i] = a_next;
                a_next += 1;
            }
        }
    }
    // phase 2 costs and constant
    let mut constant = p.objective_offset;
    for j in 0..n {
        let c = p.objective[j];
        match maps[j] {
            Map::Fixed(v) => constant += c * v,
            Map::Shift { col, offset, sign } => {
                constant += c * offset;
                t.d2[col] += c * sign;
            }
            Map::Split { pos, neg } => {
                t.d2[pos] += c;
                t.d2[neg] -= c;
            }
        }
    }
    // phase 1 costs: sum of artificials, priced out of the basis
    for c in first_art..w - 1 {
        t.d1[c] = 1.0;
    }
    for i in 0..m {
        if t.basis[i] >= first_art {
            let row = &t.a[i * w..(i + 1) * w];
            for (d, v) in t.d1.iter_mut().zip(row) {
                *d -= v;
            }
        }
    }
    for i in 0..m {
        t.d1[t.basis[i]] = 0.0;
    }

    let cap = 50 * (m + w) + 1000;
    let mut iters = 0usize;
    if nart > 0 {
        if let Some(st) = t.optimize(false, opts, &mut iters, cap) {
            let mut s = Solution::empty(if st == Status::Unbounded { Status::Infeasible } else { st }, n);
            s.iterations = iters;
            return s;
        }
        let infeas = -t.d1[w - 1];
        let scale = 1.0 + trows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > tol * scale {
            let mut s = Solution::empty(Status::Infeasible, n);
            s.iterations = iters;
            return s;
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if t.basis[i] >= first_art {
                let row = &t.a[i * w..(i + 1) * w];
                let mut best = None;
                let mut best_abs = PIVOT_TOL * 1e3;
                for (j, &v) in row.iter().enumerate().take(first_art) {
                    if v.abs() > best_abs {
                        best_abs = v.abs();
                        best = Some(j);
                    }
                }
                if let Some(j) = best {
                    t.pivot(i, j);
                }
            }
        }
    }
    if let Some(st) = t.optimize(true, opts, &mut iters, cap) {
        let mut s = Solution::empty(st, n);
        s.iterations = iters;
        return s;
    }

    let mut xs = vec![0.0; w - 1];
    for i in 0..m {
        xs[t.basis[i]] = t.rhs(i).max(0.0);
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match maps[j] {
            Map::Fixed(v) => v,
            Map::Shift { col, offset, sign } => offset + sign * xs[col],
            Map::Split { pos, neg } => xs[pos] - xs[neg],
        };
        if lower[j].is_finite() {
            x[j] = x[j].max(lower[j]);
        }
        if upper[j].is_finite() {
            x[j] = x[j].min(upper[j]);
        }
    }
    let duals: Vec<f64> = (0..p.num_rows())
        .map(|i| {
            let y = -t.d2[ident[i]];
            if trows[i].flipped {
                -y
            } else {
                y
            }
        })
        .collect();
    let objective = p.evaluate_objective(&x);
    debug_assert!((objective - (constant - t.d2[w - 1])).abs() <= 1e-6 * (1.0 + objective.abs()));
    Solution {
        status: Status::Optimal,
        objective,
        bound: objective,
        x,
        duals: Some(duals),
        nodes: 0,
        iterations: iters,
        wall_time: Default::default(),
        incumbent_history: Vec::new(),
    }
}
