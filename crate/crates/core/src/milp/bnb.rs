//! Best-bound branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::program::StandardFormProgram;
use super::{ipm, simplex, simplex_fits, LpEngine, SolveOptions, Solution, Status};
use crate::error::Result;

struct Node {
    bound: f64,
    seq: u64,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node has the lowest bound,
    // then the lowest sequence number.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

const ROUNDING_PERIOD: usize = 64;

fn node_solve(p: &StandardFormProgram, lo: &[f64], hi: &[f64], opts: &SolveOptions, use_simplex: bool) -> Solution {
    if use_simplex {
        simplex::solve(p, lo, hi, opts)
    } else {
        ipm::solve(p, lo, hi, opts)
    }
}

/// Solves a program whose integer variables are all binary.
pub fn solve_milp(program: &StandardFormProgram, options: &SolveOptions) -> Result<Solution> {
    solve_milp_from(program, options, None)
}

/// [`solve_milp`] with a starting point. A start that is feasible and
/// integral becomes the first incumbent; any other start is ignored.
pub fn solve_milp_from(program: &StandardFormProgram, options: &SolveOptions, start_x: Option<&[f64]>) -> Result<Solution> {
    program.validate()?;
    options.validate()?;
    let start = Instant::now();
    let n = program.num_vars();
    let use_simplex = !program.is_quadratic()
        && match options.lp_engine {
            LpEngine::Simplex => true,
            LpEngine::InteriorPoint => false,
            LpEngine::Auto => simplex_fits(program),
        };
    if program.num_binaries() == 0 {
        let mut s = node_solve(program, &program.lower, &program.upper, options, use_simplex);
        s.nodes = 1;
        s.wall_time = start.elapsed();
        return Ok(s);
    }

    let mut inc_obj = f64::INFINITY;
    let mut inc_x: Option<Vec<f64>> = None;
    let mut history = Vec::new();
    if let Some(x) = start_x.filter(|x| x.len() == n) {
        if program.max_violation(x) <= options.feasibility_tol && program.max_fractionality(x) <= options.integrality_tol {
            let mut x = x.to_vec();
            for j in 0..n {
                if program.binary[j] {
                    x[j] = x[j].round();
                }
            }
            inc_obj = program.evaluate_objective(&x);
            inc_x = Some(x);
            history.push(inc_obj);
        }
    }
    let mut total_iters = 0usize;
    let mut nodes = 0usize;
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, seq, fixes: Vec::new() });
    let mut lo = program.lower.clone();
    let mut hi = program.upper.clone();
    let prune = |bound: f64, inc: f64| bound >= inc - 1e-9 * inc.abs().max(1.0);
    let mut limit_hit = false;
    let mut open_bound = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if prune(node.bound, inc_obj) {
            // best-bound order: everything left is at least as bad
            heap.clear();
            break;
        }
        let over_nodes = options.node_limit.is_some_and(|lim| nodes >= lim);
        let over_time = options.time_limit.is_some_and(|lim| start.elapsed() >= lim);
        if over_nodes || over_time {
            limit_hit = true;
            open_bound = node.bound;
            break;
        }
        nodes += 1;
        lo.copy_from_slice(&program.lower);
        hi.copy_from_slice(&program.upper);
        for &(j, v) in &node.fixes {
            lo[j] = v;
            hi[j] = v;
        }
        let sol = node_solve(program, &lo, &hi, options, use_simplex);
        total_iters += sol.iterations;
        match sol.status {
            Status::Optimal => {}
            Status::Unbounded if node.fixes.is_empty() => {
                let mut s = Solution::empty(Status::Unbounded, n);
                s.nodes = nodes;
                s.wall_time = start.elapsed();
                return Ok(s);
            }
            _ => continue,
        }
        if prune(sol.objective, inc_obj) {
            continue;
        }
        // branching candidate
        let mut branch: Option<usize> = None;
        let mut best_frac = options.integrality_tol;
        for j in 0..n {
            if program.binary[j] {
                let f = (sol.x[j] - sol.x[j].round()).abs();
                if f > best_frac {
                    best_frac = f;
                    branch = Some(j);
                }
            }
        }
        match branch {
            None => {
                let mut x = sol.x.clone();
                for j in 0..n {
                    if program.binary[j] {
                        x[j] = x[j].round();
                    }
                }
                let obj = program.evaluate_objective(&x);
                if obj < inc_obj {
                    inc_obj = obj;
                    inc_x = Some(x);
                    history.push(obj);
                }
            }
            Some(j) => {
                if (node.fixes.is_empty() && inc_x.is_none()) || nodes.is_multiple_of(ROUNDING_PERIOD) {
                    // rounding heuristic at the root and every few nodes
                    let mut rlo = program.lower.clone();
                    let mut rhi = program.upper.clone();
                    for k in 0..n {
                        if program.binary[k] {
                            let v = sol.x[k].round().clamp(0.0, 1.0);
                            rlo[k] = v;
                            rhi[k] = v;
                        }
                    }
                    let h = node_solve(program, &rlo, &rhi, options, use_simplex);
                    total_iters += h.iterations;
                    if h.status == Status::Optimal && h.objective < inc_obj {
                        inc_obj = h.objective;
                        inc_x = Some(h.x);
                        history.push(inc_obj);
                    }
                }
                for v in [0.0, 1.0] {
                    seq += 1;
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, v));
                    heap.push(Node { bound: sol.objective, seq, fixes });
                }
            }
        }
    }

    let wall_time = start.elapsed();
    let bound = if limit_hit {
        heap.iter().map(|nd| nd.bound).fold(open_bound, f64::min).min(inc_obj)
    } else {
        inc_obj
    };
    let status = if limit_hit {
        Status::LimitHit
    } else if inc_x.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let mut s = match inc_x {
        Some(x) => Solution {
            status,
            objective: inc_obj,
            x,
            duals: None,
            bound,
            nodes,
            iterations: total_iters,
            wall_time,
            incumbent_history: Vec::new(),
        },
        None => {
            let mut s = Solution::empty(status, n);
            s.bound = bound;
            s.nodes = nodes;
            s.wall_time = wall_time;
            s
        }
    };
    s.incumbent_history = history;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    #[test]
    fn knapsack_matches_enumeration() {
        let w = [12.0, 7.0, 11.0, 8.0, 9.0, 6.0, 5.0, 14.0];
        let v = [24.0, 13.0, 23.0, 15.0, 16.0, 11.0, 8.0, 25.0];
        let cap = 35.0;
        let mut p = StandardFormProgram::new();
        for k in 0..8 {
            p.add_binary(format!("b{k}"), -v[k]);
        }
        p.add_row("cap", (0..8).map(|k| (k, w[k])).collect(), Sense::Le, cap);
        let s = solve_milp(&p, &SolveOptions::default()).unwrap();
        let mut best = 0.0f64;
        for mask in 0u32..256 {
            let (mut tw, mut tv) = (0.0, 0.0);
            for k in 0..8 {
                if mask >> k & 1 == 1 {
                    tw += w[k];
                    tv += v[k];
                }
            }
            if tw <= cap {
                best = best.max(tv);
            }
        }
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective + best).abs() < 1e-6, "{} vs {}", s.objective, -best);
        assert!(s.incumbent_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn no_binaries_is_plain_lp() {
        let mut p = StandardFormProgram::new();
        p.add_var("x", 0.0, 10.0, 1.0);
        p.add_row("r", vec![(0, 1.0)], Sense::Ge, 3.0);
        let s = solve_milp(&p, &SolveOptions::default()).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn node_limit_reports_gap() {
        let mut p = StandardFormProgram::new();
        for k in 0..10 {
            p.add_binary(format!("b{k}"), -1.0 - 0.01 * k as f64);
        }
        p.add_row("cap", (0..10).map(|k| (k, 2.0)).collect(), Sense::Le, 9.0);
        let opts = SolveOptions { node_limit: Some(2), ..Default::default() };
        let s = solve_milp(&p, &opts).unwrap();
        assert_eq!(s.status, Status::LimitHit);
        assert!(s.bound <= s.objective || s.objective.is_nan());
    }
}
