//! Self-contained LP / convex QP / binary MILP solver.
//!
//! Small linear programs go through a dense two-phase tableau simplex; large
//! ones and every quadratic program go through a primal-dual interior point
//! method with a banded (envelope) Cholesky factorization. Mixed-binary
//! programs are solved by best-bound branch and bound on top of the simplex.

mod bnb;
mod envelope;
mod ipm;
mod mps;
mod program;
mod simplex;

use std::time::Duration;

pub use bnb::{solve_milp, solve_milp_from};
pub use mps::{export_mps, import_mps, write_solution_csv};
pub use program::{Row, Sense, StandardFormProgram};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    LimitHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    /// Most fractional binary, ties broken by the lowest column index.
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpEngine {
    Auto,
    Simplex,
    InteriorPoint,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub branching: Branching,
    /// Reserved for randomized heuristics; every current code path is deterministic.
    pub seed: u64,
    pub lp_engine: LpEngine,
    /// Iteration cap of the interior point method.
    pub max_ipm_iterations: usize,
    /// Consecutive degenerate pivots before the simplex switches to Bland's rule.
    pub bland_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            optimality_tol: 1e-6,
            integrality_tol: 1e-6,
            node_limit: None,
            time_limit: None,
            branching: Branching::MostFractional,
            seed: 0,
            lp_engine: LpEngine::Auto,
            max_ipm_iterations: 200,
            bland_threshold: 50,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("feasibility_tol", self.feasibility_tol),
            ("optimality_tol", self.optimality_tol),
            ("integrality_tol", self.integrality_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row duals `y` with `c + Qx = Aᵀy + z_lower − z_upper` (LP / QP only).
    pub duals: Option<Vec<f64>>,
    /// Best proven lower bound (equals `objective` for solved LPs).
    pub bound: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub wall_time: Duration,
    /// Incumbent objective after every improvement, in processing order.
    pub incumbent_history: Vec<f64>,
}

impl Solution {
    pub(crate) fn empty(status: Status, n: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            x: vec![0.0; n],
            duals: None,
            bound: f64::NEG_INFINITY,
            nodes: 0,
            iterations: 0,
            wall_time: Duration::ZERO,
            incumbent_history: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Relative gap between incumbent and bound.
    pub fn gap(&self) -> f64 {
        if !self.objective.is_finite() {
            return f64::INFINITY;
        }
        (self.objective - self.bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

/// Dense tableau work is quadratic in size; beyond this many tableau entries
/// the interior point method is used instead.
const SIMPLEX_SIZE_LIMIT: usize = 400_000;

fn simplex_fits(p: &StandardFormProgram) -> bool {
    let bounded = (0..p.num_vars())
        .filter(|&j| p.lower[j].is_finite() && p.upper[j].is_finite() && p.lower[j] != p.upper[j])
        .count();
    let m = p.num_rows() + bounded;
    let w = p.num_vars() + 2 * m + 1;
    m * w <= SIMPLEX_SIZE_LIMIT
}

/// Solves a linear program, ignoring integrality.
pub fn solve_lp(program: &StandardFormProgram, options: &SolveOptions) -> Result<Solution> {
    program.validate()?;
    options.validate()?;
    if program.is_quadratic() {
        return Err(Error::Parameter("solve_lp called on a quadratic program".into()));
    }
    let start = std::time::Instant::now();
    let use_simplex = match options.lp_engine {
        LpEngine::Simplex => true,
        LpEngine::InteriorPoint => false,
        LpEngine::Auto => simplex_fits(program),
    };
    let mut sol = if use_simplex {
        simplex::solve(program, &program.lower, &program.upper, options)
    } else {
        ipm::solve(program, &program.lower, &program.upper, options)
    };
    sol.wall_time = start.elapsed();
    Ok(sol)
}

/// Solves a convex program with a diagonal quadratic objective.
pub fn solve_qp(program: &StandardFormProgram, options: &SolveOptions) -> Result<Solution> {
    program.validate()?;
    options.validate()?;
    if program.num_binaries() > 0 {
        return Err(Error::Parameter("solve_qp called on a program with binaries".into()));
    }
    let start = std::time::Instant::now();
    let mut sol = ipm::solve(program, &program.lower, &program.upper, options);
    sol.wall_time = start.elapsed();
    Ok(sol)
}

/// Solves any program: LP, QP or binary MILP.
pub fn solve(program: &StandardFormProgram, options: &SolveOptions) -> Result<Solution> {
    if program.num_binaries() > 0 {
        solve_milp(program, options)
    } else if program.is_quadratic() {
        solve_qp(program, options)
    } else {
        solve_lp(program, options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(lo: f64, hi: f64, c: f64) -> StandardFormProgram {
        let mut p = StandardFormProgram::new();
        p.add_var("x", lo, hi, c);
        p
    }

    #[test]
    fn lp_lower_row_binds() {
        let mut p = one_var(0.0, 10.0, 1.0);
        p.add_row("r", vec![(0, 1.0)], Sense::Ge, 3.0);
        for engine in [LpEngine::Simplex, LpEngine::InteriorPoint] {
            let opts = SolveOptions { lp_engine: engine, ..Default::default() };
            let s = solve_lp(&p, &opts).unwrap();
            assert_eq!(s.status, Status::Optimal);
            assert!((s.x[0] - 3.0).abs() < 1e-7, "{engine:?} {:?}", s.x);
            assert!((s.objective - 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn lp_facet_objective() {
        let mut p = StandardFormProgram::new();
        p.add_var("x", 0.0, 1.0, -1.0);
        p.add_var("y", 0.0, 1.0, -1.0);
        p.add_row("cap", vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        for engine in [LpEngine::Simplex, LpEngine::InteriorPoint] {
            let opts = SolveOptions { lp_engine: engine, ..Default::default() };
            let s = solve_lp(&p, &opts).unwrap();
            assert!((s.objective + 1.0).abs() < 1e-7);
            assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn lp_contradiction_is_infeasible() {
        let mut p = one_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        p.add_row("a", vec![(0, 1.0)], Sense::Le, 0.0);
        p.add_row("b", vec![(0, 1.0)], Sense::Ge, 1.0);
        let s = solve_lp(&p, &SolveOptions { lp_engine: LpEngine::Simplex, ..Default::default() }).unwrap();
        assert_eq!(s.status, Status::Infeasible);
    }

    #[test]
    fn lp_unbounded_ray() {
        let mut p = one_var(0.0, f64::INFINITY, -1.0);
        p.add_row("a", vec![(0, 1.0)], Sense::Ge, 1.0);
        let s = solve_lp(&p, &SolveOptions { lp_engine: LpEngine::Simplex, ..Default::default() }).unwrap();
        assert_eq!(s.status, Status::Unbounded);
    }

    #[test]
    fn qp_interior_minimum() {
        // (x-0.5)^2 = x^2 - x + 0.25
        let mut p = one_var(0.0, 1.0, -1.0);
        p.add_quadratic(0, 2.0);
        p.objective_offset = 0.25;
        let s = solve_qp(&p, &SolveOptions::default()).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-6);
        assert!(s.objective.abs() < 1e-8);
    }

    #[test]
    fn qp_clipped_minimum() {
        // 2x + (x-0.5)^2 has its free minimizer at -0.5
        let mut p = one_var(0.0, 1.0, 2.0 - 1.0);
        p.add_quadratic(0, 2.0);
        p.objective_offset = 0.25;
        let s = solve_qp(&p, &SolveOptions::default()).unwrap();
        assert!(s.x[0].abs() < 1e-6);
        assert!((s.objective - 0.25).abs() < 1e-6);
    }

    #[test]
    fn quadratic_rejected_by_lp() {
        let mut p = one_var(0.0, 1.0, 0.0);
        p.add_quadratic(0, 1.0);
        assert!(solve_lp(&p, &SolveOptions::default()).is_err());
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let p = one_var(0.0, 1.0, 0.0);
        let opts = SolveOptions { feasibility_tol: 0.0, ..Default::default() };
        assert!(solve_lp(&p, &opts).is_err());
    }
}
