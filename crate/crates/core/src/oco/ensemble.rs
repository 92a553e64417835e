use rayon::prelude::*;
use serde::Serialize;

use super::config::{initial_weights, OcoConfig};
use crate::error::{Error, Result};
use crate::milp::{self, Row, Sense, SolveOptions, StandardFormProgram, Status};

/// `a·x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coefs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

/// Static part of the decision set: bounds plus fixed linear rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper, rows: Vec::new() }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter().enumerate().all(|(j, v)| *v >= self.lower[j] - tol && *v <= self.upper[j] + tol)
            && self.rows.iter().all(|r| r.violation(x) <= tol)
    }
}

/// What the ensemble learns after committing `x_t`: a subgradient of `f_t`
/// at `x_t` and the affine constraints `g_t(x) ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFeedback {
    pub grad_f: Vec<f64>,
    pub g: Vec<Affine>,
}

/// Quadratic part `weight·(x_index − target)²` of the coming loss that is
/// known before the decision is committed. Experts minimize it exactly; the
/// linearized gradient of that coordinate is dropped from their step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownTerm {
    pub index: usize,
    pub weight: f64,
    pub target: f64,
}

/// `Q + β [g]₊`.
pub fn update_virtual_queue(q: &[f64], g_vals: &[f64], beta: f64) -> Vec<f64> {
    q.iter().zip(g_vals).map(|(q, g)| q + beta * g.max(0.0)).collect()
}

/// `α⟨∂f, x⟩ + αβ Σ Q_k [g_k(x)]₊ + ‖x − x_prev‖²`.
pub fn clipped_objective(x: &[f64], x_prev: &[f64], grad: &[f64], q: &[f64], g: &[Affine], alpha: f64, beta: f64) -> f64 {
    let lin: f64 = grad.iter().zip(x).map(|(a, b)| a * b).sum();
    let pen: f64 = q.iter().zip(g).map(|(q, g)| q * g.eval(x).max(0.0)).sum();
    let prox: f64 = x.iter().zip(x_prev).map(|(a, b)| (a - b) * (a - b)).sum();
    alpha * lin + alpha * beta * pen + prox
}

/// Minimizer of [`clipped_objective`] over `set`, with one slack
/// `s_k ≥ max(0, g_k(x))` per constraint carrying a positive queue.
#[allow(clippy::too_many_arguments)]
pub fn expert_decision(
    x_prev: &[f64],
    grad: &[f64],
    q: &[f64],
    g: &[Affine],
    set: &FeasibleSet,
    alpha: f64,
    beta: f64,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    expert_decision_with(x_prev, grad, q, g, set, alpha, beta, &[], opts)
}

/// [`expert_decision`] with known quadratic terms added to the objective.
#[allow(clippy::too_many_arguments)]
pub fn expert_decision_with(
    x_prev: &[f64],
    grad: &[f64],
    q: &[f64],
    g: &[Affine],
    set: &FeasibleSet,
    alpha: f64,
    beta: f64,
    known: &[KnownTerm],
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let n = set.dim();
    if x_prev.len() != n || grad.len() != n || q.len() != g.len() {
        return Err(Error::Dimension(format!(
            "expert step: set of dimension {n}, x_prev {}, gradient {}, {} queues for {} constraints",
            x_prev.len(),
            grad.len(),
            q.len(),
            g.len()
        )));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Parameter("expert step sizes must be positive".into()));
    }
    if let Some(k) = known.iter().find(|k| k.index >= n || !(k.weight >= 0.0) || !k.target.is_finite()) {
        return Err(Error::Parameter(format!("known term on coordinate {} is invalid", k.index)));
    }
    let mut p = StandardFormProgram::new();
    let mut offset = 0.0;
    let mut lin: Vec<f64> = (0..n).map(|j| alpha * grad[j] - 2.0 * x_prev[j]).collect();
    let mut quad = vec![2.0; n];
    for j in 0..n {
        offset += x_prev[j] * x_prev[j];
    }
    for k in known {
        let w = alpha * k.weight;
        lin[k.index] += -alpha * grad[k.index] - 2.0 * w * k.target;
        quad[k.index] += 2.0 * w;
        offset += w * k.target * k.target;
    }
    for j in 0..n {
        p.add_var(format!("x{j}"), set.lower[j], set.upper[j], lin[j]);
    }
    for j in 0..n {
        p.add_quadratic(j, quad[j]);
    }
    p.objective_offset = offset;
    p.rows = set.rows.clone();
    for (k, (qk, gk)) in q.iter().zip(g).enumerate() {
        if *qk > 0.0 {
            let s = p.add_var(format!("s{k}"), 0.0, f64::INFINITY, alpha * beta * qk);
            let mut coefs = vec![(s, 1.0)];
            coefs.extend(gk.coefs.iter().map(|&(j, a)| (j, -a)));
            p.add_row(format!("g{k}"), coefs, Sense::Ge, gk.constant);
        }
    }
    let sol = milp::solve_qp(&p, opts)?;
    match sol.status {
        Status::Optimal => {}
        Status::LimitHit => log::warn!("expert step hit its iteration limit; using the last iterate"),
        s => return Err(Error::Solver(format!("expert step: {s:?}"))),
    }
    let mut x = sol.x[..n].to_vec();
    for j in 0..n {
        x[j] = x[j].clamp(set.lower[j], set.upper[j]);
    }
    Ok(x)
}

/// Exponential-weights update with the largest exponent factored out.
pub fn update_expert_weights(rho: &[f64], losses: &[f64], gamma: f64) -> Vec<f64> {
    let ex: Vec<f64> = rho.iter().zip(losses).map(|(r, l)| if *r > 0.0 { r.ln() - gamma * l } else { f64::NEG_INFINITY }).collect();
    let top = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top.is_finite() {
        let w: Vec<f64> = ex.iter().map(|v| (v - top).exp()).collect();
        let sum: f64 = w.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            return w.iter().map(|v| v / sum).collect();
        }
    }
    log::warn!("expert weights degenerate; resetting to uniform");
    vec![1.0 / rho.len() as f64; rho.len()]
}

/// `Σ_i ρ_i x_i`.
pub fn aggregate_decision(rho: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let n = xs.first().map_or(0, |x| x.len());
    let mut out = vec![0.0; n];
    for (r, x) in rho.iter().zip(xs) {
        for (o, v) in out.iter_mut().zip(x) {
            *o += r * v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertState {
    /// 1-based expert index; sets the step size.
    pub index: usize,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertTrace {
    pub linear: f64,
    pub queue: f64,
    pub prox: f64,
    pub queue_norm: f64,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrace {
    pub t: usize,
    pub experts: Vec<ExpertTrace>,
    pub rho: Vec<f64>,
    pub decision: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: OcoConfig,
    pub experts: Vec<ExpertState>,
    pub rho: Vec<f64>,
    pub gamma: f64,
    /// Current aggregated decision.
    pub x: Vec<f64>,
    /// 1-based index of the step `x` was committed for.
    pub t: usize,
    pub solve: SolveOptions,
}

impl Ensemble {
    /// Every expert starts at `x0` with empty queues for `n_constraints`
    /// time-varying constraints.
    pub fn new(config: OcoConfig, x0: Vec<f64>, n_constraints: usize) -> Result<Self> {
        config.validate()?;
        let m = config.num_experts();
        let experts = (1..=m).map(|index| ExpertState { index, x: x0.clone(), q: vec![0.0; n_constraints] }).collect();
        let solve = SolveOptions { feasibility_tol: 1e-9, optimality_tol: 1e-9, ..Default::default() };
        Ok(Self { gamma: config.gamma(), rho: initial_weights(m), experts, x: x0, t: 1, config, solve })
    }

    pub fn decision(&self) -> &[f64] {
        &self.x
    }

    /// Learns from the feedback on the current decision and commits the
    /// decision of the next step within `next_set`.
    pub fn step(&mut self, fb: &StepFeedback, next_set: &FeasibleSet) -> Result<StepTrace> {
        self.step_with_known(fb, next_set, &[])
    }

    /// [`Ensemble::step`] where part of the next loss is already known.
    pub fn step_with_known(&mut self, fb: &StepFeedback, next_set: &FeasibleSet, known: &[KnownTerm]) -> Result<StepTrace> {
        let n = self.x.len();
        if fb.grad_f.len() != n || next_set.dim() != n {
            return Err(Error::Dimension(format!("feedback of dimension {} for decisions of {n}", fb.grad_f.len())));
        }
        if self.experts.first().is_some_and(|e| e.q.len() != fb.g.len()) {
            return Err(Error::Dimension(format!("{} constraints for {} queues", fb.g.len(), self.experts[0].q.len())));
        }
        let t = self.t;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let g_vals: Vec<f64> = fb.g.iter().map(|g| g.eval(&self.x)).collect();
        let fx = dot(&fb.grad_f, &self.x);
        let losses: Vec<f64> = self.experts.iter().map(|e| dot(&fb.grad_f, &e.x) - fx).collect();
        self.rho = update_expert_weights(&self.rho, &losses, self.gamma);

        let cfg = &self.config;
        let solve = &self.solve;
        let traces = self
            .experts
            .par_iter_mut()
            .map(|e| {
                let alpha = cfg.alpha(e.index, t);
                let beta = cfg.beta(e.index, t);
                e.q = update_virtual_queue(&e.q, &g_vals, beta);
                let x = expert_decision_with(&e.x, &fb.grad_f, &e.q, &fb.g, next_set, alpha, beta, known, solve)?;
                let lin = alpha * dot(&fb.grad_f, &x);
                let queue: f64 = alpha * beta * e.q.iter().zip(&fb.g).map(|(q, g)| q * g.eval(&x).max(0.0)).sum::<f64>();
                let prox: f64 = x.iter().zip(&e.x).map(|(a, b)| (a - b) * (a - b)).sum();
                let queue_norm = e.q.iter().map(|v| v * v).sum::<f64>().sqrt();
                e.x = x;
                Ok(ExpertTrace { linear: lin, queue, prox, queue_norm })
            })
            .collect::<Result<Vec<_>>>()?;
        let xs: Vec<Vec<f64>> = self.experts.iter().map(|e| e.x.clone()).collect();
        self.x = aggregate_decision(&self.rho, &xs);
        self.t += 1;
        Ok(StepTrace { t: self.t, experts: traces, rho: self.rho.clone(), decision: self.x.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> FeasibleSet {
        FeasibleSet::boxed(vec![0.0], vec![1.0])
    }

    #[test]
    fn queue_hand_case() {
        assert_eq!(update_virtual_queue(&[0.0, 0.0], &[1.0, -1.0], 2.0), vec![2.0, 0.0]);
        assert_eq!(update_virtual_queue(&[0.5, 1.0], &[-1.0, 0.0], 2.0), vec![0.5, 1.0]);
    }

    #[test]
    fn proximal_fixed_point() {
        let x = expert_decision(&[0.3], &[0.0], &[], &[], &unit_box(), 1.0, 1.0, &SolveOptions::default()).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn linear_pull_clipped_at_bound() {
        // 2x + (x - 0.5)² has its free minimizer at -0.5
        let x = expert_decision(&[0.5], &[2.0], &[], &[], &unit_box(), 1.0, 1.0, &SolveOptions::default()).unwrap();
        assert!(x[0].abs() < 1e-6);
    }

    #[test]
    fn queue_penalty_case() {
        // αβQ = 10 on [x - 0.4]₊ with α∂f = 2
        let g = vec![Affine { coefs: vec![(0, 1.0)], constant: -0.4 }];
        let x = expert_decision(&[0.5], &[2.0], &[10.0], &g, &unit_box(), 1.0, 1.0, &SolveOptions::default()).unwrap();
        assert!(x[0].abs() < 1e-6);
    }

    #[test]
    fn known_term_is_exact() {
        // (x - 0.5)² + 3(x - 0.9)² is minimized at 0.8; the stale gradient is ignored
        let k = [KnownTerm { index: 0, weight: 3.0, target: 0.9 }];
        let x = expert_decision_with(&[0.5], &[100.0], &[], &[], &unit_box(), 1.0, 1.0, &k, &SolveOptions::default()).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn weights_hand_case() {
        let r = update_expert_weights(&[0.5, 0.5], &[0.0, 1.0], 1.0);
        let e = (-1f64).exp();
        assert!((r[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((r[1] - e / (1.0 + e)).abs() < 1e-12);
        for r in [update_expert_weights(&[0.2, 0.8], &[3.0, 3.0], 1.0), update_expert_weights(&[0.2, 0.8], &[1.0, 3.0], 0.0)] {
            assert!((r[0] - 0.2).abs() < 1e-15 && (r[1] - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn aggregate_hand_case() {
        assert_eq!(aggregate_decision(&[0.25, 0.75], &[vec![0.0], vec![4.0]]), vec![3.0]);
    }
}
