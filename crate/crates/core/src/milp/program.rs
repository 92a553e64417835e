use crate::error::{Error, Result};

/// Row sense of a linear constraint `a·x (sense) rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A sparse linear constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimise `c·x + ½ Σ q_j x_j² + offset` subject to linear rows, bounds and
/// binary restrictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StandardFormProgram {
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    /// Diagonal of the quadratic term; empty means a linear objective.
    pub quadratic: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
    pub names: Vec<String>,
}

impl StandardFormProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.binary.iter().filter(|&&b| b).count()
    }

    pub fn is_quadratic(&self) -> bool {
        self.quadratic.iter().any(|&q| q != 0.0)
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lo);
        self.upper.push(hi);
        self.binary.push(false);
        self.names.push(name.into());
        if !self.quadratic.is_empty() {
            self.quadratic.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.add_var(name, 0.0, 1.0, cost);
        self.binary[j] = true;
        j
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coefs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    /// Adds `q/2 · x_j²` to the objective.
    pub fn add_quadratic(&mut self, j: usize, q: f64) {
        if self.quadratic.is_empty() {
            self.quadratic = vec![0.0; self.num_vars()];
        }
        self.quadratic[j] += q;
    }

    pub fn quad(&self, j: usize) -> f64 {
        self.quadratic.get(j).copied().unwrap_or(0.0)
    }

    pub fn evaluate_objective(&self, x: &[f64]) -> f64 {
        let mut v = self.objective_offset;
        for (j, &c) in self.objective.iter().enumerate() {
            v += c * x[j] + 0.5 * self.quad(j) * x[j] * x[j];
        }
        v
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            worst = worst.max(r.violation(x));
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    /// Largest distance of a binary variable from {0, 1}.
    pub fn max_fractionality(&self, x: &[f64]) -> f64 {
        self.binary
            .iter()
            .zip(x)
            .filter(|(b, _)| **b)
            .map(|(_, v)| (v - v.round()).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.binary.len() != n {
            return Err(Error::Dimension("bound or integrality vector length".into()));
        }
        if self.names.len() != n {
            return Err(Error::Dimension("name table length".into()));
        }
        if !self.quadratic.is_empty() && self.quadratic.len() != n {
            return Err(Error::Dimension("quadratic diagonal length".into()));
        }
        for (j, &q) in self.quadratic.iter().enumerate() {
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::Parameter(format!("quadratic term of `{}` is not convex", self.names[j])));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || !self.objective[j].is_finite() {
                return Err(Error::Parameter(format!("non-finite data on `{}`", self.names[j])));
            }
            if self.binary[j] && (self.lower[j] < 0.0 || self.upper[j] > 1.0) {
                return Err(Error::Parameter(format!("binary `{}` has bounds outside [0,1]", self.names[j])));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::Parameter(format!("row `{}` has a non-finite rhs", r.name)));
            }
            for &(j, a) in &r.coefs {
                if j >= n {
                    return Err(Error::Dimension(format!("row `{}` references column {j}", r.name)));
                }
                if !a.is_finite() {
                    return Err(Error::Parameter(format!("row `{}` has a non-finite coefficient", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Copy of the program with every binary relaxed to a continuous [0,1] variable.
    pub fn relaxed(&self) -> Self {
        let mut p = self.clone();
        p.binary.iter_mut().for_each(|b| *b = false);
        p
    }
}
