//! Symmetric positive (semi)definite matrix in envelope (skyline) storage,
//! lower triangle by rows, with an in-place Cholesky factorization.

pub(crate) struct Envelope {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

/// Pivots below this are treated as rank deficiency and neutralized.
const TINY_PIVOT: f64 = 1e-30;
const HUGE: f64 = 1e64;

impl Envelope {
    /// `first[i]` is the lowest column index stored in row `i` (≤ i).
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut acc = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(acc);
            acc += i - f + 1;
        }
        start.push(acc);
        Self {
            first,
            start,
            data: vec![0.0; acc],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` at (i, j) with j ≤ i.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.start[i] + j - self.first[i];
        self.data[k] += v;
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    /// Cholesky `L Lᵀ` in place. Returns the number of neutralized pivots.
    pub fn factor(&mut self) -> usize {
        let n = self.dim();
        let mut bad = 0;
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let sj = self.start[j];
                let dot: f64 = {
                    let ri = &self.data[si + (k0 - fi)..si + (j - fi)];
                    let rj = &self.data[sj + (k0 - fj)..sj + (j - fj)];
                    ri.iter().zip(rj).map(|(a, b)| a * b).sum()
                };
                let ljj = self.data[sj + (j - fj)];
                let idx = si + (j - fi);
                self.data[idx] = (self.data[idx] - dot) / ljj;
            }
            let diag_idx = si + (i - fi);
            let sq: f64 = self.data[si..diag_idx].iter().map(|v| v * v).sum();
            let d = self.data[diag_idx] - sq;
            if d > TINY_PIVOT {
                self.data[diag_idx] = d.sqrt();
            } else {
                bad += 1;
                self.data[diag_idx] = HUGE;
            }
        }
        bad
    }

    /// Solves `L Lᵀ x = b` in place after `factor`.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let r = self.row(i);
            let dot: f64 = r[..i - fi].iter().zip(&b[fi..i]).map(|(a, v)| a * v).sum();
            b[i] = (b[i] - dot) / r[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = self.row(i);
            b[i] /= r[i - fi];
            let bi = b[i];
            for (k, a) in r[..i - fi].iter().enumerate() {
                b[fi + k] -= a * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_banded_system() {
        // tridiagonal 4x4: diag 4, off -1
        let mut e = Envelope::new(vec![0, 0, 1, 2]);
        for i in 0..4 {
            e.add(i, i, 4.0);
            if i > 0 {
                e.add(i, i - 1, -1.0);
            }
        }
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = 4.0 * x_true[i];
            if i > 0 {
                b[i] -= x_true[i - 1];
            }
            if i < 3 {
                b[i] -= x_true[i + 1];
            }
        }
        assert_eq!(e.factor(), 0);
        e.solve(&mut b);
        for i in 0..4 {
            assert!((b[i] - x_true[i]).abs() < 1e-12);
        }
    }
}
