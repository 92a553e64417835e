use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Direction, HHV_KWH_PER_KG, LHV_KWH_PER_KG};
use crate::error::{Error, Result};

/// One linear piece `rate = slope·p + intercept` on `[p_lo, p_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p_lo: f64,
    pub p_hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    pub fn value(&self, p: f64) -> f64 {
        self.slope * p + self.intercept
    }
}

/// Continuous piecewise-linear hydrogen rate map (kW → kg/h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCurve {
    pub segments: Vec<Segment>,
    pub direction: Direction,
}

const CONTINUITY_TOL: f64 = 1e-6;

impl PiecewiseCurve {
    pub fn new(segments: Vec<Segment>, direction: Direction) -> Result<Self> {
        let c = Self { segments, direction };
        c.validate()?;
        Ok(c)
    }

    /// Single segment through the origin with constant efficiency `eta`
    /// (LHV basis when charging, HHV basis when discharging).
    pub fn constant_efficiency(eta: f64, p_max: f64, direction: Direction) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Parameter(format!("efficiency {eta} outside (0, 1]")));
        }
        let slope = match direction {
            Direction::Charging => eta / LHV_KWH_PER_KG,
            Direction::Discharging => 1.0 / (eta * HHV_KWH_PER_KG),
        };
        Self::new(vec![Segment { p_lo: 0.0, p_hi: p_max, slope, intercept: 0.0 }], direction)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Parameter("curve has no segments".into()));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.p_hi > s.p_lo) || !s.slope.is_finite() || !s.intercept.is_finite() {
                return Err(Error::Parameter(format!("segment {k} is degenerate")));
            }
            if k > 0 {
                let prev = &self.segments[k - 1];
                if (prev.p_hi - s.p_lo).abs() > 1e-9 * s.p_lo.abs().max(1.0) {
                    return Err(Error::Parameter(format!("segments {} and {k} are not contiguous", k - 1)));
                }
                let gap = (prev.value(prev.p_hi) - s.value(s.p_lo)).abs();
                if gap > CONTINUITY_TOL {
                    return Err(Error::Parameter(format!("discontinuity {gap} kg/h at breakpoint {}", s.p_lo)));
                }
            }
        }
        if self.segments[0].p_lo < 0.0 {
            return Err(Error::Parameter("curve domain starts below zero".into()));
        }
        for s in &self.segments {
            if s.value(s.p_lo) < -1e-9 || s.value(s.p_hi) < -1e-9 {
                return Err(Error::Parameter(format!("{} curve takes negative values", self.direction.as_str())));
            }
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn p_min(&self) -> f64 {
        self.segments[0].p_lo
    }

    pub fn p_max(&self) -> f64 {
        self.segments[self.segments.len() - 1].p_hi
    }

    /// True for a single segment through the origin starting at zero power.
    pub fn is_linear_through_origin(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].p_lo == 0.0 && self.segments[0].intercept == 0.0
    }

    fn tol(&self) -> f64 {
        1e-9 * self.p_max().max(1.0)
    }

    /// Index of the segment containing `p` (the lower one at a breakpoint).
    pub fn segment_of(&self, p: f64) -> Option<usize> {
        let tol = self.tol();
        if p < self.p_min() - tol || p > self.p_max() + tol {
            return None;
        }
        Some(self.segments.iter().position(|s| p <= s.p_hi + tol).unwrap_or(self.segments.len() - 1))
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        eval_piecewise(self, p)
    }

    /// Largest value gap between adjacent segments at their shared breakpoints.
    pub fn continuity_residual(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].value(w[0].p_hi) - w[1].value(w[1].p_lo)).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest power whose rate reaches `rate` on an increasing curve,
    /// clamped to the domain.
    pub fn invert(&self, rate: f64) -> f64 {
        for s in &self.segments {
            if s.value(s.p_hi) >= rate {
                if s.slope <= 0.0 {
                    return s.p_lo;
                }
                return ((rate - s.intercept) / s.slope).clamp(s.p_lo, s.p_hi);
            }
        }
        self.p_max()
    }
}

/// Rate (kg/h) at power `p` (kW).
pub fn eval_piecewise(curve: &PiecewiseCurve, p: f64) -> Result<f64> {
    match curve.segment_of(p) {
        Some(k) => Ok(curve.segments[k].value(p.clamp(curve.p_min(), curve.p_max()))),
        None => Err(Error::Domain(format!(
            "power {p} kW outside curve domain [{}, {}]",
            curve.p_min(),
            curve.p_max()
        ))),
    }
}

/// Result of a piecewise fit with its error statistics.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub curve: PiecewiseCurve,
    pub rmse: f64,
    /// RMSE divided by the mean absolute sample rate.
    pub relative_rmse: f64,
    pub max_abs_error: f64,
    /// Sample indices used as breakpoints (first and last included).
    pub knots: Vec<usize>,
}

struct Sums {
    x: Vec<f64>,
    y: Vec<f64>,
    // prefix sums for SSE of a least-squares line over a..=b
    s1: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
    /// Value the first knot is held at, if any.
    pin_first: Option<f64>,
}

impl Sums {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut s = Sums {
            s1: vec![0.0; n + 1],
            sx: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            sxx: vec![0.0; n + 1],
            sxy: vec![0.0; n + 1],
            syy: vec![0.0; n + 1],
            pin_first: None,
            x,
            y,
        };
        for k in 0..n {
            let (xv, yv) = (s.x[k], s.y[k]);
            s.s1[k + 1] = s.s1[k] + 1.0;
            s.sx[k + 1] = s.sx[k] + xv;
            s.sy[k + 1] = s.sy[k] + yv;
            s.sxx[k + 1] = s.sxx[k] + xv * xv;
            s.sxy[k + 1] = s.sxy[k] + xv * yv;
            s.syy[k + 1] = s.syy[k] + yv * yv;
        }
        s
    }

    /// SSE of the best free line through samples a..=b.
    fn line_sse(&self, a: usize, b: usize) -> f64 {
        let r = |v: &Vec<f64>| v[b + 1] - v[a];
        let n = r(&self.s1);
        let (sx, sy, sxx, sxy, syy) = (r(&self.sx), r(&self.sy), r(&self.sxx), r(&self.sxy), r(&self.syy));
        let vxx = sxx - sx * sx / n;
        let vxy = sxy - sx * sy / n;
        let vyy = syy - sy * sy / n;
        if vxx <= 0.0 {
            return vyy.max(0.0);
        }
        (vyy - vxy * vxy / vxx).max(0.0)
    }

    /// Continuous least-squares fit with breakpoints at the given sample
    /// indices; returns knot values and SSE.
    fn continuous_fit(&self, knots: &[usize]) -> (Vec<f64>, f64) {
        let m = knots.len();
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        let mut rhs = vec![0.0; m];
        for s in 0..m - 1 {
            let (a, b) = (knots[s], knots[s + 1]);
            let (xa, xb) = (self.x[a], self.x[b]);
            let last = s == m - 2;
            let end = if last { b } else { b - 1 };
            for k in a..=end {
                let w = (xb - self.x[k]) / (xb - xa);
                let v = 1.0 - w;
                diag[s] += w * w;
                diag[s + 1] += v * v;
                off[s] += w * v;
                rhs[s] += w * self.y[k];
                rhs[s + 1] += v * self.y[k];
            }
        }
        if let Some(v0) = self.pin_first {
            let big = 1e12 * (1.0 + diag[0]);
            diag[0] = big;
            rhs[0] = big * v0;
        }
        // Thomas algorithm for the symmetric tridiagonal system
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let denom = diag[i] - if i > 0 { off[i - 1] * c[i - 1] } else { 0.0 };
            let denom = if denom.abs() < 1e-300 { 1e-300 } else { denom };
            c[i] = if i + 1 < m { off[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - if i > 0 { off[i - 1] * d[i - 1] } else { 0.0 }) / denom;
        }
        let mut v = vec![0.0; m];
        for i in (0..m).rev() {
            v[i] = d[i] - if i + 1 < m { c[i] * v[i + 1] } else { 0.0 };
        }
        let sse = self.sse(knots, &v);
        (v, sse)
    }

    fn sse(&self, knots: &[usize], v: &[f64]) -> f64 {
        let mut sse = 0.0;
        for s in 0..knots.len() - 1 {
            let (a, b) = (knots[s], knots[s + 1]);
            let (xa, xb) = (self.x[a], self.x[b]);
            for k in a..=b {
                let w = (xb - self.x[k]) / (xb - xa);
                let e = w * v[s] + (1.0 - w) * v[s + 1] - self.y[k];
                if k < b || s == knots.len() - 2 {
                    sse += e * e;
                }
            }
        }
        sse
    }

    /// Breakpoints minimising the sum of independent segment SSEs.
    fn dp_knots(&self, n_seg: usize) -> Vec<usize> {
        let k = self.x.len();
        let inf = f64::INFINITY;
        let mut cost = vec![vec![inf; k]; n_seg + 1];
        let mut from = vec![vec![0usize; k]; n_seg + 1];
        cost[0][0] = 0.0;
        for s in 1..=n_seg {
            for b in s..k {
                for a in (s - 1)..b {
                    if cost[s - 1][a].is_finite() {
                        let c = cost[s - 1][a] + self.line_sse(a, b);
                        if c < cost[s][b] {
                            cost[s][b] = c;
                            from[s][b] = a;
                        }
                    }
                }
            }
        }
        let mut knots = vec![k - 1];
        let mut b = k - 1;
        for s in (1..=n_seg).rev() {
            b = from[s][b];
            knots.push(b);
        }
        knots.reverse();
        knots
    }

    /// Moves each interior knot to its best position between its neighbours
    /// until no move improves the continuous fit.
    fn refine(&self, mut knots: Vec<usize>, mut best: f64) -> (Vec<usize>, f64) {
        for _ in 0..50 {
            let mut improved = false;
            for s in 1..knots.len() - 1 {
                for pos in knots[s - 1] + 1..knots[s + 1] {
                    if pos == knots[s] {
                        continue;
                    }
                    let mut trial = knots.clone();
                    trial[s] = pos;
                    let (_, sse) = self.continuous_fit(&trial);
                    if sse < best - 1e-15 * best.abs().max(1e-30) {
                        best = sse;
                        knots = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (knots, best)
    }

    fn best_knots(&self, n_seg: usize) -> (Vec<usize>, f64) {
        let k = self.x.len();
        if n_seg == 1 {
            let knots = vec![0, k - 1];
            let (_, sse) = self.continuous_fit(&knots);
            return (knots, sse);
        }
        let dp = self.dp_knots(n_seg);
        let (_, dp_sse) = self.continuous_fit(&dp);
        let mut best = self.refine(dp, dp_sse);
        // nested candidate: best fit with one segment fewer plus one knot
        let (coarse, _) = self.best_knots(n_seg - 1);
        let mut nested: Option<(Vec<usize>, f64)> = None;
        for pos in 1..k - 1 {
            if coarse.contains(&pos) {
                continue;
            }
            let mut trial = coarse.clone();
            trial.push(pos);
            trial.sort_unstable();
            let (_, sse) = self.continuous_fit(&trial);
            if nested.as_ref().is_none_or(|n| sse < n.1) {
                nested = Some((trial, sse));
            }
        }
        if let Some((kn, sse)) = nested {
            let cand = self.refine(kn, sse);
            if cand.1 < best.1 {
                best = cand;
            }
        }
        best
    }
}

/// Fits a continuous piecewise-linear curve with `n_segments` pieces to
/// `(power, rate)` samples at or above `p_min`.
///
/// Breakpoints are restricted to sample positions: a dynamic program picks
/// an initial placement, the nested (n−1)-segment fit plus one knot is the
/// second candidate, and both are polished by moving single knots. Knot
/// values come from a joint least-squares solve, which makes the curve
/// continuous by construction and the error non-increasing in `n_segments`.
/// A discharging fit that starts at zero power keeps its first knot on the
/// first sample.
pub fn fit_piecewise(samples: &[(f64, f64)], n_segments: usize, p_min: f64, direction: Direction) -> Result<FitReport> {
    if n_segments < 1 {
        return Err(Error::Parameter("at least one segment is required".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|&(p, _)| p >= p_min - 1e-12).collect();
    if pts.len() < 2 * n_segments {
        return Err(Error::Data(format!(
            "{} samples at or above p_min are too few for {n_segments} segments",
            pts.len()
        )));
    }
    for (k, w) in pts.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Data(format!("sample powers are not strictly increasing at index {}", k + 1)));
        }
    }
    if pts.iter().any(|&(p, r)| !p.is_finite() || !r.is_finite()) {
        return Err(Error::Data("non-finite sample".into()));
    }
    let mut sums = Sums::new(pts.iter().map(|s| s.0).collect(), pts.iter().map(|s| s.1).collect());
    if direction == Direction::Discharging && pts[0].0 == 0.0 {
        // no power, no consumption: an idle fuel cell must not create hydrogen
        sums.pin_first = Some(pts[0].1);
    }
    let (knots, _) = sums.best_knots(n_segments);
    let (vals, sse) = sums.continuous_fit(&knots);
    let mut segments = Vec::with_capacity(n_segments);
    for s in 0..knots.len() - 1 {
        let (xa, xb) = (sums.x[knots[s]], sums.x[knots[s + 1]]);
        let slope = (vals[s + 1] - vals[s]) / (xb - xa);
        segments.push(Segment { p_lo: xa, p_hi: xb, slope, intercept: vals[s] - slope * xa });
    }
    // make shared breakpoints exact and extend the domain down to p_min
    for s in 1..segments.len() {
        let x = segments[s].p_lo;
        let v = segments[s - 1].value(x);
        segments[s].intercept = v - segments[s].slope * x;
    }
    if p_min < segments[0].p_lo && p_min >= 0.0 {
        segments[0].p_lo = p_min;
    }
    let curve = PiecewiseCurve::new(segments, direction)?;
    let n = pts.len() as f64;
    let rmse = (sse / n).sqrt();
    let mean_abs = pts.iter().map(|s| s.1.abs()).sum::<f64>() / n;
    let max_abs_error = pts
        .iter()
        .map(|&(p, r)| (curve.eval(p).unwrap_or(f64::NAN) - r).abs())
        .fold(0.0, f64::max);
    Ok(FitReport {
        relative_rmse: if mean_abs > 0.0 { rmse / mean_abs } else { rmse },
        curve,
        rmse,
        max_abs_error,
        knots,
    })
}

pub fn write_samples_csv(path: &Path, samples: &[(f64, f64)]) -> Result<()> {
    let mut s = String::from("power_kw,rate_kg_per_h\n");
    for (p, r) in samples {
        writeln!(s, "{p},{r}").unwrap();
    }
    crate::io::write_atomic(path, s.as_bytes())
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Rec {
        power_kw: f64,
        rate_kg_per_h: f64,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize::<Rec>().enumerate() {
        let r = rec.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), k + 1)))?;
        out.push((r.power_kw, r.rate_kg_per_h));
    }
    Ok(out)
}

/// Writes one or more curves as `p_lo,p_hi,slope,intercept,direction` rows.
pub fn write_curve_csv(path: &Path, curves: &[&PiecewiseCurve]) -> Result<()> {
    let mut s = String::from("p_lo,p_hi,slope,intercept,direction\n");
    for c in curves {
        for seg in &c.segments {
            writeln!(s, "{},{},{},{},{}", seg.p_lo, seg.p_hi, seg.slope, seg.intercept, c.direction.as_str()).unwrap();
        }
    }
    crate::io::write_atomic(path, s.as_bytes())
}

/// Reads curves written by [`write_curve_csv`], one per direction in file order.
pub fn read_curve_csv(path: &Path) -> Result<Vec<PiecewiseCurve>> {
    #[derive(Deserialize)]
    struct Rec {
        p_lo: f64,
        p_hi: f64,
        slope: f64,
        intercept: f64,
        direction: Direction,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut curves: Vec<(Direction, Vec<Segment>)> = Vec::new();
    for (k, rec) in rdr.deserialize::<Rec>().enumerate() {
        let r = rec.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), k + 1)))?;
        let seg = Segment { p_lo: r.p_lo, p_hi: r.p_hi, slope: r.slope, intercept: r.intercept };
        match curves.iter_mut().find(|c| c.0 == r.direction) {
            Some(c) => c.1.push(seg),
            None => curves.push((r.direction, vec![seg])),
        }
    }
    curves.into_iter().map(|(d, s)| PiecewiseCurve::new(s, d)).collect()
}
