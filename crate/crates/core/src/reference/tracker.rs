use serde::Serialize;

use super::{ReferenceSet, ScenarioLibrary};
use crate::error::{Error, Result};
use crate::grid::{Capacities, ScenarioSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub weights: Vec<f64>,
    /// The kernels could not be normalized and uniform weights were used.
    pub fallback: bool,
}

/// Normalized Gaussian kernel weights `exp(-d²/(tσ²))` from accumulated
/// squared prefix distances. The largest kernel is factored out before
/// normalizing, so the closest scenario keeps its weight even when every raw
/// kernel would underflow.
pub fn kernel_weights(sq_dist: &[f64], t: usize, sigma: f64) -> Result<KernelWeights> {
    if t == 0 || !(sigma > 0.0) {
        return Err(Error::Parameter(format!("kernel weights need t >= 1 and sigma > 0 (t = {t}, sigma = {sigma})")));
    }
    let n = sq_dist.len();
    if n == 0 {
        return Err(Error::Parameter("kernel weights over an empty library".into()));
    }
    let scale = t as f64 * sigma * sigma;
    let logk: Vec<f64> = sq_dist.iter().map(|d| -d / scale).collect();
    let top = logk.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if top.is_finite() {
        let e: Vec<f64> = logk.iter().map(|v| if v.is_finite() { (v - top).exp() } else { 0.0 }).collect();
        let sum: f64 = e.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            return Ok(KernelWeights { weights: e.iter().map(|v| v / sum).collect(), fallback: false });
        }
    }
    log::warn!("kernel weights at t = {t} could not be normalized; using uniform weights");
    Ok(KernelWeights { weights: vec![1.0 / n as f64; n], fallback: true })
}

/// Running prefix distances between the observed uncertainty and every
/// library scenario, on capacity-normalized load, solar and wind.
#[derive(Debug, Clone)]
pub struct KernelTracker<'a> {
    library: &'a ScenarioLibrary,
    sigma: f64,
    inv_cap: [f64; 3],
    sq: Vec<f64>,
    t: usize,
    weights: Vec<f64>,
}

impl<'a> KernelTracker<'a> {
    pub fn new(library: &'a ScenarioLibrary, caps: Capacities, sigma: f64) -> Result<Self> {
        if library.is_empty() {
            return Err(Error::Parameter("kernel tracker over an empty library".into()));
        }
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {sigma}")));
        }
        if !(caps.load > 0.0 && caps.solar > 0.0 && caps.wind > 0.0) {
            return Err(Error::Parameter("capacities must be positive".into()));
        }
        let n = library.len();
        Ok(Self {
            library,
            sigma,
            inv_cap: [1.0 / caps.load, 1.0 / caps.solar, 1.0 / caps.wind],
            sq: vec![0.0; n],
            t: 0,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of observed steps.
    pub fn observed(&self) -> usize {
        self.t
    }

    /// Current weights; uniform before the first observation.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn squared_distances(&self) -> &[f64] {
        &self.sq
    }

    /// Adds the realized values of the next step to the prefix.
    pub fn observe(&mut self, load: f64, solar: f64, wind: f64) -> Result<&[f64]> {
        let t = self.t;
        if t >= self.library.horizon() {
            return Err(Error::Dimension(format!("observation {t} beyond the library horizon {}", self.library.horizon())));
        }
        let [il, is, iw] = self.inv_cap;
        for (acc, s) in self.sq.iter_mut().zip(self.library.scenarios()) {
            let dl = (load - s.load[t]) * il;
            let ds = (solar - s.solar[t]) * is;
            let dw = (wind - s.wind[t]) * iw;
            *acc += dl * dl + ds * ds + dw * dw;
        }
        self.t += 1;
        let kw = kernel_weights(&self.sq, self.t, self.sigma)?;
        if kw.fallback {
            log::warn!("tracker fell back to uniform weights at step {}", self.t);
        }
        self.weights = kw.weights;
        Ok(&self.weights)
    }
}

/// Blended reference of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blend {
    pub value: f64,
    /// Index of the highest-weight scenario (lowest index on ties).
    pub leader: usize,
    pub seg_c: Option<usize>,
    pub seg_d: Option<usize>,
}

/// Weighted reference at step `t` and the segments of the leading scenario.
pub fn blend_reference(weights: &[f64], refset: &ReferenceSet, t: usize) -> Result<Blend> {
    if weights.len() != refset.len() || weights.is_empty() {
        return Err(Error::Dimension(format!("{} weights for {} references", weights.len(), refset.len())));
    }
    if t >= refset.horizon() {
        return Err(Error::Dimension(format!("step {t} beyond the reference horizon {}", refset.horizon())));
    }
    let mut value = 0.0;
    let mut leader = 0;
    for (s, (w, r)) in weights.iter().zip(&refset.references).enumerate() {
        value += w * r.e_h[t];
        if *w > weights[leader] {
            leader = s;
        }
    }
    let r = &refset.references[leader];
    Ok(Blend { value, leader, seg_c: r.seg_c[t], seg_d: r.seg_d[t] })
}

/// One step of tracker diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackerRecord {
    pub t: usize,
    pub weights: Vec<f64>,
    pub blended: f64,
    #[serde(skip)]
    pub blend: Blend,
}

/// Replays the tracker over `observed` without lookahead: the reference of
/// step `t` uses the prefix up to `t - 1` (uniform weights at `t = 0`).
pub fn track_reference(
    library: &ScenarioLibrary,
    refset: &ReferenceSet,
    caps: Capacities,
    observed: &ScenarioSeries,
    sigma: f64,
) -> Result<Vec<TrackerRecord>> {
    let mut tr = KernelTracker::new(library, caps, sigma)?;
    let n = observed.len().min(refset.horizon()).min(library.horizon());
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let blend = blend_reference(tr.weights(), refset, t)?;
        out.push(TrackerRecord { t, weights: tr.weights().to_vec(), blended: blend.value, blend });
        tr.observe(observed.load[t], observed.solar[t], observed.wind[t])?;
    }
    Ok(out)
}

/// Root mean square difference divided by `normalizer`.
pub fn reference_rmse(reference: &[f64], global: &[f64], normalizer: f64) -> Result<f64> {
    if reference.len() != global.len() || reference.is_empty() {
        return Err(Error::Dimension(format!("reference lengths {} and {}", reference.len(), global.len())));
    }
    if !(normalizer > 0.0) {
        return Err(Error::Parameter(format!("normalizer must be positive, got {normalizer}")));
    }
    let ss: f64 = reference.iter().zip(global).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / reference.len() as f64).sqrt() / normalizer)
}

/// Golden-section search for the minimizer of a unimodal function on
/// `[lo, hi]`; returns the midpoint of the final bracket.
pub fn golden_section(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo > 0.0 && lo <= hi) || !(tol > 0.0) {
        return Err(Error::Parameter(format!("bandwidth search needs 0 < lo <= hi and tol > 0 (lo {lo}, hi {hi}, tol {tol})")));
    }
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("objective is not finite at {x}")))
        }
    };
    if b - a <= tol {
        return Ok(0.5 * (a + b));
    }
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bandwidth minimizing the tracked reference error on a validation
/// scenario. Each candidate σ replays [`track_reference`] over the whole
/// validation horizon and scores [`reference_rmse`] against `global`, its
/// perfect-foresight trajectory, so the search is deterministic. The score is
/// assumed unimodal in σ, which holds on the usual one-dip error curves but is
/// not guaranteed.
#[allow(clippy::too_many_arguments)]
pub fn select_bandwidth(
    library: &ScenarioLibrary,
    refset: &ReferenceSet,
    caps: Capacities,
    validation: &ScenarioSeries,
    global: &[f64],
    normalizer: f64,
    (lo, hi): (f64, f64),
    tol: f64,
) -> Result<f64> {
    golden_section(
        |sigma| {
            let rec = track_reference(library, refset, caps, validation, sigma)?;
            let blended: Vec<f64> = rec.iter().map(|r| r.blended).collect();
            let n = blended.len().min(global.len());
            reference_rmse(&blended[..n], &global[..n], normalizer)
        },
        lo,
        hi,
        tol,
    )
}
