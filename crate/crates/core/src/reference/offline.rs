use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScenarioLibrary;
use crate::error::{Error, Result};
use crate::grid::{plan, BuildOptions, MicrogridSpec, PlanMethod, PlanOptions};

/// Perfect-foresight hydrogen trajectory and segment schedule of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReference {
    pub label: String,
    pub e_h: Vec<f64>,
    pub seg_c: Vec<Option<usize>>,
    pub seg_d: Vec<Option<usize>>,
    /// Solver metadata; absent when read back from CSV.
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub method: Option<PlanMethod>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSet {
    pub references: Vec<ScenarioReference>,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.references.iter().map(|r| r.e_h.len()).min().unwrap_or(0)
    }

    /// Rows `scenario,t,e_h_kg,seg_c,seg_d`; idle segments are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,t,e_h_kg,seg_c,seg_d\n");
        let seg = |v: Option<usize>| v.map_or(String::new(), |k| k.to_string());
        for r in &self.references {
            for t in 0..r.e_h.len() {
                writeln!(s, "{},{},{},{},{}", r.label, t, r.e_h[t], seg(r.seg_c[t]), seg(r.seg_d[t])).unwrap();
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Reads a reference store written by [`ReferenceSet::write_csv`].
pub fn read_reference_csv(path: &Path) -> Result<ReferenceSet> {
    #[derive(Deserialize)]
    struct Rec {
        scenario: String,
        t: usize,
        e_h_kg: f64,
        seg_c: Option<usize>,
        seg_d: Option<usize>,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut refs: Vec<ScenarioReference> = Vec::new();
    for (k, rec) in rdr.deserialize::<Rec>().enumerate() {
        let r = rec.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), k + 1)))?;
        if r.t == 0 || refs.last().is_none_or(|l| l.label != r.scenario) {
            refs.push(ScenarioReference {
                label: r.scenario.clone(),
                e_h: Vec::new(),
                seg_c: Vec::new(),
                seg_d: Vec::new(),
                objective: None,
                bound: None,
                method: None,
                wall_ms: None,
            });
        }
        let cur = refs.last_mut().unwrap();
        if r.t != cur.e_h.len() {
            return Err(Error::Data(format!("{} row {}: step {} out of order", path.display(), k + 1, r.t)));
        }
        cur.e_h.push(r.e_h_kg);
        cur.seg_c.push(r.seg_c);
        cur.seg_d.push(r.seg_d);
    }
    Ok(ReferenceSet { references: refs })
}

/// Plans every scenario of the library over its full horizon, in parallel.
pub fn generate_offline_references(
    library: &ScenarioLibrary,
    spec: &MicrogridSpec,
    build: &BuildOptions,
    options: &PlanOptions,
) -> Result<ReferenceSet> {
    if library.is_empty() {
        return Err(Error::Parameter("reference generation needs at least one scenario".into()));
    }
    spec.validate()?;
    let references = library
        .scenarios()
        .par_iter()
        .map(|s| {
            let p = plan(spec, s, s.len(), build, options).map_err(|e| match e {
                Error::Infeasible(_) => Error::Infeasible(s.label.clone()),
                Error::Solver(m) => Error::Solver(format!("scenario `{}`: {m}", s.label)),
                other => other,
            })?;
            log::info!("reference `{}`: objective {:.2} ({:?}, {:.1?})", s.label, p.objective, p.method, p.wall_time);
            Ok(ScenarioReference {
                label: s.label.clone(),
                e_h: p.trajectory.iter().map(|d| d.e_h).collect(),
                seg_c: p.trajectory.iter().map(|d| d.seg_c).collect(),
                seg_d: p.trajectory.iter().map(|d| d.seg_d).collect(),
                objective: Some(p.objective),
                bound: Some(p.bound),
                method: Some(p.method),
                wall_ms: Some(p.wall_time.as_secs_f64() * 1e3),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceSet { references })
}
