//! Command line front end. Every command writes its outputs under `--out`,
//! then prints and stores a `manifest.json` describing the run.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or configuration error,
//! 4 solver failure.

mod experiment;

pub use experiment::Experiment;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::electrochem::{fit_piecewise, sample_electrolyzer, sample_fuel_cell, write_curve_csv, write_samples_csv, Direction, FitReport};
use crate::error::{Error, Result};
use crate::grid::EfficiencyModel;
use crate::io::{emit_report, regret_plotdata, sub_seed, write_atomic, write_scenario_csv, Manifest, ReportFormat, RunConfig};
use crate::oco::{bench_regret, log_log_slope};
use crate::reference::PerturbMode;
use crate::sim::{evaluate_methods, synthetic_year, MethodConfig, MethodKind, RolloutContext, RolloutResult, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "h2grid", version, about = "Energy management simulator for islanded hydrogen-battery microgrids")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: paths.output of the configuration, else `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Options of the commands that run the dispatch methods.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Evaluation scenario CSV.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Offline references written by `gen-refs`.
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// Weight of the state-of-charge tracking term.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Kernel bandwidth of the reference tracker.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Efficiency model used for planning: E1, E2 or E3.
    #[arg(long)]
    pub model: Option<String>,
    /// Report formats, comma separated: csv, jsonl, plotdata.
    #[arg(long, default_value = "csv,jsonl,plotdata")]
    pub format: String,
    /// Record per-step wall time in the outputs.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit piecewise-linear hydrogen conversion curves.
    FitCurves {
        /// Segments for both directions.
        #[arg(long)]
        segments: Option<usize>,
        /// Operating points sampled per direction.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Plan the scenario library offline and store the references.
    GenRefs {
        /// Extra library scenario CSVs.
        #[arg(long, num_args = 1..)]
        scenarios: Vec<PathBuf>,
        /// Perturbation family added to the library: R3, R4, R5 or R6.
        #[arg(long)]
        perturb: Option<String>,
        /// Perturbation magnitude range, `lo,hi`.
        #[arg(long)]
        perturb_range: Option<String>,
        /// Length of the planned horizon in steps (default: the evaluation scenario).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run one method (and the M0 baseline it is measured against).
    Simulate {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every configured method on the same scenario.
    Compare {
        /// Methods, comma separated (default: the configuration's list).
        #[arg(long)]
        methods: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Repeat a method over values of one parameter.
    Sweep {
        /// `phi` or `scale` (renewable scaling).
        #[arg(long)]
        param: String,
        /// Values, comma separated.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "M1")]
        method: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Dynamic regret of the expert ensemble on a synthetic convex stream.
    BenchRegret {
        /// Horizons, comma separated.
        #[arg(long, default_value = "256,512,1024,2048,4096,8192")]
        horizons: String,
        /// Decision dimension.
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Write a synthetic scenario year.
    SynthData {
        #[arg(long)]
        days: Option<usize>,
    },
}

fn parse_list<T>(s: &str, what: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let v = s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(f).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Error::Config(format!("empty {what} list")));
    }
    Ok(v)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Config(format!("`{s}` is not a number")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Config(format!("`{s}` is not a non-negative integer")))
}

/// Configuration plus the text it was read from, for hashing.
fn load_config(global: &Global) -> Result<(RunConfig, String)> {
    let (mut cfg, text) = match &global.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read `{}`: {e}", p.display())))?;
            (RunConfig::load(p)?, text)
        }
        None => (RunConfig::default(), String::new()),
    };
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    Ok((cfg, text))
}

fn apply_run_args(cfg: &mut RunConfig, run: &RunArgs) -> Result<()> {
    if let Some(p) = &run.scenario {
        cfg.paths.scenario = Some(p.clone());
    }
    if let Some(p) = &run.references {
        cfg.paths.references = Some(p.clone());
    }
    if let Some(v) = run.phi {
        cfg.methods.phi = v;
    }
    if let Some(v) = run.sigma {
        cfg.methods.sigma = v;
    }
    if let Some(m) = &run.model {
        cfg.methods.efficiency_model = EfficiencyModel::parse(m)?;
    }
    cfg.check_paths()?;
    cfg.validate()
}

fn formats(run: &RunArgs) -> Result<Vec<ReportFormat>> {
    parse_list(&run.format, "format", ReportFormat::parse)
}

struct Session {
    out: PathBuf,
    manifest: Manifest,
}

impl Session {
    fn new(command: &str, global: &Global, cfg: &RunConfig, cfg_text: &str) -> Result<Self> {
        let out = global.out.clone().or_else(|| cfg.paths.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out).map_err(|e| Error::Config(format!("cannot create `{}`: {e}", out.display())))?;
        let mut manifest = Manifest::new(command, &cfg.name, cfg_text);
        manifest.seed("run", cfg.seed);
        Ok(Self { out, manifest })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        write_atomic(&p, text.as_bytes())?;
        self.manifest.output(&p)?;
        Ok(p)
    }

    fn record(&mut self, paths: &[PathBuf]) -> Result<()> {
        paths.iter().try_for_each(|p| self.manifest.output(p))
    }

    fn absorb(&mut self, exp: &Experiment) -> Result<()> {
        for (k, v) in &exp.seeds {
            self.manifest.seed(k, *v);
        }
        exp.inputs.iter().try_for_each(|p| self.manifest.input(p))
    }

    /// Stores the manifest and returns its JSON.
    fn finish(self) -> Result<String> {
        let json = self.manifest.to_json();
        write_atomic(&self.out.join("manifest.json"), format!("{json}\n").as_bytes())?;
        Ok(json)
    }
}

fn fit_curves(global: &Global, segments: Option<usize>, samples: Option<usize>) -> Result<String> {
    let (mut cfg, text) = load_config(global)?;
    if let Some(k) = segments {
        cfg.curves.segments_charge = k;
        cfg.curves.segments_discharge = k;
    }
    if let Some(n) = samples {
        cfg.curves.samples = n;
    }
    let mut sess = Session::new("fit-curves", global, &cfg, &text)?;
    let c = &cfg.curves;
    let sc = sample_electrolyzer(&c.electrolyzer, c.samples)?;
    let sd = sample_fuel_cell(&c.fuel_cell, c.samples)?;
    let fc = fit_piecewise(&sc, c.segments_charge, c.electrolyzer.p_min(), Direction::Charging)?;
    let fd = fit_piecewise(&sd, c.segments_discharge, 0.0, Direction::Discharging)?;
    for (name, samples) in [("samples_charge.csv", &sc), ("samples_discharge.csv", &sd)] {
        let p = sess.path(name);
        write_samples_csv(&p, samples)?;
        sess.manifest.output(&p)?;
    }
    let p = sess.path("curves.csv");
    write_curve_csv(&p, &[&fc.curve, &fd.curve])?;
    sess.manifest.output(&p)?;
    let mut fit = String::from("direction,segments,rmse_kg_per_h,relative_rmse,max_abs_error_kg_per_h\n");
    for (d, r) in [("charging", &fc), ("discharging", &fd)] {
        let FitReport { rmse, relative_rmse, max_abs_error, .. } = r;
        let _ = writeln!(fit, "{d},{},{rmse:.6e},{relative_rmse:.6e},{max_abs_error:.6e}", r.curve.n_segments());
        sess.manifest.metric(&format!("{d}_relative_rmse"), *relative_rmse);
    }
    sess.write("fit.csv", &fit)?;
    sess.finish()
}

fn gen_refs(
    global: &Global,
    scenarios: &[PathBuf],
    perturb: Option<&str>,
    perturb_range: Option<&str>,
    steps: Option<usize>,
) -> Result<String> {
    let (mut cfg, text) = load_config(global)?;
    cfg.paths.library.extend(scenarios.iter().cloned());
    if let Some(m) = perturb {
        cfg.library.perturb = Some(PerturbMode::parse(m)?);
    }
    if let Some(r) = perturb_range {
        let v = parse_list(r, "perturbation range", parse_f64)?;
        if v.len() != 2 {
            return Err(Error::Config(format!("--perturb-range takes `lo,hi`, got `{r}`")));
        }
        cfg.library.perturb_range = (v[0], v[1]);
    }
    cfg.paths.references = None;
    cfg.check_paths()?;
    let mut sess = Session::new("gen-refs", global, &cfg, &text)?;
    let mut exp = Experiment::prepare(cfg, false)?;
    if let Some(n) = steps {
        if n == 0 || n > exp.scenario.len() {
            return Err(Error::Config(format!("--steps must lie in 1..={}", exp.scenario.len())));
        }
        exp.scenario = exp.scenario.slice(0, n);
    }
    exp.load_references()?;
    sess.absorb(&exp)?;
    let refs = exp.references.as_ref().expect("references loaded");
    let p = sess.path("references.csv");
    refs.write_csv(&p)?;
    sess.manifest.output(&p)?;
    // configuration that reuses these references with the same library
    let mut run_cfg = exp.cfg.clone();
    run_cfg.paths.references = Some(p.clone());
    for q in run_cfg.paths.scenario.iter_mut().chain(run_cfg.paths.library.iter_mut()).chain(run_cfg.paths.references.iter_mut()) {
        *q = std::fs::canonicalize(&*q).map_err(|e| Error::io(&*q, e))?;
    }
    run_cfg.paths.output = None;
    sess.write("run.toml", &run_cfg.to_toml())?;
    sess.manifest.metric("scenarios", refs.len() as f64);
    sess.manifest.metric("steps", refs.horizon() as f64);
    sess.finish()
}

/// Runs `kinds` (M0 first when absent) and writes the reports.
fn run_methods(sess: &mut Session, exp: &Experiment, kinds: &[MethodKind], run: &RunArgs, stem: &str) -> Result<Vec<RolloutResult>> {
    let results = evaluate(exp, kinds)?;
    for f in formats(run)? {
        let written = emit_report(&results, f, &sess.out, stem, run.timing)?;
        sess.record(&written)?;
    }
    for r in &results {
        sess.manifest.metric(&format!("{}_cost_usd", r.method.as_str()), round4(r.practical.cost.total));
        sess.manifest.metric(&format!("{}_lol_mwh", r.method.as_str()), round4(r.practical.lol_mwh));
    }
    Ok(results)
}

/// Rollouts of `kinds` on the experiment, with M0 added as the baseline.
pub fn evaluate(exp: &Experiment, kinds: &[MethodKind]) -> Result<Vec<RolloutResult>> {
    let mut list: Vec<MethodKind> = Vec::new();
    if !kinds.contains(&MethodKind::M0) {
        list.push(MethodKind::M0);
    }
    for &k in kinds {
        if !list.contains(&k) {
            list.push(k);
        }
    }
    let methods = list.iter().map(|&k| exp.cfg.method(k)).collect::<Result<Vec<MethodConfig>>>()?;
    let mut ctx = RolloutContext::new(exp.cfg.curves.clone());
    ctx.library = exp.library.as_ref();
    ctx.references = exp.references.as_ref();
    evaluate_methods(&exp.truth, &exp.scenario, &methods, &ctx)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn needs_references(kinds: &[MethodKind]) -> bool {
    kinds.iter().any(|k| k.uses_reference())
}

fn simulate(global: &Global, method: &str, run: &RunArgs) -> Result<String> {
    let kind = MethodKind::parse(method)?;
    let (mut cfg, text) = load_config(global)?;
    apply_run_args(&mut cfg, run)?;
    formats(run)?;
    let mut sess = Session::new("simulate", global, &cfg, &text)?;
    let exp = Experiment::prepare(cfg, needs_references(&[kind]))?;
    sess.absorb(&exp)?;
    run_methods(&mut sess, &exp, &[kind], run, "simulate")?;
    sess.finish()
}

fn compare(global: &Global, methods: Option<&str>, run: &RunArgs) -> Result<String> {
    let (mut cfg, text) = load_config(global)?;
    apply_run_args(&mut cfg, run)?;
    if let Some(m) = methods {
        cfg.methods.list = parse_list(m, "method", MethodKind::parse)?;
    }
    formats(run)?;
    let mut sess = Session::new("compare", global, &cfg, &text)?;
    let kinds = cfg.methods.list.clone();
    let exp = Experiment::prepare(cfg, needs_references(&kinds))?;
    sess.absorb(&exp)?;
    run_methods(&mut sess, &exp, &kinds, run, "compare")?;
    sess.finish()
}

pub const SWEEP_HEADER: &str = "param,value,method,cost_usd,dg_mwh,lol_mwh,rmse_pct";

fn sweep(global: &Global, param: &str, values: &str, method: &str, run: &RunArgs) -> Result<String> {
    let kind = MethodKind::parse(method)?;
    let values = parse_list(values, "value", parse_f64)?;
    match param {
        "phi" if values.iter().any(|v| *v < 0.0) => return Err(Error::Config("phi values must be non-negative".into())),
        "scale" if values.iter().any(|v| *v < 0.0) => return Err(Error::Config("scale values must be non-negative".into())),
        "phi" | "scale" => {}
        other => return Err(Error::Config(format!("unknown sweep parameter `{other}` (phi or scale)"))),
    }
    let (mut cfg, text) = load_config(global)?;
    apply_run_args(&mut cfg, run)?;
    let mut sess = Session::new("sweep", global, &cfg, &text)?;
    let mut exp = Experiment::prepare(cfg, needs_references(&[kind]))?;
    sess.absorb(&exp)?;
    let base = exp.scenario.clone();
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut dat = format!("# {param} cost_usd dg_mwh lol_mwh rmse_pct\n");
    for &v in &values {
        match param {
            "phi" => exp.cfg.methods.phi = v,
            _ => exp.scenario = base.scale_renewables(v),
        }
        let results = evaluate(&exp, &[kind])?;
        let r = results.iter().find(|r| r.method == kind).expect("method evaluated");
        let rmse = r.rmse_pct.unwrap_or(f64::NAN);
        let p = &r.practical;
        let _ = writeln!(csv, "{param},{v},{},{:.4},{:.4},{:.4},{:.4}", kind.as_str(), p.cost.total, p.dg_mwh, p.lol_mwh, rmse);
        let _ = writeln!(dat, "{v} {:.4} {:.4} {:.4} {:.4}", p.cost.total, p.dg_mwh, p.lol_mwh, rmse);
    }
    sess.write("sweep.csv", &csv)?;
    sess.write("sweep.dat", &dat)?;
    sess.finish()
}

fn bench(global: &Global, horizons: &str, dim: usize) -> Result<String> {
    let horizons = parse_list(horizons, "horizon", parse_usize)?;
    if dim == 0 || horizons.contains(&0) {
        return Err(Error::Config("--dim and every horizon must be positive".into()));
    }
    let (cfg, text) = load_config(global)?;
    let mut sess = Session::new("bench-regret", global, &cfg, &text)?;
    let seed = sub_seed(cfg.seed, "bench-regret");
    sess.manifest.seed("bench-regret", seed);
    let points = bench_regret(&horizons, dim, seed, &cfg.oco)?;
    let mut csv = String::from("T,regret,path_length,violation\n");
    for p in &points {
        let _ = writeln!(csv, "{},{:.9e},{:.9e},{:.9e}", p.horizon, p.regret, p.path_length, p.violation);
    }
    sess.write("regret.csv", &csv)?;
    sess.write("regret.dat", &regret_plotdata(&points)?)?;
    if points.len() >= 2 {
        let x: Vec<f64> = points.iter().map(|p| p.horizon as f64).collect();
        let y: Vec<f64> = points.iter().map(|p| p.regret.max(f64::MIN_POSITIVE)).collect();
        sess.manifest.metric("log_log_slope", log_log_slope(&x, &y)?);
    }
    sess.finish()
}

fn synth_data(global: &Global, days: Option<usize>) -> Result<String> {
    let (cfg, text) = load_config(global)?;
    let mut sess = Session::new("synth-data", global, &cfg, &text)?;
    let seed = global.seed.unwrap_or(cfg.synth.seed);
    let synth = SynthConfig { seed, days: days.unwrap_or(cfg.synth.days), ..cfg.synth.clone() };
    sess.manifest.seed("synth", seed);
    let s = synthetic_year(&synth)?;
    let p = sess.path(&format!("synthetic-{seed}.csv"));
    write_scenario_csv(&p, &s)?;
    sess.manifest.output(&p)?;
    sess.finish()
}

/// Executes a parsed command line and returns the manifest JSON.
pub fn execute(cli: &Cli) -> Result<String> {
    let g = &cli.global;
    match &cli.command {
        Command::FitCurves { segments, samples } => fit_curves(g, *segments, *samples),
        Command::GenRefs { scenarios, perturb, perturb_range, steps } => {
            gen_refs(g, scenarios, perturb.as_deref(), perturb_range.as_deref(), *steps)
        }
        Command::Simulate { method, run } => simulate(g, method, run),
        Command::Compare { methods, run } => compare(g, methods.as_deref(), run),
        Command::Sweep { param, values, method, run } => sweep(g, param, values, method, run),
        Command::BenchRegret { horizons, dim } => bench(g, horizons, *dim),
        Command::SynthData { days } => synth_data(g, *days),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(json) => {
            println!("{json}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the `h2grid` binary.
pub fn main() -> ! {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    std::process::exit(run(std::env::args_os()))
}
