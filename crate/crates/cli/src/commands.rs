use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use quasiwkb::exact::uniform_grid;
use quasiwkb::experiments::{
    compare_trajectories, pgs_vs_tf, threshold_time, Backend, Comparison, Model, SolverSettings, ThresholdResult,
    ThresholdSpec, ThresholdStatus,
};
use quasiwkb::hj::{HjProfile, DERIVATIVE_STEP};
use quasiwkb::numerics::{fit_line, OdeSpec};
use quasiwkb::wkb::{WkbProfile, ENDPOINT_CLAMP};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    config_err, parse_backends, parse_int_list, parse_single_tf, parse_tf_list, CliError, ConfigLayer, Spacing,
};
use crate::output::{document, num, Csv, Report};

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML file supplying values for options not given on the command line
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON document to this path
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the CSV table to this path
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Add wall-clock time to the metadata (output is then not reproducible)
    #[arg(long)]
    pub timing: bool,
    /// Absolute tolerance of the exact integrator
    #[arg(long)]
    pub atol: Option<f64>,
    /// Relative tolerance of the exact integrator
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Step budget of the exact integrator per solve
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Points of the uniform r grid for trajectories
    #[arg(long)]
    pub grid_points: Option<usize>,
}

pub struct Common {
    pub settings: SolverSettings,
    pub timing: bool,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    started: Instant,
}

impl Common {
    pub fn resolve(args: &CommonArgs, layer: &ConfigLayer) -> Result<Self, CliError> {
        let defaults = SolverSettings::default();
        let ode = OdeSpec {
            abs_tol: layer.value("atol", args.atol, defaults.ode.abs_tol)?,
            rel_tol: layer.value("rtol", args.rtol, defaults.ode.rel_tol)?,
            initial_step: None,
            max_steps: layer.value("max_steps", args.max_steps, defaults.ode.max_steps)?,
        };
        ode.validate().map_err(config_err)?;
        let grid_points = layer.value("grid_points", args.grid_points, defaults.grid_points)?;
        uniform_grid(grid_points).map_err(config_err)?;
        Ok(Self {
            settings: SolverSettings { ode, grid_points },
            timing: args.timing || layer.value("timing", None, false)?,
            json: layer.optional("json", args.json.clone())?,
            csv: layer.optional("csv", args.csv.clone())?,
            started: Instant::now(),
        })
    }

    fn solver_json(&self) -> Value {
        let ode = &self.settings.ode;
        json!({ "atol": ode.abs_tol, "rtol": ode.rel_tol, "max_steps": ode.max_steps, "grid_points": self.settings.grid_points })
    }

    fn metadata(&self, grids: Value) -> Value {
        let ode = &self.settings.ode;
        let wkb = WkbProfile::DEFAULT_QUADRATURE;
        let hj = HjProfile::DEFAULT_QUADRATURE;
        let mut meta = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "tolerances": {
                "exact_abs_tol": ode.abs_tol,
                "exact_rel_tol": ode.rel_tol,
                "exact_max_steps": ode.max_steps,
                "wkb_quadrature_abs_tol": wkb.abs_tol,
                "wkb_quadrature_rel_tol": wkb.rel_tol,
                "wkb_endpoint_clamp": ENDPOINT_CLAMP,
                "hj_quadrature_abs_tol": hj.abs_tol,
                "hj_quadrature_rel_tol": hj.rel_tol,
                "hj_derivative_step": DERIVATIVE_STEP,
            },
            "grids": grids,
        });
        if self.timing {
            meta["wall_time_s"] = json!(self.started.elapsed().as_secs_f64());
        }
        meta
    }
}

fn backend_names(backends: &[Backend]) -> Vec<&'static str> {
    backends.iter().map(|b| b.name()).collect()
}

fn single_backend(text: &str) -> Result<Backend, CliError> {
    match parse_backends(text)?.as_slice() {
        [b] => Ok(*b),
        _ => Err(config_err("exactly one backend is required")),
    }
}

/// Builds every model up front so that bad `n`/`alpha` values are reported
/// as configuration errors.
fn model(n: u32, alpha: u8, backend: Backend, settings: &SolverSettings) -> Result<Model, CliError> {
    Model::for_problem(n, alpha, backend, settings).map_err(|e| config_err(format!("n={n} alpha={alpha}: {e}")))
}

#[derive(Args, Debug, Default)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub alpha: Option<u8>,
    /// Total evolution time
    #[arg(long)]
    pub tf: Option<String>,
    /// Comma-separated backends (exact, wkb0, wkb1, rwkb0, hj0, hj1, adiabatic)
    #[arg(long)]
    pub backends: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn dynamics(args: &DynamicsArgs, layer: &ConfigLayer, common: &Common) -> Result<Report, CliError> {
    let n = layer.value("n", args.n, 1)?;
    let alpha = layer.value("alpha", args.alpha, 0)?;
    let tf_text = layer.text("tf", args.tf.clone(), "50")?;
    let backends = parse_backends(&layer.text("backends", args.backends.clone(), "exact,wkb0,wkb1,adiabatic")?)?;
    layer.finish()?;
    let t_f = parse_single_tf(&tf_text)?;
    for &b in &backends {
        model(n, alpha, b, &common.settings)?;
    }

    let cmp = compare_trajectories(n, alpha, t_f, &backends, &common.settings)
        .map_err(|e| CliError::Solver(format!("n={n} alpha={alpha} t_f={t_f}: {e}")))?;
    let mut csv = Csv::new(&[
        "r", "s", "backend", "psi_re", "psi_im", "phi_re", "phi_im", "pop_marked", "norm", "trace_dist_vs_exact",
    ]);
    let mut rows = Vec::with_capacity(cmp.rows.len());
    for row in &cmp.rows {
        let st = row.state;
        csv.row(&[
            num(row.r),
            num(row.s),
            row.backend.name().to_string(),
            num(st.psi.re),
            num(st.psi.im),
            num(st.phi.re),
            num(st.phi.im),
            num(row.pop_marked),
            num(row.norm),
            num(row.trace_dist_vs_exact),
        ]);
        rows.push(json!({
            "r": row.r, "s": row.s, "backend": row.backend,
            "psi_re": st.psi.re, "psi_im": st.psi.im, "phi_re": st.phi.re, "phi_im": st.phi.im,
            "pop_marked": row.pop_marked, "norm": row.norm, "trace_dist_vs_exact": row.trace_dist_vs_exact,
        }));
    }
    let config = json!({
        "command": "dynamics", "n": n, "alpha": alpha, "tf": t_f,
        "backends": backend_names(&backends), "solver": common.solver_json(),
    });
    let mut doc = document(config, Value::Array(rows), None, common.metadata(json!({ "r_points": common.settings.grid_points })));
    doc["summary"] = Value::Array(
        cmp.backends
            .iter()
            .zip(&cmp.averages)
            .map(|(b, avg)| json!({ "backend": b, "avg_trace_dist_vs_exact": avg }))
            .collect(),
    );
    Ok(Report { json: doc, csv, csv_is_primary: true })
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Qubit counts: `a..b` or a comma list
    #[arg(long)]
    pub n: Option<String>,
    /// Schedule exponents: `a..b` or a comma list
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated backends
    #[arg(long)]
    pub backend: Option<String>,
    /// Total times: `a..b` (expanded to --tf-points values) or a comma list
    #[arg(long)]
    pub tf: Option<String>,
    #[arg(long)]
    pub tf_points: Option<usize>,
    #[arg(long, value_enum)]
    pub tf_spacing: Option<Spacing>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn sweep(args: &SweepArgs, layer: &ConfigLayer, common: &Common) -> Result<Report, CliError> {
    let ns = parse_int_list::<u32>("n", &layer.text("n", args.n.clone(), "4")?)?;
    let alphas = parse_int_list::<u8>("alpha", &layer.text("alpha", args.alpha.clone(), "0")?)?;
    let backends = parse_backends(&layer.text("backend", args.backend.clone(), "exact")?)?;
    let tf_text = layer.text("tf", args.tf.clone(), "1..200")?;
    let points = layer.value("tf_points", args.tf_points, 200)?;
    let spacing = layer.value("tf_spacing", args.tf_spacing, Spacing::Linear)?;
    layer.finish()?;
    let t_fs = parse_tf_list(&tf_text, points, spacing)?;

    let mut cells = Vec::new();
    for &n in &ns {
        for &alpha in &alphas {
            for &b in &backends {
                cells.push((n, alpha, b, model(n, alpha, b, &common.settings)?));
            }
        }
    }

    let mut csv = Csv::new(&["n", "alpha", "backend", "t_f", "p_gs", "status"]);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, alpha, b, m) in &cells {
        for row in pgs_vs_tf(m, &t_fs) {
            let status = if row.p_gs.is_some() { "ok" } else { "failed" };
            if let Some(err) = &row.error {
                failures.push(format!("n={n} alpha={alpha} backend={b} t_f={}: {err}", row.t_f));
            }
            csv.row(&[n.to_string(), alpha.to_string(), b.name().into(), num(row.t_f), num(row.p_gs.unwrap_or(f64::NAN)), status.into()]);
            rows.push(json!({
                "n": n, "alpha": alpha, "backend": b, "t_f": row.t_f,
                "p_gs": row.p_gs, "status": status, "message": row.error,
            }));
        }
    }
    if failures.len() == rows.len() {
        return Err(CliError::Solver(failures.join("; ")));
    }
    let config = json!({
        "command": "sweep", "n": ns, "alpha": alphas, "backend": backend_names(&backends),
        "tf": tf_text, "tf_points": points, "tf_spacing": spacing, "solver": common.solver_json(),
    });
    let meta = common.metadata(json!({ "t_f": t_fs, "n": ns }));
    Ok(Report { json: document(config, Value::Array(rows), None, meta), csv, csv_is_primary: false })
}

#[derive(Args, Debug, Default)]
pub struct ThresholdArgs {
    /// Target ground-state population
    #[arg(long)]
    pub p_th: Option<f64>,
    /// First time of the geometric scan
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Scan limit; thresholds beyond it are reported as not reached
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Ratio between consecutive scan times
    #[arg(long)]
    pub ratio: Option<f64>,
    /// A crossing counts once p_gs stays above p_th up to this multiple of it
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Relative width at which bisection stops
    #[arg(long)]
    pub rel_width: Option<f64>,
}

impl ThresholdArgs {
    fn resolve(&self, layer: &ConfigLayer) -> Result<ThresholdSpec, CliError> {
        let d = ThresholdSpec::default();
        let spec = ThresholdSpec {
            p_th: layer.value("p_th", self.p_th, d.p_th)?,
            t_min: layer.value("t_min", self.t_min, d.t_min)?,
            t_max: layer.value("t_max", self.t_max, d.t_max)?,
            ratio: layer.value("ratio", self.ratio, d.ratio)?,
            horizon_factor: layer.value("horizon", self.horizon, d.horizon_factor)?,
            rel_width: layer.value("rel_width", self.rel_width, d.rel_width)?,
        };
        spec.validate().map_err(config_err)?;
        Ok(spec)
    }
}

fn spec_json(spec: &ThresholdSpec) -> Value {
    json!({
        "p_th": spec.p_th, "t_min": spec.t_min, "t_max": spec.t_max, "ratio": spec.ratio,
        "horizon": spec.horizon_factor, "rel_width": spec.rel_width,
    })
}

fn status_name(status: ThresholdStatus) -> &'static str {
    match status {
        ThresholdStatus::Converged => "converged",
        ThresholdStatus::NonMonotoneTail => "non_monotone_tail",
        ThresholdStatus::BelowScanFloor => "below_scan_floor",
    }
}

struct ThresholdCell {
    n: u32,
    alpha: u8,
    backend: Backend,
    outcome: quasiwkb::Result<ThresholdResult>,
}

impl ThresholdCell {
    fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(r) => status_name(r.status),
            Err(quasiwkb::Error::NotReached { .. }) => "not_reached",
            Err(_) => "failed",
        }
    }

    fn t_f_th(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.t_f_th)
    }

    fn describe(&self) -> String {
        format!("n={} alpha={} backend={}", self.n, self.alpha, self.backend)
    }

    fn json(&self) -> Value {
        let t = self.t_f_th();
        json!({
            "n": self.n, "alpha": self.alpha, "backend": self.backend,
            "t_f_th": t, "log2_t_f_th": t.map(f64::log2), "status": self.status(),
            "evaluations": self.outcome.as_ref().ok().map(|r| r.evaluations),
            "message": self.outcome.as_ref().err().map(|e| e.to_string()),
        })
    }

    fn csv_cells(&self) -> Vec<String> {
        let evals = self.outcome.as_ref().map(|r| r.evaluations.to_string()).unwrap_or_default();
        vec![
            self.n.to_string(),
            self.alpha.to_string(),
            self.backend.name().into(),
            num(self.t_f_th().unwrap_or(f64::NAN)),
            self.status().into(),
            evals,
        ]
    }
}

fn run_thresholds(cells: Vec<(u32, u8, Backend, Model)>, spec: &ThresholdSpec) -> Vec<ThresholdCell> {
    cells
        .into_par_iter()
        .map(|(n, alpha, backend, m)| ThresholdCell { n, alpha, backend, outcome: threshold_time(&m, spec) })
        .collect()
}

const THRESHOLD_HEADER: [&str; 6] = ["n", "alpha", "backend", "t_f_th", "status", "evaluations"];

#[derive(Args, Debug, Default)]
pub struct ThresholdCmdArgs {
    /// Qubit counts: `a..b` or a comma list
    #[arg(long)]
    pub n: Option<String>,
    /// Schedule exponents: `a..b` or a comma list
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated backends
    #[arg(long)]
    pub backend: Option<String>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn threshold(args: &ThresholdCmdArgs, layer: &ConfigLayer, common: &Common) -> Result<Report, CliError> {
    let ns = parse_int_list::<u32>("n", &layer.text("n", args.n.clone(), "2..10")?)?;
    let alphas = parse_int_list::<u8>("alpha", &layer.text("alpha", args.alpha.clone(), "0")?)?;
    let backends = parse_backends(&layer.text("backend", args.backend.clone(), "exact")?)?;
    let spec = args.threshold.resolve(layer)?;
    layer.finish()?;

    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &b in &backends {
            for &n in &ns {
                cells.push((n, alpha, b, model(n, alpha, b, &common.settings)?));
            }
        }
    }
    let results = run_thresholds(cells, &spec);
    if results.iter().all(|c| c.t_f_th().is_none()) {
        let msgs: Vec<String> = results
            .iter()
            .map(|c| format!("{}: {}", c.describe(), c.outcome.as_ref().err().map(|e| e.to_string()).unwrap_or_default()))
            .collect();
        return Err(CliError::Solver(msgs.join("; ")));
    }
    let mut csv = Csv::new(&THRESHOLD_HEADER);
    for c in &results {
        csv.row(&c.csv_cells());
    }
    let config = json!({
        "command": "threshold", "n": ns, "alpha": alphas, "backend": backend_names(&backends),
        "threshold": spec_json(&spec), "solver": common.solver_json(),
    });
    let rows = results.iter().map(ThresholdCell::json).collect();
    let meta = common.metadata(json!({ "n": ns }));
    Ok(Report { json: document(config, Value::Array(rows), None, meta), csv, csv_is_primary: false })
}

#[derive(Args, Debug, Default)]
pub struct ScalingArgs {
    /// Qubit counts to fit over: `a..b` or a comma list
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub alpha: Option<u8>,
    #[arg(long)]
    pub backend: Option<String>,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn scaling(args: &ScalingArgs, layer: &ConfigLayer, common: &Common) -> Result<Report, CliError> {
    let ns = parse_int_list::<u32>("n", &layer.text("n", args.n.clone(), "2..10")?)?;
    let alpha = layer.value("alpha", args.alpha, 2)?;
    let backend = single_backend(&layer.text("backend", args.backend.clone(), "exact")?)?;
    let spec = args.threshold.resolve(layer)?;
    layer.finish()?;
    if ns.len() < 3 {
        return Err(config_err("a scaling fit needs at least three values of n"));
    }

    let cells = ns
        .iter()
        .map(|&n| Ok((n, alpha, backend, model(n, alpha, backend, &common.settings)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let results = run_thresholds(cells, &spec);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        results.iter().filter_map(|c| c.t_f_th().map(|t| (c.n as f64, t.log2()))).unzip();
    if xs.len() < 3 {
        let failed: Vec<String> = results
            .iter()
            .filter(|c| c.t_f_th().is_none())
            .map(|c| format!("{}: {}", c.describe(), c.status()))
            .collect();
        return Err(CliError::Solver(format!("fewer than three thresholds found ({})", failed.join("; "))));
    }
    let fit = fit_line(&xs, &ys).map_err(|e| CliError::Solver(e.to_string()))?;

    let mut csv = Csv::new(&THRESHOLD_HEADER);
    for c in &results {
        csv.row(&c.csv_cells());
    }
    let config = json!({
        "command": "scaling", "n": ns, "alpha": alpha, "backend": backend,
        "threshold": spec_json(&spec), "solver": common.solver_json(),
    });
    let fit_json = json!({
        "model": "log2(t_f_th) = slope * n + intercept",
        "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
        "points": xs.len(),
    });
    let rows = results.iter().map(ThresholdCell::json).collect();
    let meta = common.metadata(json!({ "n": ns }));
    Ok(Report { json: document(config, Value::Array(rows), Some(fit_json), meta), csv, csv_is_primary: false })
}

#[derive(Args, Debug, Default)]
pub struct CompareArgs {
    #[arg(long)]
    pub n: Option<u32>,
    /// Schedule exponents: `a..b` or a comma list
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub tf: Option<String>,
    /// Comma-separated backends, each compared against the exact solution
    #[arg(long)]
    pub backends: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn compare(args: &CompareArgs, layer: &ConfigLayer, common: &Common) -> Result<Report, CliError> {
    let n = layer.value("n", args.n, 6)?;
    let alphas = parse_int_list::<u8>("alpha", &layer.text("alpha", args.alpha.clone(), "0..3")?)?;
    let tf_text = layer.text("tf", args.tf.clone(), "60")?;
    let backends = parse_backends(&layer.text("backends", args.backends.clone(), "wkb0,rwkb0")?)?;
    layer.finish()?;
    let t_f = parse_single_tf(&tf_text)?;
    for &alpha in &alphas {
        for &b in &backends {
            model(n, alpha, b, &common.settings)?;
        }
    }

    let comparisons: Vec<Comparison> = alphas
        .par_iter()
        .map(|&alpha| {
            compare_trajectories(n, alpha, t_f, &backends, &common.settings)
                .map_err(|e| CliError::Solver(format!("n={n} alpha={alpha} t_f={t_f}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(&["alpha", "backend", "r", "s", "norm", "pop_marked", "trace_dist_vs_exact"]);
    let mut rows = Vec::new();
    for cmp in &comparisons {
        for (i, (b, avg)) in cmp.backends.iter().zip(&cmp.averages).enumerate() {
            let series = &cmp.rows[i * common.settings.grid_points..(i + 1) * common.settings.grid_points];
            let norms = series.iter().map(|r| r.norm);
            let last = series.last().expect("grids have at least two points");
            rows.push(json!({
                "alpha": cmp.alpha, "backend": b, "avg_trace_dist_vs_exact": avg,
                "min_norm": norms.clone().fold(f64::INFINITY, f64::min),
                "max_norm": norms.fold(f64::NEG_INFINITY, f64::max),
                "final_pop_marked": last.pop_marked,
            }));
            for r in series {
                csv.row(&[
                    cmp.alpha.to_string(),
                    b.name().into(),
                    num(r.r),
                    num(r.s),
                    num(r.norm),
                    num(r.pop_marked),
                    num(r.trace_dist_vs_exact),
                ]);
            }
        }
    }
    let config = json!({
        "command": "compare", "n": n, "alpha": alphas, "tf": t_f,
        "backends": backend_names(&backends), "solver": common.solver_json(),
    });
    let meta = common.metadata(json!({ "r_points": common.settings.grid_points }));
    Ok(Report { json: document(config, Value::Array(rows), None, meta), csv, csv_is_primary: false })
}
