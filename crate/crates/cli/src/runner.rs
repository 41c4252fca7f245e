//! Scenario execution and artifact output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use finsler_core::cut::{cut_locus_sample, cut_times, inj_radius_submanifold, sample_normals, singleton_intersection_check, tubular_verify, CutOptions};
use finsler_core::distance::{distance_point, distance_to_submanifold, grid_oracle_distance, DistanceOptions, GridOracle};
use finsler_core::geodesic::{flag_curvature, geodesic};
use finsler_core::ode::OdeOptions;
use finsler_core::sphere::backward_sphere_curvature_check;
use finsler_core::submanifold::Submanifold;
use finsler_core::{Error, Metric, TangentVector, Vector};

use crate::scenario::{Expectation, Op, Params, Scenario, SchemaError, TaskSpec, Tolerances};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FINSLER_OUT_DIR";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub quantity: String,
    pub measured: Option<f64>,
    pub expected: String,
    pub tolerance: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub id: String,
    pub op: Op,
    pub quantities: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
    pub assertions: Vec<Assertion>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub pass: bool,
    pub tasks: Vec<TaskReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskTiming {
    pub id: String,
    pub wall_seconds: f64,
    pub pass: bool,
    pub assertions: Vec<AssertionOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionOutcome {
    pub quantity: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub workers: Option<usize>,
    pub wall_seconds: f64,
    pub tasks: Vec<TaskTiming>,
    pub outputs: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: Report,
    pub manifest: Manifest,
    /// First task that raised an error, with its message.
    pub task_error: Option<(String, String)>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.report.pass
    }
}

/// Rows of results.csv for one task: `(sample id, quantity, value)`.
type Rows = Vec<(usize, String, f64)>;

#[derive(Default)]
struct TaskOutput {
    quantities: BTreeMap<String, f64>,
    notes: BTreeMap<String, String>,
    rows: Rows,
    files: Vec<(String, String)>,
}

impl TaskOutput {
    fn q(&mut self, name: &str, v: f64) {
        self.quantities.insert(name.to_string(), v);
    }
}

struct Context<'a> {
    metric: &'a Metric,
    subs: &'a BTreeMap<String, Submanifold>,
    tol: Tolerances,
    seed: u64,
}

/// Read a scenario file, or a bundled scenario when `path` names one and no
/// such file exists.
pub fn load(path: &Path) -> Result<(String, Scenario), RunError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(source) => match path.to_str().and_then(crate::scenario::bundled) {
            Some(t) => t.to_string(),
            None => return Err(RunError::Io { path: path.to_path_buf(), source }),
        },
    };
    let scenario = Scenario::parse(&text)?;
    Ok((text, scenario))
}

fn output_dir(scenario: &Scenario, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("finsler-out"))
}

pub fn run_file(path: &Path, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let (text, scenario) = load(path)?;
    run_scenario(&text, &scenario, overrides)
}

/// Execute every task and write the artifacts.
pub fn run_scenario(text: &str, scenario: &Scenario, overrides: &Overrides) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let seed = overrides.seed.unwrap_or(scenario.seed);
    let metric = scenario.metric.build().map_err(SchemaError::Invalid)?;
    let subs: BTreeMap<String, Submanifold> = scenario
        .submanifolds
        .iter()
        .map(|(k, s)| Ok((k.clone(), s.build(k).map_err(SchemaError::Invalid)?)))
        .collect::<Result<_, SchemaError>>()?;
    let base = Tolerances::default().with(&scenario.tolerances);
    let execute = || -> Vec<(TaskReport, TaskOutput, f64)> {
        scenario
            .tasks
            .par_iter()
            .map(|task| {
                let t0 = Instant::now();
                let ctx = Context { metric: &metric, subs: &subs, tol: base.with(&task.tolerances), seed: task_seed(seed, &task.id) };
                let result = execute_task(&ctx, task);
                let (out, error) = match result {
                    Ok(out) => (out, None),
                    Err(e) => (TaskOutput::default(), Some(e)),
                };
                let assertions = if error.is_some() {
                    Vec::new()
                } else {
                    task.expect.iter().map(|e| assess(e, &out.quantities, ctx.tol.expect)).collect()
                };
                let report = TaskReport {
                    id: task.id.clone(),
                    op: task.op,
                    quantities: out.quantities.clone(),
                    notes: out.notes.clone(),
                    assertions,
                    error,
                };
                (report, out, t0.elapsed().as_secs_f64())
            })
            .collect()
    };
    let mut results = match overrides.workers {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(execute),
            Err(_) => execute(),
        },
        None => execute(),
    };
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let out_dir = output_dir(scenario, overrides);
    std::fs::create_dir_all(&out_dir).map_err(|source| RunError::Io { path: out_dir.clone(), source })?;
    let write = |name: &str, content: &str| {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|source| RunError::Io { path, source })
    };

    let mut csv = String::from("task_id,sample_id,quantity,value\n");
    let mut outputs = vec!["results.csv".to_string(), "report.json".to_string(), "manifest.json".to_string()];
    for (report, out, _) in &results {
        for (name, v) in &report.quantities {
            let _ = writeln!(csv, "{},,{},{}", report.id, name, v);
        }
        for (sample, name, v) in &out.rows {
            let _ = writeln!(csv, "{},{},{},{}", report.id, sample, name, v);
        }
        for (name, content) in &out.files {
            write(name, content)?;
            outputs.push(name.clone());
        }
    }
    for (name, sub) in &subs {
        let file = format!("{name}.polyline");
        write(&file, &submanifold_polyline(sub))?;
        outputs.push(file);
    }
    write("results.csv", &csv)?;

    let tasks: Vec<TaskReport> = results.iter().map(|r| r.0.clone()).collect();
    let pass = tasks.iter().all(|t| t.error.is_none() && t.assertions.iter().all(|a| a.pass));
    let report = Report { seed, pass, tasks };
    write("report.json", &to_json(&report))?;

    let manifest = Manifest {
        scenario_sha256: hex(&Sha256::digest(text.as_bytes())),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        workers: overrides.workers,
        wall_seconds: start.elapsed().as_secs_f64(),
        tasks: results
            .iter()
            .map(|(r, _, secs)| TaskTiming {
                id: r.id.clone(),
                wall_seconds: *secs,
                pass: r.error.is_none() && r.assertions.iter().all(|a| a.pass),
                assertions: r.assertions.iter().map(|a| AssertionOutcome { quantity: a.quantity.clone(), pass: a.pass }).collect(),
            })
            .collect(),
        outputs,
        pass,
    };
    write("manifest.json", &to_json(&manifest))?;
    let task_error = report.tasks.iter().find_map(|t| t.error.clone().map(|e| (t.id.clone(), e)));
    Ok(RunOutcome { out_dir, report, manifest, task_error })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-task seed, independent of task order.
fn task_seed(seed: u64, id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(head)
}

fn assess(e: &Expectation, quantities: &BTreeMap<String, f64>, default_tol: f64) -> Assertion {
    let measured = quantities.get(&e.quantity).copied();
    let tol = e.tol.unwrap_or(default_tol);
    let mut margin = f64::INFINITY;
    let mut parts = Vec::new();
    if let Some(v) = e.value {
        let scale = if e.relative { v.abs() } else { 1.0 };
        margin = margin.min(measured.map_or(f64::NEG_INFINITY, |m| tol - (m - v).abs() / scale));
        parts.push(format!("{v} +- {tol}{}", if e.relative { " (relative)" } else { "" }));
    }
    if let Some(lo) = e.at_least {
        margin = margin.min(measured.map_or(f64::NEG_INFINITY, |m| m - lo));
        parts.push(format!(">= {lo}"));
    }
    if let Some(hi) = e.at_most {
        margin = margin.min(measured.map_or(f64::NEG_INFINITY, |m| hi - m));
        parts.push(format!("<= {hi}"));
    }
    Assertion {
        quantity: e.quantity.clone(),
        measured,
        expected: parts.join(", "),
        tolerance: tol,
        margin,
        pass: margin >= 0.0,
    }
}

fn submanifold_polyline(sub: &Submanifold) -> String {
    let params = if sub.param_dim() == 1 { sub.sample_params(400) } else { sub.sample_params(1) };
    let mut out = String::new();
    for u in params {
        let p = sub.point(&u);
        let coords: Vec<String> = p.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&coords.join(" "));
        out.push('\n');
    }
    out
}

fn points_file(points: &[Vector]) -> String {
    let mut out = String::new();
    for p in points {
        let coords: Vec<String> = p.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&coords.join(" "));
        out.push('\n');
    }
    out
}

fn need_vec(name: &str, v: &Option<Vec<f64>>, dim: usize) -> Result<Vector, String> {
    let v = v.as_ref().ok_or_else(|| format!("missing parameter `{name}`"))?;
    if v.len() != dim {
        return Err(format!("parameter `{name}` has {} components, expected {dim}", v.len()));
    }
    Ok(Vector::from_vec(v.clone()))
}

fn need<T: Copy>(name: &str, v: Option<T>) -> Result<T, String> {
    v.ok_or_else(|| format!("missing parameter `{name}`"))
}

fn cut_options(tol: &Tolerances) -> CutOptions {
    CutOptions {
        tol_d: tol.tol_d,
        bracket: tol.bracket,
        distance: distance_options(tol),
        ..CutOptions::default()
    }
}

fn distance_options(tol: &Tolerances) -> DistanceOptions {
    DistanceOptions { cluster_value_tol: tol.cluster_value, ..DistanceOptions::default() }
}

fn execute_task(ctx: &Context, task: &TaskSpec) -> Result<TaskOutput, String> {
    let m = ctx.metric;
    let p: &Params = &task.params;
    let dim = m.dim();
    let sub = || -> Result<&Submanifold, String> {
        let name = task.submanifold.as_ref().ok_or_else(|| format!("op {:?} needs a submanifold", task.op))?;
        Ok(&ctx.subs[name])
    };
    let e = |err: Error| err.to_string();
    let mut out = TaskOutput::default();
    match task.op {
        Op::Geodesic => {
            let x = need_vec("p", &p.p, dim)?;
            let v = need_vec("v", &p.v, dim)?;
            let t = p.t.unwrap_or(5.0);
            m.eval_f(&TangentVector::new(x.clone(), v.clone())).map_err(e)?;
            let rec = geodesic(m, &x, &v, t, &OdeOptions::with_tol(ctx.tol.ode));
            out.q("t_end", rec.t_end());
            out.q("speed_drift", rec.speed_drift(m));
            for (i, c) in rec.end_point().iter().enumerate() {
                out.q(&format!("end_x{}", i + 1), *c);
            }
            out.notes.insert("terminated_by".into(), format!("{:?}", rec.terminated_by));
            out.files.push((format!("{}.polyline", task.id), rec.to_polyline(400)));
        }
        Op::FlagCurvature => {
            let x = need_vec("p", &p.p, dim)?;
            let v = need_vec("v", &p.v, dim)?;
            let w = need_vec("w", &p.w, dim)?;
            out.q("flag_curvature", flag_curvature(m, &TangentVector::new(x, v), &w).map_err(e)?);
        }
        Op::DistancePoint => {
            let a = need_vec("p", &p.p, dim)?;
            let b = need_vec("q", &p.q, dim)?;
            let r = distance_point(m, &a, &b, &distance_options(&ctx.tol)).map_err(e)?;
            out.q("distance", r.value);
            out.q("multiplicity", r.multiplicity as f64);
            out.q("residual", r.residual);
            out.notes.insert("method".into(), r.method.as_str().into());
            out.files.push((format!("{}.polyline", task.id), r.minimizer.to_polyline(200)));
        }
        Op::DistanceSubmanifold => {
            let q = need_vec("q", &p.q, dim)?;
            let r = distance_to_submanifold(m, sub()?, &q, &distance_options(&ctx.tol)).map_err(e)?;
            out.q("distance", r.value);
            out.q("multiplicity", r.multiplicity as f64);
            out.q("degenerate", if r.degenerate { 1.0 } else { 0.0 });
            for (i, c) in r.foot.iter().enumerate() {
                out.q(&format!("foot_x{}", i + 1), *c);
            }
            out.files.push((format!("{}.polyline", task.id), r.minimizer.to_polyline(200)));
        }
        Op::OracleDistance => {
            let a = need_vec("p", &p.p, dim)?;
            let b = need_vec("q", &p.q, dim)?;
            out.q("distance", grid_oracle_distance(m, &a, &b, ctx.tol.oracle_h).map_err(e)?);
        }
        Op::DistancePairs => {
            let count = p.pairs.unwrap_or(20);
            let radius = p.radius.unwrap_or(1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut pairs = Vec::with_capacity(count);
            while pairs.len() < count {
                let mut draw = || Vector::from_fn(dim, |_, _| rng.random_range(-radius..radius));
                let (a, b) = (draw(), draw());
                if m.contains(&a) && m.contains(&b) && (&a - &b).norm() >= 0.25 * radius {
                    pairs.push((a, b));
                }
            }
            let shooting = DistanceOptions { method: finsler_core::distance::DistanceMethod::Shooting, ..distance_options(&ctx.tol) };
            let rows: Vec<(f64, f64)> = pairs
                .par_iter()
                .map(|(a, b)| {
                    let shot = distance_point(m, a, b, &shooting)?.value;
                    let grid = GridOracle::for_points(m, a, b, ctx.tol.oracle_h)?.distances_from(a)?.query(b)?;
                    Ok((shot, grid))
                })
                .collect::<Result<_, Error>>()
                .map_err(e)?;
            let mut worst: f64 = 0.0;
            for (i, (shot, grid)) in rows.iter().enumerate() {
                let rel = (shot - grid).abs() / shot;
                worst = worst.max(rel);
                out.rows.push((i, "shooting".into(), *shot));
                out.rows.push((i, "oracle".into(), *grid));
                out.rows.push((i, "relative_error".into(), rel));
            }
            out.q("max_relative_error", worst);
        }
        Op::CutTimes => {
            let sub = sub()?;
            let opts = cut_options(&ctx.tol);
            let normals = sample_normals(m, sub, p.normals.unwrap_or(200)).map_err(e)?;
            let samples = cut_times(m, sub, &normals, &opts).map_err(e)?;
            let mut table = String::from("sample,u,rho,finite,focal_time,reason\n");
            let mut min_rho = f64::INFINITY;
            for (i, s) in samples.iter().enumerate() {
                let rho = s.rho.lower_bound();
                min_rho = min_rho.min(rho);
                let u: Vec<String> = s.normal.u.iter().map(|v| format!("{v:.12e}")).collect();
                let focal = s.focal_time.map(|f| format!("{f:.12e}")).unwrap_or_default();
                let _ = writeln!(
                    table,
                    "{i},{},{rho:.12e},{},{focal},{}",
                    u.join(" "),
                    s.rho.finite().is_some(),
                    s.limiting_reason.as_str()
                );
                out.rows.push((i, "rho".into(), rho));
            }
            out.q("min_rho", min_rho);
            out.q("normals", samples.len() as f64);
            out.q("finite", samples.iter().filter(|s| s.rho.finite().is_some()).count() as f64);
            out.files.push((format!("{}_cut_times.csv", task.id), table));
        }
        Op::CutLocus => {
            let sub = sub()?;
            let cloud = cut_locus_sample(m, sub, p.normals.unwrap_or(200), &cut_options(&ctx.tol)).map_err(e)?;
            out.q("inj_plus", cloud.injectivity);
            out.q("distance_to_cut_locus", cloud.distance_to_n);
            out.q("disjoint", if cloud.disjoint { 1.0 } else { 0.0 });
            out.q("cut_points", cloud.points.len() as f64);
            out.files.push((format!("{}_cloud.csv", task.id), cloud.to_csv()));
            out.files.push((format!("{}_cut_points.polyline", task.id), points_file(&cloud.points)));
        }
        Op::Tubular => {
            let sub = sub()?;
            let opts = cut_options(&ctx.tol);
            let (epsilon, inj) = match (p.epsilon, p.epsilon_factor) {
                (Some(eps), _) => (eps, None),
                (None, Some(f)) => {
                    let inj = inj_radius_submanifold(m, sub, p.normals.unwrap_or(200), &opts).map_err(e)?.value;
                    (f * inj, Some(inj))
                }
                (None, None) => return Err("tubular needs `epsilon` or `epsilon_factor`".into()),
            };
            out.q("epsilon", epsilon);
            if let Some(inj) = inj {
                out.q("inj_plus", inj);
            }
            match tubular_verify(m, sub, epsilon, p.probes.unwrap_or(50), inj, &opts) {
                Ok(r) => {
                    out.q("collisions", 0.0);
                    out.q("probes_tested", r.probes_tested as f64);
                    out.q("probes_covered", r.probes_covered as f64);
                    out.q("max_probe_miss", r.max_probe_miss);
                    out.q("min_image_separation", r.min_pairwise_image_separation);
                }
                Err(Error::EpsilonTooLarge { collisions, .. }) => out.q("collisions", collisions as f64),
                Err(err) => return Err(err.to_string()),
            }
        }
        Op::Singleton => {
            let q = need_vec("q", &p.q, dim)?;
            let s = singleton_intersection_check(m, sub()?, &q, ctx.tol.cluster_value, &distance_options(&ctx.tol)).map_err(e)?;
            out.q("unique", if s.unique { 1.0 } else { 0.0 });
            out.q("distance", s.distance);
            out.q("witnesses", s.witnesses.len() as f64);
            for (i, w) in s.witnesses.iter().enumerate() {
                for (k, c) in w.iter().enumerate() {
                    out.rows.push((i, format!("witness_x{}", k + 1), *c));
                }
            }
        }
        Op::BackwardSphere => {
            let q = need_vec("q", &p.q, dim)?;
            let r = need("r", p.r)?;
            let rep = backward_sphere_curvature_check(m, &q, r, p.samples.unwrap_or(50)).map_err(e)?;
            out.q("ct", rep.ct_value);
            out.q("lambda", rep.lambda_est);
            out.q("min_kappa", rep.min_kappa);
            out.q("max_kappa", rep.max_kappa);
            out.q("margin", rep.margin);
            out.q("sign_law_residual", rep.sign_law_residual);
            out.q("jacobi_residual", rep.jacobi_residual);
            out.q("injectivity_bound", rep.injectivity_bound);
            for (i, k) in rep.kappas.iter().enumerate() {
                out.rows.push((i, "kappa".into(), *k));
            }
        }
    }
    Ok(out)
}
