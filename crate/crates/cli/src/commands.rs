use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qflow_core::convergence::{heat_limit_cell, observed_order, richardson_order, HeatCell};
use qflow_core::grid::io::{sci, write_snapshot_csv, DomainManifest};
use qflow_core::morseflow::checks::{self, CheckConfig, CheckOutcome};
use qflow_core::oracle::{heat_exact_eigen, implicit_euler_chain, max_principle_check, EigenHeatSpec};
use qflow_core::{
    dirichlet_energy, l2_distance_sq, run_flow, sample_initial, suites, weak_residual_eta,
    FlowTrajectory, GridDomain, InitialSpec, QPoint, ScheduleMode, StepSchedule,
};

use crate::config::{sweep_steps, ConfigError, NegativeControl, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] qflow_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// What a command reports back to `main`.
pub struct Outcome {
    pub passed: bool,
    pub failures: Vec<String>,
}

impl Outcome {
    fn from_checks(checks: &[CheckOutcome]) -> Self {
        let failures: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} failed (margin {:.6e}): {}", c.name, c.margin, c.detail))
            .collect();
        Self {
            passed: failures.is_empty(),
            failures,
        }
    }
}

fn config_json(cfg: &RunConfig) -> Value {
    let map = cfg
        .serialize()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect();
    Value::Object(map)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn build_initial(cfg: &RunConfig) -> CliResult<qflow_core::QGridFunction> {
    let dom = Arc::new(GridDomain::new(cfg.m, cfg.resolution).map_err(|e| ConfigError::new("resolution", e.to_string()))?);
    let spec = InitialSpec::new(cfg.preset, cfg.params.clone());
    sample_initial(&spec, dom, cfg.q).map_err(|e| ConfigError::new("params", e.to_string()).into())
}

fn schedule(cfg: &RunConfig) -> CliResult<StepSchedule> {
    let s = match cfg.mode {
        ScheduleMode::Geometric => StepSchedule::geometric(cfg.h, cfg.steps),
        ScheduleMode::Uniform => StepSchedule::uniform(cfg.t_final, cfg.steps),
    };
    s.map_err(|e| ConfigError::new("steps", e.to_string()).into())
}

fn inject_negative_control(cfg: &RunConfig, traj: &mut FlowTrajectory) -> CliResult<()> {
    if cfg.negative_control != NegativeControl::EnergyIncrease || traj.steps_taken() == 0 {
        return Ok(());
    }
    let k = traj.schedule.steps.div_ceil(2).min(traj.steps_taken());
    let snap = &mut traj.snapshots[k];
    let interior: Vec<usize> = snap.domain().interior_nodes().collect();
    for x in interior {
        let v = snap.value(x);
        let scaled = v.coords().iter().map(|c| 1.5 * c).collect();
        let value = QPoint::from_flat(v.n(), scaled)?;
        snap.set_value(x, value)?;
    }
    Ok(())
}

fn flow(cfg: &RunConfig) -> CliResult<FlowTrajectory> {
    let f0 = build_initial(cfg)?;
    let mut traj = run_flow(&f0, &schedule(cfg)?, &cfg.solver)?;
    inject_negative_control(cfg, &mut traj)?;
    Ok(traj)
}

fn flow_checks(cfg: &RunConfig, traj: &FlowTrajectory) -> CliResult<Vec<CheckOutcome>> {
    let check_cfg = CheckConfig {
        holder_samples: cfg.holder_samples,
        seed: cfg.seed,
    };
    Ok(checks::run_checks(traj, &check_cfg)?
        .into_iter()
        .filter(|c| cfg.check_enabled(&c.name))
        .collect())
}

fn write_energy_csv(path: &Path, traj: &FlowTrajectory) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "tau",
        "energy_before",
        "energy_after",
        "penalty",
        "estimate_margin",
        "eta_residual",
        "max_norm",
        "outer_iterations",
    ])?;
    let energies = traj.energies();
    for k in 1..traj.snapshots.len() {
        let (prev, curr) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
        let tau = traj.schedule.tau(k)?;
        let penalty = l2_distance_sq(prev, curr)?;
        let margin = tau * (energies[k - 1] - energies[k]) - penalty;
        let residual = if curr.n() == 1 {
            sci(weak_residual_eta(prev, curr, tau)?)
        } else {
            String::new()
        };
        w.write_record([
            k.to_string(),
            sci(tau),
            sci(energies[k - 1]),
            sci(energies[k]),
            sci(penalty),
            sci(margin),
            residual,
            sci(curr.max_norm()),
            traj.reports[k - 1].outer_iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_run(cfg: &RunConfig) -> CliResult<Outcome> {
    let traj = flow(cfg)?;
    let out = &cfg.out;
    let snaps = out.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for (k, f) in traj.snapshots.iter().enumerate() {
        write_snapshot_csv(f, BufWriter::new(File::create(snaps.join(format!("{k}.csv")))?))?;
    }
    write_energy_csv(&out.join("energy.csv"), &traj)?;
    write_json(&out.join("domain.json"), &DomainManifest::of(traj.initial().domain()))?;

    let checks = flow_checks(cfg, &traj)?;
    let mut outcome = Outcome::from_checks(&checks);
    if !traj.complete {
        outcome.passed = false;
        outcome.failures.push(format!(
            "solver did not converge; trajectory truncated after {} of {} steps",
            traj.steps_taken(),
            traj.schedule.steps
        ));
    }
    let manifest = json!({
        "config": config_json(cfg),
        "schedule": traj.schedule,
        "preset": cfg.preset.to_string(),
        "resolution": cfg.resolution,
        "tolerances": cfg.solver,
        "wall_time": traj.schedule.end_time(),
        "effective_time": traj.schedule.effective_time(),
        "steps_taken": traj.steps_taken(),
        "complete": traj.complete,
        "initial_energy": dirichlet_energy(traj.initial()),
        "final_energy": dirichlet_energy(&traj.snapshots[traj.steps_taken()]),
        "checks": checks,
        "passed": outcome.passed,
    });
    write_json(&out.join("run.json"), &manifest)?;
    Ok(outcome)
}

/// Names of the sampled property suites `verify` runs besides the flow checks.
pub const SUITE_NAMES: [&str; 9] = [
    "metric_axioms",
    "sorted_matching",
    "assignment_vs_exhaustive",
    "xi_isometry",
    "rho_projection",
    "translation_mean",
    "energy_expansion",
    "brute_force_equivalence",
    "scalar_chain_equivalence",
];

pub fn cmd_verify(cfg: &RunConfig, filter: &[String]) -> CliResult<Outcome> {
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| f == name);
    let seed = cfg.seed;
    let mut results = Vec::new();
    for name in SUITE_NAMES.iter().copied().filter(|n| wanted(n)) {
        let r = match name {
            "metric_axioms" => suites::metric_axioms(200, seed)?,
            "sorted_matching" => suites::sorted_matching(200, seed.wrapping_add(1))?,
            "assignment_vs_exhaustive" => suites::assignment_vs_exhaustive(200, seed.wrapping_add(2))?,
            "xi_isometry" => suites::xi_isometry(200, seed.wrapping_add(3))?,
            "rho_projection" => suites::rho_projection(200, seed.wrapping_add(4))?,
            "translation_mean" => suites::translation_mean(200, seed.wrapping_add(5))?,
            "energy_expansion" => suites::energy_expansion(50, seed.wrapping_add(6))?,
            "brute_force_equivalence" => suites::brute_force_equivalence(20, seed.wrapping_add(7))?,
            _ => {
                let res = if cfg.m == 1 { cfg.resolution } else { 101 };
                suites::scalar_chain_equivalence(res, cfg.steps, cfg.t_final)?
            }
        };
        results.push(r);
    }
    let traj = flow(cfg)?;
    results.extend(
        flow_checks(cfg, &traj)?
            .into_iter()
            .filter(|c| wanted(&c.name)),
    );
    if wanted("max_principle") && traj.schedule.mode == ScheduleMode::Uniform {
        let symmetric = cfg.preset.is_symmetric() && cfg.q == 2 && cfg.m >= 1;
        let ok = max_principle_check(&traj.snapshots, symmetric);
        results.push(CheckOutcome {
            name: "max_principle".into(),
            passed: ok,
            margin: if ok { 0.0 } else { -1.0 },
            detail: format!("oracle check on {} snapshots, symmetric = {symmetric}", traj.snapshots.len()),
        });
    }
    let outcome = Outcome::from_checks(&results);
    fs::create_dir_all(&cfg.out)?;
    write_json(
        &cfg.out.join("verify.json"),
        &json!({
            "config": config_json(cfg),
            "checks": results,
            "passed": outcome.passed,
        }),
    )?;
    Ok(outcome)
}

struct Row {
    resolution: usize,
    steps: usize,
    tau: f64,
    l2: Option<f64>,
    linf: Option<f64>,
    order: Option<f64>,
}

/// Fills the temporal order column: each row against the row with the same
/// resolution and the next larger step.
fn fill_orders(rows: &mut [Row]) {
    for i in 0..rows.len() {
        let coarser = rows
            .iter()
            .filter(|r| r.resolution == rows[i].resolution && r.tau > rows[i].tau)
            .min_by(|a, b| a.tau.total_cmp(&b.tau));
        rows[i].order = match (coarser, rows[i].l2) {
            (Some(c), Some(e)) => c.l2.map(|ec| observed_order(ec, e, c.tau / rows[i].tau)),
            _ => None,
        };
    }
}

fn write_table(path: &Path, rows: &[Row]) -> CliResult<()> {
    let opt = |v: Option<f64>, failed: bool| match v {
        Some(x) => sci(x),
        None if failed => "failed".into(),
        None => String::new(),
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["resolution", "tau", "N", "l2_error_vs_exact", "linf_error_vs_exact", "observed_order"])?;
    for r in rows {
        let failed = r.l2.is_none();
        w.write_record([
            r.resolution.to_string(),
            sci(r.tau),
            r.steps.to_string(),
            opt(r.l2, failed),
            opt(r.linf, failed),
            opt(r.order, false),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| a.resolution.cmp(&b.resolution).then(a.steps.cmp(&b.steps)));
}

/// Spatial orders from the three finest-in-space cells at the smallest step.
fn spatial_orders(rows: &[Row]) -> Vec<(usize, f64)> {
    let Some(tau) = rows.iter().map(|r| r.tau).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    let ladder: Vec<&Row> = rows.iter().filter(|r| r.tau == tau && r.l2.is_some()).collect();
    ladder
        .windows(3)
        .map(|w| {
            let ratio = ((w[2].resolution - 1) as f64 / (w[1].resolution - 1) as f64).max(1.0);
            (
                w[2].resolution,
                richardson_order(w[0].l2.unwrap(), w[1].l2.unwrap(), w[2].l2.unwrap(), ratio),
            )
        })
        .collect()
}

fn write_orders(path: &Path, rows: &[Row]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["axis", "resolution", "tau", "order"])?;
    for r in rows.iter().filter(|r| r.order.is_some()) {
        w.write_record(["tau".into(), r.resolution.to_string(), sci(r.tau), sci(r.order.unwrap())])?;
    }
    let tau = rows.iter().map(|r| r.tau).min_by(f64::total_cmp).unwrap_or(0.0);
    for (res, order) in spatial_orders(rows) {
        w.write_record(["delta".into(), res.to_string(), sci(tau), sci(order)])?;
    }
    w.flush()?;
    Ok(())
}

fn cells(cfg: &RunConfig) -> CliResult<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for &res in &cfg.sweep_resolutions {
        for &h in &cfg.sweep_h {
            out.push((res, sweep_steps(cfg.t_final, h)?));
        }
    }
    Ok(out)
}

fn pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError::new("jobs", e.to_string()).into())
}

pub fn cmd_sweep(cfg: &RunConfig, jobs: Option<usize>) -> CliResult<Outcome> {
    let cells = cells(cfg)?;
    let results: Vec<(usize, usize, Result<HeatCell, String>)> = pool(jobs)?.install(|| {
        cells
            .par_iter()
            .map(|&(res, n)| {
                let r = heat_limit_cell(res, n, cfg.t_final, &cfg.solver).map_err(|e| e.to_string());
                (res, n, r)
            })
            .collect()
    });
    let cell_root = cfg.out.join("cells");
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (res, n, r) in results {
        let dir = cell_root.join(format!("r{res}_n{n}"));
        fs::create_dir_all(&dir)?;
        match &r {
            Ok(cell) => write_json(&dir.join("cell.json"), cell)?,
            Err(e) => {
                write_json(&dir.join("cell.json"), &json!({ "resolution": res, "steps": n, "error": e }))?;
                failures.push(format!("cell resolution {res}, N {n}: {e}"));
            }
        }
        rows.push(Row {
            resolution: res,
            steps: n,
            tau: cfg.t_final / n as f64,
            l2: r.as_ref().ok().map(|c| c.l2_error),
            linf: r.as_ref().ok().map(|c| c.linf_error),
            order: None,
        });
    }
    sort_rows(&mut rows);
    fill_orders(&mut rows);
    write_table(&cfg.out.join("sweep.csv"), &rows)?;
    write_orders(&cfg.out.join("sweep_orders.csv"), &rows)?;
    Ok(Outcome {
        passed: failures.is_empty(),
        failures,
    })
}

/// Implicit-Euler chain on the first eigenvector against the exact decay,
/// over the sweep axes, without running the flow solver.
pub fn cmd_oracle(cfg: &RunConfig) -> CliResult<Outcome> {
    let spec = EigenHeatSpec::new(1, 1.0)?;
    let mut rows = Vec::new();
    for (res, n) in cells(cfg)? {
        let dom = GridDomain::new(1, res)?;
        let tau = cfg.t_final / n as f64;
        let u = implicit_euler_chain(&dom, &spec.sample(&dom)?, &vec![tau; n])?;
        let exact = heat_exact_eigen(&spec, cfg.t_final, &dom)?;
        let w = dom.node_weight();
        let l2 = u.iter().zip(&exact).map(|(a, b)| (a - b).powi(2) * w).sum::<f64>().sqrt();
        let linf = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(Row {
            resolution: res,
            steps: n,
            tau,
            l2: Some(l2),
            linf: Some(linf),
            order: None,
        });
    }
    sort_rows(&mut rows);
    fill_orders(&mut rows);
    fs::create_dir_all(&cfg.out)?;
    write_table(&cfg.out.join("oracle.csv"), &rows)?;
    Ok(Outcome {
        passed: true,
        failures: Vec::new(),
    })
}
