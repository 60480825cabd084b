use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mmfe_core::envs::GameModel;
use mmfe_core::exact::{lemma1_constants, solve_fixed_point, ContractionReport, ExactTraceRow};
use mmfe_core::rl::{rhpg_mmfe, PopulationSimulator, RlTraceRow, TracePhase};
use mmfe_core::{EquilibriumProfile, PopulationDistribution, Status};
use serde_json::json;

use crate::config::{RunConfig, Solver};
use crate::format::{num, opt};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub out_dir: PathBuf,
    pub report: serde_json::Value,
}

/// One row of `trace.csv`, shared by both solvers.
struct TraceLine {
    phase: TracePhase,
    m: usize,
    k: Option<usize>,
    type_index: Option<usize>,
    theta: Vec<f64>,
    q_hat: Option<f64>,
    residual: Option<f64>,
    means: Vec<f64>,
}

impl From<&ExactTraceRow> for TraceLine {
    fn from(r: &ExactTraceRow) -> Self {
        Self {
            phase: TracePhase::Outer,
            m: r.outer_iter,
            k: None,
            type_index: None,
            theta: Vec::new(),
            q_hat: None,
            residual: Some(r.residual),
            means: r.means.clone(),
        }
    }
}

impl From<&RlTraceRow> for TraceLine {
    fn from(r: &RlTraceRow) -> Self {
        Self {
            phase: r.phase,
            m: r.outer_iter,
            k: (r.phase == TracePhase::Inner).then_some(r.inner_iter),
            type_index: Some(r.type_index),
            theta: r.theta.clone(),
            q_hat: r.q_hat,
            residual: r.residual,
            means: r.means.clone(),
        }
    }
}

/// Executes the configured solver and writes all artifacts into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let model = cfg.build_model()?;
    cfg.validate(model.as_ref())?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let started = Instant::now();
    let (profile, lines, contraction) = match cfg.solver {
        Solver::Exact => {
            let (profile, trace) = solve_fixed_point(model.as_ref(), model.uniform_populations(), &cfg.exact)?;
            let contraction = contraction_report(model.as_ref(), &profile, cfg);
            (profile, trace.iter().map(TraceLine::from).collect::<Vec<_>>(), contraction)
        }
        Solver::Rhpg => {
            let sim = PopulationSimulator::new(model.as_ref());
            let (profile, trace) = rhpg_mmfe(&sim, &cfg.learner)?;
            (profile, trace.iter().map(TraceLine::from).collect(), None)
        }
    };
    let wall = started.elapsed().as_secs_f64();

    let hash = cfg.hash();
    write_trace(&out_dir.join("trace.csv"), cfg, &hash, model.as_ref(), &lines)?;
    write_policy(&out_dir.join("policy.csv"), model.as_ref(), &profile)?;
    write_populations(&out_dir.join("populations.csv"), &profile.populations)?;

    let residuals: Vec<f64> = lines
        .iter()
        .filter(|l| l.phase == TracePhase::Outer && l.type_index.unwrap_or(0) == 0)
        .filter_map(|l| l.residual)
        .collect();
    let status = match profile.status {
        Status::Converged => "converged",
        Status::CapExhausted => "cap_exhausted",
    };
    let report = json!({
        "version": VERSION,
        "env": model.name(),
        "solver": cfg.solver,
        "seed": cfg.seed,
        "config_hash": hash,
        "status": status,
        "iterations": profile.iterations,
        "residual": profile.residual,
        "residuals": residuals,
        "means": profile.means(),
        "policy_weights": profile.params.as_ref().map(|ps| ps.iter().map(|p| p.theta.clone()).collect::<Vec<_>>()),
        "contraction": contraction,
        "wall_time_s": wall,
        "threads": rayon::current_num_threads(),
        "config": cfg.echo(),
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    let path = out_dir.join("report.json");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(RunOutcome { status: profile.status, out_dir: out_dir.to_path_buf(), report })
}

/// Contraction diagnostics over point masses, the uniform profile and the solution.
fn contraction_report(model: &dyn GameModel, profile: &EquilibriumProfile, cfg: &RunConfig) -> Option<ContractionReport> {
    let types = model.num_types();
    let states = (0..types).map(|j| model.grid(j).len()).min()?;
    let mut samples: Vec<Vec<PopulationDistribution>> = (0..states)
        .map(|x| (0..types).map(|j| PopulationDistribution::point_mass(model.grid(j), x)).collect())
        .collect::<Result<_, _>>()
        .ok()?;
    samples.push(model.uniform_populations());
    samples.push(profile.populations.clone());
    lemma1_constants(model, &samples, &cfg.exact).ok()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn csv_writer(path: &Path, meta: &[(&str, String)]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let mut file = create(path)?;
    for (key, value) in meta {
        writeln!(file, "# {key}={value}").map_err(|e| CliError::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_trace(
    path: &Path,
    cfg: &RunConfig,
    hash: &str,
    model: &dyn GameModel,
    lines: &[TraceLine],
) -> Result<(), CliError> {
    let meta = [
        ("version", VERSION.to_string()),
        ("seed", cfg.seed.to_string()),
        ("config_hash", hash.to_string()),
        ("env", model.name().to_string()),
        ("solver", serde_json::to_value(cfg.solver).expect("solver serializes").as_str().unwrap_or("").to_string()),
    ];
    let dim = lines.iter().map(|l| l.theta.len()).max().unwrap_or(0);
    let types = model.num_types();
    let mut w = csv_writer(path, &meta)?;
    let mut header: Vec<String> = ["phase", "m", "k", "type"].map(String::from).to_vec();
    header.extend((0..dim).map(|i| format!("theta_{i}")));
    header.extend(["q_hat".to_string(), "joint_w1_residual".to_string()]);
    header.extend((0..types).map(|j| format!("mean_{j}")));
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for l in lines {
        let mut rec = vec![
            match l.phase {
                TracePhase::Inner => "inner".to_string(),
                TracePhase::Outer => "outer".to_string(),
            },
            l.m.to_string(),
            l.k.map(|k| k.to_string()).unwrap_or_default(),
            l.type_index.map(|j| j.to_string()).unwrap_or_default(),
        ];
        rec.extend((0..dim).map(|i| l.theta.get(i).map(|t| num(*t)).unwrap_or_default()));
        rec.push(opt(l.q_hat));
        rec.push(opt(l.residual));
        rec.extend(l.means.iter().map(|m| num(*m)));
        w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
    }
    finish(w, path)
}

fn write_policy(path: &Path, model: &dyn GameModel, profile: &EquilibriumProfile) -> Result<(), CliError> {
    let mut labels: Vec<i64> = Vec::new();
    for j in 0..model.num_types() {
        for a in model.actions(j).actions() {
            if !labels.contains(a) {
                labels.push(*a);
            }
        }
    }
    let mut w = csv_writer(path, &[])?;
    let mut header: Vec<String> = ["type", "state_index", "state"].map(String::from).to_vec();
    header.extend(labels.iter().map(|a| format!("p_{a}")));
    w.write_record(&header).map_err(|e| CliError::csv(path, e))?;
    for (j, pi) in profile.policies.iter().enumerate() {
        let grid = model.grid(j);
        for (x, row) in pi.rows.iter().enumerate() {
            let mut rec = vec![j.to_string(), x.to_string(), num(grid.point(x))];
            rec.extend(labels.iter().map(|a| pi.actions.index_of(*a).map(|i| num(row[i])).unwrap_or_default()));
            w.write_record(&rec).map_err(|e| CliError::csv(path, e))?;
        }
    }
    finish(w, path)
}

fn write_populations(path: &Path, zs: &[PopulationDistribution]) -> Result<(), CliError> {
    let mut w = csv_writer(path, &[])?;
    w.write_record(["type", "state_index", "state", "mass"]).map_err(|e| CliError::csv(path, e))?;
    for (j, z) in zs.iter().enumerate() {
        for (x, m) in z.mass().iter().enumerate() {
            w.write_record([j.to_string(), x.to_string(), num(z.grid().point(x)), num(*m)])
                .map_err(|e| CliError::csv(path, e))?;
        }
    }
    finish(w, path)
}
