//! Direct access to single operations.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use blowup_lab::conditions::{growth_condition_check, no_blowup_classify};
use blowup_lab::kinetics::{blowup_time, BlowupVerdict};
use blowup_lab::rd_solver::{solve, supersolution_check, Grading, Mesh, SolverConfig};
use blowup_lab::source::registered;
use blowup_lab::toy_pde::BlockFunction;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{to_value, Checks, Outcome, Table};

pub fn blowup_time_tool(source: &str, z0: f64, tol: f64) -> Result<Outcome> {
    let f = registered(source)?;
    let r = blowup_time(&f, z0, tol)?;
    println!("T({z0}) for {source}: {}", describe(&r.verdict));
    Ok(Outcome {
        command: "blowup-time".into(),
        params: json!({ "source": source, "z0": z0, "tol": tol }),
        results: to_value(&r),
        tables: Vec::new(),
        checks: Checks::default(),
    })
}

pub fn classify_tool(source: &str) -> Result<Outcome> {
    let f = registered(source)?;
    let r = no_blowup_classify(&f)?;
    let holds = r.is_infinite();
    println!(
        "{source}: T(1) {} — no-blow-up condition {}",
        describe(&r.verdict),
        if holds { "holds" } else { "fails" }
    );
    Ok(Outcome {
        command: "classify".into(),
        params: json!({ "source": source }),
        results: json!({ "no_blowup": holds, "blowup_time": to_value(&r) }),
        tables: Vec::new(),
        checks: Checks::default(),
    })
}

fn describe(v: &BlowupVerdict) -> String {
    match v {
        BlowupVerdict::Finite { time, error } => format!("= {time:.12} (± {error:.1e})"),
        BlowupVerdict::Infinite {
            per_piece_lower_bound, ..
        } => format!("= inf (each further piece adds >= {per_piece_lower_bound:.4})"),
        BlowupVerdict::Inconclusive { lower_bound } => format!(">= {lower_bound:.6} (undecided)"),
    }
}

pub fn growth_check_tool(source: &str, ps: &[f64], c: f64, n_max: u32) -> Result<Outcome> {
    let f = registered(source)?;
    let mut table = Table::new("growth", &["p", "holds", "asymptotic_ok", "ratio"]);
    let mut reports = Vec::new();
    println!("{:>6}  {:>5}  {:>10}  {:>10}  {:>12}", "p", "holds", "asymptotic", "conclusive", "worst ratio");
    for &p in ps {
        let rep = growth_condition_check(&f, p, c, n_max)?;
        let ratio = rep.counterexample.map_or(f64::NAN, |x| x.ratio());
        println!(
            "{:>6}  {:>5}  {:>10}  {:>10}  {:>12}",
            p,
            rep.holds,
            rep.asymptotic_ok,
            rep.conclusive,
            if ratio.is_nan() { "-".to_string() } else { format!("{ratio:.4}") }
        );
        table.push(vec![p, rep.holds as u8 as f64, rep.asymptotic_ok as u8 as f64, ratio]);
        reports.push(rep);
    }
    Ok(Outcome {
        command: "growth-check".into(),
        params: json!({ "source": source, "p": ps, "c": c, "n_max": n_max }),
        results: json!({ "reports": to_value(&reports) }),
        tables: vec![table],
        checks: Checks::default(),
    })
}

/// Solver setup as stored in a config file; flags override its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    pub source: String,
    /// `example-d`, `constant:<value>`, or a path to block-function JSON.
    pub data: String,
    pub config: SolverConfig,
    pub mesh: Grading,
}

impl Default for RunSetup {
    fn default() -> Self {
        RunSetup {
            source: "example_d".into(),
            data: "example-d".into(),
            config: SolverConfig {
                theta: 1.0,
                truncation: Some(16.0),
                ..SolverConfig::default()
            },
            mesh: Grading::default(),
        }
    }
}

impl RunSetup {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn initial_data(data: &str) -> Result<BlockFunction> {
    if data == "example-d" {
        return Ok(BlockFunction::example_d(7)?);
    }
    if let Some(v) = data.strip_prefix("constant:") {
        return Ok(BlockFunction::constant(1.0, v.parse().context("constant value")?)?);
    }
    let text = fs::read_to_string(data).with_context(|| format!("reading initial data {data}"))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn rd_run_tool(setup: &RunSetup) -> Result<Outcome> {
    let f = registered(&setup.source)?;
    let psi = initial_data(&setup.data)?;
    let mesh = Mesh::new(setup.mesh)?;
    let run = solve(&f, &psi, &setup.config, &mesh).with_context(|| {
        if setup.config.theta < 1.0 {
            format!(
                "theta = {} on a mesh with finest cell {:.3e}; theta = 1 needs no step bound",
                setup.config.theta,
                mesh.finest_cell()
            )
        } else {
            "solver failed".to_string()
        }
    })?;
    let mut checks = Checks::default();
    if run.completed() {
        let rep = supersolution_check(&run, &f)?;
        checks.check(
            "kinetic flow dominates",
            rep.max_violation <= 1e-6,
            format!("max violation {:.3e} at t = {}", rep.max_violation, rep.at_time),
        );
    } else if let Some(b) = run.blowup {
        println!("blow-up at t = {} (certified: {})", b.time, b.certified);
    }
    let mut header = vec!["t".to_string()];
    header.extend(setup.config.norms.iter().map(|q| format!("L{q}")));
    header.push("sup".into());
    let mut trace = Table {
        name: "trace".into(),
        header,
        rows: Vec::new(),
    };
    for row in &run.trace {
        let mut r = vec![row.t];
        r.extend(&row.lq);
        r.push(row.sup);
        trace.push(r);
    }
    let last = run.trace.last().expect("nonempty trace");
    println!(
        "{} steps to t = {} on {} nodes, sup = {:.6e}, halvings = {}",
        run.steps,
        last.t,
        mesh.len(),
        last.sup,
        run.halvings
    );
    Ok(Outcome {
        command: "rd-run".into(),
        params: to_value(setup),
        results: json!({
            "completed": run.completed(),
            "blowup": to_value(&run.blowup),
            "steps": run.steps,
            "halvings": run.halvings,
            "final_dt": run.final_dt,
            "mesh_nodes": mesh.len(),
            "initial_exact_norms": to_value(&run.initial_exact_norms),
            "initial_mesh_norms": to_value(&run.initial_mesh_norms),
            "final_state": to_value(&run.final_state),
        }),
        tables: vec![trace],
        checks,
    })
}
