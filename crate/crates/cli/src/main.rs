mod output;
mod params;
mod scenarios;
mod tools;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use blowup_lab::rd_solver::Grading;
use blowup_lab::source::DEFAULT_QUAD_TOL;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::Value;

use output::{Format, Outcome};
use params::set;
use tools::RunSetup;

/// Blow-up, no-blow-up and instantaneous blow-up for scalar kinetics and
/// the reaction-diffusion equation.
#[derive(Parser, Debug)]
#[command(name = "blowup-lab", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Directory for reports, tables and manifest.json.
    #[arg(long, global = true, default_value = "blowup-lab-out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "both")]
    format: Format,
    /// Worker threads for ladder levels and t-sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for sampled cross-checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Quadrature tolerance for blow-up times.
    #[arg(long, global = true, default_value_t = DEFAULT_QUAD_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Default)]
struct MeshFlags {
    /// Geometric grading ratio (cell h_k = finest · ratio^-k).
    #[arg(long)]
    mesh_ratio: Option<f64>,
    #[arg(long)]
    finest_cell: Option<f64>,
    #[arg(long)]
    max_cell: Option<f64>,
    /// Use a uniform mesh with this many nodes instead.
    #[arg(long)]
    nodes: Option<usize>,
}

impl MeshFlags {
    fn apply(&self, g: &mut Grading) {
        if let Some(nodes) = self.nodes {
            *g = Grading::Uniform { nodes };
            return;
        }
        let (mut ratio, mut finest, mut max) = match *g {
            Grading::Geometric {
                ratio,
                finest_cell,
                max_cell,
            } => (ratio, finest_cell, max_cell),
            Grading::Uniform { .. } => match Grading::default() {
                Grading::Geometric {
                    ratio,
                    finest_cell,
                    max_cell,
                } => (ratio, finest_cell, max_cell),
                Grading::Uniform { .. } => unreachable!(),
            },
        };
        if self.mesh_ratio.is_none() && self.finest_cell.is_none() && self.max_cell.is_none() {
            return;
        }
        set(&mut ratio, self.mesh_ratio);
        set(&mut finest, self.finest_cell);
        set(&mut max, self.max_cell);
        *g = Grading::Geometric {
            ratio,
            finest_cell: finest,
            max_cell: max,
        };
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uniformly Lipschitz kinetics: norm bound on random block data.
    ExampleA {
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        source: Option<String>,
    },
    /// Measure of the blown-up set as t varies.
    ExampleB {
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        source: Option<String>,
    },
    /// Power-law data under s ln s: norm trace up to blow-up.
    ExampleC {
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Instantaneous blow-up certificates for the collar/plateau source.
    ExampleD {
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        n_probe: Option<usize>,
    },
    /// Growth condition, well-posedness window and truncation ladder.
    ExampleE {
        /// Exponent grid for the growth condition.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        n_max: Option<u32>,
        /// Truncation levels; `phiN` is accepted.
        #[arg(long, value_delimiter = ',', value_parser = scenarios::parse_level)]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        mesh: MeshFlags,
    },
    /// T(z0) = ∫_z0^∞ ds/f(s) for a registered source.
    BlowupTime {
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 1.0)]
        z0: f64,
    },
    /// Whether the no-blow-up condition T(1) = ∞ holds.
    Classify {
        #[arg(long)]
        source: String,
    },
    /// Growth-condition verdicts for a list of exponents.
    GrowthCheck {
        #[arg(long)]
        source: String,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 20)]
        n_max: u32,
    },
    /// One reaction-diffusion run.
    RdRun {
        /// JSON file with source, data, config and mesh.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        source: Option<String>,
        /// `example-d`, `constant:<v>`, or a block-function JSON file.
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        truncation: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        norms: Option<Vec<f64>>,
        #[arg(long)]
        record_every: Option<usize>,
        #[command(flatten)]
        mesh: MeshFlags,
    },
    /// Re-run from a params.json written by an earlier run.
    Replay { record: PathBuf },
}

fn jobs(common: &Common) -> usize {
    common
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::ExampleA { t, p, samples, source } => {
            let mut prm = params::example_a();
            set(&mut prm.t, t.clone());
            set(&mut prm.p, p.clone());
            set(&mut prm.samples, *samples);
            set(&mut prm.source, source.clone());
            prm.seed = c.seed;
            scenarios::example_a(&prm)
        }
        Command::ExampleB { t, n_max, source } => {
            let mut prm = params::example_b();
            set(&mut prm.t, t.clone());
            set(&mut prm.n_max, *n_max);
            set(&mut prm.source, source.clone());
            scenarios::example_b(&prm, jobs(c))
        }
        Command::ExampleC { r, p, t } => {
            let mut prm = params::example_c();
            set(&mut prm.r, *r);
            set(&mut prm.p, *p);
            set(&mut prm.t, t.clone());
            scenarios::example_c(&prm)
        }
        Command::ExampleD { t, n_max, n_probe } => {
            let mut prm = params::example_d();
            set(&mut prm.t, t.clone());
            set(&mut prm.n_max, *n_max);
            set(&mut prm.n_probe, *n_probe);
            scenarios::example_d(&prm)
        }
        Command::ExampleE {
            p,
            c: constant,
            n_max,
            levels,
            dt,
            theta,
            horizon,
            mesh,
        } => {
            let mut prm = params::example_e();
            set(&mut prm.p_grid, p.clone());
            set(&mut prm.c, *constant);
            set(&mut prm.n_max, *n_max);
            set(&mut prm.levels, levels.clone());
            set(&mut prm.dt, *dt);
            set(&mut prm.theta, *theta);
            set(&mut prm.horizon, *horizon);
            mesh.apply(&mut prm.mesh);
            scenarios::example_e(&prm, jobs(c))
        }
        Command::BlowupTime { source, z0 } => tools::blowup_time_tool(source, *z0, c.tol),
        Command::Classify { source } => tools::classify_tool(source),
        Command::GrowthCheck { source, p, c: constant, n_max } => tools::growth_check_tool(source, p, *constant, *n_max),
        Command::RdRun {
            config,
            source,
            data,
            dt,
            theta,
            horizon,
            truncation,
            norms,
            record_every,
            mesh,
        } => {
            let mut setup = match config {
                Some(path) => RunSetup::load(path)?,
                None => RunSetup::default(),
            };
            set(&mut setup.source, source.clone());
            set(&mut setup.data, data.clone());
            set(&mut setup.config.dt, *dt);
            set(&mut setup.config.theta, *theta);
            set(&mut setup.config.horizon, *horizon);
            set(&mut setup.config.truncation, truncation.map(Some));
            set(&mut setup.config.norms, norms.clone());
            set(&mut setup.config.record_every, *record_every);
            mesh.apply(&mut setup.mesh);
            tools::rd_run_tool(&setup)
        }
        Command::Replay { record } => replay(record, jobs(c)),
    }
}

#[derive(Deserialize)]
struct Record {
    command: String,
    defaults_version: u32,
    params: Value,
}

fn replay(path: &PathBuf, jobs: usize) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rec: Record = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if rec.defaults_version != params::defaults_version() {
        log::warn!(
            "record written with defaults v{}, running v{}",
            rec.defaults_version,
            params::defaults_version()
        );
    }
    let p = rec.params;
    let field = |k: &str| p.get(k).cloned().with_context(|| format!("record lacks `{k}`"));
    match rec.command.as_str() {
        "example-a" => scenarios::example_a(&serde_json::from_value(p)?),
        "example-b" => scenarios::example_b(&serde_json::from_value(p)?, jobs),
        "example-c" => scenarios::example_c(&serde_json::from_value(p)?),
        "example-d" => scenarios::example_d(&serde_json::from_value(p)?),
        "example-e" => scenarios::example_e(&serde_json::from_value(p)?, jobs),
        "rd-run" => tools::rd_run_tool(&serde_json::from_value(p)?),
        "blowup-time" => tools::blowup_time_tool(
            &serde_json::from_value::<String>(field("source")?)?,
            serde_json::from_value(field("z0")?)?,
            serde_json::from_value(field("tol")?)?,
        ),
        "classify" => tools::classify_tool(&serde_json::from_value::<String>(field("source")?)?),
        "growth-check" => tools::growth_check_tool(
            &serde_json::from_value::<String>(field("source")?)?,
            &serde_json::from_value::<Vec<f64>>(field("p")?)?,
            serde_json::from_value(field("c")?)?,
            serde_json::from_value(field("n_max")?)?,
        ),
        other => bail!("unknown command `{other}` in record"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BLOWUP_LAB_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let manifest = match output::write_outcome(&outcome, &cli.common.out_dir, cli.common.format) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for c in &outcome.checks.0 {
        println!("[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", manifest.display());
    if outcome.checks.failures().is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
