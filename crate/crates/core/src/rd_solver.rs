//! `u_t − u_xx = f(u)` on `(0, 1)` with `u(0) = u(1) = 0`.
//!
//! Method of lines on a (possibly graded) mesh with the three-point
//! Laplacian, Lie splitting: each step first moves every node by the exact
//! kinetic flow for `dt`, then takes a θ-method diffusion step solved with
//! the Thomas algorithm. For `θ = 1`, or `dt` below the monotonicity bound,
//! the diffusion step is an M-matrix update, so the discrete solution stays
//! between the spatially constant kinetic flows started at its extremes;
//! each step is checked against that and `dt` is halved when it fails.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::flow;
use crate::source::PiecewiseSource;
use crate::toy_pde::{lp_norm_block, BlockFunction, Verdict};

/// Nodal values above this are treated as blow-up.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Halvings allowed before a step is declared unstable.
const MAX_HALVINGS: u32 = 40;

/// Relative slack of the per-step comparison guard.
const GUARD_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grading", rename_all = "snake_case")]
pub enum Grading {
    Uniform {
        nodes: usize,
    },
    /// Cells grow by `1/ratio` away from `x = 0`, starting at
    /// `finest_cell`, until they reach `max_cell`.
    Geometric {
        ratio: f64,
        finest_cell: f64,
        max_cell: f64,
    },
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Geometric {
            ratio: 0.7,
            finest_cell: 2f64.powi(-36),
            max_cell: 1.0 / 400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grading", into = "Grading")]
pub struct Mesh {
    grading: Grading,
    nodes: Vec<f64>,
}

impl TryFrom<Grading> for Mesh {
    type Error = Error;
    fn try_from(g: Grading) -> Result<Self> {
        Mesh::new(g)
    }
}

impl From<Mesh> for Grading {
    fn from(m: Mesh) -> Self {
        m.grading
    }
}

impl Mesh {
    pub fn new(grading: Grading) -> Result<Self> {
        let nodes = match grading {
            Grading::Uniform { nodes } => {
                if nodes < 5 {
                    return Err(Error::InvalidParameter(format!("{nodes} nodes leave fewer than 3 interior")));
                }
                let h = 1.0 / (nodes - 1) as f64;
                let mut xs: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
                xs[nodes - 1] = 1.0;
                xs
            }
            Grading::Geometric {
                ratio,
                finest_cell,
                max_cell,
            } => {
                if !(ratio > 0.0 && ratio < 1.0) || !(finest_cell > 0.0) || !(max_cell >= finest_cell && max_cell <= 0.25) {
                    return Err(Error::InvalidParameter(format!("bad geometric grading {grading:?}")));
                }
                let mut xs = vec![0.0];
                let mut h = finest_cell;
                let mut x = 0.0;
                let mut last = h;
                while h < max_cell {
                    x += h;
                    xs.push(x);
                    last = h;
                    h /= ratio;
                }
                let rest = 1.0 - x;
                let mut k = (rest / max_cell).ceil().max(1.0);
                if rest / k < last && k > 1.0 {
                    k -= 1.0;
                }
                let u = rest / k;
                for i in 1..k as usize {
                    xs.push(x + i as f64 * u);
                }
                xs.push(1.0);
                xs
            }
        };
        Ok(Mesh { grading, nodes })
    }

    pub fn uniform(nodes: usize) -> Result<Self> {
        Mesh::new(Grading::Uniform { nodes })
    }

    pub fn geometric(ratio: f64, finest_cell: f64, max_cell: f64) -> Result<Self> {
        Mesh::new(Grading::Geometric {
            ratio,
            finest_cell,
            max_cell,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn finest_cell(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// `(lower, upper)` couplings of interior node `i` in the three-point
    /// Laplacian `2/(h₋+h₊) [(u₊−u)/h₊ − (u−u₋)/h₋]`.
    fn couplings(&self, i: usize) -> (f64, f64) {
        let hm = self.nodes[i] - self.nodes[i - 1];
        let hp = self.nodes[i + 1] - self.nodes[i];
        let s = 2.0 / (hm + hp);
        (s / hm, s / hp)
    }

    /// Largest `dt` for which the explicit part of the θ-step has
    /// nonnegative coefficients.
    pub fn monotone_dt_bound(&self, theta: f64) -> f64 {
        if theta >= 1.0 {
            return f64::INFINITY;
        }
        let diag = (1..self.len() - 1)
            .map(|i| {
                let (l, u) = self.couplings(i);
                l + u
            })
            .fold(0.0, f64::max);
        1.0 / ((1.0 - theta) * diag)
    }

    /// Cell averages of `ψ` over the dual cells around each interior node.
    pub fn project(&self, psi: &BlockFunction) -> Vec<f64> {
        let x = &self.nodes;
        let n = x.len();
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let a = 0.5 * (x[i - 1] + x[i]);
            let b = 0.5 * (x[i] + x[i + 1]);
            u[i] = psi.integral(a, b) / (b - a);
        }
        u
    }

    /// `(∫ |u|^q)^(1/q)` by the trapezoid rule.
    pub fn lq_norm(&self, u: &[f64], q: f64) -> f64 {
        self.nodes
            .windows(2)
            .zip(u.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0].abs().powf(q) + v[1].abs().powf(q)))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// One θ-method step for `u_t = u_xx` with zero boundary values.
pub fn diffusion_step(mesh: &Mesh, u: &[f64], dt: f64, theta: f64) -> Vec<f64> {
    let n = mesh.len();
    let m = n - 2;
    let mut rhs = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    let mut diag = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    let ex = (1.0 - theta) * dt;
    let im = theta * dt;
    for i in 1..n - 1 {
        let (l, r) = mesh.couplings(i);
        let um = if i == 1 { 0.0 } else { u[i - 1] };
        let up = if i == n - 2 { 0.0 } else { u[i + 1] };
        rhs.push(u[i] + ex * (l * um - (l + r) * u[i] + r * up));
        lower.push(-im * l);
        diag.push(1.0 + im * (l + r));
        upper.push(-im * r);
    }
    let x = thomas(&lower, &diag, &upper, rhs);
    let mut out = vec![0.0; n];
    out[1..n - 1].copy_from_slice(&x);
    out
}

/// Tridiagonal solve; `lower[0]` and `upper[m-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], mut rhs: Vec<f64>) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = diag[0];
    c[0] = upper[0] / d;
    rhs[0] /= d;
    for i in 1..m {
        d = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / d;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / d;
    }
    for i in (0..m - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    rhs
}

/// Blockwise `min(ψ, m)` for finite `m`.
pub fn truncate(psi: &BlockFunction, m: f64) -> Result<BlockFunction> {
    psi.capped(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// 1/2 is Crank–Nicolson, 1 is backward Euler.
    pub theta: f64,
    /// Cap applied to the initial data.
    pub truncation: Option<f64>,
    pub horizon: f64,
    /// Exponents `q` of the tracked `L^q` norms.
    pub norms: Vec<f64>,
    /// Record every this many accepted steps (the last step is always
    /// recorded).
    pub record_every: usize,
    /// Keep nodal values at every recorded time.
    pub store_states: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            theta: 0.5,
            truncation: None,
            horizon: 0.1,
            norms: vec![2.0],
            record_every: 1,
            store_states: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {}", self.dt));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return bad(format!("theta = {} outside [1/2, 1]", self.theta));
        }
        if let Some(m) = self.truncation {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("truncation level {m}"));
            }
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {}", self.horizon));
        }
        if self.norms.iter().any(|&q| !(q >= 1.0)) {
            return bad("norm exponents must be at least 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RDState {
    pub time: f64,
    /// Values at every mesh node; the two ends are always 0.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    /// `L^q` norms in the order of [`SolverConfig::norms`].
    pub lq: Vec<f64>,
    pub sup: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub time: f64,
    /// Largest nodal value at the last accepted step.
    pub sup: f64,
    /// A node's kinetic flow blew up inside the step (certified), as
    /// opposed to tripping the overflow guard.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SolverConfig,
    pub mesh: Mesh,
    /// `(q, ‖ψ‖_q)` from the block function itself; `None` when the series
    /// is not known to converge.
    pub initial_exact_norms: Vec<(f64, Option<f64>)>,
    /// The same norms of the projected nodal data.
    pub initial_mesh_norms: Vec<(f64, f64)>,
    pub trace: Vec<NormRow>,
    pub states: Vec<RDState>,
    pub final_state: RDState,
    pub blowup: Option<BlowupReport>,
    pub steps: usize,
    pub halvings: u32,
    pub final_dt: f64,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.blowup.is_none()
    }

    /// The `L^q` column of the trace.
    pub fn norm_column(&self, q: f64) -> Option<Vec<f64>> {
        let k = self.config.norms.iter().position(|&x| x == q)?;
        Some(self.trace.iter().map(|r| r.lq[k]).collect())
    }
}

enum StepOutcome {
    Accepted(Vec<f64>),
    Rejected,
    BlownUp(f64),
}

fn extremes(u: &[f64]) -> (f64, f64) {
    u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn flow_value(f: &PiecewiseSource, z: f64, t: f64) -> Result<Option<f64>> {
    Ok(flow(f, z, t)?.value())
}

fn try_step(f: &PiecewiseSource, mesh: &Mesh, u: &[f64], dt: f64, theta: f64) -> Result<StepOutcome> {
    let (clo, chi) = f.coverage();
    let n = u.len();
    let mut w = u.to_vec();
    for i in 1..n - 1 {
        let mut z = u[i];
        // round-off just outside the covered range
        if z < clo && clo - z <= GUARD_RTOL * clo.abs().max(1.0) {
            z = clo;
        }
        if z >= chi {
            return Ok(StepOutcome::BlownUp(0.0));
        }
        let out = flow(f, z, dt)?;
        match out.blowup_time() {
            Some(time) => return Ok(StepOutcome::BlownUp(time)),
            None => w[i] = out.value().expect("alive"),
        }
    }
    let next = diffusion_step(mesh, &w, dt, theta);
    // constant-in-space flows from the extremes bound the step
    let (lo, hi) = extremes(u);
    let upper = match flow_value(f, hi.max(clo), dt)? {
        Some(v) => v.max(0.0),
        None => f64::INFINITY,
    };
    let lower = flow_value(f, lo.max(clo), dt)?.map_or(0.0, |v| v.min(0.0)).min(lo.min(0.0));
    let (nlo, nhi) = extremes(&next);
    let slack = GUARD_RTOL * upper.abs().max(lower.abs()).max(1.0);
    if nhi > upper + slack || nlo < lower - slack || !nhi.is_finite() {
        return Ok(StepOutcome::Rejected);
    }
    Ok(StepOutcome::Accepted(next))
}

fn norm_row(mesh: &Mesh, t: f64, u: &[f64], norms: &[f64]) -> NormRow {
    let (min, sup) = extremes(u);
    NormRow {
        t,
        lq: norms.iter().map(|&q| mesh.lq_norm(u, q)).collect(),
        sup,
        min,
    }
}

/// Runs the scheme from the (truncated) block data to `cfg.horizon`.
pub fn solve(f: &PiecewiseSource, psi0: &BlockFunction, cfg: &SolverConfig, mesh: &Mesh) -> Result<RunReport> {
    cfg.validate()?;
    let psi = match cfg.truncation {
        Some(m) => truncate(psi0, m)?,
        None => psi0.clone(),
    };
    if !psi.sup().is_finite() {
        return Err(Error::InvalidParameter("initial data are unbounded: set a truncation level".into()));
    }
    let initial_exact_norms = cfg
        .norms
        .iter()
        .map(|&q| {
            let v = lp_norm_block(&psi, q, 24)?;
            Ok((
                q,
                match v.verdict {
                    Verdict::Convergent { sum, .. } => Some(sum.powf(1.0 / q)),
                    _ => None,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let u = mesh.project(&psi);
    let initial_mesh_norms = cfg.norms.iter().map(|&q| (q, mesh.lq_norm(&u, q))).collect();
    march(f, mesh, cfg, u, initial_exact_norms, initial_mesh_norms)
}

/// Runs the scheme from nodal values instead of block data.
pub fn solve_from_values(f: &PiecewiseSource, mut u0: Vec<f64>, cfg: &SolverConfig, mesh: &Mesh) -> Result<RunReport> {
    cfg.validate()?;
    if u0.len() != mesh.len() {
        return Err(Error::InvalidParameter("initial values do not match the mesh".into()));
    }
    let n = u0.len();
    u0[0] = 0.0;
    u0[n - 1] = 0.0;
    let initial_mesh_norms = cfg.norms.iter().map(|&q| (q, mesh.lq_norm(&u0, q))).collect();
    march(f, mesh, cfg, u0, Vec::new(), initial_mesh_norms)
}

fn march(
    f: &PiecewiseSource,
    mesh: &Mesh,
    cfg: &SolverConfig,
    mut u: Vec<f64>,
    initial_exact_norms: Vec<(f64, Option<f64>)>,
    initial_mesh_norms: Vec<(f64, f64)>,
) -> Result<RunReport> {
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut trace = vec![norm_row(mesh, 0.0, &u, &cfg.norms)];
    let mut states = Vec::new();
    if cfg.store_states {
        states.push(RDState {
            time: 0.0,
            values: u.clone(),
        });
    }
    let mut steps = 0;
    let mut halvings = 0;
    let mut blowup = None;
    while t < cfg.horizon {
        let h = dt.min(cfg.horizon - t);
        let last = t + h >= cfg.horizon;
        match try_step(f, mesh, &u, h, cfg.theta)? {
            StepOutcome::Accepted(next) => {
                u = next;
                t = if last { cfg.horizon } else { t + h };
                steps += 1;
                let (_, sup) = extremes(&u);
                let over = sup > OVERFLOW_GUARD;
                if steps % cfg.record_every == 0 || last || over {
                    trace.push(norm_row(mesh, t, &u, &cfg.norms));
                    if cfg.store_states {
                        states.push(RDState {
                            time: t,
                            values: u.clone(),
                        });
                    }
                }
                if over {
                    blowup = Some(BlowupReport {
                        time: t,
                        sup,
                        certified: false,
                    });
                    break;
                }
            }
            StepOutcome::Rejected => {
                halvings += 1;
                dt *= 0.5;
                if halvings > MAX_HALVINGS {
                    return Err(Error::Unstable {
                        time: t,
                        suggested_dt: mesh.monotone_dt_bound(cfg.theta).min(cfg.dt * 0.5),
                    });
                }
            }
            StepOutcome::BlownUp(tau) => {
                blowup = Some(BlowupReport {
                    time: t + tau,
                    sup: extremes(&u).1,
                    certified: true,
                });
                break;
            }
        }
    }
    Ok(RunReport {
        config: cfg.clone(),
        mesh: mesh.clone(),
        initial_exact_norms,
        initial_mesh_norms,
        trace,
        states,
        final_state: RDState { time: t, values: u },
        blowup,
        steps,
        halvings,
        final_dt: dt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    /// Largest `(sup u(t) − U(t; sup u(0)))`, relative to `max(1, U)`.
    pub max_violation: f64,
    pub at_time: f64,
    pub rows_checked: usize,
}

/// Checks `sup_x u(x, t) ≤ U(t; sup_x u(x, 0))` along the recorded trace.
pub fn supersolution_check(run: &RunReport, f: &PiecewiseSource) -> Result<SupersolutionReport> {
    let sup0 = run.trace[0].sup.max(f.coverage().0);
    let mut report = SupersolutionReport {
        max_violation: 0.0,
        at_time: 0.0,
        rows_checked: 0,
    };
    for row in &run.trace {
        let Some(bound) = flow_value(f, sup0, row.t)? else {
            continue;
        };
        let v = (row.sup - bound.max(0.0)) / bound.abs().max(1.0);
        if v > report.max_violation {
            report.max_violation = v;
            report.at_time = row.t;
        }
        report.rows_checked += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub level: f64,
    pub blown_up: bool,
    /// `sup_{t ∈ [t0, T]} ‖u(t)‖_2`.
    pub sup_l2: f64,
    pub final_l2: f64,
    pub supersolution_violation: f64,
    pub run: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub t0: f64,
    pub levels: Vec<LadderLevel>,
    /// Largest `u_{M_k} − u_{M_{k+1}}` over nodes and shared recorded times.
    pub max_monotonicity_violation: f64,
    pub monotone_in_level: bool,
    pub increments: Vec<f64>,
    pub increments_decreasing: bool,
    pub any_blowup: bool,
}

/// Solves once per truncation level (levels run on up to `jobs` threads)
/// and compares the runs.
pub fn truncation_ladder(
    f: &PiecewiseSource,
    psi: &BlockFunction,
    levels: &[f64],
    cfg: &SolverConfig,
    mesh: &Mesh,
    t0: f64,
    jobs: usize,
) -> Result<LadderReport> {
    if levels.is_empty() || levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("levels must be nonempty and increasing".into()));
    }
    let mut cfg = cfg.clone();
    if !cfg.norms.contains(&2.0) {
        cfg.norms.push(2.0);
    }
    cfg.store_states = true;
    let run_level = |m: f64| -> Result<RunReport> {
        let level_cfg = SolverConfig {
            truncation: Some(m),
            ..cfg.clone()
        };
        solve(f, psi, &level_cfg, mesh)
    };
    let jobs = jobs.max(1);
    let mut runs: Vec<Option<Result<RunReport>>> = vec![None; levels.len()];
    std::thread::scope(|scope| {
        for (chunk_levels, chunk_runs) in levels.chunks(levels.len().div_ceil(jobs)).zip(runs.chunks_mut(levels.len().div_ceil(jobs))) {
            let run_level = &run_level;
            scope.spawn(move || {
                for (m, slot) in chunk_levels.iter().zip(chunk_runs) {
                    *slot = Some(run_level(*m));
                }
            });
        }
    });
    let mut out = Vec::with_capacity(levels.len());
    for (&m, run) in levels.iter().zip(runs) {
        let run = run.expect("every level ran")?;
        let l2 = run.norm_column(2.0).expect("L2 tracked");
        let sup_l2 = run
            .trace
            .iter()
            .zip(&l2)
            .filter(|(r, _)| r.t >= t0)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max);
        let supersolution_violation = if run.completed() {
            supersolution_check(&run, f)?.max_violation
        } else {
            f64::INFINITY
        };
        out.push(LadderLevel {
            level: m,
            blown_up: !run.completed(),
            sup_l2,
            final_l2: *l2.last().expect("nonempty trace"),
            supersolution_violation,
            run,
        });
    }
    let mut worst: f64 = 0.0;
    for pair in out.windows(2) {
        let (a, b) = (&pair[0].run, &pair[1].run);
        for sa in &a.states {
            if let Some(sb) = b.states.iter().find(|s| (s.time - sa.time).abs() <= 1e-12) {
                for (x, y) in sa.values.iter().zip(&sb.values) {
                    worst = worst.max((x - y) / y.abs().max(1.0));
                }
            }
        }
    }
    let increments: Vec<f64> = out.windows(2).map(|w| w[1].sup_l2 - w[0].sup_l2).collect();
    Ok(LadderReport {
        t0,
        increments_decreasing: increments.windows(2).all(|w| w[1] < w[0]),
        increments,
        monotone_in_level: worst <= GUARD_RTOL,
        max_monotonicity_violation: worst,
        any_blowup: out.iter().any(|l| l.blown_up),
        levels: out,
    })
}

/// `e^(−π² t) sin(π x)`, the decaying heat mode, sampled on the mesh.
pub fn heat_mode(mesh: &Mesh, t: f64) -> Vec<f64> {
    let n = mesh.len();
    let mut u: Vec<f64> = mesh.nodes().iter().map(|&x| (-PI * PI * t).exp() * (PI * x).sin()).collect();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::registered;

    fn run_heat(nodes: usize, dt: f64, theta: f64) -> (Mesh, RunReport) {
        let mesh = Mesh::uniform(nodes).unwrap();
        let cfg = SolverConfig {
            dt,
            theta,
            horizon: 0.1,
            ..SolverConfig::default()
        };
        let run = solve_from_values(&PiecewiseSource::constant(0.0), heat_mode(&mesh, 0.0), &cfg, &mesh).unwrap();
        (mesh, run)
    }

    #[test]
    fn heat_mode_decays() {
        let (_, run) = run_heat(401, 1e-4, 0.5);
        let sup = run.final_state.values.iter().cloned().fold(0.0, f64::max);
        let exact = (-PI * PI * 0.1).exp();
        assert!((sup - exact).abs() / exact < 1e-3, "{sup} vs {exact}");
        assert_eq!(run.halvings, 0);
    }

    #[test]
    fn boundary_values_stay_zero() {
        let mesh = Mesh::uniform(21).unwrap();
        let psi = BlockFunction::constant(1.0, 1.0).unwrap();
        let cfg = SolverConfig {
            dt: 1e-3,
            theta: 1.0,
            horizon: 0.05,
            store_states: true,
            ..SolverConfig::default()
        };
        let run = solve(&registered("one").unwrap(), &psi, &cfg, &mesh).unwrap();
        for s in &run.states {
            assert_eq!(s.values[0], 0.0);
            assert_eq!(*s.values.last().unwrap(), 0.0);
            assert!(s.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn geometric_mesh_shape() {
        let mesh = Mesh::new(Grading::default()).unwrap();
        let x = mesh.nodes();
        assert_eq!(x[0], 0.0);
        assert_eq!(*x.last().unwrap(), 1.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(mesh.finest_cell() <= 2f64.powi(-36));
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(h.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
        let json = serde_json::to_string(&mesh).unwrap();
        let back: Mesh = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(Mesh::uniform(4).is_err());
        assert!(Mesh::geometric(1.2, 1e-3, 1e-2).is_err());
    }

    #[test]
    fn projection_preserves_mass_on_resolved_blocks() {
        let mesh = Mesh::new(Grading::default()).unwrap();
        let psi = truncate(&BlockFunction::example_d(4).unwrap(), 16.0).unwrap();
        let u = mesh.project(&psi);
        let x = mesh.nodes();
        let mass: f64 = (1..x.len() - 1).map(|i| u[i] * 0.5 * (x[i + 1] - x[i - 1])).sum();
        let n = x.len();
        let exact = psi.integral(0.5 * x[1], 0.5 * (x[n - 2] + 1.0));
        assert!((mass - exact).abs() < 1e-14, "{mass} {exact}");
    }

    #[test]
    fn invalid_config_rejected() {
        let mesh = Mesh::uniform(11).unwrap();
        let psi = BlockFunction::constant(1.0, 0.0).unwrap();
        let f = PiecewiseSource::constant(0.0);
        for cfg in [
            SolverConfig { dt: 0.0, ..SolverConfig::default() },
            SolverConfig { theta: 0.3, ..SolverConfig::default() },
            SolverConfig { truncation: Some(-1.0), ..SolverConfig::default() },
        ] {
            assert!(solve(&f, &psi, &cfg, &mesh).is_err());
        }
        assert!(truncate(&psi, f64::INFINITY).is_err());
        assert!(solve(&f, &BlockFunction::example_d(4).unwrap(), &SolverConfig::default(), &mesh).is_err());
    }

    #[test]
    fn quadratic_source_blows_up() {
        let mesh = Mesh::uniform(21).unwrap();
        let psi = BlockFunction::constant(1.0, 50.0).unwrap();
        let cfg = SolverConfig {
            dt: 1e-3,
            theta: 1.0,
            horizon: 1.0,
            ..SolverConfig::default()
        };
        let run = solve(&registered("s_squared").unwrap(), &psi, &cfg, &mesh).unwrap();
        let b = run.blowup.expect("blow-up report");
        assert!(b.time < 0.1);
    }
}
