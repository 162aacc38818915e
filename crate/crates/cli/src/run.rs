//! Executes one configured run and assembles the result document.

use anyhow::{bail, Context, Result};
use log::info;
use mcvqe_core::fci::fd_oracle_options;
use mcvqe_core::fixtures::{fix_a, fix_b, fix_c};
use mcvqe_core::mcvqe::{initial_parameters, McVqeProblem, McVqeSolution};
use mcvqe_core::optimize::IterationRecord;
use mcvqe_core::response::{state_gradient, strategy, DiisOptions, ResponseContext, StateGradient};
use mcvqe_core::validation::{validate_solution, ValidationOptions, ValidationReport};
use mcvqe_core::{ActiveSpaceIntegrals, CsfSpec, Error, GradientRecord, LbfgsOptions, ResponseSettings, SectorSpec};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::output::SCHEMA_VERSION;

const SWEEP_POINTS: [usize; 5] = [2, 4, 6, 8, 10];
const SWEEP_STEPS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

#[derive(Serialize)]
pub struct Document<'a> {
    pub schema_version: u32,
    pub status: &'static str,
    pub mode: &'static str,
    pub config: &'a RunConfig,
    pub system: System,
    pub energy: EnergySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<StateGradientOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_sweep: Option<FdSweep>,
}

#[derive(Serialize)]
pub struct System {
    n_orbitals: usize,
    n_qubits: usize,
    sector: SectorSpec,
    e_ext: f64,
    n_layers: usize,
    n_params: usize,
    references: Vec<CsfSpec>,
    weights: Vec<f64>,
}

#[derive(Serialize)]
pub struct EnergySection {
    energies: Vec<f64>,
    sa_energy: f64,
    theta: Vec<f64>,
    subspace_hamiltonian: Vec<Vec<f64>>,
    eigenvectors: Vec<Vec<f64>>,
    min_gap: Option<f64>,
    near_degenerate: bool,
    optimizer_iterations: usize,
    optimizer_trace: Vec<IterationRecord>,
}

#[derive(Serialize)]
pub struct ResponseOut {
    iterations: usize,
    converged: bool,
    residual_history: Vec<f64>,
    null_space_residual: Option<f64>,
    lambda: Vec<f64>,
}

#[derive(Serialize)]
pub struct DensitySummary {
    unrelaxed_trace: f64,
    response_trace: f64,
    relaxed_trace: f64,
    relaxed_energy: f64,
    unrelaxed_one_body: Vec<Vec<f64>>,
    relaxed_one_body: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct StateGradientOut {
    state: usize,
    energy: f64,
    strategy: &'static str,
    rhs_norm: f64,
    lagrangian: f64,
    response: ResponseOut,
    densities: DensitySummary,
    gradient: GradientRecord,
}

#[derive(Serialize)]
pub struct FdSweep {
    reference_strategy: &'static str,
    error_metric: &'static str,
    rows: Vec<SweepRow>,
}

#[derive(Serialize)]
pub struct SweepRow {
    state: usize,
    n_fd: usize,
    delta_fd: f64,
    converged: bool,
    iterations: Option<usize>,
    max_error: Option<f64>,
    max_orbit_error: Option<f64>,
    residual_history: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrals, sector and, for built-in systems, default (states, layers).
type LoadedInput = (ActiveSpaceIntegrals, SectorSpec, Option<(usize, usize)>);

fn load_input(input: &str) -> Result<LoadedInput> {
    if let Some(name) = input.strip_prefix("builtin:") {
        let fx = match name.to_ascii_uppercase().as_str() {
            "FIX-A" => fix_a(),
            "FIX-B" => fix_b(),
            "FIX-C" => fix_c(),
            other => bail!("unknown built-in system '{other}' (expected FIX-A, FIX-B or FIX-C)"),
        };
        return Ok((fx.ints, fx.sector, Some((fx.n_states, fx.n_layers))));
    }
    let (ints, sector) = ActiveSpaceIntegrals::load_fcidump(input)?;
    Ok((ints, sector, None))
}

fn settings(cfg: &RunConfig) -> ResponseSettings {
    ResponseSettings {
        diis: DiisOptions { tol: cfg.resp_tol, ..Default::default() },
        n_fd: cfg.nfd.unwrap_or(4),
        delta_fd: cfg.dfd.unwrap_or(0.2),
        ..Default::default()
    }
}

fn gradient_out(g: StateGradient, ints: &ActiveSpaceIntegrals) -> StateGradientOut {
    StateGradientOut {
        state: g.state,
        energy: g.energy,
        strategy: g.strategy,
        rhs_norm: max_norm(&g.rhs),
        lagrangian: g.lagrangian,
        densities: DensitySummary {
            unrelaxed_trace: g.unrelaxed.trace(),
            response_trace: g.response_densities.trace(),
            relaxed_trace: g.relaxed.trace(),
            relaxed_energy: g.relaxed.energy(ints),
            unrelaxed_one_body: rows(&g.unrelaxed.opdm),
            relaxed_one_body: rows(&g.relaxed.opdm),
        },
        response: ResponseOut {
            iterations: g.response.iterations,
            converged: g.response.converged,
            residual_history: g.response.residual_history,
            null_space_residual: g.response.null_space_residual,
            lambda: g.response.lambda,
        },
        gradient: g.gradient,
    }
}

fn record_deviation(a: &GradientRecord, b: &GradientRecord) -> f64 {
    let one = (&a.one_body - &b.one_body).amax();
    let two = a.eri.iter().zip(&b.eri).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    one.max(two).max((a.d_e_ext - b.d_e_ext).abs())
}

fn fd_sweep(cfg: &RunConfig, problem: &McVqeProblem, solution: &McVqeSolution) -> Result<FdSweep> {
    let base = settings(cfg);
    let ctx = ResponseContext::new(problem, solution.theta());
    let points: Vec<usize> = cfg.nfd.map_or(SWEEP_POINTS.to_vec(), |n| vec![n]);
    let steps: Vec<f64> = cfg.dfd.map_or(SWEEP_STEPS.to_vec(), |d| vec![d]);
    let mut out = Vec::new();
    for state in 0..problem.n_states() {
        let reference = state_gradient(problem, solution, state, &ctx, strategy("matvec")?, &base)?;
        for &n_fd in &points {
            for &delta_fd in &steps {
                info!("fd-sweep state {state} n_FD={n_fd} delta_FD={delta_fd}");
                let s = ResponseSettings { n_fd, delta_fd, ..base };
                let row = match state_gradient(problem, solution, state, &ctx, strategy("matvec-fd")?, &s) {
                    Ok(g) => SweepRow {
                        state,
                        n_fd,
                        delta_fd,
                        converged: true,
                        iterations: Some(g.response.iterations),
                        max_error: Some(record_deviation(&g.gradient, &reference.gradient)),
                        max_orbit_error: Some(g.gradient.max_deviation(&reference.gradient.orbits, reference.gradient.d_e_ext)),
                        residual_history: g.response.residual_history,
                    },
                    Err(Error::ResponseNotConverged { iterations, .. }) => SweepRow {
                        state,
                        n_fd,
                        delta_fd,
                        converged: false,
                        iterations: Some(iterations),
                        max_error: None,
                        max_orbit_error: None,
                        residual_history: Vec::new(),
                    },
                    Err(e) => return Err(e.into()),
                };
                out.push(row);
            }
        }
    }
    Ok(FdSweep {
        reference_strategy: "matvec",
        error_metric: "max |dE/dx| deviation over E_ext, every (p|h|q) and every (pq|rs)",
        rows: out,
    })
}

/// Runs the configured stages. Returns the document text and whether every
/// stage converged (and, in validate mode, every check passed).
pub fn run(cfg: &RunConfig) -> Result<(String, bool)> {
    let (ints, sector, defaults) = load_input(&cfg.input).with_context(|| format!("loading {}", cfg.input))?;
    let (def_states, def_layers) = defaults.unwrap_or((1, 1));
    let n_states = cfg.states.unwrap_or(def_states);
    let n_layers = cfg.layers.unwrap_or(def_layers);
    let problem = McVqeProblem::with_lowest_references(ints, sector, n_states, n_layers, cfg.weights.clone())?;
    info!("{} orbitals, {} states, {} parameters", problem.integrals().n_orb(), n_states, problem.n_params());

    let opts = LbfgsOptions { gtol: cfg.gtol, ..Default::default() };
    let theta0 = initial_parameters(problem.n_params(), cfg.seed);
    let solution = problem.solve(&theta0, &opts)?;
    info!("SA-VQE converged in {} iterations", solution.optimization.trace.len());
    let sub = &solution.subspace;

    let mut ok = true;
    let mut gradient = None;
    let mut validation = None;
    let mut sweep = None;
    let strat = strategy(&cfg.hessian)?;
    match cfg.mode {
        Mode::Energy => {}
        Mode::Gradient => {
            let ctx = ResponseContext::new(&problem, solution.theta());
            let s = settings(cfg);
            let mut out = Vec::new();
            for state in 0..n_states {
                let g = state_gradient(&problem, &solution, state, &ctx, strat, &s)?;
                out.push(gradient_out(g, problem.integrals()));
            }
            gradient = Some(out);
        }
        Mode::Validate => {
            let vopts = ValidationOptions {
                seed: cfg.seed.expect("seed checked at resolve"),
                n_points: 5,
                fd_gradient: true,
                fd_options: fd_oracle_options(),
            };
            let report = validate_solution(&problem, &solution, strat, &settings(cfg), &vopts)?;
            ok = report.all_pass;
            validation = Some(report);
        }
        Mode::FdSweep => {
            let table = fd_sweep(cfg, &problem, &solution)?;
            ok = table.rows.iter().all(|r| r.converged);
            sweep = Some(table);
        }
    }

    let doc = Document {
        schema_version: SCHEMA_VERSION,
        status: if ok { "ok" } else { "failed" },
        mode: cfg.mode_name(),
        config: cfg,
        system: System {
            n_orbitals: problem.integrals().n_orb(),
            n_qubits: 2 * problem.integrals().n_orb(),
            sector,
            e_ext: problem.integrals().e_ext(),
            n_layers,
            n_params: problem.n_params(),
            references: problem.references().to_vec(),
            weights: problem.weights().to_vec(),
        },
        energy: EnergySection {
            energies: sub.energies.clone(),
            sa_energy: solution.optimization.sa_energy,
            theta: solution.theta().to_vec(),
            subspace_hamiltonian: rows(&sub.hamiltonian),
            eigenvectors: rows(&sub.eigenvectors),
            min_gap: sub.min_gap,
            near_degenerate: sub.near_degenerate,
            optimizer_iterations: solution.optimization.trace.len(),
            optimizer_trace: solution.optimization.trace.clone(),
        },
        gradient,
        validation,
        fd_sweep: sweep,
    };
    Ok((crate::output::to_string(&doc)?, ok))
}

#[derive(Serialize)]
pub struct ErrorDocument<'a> {
    pub schema_version: u32,
    pub status: &'static str,
    pub error: ErrorRecord<'a>,
}

#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub kind: &'a str,
    pub message: String,
    pub chain: Vec<String>,
}

pub fn error_document(err: &anyhow::Error) -> String {
    let kind = err.chain().find_map(|e| e.downcast_ref::<Error>()).map_or("config", Error::kind);
    let doc = ErrorDocument {
        schema_version: SCHEMA_VERSION,
        status: "error",
        error: ErrorRecord { kind, message: err.to_string(), chain: err.chain().skip(1).map(|e| e.to_string()).collect() },
    };
    crate::output::to_string(&doc).expect("error records serialize")
}
