//! Command-line front end: `solve`, `excited`, `tf`, `sweep`, `quadcheck`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence
//! (artifacts are still written), 3 internal numerical failure,
//! 4 singular Thomas-Fermi coupling.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use gpe2d_core::{
    basis, energy, grid::DensityGrid, minimize, model, segregation, thomasfermi, CoefficientField,
    GpeError, InitialGuess, StateReport, TensorBasis2D,
};

#[derive(Parser)]
#[command(name = "gpe2d", about = "Spectral solver for coupled 2D Gross-Pitaevskii systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state and export coefficients, report, and grids.
    Solve(CommonArgs),
    /// Compute an excited state from the configured or given mode guess.
    Excited {
        #[command(flatten)]
        common: CommonArgs,
        /// Initial-guess modes `l1,l2` or `l1,l2,l1,l2` (per component).
        #[arg(long)]
        modes: Option<String>,
    },
    /// Evaluate the Thomas-Fermi geometry, report, and density grids.
    Tf(CommonArgs),
    /// Sweep the inter-species coupling and record energy and overlap.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated strictly increasing coupling values.
        #[arg(long)]
        kappas: String,
    },
    /// Print quadrature exactness diagnostics for the configured basis.
    Quadcheck {
        /// Run configuration file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NONCONVERGED: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_SINGULAR: u8 = 4;

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    };
    ExitCode::from(code)
}

fn classify_error(e: &GpeError) -> u8 {
    match e {
        GpeError::InvalidParams(_)
        | GpeError::InvalidSplit(_)
        | GpeError::UnsupportedAnisotropy(_)
        | GpeError::ParseError { .. } => EXIT_CONFIG,
        GpeError::NonConvergence { .. } => EXIT_NONCONVERGED,
        GpeError::SingularCoupling { .. } => EXIT_SINGULAR,
        _ => EXIT_NUMERICAL,
    }
}

/// `GPE2D_THREADS` caps internal parallelism; 0 or unset picks the default.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("GPE2D_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, GpeError> {
    let text = fs::read_to_string(path).map_err(|e| {
        GpeError::InvalidParams(format!("cannot read config {}: {e}", path.display()))
    })?;
    RunConfig::parse(&text)
}

fn out_dir(cfg: &RunConfig, flag: &Option<PathBuf>) -> Result<PathBuf, GpeError> {
    let dir = flag
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(command: Command) -> Result<u8, GpeError> {
    match command {
        Command::Solve(common) => {
            let cfg = load_config(&common.config)?;
            let dir = out_dir(&cfg, &common.out)?;
            let basis = Arc::new(cfg.build_basis()?);
            let (fields, report) =
                minimize::solve_ground(&cfg.system, &basis, &cfg.solver)?;
            write_state_artifacts(&dir, &cfg, &fields, &report)?;
            Ok(if report.converged { 0 } else { EXIT_NONCONVERGED })
        }
        Command::Excited { common, modes } => {
            let cfg = load_config(&common.config)?;
            let dir = out_dir(&cfg, &common.out)?;
            let basis = Arc::new(cfg.build_basis()?);
            let guess = InitialGuess {
                modes: match modes {
                    Some(s) => parse_modes(&s)?,
                    None => cfg.modes,
                },
            };
            let (fields, report) =
                minimize::solve_excited(&cfg.system, &basis, &cfg.solver, guess)?;
            write_state_artifacts(&dir, &cfg, &fields, &report)?;
            Ok(if report.converged { 0 } else { EXIT_NONCONVERGED })
        }
        Command::Tf(common) => {
            let cfg = load_config(&common.config)?;
            let dir = out_dir(&cfg, &common.out)?;
            let mu = thomasfermi::tf_solve_mu(&cfg.system)?;
            let geom = thomasfermi::tf_geometry(&cfg.system, mu)?;
            let mut report = thomasfermi::tf_report(&geom);

            let xs = gpe2d_core::grid::linspace(cfg.window.0, cfg.window.1, cfg.resolution.0);
            let ys = gpe2d_core::grid::linspace(cfg.window.2, cfg.window.3, cfg.resolution.1);
            let mut clamped_total = 0;
            for comp in 0..2 {
                let (values, clamped) =
                    thomasfermi::tf_density_grid(&geom, &cfg.system, comp, &xs, &ys);
                clamped_total += clamped;
                let grid = DensityGrid {
                    nx: cfg.resolution.0,
                    ny: cfg.resolution.1,
                    x0: cfg.window.0,
                    x1: cfg.window.1,
                    y0: cfg.window.2,
                    y1: cfg.window.3,
                    component: comp + 1,
                    values,
                };
                grid.write(&dir.join(format!("tf_phi{}.grid", comp + 1)))?;
            }
            report.push_str(&format!("clamped_points={clamped_total}\n"));
            fs::write(dir.join("tf_report.txt"), &report)?;
            print!("{report}");
            Ok(0)
        }
        Command::Sweep { common, kappas } => {
            let cfg = load_config(&common.config)?;
            let dir = out_dir(&cfg, &common.out)?;
            let grid_values = parse_kappas(&kappas)?;
            let basis = Arc::new(cfg.build_basis()?);
            let (records, fields) = segregation::run_kappa_sweep_full(
                &cfg.system,
                &grid_values,
                &basis,
                &cfg.solver,
            )?;
            segregation::write_sweep_csv(&dir.join("sweep.csv"), &records)?;
            write_field_grids(&dir, &cfg, &fields)?;
            for r in &records {
                println!(
                    "kappa={:.6e} energy={:.12e} overlap={:.6e} converged={}",
                    r.kappa, r.energy, r.overlap, r.converged
                );
            }
            Ok(if records.iter().all(|r| r.converged) {
                0
            } else {
                EXIT_NONCONVERGED
            })
        }
        Command::Quadcheck { config } => {
            let cfg = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            quadcheck(&cfg)?;
            Ok(0)
        }
    }
}

fn parse_modes(s: &str) -> Result<[(usize, usize); 2], GpeError> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| GpeError::InvalidParams(format!("bad --modes value `{s}`")))?;
    match parts.len() {
        2 => Ok([(parts[0], parts[1]), (0, 0)]),
        4 => Ok([(parts[0], parts[1]), (parts[2], parts[3])]),
        _ => Err(GpeError::InvalidParams(
            "--modes wants `l1,l2` or `l1,l2,l1,l2`".into(),
        )),
    }
}

fn parse_kappas(s: &str) -> Result<Vec<f64>, GpeError> {
    let values: Vec<f64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| GpeError::InvalidParams(format!("bad --kappas value `{s}`")))?;
    if values.is_empty() {
        return Err(GpeError::InvalidParams("empty kappa grid".into()));
    }
    Ok(values)
}

fn write_field_grids(
    dir: &Path,
    cfg: &RunConfig,
    fields: &[CoefficientField; 2],
) -> Result<(), GpeError> {
    for (i, field) in fields.iter().enumerate() {
        let grid = DensityGrid::from_field(field, cfg.window, cfg.resolution, i + 1);
        grid.write(&dir.join(format!("phi{}.grid", i + 1)))?;
    }
    Ok(())
}

fn write_state_artifacts(
    dir: &Path,
    cfg: &RunConfig,
    fields: &[CoefficientField; 2],
    report: &StateReport,
) -> Result<(), GpeError> {
    for (i, field) in fields.iter().enumerate() {
        model::write_coefficients(&dir.join(format!("phi{}.coeffs", i + 1)), field)?;
    }
    write_field_grids(dir, cfg, fields)?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| GpeError::Internal(format!("report serialization: {e}")))?;
    fs::write(dir.join("report.json"), json)?;
    println!(
        "energy={:.12e} E1={:.12e} E2={:.12e} mu1={:.12e} mu2={:.12e} overlap={:.6e} iters={} converged={}",
        report.energy,
        report.energies_per_component[0],
        report.energies_per_component[1],
        report.chemical_potentials[0],
        report.chemical_potentials[1],
        report.overlap_integral,
        report.iterations,
        report.converged
    );
    Ok(())
}

/// Prints per-axis moment exactness and Gram deviations for the configured
/// basis.
fn quadcheck(cfg: &RunConfig) -> Result<(), GpeError> {
    let tb: TensorBasis2D = cfg.build_basis()?;
    for (axis, spec) in [("x", *tb.spec_x()), ("y", *tb.spec_y())] {
        let l = spec.num_modes as u32;
        let rule = basis::gauss_hermite_rule(&spec)?;
        let mut worst = (0u32, 0.0f64);
        let mut p = 0u32;
        while p <= 4 * l - 3 {
            let exact = basis::gaussian_moment(p, rule.weight_exponent);
            let rel = (rule.moment(p) - exact).abs() / exact.abs();
            if rel > worst.1 {
                worst = (p, rel);
            }
            p += 2;
        }
        let gram = basis::discrete_gram(&spec)?;
        let mut gram_dev = 0.0f64;
        let lm = spec.num_modes;
        for a in 0..lm {
            for b in 0..lm {
                let expect = if a == b { 1.0 } else { 0.0 };
                gram_dev = gram_dev.max((gram[a * lm + b] - expect).abs());
            }
        }
        println!(
            "axis {axis}: L={lm} beta={} nodes={} worst_moment p={} rel_err={:.3e} gram_dev={:.3e}",
            spec.beta,
            rule.len(),
            worst.0,
            worst.1,
            gram_dev
        );
    }
    tb.verify_exactness()?;
    println!("exactness check passed");
    // spot-check one quartic integral on the configured basis:
    // int H00^4 = b1 b2 / (2 pi)
    let b = Arc::new(cfg.build_basis()?);
    let f = CoefficientField::from_mode(b, (0, 0), 1.0)?;
    let fields = [f.clone(), f];
    let ov = energy::overlap_integral(&fields)?;
    let analytic = cfg.basis_beta.0 * cfg.basis_beta.1 / (2.0 * std::f64::consts::PI);
    println!("overlap(H00, H00) = {ov:.12e} (analytic {analytic:.12e})");
    Ok(())
}
