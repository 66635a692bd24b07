//! Strong-interaction experiment harness: coupling sweeps tracking the
//! ground energy and overlap, constructive segregated trial states that
//! upper-bound the limiting segregated energy, and the testable limit
//! properties of the large-coupling regime.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::basis::{QuadWeight, TensorBasis2D};
use crate::energy;
use crate::error::{GpeError, Result};
use crate::minimize::{self, SolverConfig};
use crate::model::{CoefficientField, SystemParams};

/// One point of a coupling sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub kappa: f64,
    /// Converged ground energy (the discrete estimate of the minimum).
    pub energy: f64,
    pub overlap: f64,
    pub weighted_overlap: f64,
    pub mu: [f64; 2],
    pub converged: bool,
}

/// Ground solves over an increasing coupling grid, each warm-started from
/// the previous solution. Non-convergence is flagged on the record and the
/// sweep continues from the best-effort state.
pub fn run_kappa_sweep(
    base: &SystemParams,
    kappas: &[f64],
    basis: &Arc<TensorBasis2D>,
    config: &SolverConfig,
) -> Result<Vec<SweepRecord>> {
    run_kappa_sweep_full(base, kappas, basis, config).map(|(records, _)| records)
}

/// Like [`run_kappa_sweep`] but also returns the state at the last coupling
/// value (for grid exports).
pub fn run_kappa_sweep_full(
    base: &SystemParams,
    kappas: &[f64],
    basis: &Arc<TensorBasis2D>,
    config: &SolverConfig,
) -> Result<(Vec<SweepRecord>, [CoefficientField; 2])> {
    if kappas.is_empty() {
        return Err(GpeError::InvalidParams("empty kappa grid".into()));
    }
    for pair in kappas.windows(2) {
        if pair[1] <= pair[0] {
            return Err(GpeError::InvalidParams(
                "kappa grid must be strictly increasing".into(),
            ));
        }
    }
    if kappas[0] < 0.0 {
        return Err(GpeError::InvalidParams("kappa must be nonnegative".into()));
    }

    let mut records = Vec::with_capacity(kappas.len());
    let mut params = base.with_coupling(kappas[0]);
    let (mut fields, first_report) = minimize::solve_ground(&params, basis, config)?;
    records.push(record_from(kappas[0], &first_report));

    for &kappa in &kappas[1..] {
        let next = base.with_coupling(kappa);
        let (f, report) = minimize::continue_from(&fields, &params, &next, config)?;
        records.push(record_from(kappa, &report));
        fields = f;
        params = next;
    }
    Ok((records, fields))
}

fn record_from(kappa: f64, report: &crate::model::StateReport) -> SweepRecord {
    SweepRecord {
        kappa,
        energy: report.energy,
        overlap: report.overlap_integral,
        weighted_overlap: kappa * report.overlap_integral,
        mu: report.chemical_potentials,
        converged: report.converged,
    }
}

/// Axis the segregating split line is orthogonal to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitAxis {
    X1,
    X2,
}

/// A pair of numerically disjoint fields on the mass spheres together with
/// its coupling-free energy.
///
/// Truncated Hermite fields are entire functions, so their supports cannot
/// be exactly disjoint; `max_product_ratio` records the achieved pointwise
/// bound `max |phi_1 phi_2| / (max|phi_1| max|phi_2|)` on the quadrature
/// grid (typically 1e-3 .. 1e-4 for the default C1 cutoff).
#[derive(Debug, Clone)]
pub struct SegregatedTrial {
    pub fields: [CoefficientField; 2],
    /// `E_inf` of the trial: total energy with the coupling term excluded.
    pub energy: f64,
    /// `int phi_1^2 phi_2^2` of the trial (residual overlap of the masked
    /// pair).
    pub overlap: f64,
    pub max_product_ratio: f64,
}

/// Trials whose components fail to separate at least this well are
/// rejected as badly split. Projection ringing floors the ratio around
/// 1e-3 at L = 32 and grows toward small truncations, while a degenerate
/// split leaves it O(1).
const PRODUCT_RATIO_CEILING: f64 = 1e-1;

/// Default transition width of the cutoff ramp.
const DEFAULT_MASK_WIDTH: f64 = 1.0;

/// Builds a segregated trial with the default cutoff width.
pub fn build_segregated_trial(
    params: &SystemParams,
    basis: &Arc<TensorBasis2D>,
    axis: SplitAxis,
    coordinate: f64,
    config: &SolverConfig,
) -> Result<SegregatedTrial> {
    build_segregated_trial_with_width(params, basis, axis, coordinate, DEFAULT_MASK_WIDTH, config)
}

/// Masks each component's uncoupled ground state by a one-sided C1 cutoff
/// about the split line, re-projects onto the basis, and renormalizes.
pub fn build_segregated_trial_with_width(
    params: &SystemParams,
    basis: &Arc<TensorBasis2D>,
    axis: SplitAxis,
    coordinate: f64,
    width: f64,
    config: &SolverConfig,
) -> Result<SegregatedTrial> {
    params.validate()?;
    if !(width > 0.0) {
        return Err(GpeError::InvalidParams("mask width must be positive".into()));
    }
    let ax = match axis {
        SplitAxis::X1 => 0,
        SplitAxis::X2 => 1,
    };
    let c0 = params.centers[0][ax];
    let c1 = params.centers[1][ax];
    if c0 != c1 {
        let (lo, hi) = (c0.min(c1), c0.max(c1));
        if coordinate < lo || coordinate > hi {
            return Err(GpeError::InvalidSplit(format!(
                "coordinate {coordinate} outside the center interval [{lo}, {hi}] on axis {}",
                ax + 1
            )));
        }
    }
    // Each component keeps the side its own trap center lies on; the tie
    // (concentric along the split axis) sends component 1 to the minus side.
    let sides = if c0 > c1 { [1.0, -1.0] } else { [-1.0, 1.0] };

    let uncoupled = params.with_coupling(0.0);
    let (ground, _) = minimize::solve_ground(&uncoupled, basis, config)?;

    let mut masked: Vec<CoefficientField> = Vec::with_capacity(2);
    for (i, field) in ground.iter().enumerate() {
        let f = mask_and_project(field, basis, ax, coordinate, width, sides[i])?;
        let mass = f.mass();
        if mass < 1e-3 * params.particle_numbers[i] {
            return Err(GpeError::MaskCollapse { component: i, mass });
        }
        masked.push(f.normalized()?);
    }
    let fields: [CoefficientField; 2] = [masked.remove(0), masked.remove(0)];

    let v1 = fields[0].values_at_quadrature_nodes();
    let v2 = fields[1].values_at_quadrature_nodes();
    let max1 = v1.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let max2 = v2.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let max_prod = v1
        .iter()
        .zip(&v2)
        .fold(0.0f64, |m, (&a, &b)| m.max((a * b).abs()));
    let ratio = if max1 > 0.0 && max2 > 0.0 {
        max_prod / (max1 * max2)
    } else {
        0.0
    };
    if ratio > PRODUCT_RATIO_CEILING {
        return Err(GpeError::InvalidSplit(format!(
            "trial supports not numerically disjoint (product ratio {ratio:.3e})"
        )));
    }

    let energy = energy::total_energy(&fields, &uncoupled)?.total;
    let overlap = energy::overlap_integral(&fields)?;
    Ok(SegregatedTrial {
        fields,
        energy,
        overlap,
        max_product_ratio: ratio,
    })
}

/// C1 smoothstep cutoff: 1 on the kept side, 0 past the split line, cubic
/// ramp of the given width in between.
fn mask_value(u: f64, coordinate: f64, width: f64, side: f64) -> f64 {
    let s = side * (u - coordinate); // > 0 on the kept side
    if s >= width {
        1.0
    } else if s <= 0.0 {
        0.0
    } else {
        let h = s / width;
        h * h * (3.0 - 2.0 * h)
    }
}

fn mask_and_project(
    field: &CoefficientField,
    basis: &Arc<TensorBasis2D>,
    axis: usize,
    coordinate: f64,
    width: f64,
    side: f64,
) -> Result<CoefficientField> {
    let rx = basis.rule_x(QuadWeight::Quadratic);
    let ry = basis.rule_y(QuadWeight::Quadratic);
    let s = basis.synthesize_poly(field.coeffs(), QuadWeight::Quadratic);
    let mut m = vec![0.0; s.len()];
    for (j, (&xj, wx)) in rx.nodes.iter().zip(&rx.weights).enumerate() {
        for (k, (&yk, wy)) in ry.nodes.iter().zip(&ry.weights).enumerate() {
            let u = if axis == 0 { xj } else { yk };
            m[j * ry.len() + k] =
                wx * wy * s[j * ry.len() + k] * mask_value(u, coordinate, width, side);
        }
    }
    let coeffs = basis.project_nodes(&m, QuadWeight::Quadratic);
    CoefficientField::new(basis.clone(), coeffs, field.target_mass())
}

/// Pass/fail details of the large-coupling limit properties.
#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    /// (a) energies nondecreasing along the sweep (1e-7 slack).
    pub energies_monotone: bool,
    /// (b) every energy bounded by the trial energy (1e-6 slack).
    pub bounded_by_trial: bool,
    /// (c) fitted log-log slope of the overlap over the top decade.
    pub overlap_exponent: f64,
    pub overlap_decays: bool,
    /// (d) chemical potentials bounded by twice the trial-based bound
    /// `3 E_trial / N_i`.
    pub mu_bounded: bool,
    pub mu_bound: [f64; 2],
}

/// Checks the four testable conclusions of the segregation limit against a
/// sweep and a trial upper bound.
pub fn check_limit_properties(
    records: &[SweepRecord],
    trial: &SegregatedTrial,
) -> Result<LimitReport> {
    let positive: Vec<&SweepRecord> = records.iter().filter(|r| r.kappa > 0.0).collect();
    let decades = match (positive.first(), positive.last()) {
        (Some(first), Some(last)) if positive.len() >= 2 => {
            (last.kappa / first.kappa).log10()
        }
        _ => 0.0,
    };
    if records.len() < 3 || decades < 2.0 {
        return Err(GpeError::InsufficientRecords {
            required: 3,
            decades: 2.0,
            got: records.len(),
        });
    }

    let mut failures = Vec::new();

    let mut energies_monotone = true;
    for (i, pair) in records.windows(2).enumerate() {
        if pair[1].energy < pair[0].energy - 1e-7 {
            energies_monotone = false;
            failures.push(format!(
                "(a) energy decreased between records {i} and {}: {} -> {}",
                i + 1,
                pair[0].energy,
                pair[1].energy
            ));
        }
    }

    let mut bounded_by_trial = true;
    for (i, r) in records.iter().enumerate() {
        if r.energy > trial.energy + 1e-6 {
            bounded_by_trial = false;
            failures.push(format!(
                "(b) record {i} energy {} exceeds trial energy {}",
                r.energy, trial.energy
            ));
        }
    }

    // (c) least-squares slope of ln(overlap) vs ln(kappa) over the top decade
    let kappa_max = positive.last().map(|r| r.kappa).unwrap_or(0.0);
    let top: Vec<&&SweepRecord> = positive
        .iter()
        .filter(|r| r.kappa >= kappa_max / 10.0)
        .collect();
    let overlap_exponent = if top.iter().any(|r| r.overlap <= 0.0) {
        f64::NEG_INFINITY // overlap already at the quadrature floor
    } else if top.len() >= 2 {
        let xs: Vec<f64> = top.iter().map(|r| r.kappa.ln()).collect();
        let ys: Vec<f64> = top.iter().map(|r| r.overlap.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        num / den
    } else {
        0.0
    };
    let overlap_decays = overlap_exponent <= -0.5;
    if !overlap_decays {
        failures.push(format!(
            "(c) overlap power-law exponent {overlap_exponent:.3} above -0.5 over the top decade"
        ));
    }

    let n = [
        trial.fields[0].target_mass(),
        trial.fields[1].target_mass(),
    ];
    let mu_bound = [6.0 * trial.energy / n[0], 6.0 * trial.energy / n[1]];
    let mut mu_bounded = true;
    for (i, r) in records.iter().enumerate() {
        for c in 0..2 {
            if !r.mu[c].is_finite() || r.mu[c] >= mu_bound[c] {
                mu_bounded = false;
                failures.push(format!(
                    "(d) record {i} mu{} = {} outside bound {}",
                    c + 1,
                    r.mu[c],
                    mu_bound[c]
                ));
            }
        }
    }

    let report = LimitReport {
        energies_monotone,
        bounded_by_trial,
        overlap_exponent,
        overlap_decays,
        mu_bounded,
        mu_bound,
    };
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(GpeError::PropertyViolation(failures.join("\n")))
    }
}

const SWEEP_HEADER: &str = "kappa,energy,overlap,weighted_overlap,mu1,mu2,converged";

pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.kappa, r.energy, r.overlap, r.weighted_overlap, r.mu[0], r.mu[1], r.converged
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path)?;
    let bad = |reason: &str| GpeError::ParseError {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    if header.trim() != SWEEP_HEADER {
        return Err(bad("unexpected CSV header"));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(bad("expected 7 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        records.push(SweepRecord {
            kappa: num(parts[0])?,
            energy: num(parts[1])?,
            overlap: num(parts[2])?,
            weighted_overlap: num(parts[3])?,
            mu: [num(parts[4])?, num(parts[5])?],
            converged: parts[6] == "true",
        });
    }
    Ok(records)
}
