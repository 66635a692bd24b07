//! Problem definition: physical parameters, harmonic traps, and the
//! coefficient-space representation of the two wave-function components.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::basis::{hermite_function_values, QuadWeight, TensorBasis2D};
use crate::error::{GpeError, Result};
use crate::sum::KahanSum;

/// Physical parameters of the two-component system (hbar = 1 units).
///
/// Index conventions follow the trap layout: `omega[i][j]` and
/// `centers[i][j]` are the frequency and center of component `i` along axis
/// `j`, both 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Atomic masses `m_i`.
    pub mass: [f64; 2],
    /// Coupling matrix `theta[i][j]`, symmetric and nonnegative.
    pub theta: [[f64; 2]; 2],
    /// Trap frequencies per component and axis.
    pub omega: [[f64; 2]; 2],
    /// Trap centers per component and axis.
    pub centers: [[f64; 2]; 2],
    /// Particle numbers `N_i` (squared L2 masses).
    pub particle_numbers: [f64; 2],
    /// Relaxation parameter for the potential-correction term, in [0, 1].
    pub rho: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            mass: [1.0, 1.0],
            theta: [[0.0, 0.0], [0.0, 0.0]],
            omega: [[1.0, 1.0], [1.0, 1.0]],
            centers: [[0.0, 0.0], [0.0, 0.0]],
            particle_numbers: [1.0, 1.0],
            rho: 1.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if (self.theta[0][1] - self.theta[1][0]).abs() != 0.0 {
            return Err(GpeError::InvalidParams(format!(
                "theta12 = {} and theta21 = {} must be identical",
                self.theta[0][1], self.theta[1][0]
            )));
        }
        for i in 0..2 {
            for j in 0..2 {
                if !(self.theta[i][j] >= 0.0) {
                    return Err(GpeError::InvalidParams(format!(
                        "theta{}{} must be nonnegative, got {}",
                        i + 1,
                        j + 1,
                        self.theta[i][j]
                    )));
                }
                if !(self.omega[i][j] > 0.0) {
                    return Err(GpeError::InvalidParams(format!(
                        "omega{}{} must be positive, got {}",
                        i + 1,
                        j + 1,
                        self.omega[i][j]
                    )));
                }
                if !self.centers[i][j].is_finite() {
                    return Err(GpeError::InvalidParams(format!(
                        "x{}{} must be finite",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if !(self.mass[i] > 0.0) {
                return Err(GpeError::InvalidParams(format!(
                    "m{} must be positive, got {}",
                    i + 1,
                    self.mass[i]
                )));
            }
            if !(self.particle_numbers[i] > 0.0) {
                return Err(GpeError::InvalidParams(format!(
                    "n{} must be positive, got {}",
                    i + 1,
                    self.particle_numbers[i]
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(GpeError::InvalidParams(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// Inter-species coupling `theta12`.
    pub fn coupling(&self) -> f64 {
        self.theta[0][1]
    }

    /// Copy with a different inter-species coupling.
    pub fn with_coupling(&self, kappa: f64) -> Self {
        let mut p = self.clone();
        p.theta[0][1] = kappa;
        p.theta[1][0] = kappa;
        p
    }
}

/// Harmonic trap of one component at a point.
pub fn potential_value(params: &SystemParams, component: usize, point: (f64, f64)) -> f64 {
    let w = params.omega[component];
    let c = params.centers[component];
    let d1 = point.0 - c[0];
    let d2 = point.1 - c[1];
    0.5 * params.mass[component] * (w[0] * w[0] * d1 * d1 + w[1] * w[1] * d2 * d2)
}

/// One component of the wave function as Hermite coefficients.
///
/// Coefficients are stored row-major in `(l1, l2)` order with `l1` the
/// x-axis degree; the target mass is the particle number the field is
/// normalized against.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    basis: Arc<TensorBasis2D>,
    coeffs: Vec<f64>,
    target_mass: f64,
}

impl CoefficientField {
    pub fn new(basis: Arc<TensorBasis2D>, coeffs: Vec<f64>, target_mass: f64) -> Result<Self> {
        if coeffs.len() != basis.coeff_len() {
            return Err(GpeError::InvalidParams(format!(
                "coefficient vector has length {}, basis wants {}",
                coeffs.len(),
                basis.coeff_len()
            )));
        }
        if !(target_mass > 0.0) {
            return Err(GpeError::InvalidParams(format!(
                "target mass must be positive, got {target_mass}"
            )));
        }
        Ok(Self {
            basis,
            coeffs,
            target_mass,
        })
    }

    pub fn zero(basis: Arc<TensorBasis2D>, target_mass: f64) -> Result<Self> {
        let n = basis.coeff_len();
        Self::new(basis, vec![0.0; n], target_mass)
    }

    /// `sqrt(N)` on a single tensor mode, zero elsewhere.
    pub fn from_mode(
        basis: Arc<TensorBasis2D>,
        mode: (usize, usize),
        target_mass: f64,
    ) -> Result<Self> {
        let (l1, l2) = basis.dims();
        if mode.0 >= l1 || mode.1 >= l2 {
            return Err(GpeError::InvalidParams(format!(
                "mode ({}, {}) outside truncation ({l1}, {l2})",
                mode.0, mode.1
            )));
        }
        let mut f = Self::zero(basis, target_mass)?;
        f.coeffs[mode.0 * l2 + mode.1] = target_mass.sqrt();
        Ok(f)
    }

    pub fn basis(&self) -> &Arc<TensorBasis2D> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, l1: usize, l2: usize) -> f64 {
        self.coeffs[l1 * self.basis.dims().1 + l2]
    }

    pub fn target_mass(&self) -> f64 {
        self.target_mass
    }

    /// Discrete mass `sum_l c_l^2` (equals the L2 norm squared by Parseval).
    pub fn mass(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &c in &self.coeffs {
            acc.add(c * c);
        }
        acc.value()
    }

    /// Returns a copy rescaled so the discrete mass equals the target mass.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    pub(crate) fn normalize_in_place(&mut self) -> Result<()> {
        let m = self.mass();
        if m == 0.0 || !m.is_finite() {
            return Err(GpeError::DegenerateState);
        }
        let scale = (self.target_mass / m).sqrt();
        for c in &mut self.coeffs {
            *c *= scale;
        }
        Ok(())
    }

    /// Pointwise values on a rectangular lattice, row-major with rows of
    /// fixed `y` and ascending `x` (separable evaluation, rows in parallel).
    pub fn synthesize_on_grid(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        use rayon::prelude::*;

        let (l1, l2) = self.basis.dims();
        let hx = hermite_function_values(self.basis.spec_x(), xs);
        let hy = hermite_function_values(self.basis.spec_y(), ys);
        let nx = xs.len();
        let ny = ys.len();

        // T[l1, iy] = sum_l2 C[l1, l2] Hy[l2, iy]
        let mut t = vec![0.0; l1 * ny];
        for a in 0..l1 {
            for iy in 0..ny {
                let mut acc = 0.0;
                for b in 0..l2 {
                    acc += self.coeffs[a * l2 + b] * hy[b * ny + iy];
                }
                t[a * ny + iy] = acc;
            }
        }

        let mut out = vec![0.0; nx * ny];
        out.par_chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, row)| {
                for (ix, val) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for a in 0..l1 {
                        acc += hx[a * nx + ix] * t[a * ny + iy];
                    }
                    *val = acc;
                }
            });
        out
    }

    /// Field values at the quartic-rule node grid, `[nx x ny]` row-major
    /// with the x node index major (the internal layout of the energy
    /// quadratures).
    pub fn values_at_quadrature_nodes(&self) -> Vec<f64> {
        let (fx, fy) = self.basis.node_values();
        let (l1, l2) = self.basis.dims();
        let nx = self.basis.rule_x(QuadWeight::Quartic).len();
        let ny = self.basis.rule_y(QuadWeight::Quartic).len();
        let mut t = vec![0.0; l1 * ny];
        for a in 0..l1 {
            for m in 0..ny {
                let mut acc = 0.0;
                for b in 0..l2 {
                    acc += self.coeffs[a * l2 + b] * fy[b * ny + m];
                }
                t[a * ny + m] = acc;
            }
        }
        let mut out = vec![0.0; nx * ny];
        for j in 0..nx {
            for m in 0..ny {
                let mut acc = 0.0;
                for a in 0..l1 {
                    acc += fx[a * nx + j] * t[a * ny + m];
                }
                out[j * ny + m] = acc;
            }
        }
        out
    }

    /// Flips the global sign so the node sample of largest magnitude is
    /// positive. The sign is a gauge; fixing it makes artifacts reproducible.
    pub(crate) fn fix_sign(&mut self) {
        let vals = self.values_at_quadrature_nodes();
        let mut best = 0.0f64;
        for &v in &vals {
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < 0.0 {
            for c in &mut self.coeffs {
                *c = -*c;
            }
        }
    }
}

/// Outcome summary of one constrained solve.
#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub energy: f64,
    pub energies_per_component: [f64; 2],
    pub chemical_potentials: [f64; 2],
    pub overlap_integral: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const COEFF_MAGIC: &str = "gpe2d-coeffs v1";

/// Writes a coefficient file (`gpe2d-coeffs v1` header, then one
/// `l1 l2 value` line per coefficient, 17 significant digits).
pub fn write_coefficients(path: &Path, field: &CoefficientField) -> Result<()> {
    let (l1, l2) = field.basis().dims();
    let bx = field.basis().spec_x().beta;
    let by = field.basis().spec_y().beta;
    let mut out = String::new();
    writeln!(
        out,
        "{COEFF_MAGIC} L1={l1} L2={l2} beta1={bx:.16e} beta2={by:.16e} N={:.16e}",
        field.target_mass()
    )
    .expect("string write");
    for a in 0..l1 {
        for b in 0..l2 {
            writeln!(out, "{a} {b} {:.16e}", field.coeff(a, b)).expect("string write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a coefficient file back, rebuilding the basis from the header.
pub fn read_coefficients(path: &Path) -> Result<CoefficientField> {
    let text = fs::read_to_string(path)?;
    let bad = |reason: &str| GpeError::ParseError {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let rest = header
        .strip_prefix(COEFF_MAGIC)
        .ok_or_else(|| bad("missing gpe2d-coeffs v1 header"))?;
    let mut l1 = None;
    let mut l2 = None;
    let mut beta1 = None;
    let mut beta2 = None;
    let mut n = None;
    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| bad("malformed header field"))?;
        match key {
            "L1" => l1 = Some(value.parse::<usize>().map_err(|_| bad("bad L1"))?),
            "L2" => l2 = Some(value.parse::<usize>().map_err(|_| bad("bad L2"))?),
            "beta1" => beta1 = Some(value.parse::<f64>().map_err(|_| bad("bad beta1"))?),
            "beta2" => beta2 = Some(value.parse::<f64>().map_err(|_| bad("bad beta2"))?),
            "N" => n = Some(value.parse::<f64>().map_err(|_| bad("bad N"))?),
            other => return Err(bad(&format!("unknown header key {other}"))),
        }
    }
    let (l1, l2) = (
        l1.ok_or_else(|| bad("missing L1"))?,
        l2.ok_or_else(|| bad("missing L2"))?,
    );
    let spec_x = crate::basis::BasisSpec::new(l1, beta1.ok_or_else(|| bad("missing beta1"))?)?;
    let spec_y = crate::basis::BasisSpec::new(l2, beta2.ok_or_else(|| bad("missing beta2"))?)?;
    let basis = Arc::new(TensorBasis2D::new(spec_x, spec_y)?);
    let mut coeffs = vec![0.0; l1 * l2];
    let mut seen = 0usize;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let a: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad l1 index"))?;
        let b: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad l2 index"))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad coefficient value"))?;
        if a >= l1 || b >= l2 {
            return Err(bad("coefficient index outside truncation"));
        }
        coeffs[a * l2 + b] = v;
        seen += 1;
    }
    if seen != l1 * l2 {
        return Err(bad(&format!(
            "expected {} coefficient lines, found {seen}",
            l1 * l2
        )));
    }
    CoefficientField::new(basis, coeffs, n.ok_or_else(|| bad("missing N"))?)
}

/// Sign changes of a sampled slice, ignoring entries below
/// `rel_threshold * max|values|` (tail noise must not count as nodes).
pub fn count_sign_changes(values: &[f64], rel_threshold: f64) -> usize {
    let max = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    let cut = rel_threshold * max;
    let mut count = 0;
    let mut last: Option<f64> = None;
    for &v in values {
        if v.abs() < cut {
            continue;
        }
        if let Some(prev) = last {
            if prev * v < 0.0 {
                count += 1;
            }
        }
        last = Some(v);
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use approx::assert_relative_eq;

    fn unit_basis(l: usize) -> Arc<TensorBasis2D> {
        Arc::new(
            TensorBasis2D::new(
                BasisSpec::new(l, 1.0).unwrap(),
                BasisSpec::new(l, 1.0).unwrap(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn potential_examples() {
        let p = SystemParams::default();
        assert_eq!(potential_value(&p, 0, (0.0, 0.0)), 0.0);
        assert_eq!(potential_value(&p, 0, (1.0, 1.0)), 1.0);

        let mut q = SystemParams::default();
        q.mass[0] = 2.0;
        q.omega[0] = [3.0, 1.0];
        q.centers[0] = [1.0, 0.0];
        assert_eq!(potential_value(&q, 0, (0.0, 0.0)), 9.0);
    }

    #[test]
    fn params_validation() {
        let mut p = SystemParams::default();
        p.theta = [[1.0, 2.0], [3.0, 4.0]];
        assert!(p.validate().is_err());
        p.theta = [[1.0, 2.0], [2.0, 4.0]];
        assert!(p.validate().is_ok());
        p.particle_numbers[1] = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn normalize_examples() {
        let basis = unit_basis(2);
        let mut f = CoefficientField::zero(basis.clone(), 1.0).unwrap();
        f.coeffs_mut()[0] = 3.0;
        f.coeffs_mut()[1] = 4.0;
        let n = f.normalized().unwrap();
        assert_relative_eq!(n.coeffs()[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(n.coeffs()[1], 0.8, max_relative = 1e-15);

        let mut g = CoefficientField::zero(basis.clone(), 4.0).unwrap();
        g.coeffs_mut()[0] = 1.0;
        assert_eq!(g.normalized().unwrap().coeffs()[0], 2.0);

        let z = CoefficientField::zero(basis, 1.0).unwrap();
        assert!(matches!(z.normalized(), Err(GpeError::DegenerateState)));
    }

    #[test]
    fn grid_synthesis_examples() {
        let basis = unit_basis(3);
        let f = CoefficientField::from_mode(basis.clone(), (0, 0), 1.0).unwrap();
        let v = f.synthesize_on_grid(&[0.0], &[0.0]);
        assert_relative_eq!(v[0], 1.0 / std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(v[0], 0.56418958, max_relative = 1e-7);

        let z = CoefficientField::zero(basis.clone(), 1.0).unwrap();
        assert!(z.synthesize_on_grid(&[0.0, 1.0], &[0.5]).iter().all(|&x| x == 0.0));

        // unit coefficient on (1, 0): odd in x, vanishes on the x = 0 line
        let g = CoefficientField::from_mode(basis, (1, 0), 1.0).unwrap();
        let vals = g.synthesize_on_grid(&[0.0], &[-1.0, 0.3, 2.0]);
        assert!(vals.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn grid_matches_node_tables() {
        let basis = unit_basis(6);
        let mut f = CoefficientField::zero(basis.clone(), 1.0).unwrap();
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = (i as f64 * 0.37).sin();
        }
        let xs = basis.rule_x(QuadWeight::Quartic).nodes.clone();
        let ys = basis.rule_y(QuadWeight::Quartic).nodes.clone();
        let from_grid = f.synthesize_on_grid(&xs, &ys);
        let from_tables = f.values_at_quadrature_nodes();
        let ny = ys.len();
        for j in 0..xs.len() {
            for m in 0..ny {
                // grid output is row-major in y rows; tables are x-major
                let a = from_grid[m * xs.len() + j];
                let b = from_tables[j * ny + m];
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn coefficient_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.coeffs");
        let basis = unit_basis(4);
        let mut f = CoefficientField::zero(basis, 2.5).unwrap();
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = (i as f64).exp().recip() * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        write_coefficients(&path, &f).unwrap();
        let g = read_coefficients(&path).unwrap();
        assert_eq!(g.target_mass(), 2.5);
        assert_eq!(g.coeffs(), f.coeffs());
        assert!(g.basis().same_discretization(f.basis()));
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(count_sign_changes(&[1.0, 2.0, -1.0, -2.0], 1e-6), 1);
        assert_eq!(count_sign_changes(&[1.0, 1e-12, -1.0, 1.0], 1e-6), 2);
        assert_eq!(count_sign_changes(&[0.0, 0.0], 1e-6), 0);
    }
}
