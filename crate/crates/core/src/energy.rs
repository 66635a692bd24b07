//! Discrete total energy over Hermite coefficients, its analytic gradient
//! and diagonal curvature, chemical potentials, and the overlap integral.
//!
//! The kinetic-plus-reference-harmonic part collapses to the eigenvalue sum
//! `sum_l lambda_l c_l^2 / m_i`; what remains of the trap is the quadratic
//! correction `rho * int (V_i - ref_i) phi_i^2` with
//! `ref_i = (bx^4 x^2 + by^4 y^2) / (2 m_i)`, so the Hermite functions stay
//! exact eigenfunctions of the per-component reference operator for any
//! mass. All integrals are tensor Gauss quadratures and every reduction is
//! compensated and sequential, so evaluations are bit-reproducible.

use crate::basis::{QuadWeight, TensorBasis2D};
use crate::error::{GpeError, Result};
use crate::model::{potential_value, CoefficientField, SystemParams};
use crate::sum::{kahan_dot, KahanSum};

/// Additive pieces of the total energy.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    /// Per-component `sum_l lambda_l c_l^2 / m_i`.
    pub kinetic_plus_trap: [f64; 2],
    /// Per-component `rho * int (V_i - ref_i) phi_i^2`.
    pub potential_correction: [f64; 2],
    /// Per-component `(theta_ii / 2) int phi_i^4`.
    pub quartic: [f64; 2],
    /// `theta_12 int phi_1^2 phi_2^2`.
    pub coupling: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Energy of one component excluding the coupling term.
    pub fn component(&self, i: usize) -> f64 {
        self.kinetic_plus_trap[i] + self.potential_correction[i] + self.quartic[i]
    }
}

fn shared_basis(fields: &[CoefficientField; 2]) -> Result<&TensorBasis2D> {
    let a = fields[0].basis();
    let b = fields[1].basis();
    if !std::sync::Arc::ptr_eq(a, b) && !a.same_discretization(b) {
        return Err(GpeError::BasisMismatch);
    }
    Ok(a)
}

/// `wx_j * wy_m` over the node grid of the given weight class.
fn weight_grid(basis: &TensorBasis2D, class: QuadWeight) -> Vec<f64> {
    let rx = basis.rule_x(class);
    let ry = basis.rule_y(class);
    let mut w = vec![0.0; rx.len() * ry.len()];
    for (j, wx) in rx.weights.iter().enumerate() {
        for (m, wy) in ry.weights.iter().enumerate() {
            w[j * ry.len() + m] = wx * wy;
        }
    }
    w
}

/// `(V_i - ref_i)` at the quadratic-class node grid.
fn potential_correction_grid(
    basis: &TensorBasis2D,
    params: &SystemParams,
    component: usize,
) -> Vec<f64> {
    let rx = basis.rule_x(QuadWeight::Quadratic);
    let ry = basis.rule_y(QuadWeight::Quadratic);
    let bx2 = basis.spec_x().beta * basis.spec_x().beta;
    let by2 = basis.spec_y().beta * basis.spec_y().beta;
    let inv2m = 0.5 / params.mass[component];
    let mut out = vec![0.0; rx.len() * ry.len()];
    for (j, &x) in rx.nodes.iter().enumerate() {
        for (m, &y) in ry.nodes.iter().enumerate() {
            let reference = inv2m * (bx2 * bx2 * x * x + by2 * by2 * y * y);
            out[j * ry.len() + m] = potential_value(params, component, (x, y)) - reference;
        }
    }
    out
}

/// Total energy with its breakdown.
pub fn total_energy(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
) -> Result<EnergyBreakdown> {
    let basis = shared_basis(fields)?;
    let w4 = weight_grid(basis, QuadWeight::Quartic);
    let w2 = weight_grid(basis, QuadWeight::Quadratic);

    let s4: [Vec<f64>; 2] = [
        basis.synthesize_poly(fields[0].coeffs(), QuadWeight::Quartic),
        basis.synthesize_poly(fields[1].coeffs(), QuadWeight::Quartic),
    ];

    let mut kinetic_plus_trap = [0.0; 2];
    let mut potential_correction = [0.0; 2];
    let mut quartic = [0.0; 2];
    for i in 0..2 {
        let mut kin = KahanSum::new();
        for (lam, c) in basis.eigenvalues().iter().zip(fields[i].coeffs()) {
            kin.add(lam / params.mass[i] * c * c);
        }
        kinetic_plus_trap[i] = kin.value();

        if params.rho != 0.0 {
            let s2 = basis.synthesize_poly(fields[i].coeffs(), QuadWeight::Quadratic);
            let vmr = potential_correction_grid(basis, params, i);
            let mut pot = KahanSum::new();
            for k in 0..w2.len() {
                pot.add(w2[k] * vmr[k] * s2[k] * s2[k]);
            }
            potential_correction[i] = params.rho * pot.value();
        }

        if params.theta[i][i] != 0.0 {
            let mut q = KahanSum::new();
            for (w, s) in w4.iter().zip(&s4[i]) {
                let s2 = s * s;
                q.add(w * s2 * s2);
            }
            quartic[i] = 0.5 * params.theta[i][i] * q.value();
        }
    }

    let mut coupling = 0.0;
    if params.coupling() != 0.0 {
        let mut cp = KahanSum::new();
        for k in 0..w4.len() {
            cp.add(w4[k] * s4[0][k] * s4[0][k] * s4[1][k] * s4[1][k]);
        }
        coupling = params.coupling() * cp.value();
    }

    let mut total = KahanSum::new();
    for i in 0..2 {
        total.add(kinetic_plus_trap[i]);
        total.add(potential_correction[i]);
        total.add(quartic[i]);
    }
    total.add(coupling);

    Ok(EnergyBreakdown {
        kinetic_plus_trap,
        potential_correction,
        quartic,
        coupling,
        total: total.value(),
    })
}

/// Analytic gradient `dE/dc` for both components.
pub fn gradient(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
) -> Result<[Vec<f64>; 2]> {
    let basis = shared_basis(fields)?;
    let w4 = weight_grid(basis, QuadWeight::Quartic);
    let w2 = weight_grid(basis, QuadWeight::Quadratic);

    let s4: [Vec<f64>; 2] = [
        basis.synthesize_poly(fields[0].coeffs(), QuadWeight::Quartic),
        basis.synthesize_poly(fields[1].coeffs(), QuadWeight::Quartic),
    ];

    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for i in 0..2 {
        let j = 1 - i;
        let mut g = vec![0.0; basis.coeff_len()];
        for ((gk, lam), c) in g
            .iter_mut()
            .zip(basis.eigenvalues())
            .zip(fields[i].coeffs())
        {
            *gk = 2.0 * lam / params.mass[i] * c;
        }

        let th_self = params.theta[i][i];
        let th_cross = params.coupling();
        if th_self != 0.0 || th_cross != 0.0 {
            let mut nodes = vec![0.0; w4.len()];
            for k in 0..w4.len() {
                let si = s4[i][k];
                nodes[k] = w4[k] * (th_self * si * si * si + th_cross * s4[j][k] * s4[j][k] * si);
            }
            let quartic_part = basis.project_nodes(&nodes, QuadWeight::Quartic);
            for (gk, q) in g.iter_mut().zip(&quartic_part) {
                *gk += 2.0 * q;
            }
        }

        if params.rho != 0.0 {
            let s2 = basis.synthesize_poly(fields[i].coeffs(), QuadWeight::Quadratic);
            let vmr = potential_correction_grid(basis, params, i);
            let mut nodes = vec![0.0; w2.len()];
            for k in 0..w2.len() {
                nodes[k] = w2[k] * vmr[k] * s2[k];
            }
            let pot_part = basis.project_nodes(&nodes, QuadWeight::Quadratic);
            for (gk, p) in g.iter_mut().zip(&pot_part) {
                *gk += 2.0 * params.rho * p;
            }
        }

        out[i] = g;
    }
    Ok(out)
}

/// Diagonal second derivative of the Lagrangian
/// `E(c) + sum_i lambda_i (N_i - |c_i|^2)` with respect to each coefficient.
pub fn diagonal_hessian(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
    lambda: [f64; 2],
) -> Result<[Vec<f64>; 2]> {
    let basis = shared_basis(fields)?;
    let w4 = weight_grid(basis, QuadWeight::Quartic);
    let w2 = weight_grid(basis, QuadWeight::Quadratic);

    let s4: [Vec<f64>; 2] = [
        basis.synthesize_poly(fields[0].coeffs(), QuadWeight::Quartic),
        basis.synthesize_poly(fields[1].coeffs(), QuadWeight::Quartic),
    ];

    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for i in 0..2 {
        let j = 1 - i;
        let mut d = vec![0.0; basis.coeff_len()];
        for (dk, lam) in d.iter_mut().zip(basis.eigenvalues()) {
            *dk = 2.0 * lam / params.mass[i] - 2.0 * lambda[i];
        }

        let th_self = params.theta[i][i];
        let th_cross = params.coupling();
        if th_self != 0.0 || th_cross != 0.0 {
            let mut nodes = vec![0.0; w4.len()];
            for k in 0..w4.len() {
                nodes[k] = w4[k]
                    * (6.0 * th_self * s4[i][k] * s4[i][k]
                        + 2.0 * th_cross * s4[j][k] * s4[j][k]);
            }
            let quartic_part = basis.project_nodes_squared(&nodes, QuadWeight::Quartic);
            for (dk, q) in d.iter_mut().zip(&quartic_part) {
                *dk += q;
            }
        }

        if params.rho != 0.0 {
            let vmr = potential_correction_grid(basis, params, i);
            let mut nodes = vec![0.0; w2.len()];
            for k in 0..w2.len() {
                nodes[k] = w2[k] * vmr[k];
            }
            let pot_part = basis.project_nodes_squared(&nodes, QuadWeight::Quadratic);
            for (dk, p) in d.iter_mut().zip(&pot_part) {
                *dk += 2.0 * params.rho * p;
            }
        }

        out[i] = d;
    }
    Ok(out)
}

/// Chemical potentials from the eigenvalue identity
/// `N_i mu_i = E_i + (theta_ii / 2) int phi_i^4 + theta_12 int phi_1^2 phi_2^2`
/// (the quartic term counts twice relative to its energy share).
pub fn chemical_potentials(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
) -> Result<[f64; 2]> {
    let e = total_energy(fields, params)?;
    let mut mu = [0.0; 2];
    for i in 0..2 {
        mu[i] = (e.component(i) + e.quartic[i] + e.coupling) / fields[i].target_mass();
    }
    Ok(mu)
}

/// `int phi_1^2 phi_2^2` by the quartic-class rule.
pub fn overlap_integral(fields: &[CoefficientField; 2]) -> Result<f64> {
    let basis = shared_basis(fields)?;
    let s1 = basis.synthesize_poly(fields[0].coeffs(), QuadWeight::Quartic);
    let s2 = basis.synthesize_poly(fields[1].coeffs(), QuadWeight::Quartic);
    let mut vals = vec![0.0; s1.len()];
    for k in 0..s1.len() {
        vals[k] = s1[k] * s1[k] * s2[k] * s2[k];
    }
    Ok(basis.integrate_nodes(&vals, QuadWeight::Quartic))
}

/// Gradient projected onto the tangent space of the mass spheres:
/// `g_i - (<g_i, c_i> / N_i) c_i`. With the multiplier set to the chemical
/// potential this is exactly the Lagrangian gradient, and its norm is the
/// solver's stationarity residual.
pub fn projected_gradient(
    fields: &[CoefficientField; 2],
    params: &SystemParams,
) -> Result<[Vec<f64>; 2]> {
    let mut grads = gradient(fields, params)?;
    for i in 0..2 {
        let c = fields[i].coeffs();
        let scale = kahan_dot(&grads[i], c) / fields[i].target_mass();
        for (g, &ck) in grads[i].iter_mut().zip(c) {
            *g -= scale * ck;
        }
    }
    Ok(grads)
}

/// Euclidean norm of the stacked projected gradient.
pub fn residual_norm(fields: &[CoefficientField; 2], params: &SystemParams) -> Result<f64> {
    let pg = projected_gradient(fields, params)?;
    let mut acc = KahanSum::new();
    for g in &pg {
        for &v in g {
            acc.add(v * v);
        }
    }
    Ok(acc.value().sqrt())
}
