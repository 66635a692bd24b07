//! Analytic Thomas-Fermi engine: the algebraic system obtained by dropping
//! the kinetic terms, the four circumferences that rule the support
//! geometry, the piecewise densities, and the normalization solve for the
//! chemical potentials.
//!
//! The algebra is implemented exactly as derived for unit masses and unit
//! trap frequencies; anything else is rejected rather than silently
//! generalized.

use std::f64::consts::PI;

use crate::error::{GpeError, Result};
use crate::model::SystemParams;
use crate::sum::KahanSum;

/// Width of the band around a classification threshold that sets the
/// boundary flag.
const BOUNDARY_BAND: f64 = 1e-12;

/// Derived coupling coefficients of the Thomas-Fermi system.
///
/// The paper's TF-section symbols omega_ij clash with the trap frequencies,
/// so they are named `w` here: `w_ij = theta_ij / (2 det Theta)`,
/// `alpha_1 = w22 - w12`, `alpha_2 = w11 - w12`.
#[derive(Debug, Clone, Copy)]
pub struct TFCoefficients {
    pub w: [[f64; 2]; 2],
    pub alpha: [f64; 2],
    pub det_theta: f64,
}

impl TFCoefficients {
    pub fn from_theta(theta: &[[f64; 2]; 2]) -> Result<Self> {
        let det = theta[0][0] * theta[1][1] - theta[0][1] * theta[1][0];
        if det == 0.0 {
            return Err(GpeError::SingularCoupling {
                quantity: "det(theta)".into(),
                value: det,
            });
        }
        let mut w = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                w[i][j] = theta[i][j] / (2.0 * det);
            }
        }
        Ok(Self {
            w,
            alpha: [w[1][1] - w[0][1], w[0][0] - w[0][1]],
            det_theta: det,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapClass {
    NoOverlap,
    PartialOverlap,
    FullOverlap,
}

impl std::fmt::Display for OverlapClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OverlapClass::NoOverlap => "NoOverlap",
            OverlapClass::PartialOverlap => "PartialOverlap",
            OverlapClass::FullOverlap => "FullOverlap",
        };
        f.write_str(s)
    }
}

/// Overlap class plus a flag for ties within the boundary band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: OverlapClass,
    pub boundary: bool,
}

/// Classifies the relative position of the two support disks by comparing
/// the center distance with the sum and difference of the TF radii
/// `r_i = sqrt(2 mu_i)`.
pub fn tf_classify(mu: [f64; 2], centers: &[[f64; 2]; 2]) -> Result<Classification> {
    for (i, &m) in mu.iter().enumerate() {
        if !(m > 0.0) {
            return Err(GpeError::InvalidParams(format!(
                "mu{} must be positive for classification, got {m}",
                i + 1
            )));
        }
    }
    let r1 = (2.0 * mu[0]).sqrt();
    let r2 = (2.0 * mu[1]).sqrt();
    let d1 = centers[0][0] - centers[1][0];
    let d2 = centers[0][1] - centers[1][1];
    let dist_sq = d1 * d1 + d2 * d2;
    let hi = (r1 + r2) * (r1 + r2);
    let lo = (r1 - r2) * (r1 - r2);

    let near = |t: f64| (dist_sq - t).abs() <= BOUNDARY_BAND * t.abs().max(1.0);
    let class = if dist_sq >= hi {
        OverlapClass::NoOverlap
    } else if dist_sq <= lo {
        OverlapClass::FullOverlap
    } else {
        OverlapClass::PartialOverlap
    };
    Ok(Classification {
        class,
        boundary: near(hi) || near(lo),
    })
}

/// The four circumferences and region data of the TF ground-state geometry.
#[derive(Debug, Clone)]
pub struct TFGeometry {
    pub mu: [f64; 2],
    /// Support radii `r_i = sqrt(2 mu_i)` around the trap centers.
    pub r: [f64; 2],
    /// Radii of the interaction circles around the shifted centers `y_i`;
    /// zero when the squared radius turns negative.
    pub big_r: [f64; 2],
    /// Signed squared radii of the interaction circles (region tests use
    /// these directly).
    pub big_r_sq: [f64; 2],
    /// Shifted centers `y_i`.
    pub y: [[f64; 2]; 2],
    /// Trap centers (copied from the parameters).
    pub centers: [[f64; 2]; 2],
    pub coeffs: TFCoefficients,
    pub classification: Classification,
    /// Set when `det Theta < 0`; the printed formulas are evaluated as-is
    /// but the derivation does not cover this regime.
    pub strong_coupling: bool,
}

fn require_unit_trap(params: &SystemParams) -> Result<()> {
    for i in 0..2 {
        if params.mass[i] != 1.0 {
            return Err(GpeError::UnsupportedAnisotropy(format!(
                "m{} = {}",
                i + 1,
                params.mass[i]
            )));
        }
        for j in 0..2 {
            if params.omega[i][j] != 1.0 {
                return Err(GpeError::UnsupportedAnisotropy(format!(
                    "omega{}{} = {}",
                    i + 1,
                    j + 1,
                    params.omega[i][j]
                )));
            }
        }
    }
    Ok(())
}

fn require_self_coupling(params: &SystemParams) -> Result<()> {
    for i in 0..2 {
        if !(params.theta[i][i] > 0.0) {
            return Err(GpeError::InvalidParams(format!(
                "Thomas-Fermi geometry needs theta{}{} > 0",
                i + 1,
                i + 1
            )));
        }
    }
    Ok(())
}

/// Builds the TF geometry for given chemical potentials, cross-checking the
/// quotient and increment forms of the shifted centers and radii.
pub fn tf_geometry(params: &SystemParams, mu: [f64; 2]) -> Result<TFGeometry> {
    require_unit_trap(params)?;
    require_self_coupling(params)?;
    let coeffs = TFCoefficients::from_theta(&params.theta)?;
    for (i, &a) in coeffs.alpha.iter().enumerate() {
        if a == 0.0 {
            return Err(GpeError::SingularCoupling {
                quantity: format!("alpha{}", i + 1),
                value: a,
            });
        }
    }
    let x = params.centers;
    let w = coeffs.w;
    let alpha = coeffs.alpha;
    let delta = [x[0][0] - x[1][0], x[0][1] - x[1][1]];

    // increment form y_ij = x_ij -(-1)^i (w12/alpha_i) Delta_j x (1-based i)
    let mut y = [[0.0; 2]; 2];
    for j in 0..2 {
        y[0][j] = x[0][j] + w[0][1] / alpha[0] * delta[j];
        y[1][j] = x[1][j] - w[0][1] / alpha[1] * delta[j];
    }
    // quotient form, as printed
    let yq = [
        [
            (w[1][1] * x[0][0] - w[0][1] * x[1][0]) / (w[1][1] - w[0][1]),
            (w[1][1] * x[0][1] - w[0][1] * x[1][1]) / (w[1][1] - w[0][1]),
        ],
        [
            (w[0][0] * x[1][0] - w[0][1] * x[0][0]) / (w[0][0] - w[0][1]),
            (w[0][0] * x[1][1] - w[0][1] * x[0][1]) / (w[0][0] - w[0][1]),
        ],
    ];
    for i in 0..2 {
        for j in 0..2 {
            let scale = y[i][j].abs().max(1.0);
            if (y[i][j] - yq[i][j]).abs() > 1e-10 * scale {
                return Err(GpeError::Internal(format!(
                    "y{}{} forms disagree: {} vs {}",
                    i + 1,
                    j + 1,
                    y[i][j],
                    yq[i][j]
                )));
            }
        }
    }

    let r = [(2.0 * mu[0]).sqrt(), (2.0 * mu[1]).sqrt()];
    let norm_sq = |v: &[f64; 2]| v[0] * v[0] + v[1] * v[1];

    // explicit displayed form
    let big_r_sq_explicit = [
        (2.0 * w[1][1] * mu[0] - 2.0 * w[0][1] * mu[1] + w[0][1] * norm_sq(&x[1])
            - w[1][1] * norm_sq(&x[0]))
            / alpha[0]
            + norm_sq(&y[0]),
        (2.0 * w[0][0] * mu[1] - 2.0 * w[0][1] * mu[0] + w[0][1] * norm_sq(&x[0])
            - w[0][0] * norm_sq(&x[1]))
            / alpha[1]
            + norm_sq(&y[1]),
    ];
    // compact increment form
    let mut big_r_sq = [0.0; 2];
    for i in 0..2 {
        let j = 1 - i;
        let wjj = w[j][j];
        big_r_sq[i] = r[i] * r[i]
            + 2.0 * w[0][1] / alpha[i] * (mu[i] - mu[j])
            + w[0][1] / alpha[i] * (norm_sq(&x[j]) - norm_sq(&y[i]))
            - wjj / alpha[i] * (norm_sq(&x[i]) - norm_sq(&y[i]));
        let scale = big_r_sq[i].abs().max(1.0);
        if (big_r_sq[i] - big_r_sq_explicit[i]).abs() > 1e-10 * scale {
            return Err(GpeError::Internal(format!(
                "R{}^2 forms disagree: {} vs {}",
                i + 1,
                big_r_sq[i],
                big_r_sq_explicit[i]
            )));
        }
    }

    Ok(TFGeometry {
        mu,
        r,
        big_r: [big_r_sq[0].max(0.0).sqrt(), big_r_sq[1].max(0.0).sqrt()],
        big_r_sq,
        y,
        centers: x,
        coeffs,
        classification: tf_classify(mu, &x)?,
        strong_coupling: coeffs.det_theta < 0.0,
    })
}

fn dist_sq(p: (f64, f64), c: &[f64; 2]) -> f64 {
    let dx = p.0 - c[0];
    let dy = p.1 - c[1];
    dx * dx + dy * dy
}

/// Squared TF density of one component at a point, with a flag for clamped
/// negative radicands.
///
/// Inside the shared region of both support disks, each interaction circle
/// bounds its own component's phase: both present inside both circles,
/// only one present between them, neither past both. This is the unique
/// assignment under which every branch vanishes on the circle where it
/// hands over, so the density is continuous across all four circumferences.
pub fn tf_density_sq(
    geom: &TFGeometry,
    params: &SystemParams,
    component: usize,
    point: (f64, f64),
) -> (f64, bool) {
    let i = component;
    let j = 1 - component;
    let in_disk = [
        dist_sq(point, &geom.centers[0]) <= geom.r[0] * geom.r[0],
        dist_sq(point, &geom.centers[1]) <= geom.r[1] * geom.r[1],
    ];
    if !in_disk[i] {
        return (0.0, false);
    }
    let cond = |k: usize| {
        let q = dist_sq(point, &geom.y[k]);
        if geom.coeffs.alpha[k] > 0.0 {
            q <= geom.big_r_sq[k]
        } else {
            q >= geom.big_r_sq[k]
        }
    };
    let single = |clamp_flag: bool| {
        let v = (geom.r[i] * geom.r[i] - dist_sq(point, &geom.centers[i]))
            / (2.0 * params.theta[i][i]);
        (v.max(0.0), clamp_flag && v < 0.0)
    };
    if !in_disk[j] {
        return single(false);
    }
    if cond(i) && cond(j) {
        // coexistence region
        let v = geom.coeffs.alpha[i] * (geom.big_r_sq[i] - dist_sq(point, &geom.y[i]));
        if v < 0.0 {
            (0.0, true)
        } else {
            (v, false)
        }
    } else if cond(i) {
        // the other phase ended on its own circle; this one continues alone
        single(false)
    } else {
        // this phase ended on its own circle
        (0.0, false)
    }
}

/// TF amplitude (square root of the piecewise density) of one component.
pub fn tf_density(
    geom: &TFGeometry,
    params: &SystemParams,
    component: usize,
    point: (f64, f64),
) -> f64 {
    tf_density_sq(geom, params, component, point).0.sqrt()
}

/// Mass `int phi_i^2` of each component for given chemical potentials:
/// exact piecewise-polynomial radial integration along rays from each trap
/// center, adaptive Simpson in the angle.
pub fn tf_mass(params: &SystemParams, mu: [f64; 2]) -> Result<[f64; 2]> {
    let geom = tf_geometry(params, mu)?;
    let mut out = [0.0; 2];
    for i in 0..2 {
        out[i] = polar_mass(&geom, params, i);
    }
    Ok(out)
}

fn polar_mass(geom: &TFGeometry, params: &SystemParams, i: usize) -> f64 {
    let radial = |angle: f64| ray_mass(geom, params, i, angle);
    let panels = 64;
    let mut acc = KahanSum::new();
    let tol = 1e-12;
    for k in 0..panels {
        let a = 2.0 * PI * k as f64 / panels as f64;
        let b = 2.0 * PI * (k + 1) as f64 / panels as f64;
        acc.add(adaptive_simpson(&radial, a, b, tol, 24));
    }
    acc.value()
}

/// Exact radial integral of `s * phi_i^2(p(s))` along one ray: the density
/// is polynomial between circle crossings, so 3-point Gauss-Legendre per
/// segment is exact.
fn ray_mass(geom: &TFGeometry, params: &SystemParams, i: usize, angle: f64) -> f64 {
    let center = geom.centers[i];
    let (cos_a, sin_a) = (angle.cos(), angle.sin());
    let r_max = geom.r[i];

    let mut cuts = vec![0.0, r_max];
    let circles = [
        (geom.centers[0], geom.r[0] * geom.r[0]),
        (geom.centers[1], geom.r[1] * geom.r[1]),
        (geom.y[0], geom.big_r_sq[0]),
        (geom.y[1], geom.big_r_sq[1]),
    ];
    for (c, rad_sq) in circles {
        if rad_sq < 0.0 {
            continue; // empty circle, no crossing
        }
        let gx = c[0] - center[0];
        let gy = c[1] - center[1];
        let b = gx * cos_a + gy * sin_a;
        let disc = b * b - (gx * gx + gy * gy) + rad_sq;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for s in [b - sq, b + sq] {
                if s > 0.0 && s < r_max {
                    cuts.push(s);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    // 3-point Gauss-Legendre, exact for the cubic integrand per segment
    const GL_NODE: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
    const GL_NODES: [f64; 3] = [-GL_NODE, 0.0, GL_NODE];
    const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

    let mut acc = KahanSum::new();
    for seg in cuts.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        if s1 - s0 < 1e-14 {
            continue;
        }
        let half = 0.5 * (s1 - s0);
        let mid = 0.5 * (s0 + s1);
        for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let s = mid + half * node;
            let p = (center[0] + s * cos_a, center[1] + s * sin_a);
            let (d, _) = tf_density_sq(geom, params, i, p);
            acc.add(weight * half * s * d);
        }
    }
    acc.value()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Chemical potentials from the normalization conditions.
///
/// Decoupled systems use the closed form `mu_i = sqrt(N_i theta_ii / pi)`
/// (zero for an inert component); coupled systems run a damped 2D Newton
/// iteration on the mass map with a finite-difference Jacobian, started
/// from the decoupled values.
pub fn tf_solve_mu(params: &SystemParams) -> Result<[f64; 2]> {
    require_unit_trap(params)?;
    let n = params.particle_numbers;
    let decoupled = [
        (n[0] * params.theta[0][0] / PI).sqrt(),
        (n[1] * params.theta[1][1] / PI).sqrt(),
    ];
    if params.coupling() == 0.0 {
        return Ok(decoupled);
    }
    require_self_coupling(params)?;
    // geometry construction validates the coupled coefficients up front
    tf_geometry(params, decoupled)?;

    let mu_cap = 10.0 * decoupled[0].max(decoupled[1]) + 10.0;
    let mut mu = decoupled;
    let residual = |mu: [f64; 2]| -> Result<[f64; 2]> {
        let m = tf_mass(params, mu)?;
        Ok([m[0] - n[0], m[1] - n[1]])
    };
    let norm = |v: [f64; 2]| v[0].abs().max(v[1].abs());
    let tol = 1e-9 * n[0].max(n[1]).max(1.0);

    let mut f = residual(mu)?;
    for _ in 0..60 {
        if norm(f) <= tol {
            return Ok(mu);
        }
        // finite-difference Jacobian
        let mut jac = [[0.0; 2]; 2];
        for col in 0..2 {
            let h = 1e-6 * mu[col].max(1e-3);
            let mut mu_h = mu;
            mu_h[col] += h;
            let fh = residual(mu_h)?;
            jac[0][col] = (fh[0] - f[0]) / h;
            jac[1][col] = (fh[1] - f[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return Err(GpeError::NoSolution(format!(
                "singular mass Jacobian at mu = ({:.6e}, {:.6e})",
                mu[0], mu[1]
            )));
        }
        let step = [
            -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
            -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
        ];

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [mu[0] + t * step[0], mu[1] + t * step[1]];
            if trial[0] > 0.0 && trial[1] > 0.0 && trial[0] <= mu_cap && trial[1] <= mu_cap {
                let ft = residual(trial)?;
                if norm(ft) <= (1.0 - 1e-4 * t) * norm(f) {
                    mu = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(GpeError::NoSolution(format!(
                "damped Newton stalled at mu = ({:.6e}, {:.6e}), residual {:.3e}",
                mu[0], mu[1], norm(f)
            )));
        }
    }
    if norm(f) <= tol {
        Ok(mu)
    } else {
        Err(GpeError::NoSolution(format!(
            "mass residual {:.3e} after 60 iterations",
            norm(f)
        )))
    }
}

/// Human-readable TF report block.
pub fn tf_report(geom: &TFGeometry) -> String {
    let mut s = String::from("gpe2d-tf v1\n");
    s.push_str(&format!("mu1={:.16e} mu2={:.16e}\n", geom.mu[0], geom.mu[1]));
    s.push_str(&format!("r1={:.16e} r2={:.16e}\n", geom.r[0], geom.r[1]));
    s.push_str(&format!(
        "R1={:.16e} R2={:.16e}\n",
        geom.big_r[0], geom.big_r[1]
    ));
    s.push_str(&format!(
        "y1=({:.16e}, {:.16e}) y2=({:.16e}, {:.16e})\n",
        geom.y[0][0], geom.y[0][1], geom.y[1][0], geom.y[1][1]
    ));
    s.push_str(&format!(
        "class={} boundary={} strong_coupling={}\n",
        geom.classification.class, geom.classification.boundary, geom.strong_coupling
    ));
    s
}

/// TF amplitude of one component on a rectangular lattice (row-major, rows
/// of fixed `y`), plus the number of clamped radicands encountered.
pub fn tf_density_grid(
    geom: &TFGeometry,
    params: &SystemParams,
    component: usize,
    xs: &[f64],
    ys: &[f64],
) -> (Vec<f64>, usize) {
    use rayon::prelude::*;

    let nx = xs.len();
    let mut values = vec![0.0; nx * ys.len()];
    let clamped: usize = values
        .par_chunks_mut(nx)
        .enumerate()
        .map(|(iy, row)| {
            let mut count = 0;
            for (ix, v) in row.iter_mut().enumerate() {
                let (d, c) = tf_density_sq(geom, params, component, (xs[ix], ys[iy]));
                *v = d.sqrt();
                if c {
                    count += 1;
                }
            }
            count
        })
        .sum();
    (values, clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tf_params(t11: f64, t22: f64, t12: f64) -> SystemParams {
        let mut p = SystemParams::default();
        p.theta = [[t11, t12], [t12, t22]];
        p
    }

    #[test]
    fn coefficients_roundtrip() {
        let theta = [[400.0, 100.0], [100.0, 200.0]];
        let c = TFCoefficients::from_theta(&theta).unwrap();
        assert_relative_eq!(c.det_theta, 70000.0);
        // recompute theta from w: theta_ij = 2 det * w_ij
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    2.0 * c.det_theta * c.w[i][j],
                    theta[i][j],
                    max_relative = 1e-12
                );
            }
        }
        assert_relative_eq!(c.alpha[0], 1.0 / 1400.0, max_relative = 1e-12);
        assert_relative_eq!(c.alpha[1], 3.0 / 1400.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_coupling_rejected() {
        // det Theta = 0
        assert!(matches!(
            TFCoefficients::from_theta(&[[4.0, 2.0], [2.0, 1.0]]),
            Err(GpeError::SingularCoupling { .. })
        ));
        // alpha_1 = 0 (theta22 == theta12)
        let p = tf_params(4.0, 2.0, 2.0);
        assert!(matches!(
            tf_geometry(&p, [1.0, 1.0]),
            Err(GpeError::SingularCoupling { .. })
        ));
    }

    #[test]
    fn anisotropic_traps_rejected() {
        let mut p = tf_params(400.0, 200.0, 0.0);
        p.omega[0][0] = 2.0;
        assert!(matches!(
            tf_solve_mu(&p),
            Err(GpeError::UnsupportedAnisotropy(_))
        ));
        let mut q = tf_params(400.0, 200.0, 0.0);
        q.mass[1] = 2.0;
        assert!(matches!(
            tf_solve_mu(&q),
            Err(GpeError::UnsupportedAnisotropy(_))
        ));
    }

    #[test]
    fn decoupled_geometry_collapses() {
        let mut p = tf_params(400.0, 200.0, 0.0);
        p.centers = [[2.0, -1.0], [-3.0, 0.5]];
        let g = tf_geometry(&p, [3.0, 2.0]).unwrap();
        for i in 0..2 {
            assert_relative_eq!(g.big_r[i], g.r[i], max_relative = 1e-12);
            for j in 0..2 {
                assert_relative_eq!(g.y[i][j], p.centers[i][j], max_relative = 1e-12);
            }
        }
        assert_relative_eq!(g.r[0], 6.0f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(g.r[1], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn concentric_radii_formula() {
        let p = tf_params(400.0, 200.0, 100.0);
        let g = tf_geometry(&p, [3.0, 2.0]).unwrap();
        assert_eq!(g.y, [[0.0; 2]; 2]);
        // R_i^2 = r_i^2 + (2 w12 / alpha_i)(mu_i - mu_j)
        assert_relative_eq!(g.big_r_sq[0], 6.0 + 2.0 * 1.0, max_relative = 1e-12);
        assert_relative_eq!(g.big_r_sq[1], 4.0 - 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn classification_trichotomy_examples() {
        // concentric identical disks: boundary of the full-overlap class
        let c = tf_classify([2.0, 2.0], &[[0.0; 2]; 2]).unwrap();
        assert_eq!(c.class, OverlapClass::FullOverlap);
        assert!(c.boundary);

        let mu = [
            (400.0f64 / PI).sqrt(),
            (200.0f64 / PI).sqrt(),
        ];
        let far = [[6.0, 0.0], [-6.0, 0.0]];
        let c = tf_classify(mu, &far).unwrap();
        assert_eq!(c.class, OverlapClass::NoOverlap);
        assert!(!c.boundary);

        let near = [[2.0, 0.0], [-2.0, 0.0]];
        let c = tf_classify(mu, &near).unwrap();
        assert_eq!(c.class, OverlapClass::PartialOverlap);
    }

    #[test]
    fn decoupled_mu_closed_form() {
        let p = tf_params(400.0, 200.0, 0.0);
        let mu = tf_solve_mu(&p).unwrap();
        assert_relative_eq!(mu[0], (400.0f64 / PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(mu[0], 11.28379, max_relative = 1e-6);

        let p = tf_params(PI, PI, 0.0);
        let mu = tf_solve_mu(&p).unwrap();
        assert_relative_eq!(mu[0], 1.0, max_relative = 1e-14);

        // mu scales as sqrt(theta)
        let m1 = tf_solve_mu(&tf_params(100.0, 50.0, 0.0)).unwrap();
        let m2 = tf_solve_mu(&tf_params(400.0, 200.0, 0.0)).unwrap();
        assert_relative_eq!(m2[0], 2.0 * m1[0], max_relative = 1e-14);
    }

    #[test]
    fn single_component_density_profile() {
        let p = tf_params(PI, PI, 0.0);
        let mu = tf_solve_mu(&p).unwrap();
        let g = tf_geometry(&p, mu).unwrap();
        let center = tf_density(&g, &p, 0, (0.0, 0.0));
        assert_relative_eq!(center, (1.0 / PI).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(center, 0.56419, max_relative = 1e-4);

        // outside the support disk
        assert_eq!(tf_density(&g, &p, 0, (10.0, 3.0)), 0.0);

        // continuous decay to zero at the support boundary
        let r = g.r[0];
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6] {
            let v = tf_density(&g, &p, 0, (r * (1.0 - eps), 0.0));
            assert!(v < last);
            last = v;
        }
        assert!(last < 2e-3);
    }

    #[test]
    fn decoupled_mass_integrates_to_n() {
        let mut p = tf_params(400.0, 200.0, 0.0);
        p.particle_numbers = [1.0, 2.0];
        let mu = [
            (1.0f64 * 400.0 / PI).sqrt(),
            (2.0f64 * 200.0 / PI).sqrt(),
        ];
        let m = tf_mass(&p, mu).unwrap();
        assert_relative_eq!(m[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(m[1], 2.0, max_relative = 1e-9);
    }

    #[test]
    fn coupled_concentric_solve() {
        let p = tf_params(400.0, 200.0, 100.0);
        let mu = tf_solve_mu(&p).unwrap();
        let m = tf_mass(&p, mu).unwrap();
        assert_relative_eq!(m[0], 1.0, max_relative = 1e-6);
        assert_relative_eq!(m[1], 1.0, max_relative = 1e-6);
        let g = tf_geometry(&p, mu).unwrap();
        assert_eq!(g.classification.class, OverlapClass::FullOverlap);
        assert!(!g.strong_coupling);
    }
}
