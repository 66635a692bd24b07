//! Hermite functions, harmonic-oscillator eigenvalues, and Gauss-Hermite
//! quadrature for the scaled Gaussian weights used by the discrete energy.
//!
//! The working basis is the family of Hermite functions
//! `H_l^b(x) = H_l(x) exp(-b^2 x^2 / 2)`, where the polynomials `H_l` are
//! orthonormal with respect to the weight `exp(-b^2 x^2)`. Products of two
//! basis functions therefore carry the Gaussian `exp(-b^2 x^2)` and products
//! of four carry `exp(-2 b^2 x^2)`; each class of integrand gets a Gauss rule
//! for its own weight, both obtained by affine rescaling of one standard
//! Golub-Welsch rule, so every polynomial integrand in the energy is
//! integrated exactly.

use std::f64::consts::PI;

use crate::error::{GpeError, Result};
use crate::sum::KahanSum;

/// Below this exponent the Gaussian factor of a Hermite function is
/// flushed to exactly zero instead of trusting gradual underflow.
const UNDERFLOW_LOG: f64 = -700.0;

/// Per-axis truncation degree and length scale of the Hermite basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    /// Number of retained 1D modes; degrees run over `0..num_modes`.
    pub num_modes: usize,
    /// Length-scale parameter `b > 0` of the basis.
    pub beta: f64,
}

impl BasisSpec {
    pub fn new(num_modes: usize, beta: f64) -> Result<Self> {
        if num_modes == 0 {
            return Err(GpeError::InvalidParams(
                "basis needs at least one mode".into(),
            ));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(GpeError::InvalidParams(format!(
                "basis scale beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { num_modes, beta })
    }

    /// Node count of the quadrature rules derived from this spec.
    pub fn node_count(&self) -> usize {
        2 * self.num_modes - 1
    }
}

/// Eigenvalue `b^2 (l + 1/2)` of the reference harmonic operator
/// `(-d^2/dx^2 + b^4 x^2) / 2` on the `l`-th Hermite function.
pub fn hermite_eigenvalue(l: usize, beta: f64) -> f64 {
    beta * beta * (l as f64 + 0.5)
}

/// Gauss rule for a Gaussian weight `exp(-c x^2)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Strictly increasing, symmetric about the origin.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// The coefficient `c` of the weight `exp(-c x^2)`.
    pub weight_exponent: f64,
}

impl QuadratureRule {
    /// Builds an `n`-point rule for the weight `exp(-c x^2)` by rescaling
    /// the standard Golub-Welsch Gauss-Hermite rule.
    pub fn for_weight(n: usize, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(GpeError::InvalidParams("rule needs at least one node".into()));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(GpeError::InvalidParams(format!(
                "weight exponent must be positive, got {c}"
            )));
        }
        let (t, w) = standard_hermite_rule(n)?;
        let scale = c.sqrt();
        let nodes = t.iter().map(|&ti| ti / scale).collect();
        let weights = w.iter().map(|&wi| wi / scale).collect();
        Ok(Self {
            nodes,
            weights,
            weight_exponent: c,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Compensated weighted sum of integrand values at the nodes, mirrored
    /// node pairs added first (see [`symmetric_pair_sum`]).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        symmetric_pair_sum(self.len(), |j| self.weights[j] * values[j])
    }

    /// Discrete moment `sum_j w_j x_j^p`.
    pub fn moment(&self, p: u32) -> f64 {
        let vals: Vec<f64> = self.nodes.iter().map(|&x| x.powi(p as i32)).collect();
        self.integrate(&vals)
    }
}

/// Analytic Gaussian moment `int x^p exp(-c x^2) dx` (zero for odd `p`).
pub fn gaussian_moment(p: u32, c: f64) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    // M_0 = sqrt(pi/c), M_p = M_{p-2} (p-1) / (2c)
    let mut m = (PI / c).sqrt();
    let mut k = 2;
    while k <= p {
        m *= (k - 1) as f64 / (2.0 * c);
        k += 2;
    }
    m
}

/// The `2L-1`-node rule for the weight `exp(-2 b^2 x^2)` carried by
/// four-factor products of basis functions.
pub fn gauss_hermite_rule(spec: &BasisSpec) -> Result<QuadratureRule> {
    QuadratureRule::for_weight(spec.node_count(), 2.0 * spec.beta * spec.beta)
}

/// Golub-Welsch on the Jacobi matrix of the physicists' Hermite polynomials
/// (weight `exp(-t^2)`), Newton-polished to machine precision, with the
/// node/weight arrays symmetrized exactly.
fn standard_hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 1 {
        return Ok((vec![0.0], vec![PI.sqrt()]));
    }
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eigen = nalgebra::SymmetricEigen::try_new(jacobi, f64::EPSILON, 0)
        .ok_or(GpeError::EigenSolveFailure { nodes: n })?;

    let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    // The eigensolve leaves the roots with ~1e-13 relative error, which the
    // highest moments amplify past the exactness tolerances; two Newton
    // steps on the orthonormal polynomial h_n pin them down. Then
    // w_j = 1 / sum_{k<n} h_k(t_j)^2, the standard Gauss weight identity.
    let mut weights = vec![0.0; n];
    for (node, weight) in nodes.iter_mut().zip(&mut weights) {
        let mut t = *node;
        for _ in 0..2 {
            let (hn, hn_prev) = hermite_pair(n, t);
            let deriv = (2.0 * n as f64).sqrt() * hn_prev;
            if deriv != 0.0 {
                t -= hn / deriv;
            }
        }
        *node = t;
        let mut sum = KahanSum::new();
        for value in hermite_sequence(n, t) {
            sum.add(value * value);
        }
        *weight = 1.0 / sum.value();
    }

    // Enforce the x -> -x symmetry of the rule bit-exactly.
    for j in 0..n / 2 {
        let k = n - 1 - j;
        let half = 0.5 * (nodes[k] - nodes[j]);
        nodes[j] = -half;
        nodes[k] = half;
        let w = 0.5 * (weights[j] + weights[k]);
        weights[j] = w;
        weights[k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(h_n(t), h_{n-1}(t))` for the orthonormal Hermite polynomials
/// (weight `exp(-t^2)`).
fn hermite_pair(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        let next = t * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `h_0(t) .. h_{n-1}(t)` for the orthonormal Hermite polynomials.
fn hermite_sequence(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        out.push(cur);
        let next = t * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Values of the orthonormal Hermite polynomials `H_l^b` (weight
/// `exp(-b^2 x^2)`) at the given points; row-major `[num_modes x points]`.
///
/// Three-term recurrence on the normalized polynomials:
/// `h_{l+1}(u) = u sqrt(2/(l+1)) h_l(u) - sqrt(l/(l+1)) h_{l-1}(u)`.
pub fn hermite_polynomial_values(spec: &BasisSpec, points: &[f64]) -> Vec<f64> {
    let l_max = spec.num_modes;
    let np = points.len();
    let mut out = vec![0.0; l_max * np];
    let norm0 = spec.beta.sqrt() * PI.powf(-0.25);
    for (j, &x) in points.iter().enumerate() {
        let u = spec.beta * x;
        out[j] = norm0;
        if l_max > 1 {
            out[np + j] = std::f64::consts::SQRT_2 * u * norm0;
        }
        for l in 1..l_max.saturating_sub(1) {
            let a = (2.0 / (l as f64 + 1.0)).sqrt();
            let b = (l as f64 / (l as f64 + 1.0)).sqrt();
            out[(l + 1) * np + j] = a * u * out[l * np + j] - b * out[(l - 1) * np + j];
        }
    }
    out
}

/// Values of the Hermite functions `H_l^b(x) exp(-b^2 x^2 / 2)` at the given
/// points; row-major `[num_modes x points]`.
///
/// The same recurrence runs directly on the function values, which stay
/// O(1), so no intermediate overflows occur; once the Gaussian factor drops
/// below `exp(-700)` the whole column is flushed to zero.
pub fn hermite_function_values(spec: &BasisSpec, points: &[f64]) -> Vec<f64> {
    let l_max = spec.num_modes;
    let np = points.len();
    let mut out = vec![0.0; l_max * np];
    let norm0 = spec.beta.sqrt() * PI.powf(-0.25);
    for (j, &x) in points.iter().enumerate() {
        let u = spec.beta * x;
        let log_gauss = -0.5 * u * u;
        if log_gauss < UNDERFLOW_LOG {
            continue; // entire column underflows to exactly zero
        }
        out[j] = norm0 * log_gauss.exp();
        if l_max > 1 {
            out[np + j] = std::f64::consts::SQRT_2 * u * out[j];
        }
        for l in 1..l_max.saturating_sub(1) {
            let a = (2.0 / (l as f64 + 1.0)).sqrt();
            let b = (l as f64 / (l as f64 + 1.0)).sqrt();
            out[(l + 1) * np + j] = a * u * out[l * np + j] - b * out[(l - 1) * np + j];
        }
    }
    out
}

/// Which Gaussian weight an integrand carries, by its number of
/// Hermite-function factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadWeight {
    /// Four factors: weight `exp(-2 b^2 x^2)` (quartic, coupling, cubic
    /// gradient terms).
    Quartic,
    /// Two factors: weight `exp(-b^2 x^2)` (potential and projection terms).
    Quadratic,
}

/// Tensor-product Hermite basis on the plane with per-axis quadrature.
#[derive(Debug)]
pub struct TensorBasis2D {
    spec_x: BasisSpec,
    spec_y: BasisSpec,
    rule4_x: QuadratureRule,
    rule4_y: QuadratureRule,
    rule2_x: QuadratureRule,
    rule2_y: QuadratureRule,
    /// `H_l^b` at the rule nodes, row-major `[L x n]`, one table per
    /// (axis, weight class).
    poly4_x: Vec<f64>,
    poly4_y: Vec<f64>,
    poly2_x: Vec<f64>,
    poly2_y: Vec<f64>,
    /// Hermite-function values at the quartic-rule nodes.
    fn4_x: Vec<f64>,
    fn4_y: Vec<f64>,
    /// `lambda_{l1,l2} = bx^2 (l1 + 1/2) + by^2 (l2 + 1/2)`, row-major.
    eigenvalues: Vec<f64>,
}

impl TensorBasis2D {
    pub fn new(spec_x: BasisSpec, spec_y: BasisSpec) -> Result<Self> {
        let rule4_x = gauss_hermite_rule(&spec_x)?;
        let rule4_y = gauss_hermite_rule(&spec_y)?;
        let rule2_x = QuadratureRule::for_weight(spec_x.node_count(), spec_x.beta * spec_x.beta)?;
        let rule2_y = QuadratureRule::for_weight(spec_y.node_count(), spec_y.beta * spec_y.beta)?;

        let poly4_x = hermite_polynomial_values(&spec_x, &rule4_x.nodes);
        let poly4_y = hermite_polynomial_values(&spec_y, &rule4_y.nodes);
        let poly2_x = hermite_polynomial_values(&spec_x, &rule2_x.nodes);
        let poly2_y = hermite_polynomial_values(&spec_y, &rule2_y.nodes);
        let fn4_x = hermite_function_values(&spec_x, &rule4_x.nodes);
        let fn4_y = hermite_function_values(&spec_y, &rule4_y.nodes);

        let (l1, l2) = (spec_x.num_modes, spec_y.num_modes);
        let mut eigenvalues = vec![0.0; l1 * l2];
        for a in 0..l1 {
            for b in 0..l2 {
                eigenvalues[a * l2 + b] =
                    hermite_eigenvalue(a, spec_x.beta) + hermite_eigenvalue(b, spec_y.beta);
            }
        }

        Ok(Self {
            spec_x,
            spec_y,
            rule4_x,
            rule4_y,
            rule2_x,
            rule2_y,
            poly4_x,
            poly4_y,
            poly2_x,
            poly2_y,
            fn4_x,
            fn4_y,
            eigenvalues,
        })
    }

    pub fn spec_x(&self) -> &BasisSpec {
        &self.spec_x
    }

    pub fn spec_y(&self) -> &BasisSpec {
        &self.spec_y
    }

    /// Modes per axis `(L1, L2)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.spec_x.num_modes, self.spec_y.num_modes)
    }

    pub fn coeff_len(&self) -> usize {
        self.spec_x.num_modes * self.spec_y.num_modes
    }

    pub fn rule_x(&self, class: QuadWeight) -> &QuadratureRule {
        match class {
            QuadWeight::Quartic => &self.rule4_x,
            QuadWeight::Quadratic => &self.rule2_x,
        }
    }

    pub fn rule_y(&self, class: QuadWeight) -> &QuadratureRule {
        match class {
            QuadWeight::Quartic => &self.rule4_y,
            QuadWeight::Quadratic => &self.rule2_y,
        }
    }

    fn poly_x(&self, class: QuadWeight) -> &[f64] {
        match class {
            QuadWeight::Quartic => &self.poly4_x,
            QuadWeight::Quadratic => &self.poly2_x,
        }
    }

    fn poly_y(&self, class: QuadWeight) -> &[f64] {
        match class {
            QuadWeight::Quartic => &self.poly4_y,
            QuadWeight::Quadratic => &self.poly2_y,
        }
    }

    /// Hermite-function values at the quartic-rule nodes (`[L x n]` per axis).
    pub fn node_values(&self) -> (&[f64], &[f64]) {
        (&self.fn4_x, &self.fn4_y)
    }

    pub fn eigenvalue(&self, l1: usize, l2: usize) -> f64 {
        self.eigenvalues[l1 * self.spec_y.num_modes + l2]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// True when the other basis has identical truncation and scales.
    pub fn same_discretization(&self, other: &Self) -> bool {
        self.spec_x == other.spec_x && self.spec_y == other.spec_y
    }

    /// Polynomial part of the field at the node grid of the given weight
    /// class: `S[j*ny + m] = sum_{l1 l2} c_{l1 l2} H_{l1}(x_j) H_{l2}(y_m)`.
    pub fn synthesize_poly(&self, coeffs: &[f64], class: QuadWeight) -> Vec<f64> {
        let (l1, l2) = self.dims();
        debug_assert_eq!(coeffs.len(), l1 * l2);
        let px = self.poly_x(class);
        let py = self.poly_y(class);
        let nx = self.rule_x(class).len();
        let ny = self.rule_y(class).len();

        // T[a, m] = sum_b C[a, b] Py[b, m]
        let mut t = vec![0.0; l1 * ny];
        for a in 0..l1 {
            for m in 0..ny {
                let mut acc = 0.0;
                for b in 0..l2 {
                    acc += coeffs[a * l2 + b] * py[b * ny + m];
                }
                t[a * ny + m] = acc;
            }
        }
        // S[j, m] = sum_a Px[a, j] T[a, m]
        let mut s = vec![0.0; nx * ny];
        for j in 0..nx {
            for m in 0..ny {
                let mut acc = 0.0;
                for a in 0..l1 {
                    acc += px[a * nx + j] * t[a * ny + m];
                }
                s[j * ny + m] = acc;
            }
        }
        s
    }

    /// Adjoint of [`Self::synthesize_poly`]: given node-grid values `M`
    /// (which must already include the quadrature weights),
    /// `G[k1*L2 + k2] = sum_{j m} H_{k1}(x_j) M[j, m] H_{k2}(y_m)`.
    ///
    /// This is the node reduction of every gradient and projection
    /// quadrature, so it runs compensated sums in a fixed order.
    pub fn project_nodes(&self, node_values: &[f64], class: QuadWeight) -> Vec<f64> {
        self.project_with(node_values, class, |p, idx| p[idx])
    }

    /// Like [`Self::project_nodes`] but against squared basis rows
    /// (`H_k^2` at nodes), as needed by diagonal curvature terms.
    pub fn project_nodes_squared(&self, node_values: &[f64], class: QuadWeight) -> Vec<f64> {
        self.project_with(node_values, class, |p, idx| p[idx] * p[idx])
    }

    fn project_with(
        &self,
        node_values: &[f64],
        class: QuadWeight,
        row: impl Fn(&[f64], usize) -> f64,
    ) -> Vec<f64> {
        let (l1, l2) = self.dims();
        let px = self.poly_x(class);
        let py = self.poly_y(class);
        let nx = self.rule_x(class).len();
        let ny = self.rule_y(class).len();
        debug_assert_eq!(node_values.len(), nx * ny);

        let mut out = vec![0.0; l1 * l2];
        let mut t = vec![0.0; ny];
        for k1 in 0..l1 {
            for (m, tm) in t.iter_mut().enumerate() {
                let term = |j: usize| row(px, k1 * nx + j) * node_values[j * ny + m];
                *tm = symmetric_pair_sum(nx, term);
            }
            for k2 in 0..l2 {
                let term = |m: usize| row(py, k2 * ny + m) * t[m];
                out[k1 * l2 + k2] = symmetric_pair_sum(ny, term);
            }
        }
        out
    }

    /// Compensated 2D weighted sum `sum_{j m} wx_j wy_m F[j, m]`.
    pub fn integrate_nodes(&self, node_values: &[f64], class: QuadWeight) -> f64 {
        let rx = self.rule_x(class);
        let ry = self.rule_y(class);
        debug_assert_eq!(node_values.len(), rx.len() * ry.len());
        let ny = ry.len();
        let row_sum = |j: usize| {
            let term = |m: usize| ry.weights[m] * node_values[j * ny + m];
            rx.weights[j] * symmetric_pair_sum(ny, term)
        };
        symmetric_pair_sum(rx.len(), row_sum)
    }

    /// Verifies that both rules integrate the highest-degree polynomial
    /// classes the energy produces. Fails only when the truncation is too
    /// small to support the discrete energy (`L = 1`) or the rule
    /// construction degraded.
    pub fn verify_exactness(&self) -> Result<()> {
        for (axis, spec, r4, r2) in [
            ("x", &self.spec_x, &self.rule4_x, &self.rule2_x),
            ("y", &self.spec_y, &self.rule4_y, &self.rule2_y),
        ] {
            let l = spec.num_modes as u32;
            let checks = [
                (r4, 4 * l - 4, "quartic"),
                (r2, 2 * l, "potential"),
            ];
            for (rule, p, label) in checks {
                let exact = gaussian_moment(p, rule.weight_exponent);
                let got = rule.moment(p);
                let rel = (got - exact).abs() / exact.abs();
                if !(rel <= 1e-9) {
                    return Err(GpeError::DegenerateBasis(format!(
                        "{label} moment p={p} on axis {axis} off by {rel:.3e} (L={l})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Compensated sum over a symmetric node range that adds mirrored index
/// pairs first. Basis values at mirrored nodes carry exact parity signs, so
/// odd integrands cancel bit-exactly pair by pair; the iteration then
/// preserves pure-parity coefficient subspaces instead of leaking roundoff
/// into them (which an unstable even direction would amplify).
fn symmetric_pair_sum(n: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    for j in 0..n / 2 {
        acc.add(term(j) + term(n - 1 - j));
    }
    if n % 2 == 1 {
        acc.add(term(n / 2));
    }
    acc.value()
}

/// Discrete Gram matrix of the polynomials `H_l^b` against the weight
/// `exp(-b^2 x^2)`; identity to machine precision.
pub fn discrete_gram(spec: &BasisSpec) -> Result<Vec<f64>> {
    let rule = QuadratureRule::for_weight(spec.node_count(), spec.beta * spec.beta)?;
    let p = hermite_polynomial_values(spec, &rule.nodes);
    let l = spec.num_modes;
    let n = rule.len();
    let mut gram = vec![0.0; l * l];
    for a in 0..l {
        for b in a..l {
            let mut acc = KahanSum::new();
            for j in 0..n {
                acc.add(rule.weights[j] * p[a * n + j] * p[b * n + j]);
            }
            gram[a * l + b] = acc.value();
            gram[b * l + a] = acc.value();
        }
    }
    Ok(gram)
}
