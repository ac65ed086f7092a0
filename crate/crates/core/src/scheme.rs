//! Structure-preserving spatial discretization.
//!
//! Node-centred cells on a uniform grid, interfaces at the midpoints, and the
//! numerical flux
//!
//! ```text
//! F_{i+1/2} = C_{i+1/2} [(1 - d_{i+1/2}) f_{i+1} + d_{i+1/2} f_i]
//!           + k_{i+1/2} (f_{i+1} - f_i) / dx
//! ```
//!
//! with `C = k lambda / dx` and the exponential-fitting weight
//! `d = 1/lambda + 1/(1 - exp(lambda))`. `lambda` is the cell integral of
//! `(theta + kappa_eps') / kappa_eps`, which for the continuous problem equals
//! `log e(x_i) - log e(x_{i+1})`. The semi-discrete update is
//! `df_i/dt = (F_{i+1/2} - F_{i-1/2}) / dx` with zero flux through both ends,
//! a direct discretization of `f_t = (kappa_eps f_x + (theta + kappa_eps') f)_x`.

use std::ops::{Deref, DerefMut};

use crate::error::{FpError, Result};
use crate::models::{DensityModel, FpModel};
use crate::quadrature::{integrate_finite, QuadratureRule};

/// Uniform grid of `n` nodes on `[-half_width, half_width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_width: f64,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(FpError::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(FpError::Domain(format!("grid needs at least 3 nodes, got {n}")));
        }
        let dx = 2.0 * half_width / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        // pin the ends and the centre so that odd grids are exactly symmetric
        for i in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        nodes[0] = -half_width;
        nodes[n - 1] = half_width;
        Ok(Self { half_width, dx, nodes })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interfaces(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `x_i + dx/2`.
    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.nodes[i] + self.nodes[i + 1])
    }

    /// Discrete mass `dx * sum(values)`.
    pub fn mass(&self, values: &[f64]) -> f64 {
        self.dx * values.iter().sum::<f64>()
    }
}

pub fn build_grid(half_width: f64, n: usize) -> Result<Grid> {
    Grid::new(half_width, n)
}

/// Cell values `f_i`, one per grid node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Field(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }
}

impl Deref for Field {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

/// The equilibrium density sampled at the grid nodes.
pub fn sample_equilibrium(density: &DensityModel, grid: &Grid) -> Result<Vec<f64>> {
    grid.nodes().iter().map(|&x| density.eval(x)).collect()
}

/// Equilibrium samples rescaled to unit discrete mass. This is the exact
/// steady state of the scheme in exact-equilibrium mode, and the reference
/// used by every diagnostic.
pub fn discrete_equilibrium(density: &DensityModel, grid: &Grid) -> Result<Vec<f64>> {
    let mut e = sample_equilibrium(density, grid)?;
    let mass = grid.mass(&e);
    e.iter_mut().for_each(|v| *v /= mass);
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightMode {
    /// `lambda` by per-cell quadrature of `(theta + kappa_eps') / kappa_eps`.
    Quadrature(QuadratureRule),
    /// `lambda = log(e_i / e_{i+1})` from the sampled equilibrium.
    ExactEquilibrium,
}

impl WeightMode {
    pub fn label(self) -> &'static str {
        match self {
            WeightMode::Quadrature(QuadratureRule::NewtonCotes2) => "sp2",
            WeightMode::Quadrature(QuadratureRule::NewtonCotes4) => "sp4",
            WeightMode::Quadrature(QuadratureRule::NewtonCotes6) => "sp6",
            WeightMode::Quadrature(QuadratureRule::GaussLegendre10) => "spG",
            WeightMode::ExactEquilibrium => "exact",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sp2" => WeightMode::Quadrature(QuadratureRule::NewtonCotes2),
            "sp4" => WeightMode::Quadrature(QuadratureRule::NewtonCotes4),
            "sp6" => WeightMode::Quadrature(QuadratureRule::NewtonCotes6),
            "spG" | "spg" => WeightMode::Quadrature(QuadratureRule::GaussLegendre10),
            "exact" => WeightMode::ExactEquilibrium,
            other => return Err(FpError::Config(format!("unknown weight mode `{other}`"))),
        })
    }
}

/// Per-interface quantities; index `i` is the interface between nodes `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeWeights {
    pub dx: f64,
    pub lambda: Vec<f64>,
    pub c: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa_half: Vec<f64>,
    pub mode: WeightMode,
}

impl SchemeWeights {
    pub fn interfaces(&self) -> usize {
        self.lambda.len()
    }

    pub fn nodes(&self) -> usize {
        self.lambda.len() + 1
    }

    /// `max |C|` and `max kappa` over interfaces.
    pub fn max_drift_and_diffusion(&self) -> (f64, f64) {
        let m = self.c.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let d = self.kappa_half.iter().fold(0.0f64, |a, &k| a.max(k));
        (m, d)
    }

    /// Flux coefficients `(a_i, b_i)` with `F_{i+1/2} = a_i f_{i+1} + b_i f_i`.
    fn flux_coefficients(&self, i: usize) -> (f64, f64) {
        let k = self.kappa_half[i] / self.dx;
        let c = self.c[i];
        let d = self.delta[i];
        (c * (1.0 - d) + k, c * d - k)
    }

    /// The rhs as a tridiagonal matrix `(lower, diag, upper)`; `lower[0]` and
    /// `upper[n-1]` are zero.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.nodes();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..self.interfaces() {
            let (a, b) = self.flux_coefficients(i);
            // F_i enters row i with +1/dx and row i+1 with -1/dx
            upper[i] += a / self.dx;
            diag[i] += b / self.dx;
            diag[i + 1] -= a / self.dx;
            lower[i + 1] -= b / self.dx;
        }
        (lower, diag, upper)
    }
}

/// Exponential-fitting weight `1/lambda + 1/(1 - e^lambda)`.
///
/// Uses the odd Bernoulli series for `|lambda| < 0.1`; the closed form loses
/// about `1e-16 / lambda^2` to cancellation there.
pub fn delta_from_lambda(lambda: f64) -> f64 {
    if lambda.abs() < 0.1 {
        let l2 = lambda * lambda;
        0.5 - lambda / 12.0 * (1.0 - l2 / 60.0 * (1.0 - l2 / 42.0 * (1.0 - l2 / 40.0)))
    } else {
        // expm1 overflows to +inf for large lambda, giving 1/lambda -> 0;
        // for lambda -> -inf it tends to -1, giving 1 + 1/lambda -> 1
        1.0 / lambda - 1.0 / lambda.exp_m1()
    }
}

/// Weight that preserves the sampled equilibrium exactly:
/// `1/(log e_i - log e_{i+1}) + e_{i+1}/(e_{i+1} - e_i)`.
pub fn delta_exact(e_i: f64, e_ip1: f64) -> Result<f64> {
    if !(e_i > 0.0 && e_ip1 > 0.0) {
        return Err(FpError::Domain(format!(
            "equilibrium values must be positive, got ({e_i}, {e_ip1})"
        )));
    }
    let lambda = e_i.ln() - e_ip1.ln();
    if lambda.abs() < 1e-10 {
        return Ok(0.5);
    }
    Ok(delta_from_lambda(lambda))
}

/// Cell integral of `(theta + kappa_eps') / kappa_eps` over `[x_i, x_{i+1}]`.
pub fn compute_lambda(model: &FpModel, grid: &Grid, i: usize, rule: QuadratureRule) -> Result<f64> {
    if i + 1 >= grid.len() {
        return Err(FpError::Domain(format!("interface {i} out of range for {} nodes", grid.len())));
    }
    let a = grid.nodes()[i];
    let b = grid.nodes()[i + 1];
    // the integrand closure cannot return errors, so surface the first one afterwards
    let failure = std::cell::RefCell::new(None);
    let value = integrate_finite(
        |y| match model.kappa_eps_with_prime(y) {
            Ok((k, kp)) => (model.theta(y) + kp) / k,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        rule,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    value
}

pub fn build_weights(model: &FpModel, grid: &Grid, mode: WeightMode) -> Result<SchemeWeights> {
    let dx = grid.dx();
    let m = grid.interfaces();
    let kappa_half = (0..m)
        .map(|i| model.kappa_eps(grid.midpoint(i)))
        .collect::<Result<Vec<_>>>()?;
    let (lambda, delta) = match mode {
        WeightMode::Quadrature(rule) => {
            let lambda = (0..m)
                .map(|i| compute_lambda(model, grid, i, rule))
                .collect::<Result<Vec<_>>>()?;
            let delta = lambda.iter().map(|&l| delta_from_lambda(l)).collect();
            (lambda, delta)
        }
        WeightMode::ExactEquilibrium => {
            let e = sample_equilibrium(model.density(), grid)?;
            let lambda: Vec<f64> = e.windows(2).map(|w| w[0].ln() - w[1].ln()).collect();
            let delta = e
                .windows(2)
                .map(|w| delta_exact(w[0], w[1]))
                .collect::<Result<Vec<_>>>()?;
            (lambda, delta)
        }
    };
    let c = lambda
        .iter()
        .zip(&kappa_half)
        .map(|(&l, &k)| k * l / dx)
        .collect();
    Ok(SchemeWeights {
        dx,
        lambda,
        c,
        delta,
        kappa_half,
        mode,
    })
}

/// Flux through interface `i` (between nodes `i` and `i + 1`).
pub fn numerical_flux(f: &[f64], w: &SchemeWeights, i: usize) -> f64 {
    let (fi, fj) = (f[i], f[i + 1]);
    w.c[i] * ((1.0 - w.delta[i]) * fj + w.delta[i] * fi) + w.kappa_half[i] * (fj - fi) / w.dx
}

/// Semi-discrete right-hand side with zero flux at both ends.
pub fn rhs(f: &[f64], w: &SchemeWeights) -> Field {
    let mut out = Field::zeros(f.len());
    rhs_into(f, w, &mut out);
    out
}

pub fn rhs_into(f: &[f64], w: &SchemeWeights, out: &mut [f64]) {
    debug_assert_eq!(f.len(), w.nodes());
    debug_assert_eq!(out.len(), f.len());
    let mut left = 0.0;
    for i in 0..w.interfaces() {
        let right = numerical_flux(f, w, i);
        out[i] = (right - left) / w.dx;
        left = right;
    }
    out[f.len() - 1] = -left / w.dx;
}
