//! Drift, equilibrium densities and the diffusion coefficients built from them.
//!
//! For an even density `e` with distribution function `F`, the coefficient
//! paired with the sign drift is
//!
//! ```text
//! kappa(x) = (1 - F(|x|)) / e(x)
//! ```
//!
//! and the coefficient paired with `tanh(x / eps)` is
//!
//! ```text
//! kappa_eps(x) = (1 / e(x)) * int_{|x|}^inf tanh(y / eps) e(y) dy,
//! ```
//!
//! which makes `e` the zero-flux steady state:
//! `d/dx [kappa_eps e] + tanh(x / eps) e = 0`.
//!
//! For the two analytic families the tail integrals are evaluated after a
//! change of variables that removes the division by a small `e(x)`:
//! `y^2 = x^2 + z^2` for the Gaussian and `1 + y^2 = (1 + x^2)(1 + z^2)` for
//! the generalized Gaussian.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use statrs::function::gamma::ln_gamma;

use crate::error::{FpError, Result};
use crate::quadrature::{
    integrate_composite, integrate_semi_infinite_with, QuadratureRule, SemiInfiniteOptions,
};

/// Tolerance used for every coefficient integral.
pub const COEFFICIENT_TOL: f64 = 1e-12;

/// Default drift smoothing.
pub const DEFAULT_EPS: f64 = 0.01;

/// `tanh(x / eps)`.
pub fn drift_theta(x: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(FpError::Domain(format!("drift smoothing eps must be positive, got {eps}")));
    }
    Ok(theta(x, eps))
}

#[inline]
pub(crate) fn theta(x: f64, eps: f64) -> f64 {
    (x / eps).tanh()
}

/// Normalization constant of the generalized Gaussian `C_b (1 + x^2)^-b`.
pub fn generalized_gaussian_constant(beta: f64) -> f64 {
    (ln_gamma(beta) - ln_gamma(beta - 0.5)).exp() / PI.sqrt()
}

/// `int_0^inf (1 + z^2)^-b dz`, the upper-bound constant for the
/// generalized Gaussian coefficient.
pub fn gamma_beta(beta: f64) -> f64 {
    (PI / 4.0).sqrt() * (ln_gamma(beta - 0.5) - ln_gamma(beta)).exp()
}

/// Upper bound on the Gaussian coefficient: `min(sqrt(pi/2), 1/|x|)`.
pub fn gaussian_kappa_bound(x: f64) -> f64 {
    let flat = (PI / 2.0).sqrt();
    if x == 0.0 {
        flat
    } else {
        flat.min(1.0 / x.abs())
    }
}

/// Pointwise bounds `(lower, upper)` on the generalized Gaussian coefficient.
pub fn generalized_gaussian_kappa_bounds(beta: f64, x: f64) -> (f64, f64) {
    let s = (1.0 + x * x).sqrt();
    (s / (2.0 * beta - 1.0), gamma_beta(beta) * s)
}

/// A tabulated density with piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<f64>,
    /// Exact integral of the interpolant from `xs[0]` to `xs[k]`.
    cdf: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(FpError::Domain("table columns differ in length".into()));
        }
        if xs.len() < 3 {
            return Err(FpError::Domain("a density table needs at least 3 rows".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FpError::Domain("table abscissae must be strictly increasing".into()));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(FpError::Domain("table densities must be positive and finite".into()));
        }
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for k in 1..xs.len() {
            let prev = cdf[k - 1];
            cdf.push(prev + 0.5 * (xs[k] - xs[k - 1]) * (values[k] + values[k - 1]));
        }
        Ok(Self { xs, values, cdf })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf[self.cdf.len() - 1]
    }

    fn cell(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(FpError::OutOfTable { x, lo, hi });
        }
        let k = self.xs.partition_point(|&t| t <= x);
        Ok(k.saturating_sub(1).min(self.xs.len() - 2))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let k = self.cell(x)?;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let s = (x - x0) / (x1 - x0);
        Ok(self.values[k] * (1.0 - s) + self.values[k + 1] * s)
    }

    /// Integral of the interpolant from the left end of the table to `x`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let k = self.cell(x)?;
        let ex = self.eval(x)?;
        Ok(self.cdf[k] + 0.5 * (x - self.xs[k]) * (self.values[k] + ex))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel {
    Gaussian,
    GeneralizedGaussian { beta: f64, c_beta: f64 },
    Tabulated(Table),
}

impl DensityModel {
    pub fn gaussian() -> Self {
        DensityModel::Gaussian
    }

    pub fn generalized_gaussian(beta: f64) -> Result<Self> {
        if !(beta > 0.5) || !beta.is_finite() {
            return Err(FpError::Domain(format!(
                "generalized Gaussian needs beta > 1/2 to be normalizable, got {beta}"
            )));
        }
        Ok(DensityModel::GeneralizedGaussian {
            beta,
            c_beta: generalized_gaussian_constant(beta),
        })
    }

    /// A tabulated density. The table must be even on its nodes and carry
    /// unit mass under the trapezoidal rule.
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let table = Table::new(xs, values)?;
        let mass = table.total_mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(FpError::Domain(format!(
                "tabulated density must have unit trapezoidal mass, got {mass}"
            )));
        }
        let peak = table.values.iter().cloned().fold(0.0, f64::max);
        let (lo, hi) = table.range();
        for (&x, &v) in table.xs.iter().zip(&table.values) {
            if -x >= lo && -x <= hi {
                let mirror = table.eval(-x)?;
                if (mirror - v).abs() > 1e-12 * peak {
                    return Err(FpError::Domain(format!(
                        "tabulated density is not even: e({x}) = {v}, e({}) = {mirror}",
                        -x
                    )));
                }
            }
        }
        Ok(DensityModel::Tabulated(table))
    }

    /// Reads a whitespace-separated two-column `(x, e(x))` file. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let (xs, values) = read_two_columns(path.as_ref())?;
        DensityModel::tabulated(xs, values)
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            DensityModel::GeneralizedGaussian { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    /// Normalization constant of the analytic families (`1/sqrt(2 pi)` or `C_b`).
    pub fn normalization(&self) -> Option<f64> {
        match self {
            DensityModel::Gaussian => Some(1.0 / (2.0 * PI).sqrt()),
            DensityModel::GeneralizedGaussian { c_beta, .. } => Some(*c_beta),
            DensityModel::Tabulated(_) => None,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(FpError::Domain(format!("density evaluated at non-finite x = {x}")));
        }
        Ok(match self {
            DensityModel::Gaussian => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            DensityModel::GeneralizedGaussian { beta, c_beta } => c_beta * (1.0 + x * x).powf(-beta),
            DensityModel::Tabulated(t) => t.eval(x)?,
        })
    }

    /// `d/dx log e(x)`; tabulated densities have no smooth derivative.
    pub fn log_derivative(&self, x: f64) -> Result<f64> {
        match self {
            DensityModel::Gaussian => Ok(-x),
            DensityModel::GeneralizedGaussian { beta, .. } => Ok(-2.0 * beta * x / (1.0 + x * x)),
            DensityModel::Tabulated(_) => Err(FpError::Unsupported(
                "tabulated densities have no smooth log-derivative".into(),
            )),
        }
    }

    /// Total mass, by semi-infinite quadrature for the analytic families.
    pub fn mass(&self) -> Result<f64> {
        match self {
            DensityModel::Tabulated(t) => Ok(t.total_mass()),
            _ => {
                let half = integrate_semi_infinite_with(
                    |y| self.eval(y).unwrap_or(f64::NAN),
                    0.0,
                    COEFFICIENT_TOL,
                    SemiInfiniteOptions::default(),
                )?;
                Ok(2.0 * half)
            }
        }
    }

    /// The coefficient paired with the sign drift.
    pub fn kappa_heaviside(&self, x: f64) -> Result<f64> {
        match self {
            DensityModel::Tabulated(t) => {
                let e = t.eval(x)?;
                let cdf = t.cdf(x)?;
                let tail = if x < 0.0 { cdf } else { t.total_mass() - cdf };
                Ok(tail / e)
            }
            _ => self.substitution_integral(x, None),
        }
    }

    /// Tail integral `int_{|x|}^inf w(y) e(y) dy / e(x)` after the
    /// family-specific substitution, with `w = tanh(. / eps)` or `w = 1`.
    fn substitution_integral(&self, x: f64, eps: Option<f64>) -> Result<f64> {
        if !x.is_finite() {
            return Err(FpError::Domain(format!("coefficient evaluated at non-finite x = {x}")));
        }
        let ax = x.abs();
        let weight = |y: f64| match eps {
            Some(eps) => theta(y, eps),
            None => 1.0,
        };
        let opts = SemiInfiniteOptions::default().with_initial_width(layer_width(ax, eps));
        match self {
            DensityModel::Gaussian => {
                let x2 = ax * ax;
                integrate_semi_infinite_with(
                    |z| {
                        let y = (z * z + x2).sqrt();
                        weight(y) * (z / y) * (-0.5 * z * z).exp()
                    },
                    0.0,
                    COEFFICIENT_TOL,
                    opts,
                )
            }
            DensityModel::GeneralizedGaussian { beta, .. } => {
                let x2 = ax * ax;
                let beta = *beta;
                integrate_semi_infinite_with(
                    |z| {
                        let y = (x2 + z * z * (1.0 + x2)).sqrt();
                        weight(y) * z * (1.0 + x2) / y * (1.0 + z * z).powf(-beta)
                    },
                    0.0,
                    COEFFICIENT_TOL,
                    opts,
                )
            }
            DensityModel::Tabulated(_) => unreachable!("tabulated densities use cumulative sums"),
        }
    }
}

/// First-panel width for the substitution integrals: fine enough to resolve
/// the `z ~ |x|` corner of `z / y(z)` and the `z ~ eps` tanh layer.
fn layer_width(ax: f64, eps: Option<f64>) -> f64 {
    let mut w: f64 = 0.25;
    if let Some(eps) = eps {
        w = w.min(eps / 4.0);
    }
    if ax > 0.0 {
        w = w.min((ax / 2.0).max(1e-10));
    }
    w
}

pub(crate) fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| FpError::io(path, e))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| FpError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let mut cols = line.split_whitespace();
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(format!("expected two columns, got `{line}`")));
        };
        let a: f64 = a.parse().map_err(|e| parse_err(format!("{e}: `{a}`")))?;
        let b: f64 = b.parse().map_err(|e| parse_err(format!("{e}: `{b}`")))?;
        xs.push(a);
        ys.push(b);
    }
    Ok((xs, ys))
}

/// Cell-wise integrals of `|tanh(y/eps)| e(y)` over a density table.
#[derive(Debug, Clone, PartialEq)]
struct WeightedTableCdf {
    cdf: Vec<f64>,
}

const TABLE_LAYER_PANELS: usize = 64;

fn table_weighted_integral(t: &Table, eps: f64, a: f64, b: f64) -> Result<f64> {
    // resolve the tanh layer when the interval touches it
    let panels = if a.abs().min(b.abs()) < 10.0 * eps || (a < 0.0 && b > 0.0) {
        TABLE_LAYER_PANELS
    } else {
        1
    };
    integrate_composite(
        |y| theta(y, eps).abs() * t.eval(y).unwrap_or(f64::NAN),
        a,
        b,
        QuadratureRule::GaussLegendre10,
        panels,
    )
}

impl WeightedTableCdf {
    fn new(t: &Table, eps: f64) -> Result<Self> {
        let mut cdf = Vec::with_capacity(t.xs.len());
        cdf.push(0.0);
        for k in 1..t.xs.len() {
            let prev = cdf[k - 1];
            cdf.push(prev + table_weighted_integral(t, eps, t.xs[k - 1], t.xs[k])?);
        }
        Ok(Self { cdf })
    }

    fn total(&self) -> f64 {
        self.cdf[self.cdf.len() - 1]
    }

    fn at(&self, t: &Table, eps: f64, x: f64) -> Result<f64> {
        let k = t.cell(x)?;
        Ok(self.cdf[k] + table_weighted_integral(t, eps, t.xs[k], x)?)
    }
}

/// The full problem: drift smoothing, equilibrium density and the derived
/// diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct FpModel {
    eps: f64,
    density: DensityModel,
    m_eps: f64,
    table_cdf: Option<WeightedTableCdf>,
}

impl FpModel {
    pub fn new(density: DensityModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(FpError::Domain(format!("drift smoothing eps must be positive, got {eps}")));
        }
        let table_cdf = match &density {
            DensityModel::Tabulated(t) => Some(WeightedTableCdf::new(t, eps)?),
            _ => None,
        };
        let m_eps = match &table_cdf {
            Some(c) => c.total(),
            None => m_eps(&density, eps, COEFFICIENT_TOL)?,
        };
        if !(m_eps > 0.0 && m_eps < 1.0) {
            return Err(FpError::Domain(format!("m_eps must lie in (0, 1), got {m_eps}")));
        }
        Ok(Self {
            eps,
            density,
            m_eps,
            table_cdf,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn density(&self) -> &DensityModel {
        &self.density
    }

    pub fn m_eps(&self) -> f64 {
        self.m_eps
    }

    pub fn theta(&self, x: f64) -> f64 {
        theta(x, self.eps)
    }

    pub fn kappa_heaviside(&self, x: f64) -> Result<f64> {
        self.density.kappa_heaviside(x)
    }

    /// Diffusion coefficient for the tanh drift.
    pub fn kappa_eps(&self, x: f64) -> Result<f64> {
        match (&self.density, &self.table_cdf) {
            (DensityModel::Tabulated(t), Some(c)) => {
                let e = t.eval(x)?;
                let below = c.at(t, self.eps, x)?;
                let tail = if x < 0.0 { below } else { c.total() - below };
                Ok(tail / e)
            }
            _ => self.density.substitution_integral(x, Some(self.eps)),
        }
    }

    /// `kappa_eps'(x) = -theta(x) - kappa_eps(x) * (log e)'(x)`.
    pub fn kappa_eps_prime(&self, x: f64) -> Result<f64> {
        Ok(self.kappa_eps_with_prime(x)?.1)
    }

    /// `(kappa_eps(x), kappa_eps'(x))` from a single coefficient integral.
    pub fn kappa_eps_with_prime(&self, x: f64) -> Result<(f64, f64)> {
        let dlog = self.density.log_derivative(x)?;
        let k = self.kappa_eps(x)?;
        Ok((k, -self.theta(x) - k * dlog))
    }

    /// Residual of the zero-flux identity `d/dx[kappa_eps e] + theta e` with
    /// the derivative taken by the product rule.
    pub fn stationarity_residual(&self, x: f64) -> Result<f64> {
        let (k, kp) = self.kappa_eps_with_prime(x)?;
        let e = self.density.eval(x)?;
        let de = e * self.density.log_derivative(x)?;
        Ok(kp * e + k * de + self.theta(x) * e)
    }

    /// `(min, max)` of `kappa_eps / kappa` over the sample points.
    pub fn sandwich_constants(&self, xs: &[f64]) -> Result<(f64, f64)> {
        sandwich_ratio_bounds(xs, |x| self.kappa_eps(x), |x| self.kappa_heaviside(x))
    }

    /// Largest sampled values of `|theta|/(1+|x|)` and `kappa_eps/(1+|x|)`.
    pub fn regularity_bounds(&self, xs: &[f64]) -> Result<(f64, f64)> {
        let mut drift: f64 = 0.0;
        let mut diffusion: f64 = 0.0;
        for &x in xs {
            let w = 1.0 + x.abs();
            drift = drift.max(self.theta(x).abs() / w);
            diffusion = diffusion.max(self.kappa_eps(x)? / w);
        }
        Ok((drift, diffusion))
    }
}

/// `(min, max)` of `num(x) / den(x)` over `xs`.
pub fn sandwich_ratio_bounds<N, D>(xs: &[f64], num: N, den: D) -> Result<(f64, f64)>
where
    N: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    if xs.is_empty() {
        return Err(FpError::Domain("sandwich constants need at least one sample".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        let d = den(x)?;
        if !(d > 0.0) {
            return Err(FpError::Domain(format!("reference coefficient vanishes at x = {x}")));
        }
        let r = num(x)? / d;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// `int |tanh(y/eps)| e(y) dy` over the line.
pub fn m_eps(density: &DensityModel, eps: f64, tol: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(FpError::Domain(format!("drift smoothing eps must be positive, got {eps}")));
    }
    match density {
        DensityModel::Tabulated(t) => Ok(WeightedTableCdf::new(t, eps)?.total()),
        _ => {
            let opts = SemiInfiniteOptions::default().with_initial_width(layer_width(0.0, Some(eps)));
            let half = integrate_semi_infinite_with(
                |y| theta(y, eps) * density.eval(y).unwrap_or(f64::NAN),
                0.0,
                tol,
                opts,
            )?;
            Ok(2.0 * half)
        }
    }
}
