//! Functionals tracked along a trajectory: discrete relative entropy and its
//! dissipation, Hellinger distance, relative L1 error, the `d_p` family and
//! the moment functional, plus a Wirtinger-type inequality check and a
//! power-law decay fit.

use crate::error::{FpError, Result};
use crate::integrators::NEGATIVITY_TOL;
use crate::models::{DensityModel, FpModel};
use crate::quadrature::{integrate_composite, integrate_semi_infinite_with, QuadratureRule, SemiInfiniteOptions};
use crate::scheme::{Grid, SchemeWeights};

/// Floor applied to log arguments when a density value vanishes.
pub const LOG_FLOOR: f64 = 1e-300;

/// One row of a diagnostic series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub hellinger: f64,
    pub rel_l1: f64,
    pub d_p: Option<f64>,
    pub moment: Option<f64>,
    /// Set when a vanishing value of `f` had to be floored inside a logarithm.
    pub floored: bool,
}

fn check_lengths(f: &[f64], e: &[f64]) -> Result<()> {
    if f.len() != e.len() {
        return Err(FpError::Domain(format!(
            "field has {} values but the reference has {}",
            f.len(),
            e.len()
        )));
    }
    Ok(())
}

fn check_nonnegative(f: &[f64]) -> Result<()> {
    if let Some((node, &min)) = f.iter().enumerate().find(|(_, &v)| v < NEGATIVITY_TOL || v.is_nan()) {
        return Err(FpError::NegativeDensity { step: 0, node, min });
    }
    Ok(())
}

/// `dx * sum f_i log(f_i / e_i)` with `0 log 0 = 0`.
pub fn discrete_entropy(f: &[f64], e: &[f64], dx: f64) -> Result<f64> {
    check_lengths(f, e)?;
    check_nonnegative(f)?;
    let s: f64 = f
        .iter()
        .zip(e)
        .map(|(&fi, &ei)| if fi > 0.0 { fi * (fi / ei).ln() } else { 0.0 })
        .sum();
    Ok(dx * s)
}

/// The dissipation together with a flag telling whether a log argument was floored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    pub value: f64,
    pub floored: bool,
}

/// Interface mean `e_{i+1} e_i log(e_{i+1}/e_i) / (e_{i+1} - e_i)`, equal to
/// `e_i` in the limit of equal values.
pub fn logarithmic_mean_weight(e_i: f64, e_ip1: f64) -> f64 {
    let l = (e_ip1 / e_i).ln();
    if l == 0.0 {
        e_i
    } else {
        e_ip1 * l / l.exp_m1()
    }
}

/// Discrete entropy dissipation
/// `(1/dx) sum_i [log u_{i+1} - log u_i] (u_{i+1} - u_i) e^_i kappa_{i+1/2}`
/// with `u = f / e`. Along exact-weight trajectories `dH/dt = -I`.
pub fn discrete_dissipation(f: &[f64], e: &[f64], w: &SchemeWeights) -> Result<Dissipation> {
    check_lengths(f, e)?;
    check_nonnegative(f)?;
    if f.len() != w.nodes() {
        return Err(FpError::Domain("weights do not match the field".into()));
    }
    let mut floored = false;
    let mut log_u = |fi: f64, ei: f64| {
        if fi > LOG_FLOOR {
            (fi / ei).ln()
        } else {
            floored = true;
            (LOG_FLOOR / ei).ln()
        }
    };
    let mut sum = 0.0;
    let mut left = log_u(f[0], e[0]);
    for i in 0..w.interfaces() {
        let right = log_u(f[i + 1], e[i + 1]);
        let du = f[i + 1].max(0.0) / e[i + 1] - f[i].max(0.0) / e[i];
        sum += (right - left) * du * logarithmic_mean_weight(e[i], e[i + 1]) * w.kappa_half[i];
        left = right;
    }
    Ok(Dissipation {
        value: sum / w.dx,
        floored,
    })
}

/// `sqrt(dx * sum (sqrt f_i - sqrt e_i)^2)`.
pub fn hellinger_distance(f: &[f64], e: &[f64], dx: f64) -> Result<f64> {
    check_lengths(f, e)?;
    check_nonnegative(f)?;
    let s: f64 = f
        .iter()
        .zip(e)
        .map(|(&fi, &ei)| (fi.max(0.0).sqrt() - ei.sqrt()).powi(2))
        .sum();
    Ok((dx * s).sqrt())
}

/// `sum_i |f_i - e_i| / e_i`, without any grid weighting.
pub fn relative_l1_error(f: &[f64], e: &[f64]) -> f64 {
    f.iter().zip(e).map(|(&fi, &ei)| (fi - ei).abs() / ei).sum()
}

/// `dx * sum_i |f_i - e_i| / e_i`.
pub fn relative_l1_error_weighted(f: &[f64], e: &[f64], dx: f64) -> f64 {
    dx * relative_l1_error(f, e)
}

/// `dx * sum [(f_i/e_i)^p - 1]^2 e_i`.
pub fn d_p_functional(f: &[f64], e: &[f64], dx: f64, p: f64) -> Result<f64> {
    check_lengths(f, e)?;
    check_nonnegative(f)?;
    if !(0.5..=1.0).contains(&p) {
        return Err(FpError::Domain(format!("d_p needs p in [1/2, 1], got {p}")));
    }
    let s: f64 = f
        .iter()
        .zip(e)
        .map(|(&fi, &ei)| ((fi.max(0.0) / ei).powf(p) - 1.0).powi(2) * ei)
        .sum();
    Ok(dx * s)
}

/// `dx * sum f_i^{2p} (1 + x_i^2)^{beta (2p - 1)} c^{1 - 2p}`, where `c` is
/// the normalization constant of the reference `c (1 + x^2)^-beta`.
pub fn moment_functional_with_constant(f: &[f64], grid: &Grid, p: f64, beta: f64, c: f64) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(FpError::Domain("field does not match the grid".into()));
    }
    check_nonnegative(f)?;
    if !(p > 0.5 && p <= 1.0) {
        return Err(FpError::Domain(format!("moment functional needs p in (1/2, 1], got {p}")));
    }
    if !(beta > 0.5) || !(c > 0.0) {
        return Err(FpError::Domain(format!("invalid moment parameters beta = {beta}, c = {c}")));
    }
    let q = 2.0 * p;
    let s: f64 = f
        .iter()
        .zip(grid.nodes())
        .map(|(&fi, &x)| fi.max(0.0).powf(q) * (1.0 + x * x).powf(beta * (q - 1.0)))
        .sum();
    Ok(grid.dx() * s * c.powf(1.0 - q))
}

/// Moment functional against the continuous generalized Gaussian `C_b (1+x^2)^-b`.
pub fn moment_functional(f: &[f64], grid: &Grid, p: f64, beta: f64) -> Result<f64> {
    let c = crate::models::generalized_gaussian_constant(beta);
    moment_functional_with_constant(f, grid, p, beta, c)
}

/// Settings for building records along a run.
#[derive(Debug, Clone)]
pub struct DiagnosticContext {
    /// Reference equilibrium, normalized to unit discrete mass.
    pub reference: Vec<f64>,
    pub dx: f64,
    pub p: f64,
    /// `(beta, c)` for the moment functional, when the equilibrium is a generalized Gaussian.
    pub moment: Option<(f64, f64)>,
}

impl DiagnosticContext {
    /// Context for `density` on `grid`. The moment constant is `C_b / Z` with
    /// `Z` the discrete mass of the raw samples, so that the reference is
    /// exactly `c (1 + x^2)^-b` on the nodes.
    pub fn new(density: &DensityModel, grid: &Grid, p: f64) -> Result<Self> {
        let raw = crate::scheme::sample_equilibrium(density, grid)?;
        let z = grid.mass(&raw);
        let reference: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let moment = match density {
            DensityModel::GeneralizedGaussian { beta, c_beta } => Some((*beta, c_beta / z)),
            _ => None,
        };
        Ok(Self {
            reference,
            dx: grid.dx(),
            p,
            moment,
        })
    }

    pub fn record(&self, t: f64, f: &[f64], grid: &Grid, w: &SchemeWeights) -> Result<DiagnosticRecord> {
        let e = &self.reference;
        let dissipation = discrete_dissipation(f, e, w)?;
        let moment = match self.moment {
            Some((beta, c)) if self.p > 0.5 => Some(moment_functional_with_constant(f, grid, self.p, beta, c)?),
            _ => None,
        };
        Ok(DiagnosticRecord {
            t,
            mass: grid.mass(f),
            entropy: discrete_entropy(f, e, self.dx)?,
            dissipation: dissipation.value,
            hellinger: hellinger_distance(f, e, self.dx)?,
            rel_l1: relative_l1_error(f, e),
            d_p: Some(d_p_functional(f, e, self.dx, self.p)?),
            moment,
            floored: dissipation.floored,
        })
    }
}

/// Reference decay profiles compared against the entropy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonFunction {
    /// `(1 + t)^-a`
    ShiftedPower { exponent: f64 },
    /// `exp(-r t)`
    Exponential { rate: f64 },
}

impl ComparisonFunction {
    pub const DEFAULTS: [ComparisonFunction; 2] = [
        ComparisonFunction::ShiftedPower { exponent: 1.0 },
        ComparisonFunction::Exponential { rate: 0.25 },
    ];

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ComparisonFunction::ShiftedPower { exponent } => (1.0 + t).powf(-exponent),
            ComparisonFunction::Exponential { rate } => (-rate * t).exp(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ComparisonFunction::ShiftedPower { exponent } => format!("(1+t)^-{exponent}"),
            ComparisonFunction::Exponential { rate } => format!("exp(-{rate} t)"),
        }
    }

    /// Constant `c` such that `c h(0) = h0`.
    pub fn matching_constant(&self, h0: f64) -> f64 {
        h0 / self.eval(0.0)
    }
}

/// Expectations under an equilibrium density, by quadrature over both half-lines.
fn expectation(density: &DensityModel, g: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let weighted = |x: f64| match density.eval(x) {
        Ok(e) if e > 0.0 => g(x) * e,
        Ok(_) => 0.0,
        Err(_) => f64::NAN,
    };
    match density {
        DensityModel::Tabulated(t) => {
            let (lo, hi) = t.range();
            integrate_composite(weighted, lo, hi, QuadratureRule::GaussLegendre10, 4 * t.xs().len())
        }
        _ => {
            let opts = SemiInfiniteOptions {
                max_panels: 400,
                ..SemiInfiniteOptions::default()
            };
            let pos = integrate_semi_infinite_with(&weighted, 0.0, tol, opts)?;
            let neg = integrate_semi_infinite_with(|z| weighted(-z), 0.0, tol, opts)?;
            Ok(pos + neg)
        }
    }
}

/// Both sides of `E|phi - E phi|^p <= (2p)^p E[kappa^p |phi'|^p]` under the
/// model's equilibrium, with `kappa` the coefficient of the sign drift.
pub fn wirtinger_check<P, D>(model: &FpModel, phi: P, dphi: D, p: f64) -> Result<(f64, f64)>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(p >= 1.0) {
        return Err(FpError::Domain(format!("Wirtinger check needs p >= 1, got {p}")));
    }
    let tol = 1e-10;
    let density = model.density();
    let mean = expectation(density, &|x| phi(x), tol)?;
    let lhs = expectation(density, &|x| (phi(x) - mean).abs().powf(p), tol)?;
    let failure = std::cell::RefCell::new(None);
    let weighted = |x: f64| {
        let d = dphi(x).abs();
        if d == 0.0 {
            return 0.0;
        }
        match density.kappa_heaviside(x) {
            Ok(k) => (k * d).powf(p),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let rhs = expectation(density, &weighted, tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((lhs, (2.0 * p).powf(p) * rhs?))
}

/// Variance of the generalized Gaussian, `1 / (2 beta - 3)` for `beta > 3/2`.
pub fn generalized_gaussian_variance(beta: f64) -> f64 {
    1.0 / (2.0 * beta - 3.0)
}

/// Least-squares fit of `log value` against `log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub first_half_slope: f64,
    pub second_half_slope: f64,
    /// False when the two half-window slopes differ by more than 20%.
    pub power_law: bool,
}

fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(FpError::Domain("decay fit window has no spread in t".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Power-law exponent of `series` over `window = (t_min, t_max)`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 > 0.0 && t1 > t0) {
        return Err(FpError::Domain(format!("degenerate decay window ({t0}, {t1})")));
    }
    let mut pts = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= t0 && *t <= t1) {
        if !(v > 0.0) || !v.is_finite() {
            return Err(FpError::Domain(format!("decay fit needs positive values, got {v} at t = {t}")));
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < 5 {
        return Err(FpError::Domain(format!(
            "decay fit needs at least 5 points in [{t0}, {t1}], found {}",
            pts.len()
        )));
    }
    let (slope, intercept) = least_squares(&pts)?;
    let split = 0.5 * (t0.ln() + t1.ln());
    let (first, second): (Vec<_>, Vec<_>) = pts.iter().partition(|p| p.0 <= split);
    let half_slope = |h: &[(f64, f64)]| if h.len() >= 2 { least_squares(h).map(|r| r.0).ok() } else { None };
    let (a, b) = (half_slope(&first), half_slope(&second));
    let (first_half_slope, second_half_slope) = (a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN));
    let power_law = match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 0.2 * a.abs().max(b.abs()),
        _ => false,
    };
    Ok(DecayFit {
        slope,
        intercept,
        first_half_slope,
        second_half_slope,
        power_law,
    })
}

/// Variance of the standard Gaussian, for symmetry with the generalized family.
pub fn gaussian_variance() -> f64 {
    1.0
}
