//! Quadrature primitives.
//!
//! Finite intervals use one of four per-panel rules. The Newton-Cotes rules
//! are the *open* variants, so integrands are never evaluated at panel
//! endpoints:
//!
//! | rule               | nodes on [a, b]             | weights / (b - a)             | exact for degree |
//! |--------------------|-----------------------------|-------------------------------|------------------|
//! | `NewtonCotes2`     | a + h/2                     | 1                             | 1                |
//! | `NewtonCotes4`     | a + k h/4, k = 1..3         | (2, -1, 2) / 3                | 3                |
//! | `NewtonCotes6`     | a + k h/6, k = 1..5         | (11, -14, 26, -14, 11) / 20   | 5                |
//! | `GaussLegendre10`  | Gauss-Legendre, 10 points   | Gauss-Legendre                | 19               |
//!
//! Semi-infinite integrals are summed over geometrically growing panels, each
//! one integrated with composite Gauss-Legendre-10.

use crate::error::{FpError, Result};

const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_21,
    0.433_395_394_129_247_19,
    0.679_409_568_299_024_41,
    0.865_063_366_688_984_51,
    0.973_906_528_517_171_72,
];

const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_36,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_59,
    0.066_671_344_308_688_14,
];

const NC4_WEIGHTS: [f64; 3] = [2.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
const NC6_WEIGHTS: [f64; 5] = [11.0 / 20.0, -14.0 / 20.0, 26.0 / 20.0, -14.0 / 20.0, 11.0 / 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureRule {
    NewtonCotes2,
    NewtonCotes4,
    NewtonCotes6,
    GaussLegendre10,
}

impl QuadratureRule {
    pub const ALL: [QuadratureRule; 4] = [
        QuadratureRule::NewtonCotes2,
        QuadratureRule::NewtonCotes4,
        QuadratureRule::NewtonCotes6,
        QuadratureRule::GaussLegendre10,
    ];

    /// Highest polynomial degree integrated exactly on a single panel.
    pub fn degree(self) -> u32 {
        match self {
            QuadratureRule::NewtonCotes2 => 1,
            QuadratureRule::NewtonCotes4 => 3,
            QuadratureRule::NewtonCotes6 => 5,
            QuadratureRule::GaussLegendre10 => 19,
        }
    }

    /// Nominal convergence order of the composite rule.
    pub fn order(self) -> u32 {
        self.degree() + 1
    }

    pub fn nodes_and_weights(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            QuadratureRule::NewtonCotes2 => (vec![0.5], vec![1.0]),
            QuadratureRule::NewtonCotes4 => (
                (1..=3).map(|k| k as f64 / 4.0).collect(),
                NC4_WEIGHTS.to_vec(),
            ),
            QuadratureRule::NewtonCotes6 => (
                (1..=5).map(|k| k as f64 / 6.0).collect(),
                NC6_WEIGHTS.to_vec(),
            ),
            QuadratureRule::GaussLegendre10 => {
                let mut nodes = Vec::with_capacity(10);
                let mut weights = Vec::with_capacity(10);
                for (&n, &w) in GL10_NODES.iter().zip(&GL10_WEIGHTS).rev() {
                    nodes.push(0.5 * (1.0 - n));
                    weights.push(0.5 * w);
                }
                for (&n, &w) in GL10_NODES.iter().zip(&GL10_WEIGHTS) {
                    nodes.push(0.5 * (1.0 + n));
                    weights.push(0.5 * w);
                }
                (nodes, weights)
            }
        }
    }
}

#[inline]
fn eval_checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let value = f(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(FpError::NonFiniteIntegrand { x, value })
    }
}

/// Single-panel approximation of the integral of `f` over `[a, b]`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: QuadratureRule) -> Result<f64> {
    panel(&f, a, b, rule)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: QuadratureRule) -> Result<f64> {
    if !(a <= b) {
        return Err(FpError::Domain(format!("integration bounds must satisfy a <= b, got [{a}, {b}]")));
    }
    let h = b - a;
    if h == 0.0 {
        return Ok(0.0);
    }
    let sum = match rule {
        QuadratureRule::NewtonCotes2 => eval_checked(f, a + 0.5 * h)?,
        QuadratureRule::NewtonCotes4 => {
            let mut s = 0.0;
            for (k, w) in NC4_WEIGHTS.iter().enumerate() {
                s += w * eval_checked(f, a + (k + 1) as f64 * 0.25 * h)?;
            }
            s
        }
        QuadratureRule::NewtonCotes6 => {
            let mut s = 0.0;
            for (k, w) in NC6_WEIGHTS.iter().enumerate() {
                s += w * eval_checked(f, a + (k + 1) as f64 * h / 6.0)?;
            }
            s
        }
        QuadratureRule::GaussLegendre10 => {
            let mid = a + 0.5 * h;
            let half = 0.5 * h;
            let mut s = 0.0;
            for (n, w) in GL10_NODES.iter().zip(&GL10_WEIGHTS) {
                s += w * (eval_checked(f, mid - half * n)? + eval_checked(f, mid + half * n)?);
            }
            0.5 * s
        }
    };
    Ok(sum * h)
}

/// Composite rule over `panels` equal panels.
pub fn integrate_composite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rule: QuadratureRule,
    panels: usize,
) -> Result<f64> {
    if panels == 0 {
        return Err(FpError::Domain("composite quadrature needs at least one panel".into()));
    }
    if !(a <= b) {
        return Err(FpError::Domain(format!("integration bounds must satisfy a <= b, got [{a}, {b}]")));
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let hi = if k + 1 == panels { b } else { a + (k + 1) as f64 * h };
        total += panel(&f, lo, hi, rule)?;
    }
    Ok(total)
}

/// Panel layout for [`integrate_semi_infinite_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiInfiniteOptions {
    /// Width of the first panel; each following panel is twice as wide.
    pub initial_width: f64,
    /// Gauss-Legendre-10 subpanels per geometric panel.
    pub subpanels: usize,
    /// The stopping test is only applied once panels are at least this wide.
    pub min_stop_width: f64,
    pub max_panels: usize,
}

impl Default for SemiInfiniteOptions {
    fn default() -> Self {
        Self {
            initial_width: 0.25,
            subpanels: 4,
            min_stop_width: 1.0,
            max_panels: 200,
        }
    }
}

impl SemiInfiniteOptions {
    pub fn with_initial_width(mut self, w: f64) -> Self {
        self.initial_width = w;
        self
    }
}

/// Integral of `f` over `[a, inf)` with default panel layout.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    integrate_semi_infinite_with(f, a, tol, SemiInfiniteOptions::default())
}

/// Integral of `f` over `[a, inf)`.
///
/// Panels double in width starting from `opts.initial_width`. Summation stops
/// once the latest panel contributes no more than `tol` times the accumulated
/// absolute value.
pub fn integrate_semi_infinite_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
    opts: SemiInfiniteOptions,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(FpError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !a.is_finite() {
        return Err(FpError::Domain(format!("lower bound must be finite, got {a}")));
    }
    if !(opts.initial_width > 0.0) || opts.subpanels == 0 {
        return Err(FpError::Domain("semi-infinite panel layout is degenerate".into()));
    }
    let mut lo = a;
    let mut width = opts.initial_width;
    let mut total = 0.0;
    let mut total_abs = 0.0;
    let mut last = f64::NAN;
    for _ in 0..opts.max_panels {
        let hi = lo + width;
        let inc = integrate_composite(&f, lo, hi, QuadratureRule::GaussLegendre10, opts.subpanels)?;
        total += inc;
        total_abs += inc.abs();
        last = inc;
        if width >= opts.min_stop_width && inc.abs() <= tol * total_abs {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(FpError::QuadratureBudget {
        panels: opts.max_panels,
        accumulated: total,
        last_increment: last,
    })
}
