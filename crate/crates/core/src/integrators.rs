//! Time advancement of the semi-discrete system `df/dt = A f`.
//!
//! Every method forms the full step increment first and adds it to the state
//! with compensated summation, so the per-step rounding of `f + df` does not
//! accumulate into a drift of the discrete mass over long runs.

use std::fmt;
use std::str::FromStr;

use crate::error::{FpError, Result};
use crate::scheme::{rhs_into, Field, SchemeWeights};

/// Values below this are treated as a positivity violation.
pub const NEGATIVITY_TOL: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk4,
    SspRk3,
    ImplicitEuler,
}

impl Method {
    pub fn is_explicit(self) -> bool {
        !matches!(self, Method::ImplicitEuler)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::SspRk3 => "ssp-rk3",
            Method::ImplicitEuler => "implicit-euler",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rk4" => Ok(Method::Rk4),
            "ssp-rk3" | "ssprk3" => Ok(Method::SspRk3),
            "implicit-euler" | "backward-euler" => Ok(Method::ImplicitEuler),
            other => Err(FpError::Config(format!(
                "unknown integrator '{other}' (expected rk4, ssp-rk3 or implicit-euler)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegrator {
    pub method: Method,
    pub dt: f64,
}

impl TimeIntegrator {
    pub fn new(method: Method, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FpError::Config(format!("time step must be positive and finite, got {dt}")));
        }
        Ok(Self { method, dt })
    }

    /// Same method with a different step, used for the final partial step.
    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.method, dt)
    }

    /// The stability bound that applies to this method.
    pub fn cfl_bound(&self, w: &SchemeWeights) -> f64 {
        if self.method.is_explicit() {
            cfl_dt_explicit(w, w.dx)
        } else {
            cfl_dt_implicit(w, w.dx)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub f: Field,
    pub step_count: usize,
    /// Running compensation term of the increment summation.
    compensation: Vec<f64>,
}

impl SolverState {
    pub fn new(f: Field) -> Self {
        let n = f.len();
        Self {
            t: 0.0,
            f,
            step_count: 0,
            compensation: vec![0.0; n],
        }
    }

    pub fn mass(&self, dx: f64) -> f64 {
        dx * self.f.iter().sum::<f64>()
    }
}

/// `dx^2 / (2 (M dx + D))` with `M = max |C|` and `D = max kappa`.
pub fn cfl_dt_explicit(w: &SchemeWeights, dx: f64) -> f64 {
    let (m, d) = w.max_drift_and_diffusion();
    cfl_explicit_formula(m, d, dx)
}

/// `dx / (2 M)`; infinite when there is no drift.
pub fn cfl_dt_implicit(w: &SchemeWeights, dx: f64) -> f64 {
    let (m, _) = w.max_drift_and_diffusion();
    cfl_implicit_formula(m, dx)
}

pub fn cfl_explicit_formula(m: f64, d: f64, dx: f64) -> f64 {
    dx * dx / (2.0 * (m * dx + d))
}

pub fn cfl_implicit_formula(m: f64, dx: f64) -> f64 {
    if m == 0.0 {
        f64::INFINITY
    } else {
        dx / (2.0 * m)
    }
}

/// Checks `dt` against the method's bound. In strict mode a violation is an
/// error; otherwise it is logged and the step is allowed.
pub fn check_time_step(w: &SchemeWeights, integ: &TimeIntegrator, strict: bool) -> Result<f64> {
    let bound = integ.cfl_bound(w);
    if integ.dt > bound {
        if strict {
            return Err(FpError::CflViolation { dt: integ.dt, bound });
        }
        log::warn!(
            "time step {:e} exceeds the {} CFL bound {:e}; positivity is not guaranteed",
            integ.dt,
            integ.method,
            bound
        );
    }
    Ok(bound)
}

/// Returns the state advanced by one step of `integ`.
pub fn advance(state: &SolverState, w: &SchemeWeights, integ: &TimeIntegrator) -> Result<SolverState> {
    let mut next = state.clone();
    let mut stepper = Stepper::new(w.nodes());
    stepper.step(&mut next, w, integ)?;
    Ok(next)
}

/// Scratch storage reused across steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    stage: Vec<f64>,
    k: [Vec<f64>; 4],
    increment: Vec<f64>,
}

impl Stepper {
    pub fn new(n: usize) -> Self {
        Self {
            stage: vec![0.0; n],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            increment: vec![0.0; n],
        }
    }

    /// Advances `state` in place by one step.
    pub fn step(&mut self, state: &mut SolverState, w: &SchemeWeights, integ: &TimeIntegrator) -> Result<()> {
        let n = state.f.len();
        if n != w.nodes() {
            return Err(FpError::Domain(format!(
                "field has {n} nodes but weights were built for {}",
                w.nodes()
            )));
        }
        if self.increment.len() != n {
            *self = Stepper::new(n);
        }
        let dt = integ.dt;
        match integ.method {
            Method::Rk4 => self.rk4_increment(&state.f, w, dt),
            Method::SspRk3 => self.ssp_rk3_increment(&state.f, w, dt),
            Method::ImplicitEuler => self.implicit_euler_increment(&state.f, w, dt)?,
        }
        let step = state.step_count + 1;
        if self.increment.iter().any(|v| !v.is_finite()) {
            return Err(FpError::NonFiniteState { step });
        }
        for ((fi, ci), &di) in state.f.iter_mut().zip(state.compensation.iter_mut()).zip(&self.increment) {
            let y = di - *ci;
            let t = *fi + y;
            *ci = (t - *fi) - y;
            *fi = t;
        }
        state.t += dt;
        state.step_count = step;
        let (node, min) = state.f.min();
        if min < NEGATIVITY_TOL {
            return Err(FpError::NegativeDensity { step, node, min });
        }
        Ok(())
    }

    fn stage_from(&mut self, f: &[f64], dt: f64, src: usize) {
        for ((s, &fi), &ki) in self.stage.iter_mut().zip(f).zip(&self.k[src]) {
            *s = fi + dt * ki;
        }
    }

    fn rk4_increment(&mut self, f: &[f64], w: &SchemeWeights, dt: f64) {
        rhs_into(f, w, &mut self.k[0]);
        self.stage_from(f, 0.5 * dt, 0);
        rhs_into(&self.stage, w, &mut self.k[1]);
        self.stage_from(f, 0.5 * dt, 1);
        rhs_into(&self.stage, w, &mut self.k[2]);
        self.stage_from(f, dt, 2);
        rhs_into(&self.stage, w, &mut self.k[3]);
        let [k1, k2, k3, k4] = &self.k;
        for i in 0..f.len() {
            self.increment[i] = dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// Shu-Osher SSP-RK3 written in increment form:
    /// `u1 = u + dt k1`, `u2 = u + dt (k1 + k2) / 4`,
    /// `u_new = u + dt (k1 + k2 + 4 k3) / 6`.
    fn ssp_rk3_increment(&mut self, f: &[f64], w: &SchemeWeights, dt: f64) {
        rhs_into(f, w, &mut self.k[0]);
        self.stage_from(f, dt, 0);
        rhs_into(&self.stage, w, &mut self.k[1]);
        for i in 0..f.len() {
            self.stage[i] = f[i] + 0.25 * dt * (self.k[0][i] + self.k[1][i]);
        }
        rhs_into(&self.stage, w, &mut self.k[2]);
        let [k1, k2, k3, _] = &self.k;
        for i in 0..f.len() {
            self.increment[i] = dt / 6.0 * (k1[i] + k2[i] + 4.0 * k3[i]);
        }
    }

    /// Solves `(I - dt A) d = dt A f`, so that `f + d = (I - dt A)^-1 f`.
    fn implicit_euler_increment(&mut self, f: &[f64], w: &SchemeWeights, dt: f64) -> Result<()> {
        rhs_into(f, w, &mut self.k[0]);
        let (lower, diag, upper) = w.tridiagonal();
        let a: Vec<f64> = lower.iter().map(|v| -dt * v).collect();
        let b: Vec<f64> = diag.iter().map(|v| 1.0 - dt * v).collect();
        let c: Vec<f64> = upper.iter().map(|v| -dt * v).collect();
        let rhs: Vec<f64> = self.k[0].iter().map(|v| dt * v).collect();
        let d = solve_tridiagonal(&a, &b, &c, &rhs)?;
        self.increment.copy_from_slice(&d);
        Ok(())
    }
}

/// Thomas algorithm for `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
/// `a[0]` and `c[n-1]` are ignored.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || d.len() != n || n == 0 {
        return Err(FpError::Domain("tridiagonal bands have inconsistent lengths".into()));
    }
    let scale = b.iter().chain(a).chain(c).fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = f64::EPSILON * scale;
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut pivot = b[0];
    if !(pivot.abs() > tiny) {
        return Err(FpError::SingularSystem { row: 0, pivot });
    }
    cp[0] = c[0] / pivot;
    dp[0] = d[0] / pivot;
    for i in 1..n {
        pivot = b[i] - a[i] * cp[i - 1];
        if !(pivot.abs() > tiny) {
            return Err(FpError::SingularSystem { row: i, pivot });
        }
        cp[i] = if i + 1 < n { c[i] / pivot } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / pivot;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}
