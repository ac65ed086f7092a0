//! Run configuration and the experiment driver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::{DiagnosticContext, DiagnosticRecord};
use crate::error::{FpError, Result};
use crate::integrators::{check_time_step, Method, SolverState, Stepper, TimeIntegrator};
use crate::models::{read_two_columns, DensityModel, FpModel, Table, DEFAULT_EPS};
use crate::scheme::{build_weights, discrete_equilibrium, Field, Grid, SchemeWeights, WeightMode};

/// Width parameter `c` of the two-bump initial datum.
pub const BIMODAL_WIDTH: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub enum TestCase {
    Gaussian,
    GeneralizedGaussian,
    /// Equilibrium read from a two-column table file.
    Tabulated(PathBuf),
}

impl TestCase {
    fn label(&self) -> String {
        match self {
            TestCase::Gaussian => "gaussian".into(),
            TestCase::GeneralizedGaussian => "generalized_gaussian".into(),
            TestCase::Tabulated(p) => format!("tabulated:{}", p.display()),
        }
    }
}

impl FromStr for TestCase {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("tabulated:") {
            return Ok(TestCase::Tabulated(PathBuf::from(path)));
        }
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "1" => Ok(TestCase::Gaussian),
            "generalized_gaussian" | "2" => Ok(TestCase::GeneralizedGaussian),
            other => Err(FpError::Config(format!(
                "unknown test '{other}' (expected gaussian, generalized_gaussian or tabulated:<file>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dx^2 / L`.
    Paper,
    /// The stability bound of the chosen integrator.
    Cfl,
    Value(f64),
}

impl DtRule {
    fn label(&self) -> String {
        match self {
            DtRule::Paper => "paper".into(),
            DtRule::Cfl => "cfl".into(),
            DtRule::Value(v) => format!("{v:e}"),
        }
    }
}

impl FromStr for DtRule {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(DtRule::Paper),
            "cfl" => Ok(DtRule::Cfl),
            other => match other.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(DtRule::Value(v)),
                _ => Err(FpError::Config(format!(
                    "dt must be 'paper', 'cfl' or a positive number, got '{s}'"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `nu [exp(-c (x-1)^2) + exp(-c (x+1)^2)]` with unit discrete mass.
    Bimodal,
    Equilibrium,
    /// Two-column file interpolated onto the grid and renormalized.
    Custom(PathBuf),
}

impl InitialCondition {
    fn label(&self) -> String {
        match self {
            InitialCondition::Bimodal => "bimodal".into(),
            InitialCondition::Equilibrium => "equilibrium".into(),
            InitialCondition::Custom(p) => format!("custom:{}", p.display()),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("custom:") {
            return Ok(InitialCondition::Custom(PathBuf::from(path)));
        }
        match s.to_ascii_lowercase().as_str() {
            "bimodal" => Ok(InitialCondition::Bimodal),
            "equilibrium" => Ok(InitialCondition::Equilibrium),
            other => Err(FpError::Config(format!(
                "unknown initial datum '{other}' (expected bimodal, equilibrium or custom:<file>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub test: TestCase,
    pub beta: f64,
    pub eps: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub final_time: f64,
    pub dt_rule: DtRule,
    pub strict_cfl: bool,
    pub integrator: Method,
    pub weights: WeightMode,
    pub initial: InitialCondition,
    pub output_dir: Option<PathBuf>,
    pub record_every: usize,
    pub p: f64,
    pub plots: bool,
}

impl Default for RunConfig {
    /// The Gaussian relaxation test with exact weights.
    fn default() -> Self {
        Self {
            test: TestCase::Gaussian,
            beta: 3.0,
            eps: DEFAULT_EPS,
            half_width: 5.0,
            nodes: 101,
            final_time: 40.0,
            dt_rule: DtRule::Paper,
            strict_cfl: false,
            integrator: Method::Rk4,
            weights: WeightMode::ExactEquilibrium,
            initial: InitialCondition::Bimodal,
            output_dir: None,
            record_every: 50,
            p: 0.75,
            plots: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| FpError::Config(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(FpError::Config(format!("invalid boolean '{value}' for {key}"))),
    }
}

impl RunConfig {
    /// The generalized Gaussian test with Gauss-Legendre weights.
    pub fn generalized_gaussian(beta: f64) -> Self {
        Self {
            test: TestCase::GeneralizedGaussian,
            beta,
            weights: WeightMode::Quadrature(crate::quadrature::QuadratureRule::GaussLegendre10),
            ..Self::default()
        }
    }

    /// Sets one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "test" => self.test = value.parse()?,
            "beta" => self.beta = parse_num(key, value)?,
            "eps" => self.eps = parse_num(key, value)?,
            "l" | "half_width" => self.half_width = parse_num(key, value)?,
            "n" | "nodes" => self.nodes = parse_num(key, value)?,
            "t" | "final_time" => self.final_time = parse_num(key, value)?,
            "dt" | "dt_rule" => self.dt_rule = value.parse()?,
            "strict_cfl" => self.strict_cfl = parse_bool(key, value)?,
            "integrator" => self.integrator = value.parse()?,
            "weights" => self.weights = value.parse()?,
            "initial" => self.initial = value.parse()?,
            "out" | "output_dir" => {
                self.output_dir = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "record_every" => self.record_every = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "plots" => self.plots = parse_bool(key, value)?,
            other => return Err(FpError::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_kv_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| FpError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| FpError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Defaults overridden by the contents of a configuration file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| FpError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_kv_text(&text, path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("eps", self.eps),
            ("L", self.half_width),
            ("T", self.final_time),
            ("p", self.p),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FpError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.nodes < 3 {
            return Err(FpError::Config(format!("N must be at least 3, got {}", self.nodes)));
        }
        if self.record_every == 0 {
            return Err(FpError::Config("record_every must be at least 1".into()));
        }
        if self.test == TestCase::GeneralizedGaussian && self.beta <= 0.5 {
            return Err(FpError::Config(format!("beta must exceed 1/2, got {}", self.beta)));
        }
        if !(0.5..=1.0).contains(&self.p) {
            return Err(FpError::Config(format!("p must lie in [1/2, 1], got {}", self.p)));
        }
        Ok(())
    }

    /// Every field, one `key = value` per line, in a form [`RunConfig::apply_kv_text`] reads back.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let out = self
            .output_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "test = {}", self.test.label());
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "L = {}", self.half_width);
        let _ = writeln!(s, "N = {}", self.nodes);
        let _ = writeln!(s, "T = {}", self.final_time);
        let _ = writeln!(s, "dt = {}", self.dt_rule.label());
        let _ = writeln!(s, "strict_cfl = {}", self.strict_cfl);
        let _ = writeln!(s, "integrator = {}", self.integrator);
        let _ = writeln!(s, "weights = {}", self.weights.label());
        let _ = writeln!(s, "initial = {}", self.initial.label());
        let _ = writeln!(s, "out = {out}");
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "plots = {}", self.plots);
        s
    }

    pub fn density(&self) -> Result<DensityModel> {
        match &self.test {
            TestCase::Gaussian => Ok(DensityModel::gaussian()),
            TestCase::GeneralizedGaussian => DensityModel::generalized_gaussian(self.beta),
            TestCase::Tabulated(path) => DensityModel::from_table_file(path),
        }
    }

    pub fn model(&self) -> Result<FpModel> {
        FpModel::new(self.density()?, self.eps)
    }
}

/// Initial field on `grid`, normalized to unit discrete mass.
pub fn build_initial(config: &RunConfig, grid: &Grid) -> Result<Field> {
    let mut f = match &config.initial {
        InitialCondition::Bimodal => Field::from_fn(grid, |x| {
            (-BIMODAL_WIDTH * (x - 1.0).powi(2)).exp() + (-BIMODAL_WIDTH * (x + 1.0).powi(2)).exp()
        }),
        InitialCondition::Equilibrium => return Ok(Field(discrete_equilibrium(&config.density()?, grid)?)),
        InitialCondition::Custom(path) => {
            let (xs, ys) = read_two_columns(path)?;
            if ys.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(FpError::Config(format!(
                    "initial datum in {} must be nonnegative and finite",
                    path.display()
                )));
            }
            let shifted: Vec<f64> = ys.iter().map(|v| v + 1.0).collect();
            let table = Table::new(xs, shifted)?;
            let vals = grid
                .nodes()
                .iter()
                .map(|&x| table.eval(x).map(|v| v - 1.0))
                .collect::<Result<Vec<_>>>()?;
            Field(vals)
        }
    };
    let mass = grid.mass(&f);
    if !(mass > 0.0) {
        return Err(FpError::Config("initial datum has no mass on the grid".into()));
    }
    f.iter_mut().for_each(|v| *v /= mass);
    Ok(f)
}

/// Everything produced by a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub grid: Grid,
    pub weights: SchemeWeights,
    pub reference: Vec<f64>,
    pub records: Vec<DiagnosticRecord>,
    pub final_field: Field,
    pub dt: f64,
    pub cfl_bound: f64,
    pub steps: usize,
}

impl RunOutput {
    pub fn entropy_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.entropy)).collect()
    }
}

/// Chooses the time step. The `paper` rule is capped at the stability bound
/// in strict mode; an explicit value above the bound is an error in strict mode.
pub fn resolve_dt(config: &RunConfig, grid: &Grid, w: &SchemeWeights) -> Result<(f64, f64)> {
    let probe = TimeIntegrator::new(config.integrator, 1.0)?;
    let bound = probe.cfl_bound(w);
    let dt = match config.dt_rule {
        DtRule::Paper => {
            let paper = grid.dx() * grid.dx() / grid.half_width();
            if config.strict_cfl {
                paper.min(bound)
            } else {
                paper
            }
        }
        DtRule::Cfl => {
            if !bound.is_finite() {
                return Err(FpError::Config(
                    "the CFL bound is unbounded for this problem; give an explicit dt".into(),
                ));
            }
            bound
        }
        DtRule::Value(v) => v,
    };
    let dt = dt.min(config.final_time);
    check_time_step(w, &TimeIntegrator::new(config.integrator, dt)?, config.strict_cfl)?;
    Ok((dt, bound))
}

/// Builds the problem, integrates to `T` and records diagnostics every
/// `record_every` steps and at the final time. Outputs are written when an
/// output directory is configured.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutput> {
    run_experiment_with(config, |_, _| Ok(()))
}

/// [`run_experiment`] with `observer` called on the state after every step.
pub fn run_experiment_with<O>(config: &RunConfig, mut observer: O) -> Result<RunOutput>
where
    O: FnMut(&SolverState, &Grid) -> Result<()>,
{
    config.validate()?;
    let model = config.model()?;
    let grid = Grid::new(config.half_width, config.nodes)?;
    let weights = build_weights(&model, &grid, config.weights)?;
    let (dt, cfl_bound) = resolve_dt(config, &grid, &weights)?;
    let ctx = DiagnosticContext::new(model.density(), &grid, config.p)?;

    let f0 = build_initial(config, &grid)?;
    let mut state = SolverState::new(f0);
    let mut stepper = Stepper::new(grid.len());
    let integ = TimeIntegrator::new(config.integrator, dt)?;

    let steps = ((config.final_time / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut records = vec![ctx.record(0.0, &state.f, &grid, &weights)?];
    for k in 0..steps {
        let last = k + 1 == steps;
        let this = if last {
            TimeIntegrator::new(config.integrator, config.final_time - k as f64 * dt)?
        } else {
            integ
        };
        stepper.step(&mut state, &weights, &this)?;
        state.t = if last { config.final_time } else { (k + 1) as f64 * dt };
        observer(&state, &grid)?;
        if last || (k + 1) % config.record_every == 0 {
            records.push(ctx.record(state.t, &state.f, &grid, &weights)?);
        }
    }
    log::info!(
        "{} steps of {} with dt = {:e} (stability bound {:e}); final rel_l1 = {:e}",
        steps,
        config.integrator,
        dt,
        cfl_bound,
        records.last().map(|r| r.rel_l1).unwrap_or(f64::NAN)
    );

    let output = RunOutput {
        config: config.clone(),
        grid,
        weights,
        reference: ctx.reference,
        records,
        final_field: state.f,
        dt,
        cfl_bound,
        steps,
    };
    if let Some(dir) = &config.output_dir {
        crate::output::emit_outputs(&output, dir)?;
    }
    Ok(output)
}
