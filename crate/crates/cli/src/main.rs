//! Command-line runner for the relaxation experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fpsp::diagnostics::fit_decay_rate;
use fpsp::{run_experiment, FpError, RunConfig, RunOutput};

/// Structure-preserving Fokker-Planck relaxation experiments.
///
/// Settings are resolved in order: built-in defaults, then the `--config`
/// file (flat `key = value` lines), then command-line flags.
#[derive(Debug, Parser)]
#[command(name = "fpsp", version)]
struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian, generalized_gaussian or tabulated:<file>.
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Drift smoothing in tanh(x / eps).
    #[arg(long)]
    eps: Option<f64>,
    /// Half-width of the domain [-L, L].
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Number of grid nodes.
    #[arg(long = "N")]
    nodes: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// paper (dx^2/L), cfl, or a positive number.
    #[arg(long)]
    dt: Option<String>,
    /// rk4, ssp-rk3 or implicit-euler.
    #[arg(long)]
    integrator: Option<String>,
    /// sp2, sp4, sp6, spG or exact.
    #[arg(long)]
    weights: Option<String>,
    /// bimodal, equilibrium or custom:<file>.
    #[arg(long)]
    initial: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Exponent of the d_p and moment functionals.
    #[arg(long)]
    p: Option<f64>,
    /// Cap or reject time steps above the stability bound.
    #[arg(long)]
    strict_cfl: bool,
    /// Also write SVG charts.
    #[arg(long)]
    plots: bool,
    /// Run the generalized Gaussian test for each listed beta, concurrently.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    sweep_beta: Option<Vec<f64>>,
    /// Repeat the run for eps in {0.1, 0.01, 0.001}.
    #[arg(long)]
    sweep_eps: bool,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        put("test", self.test.clone());
        put("beta", self.beta.map(|x| x.to_string()));
        put("eps", self.eps.map(|x| x.to_string()));
        put("L", self.half_width.map(|x| x.to_string()));
        put("N", self.nodes.map(|x| x.to_string()));
        put("T", self.final_time.map(|x| x.to_string()));
        put("dt", self.dt.clone());
        put("integrator", self.integrator.clone());
        put("weights", self.weights.clone());
        put("initial", self.initial.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("record_every", self.record_every.map(|x| x.to_string()));
        put("p", self.p.map(|x| x.to_string()));
        if self.strict_cfl {
            put("strict_cfl", Some("true".into()));
        }
        if self.plots {
            put("plots", Some("true".into()));
        }
        v
    }

    fn resolve(&self) -> Result<RunConfig, FpError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for (k, v) in self.overrides() {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One configuration per sweep member, each writing into its own subdirectory.
fn expand_sweeps(cli: &Cli, base: &RunConfig) -> Vec<(String, RunConfig)> {
    let betas: Vec<Option<f64>> = match &cli.sweep_beta {
        Some(b) => b.iter().map(|&b| Some(b)).collect(),
        None => vec![None],
    };
    let epss: Vec<Option<f64>> = if cli.sweep_eps {
        [0.1, 0.01, 0.001].into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let mut runs = Vec::new();
    for beta in &betas {
        for eps in &epss {
            let mut cfg = base.clone();
            let mut parts = Vec::new();
            if let Some(b) = beta {
                cfg.test = fpsp::experiment::TestCase::GeneralizedGaussian;
                cfg.beta = *b;
                parts.push(format!("beta_{b}"));
            }
            if let Some(e) = eps {
                cfg.eps = *e;
                parts.push(format!("eps_{e}"));
            }
            let name = parts.join("_");
            if let Some(dir) = &base.output_dir {
                if !name.is_empty() {
                    cfg.output_dir = Some(dir.join(&name));
                }
            }
            runs.push((name, cfg));
        }
    }
    runs
}

fn summarize(name: &str, out: &RunOutput) {
    let last = out.records.last().expect("a run records at least its initial state");
    let prefix = if name.is_empty() { String::new() } else { format!("[{name}] ") };
    println!(
        "{prefix}t = {} steps = {} dt = {:.6e} mass = {:.16e} entropy = {:.6e} rel_l1 = {:.6e} hellinger = {:.6e}",
        last.t, out.steps, out.dt, last.mass, last.entropy, last.rel_l1, last.hellinger
    );
    let t_end = out.config.final_time;
    if let Ok(fit) = fit_decay_rate(&out.entropy_series(), (t_end / 8.0, t_end)) {
        println!(
            "{prefix}entropy decay slope over [{}, {}]: {:.4}{}",
            t_end / 8.0,
            t_end,
            fit.slope,
            if fit.power_law { "" } else { " (not a clean power law)" }
        );
    }
}

fn exit_code(e: &FpError) -> ExitCode {
    if e.is_numerical() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn report(name: &str, e: &FpError) {
    if name.is_empty() {
        eprintln!("error: {e}");
    } else {
        eprintln!("error in {name}: {e}");
    }
}

/// Runs every configured experiment; errors are reported as they are found.
fn run(cli: &Cli) -> Result<(), FpError> {
    let base = cli.resolve().inspect_err(|e| report("", e))?;
    let runs = expand_sweeps(cli, &base);
    if runs.len() == 1 {
        let (name, cfg) = &runs[0];
        let out = run_experiment(cfg).inspect_err(|e| report(name, e))?;
        summarize(name, &out);
        return Ok(());
    }
    let results: Vec<(String, Result<RunOutput, FpError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = runs
            .iter()
            .map(|(name, cfg)| (name.clone(), s.spawn(move || run_experiment(cfg))))
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| (name, h.join().expect("sweep worker panicked")))
            .collect()
    });
    let mut first_error = None;
    for (name, res) in results {
        match res {
            Ok(out) => summarize(&name, &out),
            Err(e) => {
                report(&name, &e);
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_code(&e),
    }
}

