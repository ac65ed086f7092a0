//! Files written after a run: diagnostic series, final solution, entropy
//! comparison curves, run manifest and optional SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use plotters::prelude::*;

use crate::diagnostics::ComparisonFunction;
use crate::error::{FpError, Result};
use crate::experiment::RunOutput;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SOLUTION_FILE: &str = "solution.csv";
pub const COMPARISON_FILE: &str = "entropy_comparison.csv";
pub const MANIFEST_FILE: &str = "run_manifest.txt";
pub const ENTROPY_PLOT: &str = "entropy.svg";
pub const SOLUTION_PLOT: &str = "solution.svg";

/// Round-trippable decimal form with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_optional(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn csv_error(path: &Path, e: csv::Error) -> FpError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FpError::io(path, io),
        other => FpError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FpError::io(path, e))
}

/// Writes every output file of `run` into `dir`, creating it if needed.
pub fn emit_outputs(run: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| FpError::io(dir, e))?;

    write_csv(
        &dir.join(DIAGNOSTICS_FILE),
        &["t", "mass", "entropy", "dissipation", "hellinger", "rel_l1", "d_p", "moment"],
        run.records.iter().map(|r| {
            vec![
                format_number(r.t),
                format_number(r.mass),
                format_number(r.entropy),
                format_number(r.dissipation),
                format_number(r.hellinger),
                format_number(r.rel_l1),
                format_optional(r.d_p),
                format_optional(r.moment),
            ]
        }),
    )?;

    write_csv(
        &dir.join(SOLUTION_FILE),
        &["x", "f", "e"],
        run.grid
            .nodes()
            .iter()
            .zip(run.final_field.iter())
            .zip(&run.reference)
            .map(|((x, f), e)| vec![format_number(*x), format_number(*f), format_number(*e)]),
    )?;

    let h0 = run.records.first().map(|r| r.entropy).unwrap_or(0.0);
    let curves = ComparisonFunction::DEFAULTS;
    let constants: Vec<f64> = curves.iter().map(|h| h.matching_constant(h0)).collect();
    let labels: Vec<String> = curves.iter().map(|h| h.label()).collect();
    let mut header = vec!["t", "entropy"];
    header.extend(labels.iter().map(String::as_str));
    write_csv(
        &dir.join(COMPARISON_FILE),
        &header,
        run.records.iter().map(|r| {
            let mut row = vec![format_number(r.t), format_number(r.entropy)];
            row.extend(curves.iter().zip(&constants).map(|(h, c)| format_number(c * h.eval(r.t))));
            row
        }),
    )?;

    let mut manifest = run.config.manifest();
    let _ = writeln!(manifest, "# resolved");
    let _ = writeln!(manifest, "# dx = {}", format_number(run.grid.dx()));
    let _ = writeln!(manifest, "# dt = {}", format_number(run.dt));
    let _ = writeln!(manifest, "# cfl_bound = {}", format_number(run.cfl_bound));
    let _ = writeln!(manifest, "# steps = {}", run.steps);
    for (label, c) in labels.iter().zip(&constants) {
        let _ = writeln!(manifest, "# comparison {label}: c = {}", format_number(*c));
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| FpError::io(&path, e))?;

    if run.config.plots {
        plot_entropy(run, &dir.join(ENTROPY_PLOT))?;
        plot_solution(run, &dir.join(SOLUTION_PLOT))?;
    }
    Ok(())
}

fn plot_error(path: &Path, e: impl std::fmt::Display) -> FpError {
    FpError::io(path, std::io::Error::other(e.to_string()))
}

/// Entropy against time on a logarithmic vertical axis, with the comparison curves.
pub fn plot_entropy(run: &RunOutput, path: &Path) -> Result<()> {
    let pts: Vec<(f64, f64)> = run.entropy_series().into_iter().filter(|p| p.1 > 0.0).collect();
    if pts.is_empty() {
        return Ok(());
    }
    let h0 = run.records[0].entropy;
    let t_max = run.config.final_time;
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).max(1e-300);
    let hi = pts.iter().map(|p| p.1).fold(0.0, f64::max) * 2.0;

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_error(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("relative entropy", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..t_max, (lo..hi).log_scale())
        .map_err(|e| plot_error(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc("H")
        .draw()
        .map_err(|e| plot_error(path, e))?;
    chart
        .draw_series(LineSeries::new(pts.iter().copied(), &BLUE))
        .map_err(|e| plot_error(path, e))?
        .label("H")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    for (h, color) in ComparisonFunction::DEFAULTS.iter().zip([RED, GREEN]) {
        let c = h.matching_constant(h0);
        let curve = pts.iter().map(|p| (p.0, (c * h.eval(p.0)).max(lo)));
        chart
            .draw_series(LineSeries::new(curve, &color))
            .map_err(|e| plot_error(path, e))?
            .label(h.label())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    root.present().map_err(|e| plot_error(path, e))
}

/// Final solution overlaid on the reference equilibrium.
pub fn plot_solution(run: &RunOutput, path: &Path) -> Result<()> {
    let xs = run.grid.nodes();
    let top = run
        .final_field
        .iter()
        .chain(&run.reference)
        .fold(0.0f64, |m, &v| m.max(v))
        * 1.1;
    let l = run.grid.half_width();

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_error(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("solution at t = {}", run.config.final_time), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(-l..l, 0.0..top.max(1e-300))
        .map_err(|e| plot_error(path, e))?;
    chart.configure_mesh().x_desc("x").draw().map_err(|e| plot_error(path, e))?;
    chart
        .draw_series(LineSeries::new(xs.iter().copied().zip(run.reference.iter().copied()), &RED))
        .map_err(|e| plot_error(path, e))?
        .label("e")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RED));
    chart
        .draw_series(LineSeries::new(xs.iter().copied().zip(run.final_field.iter().copied()), &BLUE))
        .map_err(|e| plot_error(path, e))?
        .label("f")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    root.present().map_err(|e| plot_error(path, e))
}
