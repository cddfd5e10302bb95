//! Experiment pipelines: simulate, predict and analyze, with reproducible
//! CSV/JSON outputs and gnuplot scripts.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, ResolvedExperiment};
use crate::diagnostics::{
    self, conserved_report, ConservedReport, DecayFit, DiagnosticsOptions, DiagnosticsSeries,
};
use crate::dynamics::{
    atoms_euler_simulate, build_generator, euler_simulate, integrate_h, uniform_grid, Method,
    Trajectory, EXPM_MAX_POINTS,
};
use crate::equilibrium::{predict_with_graph, EquilibriumPrediction};
use crate::error::{Error, Result};
use crate::graph::{build_graph, component_count_bound, gap_intervals, InteractionGraph};
use crate::measure::{odd_coordinate, DiscreteMeasure};
use crate::space::SpaceKind;

/// Everything produced by one simulation run, before any file output.
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub resolved: ResolvedExperiment,
    pub mu: DiscreteMeasure,
    pub graph: InteractionGraph,
    pub prediction: EquilibriumPrediction,
    pub trajectory: Trajectory,
    pub diagnostics: DiagnosticsSeries,
    pub report: ConservedReport,
    pub fit: Option<DecayFit>,
    /// Method actually used (expm falls back to rk4 on large spaces).
    pub method_used: Method,
}

impl RunArtifacts {
    pub fn final_measure(&self) -> DiscreteMeasure {
        self.trajectory.measure_at(self.trajectory.len() - 1)
    }

    pub fn final_tv_to_prediction(&self) -> f64 {
        self.diagnostics
            .rows
            .last()
            .map(|r| r.tv_to_prediction)
            .unwrap_or(f64::NAN)
    }
}

/// Run the full pipeline of a config without touching the filesystem.
pub fn execute(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<RunArtifacts> {
    let resolved = config.resolve(base_dir)?;
    if !resolved.initial.is_probability() {
        return Err(Error::NotProbability {
            mass: resolved.initial.total_mass(),
        });
    }
    let mu = resolved.initial.symmetric_part();
    let graph = build_graph(&mu, &resolved.kernel)?;
    let prediction = predict_with_graph(&resolved.initial, &mu, &graph)?;

    let mut method_used = resolved.method;
    if resolved.method == Method::Expm && mu.support().len() > EXPM_MAX_POINTS {
        method_used = Method::Rk4;
    }
    let trajectory = match method_used {
        Method::Euler => {
            if matches!(resolved.space.kind(), SpaceKind::TorusGrid { .. }) {
                euler_simulate(
                    &resolved.initial,
                    &resolved.kernel,
                    resolved.dt,
                    resolved.steps,
                    resolved.snapshot_every,
                )?
            } else {
                atoms_euler_simulate(
                    &resolved.initial,
                    &resolved.kernel,
                    resolved.dt,
                    resolved.steps,
                    resolved.snapshot_every,
                )?
            }
        }
        method => {
            let h0 = odd_coordinate(&resolved.initial, &mu)?;
            let generator = build_generator(&mu, &resolved.kernel)?;
            let grid = uniform_grid(resolved.dt, resolved.steps);
            integrate_h(&h0, &generator, &grid, method)?.subsample(resolved.snapshot_every)
        }
    };
    let series = diagnostics::evaluate(
        &trajectory,
        &mu,
        &graph,
        &prediction,
        &resolved.kernel,
        DiagnosticsOptions {
            wasserstein: resolved.wasserstein,
        },
    )?;
    let report = conserved_report(&series, &mu, &graph)?;
    let fit = diagnostics::fit_decay_rate(&series.relative_entropy_series()).ok();
    Ok(RunArtifacts {
        config: config.clone(),
        resolved,
        mu,
        graph,
        prediction,
        trajectory,
        diagnostics: series,
        report,
        fit,
        method_used,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    method_used: &'static str,
    config: &'a ExperimentConfig,
    summary: RunSummary,
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub snapshots: usize,
    pub component_count: usize,
    pub tv_to_prediction: f64,
    pub mass_drift: f64,
    pub sym_drift: f64,
    pub eta_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_decay_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_r_squared: Option<f64>,
}

pub fn summarize(artifacts: &RunArtifacts) -> RunSummary {
    RunSummary {
        final_time: *artifacts.trajectory.times.last().unwrap_or(&0.0),
        snapshots: artifacts.trajectory.len(),
        component_count: artifacts.graph.component_count(),
        tv_to_prediction: artifacts.final_tv_to_prediction(),
        mass_drift: artifacts.report.mass_drift,
        sym_drift: artifacts.report.sym_drift,
        eta_drift: artifacts.report.eta_drift,
        fitted_decay_rate: artifacts.fit.as_ref().map(|f| f.lambda),
        fit_r_squared: artifacts.fit.as_ref().map(|f| f.r_squared),
    }
}

/// Run a config and write all artifacts into `out_dir`.
pub fn run(
    config: &ExperimentConfig,
    base_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<RunSummary> {
    let artifacts = execute(config, base_dir)?;
    write_outputs(&artifacts, out_dir)?;
    Ok(summarize(&artifacts))
}

pub fn write_outputs(artifacts: &RunArtifacts, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let manifest = Manifest {
        tool: "revsim",
        version: env!("CARGO_PKG_VERSION"),
        method_used: artifacts.method_used.name(),
        config: &artifacts.config,
        summary: summarize(artifacts),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    std::fs::write(
        out_dir.join("snapshots.csv"),
        snapshots_csv(&artifacts.trajectory),
    )?;
    std::fs::write(
        out_dir.join("prediction.csv"),
        prediction_csv(&artifacts.prediction),
    )?;
    write_json(
        &out_dir.join("components.json"),
        &component_report(artifacts)?,
    )?;
    std::fs::write(
        out_dir.join("diagnostics.csv"),
        diagnostics_csv(&artifacts.diagnostics),
    )?;
    std::fs::write(out_dir.join("plots.gp"), plot_script(artifacts))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("json serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn snapshots_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("t,index,coordinate,value\n");
    for j in 0..trajectory.len() {
        let f = trajectory.measure_at(j);
        let t = trajectory.times[j];
        for i in 0..f.space().len() {
            let _ = writeln!(out, "{},{},{},{}", t, i, f.space().coord(i), f.value(i));
        }
    }
    out
}

fn prediction_csv(prediction: &EquilibriumPrediction) -> String {
    let mut out = String::from("index,coordinate,f_infty\n");
    let f = &prediction.f_infty;
    for i in 0..f.space().len() {
        let _ = writeln!(out, "{},{},{}", i, f.space().coord(i), f.value(i));
    }
    out
}

fn diagnostics_csv(series: &DiagnosticsSeries) -> String {
    let mut header = String::from("t,mass_total,mass_upper,mass_lower,H,D,tv_to_finfty");
    let with_w1 = series.rows.first().is_some_and(|r| r.w1_to_prediction.is_some());
    if with_w1 {
        header.push_str(",w1_to_finfty");
    }
    for c in &series.orbit_ids {
        let _ = write!(header, ",H_T_{c},D_T_{c},eta_{c}");
    }
    header.push('\n');
    let mut out = header;
    for r in &series.rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.t, r.mass_total, r.mass_upper, r.mass_lower, r.entropy, r.dissipation,
            r.tv_to_prediction
        );
        if let Some(w1) = r.w1_to_prediction {
            let _ = write!(out, ",{w1}");
        }
        for k in 0..series.orbit_ids.len() {
            let _ = write!(
                out,
                ",{},{},{}",
                r.orbit_entropy[k], r.orbit_dissipation[k], r.orbit_eta[k]
            );
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct ComponentReportEntry {
    id: usize,
    case: String,
    points: Vec<usize>,
    coordinates: Vec<f64>,
    mass: f64,
    eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_lower_bound: Option<f64>,
}

#[derive(Serialize)]
pub struct ComponentReport {
    components: Vec<ComponentReportEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count_bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_intervals: Option<Vec<(f64, f64)>>,
}

pub fn component_report(artifacts: &RunArtifacts) -> Result<ComponentReport> {
    let graph = &artifacts.graph;
    let mu = &artifacts.mu;
    let b = &artifacts.resolved.kernel;
    let mut components = Vec::new();
    for (c, record) in artifacts.prediction.components.iter().enumerate() {
        let bound = match graph.partner_component(c) {
            Some(_) => Some(crate::graph::rate_lower_bound(
                graph.component(c),
                graph.partner_set(c),
                mu,
                b,
            )?),
            None => None,
        };
        components.push(ComponentReportEntry {
            id: c,
            case: record.case.clone(),
            points: record.points.clone(),
            coordinates: record.points.iter().map(|&i| mu.space().coord(i)).collect(),
            mass: record.rho,
            eta: record.eta,
            rate_lower_bound: bound,
        });
    }
    let is_indicator_circle =
        artifacts.config.kernel.kind == "indicator" && mu.space().is_circle();
    let (count_bound, gaps) = if is_indicator_circle {
        let alpha = artifacts.config.kernel.alpha.unwrap_or(0.0);
        (
            Some(component_count_bound(alpha)),
            Some(gap_intervals(mu, alpha)?),
        )
    } else {
        (None, None)
    };
    Ok(ComponentReport {
        components,
        count_bound,
        gap_intervals: gaps,
    })
}

fn plot_script(artifacts: &RunArtifacts) -> String {
    let orbit_cols: Vec<String> = artifacts
        .diagnostics
        .orbit_ids
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let base = 8 + if artifacts.resolved.wasserstein { 1 } else { 0 };
            format!(
                "    'diagnostics.csv' using 1:{} with lines title 'H_T {c}', \\\n",
                base + 3 * k
            )
        })
        .collect();
    format!(
        "# gnuplot script: entropy decay, conserved masses, final state\n\
         set datafile separator ','\n\
         set key outside\n\
         set terminal pngcairo size 1200,420\n\
         set output 'entropy.png'\n\
         set logscale y\n\
         set xlabel 't'\n\
         set ylabel 'H'\n\
         plot 'diagnostics.csv' using 1:5 with lines title 'H', \\\n\
         {}    'diagnostics.csv' using 1:6 with lines title 'D'\n\
         unset logscale y\n\
         set output 'masses.png'\n\
         set ylabel 'mass'\n\
         plot 'diagnostics.csv' using 1:2 with lines title 'total', \\\n\
         \x20   'diagnostics.csv' using 1:3 with lines title 'upper half', \\\n\
         \x20   'diagnostics.csv' using 1:4 with lines title 'lower half'\n\
         set output 'final_state.png'\n\
         set xlabel 'x'\n\
         set ylabel 'f'\n\
         plot '< tail -n {} snapshots.csv' using 3:4 with points pt 7 ps 0.4 \
         title 'f(T)', \\\n\
         \x20   'prediction.csv' using 2:3 with lines title 'f_infty'\n",
        orbit_cols.concat(),
        artifacts.resolved.space.len(),
    )
}

/// Prediction pipeline: equilibrium CSV plus the component report.
pub fn predict(
    config: &ExperimentConfig,
    base_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let artifacts = analyze_artifacts(config, base_dir)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("prediction.csv"),
        prediction_csv(&artifacts.prediction),
    )?;
    write_json(
        &out_dir.join("components.json"),
        &component_report(&artifacts)?,
    )?;
    Ok(())
}

/// Graph analysis pipeline: the component report as a JSON string (also
/// written to `out_dir` when given).
pub fn analyze(
    config: &ExperimentConfig,
    base_dir: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<String> {
    let artifacts = analyze_artifacts(config, base_dir)?;
    let report = component_report(&artifacts)?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Internal(format!("json serialization failed: {e}")))?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("components.json"), format!("{text}\n"))?;
    }
    Ok(text)
}

/// Build everything except the trajectory (used by predict/analyze).
fn analyze_artifacts(
    config: &ExperimentConfig,
    base_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    let resolved = config.resolve(base_dir)?;
    if !resolved.initial.is_probability() {
        return Err(Error::NotProbability {
            mass: resolved.initial.total_mass(),
        });
    }
    let mu = resolved.initial.symmetric_part();
    let graph = build_graph(&mu, &resolved.kernel)?;
    let prediction = predict_with_graph(&resolved.initial, &mu, &graph)?;
    let trajectory = Trajectory {
        times: vec![0.0],
        states: crate::dynamics::TrajectoryStates::Grid {
            space: std::sync::Arc::clone(&resolved.space),
            densities: vec![resolved.initial.values().to_vec()],
        },
    };
    let series = diagnostics::evaluate(
        &trajectory,
        &mu,
        &graph,
        &prediction,
        &resolved.kernel,
        DiagnosticsOptions::default(),
    )?;
    let report = conserved_report(&series, &mu, &graph)?;
    Ok(RunArtifacts {
        config: config.clone(),
        resolved,
        mu,
        graph,
        prediction,
        trajectory,
        diagnostics: series,
        report,
        fit: None,
        method_used: Method::Euler,
    })
}
