//! Built-in experiment library: the torus figure setups, the atomic
//! examples with closed-form behaviour, and two degeneracy probes.
//!
//! Scenario specs are written `name` or `name(arg, ...)`, e.g.
//! `epsilon_family(0.1)` or `three_dirac(1e-3, 0.2495, 0.2495)`.

use std::f64::consts::PI;

use crate::config::{
    DiagnosticsConfig, ExperimentConfig, InitialConfig, IntegratorConfig, KernelConfig,
    OutputConfig, SpaceConfig,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub parameters: &'static str,
    pub summary: &'static str,
}

/// The built-in scenarios, with their parameter signatures.
pub fn scenario_library() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "fig1",
            parameters: "",
            summary: "torus n=202, asymmetric density positive everywhere; one component, \
                      converges to the symmetric equilibrium (euler, dt=0.01, 1000 steps)",
        },
        ScenarioInfo {
            name: "fig3",
            parameters: "",
            summary: "torus n=202, two weighted bumps plus a small bridge; one component, \
                      converges to the symmetric equilibrium (euler, dt=0.1, 5000 steps)",
        },
        ScenarioInfo {
            name: "fig4",
            parameters: "",
            summary: "torus n=202, bumps on (pi/4,3pi/4) and (-3pi/4,-pi/4) with masses \
                      0.7/0.3; two components, converges to 2 rho murestricted (euler, \
                      dt=0.01, 250 steps)",
        },
        ScenarioInfo {
            name: "epsilon_family",
            parameters: "(eps = 0.1)",
            summary: "two atoms at 0 and pi/2+eps; closed-form solution with decay rate 1",
        },
        ScenarioInfo {
            name: "three_dirac",
            parameters: "(alpha, beta, gamma = 1/6, 1/6, 1/6; alpha+beta+gamma = 1/2)",
            summary: "three atoms at 0, 2pi/3, -2pi/3; 3x3 linear system with explicit \
                      characteristic polynomial",
        },
        ScenarioInfo {
            name: "four_atoms",
            parameters: "",
            summary: "four atoms spaced pi/2 apart; every point is its own component and \
                      the solution is constant",
        },
        ScenarioInfo {
            name: "gap_interval",
            parameters: "",
            summary: "21-point grid on [-1,1] with the gap kernel; components {x<0}, {0}, \
                      {x>0} (degeneracy probe)",
        },
        ScenarioInfo {
            name: "truncated_components",
            parameters: "(k = 3)",
            summary: "k interval cells [1/(2k+1), 1/(2k)] and their reflections, pairwise \
                      non-interacting (degeneracy probe)",
        },
    ]
}

/// Parse `name` or `name(a, b, ...)` and build the scenario config.
pub fn build_scenario(spec: &str) -> Result<ExperimentConfig> {
    let spec = spec.trim();
    let (name, args) = match spec.find('(') {
        None => (spec, Vec::new()),
        Some(open) => {
            if !spec.ends_with(')') {
                return Err(Error::InvalidArgument(format!(
                    "malformed scenario spec `{spec}`"
                )));
            }
            let name = &spec[..open];
            let inner = &spec[open + 1..spec.len() - 1];
            let args: std::result::Result<Vec<f64>, _> = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect();
            (
                name,
                args.map_err(|e| {
                    Error::InvalidArgument(format!("bad scenario argument in `{spec}`: {e}"))
                })?,
            )
        }
    };
    match name {
        "fig1" => no_args(&args, "fig1").map(|_| fig1()),
        "fig3" => no_args(&args, "fig3").map(|_| fig3()),
        "fig4" => no_args(&args, "fig4").map(|_| fig4()),
        "epsilon_family" => {
            let eps = one_arg(&args, 0.1)?;
            if eps <= 0.0 || eps >= PI / 2.0 {
                return Err(Error::InvalidArgument(format!(
                    "epsilon_family needs eps in (0, pi/2), got {eps}"
                )));
            }
            Ok(epsilon_family(eps))
        }
        "three_dirac" => {
            let (a, b, g) = match args.len() {
                0 => (1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0),
                3 => (args[0], args[1], args[2]),
                n => {
                    return Err(Error::InvalidArgument(format!(
                        "three_dirac takes 0 or 3 arguments, got {n}"
                    )))
                }
            };
            three_dirac(a, b, g)
        }
        "four_atoms" => no_args(&args, "four_atoms").map(|_| four_atoms()),
        "gap_interval" => no_args(&args, "gap_interval").map(|_| gap_interval()),
        "truncated_components" => {
            let k = one_arg(&args, 3.0)?;
            if k < 1.0 || k.fract() != 0.0 || k > 20.0 {
                return Err(Error::InvalidArgument(
                    "truncated_components needs an integer k in 1..=20".into(),
                ));
            }
            Ok(truncated_components(k as usize))
        }
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn no_args(args: &[f64], name: &str) -> Result<()> {
    if args.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} takes no arguments"
        )))
    }
}

fn one_arg(args: &[f64], default: f64) -> Result<f64> {
    match args.len() {
        0 => Ok(default),
        1 => Ok(args[0]),
        n => Err(Error::InvalidArgument(format!(
            "expected at most one argument, got {n}"
        ))),
    }
}

const FIG_N: usize = 202;

fn grid_coords() -> Vec<f64> {
    (0..2 * FIG_N)
        .map(|k| (k as f64 - FIG_N as f64) * PI / FIG_N as f64)
        .collect()
}

fn normalize_to_probability(values: &mut [f64]) {
    let w = PI / FIG_N as f64;
    let total: f64 = values.iter().sum::<f64>() * w;
    values.iter_mut().for_each(|v| *v /= total);
}

fn grid_config(
    values: Vec<f64>,
    method: &str,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        space: SpaceConfig {
            kind: "torus_grid".into(),
            n: Some(FIG_N),
            angles: None,
            points: None,
        },
        kernel: KernelConfig {
            kind: "indicator".into(),
            alpha: Some(PI / 2.0),
            ramp: None,
            table_file: None,
            table: None,
        },
        initial: InitialConfig {
            kind: "grid_density".into(),
            values: Some(values),
            values_file: None,
            atoms: None,
        },
        integrator: IntegratorConfig {
            method: method.into(),
            dt,
            steps,
            snapshot_every,
        },
        diagnostics: DiagnosticsConfig::default(),
        output: OutputConfig::default(),
    }
}

fn atoms_config(
    angles: Vec<f64>,
    atoms: Vec<(f64, f64)>,
    method: &str,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        space: SpaceConfig {
            kind: "atomic_circle".into(),
            n: None,
            angles: Some(angles),
            points: None,
        },
        kernel: KernelConfig {
            kind: "indicator".into(),
            alpha: Some(PI / 2.0),
            ramp: None,
            table_file: None,
            table: None,
        },
        initial: InitialConfig {
            kind: "atoms".into(),
            values: None,
            values_file: None,
            atoms: Some(atoms),
        },
        integrator: IntegratorConfig {
            method: method.into(),
            dt,
            steps,
            snapshot_every,
        },
        diagnostics: DiagnosticsConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Positive everywhere, asymmetric through the third odd mode, so the slow
/// first mode is absent and the run converges well within 1000 steps.
fn fig1() -> ExperimentConfig {
    let mut values: Vec<f64> = grid_coords()
        .iter()
        .map(|&phi| 1.0 + 0.5 * (3.0 * phi).sin())
        .collect();
    normalize_to_probability(&mut values);
    grid_config(values, "euler", 0.01, 1000, 10)
}

fn bump(phi: f64, lo: f64, hi: f64) -> f64 {
    if phi > lo && phi < hi {
        let s = (PI * (phi - lo) / (hi - lo)).sin();
        s * s
    } else {
        0.0
    }
}

/// Bumps on the two quarter arcs plus a small bridge inside (-pi/4, pi/4)
/// that makes the graph connected.
fn fig3() -> ExperimentConfig {
    let coords = grid_coords();
    let w = PI / FIG_N as f64;
    let mut plus: Vec<f64> = coords
        .iter()
        .map(|&p| bump(p, PI / 4.0, 3.0 * PI / 4.0))
        .collect();
    let mut minus: Vec<f64> = coords
        .iter()
        .map(|&p| bump(p, -3.0 * PI / 4.0, -PI / 4.0))
        .collect();
    let mut bridge: Vec<f64> = coords
        .iter()
        .map(|&p| bump(p, -PI / 8.0, PI / 8.0))
        .collect();
    for (profile, target) in [(&mut plus, 0.55), (&mut minus, 0.42), (&mut bridge, 0.03)] {
        let mass: f64 = profile.iter().sum::<f64>() * w;
        profile.iter_mut().for_each(|v| *v *= target / mass);
    }
    let values: Vec<f64> = (0..coords.len())
        .map(|k| plus[k] + minus[k] + bridge[k])
        .collect();
    grid_config(values, "euler", 0.1, 5000, 50)
}

/// Two-component setup with masses 0.7 / 0.3 plus a mean-free deviation
/// that decays at the pointwise rate 1.
fn fig4() -> ExperimentConfig {
    let coords = grid_coords();
    let w = PI / FIG_N as f64;
    let eps = 0.015;
    // Symmetric profile m with unit mass, half on each quarter arc.
    let mut profile: Vec<f64> = coords
        .iter()
        .map(|&p| bump(p, PI / 4.0, 3.0 * PI / 4.0) + bump(p, -3.0 * PI / 4.0, -PI / 4.0))
        .collect();
    let mass: f64 = profile.iter().sum::<f64>() * w;
    profile.iter_mut().for_each(|v| *v /= mass);
    let values: Vec<f64> = coords
        .iter()
        .zip(&profile)
        .map(|(&p, &m)| {
            if p > PI / 4.0 && p < 3.0 * PI / 4.0 {
                m * (2.0 * 0.7 + eps * (4.0 * (p - PI / 4.0)).sin())
            } else if p > -3.0 * PI / 4.0 && p < -PI / 4.0 {
                m * (2.0 * 0.3 - eps * (4.0 * (p + 3.0 * PI / 4.0)).sin())
            } else {
                0.0
            }
        })
        .collect();
    grid_config(values, "euler", 0.01, 250, 5)
}

fn epsilon_family(eps: f64) -> ExperimentConfig {
    atoms_config(
        vec![0.0, PI / 2.0 + eps],
        vec![(0.0, 0.5), (PI / 2.0 + eps, 0.5)],
        "expm",
        0.05,
        160,
        1,
    )
}

fn three_dirac(alpha: f64, beta: f64, gamma: f64) -> Result<ExperimentConfig> {
    if alpha <= 0.0 || beta <= 0.0 || gamma <= 0.0 {
        return Err(Error::InvalidArgument(
            "three_dirac needs positive alpha, beta, gamma".into(),
        ));
    }
    if (alpha + beta + gamma - 0.5).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "three_dirac needs alpha + beta + gamma = 1/2, got {}",
            alpha + beta + gamma
        )));
    }
    Ok(atoms_config(
        vec![0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0],
        vec![
            (0.0, 2.0 * alpha),
            (2.0 * PI / 3.0, 2.0 * beta),
            (-2.0 * PI / 3.0, 2.0 * gamma),
        ],
        "expm",
        0.25,
        160,
        1,
    ))
}

fn four_atoms() -> ExperimentConfig {
    let phi = 0.3;
    atoms_config(
        vec![phi, phi + PI / 2.0],
        vec![
            (phi, 0.4),
            (phi + PI / 2.0, 0.25),
            (phi + PI, 0.2),
            (phi - PI / 2.0, 0.15),
        ],
        "expm",
        0.1,
        50,
        1,
    )
}

/// Gap kernel on a 21-point interval grid; the central point never
/// collides and the two sides relax with degenerating rates.
fn gap_interval() -> ExperimentConfig {
    let points: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let atoms: Vec<(f64, f64)> = points.iter().map(|&x| (x, 1.0 + 0.5 * x)).collect();
    let total: f64 = atoms.iter().map(|&(_, m)| m).sum();
    let atoms = atoms
        .into_iter()
        .map(|(x, m)| (x, m / total))
        .collect::<Vec<_>>();
    ExperimentConfig {
        space: SpaceConfig {
            kind: "reflected_interval".into(),
            n: None,
            angles: None,
            points: Some(points),
        },
        kernel: KernelConfig {
            kind: "gap".into(),
            alpha: None,
            ramp: None,
            table_file: None,
            table: None,
        },
        initial: InitialConfig {
            kind: "atoms".into(),
            values: None,
            values_file: None,
            atoms: Some(atoms),
        },
        integrator: IntegratorConfig {
            method: "expm".into(),
            dt: 0.1,
            steps: 300,
            snapshot_every: 2,
        },
        diagnostics: DiagnosticsConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Finite truncation of the interval family `T_k = [1/(2k+1), 1/(2k)]`
/// with three atoms per cell; cells do not interact with each other and
/// each one is its own component pair.
fn truncated_components(k_max: usize) -> ExperimentConfig {
    let mut points = Vec::new();
    for k in 1..=k_max {
        let lo = 1.0 / (2.0 * k as f64 + 1.0);
        let hi = 1.0 / (2.0 * k as f64);
        points.push(lo);
        points.push(0.5 * (lo + hi));
        points.push(hi);
    }
    let mirrored: Vec<f64> = points
        .iter()
        .flat_map(|&x| [x, -x])
        .collect();
    // Interaction rule of the family on [0,1]^2, extended by the reversal
    // symmetry; opposite signs never interact.
    let m = mirrored.len();
    let mut table = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (mirrored[i], mirrored[j]);
            if x > 0.0 && y > 0.0 && x < y + y * y && y < x + x * x {
                table[i][j] = 1.0;
            }
            if x < 0.0 && y < 0.0 {
                let (a, b) = (-x, -y);
                if a < b + b * b && b < a + a * a {
                    table[i][j] = 1.0;
                }
            }
        }
    }
    // Asymmetric masses: positive cells overweighted per-cell.
    let asym = [0.6, 0.4, 0.5];
    let unit = 1.0 / (6.0 * k_max as f64);
    let mut atoms = Vec::new();
    for (cell, chunk) in points.chunks(3).enumerate() {
        let a = asym[cell % asym.len()];
        for &x in chunk {
            atoms.push((x, (1.0 + a) * unit));
            atoms.push((-x, (1.0 - a) * unit));
        }
    }
    ExperimentConfig {
        space: SpaceConfig {
            kind: "reflected_interval".into(),
            n: None,
            angles: None,
            points: Some(mirrored),
        },
        kernel: KernelConfig {
            kind: "custom".into(),
            alpha: None,
            ramp: None,
            table_file: None,
            table: Some(table),
        },
        initial: InitialConfig {
            kind: "atoms".into(),
            values: None,
            values_file: None,
            atoms: Some(atoms),
        },
        integrator: IntegratorConfig {
            method: "expm".into(),
            dt: 0.1,
            steps: 400,
            snapshot_every: 2,
        },
        diagnostics: DiagnosticsConfig::default(),
        output: OutputConfig::default(),
    }
}
