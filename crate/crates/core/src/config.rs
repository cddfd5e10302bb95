//! Experiment configuration: structured blocks for the space, kernel,
//! initial measure, integrator and outputs. Unknown keys are errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::kernel::CollisionKernel;
use crate::measure::DiscreteMeasure;
use crate::space::{SpaceKind, StateSpace};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub kernel: KernelConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// "torus_grid" | "atomic_circle" | "reflected_interval"
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// "indicator" | "smooth" | "gap" | "custom"
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    /// CSV file with one kernel row per line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_file: Option<String>,
    /// Inline table rows (scenario-generated configs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// "grid_density" | "atoms"
    pub kind: String,
    /// Inline density values, one per grid point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// File with one density value per line (# starts a comment).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_file: Option<String>,
    /// `(coordinate, mass)` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// "euler" | "rk4" | "expm" | "picard"
    pub method: String,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_snapshot_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Also track the Wasserstein-1 distance to the prediction.
    #[serde(default)]
    pub wasserstein: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Validated, constructed experiment inputs.
pub struct ResolvedExperiment {
    pub space: Arc<StateSpace>,
    pub kernel: CollisionKernel,
    pub initial: DiscreteMeasure,
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub wasserstein: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validate and construct all blocks. Relative file references are
    /// resolved against `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ResolvedExperiment> {
        let space = self.build_space()?;
        let kernel = self.build_kernel(&space, base_dir)?;
        let initial = self.build_initial(&space, base_dir)?;
        if self.integrator.dt <= 0.0 {
            return Err(Error::Config("integrator.dt must be positive".into()));
        }
        if self.integrator.steps == 0 {
            return Err(Error::Config("integrator.steps must be positive".into()));
        }
        let method: Method = self.integrator.method.parse()?;
        Ok(ResolvedExperiment {
            space,
            kernel,
            initial,
            method,
            dt: self.integrator.dt,
            steps: self.integrator.steps,
            snapshot_every: self.integrator.snapshot_every.max(1),
            wasserstein: self.diagnostics.wasserstein,
        })
    }

    fn build_space(&self) -> Result<Arc<StateSpace>> {
        let c = &self.space;
        match c.kind.as_str() {
            "torus_grid" => {
                reject_field(c.angles.is_some(), "space.angles")?;
                reject_field(c.points.is_some(), "space.points")?;
                let n = c
                    .n
                    .ok_or_else(|| Error::Config("space.n is required for torus_grid".into()))?;
                StateSpace::torus_grid(n)
            }
            "atomic_circle" => {
                reject_field(c.n.is_some(), "space.n")?;
                reject_field(c.points.is_some(), "space.points")?;
                let angles = c.angles.as_ref().ok_or_else(|| {
                    Error::Config("space.angles is required for atomic_circle".into())
                })?;
                StateSpace::atomic_circle(angles)
            }
            "reflected_interval" => {
                reject_field(c.n.is_some(), "space.n")?;
                reject_field(c.angles.is_some(), "space.angles")?;
                let points = c.points.as_ref().ok_or_else(|| {
                    Error::Config("space.points is required for reflected_interval".into())
                })?;
                StateSpace::reflected_interval(points)
            }
            other => Err(Error::Config(format!("space.kind: unknown kind `{other}`"))),
        }
    }

    fn build_kernel(
        &self,
        space: &Arc<StateSpace>,
        base_dir: Option<&Path>,
    ) -> Result<CollisionKernel> {
        let c = &self.kernel;
        match c.kind.as_str() {
            "indicator" => {
                reject_field(c.ramp.is_some(), "kernel.ramp")?;
                reject_field(c.table_file.is_some(), "kernel.table_file")?;
                reject_field(c.table.is_some(), "kernel.table")?;
                let alpha = c.alpha.ok_or_else(|| {
                    Error::Config("kernel.alpha is required for the indicator kernel".into())
                })?;
                CollisionKernel::indicator(space, alpha)
            }
            "smooth" => {
                reject_field(c.table_file.is_some(), "kernel.table_file")?;
                reject_field(c.table.is_some(), "kernel.table")?;
                let alpha = c.alpha.ok_or_else(|| {
                    Error::Config("kernel.alpha is required for the smooth kernel".into())
                })?;
                let ramp = c.ramp.ok_or_else(|| {
                    Error::Config("kernel.ramp is required for the smooth kernel".into())
                })?;
                CollisionKernel::smooth(space, alpha, ramp)
            }
            "gap" => {
                reject_field(c.alpha.is_some(), "kernel.alpha")?;
                reject_field(c.ramp.is_some(), "kernel.ramp")?;
                reject_field(c.table_file.is_some(), "kernel.table_file")?;
                reject_field(c.table.is_some(), "kernel.table")?;
                CollisionKernel::gap(space)
            }
            "custom" => {
                reject_field(c.alpha.is_some(), "kernel.alpha")?;
                reject_field(c.ramp.is_some(), "kernel.ramp")?;
                let table = match (&c.table, &c.table_file) {
                    (Some(rows), None) => flatten_table(rows, space.len())?,
                    (None, Some(file)) => {
                        let path = resolve_path(file, base_dir);
                        read_table_csv(&path, space.len())?
                    }
                    _ => {
                        return Err(Error::Config(
                            "custom kernel needs exactly one of kernel.table, kernel.table_file"
                                .into(),
                        ))
                    }
                };
                CollisionKernel::custom(space, table)
            }
            other => Err(Error::Config(format!("kernel.kind: unknown kind `{other}`"))),
        }
    }

    fn build_initial(
        &self,
        space: &Arc<StateSpace>,
        base_dir: Option<&Path>,
    ) -> Result<DiscreteMeasure> {
        let c = &self.initial;
        match c.kind.as_str() {
            "grid_density" => {
                reject_field(c.atoms.is_some(), "initial.atoms")?;
                if space.kind() == SpaceKind::AtomicCircle {
                    return Err(Error::Config(
                        "initial.kind grid_density needs a grid or interval space".into(),
                    ));
                }
                let values = match (&c.values, &c.values_file) {
                    (Some(v), None) => v.clone(),
                    (None, Some(file)) => {
                        let path = resolve_path(file, base_dir);
                        read_values_file(&path)?
                    }
                    _ => {
                        return Err(Error::Config(
                            "grid_density needs exactly one of initial.values, initial.values_file"
                                .into(),
                        ))
                    }
                };
                DiscreteMeasure::new(space, values)
            }
            "atoms" => {
                reject_field(c.values.is_some(), "initial.values")?;
                reject_field(c.values_file.is_some(), "initial.values_file")?;
                let atoms = c.atoms.as_ref().ok_or_else(|| {
                    Error::Config("initial.atoms is required for kind atoms".into())
                })?;
                DiscreteMeasure::from_atoms(space, atoms)
            }
            other => Err(Error::Config(format!("initial.kind: unknown kind `{other}`"))),
        }
    }
}

fn reject_field(present: bool, field: &str) -> Result<()> {
    if present {
        return Err(Error::Config(format!("{field} is not valid for this kind")));
    }
    Ok(())
}

fn resolve_path(file: &str, base_dir: Option<&Path>) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir
            .map(|d| d.join(p))
            .unwrap_or_else(|| p.to_path_buf())
    }
}

fn flatten_table(rows: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rows.len(),
        });
    }
    Ok(rows.iter().flatten().copied().collect())
}

fn read_table_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::Config(format!("bad kernel table entry: {e}")))?);
    }
    flatten_table(&rows, n)
}

fn read_values_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad density value: {e}")))?,
        );
    }
    Ok(values)
}
