//! Problem specification shared by every subcommand.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use besselpot::eigen::CubeFamily;
use besselpot::measure::{DensityMeasure, Factor, Shape};
use besselpot::{BesselParams, Grid, GridFunction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn default_nu() -> f64 {
    2.0
}

fn default_p() -> f64 {
    2.0
}

fn default_xi_max() -> f64 {
    8.0
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub alphas: Vec<f64>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Measure for `convolve`, `measure-check` and `trace-check`.
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    /// Potential for `eigen`.
    #[serde(default)]
    pub potential: Option<MeasureSpec>,
    /// Function for `translate` and `hankel`.
    #[serde(default)]
    pub function: Option<MeasureSpec>,
    /// Training potentials for `calibrate`.
    #[serde(default)]
    pub train: Vec<MeasureSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub cubes: CubeSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    /// Radii for `kernel`.
    #[serde(default)]
    pub eval: Option<Vec<f64>>,
    /// Translation parameter for `translate`.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    /// Per-axis evaluation points for `translate` and `convolve`.
    #[serde(default)]
    pub x_grid: Option<AxisRange>,
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    /// Eigensolver tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Evaluation points per axis for the pointwise condition in `trace-check`.
    #[serde(default = "default_points")]
    pub points_per_axis: usize,
}

fn default_points() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_x_max() -> f64 {
    12.0
}

fn default_m() -> usize {
    256
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_max: default_x_max(),
            m: default_m(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Dyadic,
    Graded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    #[serde(default = "default_family")]
    pub family: FamilyKind,
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// Side of the region `[0, X]^n` covered by cubes; defaults to the grid extent.
    #[serde(default)]
    pub x_max: Option<f64>,
    /// Edge ratio `2^{1/per_octave}` between graded levels.
    #[serde(default = "default_per_octave")]
    pub per_octave: u32,
}

fn default_family() -> FamilyKind {
    FamilyKind::Dyadic
}

fn default_depth() -> u32 {
    6
}

fn default_per_octave() -> u32 {
    2
}

impl Default for CubeSpec {
    fn default() -> Self {
        Self {
            family: default_family(),
            depth: default_depth(),
            x_max: None,
            per_octave: default_per_octave(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Bessel,
    Tent,
    /// Piecewise linear through `(nodes, values)`, zero beyond the last node.
    Custom { nodes: Vec<f64>, values: Vec<f64> },
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::Bessel
    }
}

/// `count` equispaced points on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

/// Density descriptor. Densities with per-axis data take one entry per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Zero,
    Constant { value: f64 },
    Lebesgue,
    /// `coef · Π x_i^{s_i}`
    Power { coef: f64, exponents: Vec<f64> },
    /// `value · χ_{Π [lo_i, hi_i)}`
    Indicator { value: f64, lo: Vec<f64>, hi: Vec<f64> },
    /// `coef · e^{rate·x}` (`n = 1`)
    Exp { coef: f64, rate: f64 },
    /// `coef · Π exp(-(x_i - c_i)²/(2σ²))`
    Gaussian { coef: f64, center: Vec<f64>, width: f64 },
    /// `Σ_i x_i²`
    SquaredNorm,
    /// Piecewise constant on `[edges[k], edges[k+1])` (`n = 1`).
    Steps { edges: Vec<f64>, values: Vec<f64> },
    /// One value per grid cell in row-major order, read from a text file (last
    /// comma-separated column of each numeric line).
    GridFile { path: PathBuf },
    Sum { terms: Vec<MeasureSpec> },
}

impl ProblemSpec {
    /// Parses and validates a JSON document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| CliError::Spec(vec![e.to_string()]))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a JSON value (a spec file with command-line overrides applied).
    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        let spec: ProblemSpec = serde_json::from_value(value).map_err(|e| CliError::Spec(vec![e.to_string()]))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if self.alphas.is_empty() {
            errs.push("alphas: at least one axis is required".to_string());
        }
        for (i, a) in self.alphas.iter().enumerate() {
            if !(*a > -0.5) || !a.is_finite() {
                errs.push(format!("alphas[{i}]: must satisfy α > -1/2, got {a}"));
            }
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            errs.push(format!("p: must satisfy p > 1, got {}", self.p));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            errs.push(format!("nu: must satisfy ν > 0, got {}", self.nu));
        }
        if !(self.grid.x_max > 0.0) || !self.grid.x_max.is_finite() {
            errs.push(format!("grid.x_max: must be positive, got {}", self.grid.x_max));
        }
        if self.grid.m < 2 {
            errs.push(format!("grid.m: need at least 2 cells, got {}", self.grid.m));
        }
        if self.cubes.depth > 16 {
            errs.push(format!("cubes.depth: at most 16, got {}", self.cubes.depth));
        }
        if self.cubes.per_octave == 0 {
            errs.push("cubes.per_octave: must be at least 1".to_string());
        }
        if let Some(x) = self.cubes.x_max {
            if !(x > 0.0) || !x.is_finite() {
                errs.push(format!("cubes.x_max: must be positive, got {x}"));
            }
        }
        if !(self.xi_max > 0.0) || !self.xi_max.is_finite() {
            errs.push(format!("xi_max: must be positive, got {}", self.xi_max));
        }
        if !(self.tol > 0.0) {
            errs.push(format!("tol: must be positive, got {}", self.tol));
        }
        if self.points_per_axis == 0 {
            errs.push("points_per_axis: must be at least 1".to_string());
        }
        if let Some(r) = &self.eval {
            if let Some(k) = r.iter().position(|&r| !(r > 0.0) || !r.is_finite()) {
                errs.push(format!("eval[{k}]: radii must be positive"));
            }
        }
        if let Some(t) = &self.t {
            if t.len() != self.alphas.len() {
                errs.push(format!("t: expected {} entries, got {}", self.alphas.len(), t.len()));
            }
            if let Some(k) = t.iter().position(|&t| !(t >= 0.0) || !t.is_finite()) {
                errs.push(format!("t[{k}]: must be non-negative"));
            }
        }
        if let Some(x) = &self.x_grid {
            if x.count == 0 || !(x.lo >= 0.0) || !(x.hi >= x.lo) || !x.hi.is_finite() {
                errs.push("x_grid: need 0 <= lo <= hi and count >= 1".to_string());
            }
        }
        if let Some(t) = &self.thresholds {
            if !(t.a > 0.0 && t.a <= t.b && t.b.is_finite()) {
                errs.push(format!("thresholds: need 0 < A <= B, got A = {}, B = {}", t.a, t.b));
            }
        }
        if let KernelSpec::Custom { nodes, values } = &self.kernel {
            if nodes.len() != values.len() || nodes.len() < 2 {
                errs.push("kernel: custom kernels need matching nodes and values (at least 2)".to_string());
            } else if nodes.windows(2).any(|w| !(w[1] > w[0])) || !(nodes[0] >= 0.0) {
                errs.push("kernel.nodes: must be non-negative and increasing".to_string());
            } else if values.windows(2).any(|w| w[1] > w[0]) || values.iter().any(|&v| !(v >= 0.0)) {
                errs.push("kernel.values: must be non-negative and non-increasing".to_string());
            }
        }
        let n = self.alphas.len();
        for (name, m) in [("measure", &self.measure), ("potential", &self.potential), ("function", &self.function)] {
            if let Some(m) = m {
                m.validate(name, n, &mut errs);
            }
        }
        for (k, m) in self.train.iter().enumerate() {
            m.validate(&format!("train[{k}]"), n, &mut errs);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Spec(errs))
        }
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn params(&self) -> Result<BesselParams<f64>, CliError> {
        BesselParams::new(self.alphas.clone()).map_err(CliError::spec_from)
    }

    pub fn grid(&self) -> Result<Arc<Grid<f64>>, CliError> {
        Grid::new(&self.params()?, self.grid.x_max, self.grid.m).map_err(CliError::spec_from)
    }

    pub fn family(&self) -> CubeFamily<f64> {
        let x_max = self.cubes.x_max.unwrap_or(self.grid.x_max);
        match self.cubes.family {
            FamilyKind::Dyadic => CubeFamily::dyadic(x_max, self.cubes.depth),
            FamilyKind::Graded => CubeFamily::Graded {
                x_max,
                min_edge: x_max * 2f64.powi(-(self.cubes.depth as i32)),
                per_octave: self.cubes.per_octave,
            },
        }
    }

    /// Per-axis evaluation points: `x_grid` if given, else `count` points on `(0, X]`.
    pub fn axis_points(&self) -> Vec<f64> {
        match &self.x_grid {
            Some(r) => r.points(),
            None => {
                let count = if self.n() == 1 { self.grid.m } else { 32 };
                (1..=count).map(|k| self.grid.x_max * k as f64 / count as f64).collect()
            }
        }
    }

    /// Hex SHA-256 of the canonical serialisation.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_len(field: &str, what: &str, got: usize, n: usize, errs: &mut Vec<String>) {
    if got != n {
        errs.push(format!("{field}.{what}: expected {n} entries, got {got}"));
    }
}

impl MeasureSpec {
    /// Reads a standalone measure document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Spec(vec![e.to_string()]))
    }

    fn validate(&self, field: &str, n: usize, errs: &mut Vec<String>) {
        let nonneg = |v: f64, what: &str, errs: &mut Vec<String>| {
            if !(v >= 0.0) || !v.is_finite() {
                errs.push(format!("{field}.{what}: must be non-negative, got {v}"));
            }
        };
        match self {
            Self::Zero | Self::Lebesgue | Self::SquaredNorm | Self::GridFile { .. } => {}
            Self::Constant { value } => nonneg(*value, "value", errs),
            Self::Power { coef, exponents } => {
                nonneg(*coef, "coef", errs);
                check_len(field, "exponents", exponents.len(), n, errs);
            }
            Self::Indicator { value, lo, hi } => {
                nonneg(*value, "value", errs);
                check_len(field, "lo", lo.len(), n, errs);
                check_len(field, "hi", hi.len(), n, errs);
                if lo.iter().zip(hi).any(|(l, h)| !(*l >= 0.0 && h > l)) {
                    errs.push(format!("{field}: need 0 <= lo < hi on every axis"));
                }
            }
            Self::Exp { coef, .. } => {
                nonneg(*coef, "coef", errs);
                check_len(field, "axes", 1, n, errs);
            }
            Self::Gaussian { coef, center, width } => {
                nonneg(*coef, "coef", errs);
                check_len(field, "center", center.len(), n, errs);
                if !(*width > 0.0) {
                    errs.push(format!("{field}.width: must be positive, got {width}"));
                }
            }
            Self::Steps { edges, values } => {
                check_len(field, "axes", 1, n, errs);
                if edges.len() != values.len() + 1 || edges.windows(2).any(|w| !(w[1] > w[0])) {
                    errs.push(format!("{field}: need increasing edges and one more edge than values"));
                }
                for v in values {
                    nonneg(*v, "values", errs);
                }
            }
            Self::Sum { terms } => {
                if terms.is_empty() {
                    errs.push(format!("{field}.terms: at least one term is required"));
                }
                for (k, t) in terms.iter().enumerate() {
                    t.validate(&format!("{field}.terms[{k}]"), n, errs);
                }
            }
        }
    }

    /// Builds the density; grid files are resolved against `grid`.
    pub fn build(&self, n: usize, grid: &Arc<Grid<f64>>) -> Result<DensityMeasure<f64>, CliError> {
        let lib = CliError::spec_from;
        Ok(match self {
            Self::Zero => DensityMeasure::zero(n),
            Self::Constant { value } => DensityMeasure::constant(n, *value).map_err(lib)?,
            Self::Lebesgue => DensityMeasure::lebesgue(n),
            Self::Power { coef, exponents } => DensityMeasure::power(*coef, exponents).map_err(lib)?,
            Self::Indicator { value, lo, hi } => DensityMeasure::indicator(*value, lo, hi).map_err(lib)?,
            Self::Exp { coef, rate } => DensityMeasure::exp(*coef, *rate).map_err(lib)?,
            Self::Gaussian { coef, center, width } => {
                let mut factors: Vec<Factor<f64>> = center
                    .iter()
                    .map(|&c| Factor::new(1.0, Shape::Gaussian { center: c, width: *width }))
                    .collect();
                factors[0].coef = *coef;
                DensityMeasure::product(factors).map_err(lib)?
            }
            Self::SquaredNorm => {
                let mut acc = DensityMeasure::zero(n);
                for i in 0..n {
                    let exps: Vec<f64> = (0..n).map(|j| if i == j { 2.0 } else { 0.0 }).collect();
                    acc = acc.plus(&DensityMeasure::power(1.0, &exps).map_err(lib)?).map_err(lib)?;
                }
                acc
            }
            Self::Steps { edges, values } => DensityMeasure::product(vec![Factor::new(
                1.0,
                Shape::Steps {
                    edges: edges.clone(),
                    values: values.clone(),
                },
            )])
            .map_err(lib)?,
            Self::GridFile { path } => {
                let values = read_grid_file(path)?;
                if values.len() != grid.len() {
                    return Err(CliError::Spec(vec![format!(
                        "{}: expected {} values for the grid, found {}",
                        path.display(),
                        grid.len(),
                        values.len()
                    )]));
                }
                let f = GridFunction::new(grid.clone(), values).map_err(lib)?;
                DensityMeasure::from_grid(&f).map_err(lib)?
            }
            Self::Sum { terms } => {
                let mut acc = DensityMeasure::zero(n);
                for t in terms {
                    acc = acc.plus(&t.build(n, grid)?).map_err(lib)?;
                }
                acc
            }
        })
    }
}

fn read_grid_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec(vec![format!("{}: {e}", path.display())]))?;
    Ok(text
        .lines()
        .filter_map(|l| l.rsplit(',').next().and_then(|s| s.trim().parse::<f64>().ok()))
        .collect())
}
