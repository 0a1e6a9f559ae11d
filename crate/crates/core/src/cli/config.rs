//! Experiment configuration files.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accretive::{builtin_system, Budgets, PseudoAccretiveSystem};
use crate::avgops::SmoothingOptions;
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::gridfn::{read_binary, read_csv, Grid, SampledFunction};
use crate::kernels::{ApplyOptions, KernelFamily};
use crate::profile::{Profile, ProfileKind};
use crate::sqfn::{IndexTuple, ScaleGrid};
use crate::stopping::LowerBoundPlan;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    CheckSystem(CheckSystemConfig),
    Decompose(DecomposeConfig),
    Carleson(CarlesonConfig),
    Sqfn(SqfnConfig),
    Paraproduct(ParaproductConfig),
    TbCondition(TbConfig),
}

impl ExperimentConfig {
    pub fn subcommand(&self) -> &'static str {
        match self {
            ExperimentConfig::CheckSystem(_) => "check-system",
            ExperimentConfig::Decompose(_) => "decompose",
            ExperimentConfig::Carleson(_) => "carleson",
            ExperimentConfig::Sqfn(_) => "sqfn",
            ExperimentConfig::Paraproduct(_) => "paraproduct",
            ExperimentConfig::TbCondition(_) => "tb-condition",
        }
    }

    /// Parse a config document; the `schema_version` field is required.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value.as_object_mut().ok_or_else(|| Error::invalid("config must be a JSON object"))?;
        match obj.remove("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(Error::invalid(format!("schema_version: unsupported version {v}"))),
            None => return Err(Error::invalid("schema_version: missing or not an integer")),
        }
        let cfg: ExperimentConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |f: &mut FunctionConfig| {
            if let FunctionConfig::Csv { path } | FunctionConfig::Binary { path } = f {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        };
        match self {
            ExperimentConfig::Sqfn(c) => c.inputs.iter_mut().for_each(fix),
            ExperimentConfig::Paraproduct(c) => {
                fix(&mut c.beta);
                fix(&mut c.test_function);
            }
            ExperimentConfig::TbCondition(c) => {
                if let OperatorConfig::Paraproduct { beta, .. } = &mut c.operator {
                    fix(beta);
                }
            }
            _ => {}
        }
    }

    /// Field-level checks beyond what deserialisation enforces.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::InvalidInput(format!("{name}: {e}"));
        match self {
            ExperimentConfig::CheckSystem(c) => {
                c.system.validate().map_err(|e| field("system", e))?;
                if let Some(checks) = &c.checks {
                    for k in checks {
                        if !CHECK_NAMES.contains(&k.as_str()) {
                            return Err(Error::invalid(format!("checks: unknown check '{k}', expected one of {CHECK_NAMES:?}")));
                        }
                    }
                }
            }
            ExperimentConfig::Decompose(c) => c.system.validate().map_err(|e| field("system", e))?,
            ExperimentConfig::Carleson(c) => {
                c.scales.validate().map_err(|e| field("scales", e))?;
                c.kernel.build().map_err(|e| field("kernel", e))?;
            }
            ExperimentConfig::Sqfn(c) => {
                c.index.validate().map_err(|e| field("index", e))?;
                c.scales.validate().map_err(|e| field("scales", e))?;
                if c.inputs.len() != c.index.slots.len() {
                    return Err(Error::invalid("inputs: one input per slot exponent"));
                }
                let k = c.kernel.build().map_err(|e| field("kernel", e))?;
                if k.params().m != c.inputs.len() {
                    return Err(Error::invalid("kernel: linearity differs from the number of inputs"));
                }
                if c.dilations.is_empty() || c.dilations.iter().any(|&l| !(l > 0.0)) {
                    return Err(Error::invalid("dilations: need positive factors"));
                }
            }
            ExperimentConfig::Paraproduct(c) => c.scales.validate().map_err(|e| field("scales", e))?,
            ExperimentConfig::TbCondition(c) => {
                c.system.validate().map_err(|e| field("system", e))?;
                c.scales.validate().map_err(|e| field("scales", e))?;
            }
        }
        Ok(())
    }
}

pub const CHECK_NAMES: [&str; 4] = ["size", "accretive_slots", "accretive_product", "compatible"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default = "one")]
    pub dim: usize,
    /// One exponent `q_i` per slot.
    pub exponents: Vec<f64>,
}

fn one() -> usize {
    1
}

impl SystemConfig {
    pub fn build(&self) -> Result<Vec<PseudoAccretiveSystem>> {
        builtin_system(&self.name, self.dim, &self.exponents)
    }

    fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    PowerDecay { m: usize, n: usize, decay: f64, holder: f64, constant: f64 },
    GaussianProduct { m: usize, n: usize, decay: f64, holder: f64, constant: f64 },
    MeanZeroFirst { m: usize, n: usize, constant: f64 },
    BumpProduct { m: usize, n: usize, c: f64 },
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelFamily> {
        match *self {
            KernelConfig::PowerDecay { m, n, decay, holder, constant } => KernelFamily::power_decay(m, n, decay, holder, constant),
            KernelConfig::GaussianProduct { m, n, decay, holder, constant } => {
                KernelFamily::gaussian_product(m, n, decay, holder, constant)
            }
            KernelConfig::MeanZeroFirst { m, n, constant } => KernelFamily::mean_zero_first(m, n, constant),
            KernelConfig::BumpProduct { m, n, c } => KernelFamily::bump_product(m, n, c),
        }
    }
}

fn unit() -> f64 {
    1.0
}

/// Input functions: closed forms or files in the grid formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    /// `a exp(-|x - c|^2 / w^2)`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `a (1 - |x - c|^2 / r^2)^4` inside the ball.
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// Unit-mass bump of radius `inner` minus one of radius `outer`: mean zero.
    BumpDifference { center: Vec<f64>, inner: f64, outer: f64 },
    Csv { path: PathBuf },
    Binary { path: PathBuf },
}

impl FunctionConfig {
    pub fn sample(&self, grid: &Grid) -> Result<SampledFunction> {
        let dist = |x: &[f64], c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let check = |c: &[f64]| {
            if c.len() != grid.dim() {
                Err(Error::invalid(format!("center has {} coordinates, window has {}", c.len(), grid.dim())))
            } else {
                Ok(())
            }
        };
        match self {
            FunctionConfig::Gaussian { center, width, amplitude } => {
                check(center)?;
                if !(*width > 0.0) {
                    return Err(Error::invalid("gaussian width must be positive"));
                }
                SampledFunction::from_real_fn(grid.clone(), |x| amplitude * (-(dist(x, center) / width).powi(2)).exp())
            }
            FunctionConfig::Bump { center, radius, amplitude } => {
                check(center)?;
                if !(*radius > 0.0) {
                    return Err(Error::invalid("bump radius must be positive"));
                }
                let b = Profile::new(ProfileKind::Bump, grid.dim())?;
                SampledFunction::from_real_fn(grid.clone(), |x| amplitude * b.value(dist(x, center) / radius))
            }
            FunctionConfig::BumpDifference { center, inner, outer } => {
                check(center)?;
                if !(*inner > 0.0 && *outer > 0.0) {
                    return Err(Error::invalid("bump radii must be positive"));
                }
                let b = Profile::unit_mass(ProfileKind::Bump, grid.dim())?;
                SampledFunction::from_real_fn(grid.clone(), |x| {
                    let d = dist(x, center);
                    b.dilated(*inner, d) - b.dilated(*outer, d)
                })
            }
            FunctionConfig::Csv { path } => read_csv(BufReader::new(File::open(path)?))?.restrict_to(grid),
            FunctionConfig::Binary { path } => read_binary(BufReader::new(File::open(path)?))?.restrict_to(grid),
        }
    }

    /// The function `f(x / lambda)`, for closed forms only.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        let sc = |c: &[f64]| c.iter().map(|v| v * lambda).collect::<Vec<_>>();
        Ok(match self {
            FunctionConfig::Gaussian { center, width, amplitude } => {
                FunctionConfig::Gaussian { center: sc(center), width: width * lambda, amplitude: *amplitude }
            }
            FunctionConfig::Bump { center, radius, amplitude } => {
                FunctionConfig::Bump { center: sc(center), radius: radius * lambda, amplitude: *amplitude }
            }
            FunctionConfig::BumpDifference { .. } | FunctionConfig::Csv { .. } | FunctionConfig::Binary { .. } => {
                return Err(Error::invalid("dilation is supported for gaussian and bump inputs only"))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub h: f64,
    /// `[lo, hi]` per axis.
    pub bounds: Vec<[f64; 2]>,
}

impl WindowConfig {
    pub fn grid(&self) -> Result<Grid> {
        let b: Vec<(f64, f64)> = self.bounds.iter().map(|[a, b]| (*a, *b)).collect();
        Grid::from_bounds(self.h, &b)
    }

    pub fn dilated(&self, lambda: f64) -> WindowConfig {
        WindowConfig { h: self.h, bounds: self.bounds.iter().map(|[a, b]| [a * lambda, b * lambda]).collect() }
    }
}

/// Optional budgets; a missing budget is unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub b3: Option<f64>,
}

impl BudgetConfig {
    pub fn budgets(&self) -> Budgets {
        let inf = f64::INFINITY;
        Budgets { b1: self.b1.unwrap_or(inf), b2: self.b2.unwrap_or(inf), b3: self.b3.unwrap_or(inf) }
    }
}

fn default_h() -> f64 {
    1.0 / 256.0
}

fn default_floor() -> f64 {
    1.0 / 32.0
}

fn yes() -> bool {
    true
}

fn default_tail() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSystemConfig {
    pub system: SystemConfig,
    pub cube: DyadicCube,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default)]
    pub budgets: BudgetConfig,
    /// Checks that decide the exit status; all four when absent.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub system: SystemConfig,
    pub cube: DyadicCube,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default)]
    pub lower_bound: Option<LowerBoundPlan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub root: DyadicCube,
    /// Generations below the root included in the family.
    pub depth: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceConfig {
    pub octaves: u32,
    pub per_octave: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlesonConfig {
    pub kernel: KernelConfig,
    pub family: FamilyConfig,
    pub h: f64,
    pub scales: ScaleGrid,
    #[serde(default = "default_tail")]
    pub tail_eps: f64,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub divergence: Option<DivergenceConfig>,
}

fn default_dilations() -> Vec<f64> {
    vec![1.0]
}

fn default_tolerance() -> f64 {
    0.03
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqfnConfig {
    pub kernel: KernelConfig,
    pub index: IndexTuple,
    pub inputs: Vec<FunctionConfig>,
    pub window: WindowConfig,
    pub scales: ScaleGrid,
    /// Input dilations `lambda`; scales and window dilate along.
    #[serde(default = "default_dilations")]
    pub dilations: Vec<f64>,
    /// Allowed relative spread of the ratio across dilations.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub apply: ApplyOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzConfig {
    pub center: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub samples: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub spread: f64,
    #[serde(default = "unit")]
    pub gamma: f64,
    pub size_constant: Option<f64>,
    pub regularity_constant: Option<f64>,
}

fn default_seed() -> u64 {
    1
}

fn two() -> usize {
    2
}

fn default_pairing_tol() -> f64 {
    0.05
}

fn default_transpose_tol() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaproductConfig {
    pub window: WindowConfig,
    pub beta: FunctionConfig,
    #[serde(default = "two")]
    pub m: usize,
    pub scales: ScaleGrid,
    pub test_function: FunctionConfig,
    /// Relative to `|<beta, phi>|`.
    #[serde(default = "default_pairing_tol")]
    pub pairing_tolerance: f64,
    /// Relative to `||beta||_inf ||phi||_1`.
    #[serde(default = "default_transpose_tol")]
    pub transpose_tolerance: f64,
    #[serde(default)]
    pub cz: Option<CzConfig>,
    #[serde(default)]
    pub smoothing: SmoothingOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Zero,
    Paraproduct {
        window: WindowConfig,
        beta: FunctionConfig,
        scales: ScaleGrid,
        #[serde(default = "unit")]
        factor: f64,
    },
}

fn default_margin() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbConfig {
    pub operator: OperatorConfig,
    pub system: SystemConfig,
    pub cube: DyadicCube,
    pub q: f64,
    pub scales: ScaleGrid,
    pub h: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub smoothing: SmoothingOptions,
}
