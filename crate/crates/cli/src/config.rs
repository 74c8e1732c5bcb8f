//! Run configuration: a single TOML document describing the problem and
//! every algorithm parameter. Unknown keys are rejected so typos fail loudly
//! instead of silently running with defaults.

use serde::{Deserialize, Serialize};
use swsynth::abstraction::AbstractionConfig;
use swsynth::bounds::{BoundConfig, KnownDynamics};
use swsynth::geometry::{LabeledRegion, Partition, Rect};
use swsynth::learning::{LearnOptions, NoiseModel, SeKernel};

use crate::CliError;

/// Reference printed by `--help` on every subcommand.
pub const CONFIG_HELP: &str = "\
Configuration file keys (TOML):
  [domain]      lower = [f64; n], upper = [f64; n], grid_step = [f64; n]
  [[region]]    label = string, lower = [f64; n], upper = [f64; n]
                (repeatable; boxes must be grid-aligned and inside the domain)
  [formula]     text = string (atoms, ! & | X U F G), threshold = f64
  [noise]       kind = \"truncated_gaussian\" (std, bound) or
                kind = \"bounded_uniform\" (bound); optional theta
  [modes]       count = int; known = list of \"zero\" | \"identity\" | matrix
  [kernel]      signal_variance = f64 (default 1.0),
                length_scales = [f64] (default [1.0]; one entry broadcasts)
  [[kernel_override]]  mode = int plus the kernel keys (repeatable)
  [learning]    rkhs_kappa = f64 (default 2.0; bound = kappa * max |target|),
                rkhs_bounds = [[f64; n]; modes] (optional explicit bounds),
                delta_min = f64 (default 1e-6),
                info_gain_override = f64 (optional),
                kernel_grid = [{signal_variance, length_scales}] (optional
                marginal-likelihood kernel selection; off by default)
  [abstraction] delta0 = f64 (default 0.01), eta_coverage = f64 (default 0.99),
                eta_fraction = f64 (optional override, fraction of the bound),
                refine_pitch = f64 (optional lattice pitch for range bounds),
                exact_lambda_max = bool (default false),
                sparsity_floor = f64 (default 1e-12)
  [synthesis]   tol = f64 (default 1e-6), max_sweeps = int (default 100000),
                dfa_state_budget = int (default 1000000)
  [validation]  trials = int (default 1000), max_steps = int (default 200),
                confidence_budget = f64 (default 0.02)
  [seeds]       data = u64 (default 1), validation = u64 (default 7)
  [paths]       data, learned, imdp, result, report = file paths used when
                the corresponding command-line flag is omitted (all optional)";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionConfig>,
    pub formula: FormulaConfig,
    pub noise: NoiseModel,
    pub modes: ModesConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default, rename = "kernel_override")]
    pub kernel_overrides: Vec<KernelOverride>,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub abstraction: AbstractionSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub seeds: SeedsSection,
    /// Default stage file locations; command-line flags override them.
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub data: Option<std::path::PathBuf>,
    pub learned: Option<std::path::PathBuf>,
    pub imdp: Option<std::path::PathBuf>,
    pub result: Option<std::path::PathBuf>,
    pub report: Option<std::path::PathBuf>,
}

/// Picks the command-line flag, then the configured default.
pub fn resolve_path<'a>(
    flag: Option<&'a std::path::Path>,
    configured: &'a Option<std::path::PathBuf>,
    what: &str,
) -> Result<&'a std::path::Path, CliError> {
    flag.or(configured.as_deref()).ok_or_else(|| {
        CliError::config(format!(
            "no {what} path: pass the flag or set [paths] {what} in the config"
        ))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub grid_step: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub label: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaConfig {
    pub text: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub count: usize,
    /// One entry per mode: `"zero"`, `"identity"`, or a row-major matrix.
    pub known: Vec<KnownSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KnownSpec {
    Name(String),
    Matrix(Vec<Vec<f64>>),
}

impl KnownSpec {
    pub fn to_dynamics(&self) -> Result<KnownDynamics, CliError> {
        match self {
            KnownSpec::Name(n) if n == "zero" => Ok(KnownDynamics::Zero),
            KnownSpec::Name(n) if n == "identity" => Ok(KnownDynamics::Identity),
            KnownSpec::Name(n) => Err(CliError::config(format!(
                "unknown dynamics kind {n:?}; expected \"zero\", \"identity\", or a matrix"
            ))),
            KnownSpec::Matrix(m) => Ok(KnownDynamics::Linear { matrix: m.clone() }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_signal_variance")]
    pub signal_variance: f64,
    #[serde(default = "default_length_scales")]
    pub length_scales: Vec<f64>,
}

fn default_signal_variance() -> f64 {
    1.0
}

fn default_length_scales() -> Vec<f64> {
    vec![1.0]
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            signal_variance: default_signal_variance(),
            length_scales: default_length_scales(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelOverride {
    pub mode: usize,
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub rkhs_kappa: f64,
    pub rkhs_bounds: Option<Vec<Vec<f64>>>,
    pub delta_min: f64,
    pub info_gain_override: Option<f64>,
    /// Optional marginal-likelihood kernel selection grid.
    pub kernel_grid: Option<Vec<KernelConfig>>,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            rkhs_kappa: 2.0,
            rkhs_bounds: None,
            delta_min: 1e-6,
            info_gain_override: None,
            kernel_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbstractionSection {
    pub delta0: f64,
    pub eta_coverage: f64,
    pub eta_fraction: Option<f64>,
    pub refine_pitch: Option<f64>,
    pub exact_lambda_max: bool,
    pub sparsity_floor: f64,
}

impl Default for AbstractionSection {
    fn default() -> Self {
        AbstractionSection {
            delta0: 0.01,
            eta_coverage: 0.99,
            eta_fraction: None,
            refine_pitch: None,
            exact_lambda_max: false,
            sparsity_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisSection {
    pub tol: f64,
    pub max_sweeps: usize,
    pub dfa_state_budget: usize,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        SynthesisSection {
            tol: 1e-6,
            max_sweeps: 100_000,
            dfa_state_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub trials: usize,
    pub max_steps: usize,
    pub confidence_budget: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            trials: 1000,
            max_steps: 200,
            confidence_budget: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsSection {
    pub data: u64,
    pub validation: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection {
            data: 1,
            validation: 7,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = self.domain.lower.len();
        if self.domain.upper.len() != n || self.domain.grid_step.len() != n {
            return Err(CliError::config(
                "domain lower/upper/grid_step lengths differ",
            ));
        }
        if self.modes.known.len() != self.modes.count {
            return Err(CliError::config(format!(
                "modes.known has {} entries for {} modes",
                self.modes.known.len(),
                self.modes.count
            )));
        }
        if !(0.0..=1.0).contains(&self.formula.threshold) {
            return Err(CliError::config("formula.threshold must lie in [0, 1]"));
        }
        if let Some(b) = &self.learning.rkhs_bounds {
            if b.len() != self.modes.count || b.iter().any(|row| row.len() != n) {
                return Err(CliError::config(
                    "learning.rkhs_bounds must be one row per mode with one bound per dimension",
                ));
            }
        }
        for o in &self.kernel_overrides {
            if o.mode == 0 || o.mode > self.modes.count {
                return Err(CliError::config(format!(
                    "kernel_override.mode {} out of range",
                    o.mode
                )));
            }
        }
        Ok(())
    }

    pub fn domain_rect(&self) -> Result<Rect, CliError> {
        Rect::new(self.domain.lower.clone(), self.domain.upper.clone())
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn labeled_regions(&self) -> Result<Vec<LabeledRegion>, CliError> {
        self.regions
            .iter()
            .map(|r| {
                Rect::new(r.lower.clone(), r.upper.clone())
                    .map(|rect| LabeledRegion::new(r.label.clone(), rect))
                    .map_err(|e| CliError::config(format!("region {:?}: {e}", r.label)))
            })
            .collect()
    }

    pub fn build_partition(&self) -> Result<Partition, CliError> {
        Partition::build(
            self.domain_rect()?,
            &self.labeled_regions()?,
            &self.domain.grid_step,
        )
        .map_err(|e| CliError::config(e.to_string()))
    }

    /// Declared atomic propositions: region labels in declaration order.
    pub fn ap(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.regions {
            if !out.contains(&r.label) {
                out.push(r.label.clone());
            }
        }
        out
    }

    pub fn kernels(&self) -> Vec<SeKernel> {
        let mut out = vec![
            SeKernel::new(
                self.kernel.signal_variance,
                self.kernel.length_scales.clone()
            );
            self.modes.count
        ];
        for o in &self.kernel_overrides {
            out[o.mode - 1] = SeKernel::new(o.signal_variance, o.length_scales.clone());
        }
        out
    }

    pub fn learn_options(&self) -> LearnOptions {
        LearnOptions {
            kernels: self.kernels(),
            rkhs_bounds: self.learning.rkhs_bounds.clone(),
            rkhs_kappa: self.learning.rkhs_kappa,
            info_gain_override: self.learning.info_gain_override,
            kernel_grid: self.learning.kernel_grid.as_ref().map(|g| {
                g.iter()
                    .map(|k| SeKernel::new(k.signal_variance, k.length_scales.clone()))
                    .collect()
            }),
        }
    }

    pub fn known_dynamics(&self) -> Result<Vec<KnownDynamics>, CliError> {
        self.modes
            .known
            .iter()
            .map(KnownSpec::to_dynamics)
            .collect()
    }

    pub fn abstraction_config(&self) -> AbstractionConfig {
        AbstractionConfig {
            delta0: self.abstraction.delta0,
            delta_min: self.learning.delta_min,
            eta_coverage: self.abstraction.eta_coverage,
            eta_fraction: self.abstraction.eta_fraction,
            sparsity_floor: self.abstraction.sparsity_floor,
            bound: BoundConfig {
                refine_pitch: self.abstraction.refine_pitch,
                exact_lambda_max: self.abstraction.exact_lambda_max,
            },
        }
    }
}
