//! Run configuration files (TOML: `key = value` lines grouped in sections).
//!
//! ```toml
//! [grid]
//! n = 16
//! delta_xi = 0.25
//!
//! [knots]
//! kind = "geometric"
//! t_min = 0.01
//! ratio = 2.0
//! t_max = 64.0
//!
//! [solver]
//! epsilon = 0.06
//! tol = 1e-10
//!
//! [data]
//! kind = "random"
//! seed = 7
//! pm2 = 0.03
//! envelope = { kind = "gaussian", width = 1.0 }
//!
//! [force]
//! kind = "dirac"
//! amplitude = [0.01, 0.0, 0.0]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::duhamel::BilinearConfig;
use crate::error::{PmnsError, Result};
use crate::fields::{cosine_mode, gaussian_field, homogeneous_field, normalize_pm2, random_solenoidal, Envelope};
use crate::grid::{FrequencyGrid, SpectralVectorField};
use crate::io::load_field;
use crate::landau::{landau_sample_spectral, LandauParams};
use crate::pm::pm_norm;
use crate::solver::{ForceSpec, SolverConfig};
use crate::symbols::{leray_apply, EtaConstant};
use crate::trajectory::{geometric_knots, validate_knots};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub delta_xi: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.n, self.delta_xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KnotsConfig {
    /// `0, t_min, t_min r, ...` up to `t_max`.
    Geometric { t_min: f64, ratio: f64, t_max: f64 },
    /// `0, t_max / m, ..., t_max`.
    Uniform { t_max: f64, intervals: usize },
    List { times: Vec<f64> },
}

impl KnotsConfig {
    pub fn build(&self) -> Result<Vec<f64>> {
        let k = match self {
            KnotsConfig::Geometric { t_min, ratio, t_max } => geometric_knots(*t_min, *ratio, *t_max)?,
            KnotsConfig::Uniform { t_max, intervals } => {
                if *intervals == 0 || !(*t_max > 0.0) {
                    return Err(PmnsError::Parameter("uniform knots need t_max > 0 and intervals >= 1".into()));
                }
                (0..=*intervals).map(|i| t_max * i as f64 / *intervals as f64).collect()
            }
            KnotsConfig::List { times } => times.clone(),
        };
        validate_knots(&k)?;
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Defaults to half the threshold `1 / (4 eta)`.
    pub epsilon: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_quad_order")]
    pub quad_order: u8,
    /// `"effective"` (default) or `"bare"` (`kappa pi^3`).
    #[serde(default)]
    pub eta: EtaChoice,
    #[serde(default = "default_true")]
    pub enforce_smallness: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaChoice {
    #[default]
    Effective,
    Bare,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_quad_order() -> u8 {
    2
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            epsilon: None,
            tol: default_tol(),
            max_iter: default_max_iter(),
            dealias: true,
            quad_order: 2,
            eta: EtaChoice::Effective,
            enforce_smallness: true,
        }
    }
}

impl SolverSection {
    pub fn build(&self) -> Result<SolverConfig> {
        let eta = match self.eta {
            EtaChoice::Effective => EtaConstant::exact().eta_effective,
            EtaChoice::Bare => EtaConstant::exact().eta_bare,
        };
        let cfg = SolverConfig {
            eta,
            epsilon: self.epsilon.unwrap_or(0.5 / (4.0 * eta)),
            max_iter: self.max_iter,
            tol: self.tol,
            bilinear: BilinearConfig {
                dealias: self.dealias,
                quad_order: self.quad_order,
            },
            enforce_smallness: self.enforce_smallness,
        };
        cfg.bilinear.validate()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    #[default]
    Zero,
    Random { seed: u64, pm2: f64, envelope: Envelope },
    /// `|xi|^{-2} P e`, scaled to PM^2 norm `pm2`.
    Homogeneous { direction: [f64; 3], pm2: f64 },
    Gaussian { direction: [f64; 3], width: f64, pm2: f64 },
    Cosine { k: [i64; 3], polarization: [f64; 3], amplitude: f64 },
    /// `scale` times the Leray-projected lattice sample of the Landau field.
    Landau { c: f64, scale: f64 },
    /// Binary field container; relative paths resolve against the config file.
    File { path: PathBuf },
}

impl DataConfig {
    pub fn build(&self, grid: FrequencyGrid, base: &Path) -> Result<SpectralVectorField> {
        Ok(match self {
            DataConfig::Zero => SpectralVectorField::zeros(grid),
            DataConfig::Random { seed, pm2, envelope } => random_solenoidal(grid, *seed, *envelope, *pm2),
            DataConfig::Homogeneous { direction, pm2 } => normalize_pm2(&homogeneous_field(grid, *direction, 1.0), *pm2),
            DataConfig::Gaussian { direction, width, pm2 } => {
                normalize_pm2(&gaussian_field(grid, *direction, 1.0, *width), *pm2)
            }
            DataConfig::Cosine { k, polarization, amplitude } => cosine_mode(grid, *k, *polarization, *amplitude)?,
            DataConfig::Landau { c, scale } => {
                let p = LandauParams::new(*c)?;
                leray_apply(&landau_sample_spectral(&p, grid))
                    .without_nyquist()
                    .zero_mode_pinned()
                    .scale(*scale)
            }
            DataConfig::File { path } => {
                let f = load_field(base.join(path))?;
                grid.check_same(f.grid())?;
                f
            }
        })
    }

    pub fn input_path(&self, base: &Path) -> Option<PathBuf> {
        match self {
            DataConfig::File { path } => Some(base.join(path)),
            _ => None,
        }
    }
}

/// External force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceConfig {
    #[default]
    Zero,
    Dirac { amplitude: [f64; 3] },
    /// Random solenoidal field scaled to PM^0 norm `pm0`.
    Random { seed: u64, pm0: f64, envelope: Envelope },
    Gaussian { direction: [f64; 3], width: f64, pm0: f64 },
    File { path: PathBuf },
}

fn scaled_pm0(f: SpectralVectorField, target: f64) -> SpectralVectorField {
    let n = pm_norm(&f, 0.0).expect("a = 0 is valid").value;
    if n == 0.0 {
        f
    } else {
        f.scale(target / n)
    }
}

impl ForceConfig {
    pub fn build(&self, grid: FrequencyGrid, base: &Path) -> Result<ForceSpec> {
        Ok(match self {
            ForceConfig::Zero => ForceSpec::Zero,
            ForceConfig::Dirac { amplitude } => ForceSpec::Dirac { amplitude: *amplitude },
            ForceConfig::Random { seed, pm0, envelope } => {
                ForceSpec::FixedField(scaled_pm0(random_solenoidal(grid, *seed, *envelope, 1.0), *pm0))
            }
            ForceConfig::Gaussian { direction, width, pm0 } => {
                ForceSpec::FixedField(scaled_pm0(gaussian_field(grid, *direction, 1.0, *width), *pm0))
            }
            ForceConfig::File { path } => {
                let f = load_field(base.join(path))?;
                grid.check_same(f.grid())?;
                ForceSpec::FixedField(f)
            }
        })
    }

    pub fn input_path(&self, base: &Path) -> Option<PathBuf> {
        match self {
            ForceConfig::File { path } => Some(base.join(path)),
            _ => None,
        }
    }
}

/// Second data set of a stability run: `v0 = u0 + perturbation`, force `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub perturbation: DataConfig,
    #[serde(default)]
    pub force: Option<ForceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Write the solution at every knot as binary containers.
    #[serde(default = "default_true")]
    pub fields: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out(),
            fields: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub knots: Option<KnotsConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub force: ForceConfig,
    #[serde(default)]
    pub stability: Option<StabilitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PmnsError::Parameter(format!("config: {e}")))
    }

    pub fn knots(&self) -> Result<Vec<f64>> {
        self.knots
            .as_ref()
            .ok_or_else(|| PmnsError::Parameter("config has no [knots] section".into()))?
            .build()
    }
}

/// Parsed config plus the raw bytes and the directory that relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    pub base_dir: PathBuf,
    pub path: PathBuf,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let bytes = fs::read(path)
        .map_err(|e| PmnsError::Parameter(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| PmnsError::Parameter(format!("config is not UTF-8: {e}")))?;
    let config = RunConfig::parse(text)?;
    Ok(LoadedConfig {
        config,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        path: path.to_path_buf(),
        bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[grid]
n = 8
delta_xi = 0.5

[knots]
kind = "geometric"
t_min = 0.01
ratio = 2.0
t_max = 1.0

[solver]
epsilon = 0.05
tol = 1e-9

[data]
kind = "random"
seed = 3
pm2 = 0.02
envelope = { kind = "gaussian", width = 1.0 }

[force]
kind = "dirac"
amplitude = [0.01, 0.0, 0.0]

[stability]
perturbation = { kind = "homogeneous", direction = [1.0, 0.0, 0.0], pm2 = 0.01 }
"#;

    #[test]
    fn sample_parses_and_builds() {
        let c = RunConfig::parse(SAMPLE).unwrap();
        let g = c.grid.build().unwrap();
        assert_eq!(c.knots().unwrap().len(), 8);
        let s = c.solver.build().unwrap();
        assert_eq!(s.epsilon, 0.05);
        assert_eq!(s.max_iter, 200);
        assert!(s.bilinear.dealias);
        let u0 = c.data.build(g, Path::new(".")).unwrap();
        assert!((pm_norm(&u0, 2.0).unwrap().value - 0.02).abs() < 1e-15);
        assert_eq!(c.force.build(g, Path::new(".")).unwrap(), ForceSpec::Dirac { amplitude: [0.01, 0.0, 0.0] });
        let st = c.stability.unwrap();
        assert!(matches!(st.perturbation, DataConfig::Homogeneous { .. }));
        assert_eq!(c.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn bad_configs_are_parameter_errors() {
        for text in [
            "[grid]\nn = 8\n",
            "[grid]\nn = 8\ndelta_xi = 0.5\nbogus = 1\n",
            "[grid]\nn = 8\ndelta_xi = 0.5\n[data]\nkind = \"nope\"\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(PmnsError::Parameter(_))), "{text}");
        }
        let c = RunConfig::parse("[grid]\nn = 8\ndelta_xi = 0.5\n[solver]\nepsilon = 0.2\n").unwrap();
        assert!(c.solver.build().is_err());
        assert!(c.knots().is_err());
        assert!(matches!(load_config("/nonexistent/run.toml"), Err(PmnsError::Parameter(_))));
    }

    #[test]
    fn bare_eta_lowers_the_default_epsilon() {
        let s = SolverSection {
            eta: EtaChoice::Bare,
            ..SolverSection::default()
        };
        let c = s.build().unwrap();
        assert!((c.eta - std::f64::consts::PI.powi(3)).abs() < 1e-12);
        assert!(c.epsilon < 0.5 / (4.0 * 31.0));
    }
}
