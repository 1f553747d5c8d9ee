//! Run configuration: one TOML file describes a full batch run.
//!
//! Unknown keys are rejected everywhere so a typo fails before any compute
//! starts. Sections that a given subcommand does not use may be omitted.

use serde::{Deserialize, Serialize};

use levelcross::ansatz::Scheme;
use levelcross::noise::NoiseParams;
use levelcross::spectroscopy::Mode;
use levelcross::vqe::{Backend, OptimizerConfig, SectorSpec};
use levelcross::zne::ZneConfig;
use levelcross::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub j1: f64,
    /// Single frustration ratio; used by ed, vqe, and zne.
    #[serde(default)]
    pub j2: Option<f64>,
    /// Ratio grid; used by scan.
    #[serde(default)]
    pub ratio_grid: Option<GridSection>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub layers: usize,
    #[serde(default = "even_odd")]
    pub scheme: Scheme,
}

fn even_odd() -> Scheme {
    Scheme::EvenOdd
}

/// Momentum label; only the two values the initial states support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Momentum {
    Zero,
    Pi,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSection {
    pub spin: u32,
    pub k: Momentum,
}

impl SectorSection {
    pub fn to_spec(self) -> Result<SectorSpec> {
        let k = match self.k {
            Momentum::Zero => 0.0,
            Momentum::Pi => std::f64::consts::PI,
        };
        SectorSpec::new(self.spin, k)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSection {
    Pure,
    Mixed {
        #[serde(default)]
        noise: NoiseParams,
    },
}

impl BackendSection {
    pub fn to_backend(self) -> Backend {
        match self {
            BackendSection::Pure => Backend::Pure,
            BackendSection::Mixed { noise } => Backend::Mixed { noise },
        }
    }

    pub fn noise(self) -> NoiseParams {
        match self {
            BackendSection::Pure => NoiseParams::default(),
            BackendSection::Mixed { noise } => noise,
        }
    }
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection::Pure
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub mode: Mode,
    pub lambda_grid: Vec<f64>,
    pub survival_floor: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { mode: Mode::Ed, lambda_grid: vec![0.01, 0.05, 0.1], survival_floor: 0.8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsbarSection {
    /// LCU order A: number of translated copies combined.
    pub order: usize,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub spin: u32,
}

impl Default for PsbarSection {
    fn default() -> Self {
        Self { order: 2, sizes: vec![4, 6, 8, 10], samples: 200, spin: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayersSection {
    pub max_layers: usize,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdSection {
    pub n_levels: usize,
}

impl Default for EdSection {
    fn default() -> Self {
        Self { n_levels: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub ansatz: Option<AnsatzSection>,
    #[serde(default)]
    pub sectors: Vec<SectorSection>,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub zne: ZneConfig,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub psbar: PsbarSection,
    #[serde(default)]
    pub layers: Option<LayersSection>,
    #[serde(default)]
    pub ed: EdSection,
    #[serde(default = "default_out")]
    pub out_dir: String,
}

fn default_out() -> String {
    "out".into()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.model.n_sites < 4 || self.model.n_sites % 2 != 0 {
            return Err(Error::OddChainLength(self.model.n_sites));
        }
        if let Some(g) = &self.model.ratio_grid {
            if !(g.step > 0.0) || g.stop < g.start {
                return Err(Error::Config("ratio_grid needs stop >= start and step > 0".into()));
            }
        }
        self.optimizer.validate()?;
        self.zne.validate()?;
        if let BackendSection::Mixed { noise } = self.backend {
            noise.validate()?;
        }
        for s in &self.sectors {
            s.to_spec()?;
        }
        Ok(())
    }

    pub fn sector_specs(&self) -> Result<Vec<SectorSpec>> {
        self.sectors.iter().map(|s| s.to_spec()).collect()
    }

    pub fn ratio_grid(&self) -> Result<Vec<f64>> {
        match (&self.model.ratio_grid, self.model.j2) {
            (Some(g), _) => levelcross::spectroscopy::ratio_grid(g.start, g.stop, g.step),
            (None, Some(j2)) => Ok(vec![j2]),
            (None, None) => Err(Error::Config("set model.j2 or model.ratio_grid".into())),
        }
    }

    pub fn single_j2(&self) -> Result<f64> {
        self.model
            .j2
            .ok_or_else(|| Error::Config("this command needs model.j2".into()))
    }

    pub fn ansatz_section(&self) -> Result<&AnsatzSection> {
        self.ansatz
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs an [ansatz] section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::parse("[model]\nn_sites = 4\nj2 = 0.15\n").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.model.j1, 1.0);
        assert_eq!(c.out_dir, "out");
        assert_eq!(c.ratio_grid().unwrap(), vec![0.15]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[model]\nn_sites = 4\nj2 = 0.1\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("[model]\nn_sites = 4\n[optimizer]\nnope = 3\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::parse("[model]\nn_sites = 5\nj2 = 0.1\n").is_err());
        let bad_sector = "[model]\nn_sites = 4\nj2 = 0.1\n[[sectors]]\nspin = 3\nk = \"pi\"\n";
        assert!(RunConfig::parse(bad_sector).is_err());
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
seed = 7
out_dir = "results"
[model]
n_sites = 4
j1 = 1.0
[model.ratio_grid]
start = 0.15
stop = 0.35
step = 0.05
[ansatz]
layers = 1
scheme = "even-odd"
[[sectors]]
spin = 0
k = "pi"
[[sectors]]
spin = 1
k = "pi"
[backend]
kind = "mixed"
[backend.noise]
tau_factor = 1.0
[optimizer]
lambda = 0.05
[scan]
mode = "zne"
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sectors.len(), 2);
        assert_eq!(c.scan.mode, Mode::Zne);
        assert!(matches!(c.backend, BackendSection::Mixed { .. }));
        assert_eq!(c.ratio_grid().unwrap().len(), 5);
    }
}
