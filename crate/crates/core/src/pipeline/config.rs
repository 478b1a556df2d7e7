use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cmapss::{FleetSpec, HiConfig, DEFAULT_SENSORS, FAILURE_THRESHOLD};
use crate::error::{Error, Result};
use crate::eval::Method;
use crate::net::NetConfig;
use crate::rul::LinearBenchmark;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subset {
    FD001,
    FD002,
    FD003,
    FD004,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::FD001, Subset::FD002, Subset::FD003, Subset::FD004];

    pub fn name(self) -> &'static str {
        match self {
            Subset::FD001 => "FD001",
            Subset::FD002 => "FD002",
            Subset::FD003 => "FD003",
            Subset::FD004 => "FD004",
        }
    }

    /// Units in the run-to-failure training file.
    pub fn expected_units(self) -> usize {
        match self {
            Subset::FD001 | Subset::FD003 => 100,
            Subset::FD002 => 260,
            Subset::FD004 => 248,
        }
    }

    /// Operating regimes of the subset.
    pub fn regimes(self) -> usize {
        match self {
            Subset::FD001 | Subset::FD003 => 1,
            Subset::FD002 | Subset::FD004 => 6,
        }
    }

    pub fn train_file(self) -> String {
        format!("train_{}.txt", self.name())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subset::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown subset {s:?}; expected FD001..FD004")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding `train_FD00x.txt`.
    pub dir: PathBuf,
    /// Per-subset file overrides, keyed by subset name.
    pub paths: BTreeMap<String, PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: PathBuf::from("data/CMAPSSData"),
            paths: BTreeMap::new(),
        }
    }
}

impl DataConfig {
    pub fn path_for(&self, subset: Subset) -> PathBuf {
        self.paths
            .get(subset.name())
            .cloned()
            .unwrap_or_else(|| self.dir.join(subset.train_file()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiSection {
    pub sensors: Vec<usize>,
    pub train_fraction: f64,
    pub model: HiConfig,
}

impl Default for HiSection {
    fn default() -> Self {
        HiSection {
            sensors: DEFAULT_SENSORS.to_vec(),
            train_fraction: 0.8,
            model: HiConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub min_history: usize,
    pub stride: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            min_history: 10,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseOverrides {
    pub gamma_sq: Option<f64>,
    pub eta_b_sq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpdateConfig {
    pub every: u32,
    pub warmup: u32,
    /// Initial posterior variance of the drift.
    pub omega0_sq: f64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            every: 10,
            warmup: 20,
            omega0_sq: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointEstimate {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulConfig {
    pub n_curves: usize,
    /// Longest prediction horizon in cycles; predictions that never reach
    /// the threshold within it are reported at the cap.
    pub horizon_cap: usize,
    /// Fixed KDE bandwidth in cycles; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
    pub point: PointEstimate,
    /// Rollouts stop once the curve `k` standard deviations below the mean
    /// has crossed the threshold.
    pub coverage_sd: f64,
}

impl Default for RulConfig {
    fn default() -> Self {
        RulConfig {
            n_curves: 200,
            horizon_cap: 500,
            bandwidth: None,
            point: PointEstimate::Mean,
            coverage_sd: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub start: u32,
    pub every: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { start: 20, every: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub parallel: bool,
    pub process: LinearBenchmark,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repetitions: 20,
            parallel: false,
            process: LinearBenchmark::default(),
        }
    }
}

/// Everything an experiment needs. Defaults reproduce the full protocol:
/// train on FD002, evaluate on its held-out units and on the other subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Subset whose training units fit the HI model and the networks.
    pub train_subset: Subset,
    pub transfer_subsets: Vec<Subset>,
    pub out_dir: PathBuf,
    pub methods: Vec<Method>,
    pub ci_level: f64,
    pub threshold: f64,
    pub data: DataConfig,
    pub hi: HiSection,
    pub net: NetConfig,
    pub pairs: PairConfig,
    pub noise: NoiseOverrides,
    pub update: UpdateConfig,
    pub rul: RulConfig,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
    /// Shape of the surrogate fleets written by `synth`.
    pub synth: FleetSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            train_subset: Subset::FD002,
            transfer_subsets: vec![Subset::FD001, Subset::FD003, Subset::FD004],
            out_dir: PathBuf::from("out"),
            methods: Method::ALL.to_vec(),
            ci_level: 0.9,
            threshold: FAILURE_THRESHOLD,
            data: DataConfig::default(),
            hi: HiSection::default(),
            net: NetConfig::default(),
            pairs: PairConfig::default(),
            noise: NoiseOverrides::default(),
            update: UpdateConfig::default(),
            rul: RulConfig::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
            synth: FleetSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level must be in (0, 1), got {}", self.ci_level));
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.update.every == 0 {
            return bad("update.every must be >= 1".into());
        }
        if !(self.update.omega0_sq >= 0.0) {
            return bad("update.omega0_sq must be >= 0".into());
        }
        if self.eval.every == 0 {
            return bad("eval.every must be >= 1".into());
        }
        if self.eval.start < self.update.warmup {
            return bad(format!(
                "eval.start ({}) precedes the drift warmup ({})",
                self.eval.start, self.update.warmup
            ));
        }
        if self.rul.n_curves < 2 || self.rul.horizon_cap == 0 {
            return bad("rul needs n_curves >= 2 and horizon_cap >= 1".into());
        }
        if self.rul.bandwidth.is_some_and(|h| !(h > 0.0)) {
            return bad("rul.bandwidth must be positive".into());
        }
        if self.pairs.min_history == 0 || self.pairs.stride == 0 {
            return bad("pairs.min_history and pairs.stride must be >= 1".into());
        }
        for (name, v) in [("gamma_sq", self.noise.gamma_sq), ("eta_b_sq", self.noise.eta_b_sq)] {
            if v.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
                return bad(format!("noise.{name} must be >= 0"));
            }
        }
        for key in self.data.paths.keys() {
            key.parse::<Subset>().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.net.validate()
    }

    /// SHA-256 of the canonical serialization, first 16 hex digits. Input
    /// and output locations are left out so a moved run keeps its hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.data = DataConfig {
            dir: PathBuf::new(),
            paths: BTreeMap::new(),
        };
        let digest = Sha256::digest(c.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::derive(self.seed)
    }
}

/// Per-stage seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub split: u64,
    pub hi: u64,
    pub train: u64,
    pub predict: u64,
    pub bench: u64,
    pub synth: u64,
}

impl Seeds {
    pub fn derive(master: u64) -> Self {
        let m = |k| crate::rng::mix(master, k);
        Seeds {
            master,
            split: m(11),
            hi: m(12),
            train: m(13),
            predict: m(14),
            bench: m(15),
            synth: m(16),
        }
    }
}
