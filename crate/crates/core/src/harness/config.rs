//! Experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::function::{corpus, TestFunction};
use crate::operator::index_set;
use crate::orlicz::PhiFunction;
use crate::sigmoid::DensityKernel;

pub const DEFAULT_N_LIST: [u32; 6] = [8, 16, 32, 64, 128, 256];
pub const MIN_GRID: usize = 64;

/// `2^-8, 2^-7, …, 2^4`.
pub fn lambda_scan() -> Vec<f64> {
    (-8..=4).map(|e| 2f64.powi(e)).collect()
}

/// Either an explicit λ list or the default scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaPolicy {
    Fixed(Vec<f64>),
    Scan(ScanTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanTag {
    Scan,
}

impl LambdaPolicy {
    pub fn scan() -> Self {
        LambdaPolicy::Scan(ScanTag::Scan)
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaPolicy::Fixed(v) => v.clone(),
            LambdaPolicy::Scan(_) => lambda_scan(),
        }
    }

    /// `scan` or a comma-separated list such as `0.25,1,4`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "scan" {
            return Ok(Self::scan());
        }
        let values = parse_list::<f64>(text, "lambda")?;
        Ok(LambdaPolicy::Fixed(values))
    }
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        LambdaPolicy::Fixed(vec![0.25, 1.0, 4.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format `{other}` (csv, json, svg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub inequality_abs: f64,
    pub inequality_rel: f64,
    /// Largest acceptable sup-error at the last `n` of a uniform sweep.
    pub uniform_final: f64,
    /// Modular-error target for the convergence checks.
    pub modular_target: f64,
    /// Slack on the denominator lower bound.
    pub denominator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality_abs: 1e-6,
            inequality_rel: 1e-6,
            uniform_final: 0.02,
            modular_target: 1e-2,
            denominator: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn within(&self, lhs: f64, rhs: f64) -> bool {
        lhs <= rhs + self.inequality_abs + self.inequality_rel * rhs.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernels: Vec<String>,
    pub phis: Vec<String>,
    pub functions: Vec<String>,
    pub interval: [f64; 2],
    pub n_list: Vec<u32>,
    pub lambda: LambdaPolicy,
    /// Uniform sup-error points and composite-grid panels.
    pub grid: usize,
    /// Where reports go. Not part of the echo or the hash, so moving the
    /// output does not change report bytes.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// `λ₀` for the rate bound.
    pub lambda0: f64,
    /// Pairs for the modular inequality; all unordered pairs of the
    /// nonnegative functions when absent.
    pub pairs: Option<Vec<(String, String)>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernels: vec!["logistic".into(), "tanh".into(), "ramp".into()],
            phis: vec![
                "power(p=2)".into(),
                "zygmund(alpha=1,beta=1)".into(),
                "exponential(gamma=1)".into(),
            ],
            functions: corpus::NAMES.iter().map(|s| s.to_string()).collect(),
            interval: [0.0, 1.0],
            n_list: DEFAULT_N_LIST.to_vec(),
            lambda: LambdaPolicy::default(),
            grid: 4096,
            out: None,
            format: Format::Csv,
            tolerances: Tolerances::default(),
            seed: 0,
            lambda0: 1.0,
            pairs: None,
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("cannot parse `{s}` in {what} list")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks every invariant and that all names resolve.
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { lower: a, upper: b });
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if self.n_list.contains(&0) || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "n_list must be strictly ascending positive integers, got {:?}",
                self.n_list
            )));
        }
        for &n in &self.n_list {
            index_set(n, a, b)?;
        }
        if self.grid < MIN_GRID {
            return Err(Error::Config(format!("grid must be at least {MIN_GRID}, got {}", self.grid)));
        }
        let lambdas = self.lambda.values();
        if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("lambda values must be positive, got {lambdas:?}")));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Config(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        self.kernels()?;
        self.phis()?;
        self.functions()?;
        self.pair_functions()?;
        Ok(())
    }

    pub fn kernels(&self) -> Result<Vec<DensityKernel>> {
        if self.kernels.is_empty() {
            return Err(Error::Config("no kernels configured".into()));
        }
        self.kernels.iter().map(|k| DensityKernel::by_name(k)).collect()
    }

    pub fn phis(&self) -> Result<Vec<PhiFunction>> {
        if self.phis.is_empty() {
            return Err(Error::Config("no φ-functions configured".into()));
        }
        self.phis.iter().map(|p| PhiFunction::parse(p)).collect()
    }

    /// Resolves function names; each must live on the configured interval.
    pub fn functions(&self) -> Result<Vec<TestFunction>> {
        if self.functions.is_empty() {
            return Err(Error::Config("no functions configured".into()));
        }
        self.functions.iter().map(|name| self.function(name)).collect()
    }

    fn function(&self, name: &str) -> Result<TestFunction> {
        let f = corpus::by_name(name)?;
        let [a, b] = self.interval;
        if f.domain() != (a, b) {
            let (fa, fb) = f.domain();
            return Err(Error::Config(format!(
                "function {name} lives on [{fa}, {fb}] but the interval is [{a}, {b}]"
            )));
        }
        Ok(f)
    }

    pub fn pair_functions(&self) -> Result<Vec<(TestFunction, TestFunction)>> {
        match &self.pairs {
            Some(pairs) => pairs
                .iter()
                .map(|(f, g)| Ok((self.function(f)?, self.function(g)?)))
                .collect(),
            None => {
                let nonneg: Vec<TestFunction> = self.functions()?.into_iter().filter(|f| f.is_nonneg()).collect();
                let mut out = Vec::new();
                for i in 0..nonneg.len() {
                    for j in i..nonneg.len() {
                        out.push((nonneg[i].clone(), nonneg[j].clone()));
                    }
                }
                Ok(out)
            }
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }
}
