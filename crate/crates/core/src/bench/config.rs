//! Declarative experiment descriptions, read from TOML.
//!
//! ```toml
//! master_seed = 2024
//! timing = false                  # optional; record mean runtime per row
//!
//! [[experiment]]
//! id = "staircase-order"
//! n = [1024, 4096]
//! replications = 200              # optional, default 200
//! p = [1.0, 2.0]                  # optional, default [2.0]
//! signal = { family = "staircase", k = 8, delta = 4.0 }
//! noise = { law = "gaussian", sigma = 1.0 }
//! estimators = [
//!   { kind = "iso" },
//!   { kind = "reduced" },         # k omitted: use the true k of the signal
//!   { kind = "reduced", k = 2 },
//!   { kind = "auto" },
//! ]
//! ```
//!
//! Signal families: `staircase {k, delta}`, `lower_bound {alpha, ell?}`
//! (`ell` omitted draws a fresh `ell` per replication), `ramp {total_variation}`,
//! `unimodal {k, delta}`. Noise laws: `gaussian`, `gen_gaussian` (needs
//! `gamma`), `uniform`. Estimator kinds: `iso`, `reduced {k?}`,
//! `auto {c_tau?, tau?, known_sigma?}`, `auto_modified {...}`, `segment {k?}`,
//! `auto_segment {c_tau?, tau?, known_sigma?, k_max?}`, `unimodal {k?, known_sigma?}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::NoiseLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub master_seed: u64,
    #[serde(default)]
    pub timing: bool,
    #[serde(rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

fn default_replications() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub n: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    pub signal: SignalSpec,
    pub noise: NoiseSpec,
    pub estimators: Vec<EstimatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Staircase { k: usize, delta: f64 },
    LowerBound { alpha: f64, ell: Option<usize> },
    Ramp { total_variation: f64 },
    Unimodal { k: usize, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    GenGaussian,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub law: NoiseKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn law(&self) -> Result<NoiseLaw> {
        match (self.law, self.gamma) {
            (NoiseKind::Gaussian, None) => Ok(NoiseLaw::Gaussian),
            (NoiseKind::Uniform, None) => Ok(NoiseLaw::Uniform),
            (NoiseKind::GenGaussian, Some(gamma)) => Ok(NoiseLaw::GenGaussian { gamma }),
            (NoiseKind::GenGaussian, None) => Err(Error::config("gamma", "gen_gaussian needs gamma")),
            (_, Some(_)) => Err(Error::config("gamma", "gamma only applies to gen_gaussian")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Iso,
    Reduced {
        k: Option<usize>,
    },
    Auto {
        c_tau: Option<f64>,
        tau: Option<f64>,
        #[serde(default)]
        known_sigma: bool,
    },
    AutoModified {
        c_tau: Option<f64>,
        tau: Option<f64>,
        #[serde(default)]
        known_sigma: bool,
    },
    Segment {
        k: Option<usize>,
    },
    AutoSegment {
        c_tau: Option<f64>,
        tau: Option<f64>,
        #[serde(default)]
        known_sigma: bool,
        k_max: Option<usize>,
    },
    Unimodal {
        k: Option<usize>,
        #[serde(default)]
        known_sigma: bool,
    },
}

impl EstimatorSpec {
    /// Column label used in the risk table.
    pub fn name(&self) -> String {
        let k_label = |k: &Option<usize>| match k {
            Some(k) => format!("k={k}"),
            None => "k=true".to_string(),
        };
        match self {
            EstimatorSpec::Iso => "iso".into(),
            EstimatorSpec::Reduced { k } => format!("reduced[{}]", k_label(k)),
            EstimatorSpec::Auto { .. } => "auto".into(),
            EstimatorSpec::AutoModified { .. } => "auto_modified".into(),
            EstimatorSpec::Segment { k } => format!("segment[{}]", k_label(k)),
            EstimatorSpec::AutoSegment { .. } => "auto_segment".into(),
            EstimatorSpec::Unimodal { k, .. } => format!("unimodal[{}]", k_label(k)),
        }
    }
}

impl SignalSpec {
    pub fn label(&self) -> String {
        match self {
            SignalSpec::Staircase { k, delta } => format!("staircase(k={k},delta={delta})"),
            SignalSpec::LowerBound { alpha, ell: Some(l) } => {
                format!("lower_bound(alpha={alpha},ell={l})")
            }
            SignalSpec::LowerBound { alpha, ell: None } => format!("lower_bound(alpha={alpha},ell=random)"),
            SignalSpec::Ramp { total_variation } => format!("ramp(V={total_variation})"),
            SignalSpec::Unimodal { k, delta } => format!("unimodal(k={k},delta={delta})"),
        }
    }

    /// Number of pieces of the noiseless signal at length `n`.
    pub fn true_k(&self, n: usize) -> usize {
        match *self {
            SignalSpec::Staircase { k, delta } | SignalSpec::Unimodal { k, delta } => {
                if delta == 0.0 {
                    1
                } else {
                    k
                }
            }
            SignalSpec::LowerBound { alpha, .. } => {
                if alpha == 0.0 {
                    1
                } else {
                    2
                }
            }
            SignalSpec::Ramp { total_variation } => {
                if total_variation == 0.0 {
                    1
                } else {
                    n
                }
            }
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::config("<root>", e.to_string().trim().to_string()))?;
        let cfg: BenchConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Semantic checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(Error::config("experiment", "at least one experiment is required"));
        }
        for (i, e) in self.experiments.iter().enumerate() {
            e.validate(&format!("experiment[{i}]"))?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self, at: &str) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::config(format!("{at}.n"), "grid must be nonempty"));
        }
        if self.replications < 2 {
            return Err(Error::config(format!("{at}.replications"), "need at least 2 replications"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config(format!("{at}.estimators"), "list must be nonempty"));
        }
        for (j, p) in self.p.iter().enumerate() {
            if !(*p >= 1.0 && p.is_finite()) {
                return Err(Error::config(format!("{at}.p[{j}]"), format!("exponent {p} must be >= 1")));
            }
        }
        if self.p.is_empty() {
            return Err(Error::config(format!("{at}.p"), "list must be nonempty"));
        }
        if !(self.noise.sigma > 0.0 && self.noise.sigma.is_finite()) {
            return Err(Error::config(format!("{at}.noise.sigma"), "must be positive"));
        }
        self.noise.law().map_err(|e| match e {
            Error::Config { path, message } => Error::config(format!("{at}.noise.{path}"), message),
            other => other,
        })?;
        self.noise
            .law()?
            .validate()
            .map_err(|e| Error::config(format!("{at}.noise.gamma"), e.to_string()))?;

        for (j, &n) in self.n.iter().enumerate() {
            let here = format!("{at}.n[{j}]");
            match self.signal {
                SignalSpec::Staircase { k, .. } | SignalSpec::Unimodal { k, .. } if k == 0 || k > n => {
                    return Err(Error::config(here, format!("signal has k = {k} pieces but n = {n}")))
                }
                SignalSpec::LowerBound { ell, .. } => {
                    if n < 4 {
                        return Err(Error::config(here, "lower_bound signals need n >= 4"));
                    }
                    let max = crate::signals::max_lower_bound_ell(n);
                    if let Some(l) = ell {
                        if l == 0 || l > max {
                            return Err(Error::config(
                                format!("{at}.signal.ell"),
                                format!("ell = {l} outside 1..={max} for n = {n}"),
                            ));
                        }
                    }
                }
                _ => {}
            }
            for (m, est) in self.estimators.iter().enumerate() {
                let k = match est {
                    EstimatorSpec::Reduced { k }
                    | EstimatorSpec::Segment { k }
                    | EstimatorSpec::Unimodal { k, .. } => *k,
                    EstimatorSpec::AutoSegment { k_max, .. } => *k_max,
                    _ => None,
                };
                if let Some(k) = k {
                    if k == 0 || k > n {
                        return Err(Error::config(
                            format!("{at}.estimators[{m}]"),
                            format!("piece count {k} outside 1..={n}"),
                        ));
                    }
                }
            }
        }
        for (m, est) in self.estimators.iter().enumerate() {
            let (c_tau, tau) = match est {
                EstimatorSpec::Auto { c_tau, tau, .. }
                | EstimatorSpec::AutoModified { c_tau, tau, .. }
                | EstimatorSpec::AutoSegment { c_tau, tau, .. } => (*c_tau, *tau),
                _ => (None, None),
            };
            for (field, v) in [("c_tau", c_tau), ("tau", tau)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::config(format!("{at}.estimators[{m}].{field}"), "must be positive"));
                    }
                }
            }
        }
        Ok(())
    }
}
