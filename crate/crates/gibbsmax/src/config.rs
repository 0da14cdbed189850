//! Experiment configuration: JSON files, inline flags, and the hash that
//! identifies a run in its outputs.

use std::fmt;
use std::path::{Path, PathBuf};

use gibbsmax_core::{IndexedEnsemble, Observable, RemModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Bounds,
    RemSweep,
    OracleCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Bounds => "bounds",
            Command::RemSweep => "rem-sweep",
            Command::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// An ensemble written out in full.
///
/// JSON forms: `{"iid": {"n": 8, "variance": 1.0}}`,
/// `{"labels": ["a", "b"], "covariance": [[1.0, 0.5], [0.5, 1.0]]}` (labels
/// optional) and `{"rem": {"n_spins": 10}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleWire", into = "EnsembleWire")]
pub enum EnsembleDef {
    Iid {
        n: usize,
        variance: f64,
    },
    Covariance {
        labels: Option<Vec<String>>,
        covariance: Vec<Vec<f64>>,
    },
    Rem {
        n_spins: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IidWire {
    n: usize,
    variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RemWire {
    n_spins: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iid: Option<IidWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rem: Option<RemWire>,
}

impl TryFrom<EnsembleWire> for EnsembleDef {
    type Error = String;

    fn try_from(w: EnsembleWire) -> Result<Self, String> {
        match (w.iid, w.covariance, w.rem) {
            (Some(IidWire { n, variance }), None, None) if w.labels.is_none() => Ok(EnsembleDef::Iid { n, variance }),
            (None, Some(covariance), None) => Ok(EnsembleDef::Covariance {
                labels: w.labels,
                covariance,
            }),
            (None, None, Some(RemWire { n_spins })) if w.labels.is_none() => Ok(EnsembleDef::Rem { n_spins }),
            _ => Err("ensemble needs exactly one of `iid`, `covariance` (with optional `labels`) or `rem`".into()),
        }
    }
}

impl From<EnsembleDef> for EnsembleWire {
    fn from(def: EnsembleDef) -> Self {
        match def {
            EnsembleDef::Iid { n, variance } => EnsembleWire {
                iid: Some(IidWire { n, variance }),
                ..Default::default()
            },
            EnsembleDef::Covariance { labels, covariance } => EnsembleWire {
                labels,
                covariance: Some(covariance),
                ..Default::default()
            },
            EnsembleDef::Rem { n_spins } => EnsembleWire {
                rem: Some(RemWire { n_spins }),
                ..Default::default()
            },
        }
    }
}

/// An ensemble given inline or as a path to a JSON file holding an
/// [`EnsembleDef`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleSpec {
    Inline(EnsembleDef),
    File(PathBuf),
}

/// A built ensemble, keeping the REM structure when there is one.
pub enum Built {
    Plain(IndexedEnsemble),
    Rem(RemModel),
}

impl Built {
    pub fn ensemble(&self) -> &IndexedEnsemble {
        match self {
            Built::Plain(e) => e,
            Built::Rem(m) => m.ensemble(),
        }
    }
}

impl EnsembleDef {
    pub fn build(&self) -> Result<Built, CliError> {
        Ok(match self {
            EnsembleDef::Iid { n, variance } => Built::Plain(IndexedEnsemble::build_iid(*n, *variance)?),
            EnsembleDef::Covariance { labels, covariance } => {
                let labels = labels
                    .clone()
                    .unwrap_or_else(|| (0..covariance.len()).map(|i| format!("t{i}")).collect());
                Built::Plain(IndexedEnsemble::build_from_covariance(labels, covariance)?)
            }
            EnsembleDef::Rem { n_spins } => Built::Rem(RemModel::new(*n_spins)?),
        })
    }
}

impl EnsembleSpec {
    /// Reads the file if needed.
    pub fn resolve(&self) -> Result<EnsembleDef, CliError> {
        match self {
            EnsembleSpec::Inline(def) => Ok(def.clone()),
            EnsembleSpec::File(path) => read_json(path),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

fn default_n_samples() -> usize {
    10_000
}

fn default_c() -> f64 {
    1.0 / 17.0
}

fn default_nodes() -> usize {
    160
}

/// Everything a run needs. Field order is the hashing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, alias = "ensemble_spec", skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub beta_grid: Vec<f64>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Observable names for `estimate`.
    #[serde(default)]
    pub observables: Vec<String>,
    /// Packing scale for the soft super-Sudakov check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing_scale: Option<f64>,
    /// Gauss–Hermite nodes per dimension for `oracle-check`.
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    /// Output path prefix; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub plot: bool,
    /// Worker threads; never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            ensemble: None,
            beta_grid: Vec::new(),
            n_samples: default_n_samples(),
            seed: 0,
            c: default_c(),
            observables: Vec::new(),
            packing_scale: None,
            quadrature_nodes: default_nodes(),
            output: None,
            format: Format::Csv,
            plot: false,
            threads: None,
        }
    }

    /// Checks the invariants that do not need the ensemble.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_samples < 2 {
            return Err(CliError::Config(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(CliError::Config(format!("c must lie in (0, 1), got {}", self.c)));
        }
        if let Some(i) = self.beta_grid.iter().position(|b| !(*b >= 0.0) || !b.is_finite()) {
            return Err(CliError::Config(format!(
                "beta_grid[{i}] = {} is not a finite value >= 0",
                self.beta_grid[i]
            )));
        }
        if let Some(i) = self.beta_grid.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(CliError::Config(format!(
                "beta_grid must be strictly increasing (position {})",
                i + 1
            )));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        if self.plot && self.output.is_none() {
            return Err(CliError::Config("plot needs an output path prefix".into()));
        }
        if self.plot && self.command != Command::RemSweep {
            return Err(CliError::Config("plot is only available for rem-sweep".into()));
        }
        for name in &self.observables {
            parse_observable(name)?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of the fields that determine the
    /// numbers: threads, output location, format and plotting are left out,
    /// and a file ensemble is hashed by its contents.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut view = self.clone();
        view.threads = None;
        view.output = None;
        view.format = Format::Csv;
        view.plot = false;
        if let Some(spec) = &self.ensemble {
            view.ensemble = Some(EnsembleSpec::Inline(spec.resolve()?));
        }
        let json = serde_json::to_vec(&view).map_err(|e| CliError::Config(e.to_string()))?;
        let digest = Sha256::digest(&json);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// `start:stop:step`, both ends included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("beta grid `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !step.is_finite() || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad());
    }
    let k = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| start + i as f64 * step).collect())
}

/// Observable names accepted by `estimate`; Rényi orders as
/// `renyi_to_uniform(0.5)` or `renyi:0.5`.
pub fn parse_observable(name: &str) -> Result<Observable, CliError> {
    let name = name.trim();
    let simple = match name {
        "gibbs_average" => Some(Observable::GibbsAverage),
        "free_energy" => Some(Observable::FreeEnergy),
        "participation_ratio" => Some(Observable::ParticipationRatio),
        "kl_to_uniform" => Some(Observable::KlToUniform),
        "shannon_entropy" => Some(Observable::ShannonEntropy),
        "expected_max" => Some(Observable::ExpectedMax),
        "replica_gibbs" => Some(Observable::ReplicaGibbs),
        "log_partition" => Some(Observable::LogPartition),
        "pressure" => Some(Observable::Pressure),
        _ => None,
    };
    if let Some(obs) = simple {
        return Ok(obs);
    }
    let alpha = name
        .strip_prefix("renyi:")
        .or_else(|| name.strip_prefix("renyi_to_uniform(").and_then(|s| s.strip_suffix(')')));
    if let Some(a) = alpha {
        let alpha: f64 = a
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad Renyi order in `{name}`")))?;
        let obs = Observable::RenyiToUniform(alpha);
        obs.validate(2)?;
        return Ok(obs);
    }
    Err(CliError::Config(format!("unknown observable `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:4:0.25").unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[16], 4.0);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("2:1:0.1").is_err());
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
    }

    #[test]
    fn observable_names() {
        assert_eq!(parse_observable("gibbs_average").unwrap(), Observable::GibbsAverage);
        assert_eq!(parse_observable("renyi:0.5").unwrap(), Observable::RenyiToUniform(0.5));
        assert_eq!(
            parse_observable("renyi_to_uniform(2)").unwrap(),
            Observable::RenyiToUniform(2.0)
        );
        assert!(parse_observable("renyi:-1").is_err());
        assert!(parse_observable("nope").is_err());
    }

    #[test]
    fn config_json_roundtrip_and_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"command": "rem-sweep", "ensemble": {"rem": {"n_spins": 10}}, "beta_grid": [0, 1], "seed": 42}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Command::RemSweep);
        assert_eq!(cfg.n_samples, 10_000);
        assert_eq!(
            cfg.ensemble,
            Some(EnsembleSpec::Inline(EnsembleDef::Rem { n_spins: 10 }))
        );
        let aliased: ExperimentConfig = serde_json::from_str(
            r#"{"command": "rem-sweep", "ensemble_spec": {"rem": {"n_spins": 10}}, "beta_grid": [0, 1], "seed": 42}"#,
        )
        .unwrap();
        assert_eq!(aliased, cfg);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"command": "estimate", "bogus": 1}"#).is_err());
    }

    #[test]
    fn ensemble_file_forms() {
        let iid: EnsembleDef = serde_json::from_str(r#"{"iid": {"n": 4, "variance": 0.5}}"#).unwrap();
        assert_eq!(iid, EnsembleDef::Iid { n: 4, variance: 0.5 });
        let cov: EnsembleDef =
            serde_json::from_str(r#"{"labels": ["a", "b"], "covariance": [[1, 0.5], [0.5, 1]]}"#).unwrap();
        let built = cov.build().unwrap();
        assert_eq!(built.ensemble().labels(), ["a", "b"]);
        assert!((built.ensemble().geometry().diameter - 1.0).abs() < 1e-12);
        assert_eq!(serde_json::to_value(&cov).unwrap()["labels"][1], "b");
        for bad in [
            r#"{"labels": ["a", "b"]}"#,
            r#"{"iid": {"n": 4, "variance": 1}, "rem": {"n_spins": 3}}"#,
            r#"{"iid": {"n": 4, "variance": 1}, "labels": ["a"]}"#,
            r#"{"covariance": [[1]], "extra": 1}"#,
        ] {
            assert!(serde_json::from_str::<EnsembleDef>(bad).is_err(), "{bad}");
        }
        let err = EnsembleDef::Covariance {
            labels: Some(vec!["a".into(), "b".into()]),
            covariance: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        }
        .build()
        .err()
        .unwrap();
        assert!(err.to_string().contains("(a, b)"));
    }

    #[test]
    fn hash_ignores_threads_and_output() {
        let mut a = ExperimentConfig::new(Command::Estimate);
        a.beta_grid = vec![0.0, 1.0];
        let mut b = a.clone();
        b.threads = Some(8);
        b.output = Some("elsewhere/out".into());
        b.format = Format::Json;
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(Command::Bounds);
        c.beta_grid = vec![1.0, 0.5];
        assert!(c.validate().is_err());
        c.beta_grid = vec![0.5, 1.0];
        assert!(c.validate().is_ok());
        c.n_samples = 1;
        assert!(c.validate().is_err());
        c.n_samples = 10;
        c.plot = true;
        assert!(c.validate().is_err());
    }
}
