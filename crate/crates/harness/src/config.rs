//! Experiment configuration: a flat TOML file whose search keys match the
//! hyperparameter names of [`GaConfig`].

use std::path::{Path, PathBuf};

use cbgp_core::evolution::GaConfig;
use cbgp_core::problems::problem;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error(transparent)]
    Search(#[from] cbgp_core::evolution::ConfigError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problems: Vec<String>,
    pub runs: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub workers: usize,
    #[serde(flatten)]
    pub ga: GaConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problems: Vec::new(),
            runs: 1,
            base_seed: 0,
            output_dir: PathBuf::from("cbgp-out"),
            workers: std::thread::available_parallelism().map_or(1, usize::from),
            ga: GaConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document. Keys not listed in the
    /// default config are rejected.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse()?;
        let known = known_keys();
        if let Some(k) = table.keys().find(|k| !known.contains(k)) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        let cfg: Self = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Zero("runs"));
        }
        if self.workers == 0 {
            return Err(ConfigError::Zero("workers"));
        }
        if let Some(p) = self.problems.iter().find(|p| problem(p).is_none()) {
            return Err(ConfigError::UnknownProblem(p.clone()));
        }
        self.ga.validate()?;
        Ok(())
    }

    pub fn seed(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn known_keys() -> Vec<String> {
    match toml::Table::try_from(ExperimentConfig::default()) {
        Ok(t) => t.keys().cloned().collect(),
        Err(e) => panic!("default config must serialize: {e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_keys_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            problems = ["smallest", "median"]
            runs = 3
            base_seed = 40
            workers = 2
            population_size = 200
            max_generations = 100
            umad_rate = 0.1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.problems, ["smallest", "median"]);
        assert_eq!(cfg.ga.population_size, 200);
        assert_eq!(cfg.ga.max_generations, 100);
        assert_eq!(cfg.ga.genome_size_max, 250);
        assert_eq!(cfg.seed(2), 42);
    }

    #[test]
    fn every_hyperparameter_is_a_key() {
        let keys = known_keys();
        for k in [
            "population_size",
            "max_generations",
            "umad_rate",
            "simplification_steps",
            "genome_size_min",
            "genome_size_max",
            "n_train",
            "n_test",
        ] {
            assert!(keys.iter().any(|x| x == k), "{k}");
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(ExperimentConfig::from_toml("popsize = 3"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::from_toml("runs = 0"), Err(ConfigError::Zero("runs"))));
        assert!(matches!(
            ExperimentConfig::from_toml(r#"problems = ["fizzbuzz"]"#),
            Err(ConfigError::UnknownProblem(_))
        ));
        assert!(matches!(ExperimentConfig::from_toml("umad_rate = 2.0"), Err(ConfigError::Search(_))));
        assert!(matches!(ExperimentConfig::from_toml("runs = "), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig { problems: vec!["smallest".into()], runs: 4, ..Default::default() };
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
