//! TOML run configuration: `[model]`, `[kernel]`, `[run]` and an ignored `[meta]`.

use std::path::Path;

use markov_ustat::chain::ChainModel;
use markov_ustat::kernels::{KernelSpec, PairWeight};
use markov_ustat::ustat::{Centering, Normalization};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::read_to_string;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ChainModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub run: RunParams,
}

/// Written into resolved configs, ignored when reading them back.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub artifact_version: String,
    pub command: String,
}

/// Command parameters. Every key is optional; each command reads the ones
/// it needs and fills defaults for the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centering: Option<Centering>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_out_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PairWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_inner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants_probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights1: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = read_to_string(path)?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), one_line(&e.to_string()))))?;
        config.meta = None;
        if let Some(model) = &config.model {
            model.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(config)
    }

    pub fn model(&self) -> Result<&ChainModel, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::Config("config has no [model] table".into()))
    }

    pub fn kernel(&self) -> Result<&KernelSpec, CliError> {
        self.kernel.as_ref().ok_or_else(|| CliError::Config("config has no [kernel] table".into()))
    }

    /// The config with only the resolved parameters, stamped for `command`.
    pub fn resolved(&self, command: &str, run: RunParams) -> RunConfig {
        RunConfig {
            meta: Some(Meta { artifact_version: ARTIFACT_VERSION.into(), command: command.into() }),
            model: self.model.clone(),
            kernel: self.kernel.clone(),
            run,
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Io(format!("serializing config: {e}")))
    }
}

/// Error messages must fit on one line.
pub fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Flag value if given, else the config value, else the default.
pub fn pick<T: Clone>(flag: Option<T>, config: &Option<T>, default: T) -> T {
    flag.or_else(|| config.clone()).unwrap_or(default)
}

/// Same as [`pick`] without a default.
pub fn pick_opt<T: Clone>(flag: Option<T>, config: &Option<T>) -> Option<T> {
    flag.or_else(|| config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STATE: &str = r#"
[model]
kind = "finite"
matrix = [[0.9, 0.1], [0.2, 0.8]]

[kernel]
kind = "weighted"
weights = { type = "inverse-lag" }
base = { kind = "product", f = [1.0, -2.0] }

[run]
n = 50
centering = "pi-expectation"
"#;

    #[test]
    fn parses_and_round_trips() {
        let text = TWO_STATE;
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.run.n, Some(50));
        assert_eq!(config.run.centering, Some(Centering::PiExpectation));
        let resolved = config.resolved("ustat", config.run.clone());
        let again: RunConfig = toml::from_str(&resolved.to_toml().unwrap()).unwrap();
        assert_eq!(again.model, config.model);
        assert_eq!(again.kernel, config.kernel);
        assert_eq!(again.run, config.run);
        assert_eq!(again.meta.unwrap().command, "ustat");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{TWO_STATE}\nbogus = 1\n");
        assert!(toml::from_str::<RunConfig>(&bad).is_err());
    }

    #[test]
    fn flags_beat_config() {
        assert_eq!(pick(Some(3), &Some(2), 1), 3);
        assert_eq!(pick(None, &Some(2), 1), 2);
        assert_eq!(pick(None, &None, 1), 1);
    }
}
