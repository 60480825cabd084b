use std::path::{Path, PathBuf};

use mmfe_core::envs::{build_named, CyberParams, GameModel, TableModel, TestEnvSpec, REGISTRY};
use mmfe_core::exact::ExactConfig;
use mmfe_core::rl::LearnerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Configs shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("cyber_default", include_str!("../configs/cyber_default.toml")),
    ("cyber_exact", include_str!("../configs/cyber_exact.toml")),
    ("cyber_threshold", include_str!("../configs/cyber_threshold.toml")),
    ("identity_trivial", include_str!("../configs/identity_trivial.toml")),
    ("contracting", include_str!("../configs/contracting.toml")),
    ("contracting_exact", include_str!("../configs/contracting_exact.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Exact,
    Rhpg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// A registered name, or `table` for a custom `[env.table]` spec.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cyber: Option<CyberParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TestEnvSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub solver: Solver,
    pub env: EnvConfig,
    #[serde(default)]
    pub exact: ExactConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(describe(text, &e)))?;
        if cfg.learner.seed != 0 && cfg.learner.seed != cfg.seed {
            return Err(CliError::Config("learner.seed: set the top-level `seed` instead".into()));
        }
        cfg.learner.seed = cfg.seed;
        Ok(cfg)
    }

    /// Reads a config file, or a bundled config when `source` names one and no such file exists.
    pub fn load(source: &str) -> Result<(Self, String), CliError> {
        let path = Path::new(source);
        let text = if path.exists() {
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{source}: {e}")))?
        } else if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == source) {
            text.to_string()
        } else {
            return Err(CliError::Config(format!("config `{source}` is neither a file nor a bundled config")));
        };
        Ok((Self::parse(&text)?, text))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.learner.seed = seed;
        self
    }

    pub fn build_model(&self) -> Result<Box<dyn GameModel>, CliError> {
        let env = &self.env;
        if env.cyber.is_some() && env.name != "cyber" {
            return Err(CliError::Config(format!("env.cyber: only valid with env.name = \"cyber\", not `{}`", env.name)));
        }
        let model: Box<dyn GameModel> = match (env.name.as_str(), &env.table) {
            ("table", Some(spec)) => {
                Box::new(TableModel::new(spec.clone()).map_err(|e| CliError::Config(format!("env.table: {e}")))?)
            }
            ("table", None) => return Err(CliError::Config("env.table: required when env.name = \"table\"".into())),
            (name, Some(_)) => {
                return Err(CliError::Config(format!("env.table: only valid with env.name = \"table\", not `{name}`")))
            }
            (name, None) => {
                if !REGISTRY.iter().any(|(n, _)| *n == name) {
                    let known: Vec<&str> = REGISTRY.iter().map(|(n, _)| *n).chain(["table"]).collect();
                    return Err(CliError::Config(format!(
                        "env.name: unknown environment `{name}` (known: {})",
                        known.join(", ")
                    )));
                }
                build_named(name, env.cyber.clone()).map_err(|e| CliError::Config(format!("env: {e}")))?
            }
        };
        Ok(model)
    }

    /// Checks every tolerance and cap against the chosen solver and model.
    pub fn validate(&self, model: &dyn GameModel) -> Result<(), CliError> {
        match self.solver {
            Solver::Exact => self.exact.validate(),
            Solver::Rhpg => self.learner.validate(model.num_types()),
        }
        .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical JSON echo with every default filled in. The output
    /// directory is left out so that relocated runs hash identically.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        value
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Turns a TOML error into a one-line diagnostic led by the offending key.
fn describe(text: &str, err: &toml::de::Error) -> String {
    let message = err.message().trim().to_string();
    let Some(span) = err.span() else {
        return message;
    };
    let before = &text[..span.start.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[line_start..].find('\n').map_or(text.len(), |i| line_start + i);
    let line = &text[line_start..line_end];
    let section = before[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && l.ends_with(']'))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = match line.split_once('=') {
        Some((k, _)) => k.trim().to_string(),
        None => line.trim().trim_matches(|c| c == '[' || c == ']').to_string(),
    };
    // an unknown field is reported against the whole table; name it directly
    let key = unknown_field(&message).unwrap_or(key);
    let full = match section {
        Some(s) if !key.is_empty() && !key.starts_with(&s) => format!("{s}.{key}"),
        _ => key,
    };
    let lineno = text[..line_start].matches('\n').count() + 1;
    if full.is_empty() {
        format!("line {lineno}: {message}")
    } else {
        format!("{full} (line {lineno}): {message}")
    }
}

fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest.split('`').next()?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse_and_validate() {
        for (name, text) in BUNDLED {
            let cfg = RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let model = cfg.build_model().unwrap();
            cfg.validate(model.as_ref()).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn type_errors_name_the_key() {
        let text = "solver = \"exact\"\n[env]\nname = \"identity\"\n[exact]\neps = \"tiny\"\n";
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("exact.eps"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = "solver = \"exact\"\n[env]\nname = \"identity\"\n[learner]\nagent = [3]\n";
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("agent"), "{err}");
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::parse(BUNDLED[0].1).unwrap();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.clone().with_seed(1).hash());
    }

    #[test]
    fn unknown_environment_is_a_config_error() {
        let cfg = RunConfig::parse("solver = \"exact\"\n[env]\nname = \"nope\"\n").unwrap();
        let err = cfg.build_model().err().unwrap().to_string();
        assert!(err.contains("env.name"), "{err}");
    }
}
