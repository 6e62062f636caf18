//! Run settings from flags, a TOML file and `PROOFGROVE_*` variables.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use proofgrove::search::{SearchConfig, SearchMode};
use proofgrove::tactics::KernelMode;

use crate::CliError;

/// Every setting is optional at each layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub policy: Option<String>,
    pub mode: Option<String>,
    pub rollouts: Option<usize>,
    pub max_steps: Option<usize>,
    pub max_expansions: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: Option<u64>,
    pub pool: Option<usize>,
    pub allow_library_search: Option<bool>,
    pub policy_timeout_ms: Option<u64>,
    pub jobs: Option<usize>,
    pub kernel_mode: Option<String>,
    pub format: Option<String>,
}

macro_rules! each_field {
    ($m:ident) => {
        $m!(policy, mode, rollouts, max_steps, max_expansions, max_depth, seed, pool, allow_library_search,
            policy_timeout_ms, jobs, kernel_mode, format)
    };
}

fn parse_env<T: FromStr>(key: &str, raw: String) -> Result<T, CliError> {
    raw.trim().parse().map_err(|_| CliError::Usage(format!("{key}: cannot parse {raw:?}")))
}

impl Settings {
    /// Fields of `self` win over fields of `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        macro_rules! merge {
            ($($f:ident),*) => { Settings { $($f: self.$f.or(lower.$f)),* } };
        }
        each_field!(merge)
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Reads `PROOFGROVE_<FIELD>` through `var`.
    pub fn from_env(var: impl Fn(&str) -> Option<String>) -> Result<Settings, CliError> {
        macro_rules! read {
            ($($f:ident),*) => {
                Settings {
                    $($f: {
                        let key = format!("PROOFGROVE_{}", stringify!($f).to_uppercase());
                        match var(&key) {
                            Some(raw) => Some(parse_env(&key, raw)?),
                            None => None,
                        }
                    }),*
                }
            };
        }
        Ok(each_field!(read))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Records,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub policy: String,
    pub search: SearchConfig,
    pub policy_timeout_ms: u64,
    pub jobs: usize,
    pub kernel_mode: Option<KernelMode>,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<RunConfig, CliError> {
        let d = SearchConfig::default();
        let mode = match s.mode.as_deref() {
            None => d.mode,
            Some(m) => SearchMode::parse(m).ok_or_else(|| CliError::Usage(format!("unknown mode {m:?}")))?,
        };
        let kernel_mode = match s.kernel_mode.as_deref() {
            None => None,
            Some(k) => Some(KernelMode::parse(k).ok_or_else(|| CliError::Usage(format!("unknown kernel mode {k:?}")))?),
        };
        let format = match s.format.as_deref() {
            None | Some("text") => Format::Text,
            Some("records") => Format::Records,
            Some(f) => return Err(CliError::Usage(format!("unknown format {f:?}"))),
        };
        let pool = s.pool.unwrap_or(d.pool_size);
        let jobs = s.jobs.unwrap_or(1);
        if pool == 0 || jobs == 0 {
            return Err(CliError::Usage("--pool and --jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            policy: s.policy.unwrap_or_else(|| "enum".into()),
            search: SearchConfig {
                mode,
                rollouts: s.rollouts.unwrap_or(d.rollouts),
                max_steps: s.max_steps.unwrap_or(d.max_steps),
                max_expansions: s.max_expansions.unwrap_or(d.max_expansions),
                max_depth: s.max_depth.unwrap_or(d.max_depth),
                seed: s.seed.unwrap_or(d.seed),
                pool_size: pool,
                allow_library_search: s.allow_library_search.unwrap_or(false),
                ..d
            },
            policy_timeout_ms: s.policy_timeout_ms.unwrap_or(10_000),
            jobs,
            kernel_mode,
            format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_env() {
        let flags = Settings { seed: Some(1), ..Settings::default() };
        let file: Settings = toml::from_str("seed = 2\nrollouts = 3\n").unwrap();
        let env = Settings::from_env(|k| match k {
            "PROOFGROVE_SEED" => Some("9".into()),
            "PROOFGROVE_ROLLOUTS" => Some("9".into()),
            "PROOFGROVE_MAX_STEPS" => Some("7".into()),
            _ => None,
        })
        .unwrap();
        let rc = RunConfig::resolve(flags.over(file.over(env))).unwrap();
        assert_eq!((rc.search.seed, rc.search.rollouts, rc.search.max_steps), (1, 3, 7));
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert!(Settings::from_env(|_| Some("x".into())).is_err());
        assert!(toml::from_str::<Settings>("colour = 1").is_err());
        let s = Settings { mode: Some("dfs".into()), ..Settings::default() };
        assert!(RunConfig::resolve(s).is_err());
    }
}
