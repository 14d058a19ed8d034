//! Plain-text experiment configuration.
//!
//! The format is sectioned `key = value`, one entry per line, with `#`
//! comment lines. Keys before the first section header belong to
//! `[experiment]`.
//!
//! ```text
//! objective = camelback
//! acquisition = aei
//!
//! [search]
//! candidates = 1024
//! ```
//!
//! Every omitted key takes its default, and [`ResolvedConfig`]'s `Display`
//! writes the fully defaulted form back out in the same syntax.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::acquisition::{AcquisitionKind, AcquisitionSpec, MarginConvention};
use crate::bounds::Bounds;
use crate::gp::DEFAULT_HYPER_RESTARTS;
use crate::objectives::{Direction, Objective, DEFAULT_SUBPROCESS_TIMEOUT};
use crate::runner::{parse_epsilon_grid, ExperimentConfig};
use crate::sampling::{SearchBudget, MAX_SOBOL_DIMENSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Builtin(String),
    Subprocess {
        name: String,
        command: String,
        bounds: Bounds,
        direction: Direction,
        timeout_secs: u64,
    },
}

impl ObjectiveSpec {
    pub fn build(&self) -> Objective {
        match self {
            Self::Builtin(name) => Objective::builtin(name).expect("validated at parse time"),
            Self::Subprocess {
                name,
                command,
                bounds,
                direction,
                timeout_secs,
            } => Objective::subprocess(name.clone(), command.clone(), bounds.clone(), *direction)
                .with_timeout(Duration::from_secs(*timeout_secs)),
        }
    }
}

/// A configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub objective: ObjectiveSpec,
    pub strategies: Vec<AcquisitionSpec>,
    pub convention: MarginConvention,
    pub n_init: usize,
    pub budget: usize,
    pub repeats: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub search: SearchBudget,
    pub hyper_restarts: usize,
    pub sweep_grid: String,
    pub sweep_repeats: usize,
    pub sweep_budget: usize,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub objective: Option<String>,
    pub acquisition: Option<String>,
    pub epsilon: Option<f64>,
    pub budget: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub eps_grid: Option<String>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &[
            "objective",
            "acquisition",
            "epsilon",
            "strategies",
            "convention",
            "n_init",
            "budget",
            "repeats",
            "seed",
            "bootstrap_resamples",
        ],
    ),
    (
        "search",
        &["candidates", "refine_starts", "refine_evals", "hyper_restarts"],
    ),
    ("sweep", &["eps_grid", "repeats", "budget"]),
    (
        "subprocess",
        &["name", "command", "bounds", "direction", "timeout_secs"],
    ),
];

pub const DEFAULT_SWEEP_GRID: &str = "0:1:0.1";
pub const DEFAULT_SWEEP_REPEATS: usize = 5;

type Entries = HashMap<(String, String), (usize, String)>;

fn lex(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    let mut section = "experiment".to_string();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(Some(line_no), format!("malformed section header {line:?}"));
            };
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return err(Some(line_no), format!("unknown section [{name}]"));
            }
            section = name.to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(Some(line_no), format!("expected key = value, got {line:?}"));
        };
        let key = key.trim();
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return err(Some(line_no), format!("unknown key {key:?} in [{section}]"));
        }
        let slot = (section.clone(), key.to_string());
        if let Some((prev, _)) = entries.get(&slot) {
            return err(
                Some(line_no),
                format!("duplicate key {key:?} (first set on line {prev})"),
            );
        }
        entries.insert(slot, (line_no, value.trim().to_string()));
    }
    Ok(entries)
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn raw(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<(usize, T)>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => match v.parse::<T>() {
                Ok(t) => Ok(Some((line, t))),
                Err(_) => err(Some(line), format!("invalid value {v:?} for {key}")),
            },
        }
    }

    fn count(&self, section: &str, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        match self.parse::<usize>(section, key)? {
            None => Ok(default),
            Some((line, v)) if v < min => err(Some(line), format!("{key} must be at least {min}, got {v}")),
            Some((_, v)) => Ok(v),
        }
    }
}

/// Parses `aei`, `ei`, `ei-0.3`, `pi-0.1` (case-insensitive).
pub fn parse_strategy(s: &str, convention: MarginConvention) -> Result<AcquisitionSpec, String> {
    let lower = s.trim().to_ascii_lowercase();
    let (kind, margin) = match lower.split_once('-') {
        Some((k, m)) => (
            k.to_string(),
            m.parse::<f64>()
                .map_err(|_| format!("invalid margin in strategy {s:?}"))?,
        ),
        None => (lower.clone(), 0.0),
    };
    let spec = match kind.as_str() {
        "aei" if lower == "aei" => Ok(AcquisitionSpec::aei()),
        "ei" => AcquisitionSpec::ei(margin).map_err(|e| e.to_string()),
        "pi" => AcquisitionSpec::pi(margin).map_err(|e| e.to_string()),
        _ => Err(format!("unknown strategy {s:?}; expected aei, ei-<eps> or pi-<eps>")),
    }?;
    Ok(spec.with_convention(convention))
}

fn strategy_token(spec: &AcquisitionSpec) -> String {
    match spec.kind() {
        AcquisitionKind::Aei => "aei".into(),
        AcquisitionKind::Ei => format!("ei-{:?}", spec.margin()),
        AcquisitionKind::Pi => format!("pi-{:?}", spec.margin()),
    }
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let pairs = s
        .split(',')
        .map(|p| {
            let (l, u) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("bound {p:?} is not lower:upper"))?;
            let l = l.trim().parse::<f64>().map_err(|_| format!("bad lower bound {l:?}"))?;
            let u = u.trim().parse::<f64>().map_err(|_| format!("bad upper bound {u:?}"))?;
            Ok((l, u))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Bounds::new(pairs).map_err(|e| e.to_string())
}

pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_with(&text, overrides)
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<ResolvedConfig, ConfigError> {
    let r = Reader { entries: lex(text)? };

    let convention = match r.raw("experiment", "convention") {
        None => MarginConvention::default(),
        Some((line, v)) => match MarginConvention::parse(v) {
            Some(c) => c,
            None => return err(Some(line), format!("unknown convention {v:?}")),
        },
    };

    let file_objective = r.raw("experiment", "objective").map(|(l, v)| (Some(l), v.to_string()));
    let (obj_line, obj_name) = match (&overrides.objective, file_objective) {
        (Some(o), _) => (None, o.clone()),
        (None, Some(x)) => x,
        (None, None) => return err(None, "missing required key `objective`"),
    };
    let objective = if obj_name == "subprocess" {
        let need = |key: &str| {
            r.raw("subprocess", key)
                .ok_or_else(|| ConfigError {
                    line: None,
                    message: format!("objective = subprocess requires [subprocess] {key}"),
                })
        };
        let (_, command) = need("command")?;
        let (bline, btext) = need("bounds")?;
        let bounds = parse_bounds(btext).map_err(|m| ConfigError {
            line: Some(bline),
            message: m,
        })?;
        if bounds.dim() > MAX_SOBOL_DIMENSION {
            return err(Some(bline), format!("at most {MAX_SOBOL_DIMENSION} dimensions are supported"));
        }
        let (dline, dtext) = need("direction")?;
        let direction = Direction::parse(dtext).ok_or_else(|| ConfigError {
            line: Some(dline),
            message: format!("direction must be minimize or maximize, got {dtext:?}"),
        })?;
        let timeout_secs = match r.parse::<u64>("subprocess", "timeout_secs")? {
            None => DEFAULT_SUBPROCESS_TIMEOUT.as_secs(),
            Some((line, 0)) => return err(Some(line), "timeout_secs must be positive"),
            Some((_, t)) => t,
        };
        let name = r
            .raw("subprocess", "name")
            .map_or_else(|| "subprocess".to_string(), |(_, v)| v.to_string());
        ObjectiveSpec::Subprocess {
            name,
            command: command.to_string(),
            bounds,
            direction,
            timeout_secs,
        }
    } else if Objective::builtin(&obj_name).is_some() {
        ObjectiveSpec::Builtin(obj_name)
    } else {
        return err(
            obj_line,
            format!(
                "unknown objective {obj_name:?}; expected one of {} or subprocess",
                Objective::builtin_names().join(", ")
            ),
        );
    };

    let epsilon = match (overrides.epsilon, r.parse::<f64>("experiment", "epsilon")?) {
        (Some(e), _) => (None, e),
        (None, Some((line, e))) => (Some(line), e),
        (None, None) => (None, 0.0),
    };
    if !(epsilon.1.is_finite() && epsilon.1 >= 0.0) {
        return err(epsilon.0, format!("epsilon must be non-negative, got {}", epsilon.1));
    }

    let acquisition = overrides
        .acquisition
        .clone()
        .map(|a| (None, a))
        .or_else(|| r.raw("experiment", "acquisition").map(|(l, v)| (Some(l), v.to_string())));
    let file_strategies = r.raw("experiment", "strategies");
    let strategies = match acquisition {
        Some((line, _)) if overrides.acquisition.is_none() && file_strategies.is_some() => {
            return err(line, "set either acquisition or strategies, not both")
        }
        Some((line, a)) => {
            let spec = match a.as_str() {
                "aei" => Ok(AcquisitionSpec::aei()),
                "ei" => AcquisitionSpec::ei(epsilon.1).map_err(|e| e.to_string()),
                "pi" => AcquisitionSpec::pi(epsilon.1).map_err(|e| e.to_string()),
                other => Err(format!("acquisition must be pi, ei or aei, got {other:?}")),
            }
            .map_err(|m| ConfigError { line, message: m })?;
            vec![spec.with_convention(convention)]
        }
        None => match file_strategies {
            Some((line, list)) => list
                .split(',')
                .map(|s| parse_strategy(s, convention))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| ConfigError {
                    line: Some(line),
                    message: m,
                })?,
            None => vec![
                AcquisitionSpec::aei().with_convention(convention),
                AcquisitionSpec::ei(0.0).expect("valid").with_convention(convention),
                AcquisitionSpec::ei(0.3).expect("valid").with_convention(convention),
            ],
        },
    };

    let n_init = r.count("experiment", "n_init", 3, 1)?;
    let budget = overrides
        .budget
        .map_or_else(|| r.count("experiment", "budget", 50, 0), Ok)?;
    let repeats = match overrides.repeats {
        Some(0) => return err(None, "--repeats must be at least 1"),
        Some(n) => n,
        None => r.count("experiment", "repeats", 10, 1)?,
    };
    let seed = match overrides.seed {
        Some(s) => s,
        None => r.parse::<u64>("experiment", "seed")?.map_or(0, |(_, s)| s),
    };
    let bootstrap_resamples = r.count("experiment", "bootstrap_resamples", 1000, 1)?;

    let defaults = SearchBudget::default();
    let search = SearchBudget {
        candidates: r.count("search", "candidates", defaults.candidates, 1)?,
        refine_starts: r.count("search", "refine_starts", defaults.refine_starts, 0)?,
        refine_evals: r.count("search", "refine_evals", defaults.refine_evals, 0)?,
    };
    let hyper_restarts = r.count("search", "hyper_restarts", DEFAULT_HYPER_RESTARTS, 1)?;

    let (grid_line, sweep_grid) = match (&overrides.eps_grid, r.raw("sweep", "eps_grid")) {
        (Some(g), _) => (None, g.clone()),
        (None, Some((l, g))) => (Some(l), g.to_string()),
        (None, None) => (None, DEFAULT_SWEEP_GRID.to_string()),
    };
    if let Err(m) = parse_epsilon_grid(&sweep_grid) {
        return err(grid_line, m);
    }
    let sweep_repeats = r.count("sweep", "repeats", DEFAULT_SWEEP_REPEATS, 1)?;
    let sweep_budget = r.count("sweep", "budget", budget, 0)?;

    Ok(ResolvedConfig {
        objective,
        strategies,
        convention,
        n_init,
        budget,
        repeats,
        seed,
        bootstrap_resamples,
        search,
        hyper_restarts,
        sweep_grid,
        sweep_repeats,
        sweep_budget,
    })
}

impl ResolvedConfig {
    pub fn objective(&self) -> Objective {
        self.objective.build()
    }

    /// One experiment per strategy.
    pub fn experiments(&self) -> Vec<ExperimentConfig> {
        let objective = self.objective();
        self.strategies
            .iter()
            .map(|spec| ExperimentConfig {
                objective: objective.clone(),
                acquisition: *spec,
                n_init: self.n_init,
                budget: self.budget,
                repeats: self.repeats,
                master_seed: self.seed,
                search: self.search,
                hyper_restarts: self.hyper_restarts,
                bootstrap_resamples: self.bootstrap_resamples,
            })
            .collect()
    }

    /// Base experiment for an epsilon sweep, using the `[sweep]` budget.
    pub fn sweep_base(&self) -> ExperimentConfig {
        ExperimentConfig {
            objective: self.objective(),
            acquisition: AcquisitionSpec::aei().with_convention(self.convention),
            n_init: self.n_init,
            budget: self.sweep_budget,
            repeats: self.sweep_repeats,
            master_seed: self.seed,
            search: self.search,
            hyper_restarts: self.hyper_restarts,
            bootstrap_resamples: self.bootstrap_resamples,
        }
    }

    pub fn sweep_epsilons(&self) -> Vec<f64> {
        parse_epsilon_grid(&self.sweep_grid).expect("validated at parse time")
    }
}

impl fmt::Display for ResolvedConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strategies: Vec<String> = self.strategies.iter().map(strategy_token).collect();
        let objective_name = match &self.objective {
            ObjectiveSpec::Builtin(n) => n.as_str(),
            ObjectiveSpec::Subprocess { .. } => "subprocess",
        };
        writeln!(f, "[experiment]")?;
        writeln!(f, "objective = {objective_name}")?;
        writeln!(f, "strategies = {}", strategies.join(", "))?;
        writeln!(f, "convention = {}", self.convention.name())?;
        writeln!(f, "n_init = {}", self.n_init)?;
        writeln!(f, "budget = {}", self.budget)?;
        writeln!(f, "repeats = {}", self.repeats)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "bootstrap_resamples = {}", self.bootstrap_resamples)?;
        writeln!(f)?;
        writeln!(f, "[search]")?;
        writeln!(f, "candidates = {}", self.search.candidates)?;
        writeln!(f, "refine_starts = {}", self.search.refine_starts)?;
        writeln!(f, "refine_evals = {}", self.search.refine_evals)?;
        writeln!(f, "hyper_restarts = {}", self.hyper_restarts)?;
        writeln!(f)?;
        writeln!(f, "[sweep]")?;
        writeln!(f, "eps_grid = {}", self.sweep_grid)?;
        writeln!(f, "repeats = {}", self.sweep_repeats)?;
        writeln!(f, "budget = {}", self.sweep_budget)?;
        if let ObjectiveSpec::Subprocess {
            name,
            command,
            bounds,
            direction,
            timeout_secs,
        } = &self.objective
        {
            writeln!(f)?;
            writeln!(f, "[subprocess]")?;
            writeln!(f, "name = {name}")?;
            writeln!(f, "command = {command}")?;
            writeln!(f, "bounds = {bounds}")?;
            writeln!(f, "direction = {}", direction.name())?;
            writeln!(f, "timeout_secs = {timeout_secs}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("objective = camelback\nacquisition = aei\n").unwrap();
        assert_eq!(c.objective, ObjectiveSpec::Builtin("camelback".into()));
        assert_eq!(c.strategies, vec![AcquisitionSpec::aei()]);
        assert_eq!((c.n_init, c.budget, c.repeats, c.seed), (3, 50, 10, 0));
        assert_eq!(c.bootstrap_resamples, 1000);
        assert_eq!(c.search, SearchBudget::default());
        assert_eq!(c.hyper_restarts, 5);
        assert_eq!((c.sweep_grid.as_str(), c.sweep_repeats, c.sweep_budget), ("0:1:0.1", 5, 50));
        let echo = c.to_string();
        assert!(echo.contains("strategies = aei\n"));
        assert!(echo.contains("candidates = 2048\n"));
    }

    #[test]
    fn negative_epsilon_is_a_range_error() {
        let e = parse_config("objective = branin\nacquisition = ei\nepsilon = -0.1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("non-negative"), "{e}");
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let e = parse_config("objective = branin\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("objective = branin\n[nope]\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("[search]\nobjective = branin\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("objective = branin\nobjective = camelback\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = parse_config("objective branin\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn missing_or_unknown_objective() {
        let e = parse_config("acquisition = aei\n").unwrap_err();
        assert_eq!(e.line, None);
        assert!(e.message.contains("objective"));
        let e = parse_config("\nobjective = rosenbrock\n").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "objective = subprocess\nstrategies = aei, ei-0.3, pi-0.05\nconvention = paper-literal\n\
                    seed = 99\n[search]\ncandidates = 64\n[sweep]\neps_grid = 0:0.5:0.05\nbudget = 7\n\
                    [subprocess]\ncommand = python3 stub.py --flag=1\nbounds = -1:1, 0:2.5\ndirection = maximize\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.strategies[2].convention(), MarginConvention::PaperLiteral);

        let d = parse_config("objective = hartmann6\n").unwrap();
        assert_eq!(parse_config(&d.to_string()).unwrap(), d);
        assert_eq!(d.strategies.len(), 3);
    }

    #[test]
    fn overrides_replace_file_values() {
        let o = Overrides {
            objective: Some("branin".into()),
            acquisition: Some("ei".into()),
            epsilon: Some(0.3),
            budget: Some(4),
            repeats: Some(2),
            seed: Some(17),
            eps_grid: None,
        };
        let c = parse_config_with("objective = camelback\nstrategies = aei, ei-0.0\n", &o).unwrap();
        assert_eq!(c.objective, ObjectiveSpec::Builtin("branin".into()));
        assert_eq!(c.strategies, vec![AcquisitionSpec::ei(0.3).unwrap()]);
        assert_eq!((c.budget, c.repeats, c.seed), (4, 2, 17));
        let e = parse_config_with(
            "objective = camelback\n",
            &Overrides {
                epsilon: Some(-1.0),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(e.message.contains("non-negative"));
    }

    #[test]
    fn strategies_and_acquisition_conflict() {
        let e = parse_config("objective = branin\nacquisition = aei\nstrategies = aei, ei\n").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn subprocess_requires_its_section() {
        let e = parse_config("objective = subprocess\n").unwrap_err();
        assert!(e.message.contains("command"));
        let e = parse_config(
            "objective = subprocess\n[subprocess]\ncommand = x\nbounds = 1:0\ndirection = minimize\n",
        )
        .unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn strategy_tokens() {
        let rt = MarginConvention::RaiseTarget;
        assert_eq!(parse_strategy("AEI", rt).unwrap(), AcquisitionSpec::aei());
        assert_eq!(parse_strategy("ei", rt).unwrap(), AcquisitionSpec::ei(0.0).unwrap());
        assert_eq!(parse_strategy(" EI-0.3 ", rt).unwrap(), AcquisitionSpec::ei(0.3).unwrap());
        assert!(parse_strategy("ei--0.3", rt).is_err());
        assert!(parse_strategy("aei-0.1", rt).is_err());
        assert!(parse_strategy("ucb", rt).is_err());
    }
}
