//! Flat `key = value` experiment configs.
//!
//! ```text
//! # quadratic baseline
//! run_name = quad
//! steps = 500
//! optimizer = adamuon
//! problem.kind = quadratic_align
//! schedule.kind = wsd
//! schedule.base_lr = 0.05
//! schedule.warmup_steps = 10
//! ```
//!
//! Keys may appear in any order; each at most once. `schedule.base_lr`
//! falls back to `hyper.eta`, `schedule.total_steps` to `steps`, and the
//! `hyper.*` defaults follow the chosen optimizer.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use adamuon::harness::ExperimentConfig;
use adamuon::optim::HyperParams;
use adamuon::problems::{ProblemKind, ProblemShape, ProblemSpec};
use adamuon::schedule::default_decay_start;
use adamuon::{NsCoefficients, OptimizerKind, ScheduleKind, ScheduleSpec};

pub const KEYS: &[&str] = &[
    "run_name",
    "steps",
    "log_every",
    "seed",
    "optimizer",
    "threshold",
    "problem.kind",
    "problem.n",
    "problem.m",
    "problem.samples",
    "problem.inputs",
    "problem.outputs",
    "problem.features",
    "problem.hidden",
    "problem.classes",
    "problem.noise",
    "problem.seed",
    "hyper.eta",
    "hyper.lambda",
    "hyper.beta",
    "hyper.beta2",
    "hyper.eps",
    "hyper.ns_steps",
    "hyper.ns_coeffs",
    "hyper.momentum_dampening",
    "hyper.adam_beta1",
    "schedule.kind",
    "schedule.base_lr",
    "schedule.warmup_steps",
    "schedule.total_steps",
    "schedule.decay_start",
    "schedule.min_lr",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("line {line}: key `{key}`: {msg}")]
    Value {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
}

type Entries<'a> = HashMap<&'a str, (usize, &'a str)>;

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: Entries = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: "empty key".into(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Value {
                line,
                key: key.into(),
                msg: "empty value".into(),
            });
        }
        if let Some(&(first, _)) = entries.get(key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.into(),
                first,
            });
        }
        entries.insert(key, (line, value));
    }
    build(&entries)
}

fn get<T: FromStr>(entries: &Entries, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match entries.get(key) {
        None => Ok(None),
        Some(&(line, raw)) => raw.parse::<T>().map(Some).map_err(|e| ConfigError::Value {
            line,
            key: key.into(),
            msg: format!("`{raw}`: {e}"),
        }),
    }
}

fn get_or<T: FromStr>(entries: &Entries, key: &str, default: T) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    Ok(get(entries, key)?.unwrap_or(default))
}

fn value_err(entries: &Entries, key: &str, msg: String) -> ConfigError {
    let line = entries.get(key).map_or(0, |e| e.0);
    ConfigError::Value {
        line,
        key: key.into(),
        msg,
    }
}

fn build(e: &Entries) -> Result<ExperimentConfig, ConfigError> {
    let optimizer: OptimizerKind = get_or(e, "optimizer", OptimizerKind::AdaMuon)?;
    let steps: usize = get_or(e, "steps", 500)?;

    let kind: ProblemKind = get(e, "problem.kind")?.ok_or(ConfigError::Missing("problem.kind"))?;
    let shape = match kind {
        ProblemKind::QuadraticAlign => ProblemShape::QuadraticAlign {
            n: get_or(e, "problem.n", 8)?,
            m: get_or(e, "problem.m", 8)?,
        },
        ProblemKind::MatrixRegression => ProblemShape::MatrixRegression {
            samples: get_or(e, "problem.samples", 128)?,
            inputs: get_or(e, "problem.inputs", 16)?,
            outputs: get_or(e, "problem.outputs", 8)?,
        },
        ProblemKind::LogisticRegression => ProblemShape::LogisticRegression {
            samples: get_or(e, "problem.samples", 256)?,
            features: get_or(e, "problem.features", 16)?,
        },
        ProblemKind::Mlp2 => ProblemShape::Mlp2 {
            samples: get_or(e, "problem.samples", 256)?,
            inputs: get_or(e, "problem.inputs", 8)?,
            hidden: get_or(e, "problem.hidden", 16)?,
            classes: get_or(e, "problem.classes", 3)?,
        },
    };
    let used: &[&str] = match kind {
        ProblemKind::QuadraticAlign => &["problem.n", "problem.m"],
        ProblemKind::MatrixRegression => &["problem.samples", "problem.inputs", "problem.outputs"],
        ProblemKind::LogisticRegression => &["problem.samples", "problem.features"],
        ProblemKind::Mlp2 => &[
            "problem.samples",
            "problem.inputs",
            "problem.hidden",
            "problem.classes",
        ],
    };
    for key in [
        "problem.n",
        "problem.m",
        "problem.samples",
        "problem.inputs",
        "problem.outputs",
        "problem.features",
        "problem.hidden",
        "problem.classes",
    ] {
        if e.contains_key(key) && !used.contains(&key) {
            return Err(value_err(e, key, format!("not a dimension of {kind}")));
        }
    }
    let default_noise = if kind == ProblemKind::QuadraticAlign {
        0.0
    } else {
        0.1
    };
    let problem = ProblemSpec::new(
        shape,
        get_or(e, "problem.noise", default_noise)?,
        get_or(e, "problem.seed", 0)?,
    );

    let defaults = HyperParams::for_optimizer(optimizer);
    let ns_coeffs = match get::<String>(e, "hyper.ns_coeffs")? {
        None => defaults.ns_coeffs.clone(),
        Some(s) => match s.to_ascii_lowercase().as_str() {
            "quintic" => NsCoefficients::quintic(),
            "cubic" => NsCoefficients::cubic(),
            _ => {
                return Err(value_err(
                    e,
                    "hyper.ns_coeffs",
                    format!("`{s}`: expected `quintic` or `cubic`"),
                ))
            }
        },
    };
    let hyper = HyperParams {
        eta: get_or(e, "hyper.eta", defaults.eta)?,
        lambda: get_or(e, "hyper.lambda", defaults.lambda)?,
        beta: get_or(e, "hyper.beta", defaults.beta)?,
        beta2: get_or(e, "hyper.beta2", defaults.beta2)?,
        eps: get_or(e, "hyper.eps", defaults.eps)?,
        ns_steps: get_or(e, "hyper.ns_steps", defaults.ns_steps)?,
        ns_coeffs,
        momentum_dampening: get_or(e, "hyper.momentum_dampening", defaults.momentum_dampening)?,
        adam_beta1: get_or(e, "hyper.adam_beta1", defaults.adam_beta1)?,
    };

    let schedule_kind: ScheduleKind = get_or(e, "schedule.kind", ScheduleKind::Wsd)?;
    let total_steps: usize = get_or(e, "schedule.total_steps", steps)?;
    let warmup_steps: usize = get_or(e, "schedule.warmup_steps", 0)?;
    let default_start = match schedule_kind {
        ScheduleKind::Wsd => default_decay_start(warmup_steps, total_steps),
        ScheduleKind::Cosine => warmup_steps,
        ScheduleKind::Constant => total_steps,
    };
    let schedule = ScheduleSpec {
        kind: schedule_kind,
        base_lr: get_or(e, "schedule.base_lr", hyper.eta)?,
        warmup_steps,
        total_steps,
        decay_start: get_or(e, "schedule.decay_start", default_start)?,
        min_lr: get_or(e, "schedule.min_lr", 0.0)?,
    };

    let config = ExperimentConfig {
        problem,
        optimizer,
        hyper,
        schedule,
        steps,
        log_every: get_or(e, "log_every", 1)?,
        seed: get_or(e, "seed", 0)?,
        run_name: get_or(e, "run_name", "run".to_string())?,
        threshold: get(e, "threshold")?,
    };
    if config.run_name.contains(['/', '\\']) {
        return Err(value_err(e, "run_name", "must be a plain file stem".into()));
    }
    config
        .validate()
        .map_err(|err| ConfigError::Invalid(err.to_string()))?;
    Ok(config)
}
