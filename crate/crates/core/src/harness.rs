//! Deterministic training loop and CSV logging.
//!
//! Step `t` (1-based) evaluates loss and gradient at the current weights,
//! takes `lr = lr_at(schedule, t − 1)` and applies one optimizer step per
//! parameter. A record is kept whenever `t % log_every == 0`, and also for
//! the step on which divergence is detected. Everything except `wall_ms` is
//! a pure function of the [`ExperimentConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::densecore::Matrix;
use crate::error::{Error, Result};
use crate::optim::{assign_param_groups, HyperParams, OptimizerKind, OptimizerState};
use crate::problems::{make_problem, ProblemSpec};
use crate::scalar::Scalar;
use crate::schedule::{lr_at, ScheduleSpec};

/// Runs stop as diverged once the loss exceeds this.
pub const DIVERGENCE_LOSS: f64 = 1e6;

pub const CSV_HEADER: &str = "step,lr,loss,grad_norm,update_rms,wall_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    /// Optimizer for 2-D parameters; vectors use AdamW when this is
    /// AdaMuon or Muon.
    pub optimizer: OptimizerKind,
    pub hyper: HyperParams<f64>,
    pub schedule: ScheduleSpec,
    pub steps: usize,
    pub log_every: usize,
    /// Seeds parameter initialization (problem data use `problem.seed`).
    pub seed: u64,
    pub run_name: String,
    /// Loss level for [`RunResult::steps_to_threshold`].
    pub threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.problem.validate()?;
        self.hyper.validate()?;
        self.schedule.validate()?;
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.steps > self.schedule.total_steps {
            return bad(format!(
                "steps ({}) exceeds schedule.total_steps ({})",
                self.steps, self.schedule.total_steps
            ));
        }
        if self.log_every == 0 || self.log_every > self.steps {
            return bad(format!(
                "log_every must be in [1, steps], got {}",
                self.log_every
            ));
        }
        if self.run_name.is_empty() {
            return bad("run_name must not be empty".into());
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return bad("threshold must be finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    /// Frobenius norm over all gradients.
    pub grad_norm: f64,
    /// RMS over every parameter's pre-decay, pre-lr update.
    pub update_rms: f64,
    /// Milliseconds since the start of the run. Not deterministic.
    pub wall_ms: f64,
}

impl TrainRecord {
    /// Equality on every field except `wall_ms`, with NaN equal to NaN.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        let eq = |a: f64, b: f64| a.to_bits() == b.to_bits();
        self.step == other.step
            && eq(self.lr, other.lr)
            && eq(self.loss, other.loss)
            && eq(self.grad_norm, other.grad_norm)
            && eq(self.update_rms, other.update_rms)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub name: String,
    pub optimizer: OptimizerKind,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub records: Vec<TrainRecord>,
    pub final_loss: f64,
    pub diverged: bool,
    pub steps_to_threshold: Option<usize>,
    pub groups: Vec<GroupSummary>,
}

/// [`run_experiment_as`] in `f64`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_as::<f64>(config)
}

pub fn run_experiment_as<T: Scalar>(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let hp = cast_hyper::<T>(&config.hyper);
    let problem = make_problem::<T>(&config.problem)?;
    let groups = assign_param_groups(problem.param_shapes(), config.optimizer)?;
    let mut params = problem.init_params(config.seed);
    let mut states: Vec<OptimizerState<T>> = groups
        .iter()
        .zip(problem.param_shapes())
        .map(|(g, (_, (r, c)))| OptimizerState::new(g.optimizer, *r, *c))
        .collect();
    let total_entries: usize = params.iter().map(|(_, p)| p.len()).sum();

    let start = Instant::now();
    let mut records = Vec::with_capacity(config.steps / config.log_every + 1);
    let mut diverged = false;

    for t in 1..=config.steps {
        let lr = lr_at(&config.schedule, t - 1)?;
        let (loss, grads) = match problem.loss_and_grad(&params, t - 1) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                records.push(TrainRecord {
                    step: t,
                    lr,
                    loss: f64::NAN,
                    grad_norm: f64::NAN,
                    update_rms: f64::NAN,
                    wall_ms: elapsed_ms(start),
                });
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let loss = loss.as_f64();
        let grad_norm = grads
            .iter()
            .map(|(_, g)| g.sum_sq().as_f64())
            .sum::<f64>()
            .sqrt();

        if loss > DIVERGENCE_LOSS {
            records.push(TrainRecord {
                step: t,
                lr,
                loss,
                grad_norm,
                update_rms: f64::NAN,
                wall_ms: elapsed_ms(start),
            });
            diverged = true;
            break;
        }

        let lr_t = T::lit(lr);
        let mut update_sq = 0.0;
        let mut blew_up = false;
        for ((state, (_, w)), (_, g)) in states.iter_mut().zip(params.iter_mut()).zip(&grads) {
            match state.step(w, g, &hp, lr_t) {
                Ok(step) => {
                    update_sq += step.direction.sum_sq().as_f64();
                    *w = step.weights;
                }
                Err(Error::NonFinite(_)) => {
                    blew_up = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let update_rms = (update_sq / total_entries as f64).sqrt();

        if blew_up || t % config.log_every == 0 {
            records.push(TrainRecord {
                step: t,
                lr,
                loss,
                grad_norm,
                update_rms: if blew_up { f64::NAN } else { update_rms },
                wall_ms: elapsed_ms(start),
            });
        }
        if blew_up {
            diverged = true;
            break;
        }
    }

    let final_loss = records.last().map_or(f64::NAN, |r| r.loss);
    let steps_to_threshold = config
        .threshold
        .and_then(|th| steps_to_loss_records(&records, th));
    let groups = groups
        .into_iter()
        .zip(&states)
        .map(|(g, s)| GroupSummary {
            name: g.name,
            optimizer: g.optimizer,
            steps: s.steps_taken(),
        })
        .collect();
    Ok(RunResult {
        records,
        final_loss,
        diverged,
        steps_to_threshold,
        groups,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn cast_hyper<T: Scalar>(hp: &HyperParams<f64>) -> HyperParams<T> {
    HyperParams {
        eta: T::lit(hp.eta),
        lambda: T::lit(hp.lambda),
        beta: T::lit(hp.beta),
        beta2: T::lit(hp.beta2),
        eps: T::lit(hp.eps),
        ns_steps: hp.ns_steps,
        ns_coeffs: hp.ns_coeffs.clone(),
        momentum_dampening: hp.momentum_dampening,
        adam_beta1: T::lit(hp.adam_beta1),
    }
}

/// Runs several configurations on scoped threads; results keep input order.
pub fn run_many(configs: &[ExperimentConfig]) -> Vec<Result<RunResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_experiment(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect()
    })
}

/// First logged step whose loss is at or below `threshold`.
pub fn steps_to_loss(result: &RunResult, threshold: f64) -> Option<usize> {
    steps_to_loss_records(&result.records, threshold)
}

fn steps_to_loss_records(records: &[TrainRecord], threshold: f64) -> Option<usize> {
    records.iter().find(|r| r.loss <= threshold).map(|r| r.step)
}

/// Renders records in the harness CSV schema (header plus one row each).
pub fn render_csv(records: &[TrainRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step, r.lr, r.loss, r.grad_norm, r.update_rms, r.wall_ms
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes (overwrites) `path` with [`render_csv`].
pub fn write_csv(records: &[TrainRecord], path: &Path) -> Result<()> {
    fs::write(path, render_csv(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrainRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

/// Parses harness CSV text; errors carry a 1-based line number.
pub fn parse_csv(text: &str) -> std::result::Result<Vec<TrainRecord>, (usize, String)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => return Err((1, format!("expected header `{CSV_HEADER}`, found `{h}`"))),
        None => return Err((1, "empty file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err((n, format!("expected 6 fields, found {}", fields.len())));
        }
        let float = |k: usize| -> std::result::Result<f64, (usize, String)> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| (n, format!("field {}: `{}`: {e}", k + 1, fields[k])))
        };
        out.push(TrainRecord {
            step: fields[0]
                .parse()
                .map_err(|e| (n, format!("field 1: `{}`: {e}", fields[0])))?,
            lr: float(1)?,
            loss: float(2)?,
            grad_norm: float(3)?,
            update_rms: float(4)?,
            wall_ms: float(5)?,
        });
    }
    Ok(out)
}

/// RMS of a set of update directions taken together.
pub fn concatenated_rms<T: Scalar>(parts: &[Matrix<T>]) -> f64 {
    let count: usize = parts.iter().map(|m| m.len()).sum();
    let sq: f64 = parts.iter().map(|m| m.sum_sq().as_f64()).sum();
    (sq / count.max(1) as f64).sqrt()
}
