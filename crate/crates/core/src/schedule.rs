//! Learning-rate schedules: constant, cosine and warmup-stable-decay (WSD).
//!
//! All three share a linear warmup `base·(step+1)/warmup` so the very first
//! step already has a nonzero rate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Constant,
    Cosine,
    Wsd,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::Cosine => "cosine",
            ScheduleKind::Wsd => "wsd",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(ScheduleKind::Constant),
            "cosine" => Ok(ScheduleKind::Cosine),
            "wsd" => Ok(ScheduleKind::Wsd),
            other => Err(Error::InvalidSchedule(format!(
                "unknown schedule kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    /// First step of the WSD decay phase; ignored by the other kinds.
    pub decay_start: usize,
    pub min_lr: f64,
}

impl ScheduleSpec {
    pub fn constant(base_lr: f64, total_steps: usize) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            base_lr,
            warmup_steps: 0,
            total_steps,
            decay_start: total_steps,
            min_lr: 0.0,
        }
    }

    /// WSD decaying to zero over the final 20% of training.
    pub fn wsd(base_lr: f64, warmup_steps: usize, total_steps: usize) -> Self {
        Self {
            kind: ScheduleKind::Wsd,
            base_lr,
            warmup_steps,
            total_steps,
            decay_start: default_decay_start(warmup_steps, total_steps),
            min_lr: 0.0,
        }
    }

    pub fn cosine(base_lr: f64, warmup_steps: usize, total_steps: usize, min_lr: f64) -> Self {
        Self {
            kind: ScheduleKind::Cosine,
            base_lr,
            warmup_steps,
            total_steps,
            decay_start: warmup_steps,
            min_lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return bad(format!(
                "base_lr must be finite and > 0, got {}",
                self.base_lr
            ));
        }
        if !(self.min_lr.is_finite() && self.min_lr >= 0.0) {
            return bad(format!(
                "min_lr must be finite and >= 0, got {}",
                self.min_lr
            ));
        }
        if self.min_lr > self.base_lr {
            return bad(format!(
                "min_lr {} exceeds base_lr {}",
                self.min_lr, self.base_lr
            ));
        }
        if self.total_steps == 0 {
            return bad("total_steps must be positive".into());
        }
        if !(self.warmup_steps <= self.decay_start && self.decay_start <= self.total_steps) {
            return bad(format!(
                "need warmup_steps ({}) <= decay_start ({}) <= total_steps ({})",
                self.warmup_steps, self.decay_start, self.total_steps
            ));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> Result<f64> {
        lr_at(self, step)
    }
}

/// `total − 20%`, clamped to be no earlier than the end of warmup.
pub fn default_decay_start(warmup_steps: usize, total_steps: usize) -> usize {
    (total_steps - total_steps / 5)
        .max(warmup_steps)
        .min(total_steps)
}

/// Learning rate for the 0-based `step`.
pub fn lr_at(spec: &ScheduleSpec, step: usize) -> Result<f64> {
    if step >= spec.total_steps {
        return Err(Error::StepOutOfRange {
            step,
            total: spec.total_steps,
        });
    }
    let base = spec.base_lr;
    if step < spec.warmup_steps {
        return Ok(base * (step + 1) as f64 / spec.warmup_steps as f64);
    }
    let lr = match spec.kind {
        ScheduleKind::Constant => base,
        ScheduleKind::Wsd => {
            if step < spec.decay_start {
                base
            } else {
                let span = (spec.total_steps - spec.decay_start) as f64;
                let frac = (step - spec.decay_start) as f64 / span;
                base + (spec.min_lr - base) * frac
            }
        }
        ScheduleKind::Cosine => {
            let span = (spec.total_steps - spec.warmup_steps) as f64;
            let frac = (step - spec.warmup_steps) as f64 / span;
            spec.min_lr + (base - spec.min_lr) * 0.5 * (1.0 + (PI * frac).cos())
        }
    };
    Ok(lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn long_run() -> ScheduleSpec {
        ScheduleSpec {
            kind: ScheduleKind::Wsd,
            base_lr: 6e-4,
            warmup_steps: 100,
            total_steps: 1000,
            decay_start: 800,
            min_lr: 0.0,
        }
    }

    #[test]
    fn wsd_reference_points() {
        let s = long_run();
        assert_eq!(lr_at(&s, 99).unwrap(), 6e-4);
        assert_eq!(lr_at(&s, 400).unwrap(), 6e-4);
        assert!((lr_at(&s, 900).unwrap() - 3e-4).abs() < 1e-12);
        assert_eq!(lr_at(&s, 800).unwrap(), 6e-4);
        assert!(lr_at(&s, 999).unwrap() >= 0.0);
        assert!(lr_at(&s, 0).unwrap() > 0.0);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            lr_at(&long_run(), 1000),
            Err(Error::StepOutOfRange {
                step: 1000,
                total: 1000
            })
        ));
    }

    #[test]
    fn cosine_endpoints() {
        let s = ScheduleSpec::cosine(1.0, 10, 110, 0.1);
        assert_eq!(lr_at(&s, 10).unwrap(), 1.0);
        let mid = lr_at(&s, 60).unwrap();
        assert!((mid - 0.55).abs() < 1e-12);
        assert!(lr_at(&s, 109).unwrap() > 0.1);
    }

    #[test]
    fn constant_without_warmup() {
        let s = ScheduleSpec::constant(0.3, 5);
        for t in 0..5 {
            assert_eq!(lr_at(&s, t).unwrap(), 0.3);
        }
    }

    #[test]
    fn validation() {
        let mut s = long_run();
        s.decay_start = 50;
        assert!(s.validate().is_err());
        let mut s = long_run();
        s.min_lr = 1.0;
        assert!(s.validate().is_err());
        assert!(long_run().validate().is_ok());
        assert!(ScheduleSpec::wsd(0.1, 10, 500).validate().is_ok());
        assert_eq!(ScheduleSpec::wsd(0.1, 10, 500).decay_start, 400);
    }

    fn arb_spec() -> impl Strategy<Value = ScheduleSpec> {
        (
            prop_oneof![
                Just(ScheduleKind::Constant),
                Just(ScheduleKind::Cosine),
                Just(ScheduleKind::Wsd)
            ],
            1e-5f64..1.0,
            0usize..50,
            1usize..400,
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(kind, base, warmup, extra, frac, minf)| {
                let total = warmup + extra;
                let decay_start = warmup + ((total - warmup) as f64 * frac) as usize;
                ScheduleSpec {
                    kind,
                    base_lr: base,
                    warmup_steps: warmup,
                    total_steps: total,
                    decay_start,
                    min_lr: base * minf,
                }
            })
    }

    proptest! {
        #[test]
        fn piecewise_monotone_and_bounded(spec in arb_spec()) {
            prop_assert!(spec.validate().is_ok());
            let lrs: Vec<f64> = (0..spec.total_steps).map(|t| lr_at(&spec, t).unwrap()).collect();
            let floor = if spec.warmup_steps > 0 {
                spec.min_lr.min(spec.base_lr / spec.warmup_steps as f64)
            } else {
                spec.min_lr
            };
            for (t, &lr) in lrs.iter().enumerate() {
                prop_assert!(lr <= spec.base_lr * (1.0 + 1e-12));
                prop_assert!(lr >= floor * (1.0 - 1e-12));
                if t > 0 {
                    let prev = lrs[t - 1];
                    if t < spec.warmup_steps {
                        prop_assert!(lr >= prev);
                    } else if t > spec.warmup_steps {
                        prop_assert!(lr <= prev * (1.0 + 1e-12));
                    }
                }
            }
            if spec.kind == ScheduleKind::Wsd && spec.decay_start < spec.total_steps {
                prop_assert_eq!(lrs[spec.decay_start], spec.base_lr);
            }
            let last = *lrs.last().unwrap();
            prop_assert!(last >= spec.min_lr * (1.0 - 1e-12));
        }

        #[test]
        fn boundaries_are_continuous(spec in arb_spec()) {
            // adjacent steps differ by at most one ramp increment
            let warm_inc = if spec.warmup_steps > 0 { spec.base_lr / spec.warmup_steps as f64 } else { 0.0 };
            let decay_inc = match spec.kind {
                ScheduleKind::Constant => 0.0,
                ScheduleKind::Wsd => (spec.base_lr - spec.min_lr) / (spec.total_steps - spec.decay_start).max(1) as f64,
                ScheduleKind::Cosine => PI / 2.0 * (spec.base_lr - spec.min_lr) / (spec.total_steps - spec.warmup_steps).max(1) as f64,
            };
            let inc = warm_inc.max(decay_inc) * (1.0 + 1e-9);
            for t in 1..spec.total_steps {
                let d = (lr_at(&spec, t).unwrap() - lr_at(&spec, t - 1).unwrap()).abs();
                prop_assert!(d <= inc + 1e-15, "step {} jump {} > {}", t, d, inc);
            }
        }
    }
}
