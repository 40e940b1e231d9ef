//! The invariant battery behind `adamuon check`.

use std::fmt;

use adamuon::densecore::{
    polar_left_gram, polar_right_gram, random_conditioned, random_gaussian, random_orthonormal,
    Matrix,
};
use adamuon::harness::{run_experiment, ExperimentConfig};
use adamuon::optim::{
    adamw_step, frobenius_aligned_direction, rms_aligned_direction, update_second_moment,
    AdamState, HyperParams, OptimizerKind, OptimizerState,
};
use adamuon::problems::{
    finite_diff_grad, make_problem, max_relative_error, ProblemShape, ProblemSpec,
};
use adamuon::rng::Rng;
use adamuon::{lr_at, newton_schulz, polar_oracle, svd_oracle, NsCoefficients, ScheduleSpec};

type M = Matrix<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<26} {}  measured={:.3e}  tol={:.1e}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.measured,
            self.tolerance
        )
    }
}

/// `measured <= tolerance`; NaN or an error fails.
fn within(name: &'static str, measured: Result<f64, adamuon::Error>, tolerance: f64) -> CheckLine {
    let measured = measured.unwrap_or(f64::INFINITY);
    CheckLine {
        name,
        measured,
        tolerance,
        pass: measured <= tolerance,
    }
}

/// Fixed corpus of full-rank matrices, condition number at most 100.
pub fn corpus(count: usize, seed: u64) -> Vec<M> {
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|_| {
            let rows = 2 + (rng.next_u64() % 31) as usize;
            let cols = 2 + (rng.next_u64() % 63) as usize;
            let cond = 1.0 + 99.0 * rng.uniform();
            random_conditioned(&mut rng, rows, cols, cond)
        })
        .collect()
}

pub struct Battery {
    pub quintic: NsCoefficients,
}

impl Default for Battery {
    fn default() -> Self {
        Self {
            quintic: NsCoefficients::quintic(),
        }
    }
}

impl Battery {
    pub fn with_quintic_offset(delta: f64) -> Self {
        Self {
            quintic: NsCoefficients::quintic().perturbed(delta),
        }
    }

    pub fn run(&self) -> Vec<CheckLine> {
        let mats = corpus(12, 7);
        vec![
            within("ns_cubic_vs_polar", cubic_vs_polar(&mats), 1e-6),
            within("ns_quintic_band", self.quintic_band(&mats), 0.0),
            within("polar_identity", polar_identity(&mats), 1e-8),
            within("ns_scale_invariance", self.scale_invariance(&mats), 1e-12),
            within("ns_transpose", self.transpose(&mats), 1e-10),
            within("svd_reconstruction", svd_reconstruction(&mats), 1e-10),
            within("rms_alignment", self.rms_alignment(), 1e-4),
            within("muon_orthogonal_rms", muon_orthogonal_rms(), 1e-6),
            within("rescale_equivalence", rescale_equivalence(), 1e-10),
            within("bias_correction", Ok(bias_correction()), 0.0),
            within("adamw_first_step", Ok(adamw_first_step()), 1e-12),
            within("gradient_check", gradient_check(), 1e-5),
            within("schedule_wsd", schedule_wsd(), 1e-15),
            within("run_determinism", run_determinism(), 0.0),
        ]
    }
}

fn max_over(
    mats: &[M],
    f: impl Fn(&M) -> Result<f64, adamuon::Error>,
) -> Result<f64, adamuon::Error> {
    let mut worst: f64 = 0.0;
    for m in mats {
        let v = f(m)?;
        if v.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn cubic_vs_polar(mats: &[M]) -> Result<f64, adamuon::Error> {
    max_over(mats, |m| {
        Ok(newton_schulz(m, 30, &NsCoefficients::cubic())?.max_abs_diff(&polar_oracle(m)?))
    })
}

impl Battery {
    /// Distance of the singular values from `[0.2, 1.6]`.
    fn quintic_band(&self, mats: &[M]) -> Result<f64, adamuon::Error> {
        max_over(mats, |m| {
            let s = svd_oracle(&newton_schulz(m, 5, &self.quintic)?)?.s;
            Ok(s.iter()
                .map(|&x| (0.2 - x).max(x - 1.6).max(0.0))
                .fold(0.0, f64::max))
        })
    }

    fn scale_invariance(&self, mats: &[M]) -> Result<f64, adamuon::Error> {
        max_over(mats, |m| {
            let a = newton_schulz(m, 5, &self.quintic)?;
            let mut worst: f64 = 0.0;
            for c in [1e-3, 0.5, 7.0, 1e3] {
                worst = worst.max(newton_schulz(&m.scaled(c), 5, &self.quintic)?.max_abs_diff(&a));
            }
            Ok(worst)
        })
    }

    fn transpose(&self, mats: &[M]) -> Result<f64, adamuon::Error> {
        max_over(mats, |m| {
            let a = newton_schulz(&m.transpose(), 5, &self.quintic)?;
            Ok(a.max_abs_diff(&newton_schulz(m, 5, &self.quintic)?.transpose()))
        })
    }

    fn rms_alignment(&self) -> Result<f64, adamuon::Error> {
        let hp = HyperParams {
            ns_coeffs: self.quintic.clone(),
            ..HyperParams::for_optimizer(OptimizerKind::AdaMuon)
        };
        let mut rng = Rng::new(11);
        let mut worst: f64 = 0.0;
        for (r, c) in [(6, 10), (16, 4), (9, 9)] {
            let mut st = OptimizerState::new(OptimizerKind::AdaMuon, r, c);
            let mut w: M = random_gaussian(&mut rng, r, c);
            for _ in 0..10 {
                let g: M = random_gaussian(&mut rng, r, c);
                let out = st.step(&w, &g, &hp, 0.01)?;
                worst = worst.max((out.direction.rms() / 0.2 - 1.0).abs());
                w = out.weights;
            }
        }
        Ok(worst)
    }
}

fn polar_identity(mats: &[M]) -> Result<f64, adamuon::Error> {
    max_over(mats, |m| {
        Ok(polar_left_gram(m)?.max_abs_diff(&polar_right_gram(m)?))
    })
}

fn svd_reconstruction(mats: &[M]) -> Result<f64, adamuon::Error> {
    max_over(mats, |m| Ok(svd_oracle(m)?.reconstruct().max_abs_diff(m)))
}

fn muon_orthogonal_rms() -> Result<f64, adamuon::Error> {
    let mut rng = Rng::new(12);
    let mut worst: f64 = 0.0;
    for (r, c) in [(3, 5), (8, 8), (12, 4)] {
        let q: M = random_orthonormal(&mut rng, r.max(c), r.min(c));
        let g = if r >= c { q } else { q.transpose() };
        let hp = HyperParams {
            ns_coeffs: NsCoefficients::cubic(),
            ns_steps: 30,
            ..HyperParams::for_optimizer(OptimizerKind::Muon)
        };
        let mut st = OptimizerState::new(OptimizerKind::Muon, r, c);
        let out = st.step(&M::zeros(r, c), &g, &hp, 1.0)?;
        worst = worst.max((out.direction.rms() - 0.2).abs());
    }
    Ok(worst)
}

fn rescale_equivalence() -> Result<f64, adamuon::Error> {
    let mut rng = Rng::new(13);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r = 1 + (rng.next_u64() % 12) as usize;
        let c = 1 + (rng.next_u64() % 12) as usize;
        let o: M = random_gaussian(&mut rng, r, c);
        let eps_f = 1e-8;
        let a = frobenius_aligned_direction(&o, eps_f);
        let b = rms_aligned_direction(&o, eps_f / ((r * c) as f64).sqrt());
        worst = worst.max(a.max_abs_diff(&b));
    }
    Ok(worst)
}

/// Count of entries where `v̂ ≠ o²` at t = 1.
fn bias_correction() -> f64 {
    let mut rng = Rng::new(14);
    let o = rng.normals(256);
    let mut v = vec![0.0; o.len()];
    let v_hat = update_second_moment(&mut v, &o, 0.999, 1);
    o.iter()
        .zip(&v_hat)
        .filter(|(x, vh)| (*x * *x).to_bits() != vh.to_bits())
        .count() as f64
}

/// Relative gap between the AdamW first step and `lr·g/(|g|+ε)`.
fn adamw_first_step() -> f64 {
    let mut rng = Rng::new(15);
    let hp = HyperParams::for_optimizer(OptimizerKind::AdamW);
    let g: M = Matrix::from_fn(4, 8, |_, _| {
        let mag = 10f64.powf(-3.0 + 3.0 * rng.uniform());
        if rng.uniform() < 0.5 {
            -mag
        } else {
            mag
        }
    });
    let mut st = AdamState::new(4, 8);
    let lr = 0.01;
    let w = M::zeros(4, 8);
    let Ok(w1) = adamw_step(&w, &g, &mut st, &hp, lr) else {
        return f64::INFINITY;
    };
    w1.as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(d, gi)| {
            let expect = -lr * gi / (gi.abs() + hp.eps);
            ((d - expect) / expect).abs()
        })
        .fold(0.0, f64::max)
}

fn gradient_check() -> Result<f64, adamuon::Error> {
    let shapes = [
        ProblemShape::QuadraticAlign { n: 4, m: 6 },
        ProblemShape::MatrixRegression {
            samples: 24,
            inputs: 5,
            outputs: 3,
        },
        ProblemShape::LogisticRegression {
            samples: 30,
            features: 6,
        },
        ProblemShape::Mlp2 {
            samples: 20,
            inputs: 4,
            hidden: 6,
            classes: 3,
        },
    ];
    let mut worst: f64 = 0.0;
    for shape in shapes {
        for seed in 0..5 {
            let problem = make_problem::<f64>(&ProblemSpec::new(shape, 0.5, 40 + seed))?;
            let mut rng = Rng::new(seed);
            let params: Vec<(String, M)> = problem
                .init_params(seed)
                .into_iter()
                .map(|(n, p)| {
                    let noise: M = random_gaussian(&mut rng, p.rows(), p.cols());
                    let p = p.add(&noise.scaled(0.3)).expect("same shape");
                    (n, p)
                })
                .collect();
            let scale = params.iter().map(|(_, p)| p.max_abs()).fold(0.0, f64::max);
            let (_, analytic) = problem.loss_and_grad(&params, 0)?;
            let numeric = finite_diff_grad(&problem, &params, 1e-5 * scale.max(1.0))?;
            worst = worst.max(max_relative_error(&analytic, &numeric));
        }
    }
    Ok(worst)
}

/// Largest deviation from the closed-form WSD values on a small schedule.
fn schedule_wsd() -> Result<f64, adamuon::Error> {
    let spec = ScheduleSpec::wsd(1.0, 10, 100);
    let mut worst: f64 = 0.0;
    for (step, want) in [
        (0, 0.1),
        (9, 1.0),
        (50, 1.0),
        (79, 1.0),
        (90, 0.5),
        (99, 0.05),
    ] {
        worst = worst.max((lr_at(&spec, step)? - want).abs());
    }
    if lr_at(&spec, 100).is_ok() {
        return Ok(f64::INFINITY);
    }
    Ok(worst)
}

/// 0 when two identical runs agree in every non-timing field.
fn run_determinism() -> Result<f64, adamuon::Error> {
    let cfg = ExperimentConfig {
        problem: ProblemSpec::new(
            ProblemShape::Mlp2 {
                samples: 64,
                inputs: 4,
                hidden: 8,
                classes: 3,
            },
            1.0,
            3,
        ),
        optimizer: OptimizerKind::AdaMuon,
        hyper: HyperParams::for_optimizer(OptimizerKind::AdaMuon),
        schedule: ScheduleSpec::wsd(0.02, 5, 50),
        steps: 50,
        log_every: 1,
        seed: 4,
        run_name: "check".into(),
        threshold: None,
    };
    let a = run_experiment(&cfg)?;
    let b = run_experiment(&cfg)?;
    let same = a.records.len() == b.records.len()
        && a.records
            .iter()
            .zip(&b.records)
            .all(|(x, y)| x.same_trajectory(y));
    Ok(if same { 0.0 } else { 1.0 })
}
