//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use adamuon::densecore::{
    polar_left_gram, polar_right_gram, random_conditioned, random_gaussian, random_orthonormal,
    Matrix,
};
use adamuon::harness::{render_csv, run_experiment, ExperimentConfig};
use adamuon::optim::{
    adamw_step, frobenius_aligned_direction, rms_aligned_direction, update_second_moment,
    AdamState, HyperParams, OptimizerKind, OptimizerState,
};
use adamuon::problems::{
    finite_diff_grad, make_problem, max_relative_error, ProblemShape, ProblemSpec,
};
use adamuon::rng::Rng;
use adamuon::{newton_schulz, polar_oracle, svd_oracle, NsCoefficients, ScheduleSpec};

type M = Matrix<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// 50 full-rank matrices no larger than 32×64 in either orientation,
/// condition number ≤ 100.
/// The first few pin the extreme shapes and the condition cap.
fn corpus() -> Vec<M> {
    let mut rng = Rng::new(20_240_601);
    let pinned = [
        (32, 64, 100.0),
        (64, 32, 100.0),
        (32, 32, 100.0),
        (1, 64, 1.0),
        (2, 2, 100.0),
    ];
    let mut out: Vec<M> = pinned
        .iter()
        .map(|&(r, c, k)| random_conditioned(&mut rng, r, c, k))
        .collect();
    while out.len() < 50 {
        let r = 1 + (rng.next_u64() % 32) as usize;
        let c = 1 + (rng.next_u64() % 64) as usize;
        let k = 1.0 + 99.0 * rng.uniform();
        out.push(random_conditioned(&mut rng, r, c, k));
    }
    out
}

fn condition(m: &M) -> f64 {
    let s = svd_oracle(m).expect("svd").s;
    s[0] / s[s.len() - 1]
}

fn c1_polar_fidelity(mats: &[M]) -> Outcome {
    let start = Instant::now();
    let mut ns_err: f64 = 0.0;
    let mut gram_err: f64 = 0.0;
    for m in mats {
        let ns = match newton_schulz(m, 30, &NsCoefficients::cubic()) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("newton_schulz failed: {e}")),
        };
        let polar = polar_oracle(m).expect("full rank");
        ns_err = ns_err.max(ns.max_abs_diff(&polar));
        let left = polar_left_gram(m).expect("left");
        let right = polar_right_gram(m).expect("right");
        gram_err = gram_err
            .max(left.max_abs_diff(&right))
            .max(left.max_abs_diff(&polar));
    }
    let secs = start.elapsed().as_secs_f64();
    let worst_cond = mats.iter().map(condition).fold(0.0, f64::max);
    let pass =
        ns_err <= 1e-6 && gram_err <= 1e-8 && secs < 5.0 && worst_cond <= 100.0 * (1.0 + 1e-9);
    outcome(
        pass,
        format!("ns max-abs {ns_err:.2e} (tol 1e-6), two-sided {gram_err:.2e} (tol 1e-8), max cond {worst_cond:.1}, {secs:.2}s (limit 5s)"),
    )
}

fn c2_quintic_band(mats: &[M]) -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for m in mats {
        let x = match newton_schulz(m, 5, &NsCoefficients::quintic()) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("newton_schulz failed: {e}")),
        };
        for s in svd_oracle(&x).expect("svd").s {
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    outcome(
        lo >= 0.2 && hi <= 1.6,
        format!("singular values in [{lo:.4}, {hi:.4}] (band [0.2, 1.6])"),
    )
}

fn c3_rms_alignment() -> Outcome {
    let hp = HyperParams::for_optimizer(OptimizerKind::AdaMuon);
    let mut rng = Rng::new(303);
    let mut worst: f64 = 0.0;
    let mut counted = 0;
    for (r, c) in [(8, 8), (5, 17), (24, 6), (3, 3)] {
        let mut st = OptimizerState::new(OptimizerKind::AdaMuon, r, c);
        let mut w: M = random_gaussian(&mut rng, r, c);
        for _ in 0..25 {
            let g: M = random_gaussian(&mut rng, r, c);
            let out = st.step(&w, &g, &hp, 0.02).expect("step");
            if !out.guarded {
                worst = worst.max((out.direction.rms() / 0.2 - 1.0).abs());
                counted += 1;
            }
            w = out.weights;
        }
    }

    let mut muon_err: f64 = 0.0;
    for (r, c) in [(4, 4), (6, 10), (12, 3)] {
        let q: M = random_orthonormal(&mut rng, r.max(c), r.min(c));
        let g = if r >= c { q } else { q.transpose() };
        let hp = HyperParams {
            ns_coeffs: NsCoefficients::cubic(),
            ns_steps: 30,
            ..HyperParams::for_optimizer(OptimizerKind::Muon)
        };
        let mut st = OptimizerState::new(OptimizerKind::Muon, r, c);
        let out = st.step(&M::zeros(r, c), &g, &hp, 1.0).expect("step");
        muon_err = muon_err.max((out.direction.rms() - 0.2).abs());
    }
    outcome(
        counted == 100 && worst < 1e-4 && muon_err <= 1e-6,
        format!("{counted} steps, max |rms/0.2-1| {worst:.2e} (tol 1e-4); muon orthogonal |rms-0.2| {muon_err:.2e} (tol 1e-6)"),
    )
}

fn c4_rescale_forms() -> Outcome {
    let mut rng = Rng::new(404);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r = 1 + (rng.next_u64() % 20) as usize;
        let c = 1 + (rng.next_u64() % 20) as usize;
        let scale = 10f64.powf(-2.0 + 4.0 * rng.uniform());
        let o: M = random_gaussian::<f64>(&mut rng, r, c).scaled(scale);
        let eps_f = 1e-8;
        let a = frobenius_aligned_direction(&o, eps_f);
        let b = rms_aligned_direction(&o, eps_f / ((r * c) as f64).sqrt());
        worst = worst.max(a.max_abs_diff(&b));
    }
    outcome(
        worst <= 1e-10,
        format!("max-abs gap {worst:.2e} over 100 draws (tol 1e-10)"),
    )
}

fn c5_bias_correction() -> Outcome {
    let mut rng = Rng::new(505);
    let o = rng.normals(4096);
    let mut mismatches = 0;
    for beta2 in [0.9, 0.99, 0.999, 0.95] {
        let mut v = vec![0.0; o.len()];
        let v_hat = update_second_moment(&mut v, &o, beta2, 1);
        mismatches += o
            .iter()
            .zip(&v_hat)
            .filter(|(x, vh)| (*x * *x).to_bits() != vh.to_bits())
            .count();
    }

    let hp = HyperParams::for_optimizer(OptimizerKind::AdamW);
    let lr = 1e-3;
    let mut mags: Vec<f64> = vec![1e-3, 2e-3, 1e-2, 0.1, 1.0, 10.0];
    while mags.len() < 64 {
        mags.push(10f64.powf(-3.0 + 4.0 * rng.uniform()));
    }
    let g = M::from_fn(8, 8, |i, j| {
        let m = mags[i * 8 + j];
        if (i + j) % 2 == 0 {
            m
        } else {
            -m
        }
    });
    let w = M::zeros(8, 8);
    let mut st = AdamState::new(8, 8);
    let w1 = adamw_step(&w, &g, &mut st, &hp, lr).expect("adamw");
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (d, gi) in w1.as_slice().iter().zip(g.as_slice()) {
        let expect = -lr * gi.signum();
        let rel = ((d - expect) / expect).abs();
        if rel > worst {
            worst = rel;
            at = gi.abs();
        }
    }
    outcome(
        mismatches == 0 && worst <= 1e-6,
        format!(
            "v_hat == o^2 bit mismatches {mismatches}; adamw t=1 max rel dev from -lr*sign(g) {worst:.2e} at |g|={at:.0e} (tol 1e-6, eps {:e})",
            hp.eps
        ),
    )
}

fn c6_gradient_oracle() -> Outcome {
    let shapes = [
        ProblemShape::QuadraticAlign { n: 6, m: 5 },
        ProblemShape::MatrixRegression {
            samples: 48,
            inputs: 7,
            outputs: 4,
        },
        ProblemShape::LogisticRegression {
            samples: 64,
            features: 9,
        },
        ProblemShape::Mlp2 {
            samples: 40,
            inputs: 6,
            hidden: 10,
            classes: 4,
        },
    ];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for shape in shapes {
        for seed in 0..5u64 {
            let problem =
                make_problem::<f64>(&ProblemSpec::new(shape, 0.5, 600 + seed)).expect("problem");
            let mut rng = Rng::new(seed);
            let params: Vec<(String, M)> = problem
                .init_params(seed)
                .into_iter()
                .map(|(n, p)| {
                    let jitter: M = random_gaussian(&mut rng, p.rows(), p.cols());
                    (n, p.add(&jitter.scaled(0.3)).expect("shape"))
                })
                .collect();
            let scale = params.iter().map(|(_, p)| p.max_abs()).fold(0.0, f64::max);
            let (_, analytic) = problem.loss_and_grad(&params, 0).expect("grad");
            let numeric = finite_diff_grad(&problem, &params, 1e-5 * scale.max(1.0)).expect("fd");
            worst = worst.max(max_relative_error(&analytic, &numeric));
            checked += 1;
        }
    }
    outcome(
        checked == 20 && worst < 1e-5,
        format!("{checked} checks, max rel err {worst:.2e} (tol 1e-5)"),
    )
}

fn quadratic(optimizer: OptimizerKind, lr: f64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::new(ProblemShape::QuadraticAlign { n: 8, m: 8 }, 0.0, 1),
        optimizer,
        hyper: HyperParams::for_optimizer(optimizer),
        schedule: ScheduleSpec::wsd(lr, 10, 500),
        steps: 500,
        log_every: 1,
        seed: 2,
        run_name: optimizer.to_string(),
        threshold: Some(1e-3),
    }
}

fn mlp() -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::new(
            ProblemShape::Mlp2 {
                samples: 256,
                inputs: 8,
                hidden: 16,
                classes: 3,
            },
            3.0,
            7,
        ),
        optimizer: OptimizerKind::AdaMuon,
        hyper: HyperParams::for_optimizer(OptimizerKind::AdaMuon),
        schedule: ScheduleSpec::wsd(0.02, 50, 2000),
        steps: 2000,
        log_every: 10,
        seed: 8,
        run_name: "mlp".into(),
        threshold: Some(0.3),
    }
}

/// Per-optimizer learning rates for the quadratic runs.
const QUADRATIC_LRS: [(OptimizerKind, f64); 4] = [
    (OptimizerKind::AdaMuon, 0.08),
    (OptimizerKind::Muon, 0.05),
    (OptimizerKind::AdamW, 0.05),
    (OptimizerKind::SgdMomentum, 0.01),
];

fn c7_convergence() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (kind, lr) in QUADRATIC_LRS {
        let r = run_experiment(&quadratic(kind, lr)).expect("run");
        let ok = !r.diverged && r.final_loss < 1e-3;
        pass &= ok;
        parts.push(format!("{kind}@{lr}={:.1e}", r.final_loss));
    }
    let r = run_experiment(&mlp()).expect("mlp run");
    let adamuon_steps: u64 = r
        .groups
        .iter()
        .filter(|g| g.optimizer == OptimizerKind::AdaMuon)
        .map(|g| g.steps)
        .min()
        .unwrap_or(0);
    let adamw_steps: u64 = r
        .groups
        .iter()
        .filter(|g| g.optimizer == OptimizerKind::AdamW)
        .map(|g| g.steps)
        .min()
        .unwrap_or(0);
    let hit = r.steps_to_threshold;
    pass &= !r.diverged && hit.is_some() && adamuon_steps > 0 && adamw_steps > 0;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(
        pass,
        format!(
            "quadratic {} (tol 1e-3); mlp2 final {:.2e}, reached 0.3 at step {:?}, group steps adamuon {adamuon_steps} adamw {adamw_steps}; {secs:.1}s (limit 60s)",
            parts.join(" "),
            r.final_loss,
            hit
        ),
    )
}

fn strip_wall(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

fn c8_determinism(dir: &Path) -> Outcome {
    let mut configs = vec![mlp(), quadratic(OptimizerKind::Muon, 0.05)];
    configs[0].steps = 400;
    configs[0].schedule = ScheduleSpec::wsd(0.02, 50, 400);
    let mut csv_same = true;
    for cfg in &configs {
        let a = render_csv(&run_experiment(cfg).expect("run").records);
        let b = render_csv(&run_experiment(cfg).expect("run").records);
        csv_same &= strip_wall(&a) == strip_wall(&b);
        fs::write(dir.join(format!("{}.csv", cfg.run_name)), a).expect("write csv");
    }
    let csvs: Vec<String> = configs
        .iter()
        .map(|c| {
            dir.join(format!("{}.csv", c.run_name))
                .display()
                .to_string()
        })
        .collect();
    let mut svgs = Vec::new();
    for name in ["a.svg", "b.svg"] {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_adamuon"))
            .arg("plot")
            .arg("--out")
            .arg(&out)
            .args(&csvs)
            .output()
            .expect("spawn plot");
        if !status.status.success() {
            return outcome(
                false,
                format!("plot failed: {}", String::from_utf8_lossy(&status.stderr)),
            );
        }
        svgs.push(fs::read(out).expect("read svg"));
    }
    let svg_same = svgs[0] == svgs[1];
    outcome(
        csv_same && svg_same,
        format!("csv non-timing fields identical: {csv_same}; plot bytes identical: {svg_same}"),
    )
}

fn c9_late_updates() -> Outcome {
    let mut cfg = quadratic(OptimizerKind::AdaMuon, 0.01);
    cfg.schedule = ScheduleSpec::constant(0.01, 2000);
    cfg.steps = 2000;
    let r = run_experiment(&cfg).expect("run");
    let last = r.records.last().expect("records");
    outcome(
        last.step == 2000 && last.update_rms >= 0.15,
        format!(
            "update_rms at step {} = {:.4} (floor 0.15), loss {:.2e}",
            last.step, last.update_rms, last.loss
        ),
    )
}

fn c10_fault_sensitivity() -> Outcome {
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_adamuon"))
            .args(args)
            .output()
            .expect("spawn check");
        (
            o.status.code(),
            String::from_utf8_lossy(&o.stdout).into_owned(),
        )
    };
    let (clean_code, _) = run(&["check"]);
    let (bad_code, text) = run(&["check", "--perturb-quintic", "0.5"]);
    let ns_failed: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("ns_") && l.contains(" FAIL "))
        .map(|l| l.split_whitespace().next().unwrap_or(""))
        .collect();
    outcome(
        clean_code == Some(0) && bad_code == Some(1) && !ns_failed.is_empty(),
        format!(
            "pristine exit {clean_code:?}; perturbed exit {bad_code:?}, failing: {}",
            ns_failed.join(",")
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("tempdir");
    let mats = corpus();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "polar_oracle_fidelity",
            Box::new(|| c1_polar_fidelity(&mats)),
        ),
        (
            "quintic_production_band",
            Box::new(|| c2_quintic_band(&mats)),
        ),
        ("rms_alignment", Box::new(c3_rms_alignment)),
        ("rescale_form_equivalence", Box::new(c4_rescale_forms)),
        ("bias_correction", Box::new(c5_bias_correction)),
        ("gradient_oracle", Box::new(c6_gradient_oracle)),
        ("convergence", Box::new(c7_convergence)),
        ("determinism", Box::new(|| c8_determinism(dir.path()))),
        ("late_stage_updates", Box::new(c9_late_updates)),
        ("checker_fault_sensitivity", Box::new(c10_fault_sensitivity)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{:>2} {name:<26} {}  {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
