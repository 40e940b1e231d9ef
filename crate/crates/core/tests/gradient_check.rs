use adamuon::densecore::{random_gaussian, Matrix};
use adamuon::problems::{
    finite_diff_grad, make_problem, max_relative_error, NamedParams, ProblemShape, ProblemSpec,
};
use adamuon::rng::Rng;

fn shapes() -> [ProblemShape; 4] {
    [
        ProblemShape::QuadraticAlign { n: 5, m: 7 },
        ProblemShape::MatrixRegression {
            samples: 40,
            inputs: 6,
            outputs: 4,
        },
        ProblemShape::LogisticRegression {
            samples: 50,
            features: 7,
        },
        ProblemShape::Mlp2 {
            samples: 30,
            inputs: 5,
            hidden: 8,
            classes: 3,
        },
    ]
}

fn jitter(params: &NamedParams<f64>, seed: u64) -> NamedParams<f64> {
    let mut rng = Rng::new(seed ^ 0xA5A5);
    params
        .iter()
        .map(|(n, p)| {
            let (r, c) = p.shape();
            let noise: Matrix<f64> = random_gaussian(&mut rng, r, c);
            (n.clone(), p.add(&noise.scaled(0.3)).unwrap())
        })
        .collect()
}

#[test]
fn analytic_gradients_match_central_differences() {
    for shape in shapes() {
        for seed in 0..5u64 {
            let problem = make_problem::<f64>(&ProblemSpec::new(shape, 0.5, 100 + seed)).unwrap();
            let params = jitter(&problem.init_params(seed), seed);
            let scale = params.iter().map(|(_, p)| p.max_abs()).fold(0.0, f64::max);
            let h = 1e-5 * scale.max(1.0);
            let (_, analytic) = problem.loss_and_grad(&params, 0).unwrap();
            let numeric = finite_diff_grad(&problem, &params, h).unwrap();
            let err = max_relative_error(&analytic, &numeric);
            assert!(err < 1e-5, "{shape:?} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn quadratic_gradient_is_displacement() {
    let problem = make_problem::<f64>(&ProblemSpec::new(
        ProblemShape::QuadraticAlign { n: 4, m: 3 },
        0.0,
        8,
    ))
    .unwrap();
    let target = problem.target().unwrap().clone();
    let mut rng = Rng::new(1);
    let e: Matrix<f64> = random_gaussian(&mut rng, 4, 3);
    let params = vec![("w".to_string(), target.add(&e).unwrap())];
    let (loss, grads) = problem.loss_and_grad(&params, 0).unwrap();
    assert!((loss - 0.5 * e.sum_sq()).abs() < 1e-12);
    assert!(grads[0].1.max_abs_diff(&e) < 1e-14);
    let numeric = finite_diff_grad(&problem, &params, 1e-5).unwrap();
    assert!(numeric[0].1.max_abs_diff(&e) < 1e-7);
}

fn descent_is_monotone(shape: ProblemShape, lr: f64, steps: usize) {
    let problem = make_problem::<f64>(&ProblemSpec::new(shape, 0.1, 21)).unwrap();
    let mut params = problem.init_params(4);
    let mut prev = f64::INFINITY;
    for _ in 0..steps {
        let (loss, grads) = problem.loss_and_grad(&params, 0).unwrap();
        assert!(loss <= prev, "{shape:?}: {loss} > {prev}");
        prev = loss;
        for ((_, p), (_, g)) in params.iter_mut().zip(&grads) {
            *p = p.sub(&g.scaled(lr)).unwrap();
        }
    }
}

#[test]
fn gradient_descent_decreases_convex_losses() {
    descent_is_monotone(ProblemShape::QuadraticAlign { n: 6, m: 6 }, 0.5, 100);

    let shape = ProblemShape::MatrixRegression {
        samples: 60,
        inputs: 8,
        outputs: 3,
    };
    let problem = make_problem::<f64>(&ProblemSpec::new(shape, 0.1, 21)).unwrap();
    let x = problem.design().unwrap();
    let svd = adamuon::svd_oracle(x).unwrap();
    assert!(
        svd.s[svd.s.len() - 1] > 1e-8,
        "design must have full column rank"
    );
    // the loss Hessian is XᵀX / samples; 0.1/σ_max² is smaller than its inverse curvature
    descent_is_monotone(shape, 0.1 / (svd.s[0] * svd.s[0]), 200);
}

#[test]
fn loss_is_a_pure_function_of_spec_and_params() {
    for shape in shapes() {
        let spec = ProblemSpec::new(shape, 0.3, 77);
        let a = make_problem::<f64>(&spec).unwrap();
        let b = make_problem::<f64>(&spec).unwrap();
        let params = a.init_params(5);
        assert_eq!(params, b.init_params(5));
        assert_eq!(
            a.loss(&params).unwrap().to_bits(),
            b.loss(&params).unwrap().to_bits()
        );
    }
}
