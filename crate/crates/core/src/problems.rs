//! Small differentiable objectives with analytic gradients.
//!
//! Data are generated from [`crate::rng::Rng`] seeded by `ProblemSpec::seed`
//! in a fixed draw order, so regenerating a problem from its spec is
//! bit-identical. Gradients are full-batch.

use std::fmt;
use std::str::FromStr;

use crate::densecore::Matrix;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

const INIT_SALT: u64 = 0x5EED_1A17_0000_0001;

/// Ordered `(name, value)` parameter list.
pub type NamedParams<T> = Vec<(String, Matrix<T>)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    QuadraticAlign,
    MatrixRegression,
    LogisticRegression,
    Mlp2,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::QuadraticAlign,
        ProblemKind::MatrixRegression,
        ProblemKind::LogisticRegression,
        ProblemKind::Mlp2,
    ];
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::QuadraticAlign => "quadratic_align",
            ProblemKind::MatrixRegression => "matrix_regression",
            ProblemKind::LogisticRegression => "logistic_regression",
            ProblemKind::Mlp2 => "mlp2",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "quadratic_align" | "quadraticalign" | "quadratic" => Ok(ProblemKind::QuadraticAlign),
            "matrix_regression" | "matrixregression" => Ok(ProblemKind::MatrixRegression),
            "logistic_regression" | "logisticregression" | "logistic" => {
                Ok(ProblemKind::LogisticRegression)
            }
            "mlp2" | "mlp" => Ok(ProblemKind::Mlp2),
            other => Err(Error::InvalidProblem(format!(
                "unknown problem kind `{other}`"
            ))),
        }
    }
}

/// Kind together with its dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemShape {
    /// `½‖W − W*‖²_F` with `W ∈ ℝ^{n×m}`.
    QuadraticAlign { n: usize, m: usize },
    /// `½·mean_s ‖x_s W − y_s‖²`, `W ∈ ℝ^{inputs×outputs}`.
    MatrixRegression {
        samples: usize,
        inputs: usize,
        outputs: usize,
    },
    /// Mean binary cross-entropy of `σ(Xw + b)`.
    LogisticRegression { samples: usize, features: usize },
    /// One tanh hidden layer, softmax cross-entropy over Gaussian blobs.
    Mlp2 {
        samples: usize,
        inputs: usize,
        hidden: usize,
        classes: usize,
    },
}

impl ProblemShape {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemShape::QuadraticAlign { .. } => ProblemKind::QuadraticAlign,
            ProblemShape::MatrixRegression { .. } => ProblemKind::MatrixRegression,
            ProblemShape::LogisticRegression { .. } => ProblemKind::LogisticRegression,
            ProblemShape::Mlp2 { .. } => ProblemKind::Mlp2,
        }
    }

    fn dims(&self) -> Vec<(&'static str, usize)> {
        match *self {
            ProblemShape::QuadraticAlign { n, m } => vec![("n", n), ("m", m)],
            ProblemShape::MatrixRegression {
                samples,
                inputs,
                outputs,
            } => {
                vec![
                    ("samples", samples),
                    ("inputs", inputs),
                    ("outputs", outputs),
                ]
            }
            ProblemShape::LogisticRegression { samples, features } => {
                vec![("samples", samples), ("features", features)]
            }
            ProblemShape::Mlp2 {
                samples,
                inputs,
                hidden,
                classes,
            } => vec![
                ("samples", samples),
                ("inputs", inputs),
                ("hidden", hidden),
                ("classes", classes),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub shape: ProblemShape,
    /// Label/observation noise scale (blob spread for `Mlp2`).
    pub noise: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(shape: ProblemShape, noise: f64, seed: u64) -> Self {
        Self { shape, noise, seed }
    }

    pub fn kind(&self) -> ProblemKind {
        self.shape.kind()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.shape.dims() {
            if v == 0 {
                return Err(Error::InvalidProblem(format!("{name} must be positive")));
            }
        }
        if let ProblemShape::Mlp2 { classes, .. } = self.shape {
            if classes < 2 {
                return Err(Error::InvalidProblem(
                    "mlp2 needs at least 2 classes".into(),
                ));
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Data<T> {
    Quadratic {
        target: Matrix<T>,
    },
    Regression {
        x: Matrix<T>,
        y: Matrix<T>,
    },
    Logistic {
        x: Matrix<T>,
        y: Vec<T>,
    },
    Mlp {
        x: Matrix<T>,
        labels: Vec<usize>,
        classes: usize,
    },
}

/// A fully materialized objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem<T> {
    spec: ProblemSpec,
    data: Data<T>,
    param_shapes: Vec<(String, (usize, usize))>,
}

fn gaussian<T: Scalar>(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(rng.normal() * scale))
}

/// Builds the problem described by `spec`.
pub fn make_problem<T: Scalar>(spec: &ProblemSpec) -> Result<Problem<T>> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let noise = spec.noise;
    let named = |v: &[(&str, usize, usize)]| -> Vec<(String, (usize, usize))> {
        v.iter().map(|&(n, r, c)| (n.to_string(), (r, c))).collect()
    };

    let (data, param_shapes) = match spec.shape {
        ProblemShape::QuadraticAlign { n, m } => {
            let target = gaussian(&mut rng, n, m, 1.0);
            (Data::Quadratic { target }, named(&[("w", n, m)]))
        }
        ProblemShape::MatrixRegression {
            samples,
            inputs,
            outputs,
        } => {
            let x: Matrix<T> = gaussian(&mut rng, samples, inputs, 1.0);
            let w_true: Matrix<T> =
                gaussian(&mut rng, inputs, outputs, 1.0 / (inputs as f64).sqrt());
            let clean = x.matmul(&w_true)?;
            let y = clean.add(&gaussian(&mut rng, samples, outputs, noise))?;
            (Data::Regression { x, y }, named(&[("w", inputs, outputs)]))
        }
        ProblemShape::LogisticRegression { samples, features } => {
            let x: Matrix<T> = gaussian(&mut rng, samples, features, 1.0);
            let w_true: Matrix<T> = gaussian(&mut rng, features, 1, 2.0 / (features as f64).sqrt());
            let z = x.matmul(&w_true)?;
            let y = z
                .as_slice()
                .iter()
                .map(|&zi| {
                    let noisy = zi.as_f64() + noise * rng.normal();
                    if noisy > 0.0 {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect();
            (
                Data::Logistic { x, y },
                named(&[("w", features, 1), ("b", 1, 1)]),
            )
        }
        ProblemShape::Mlp2 {
            samples,
            inputs,
            hidden,
            classes,
        } => {
            let centers = gaussian::<f64>(&mut rng, classes, inputs, 1.0);
            let labels: Vec<usize> = (0..samples).map(|s| s % classes).collect();
            let x = Matrix::from_fn(samples, inputs, |s, j| {
                T::lit(centers[(labels[s], j)] + noise * rng.normal())
            });
            (
                Data::Mlp { x, labels, classes },
                named(&[
                    ("w1", inputs, hidden),
                    ("b1", 1, hidden),
                    ("w2", hidden, classes),
                    ("b2", 1, classes),
                ]),
            )
        }
    };
    Ok(Problem {
        spec: spec.clone(),
        data,
        param_shapes,
    })
}

impl<T: Scalar> Problem<T> {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn param_shapes(&self) -> &[(String, (usize, usize))] {
        &self.param_shapes
    }

    /// The known minimizer of `QuadraticAlign`; `None` for other kinds.
    pub fn target(&self) -> Option<&Matrix<T>> {
        match &self.data {
            Data::Quadratic { target } => Some(target),
            _ => None,
        }
    }

    /// Design matrix for the data-driven kinds.
    pub fn design(&self) -> Option<&Matrix<T>> {
        match &self.data {
            Data::Regression { x, .. } | Data::Logistic { x, .. } | Data::Mlp { x, .. } => Some(x),
            Data::Quadratic { .. } => None,
        }
    }

    /// Deterministic starting point. Matrices are Gaussian with variance
    /// `1/fan_in` (unit variance for `QuadraticAlign`); biases start at zero.
    /// The stream is salted so equal data and init seeds stay independent.
    pub fn init_params(&self, seed: u64) -> NamedParams<T> {
        let mut rng = Rng::new(seed ^ INIT_SALT);
        self.param_shapes
            .iter()
            .map(|(name, (r, c))| {
                let value = if name.starts_with('b') {
                    Matrix::zeros(*r, *c)
                } else {
                    let scale = match self.spec.kind() {
                        ProblemKind::QuadraticAlign => 1.0,
                        _ => 1.0 / (*r as f64).sqrt(),
                    };
                    gaussian(&mut rng, *r, *c, scale)
                };
                (name.clone(), value)
            })
            .collect()
    }

    fn check_params(&self, params: &NamedParams<T>) -> Result<()> {
        if params.len() != self.param_shapes.len() {
            return Err(Error::ParamMismatch(format!(
                "expected {} parameters, got {}",
                self.param_shapes.len(),
                params.len()
            )));
        }
        for ((name, value), (want_name, want_shape)) in params.iter().zip(&self.param_shapes) {
            if name != want_name {
                return Err(Error::ParamMismatch(format!(
                    "expected `{want_name}`, got `{name}`"
                )));
            }
            if value.shape() != *want_shape {
                return Err(Error::ShapeMismatch {
                    op: "problem parameter",
                    left: value.shape(),
                    right: *want_shape,
                });
            }
        }
        Ok(())
    }

    pub fn loss(&self, params: &NamedParams<T>) -> Result<T> {
        self.evaluate(params, false).map(|(l, _)| l)
    }

    /// Full-batch loss and analytic gradient. `batch_index` is accepted for
    /// forward compatibility with mini-batching and currently ignored.
    pub fn loss_and_grad(
        &self,
        params: &NamedParams<T>,
        batch_index: usize,
    ) -> Result<(T, NamedParams<T>)> {
        let _ = batch_index;
        let (loss, grads) = self.evaluate(params, true)?;
        let grads = grads.expect("gradients requested");
        for (_, g) in &grads {
            g.ensure_finite("gradient")?;
        }
        Ok((loss, grads))
    }

    fn evaluate(
        &self,
        params: &NamedParams<T>,
        want_grad: bool,
    ) -> Result<(T, Option<NamedParams<T>>)> {
        self.check_params(params)?;
        let half = T::lit(0.5);
        let names = |gs: Vec<Matrix<T>>| -> NamedParams<T> {
            self.param_shapes
                .iter()
                .map(|(n, _)| n.clone())
                .zip(gs)
                .collect()
        };

        let (loss, grads) = match &self.data {
            Data::Quadratic { target } => {
                let diff = params[0].1.sub(target)?;
                let loss = half * diff.sum_sq();
                (loss, want_grad.then(|| names(vec![diff])))
            }
            Data::Regression { x, y } => {
                let n = T::from_usize(x.rows()).expect("sample count fits scalar");
                let resid = x.matmul(&params[0].1)?.sub(y)?;
                let loss = half * resid.sum_sq() / n;
                let grads = if want_grad {
                    let g = x.transpose().matmul(&resid)?.scaled(n.recip());
                    Some(names(vec![g]))
                } else {
                    None
                };
                (loss, grads)
            }
            Data::Logistic { x, y } => {
                let n = T::from_usize(x.rows()).expect("sample count fits scalar");
                let b = params[1].1[(0, 0)];
                let z = x.matmul(&params[0].1)?.map(|v| v + b);
                let mut loss = T::zero();
                let mut dz = Vec::with_capacity(y.len());
                for (&zi, &yi) in z.as_slice().iter().zip(y) {
                    loss += softplus(zi) - yi * zi;
                    dz.push((sigmoid(zi) - yi) / n);
                }
                loss /= n;
                let grads = if want_grad {
                    let dz = Matrix::new(dz.len(), 1, dz)?;
                    let gw = x.transpose().matmul(&dz)?;
                    let gb = Matrix::new(1, 1, vec![dz.as_slice().iter().copied().sum()])?;
                    Some(names(vec![gw, gb]))
                } else {
                    None
                };
                (loss, grads)
            }
            Data::Mlp { x, labels, classes } => mlp_forward_backward(
                x,
                labels,
                *classes,
                [&params[0].1, &params[1].1, &params[2].1, &params[3].1],
                want_grad,
            )
            .map(|(l, g)| (l, g.map(|g| names(g.to_vec()))))?,
        };

        if !loss.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        Ok((loss, grads))
    }
}

fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        (T::one() + (-z).exp()).recip()
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn add_row<T: Scalar>(m: &Matrix<T>, row: &Matrix<T>) -> Matrix<T> {
    let r = row.as_slice();
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + r[j])
}

fn column_sums<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(1, m.cols(), |_, j| (0..m.rows()).map(|i| m[(i, j)]).sum())
}

type MlpGrads<T> = [Matrix<T>; 4];

fn mlp_forward_backward<T: Scalar>(
    x: &Matrix<T>,
    labels: &[usize],
    classes: usize,
    [w1, b1, w2, b2]: [&Matrix<T>; 4],
    want_grad: bool,
) -> Result<(T, Option<MlpGrads<T>>)> {
    let n = T::from_usize(x.rows()).expect("sample count fits scalar");
    let h = add_row(&x.matmul(w1)?, b1).map(|v| v.tanh());
    let logits = add_row(&h.matmul(w2)?, b2);

    let mut loss = T::zero();
    let mut dlogits = Matrix::zeros(logits.rows(), classes);
    for (s, &label) in labels.iter().enumerate() {
        let row = logits.row(s);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let denom: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + denom.ln();
        loss += log_z - row[label];
        for k in 0..classes {
            let p = (row[k] - log_z).exp();
            let onehot = if k == label { T::one() } else { T::zero() };
            dlogits[(s, k)] = (p - onehot) / n;
        }
    }
    loss /= n;
    if !want_grad {
        return Ok((loss, None));
    }

    let gw2 = h.transpose().matmul(&dlogits)?;
    let gb2 = column_sums(&dlogits);
    let dh = dlogits.matmul(&w2.transpose())?;
    let dz1 = dh.zip_map(&h, |d, hv| d * (T::one() - hv * hv))?;
    let gw1 = x.transpose().matmul(&dz1)?;
    let gb1 = column_sums(&dz1);
    Ok((loss, Some([gw1, gb1, gw2, gb2])))
}

/// Central-difference gradient, one pair of loss evaluations per entry.
pub fn finite_diff_grad<T: Scalar>(
    problem: &Problem<T>,
    params: &NamedParams<T>,
    h: T,
) -> Result<NamedParams<T>> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::InvalidHyperParams(format!(
            "finite-difference step must be > 0, got {h}"
        )));
    }
    problem.check_params(params)?;
    let mut work = params.clone();
    let mut out = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let (rows, cols) = params[p].1.shape();
        let mut g = Matrix::zeros(rows, cols);
        for k in 0..rows * cols {
            let orig = work[p].1.as_slice()[k];
            work[p].1.as_mut_slice()[k] = orig + h;
            let up = problem.loss(&work)?;
            work[p].1.as_mut_slice()[k] = orig - h;
            let down = problem.loss(&work)?;
            work[p].1.as_mut_slice()[k] = orig;
            g.as_mut_slice()[k] = (up - down) / (h + h);
        }
        out.push((params[p].0.clone(), g));
    }
    Ok(out)
}

/// `‖a − b‖_∞ / max(‖a‖_∞, ‖b‖_∞)` per parameter, maximized over
/// parameters. Two all-zero gradients compare as 0.
pub fn max_relative_error<T: Scalar>(analytic: &NamedParams<T>, numeric: &NamedParams<T>) -> T {
    analytic
        .iter()
        .zip(numeric)
        .map(|((_, a), (_, b))| {
            let scale = a.max_abs().max(b.max_abs());
            if scale == T::zero() {
                T::zero()
            } else {
                a.max_abs_diff(b) / scale
            }
        })
        .fold(T::zero(), T::max)
}
