//! Probing classifiers: a linear softmax model and a one-hidden-layer MLP
//! with rectifier activation, together with their exact loss gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> F {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: F) {
        self.data[row * self.cols + col] = value;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    fn row(&self, row: usize) -> &[F] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "{what}: {}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if !self.is_finite() {
            return Err(Error::InvalidInput(format!("{what}: non-finite entry")));
        }
        Ok(())
    }
}

/// Linear softmax probe: `logits = Wᵀx + b` with `W` of shape d×L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe<F> {
    pub weights: Matrix<F>,
    pub bias: Vec<F>,
}

/// One-hidden-layer MLP probe with rectifier activation:
/// `logits = W2ᵀ relu(W1ᵀx + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpProbe<F> {
    pub w1: Matrix<F>,
    pub b1: Vec<F>,
    pub w2: Matrix<F>,
    pub b2: Vec<F>,
}

/// A trained (or initialized) probing classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeModel<F> {
    Linear(LinearProbe<F>),
    Mlp(MlpProbe<F>),
}

/// Which probe architecture to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Linear,
    Mlp,
}

impl std::fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeKind::Linear => write!(f, "linear"),
            ProbeKind::Mlp => write!(f, "mlp"),
        }
    }
}

impl<F: Scalar> ProbeModel<F> {
    /// Initializes a model with weights uniform in
    /// ±sqrt(6/(fan_in+fan_out)) and zero biases, drawing from `rng` in a
    /// fixed order (row-major per matrix). Sampling happens in `f64` and is
    /// narrowed to `F`, so a given seed yields the same underlying values at
    /// either precision.
    pub fn init(
        kind: ProbeKind,
        dimension: usize,
        label_count: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if dimension == 0 || label_count == 0 {
            return Err(Error::InvalidInput(
                "dimension and label count must be positive".into(),
            ));
        }
        let model = match kind {
            ProbeKind::Linear => ProbeModel::Linear(LinearProbe {
                weights: glorot(dimension, label_count, rng),
                bias: vec![F::zero(); label_count],
            }),
            ProbeKind::Mlp => {
                if hidden_dim == 0 {
                    return Err(Error::InvalidInput("hidden_dim must be positive".into()));
                }
                ProbeModel::Mlp(MlpProbe {
                    w1: glorot(dimension, hidden_dim, rng),
                    b1: vec![F::zero(); hidden_dim],
                    w2: glorot(hidden_dim, label_count, rng),
                    b2: vec![F::zero(); label_count],
                })
            }
        };
        Ok(model)
    }

    pub fn kind(&self) -> ProbeKind {
        match self {
            ProbeModel::Linear(_) => ProbeKind::Linear,
            ProbeModel::Mlp(_) => ProbeKind::Mlp,
        }
    }

    /// Input dimension d.
    pub fn dimension(&self) -> usize {
        match self {
            ProbeModel::Linear(p) => p.weights.rows(),
            ProbeModel::Mlp(p) => p.w1.rows(),
        }
    }

    /// Output label count L.
    pub fn label_count(&self) -> usize {
        match self {
            ProbeModel::Linear(p) => p.bias.len(),
            ProbeModel::Mlp(p) => p.b2.len(),
        }
    }

    /// Classifies one vector: returns the argmax label id (ties broken
    /// toward the lowest index) and the softmax probability vector.
    pub fn predict(&self, input: &[F]) -> Result<(usize, Vec<F>)> {
        if input.len() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "input has {} components, model expects {}",
                input.len(),
                self.dimension()
            )));
        }
        let log_probs = match self {
            ProbeModel::Linear(p) => log_softmax(&affine(&p.weights, &p.bias, input)),
            ProbeModel::Mlp(p) => {
                let hidden = relu(&affine(&p.w1, &p.b1, input));
                log_softmax(&affine(&p.w2, &p.b2, &hidden))
            }
        };
        let probs: Vec<F> = log_probs.iter().map(|&lp| lp.exp()).collect();
        Ok((argmax(&probs), probs))
    }

    /// Serializes to JSON with round-trippable parameter values.
    pub fn to_json(&self) -> String
    where
        F: Serialize,
    {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        F: for<'de> Deserialize<'de>,
    {
        let model: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("invalid model JSON: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    /// Checks shape consistency and finiteness of all parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProbeModel::Linear(p) => {
                p.weights.validate("weights")?;
                if p.bias.len() != p.weights.cols() {
                    return Err(Error::InvalidInput("bias length != label count".into()));
                }
                if !p.bias.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite bias".into()));
                }
            }
            ProbeModel::Mlp(p) => {
                p.w1.validate("w1")?;
                p.w2.validate("w2")?;
                if p.w1.cols() != p.w2.rows() || p.w1.cols() == 0 {
                    return Err(Error::InvalidInput("hidden layer shape mismatch".into()));
                }
                if p.b1.len() != p.w1.cols() || p.b2.len() != p.w2.cols() {
                    return Err(Error::InvalidInput("bias length mismatch".into()));
                }
                if !p.b1.iter().chain(p.b2.iter()).all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite bias".into()));
                }
            }
        }
        Ok(())
    }

    /// Flat copy of all parameters, in the fixed slice order.
    pub fn parameters(&self) -> Vec<F> {
        self.param_slices().concat()
    }

    /// Writes a flat parameter vector back (shapes must match).
    pub fn set_parameters(&mut self, flat: &[F]) -> Result<()> {
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            let next = offset + slice.len();
            if next > flat.len() {
                return Err(Error::InvalidInput("parameter vector too short".into()));
            }
            slice.copy_from_slice(&flat[offset..next]);
            offset = next;
        }
        if offset != flat.len() {
            return Err(Error::InvalidInput("parameter vector too long".into()));
        }
        Ok(())
    }

    pub(crate) fn param_slices(&self) -> Vec<&[F]> {
        match self {
            ProbeModel::Linear(p) => vec![p.weights.data.as_slice(), p.bias.as_slice()],
            ProbeModel::Mlp(p) => vec![
                p.w1.data.as_slice(),
                p.b1.as_slice(),
                p.w2.data.as_slice(),
                p.b2.as_slice(),
            ],
        }
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [F]> {
        match self {
            ProbeModel::Linear(p) => vec![p.weights.data.as_mut_slice(), p.bias.as_mut_slice()],
            ProbeModel::Mlp(p) => vec![
                p.w1.data.as_mut_slice(),
                p.b1.as_mut_slice(),
                p.w2.data.as_mut_slice(),
                p.b2.as_mut_slice(),
            ],
        }
    }
}

/// Gradient of the batch loss, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeGradient<F> {
    Linear { weights: Matrix<F>, bias: Vec<F> },
    Mlp {
        w1: Matrix<F>,
        b1: Vec<F>,
        w2: Matrix<F>,
        b2: Vec<F>,
    },
}

impl<F: Scalar> ProbeGradient<F> {
    pub(crate) fn slices(&self) -> Vec<&[F]> {
        match self {
            ProbeGradient::Linear { weights, bias } => {
                vec![weights.data.as_slice(), bias.as_slice()]
            }
            ProbeGradient::Mlp { w1, b1, w2, b2 } => vec![
                w1.data.as_slice(),
                b1.as_slice(),
                w2.data.as_slice(),
                b2.as_slice(),
            ],
        }
    }

    /// Flat copy matching [`ProbeModel::parameters`] order.
    pub fn flatten(&self) -> Vec<F> {
        self.slices().concat()
    }
}

/// Mean cross-entropy loss over the batch and its exact analytic gradient.
pub fn loss_and_gradient<F: Scalar>(
    model: &ProbeModel<F>,
    batch: &[(&[F], usize)],
) -> Result<(F, ProbeGradient<F>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let dimension = model.dimension();
    let label_count = model.label_count();
    for (input, label) in batch {
        if input.len() != dimension {
            return Err(Error::InvalidInput(format!(
                "batch input has {} components, model expects {dimension}",
                input.len()
            )));
        }
        if *label >= label_count {
            return Err(Error::InvalidInput(format!(
                "label id {label} out of range ({label_count} labels)"
            )));
        }
    }
    let scale = F::one() / F::from_usize(batch.len()).expect("batch size");
    let mut total_loss = F::zero();

    match model {
        ProbeModel::Linear(p) => {
            let mut grad_w = Matrix::zeros(p.weights.rows(), p.weights.cols());
            let mut grad_b = vec![F::zero(); p.bias.len()];
            for &(input, gold) in batch {
                let log_probs = log_softmax(&affine(&p.weights, &p.bias, input));
                total_loss = total_loss - log_probs[gold];
                for j in 0..label_count {
                    let mut delta = log_probs[j].exp();
                    if j == gold {
                        delta = delta - F::one();
                    }
                    delta = delta * scale;
                    grad_b[j] = grad_b[j] + delta;
                    for (i, &x) in input.iter().enumerate() {
                        let cur = grad_w.get(i, j);
                        grad_w.set(i, j, cur + x * delta);
                    }
                }
            }
            Ok((
                total_loss * scale,
                ProbeGradient::Linear {
                    weights: grad_w,
                    bias: grad_b,
                },
            ))
        }
        ProbeModel::Mlp(p) => {
            let hidden_dim = p.b1.len();
            let mut grad_w1 = Matrix::zeros(p.w1.rows(), p.w1.cols());
            let mut grad_b1 = vec![F::zero(); hidden_dim];
            let mut grad_w2 = Matrix::zeros(p.w2.rows(), p.w2.cols());
            let mut grad_b2 = vec![F::zero(); label_count];
            for &(input, gold) in batch {
                let pre = affine(&p.w1, &p.b1, input);
                let hidden = relu(&pre);
                let log_probs = log_softmax(&affine(&p.w2, &p.b2, &hidden));
                total_loss = total_loss - log_probs[gold];

                let mut delta_out = vec![F::zero(); label_count];
                for j in 0..label_count {
                    let mut d = log_probs[j].exp();
                    if j == gold {
                        d = d - F::one();
                    }
                    delta_out[j] = d * scale;
                    grad_b2[j] = grad_b2[j] + delta_out[j];
                }
                for k in 0..hidden_dim {
                    let h = hidden[k];
                    let mut back = F::zero();
                    for j in 0..label_count {
                        let cur = grad_w2.get(k, j);
                        grad_w2.set(k, j, cur + h * delta_out[j]);
                        back = back + p.w2.get(k, j) * delta_out[j];
                    }
                    // rectifier subgradient: 0 where the unit is inactive
                    if pre[k] > F::zero() {
                        grad_b1[k] = grad_b1[k] + back;
                        for (i, &x) in input.iter().enumerate() {
                            let cur = grad_w1.get(i, k);
                            grad_w1.set(i, k, cur + x * back);
                        }
                    }
                }
            }
            Ok((
                total_loss * scale,
                ProbeGradient::Mlp {
                    w1: grad_w1,
                    b1: grad_b1,
                    w2: grad_w2,
                    b2: grad_b2,
                },
            ))
        }
    }
}

fn glorot<F: Scalar>(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Matrix<F> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut m = Matrix::zeros(fan_in, fan_out);
    for value in m.data.iter_mut() {
        let draw: f64 = rng.gen_range(-bound..bound);
        *value = F::from_f64_lossy(draw);
    }
    m
}

/// `Wᵀx + b` for a d×L matrix (iterates rows of W once).
fn affine<F: Scalar>(weights: &Matrix<F>, bias: &[F], input: &[F]) -> Vec<F> {
    let mut out = bias.to_vec();
    for (i, &x) in input.iter().enumerate() {
        for (o, &w) in out.iter_mut().zip(weights.row(i)) {
            *o = *o + x * w;
        }
    }
    out
}

fn relu<F: Scalar>(values: &[F]) -> Vec<F> {
    values.iter().map(|&v| v.max(F::zero())).collect()
}

/// Numerically stable log-softmax.
fn log_softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| a.max(b));
    let sum: F = logits
        .iter()
        .map(|&l| (l - max).exp())
        .fold(F::zero(), |a, b| a + b);
    let log_sum = max + sum.ln();
    logits.iter().map(|&l| l - log_sum).collect()
}

fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
