//! Soft-margin kernel SVM: training via simplified SMO, decision values,
//! and the analytic gradient of the decision function.
//!
//! The decision function is `g(x) = sum_i coeff_i * k(x, sv_i) + b` with
//! `coeff_i = alpha_i * y_i`. Its sign is the predicted class (ties at zero
//! predict +1) and its magnitude is the confidence. Both kernels are
//! differentiable in `x`, which is what the evasion attack requires.

mod smo;

pub use smo::{train_svm, train_svm_with_duals};

use serde::Deserialize;

use crate::encoding::FeatureVector;
use crate::error::{Error, Result};

/// Binary class label; `Acceptable` is +1, `NonAcceptable` is -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Acceptable,
    NonAcceptable,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Acceptable => 1.0,
            Label::NonAcceptable => -1.0,
        }
    }

    pub fn as_int(self) -> i32 {
        match self {
            Label::Acceptable => 1,
            Label::NonAcceptable => -1,
        }
    }

    pub fn from_int(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Label::Acceptable),
            -1 => Ok(Label::NonAcceptable),
            other => Err(Error::InvalidParams(format!(
                "label must be -1 or 1, got {other}"
            ))),
        }
    }

    /// Predicted label for a decision value; g >= 0 is +1.
    pub fn from_decision(g: f64) -> Self {
        if g >= 0.0 {
            Label::Acceptable
        } else {
            Label::NonAcceptable
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_int())
    }
}

/// Training data: feature vectors of one shared dimension plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<f64>,
    labels: Vec<Label>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(dim: usize) -> Self {
        LabeledDataset {
            rows: Vec::new(),
            labels: Vec::new(),
            dim,
        }
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureVector, Label)>,
    {
        let mut iter = pairs.into_iter().peekable();
        let dim = match iter.peek() {
            Some((x, _)) => x.dim(),
            None => return Err(Error::EmptyDataset),
        };
        let mut ds = LabeledDataset::new(dim);
        for (x, y) in iter {
            ds.push(x, y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, x: FeatureVector, y: Label) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        self.rows.extend_from_slice(x.coords());
        self.labels.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&Label::Acceptable) && self.labels.contains(&Label::NonAcceptable)
    }
}

/// Kernel of a trained model, with resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Kernel requested for training; `Rbf { gamma: None }` resolves to `1/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: Option<f64> },
}

impl KernelSpec {
    pub fn resolve(&self, dim: usize) -> Result<Kernel> {
        match self {
            KernelSpec::Linear => Ok(Kernel::Linear),
            KernelSpec::Rbf { gamma } => {
                let gamma = gamma.unwrap_or(1.0 / dim as f64);
                if !(gamma > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "gamma must be positive, got {gamma}"
                    )));
                }
                Ok(Kernel::Rbf { gamma })
            }
        }
    }
}

/// Hyperparameters for `train_svm`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            c: 1.0,
            kernel: KernelSpec::Rbf { gamma: None },
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn check(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidParams(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// A trained SVM: support vectors, dual coefficients (`alpha_i * y_i`),
/// bias, and kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    kernel: Kernel,
    dim: usize,
    support_vectors: Vec<f64>,
    dual_coeffs: Vec<f64>,
    bias: f64,
}

impl SvmModel {
    pub fn new(
        kernel: Kernel,
        dim: usize,
        support_vectors: Vec<Vec<f64>>,
        dual_coeffs: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        if support_vectors.len() != dual_coeffs.len() {
            return Err(Error::InvalidParams(format!(
                "{} support vectors but {} dual coefficients",
                support_vectors.len(),
                dual_coeffs.len()
            )));
        }
        let mut flat = Vec::with_capacity(support_vectors.len() * dim);
        for sv in &support_vectors {
            if sv.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: sv.len(),
                });
            }
            flat.extend_from_slice(sv);
        }
        Ok(SvmModel {
            kernel,
            dim,
            support_vectors: flat,
            dual_coeffs,
            bias,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn num_support_vectors(&self) -> usize {
        self.dual_coeffs.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Decision value g(x). Sign is the predicted class, magnitude the
    /// confidence.
    pub fn decision(&self, x: &FeatureVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.decision_slice(x.coords()))
    }

    pub(crate) fn decision_slice(&self, x: &[f64]) -> f64 {
        let mut g = self.bias;
        for (i, coeff) in self.dual_coeffs.iter().enumerate() {
            g += coeff * self.kernel.eval(x, self.support_vector(i));
        }
        g
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Label> {
        Ok(Label::from_decision(self.decision(x)?))
    }

    /// Analytic gradient of g at x.
    ///
    /// linear: constant `sum_i coeff_i * sv_i`;
    /// rbf: `sum_i coeff_i * (-2 gamma) (x - sv_i) k(x, sv_i)`.
    pub fn gradient(&self, x: &FeatureVector) -> Result<FeatureVector> {
        self.check_dim(x)?;
        Ok(FeatureVector::new(self.gradient_slice(x.coords())))
    }

    pub(crate) fn gradient_slice(&self, x: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim];
        match self.kernel {
            Kernel::Linear => {
                for (i, coeff) in self.dual_coeffs.iter().enumerate() {
                    for (g, s) in grad.iter_mut().zip(self.support_vector(i)) {
                        *g += coeff * s;
                    }
                }
            }
            Kernel::Rbf { gamma } => {
                for (i, coeff) in self.dual_coeffs.iter().enumerate() {
                    let sv = self.support_vector(i);
                    let k = self.kernel.eval(x, sv);
                    let scale = coeff * (-2.0 * gamma) * k;
                    for ((g, xi), si) in grad.iter_mut().zip(x).zip(sv) {
                        *g += scale * (xi - si);
                    }
                }
            }
        }
        grad
    }

    /// Error rate, confusion counts, and mean |g| over a dataset.
    pub fn evaluate(&self, data: &LabeledDataset) -> Result<Metrics> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: data.dim(),
            });
        }
        let mut m = Metrics::default();
        let mut abs_sum = 0.0;
        for i in 0..data.len() {
            let g = self.decision_slice(data.point(i));
            abs_sum += g.abs();
            let predicted = Label::from_decision(g);
            match (data.label(i), predicted) {
                (Label::Acceptable, Label::Acceptable) => m.true_positive += 1,
                (Label::Acceptable, Label::NonAcceptable) => m.false_negative += 1,
                (Label::NonAcceptable, Label::Acceptable) => m.false_positive += 1,
                (Label::NonAcceptable, Label::NonAcceptable) => m.true_negative += 1,
            }
        }
        m.error_rate = (m.false_positive + m.false_negative) as f64 / data.len() as f64;
        m.mean_abs_decision = abs_sum / data.len() as f64;
        Ok(m)
    }
}

/// Evaluation summary over a labeled dataset.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub error_rate: f64,
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    pub mean_abs_decision: f64,
}

// --- JSON serialization -------------------------------------------------
//
// Numbers are written with 17 significant digits so that float values
// survive the round trip bit-exactly and repeated serialize/parse cycles
// are byte-stable.

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a model to its JSON document form.
pub fn serialize_svm(model: &SvmModel) -> String {
    let (kernel, gamma) = match model.kernel {
        Kernel::Linear => ("linear", 0.0),
        Kernel::Rbf { gamma } => ("rbf", gamma),
    };
    let mut out = String::new();
    out.push_str("{\"kernel\":\"");
    out.push_str(kernel);
    out.push_str("\",\"gamma\":");
    out.push_str(&fmt_f64(gamma));
    out.push_str(",\"bias\":");
    out.push_str(&fmt_f64(model.bias));
    out.push_str(",\"dim\":");
    out.push_str(&model.dim.to_string());
    out.push_str(",\"support_vectors\":[");
    for i in 0..model.num_support_vectors() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, v) in model.support_vector(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        out.push(']');
    }
    out.push_str("],\"dual_coeffs\":[");
    for (i, c) in model.dual_coeffs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*c));
    }
    out.push_str("]}");
    out
}

#[derive(Deserialize)]
struct RawSvm {
    kernel: String,
    #[serde(default)]
    gamma: f64,
    bias: f64,
    dim: usize,
    support_vectors: Vec<Vec<f64>>,
    dual_coeffs: Vec<f64>,
}

/// Parse a model from its JSON document form.
pub fn parse_svm(text: &str) -> Result<SvmModel> {
    let raw: RawSvm = serde_json::from_str(text)?;
    let kernel = match raw.kernel.as_str() {
        "linear" => Kernel::Linear,
        "rbf" => {
            if !(raw.gamma > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "rbf gamma must be positive, got {}",
                    raw.gamma
                )));
            }
            Kernel::Rbf { gamma: raw.gamma }
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown kernel `{other}`"
            )))
        }
    };
    SvmModel::new(kernel, raw.dim, raw.support_vectors, raw.dual_coeffs, raw.bias)
}
