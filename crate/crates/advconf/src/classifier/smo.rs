//! Simplified SMO solver for the soft-margin dual problem.
//!
//! Working sets are pairs: the first index comes from a sweep over all
//! examples looking for a KKT violation beyond `tol`, the second is drawn
//! uniformly from the remaining indices with the seeded generator. After
//! `max_passes` consecutive sweeps without an alpha update the solver
//! re-derives the error cache from scratch and, if violations remain,
//! falls back to a deterministic scan over second indices so convergence
//! does not hinge on the random draw; it stops once no pair can move.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LabeledDataset, SvmModel, TrainParams};
use crate::error::{Error, Result};

// Minimum change in an alpha for an update to count, as in Platt's
// simplified variant.
const MIN_ALPHA_STEP: f64 = 1e-5;

// Alphas closer than this to a bound are snapped onto it, so rounding
// residue cannot fabricate support vectors or fake interior points.
const BOUND_SNAP: f64 = 1e-12;

// Hard cap on full sweeps; prevents pathological inputs from spinning.
const MAX_TOTAL_PASSES: usize = 100_000;

struct Solver {
    n: usize,
    c: f64,
    tol: f64,
    y: Vec<f64>,
    kernel_matrix: Vec<f64>,
    alpha: Vec<f64>,
    bias: f64,
    /// err[i] = g(x_i) - y_i, maintained incrementally.
    err: Vec<f64>,
}

impl Solver {
    fn violates(&self, i: usize) -> bool {
        let r = self.y[i] * self.err[i]; // y_i g(x_i) - 1
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    /// Joint optimization of the pair (i, j); true when the pair moved.
    fn try_pair(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (e_i, e_j) = (self.err[i], self.err[j]);
        let (y_i, y_j) = (self.y[i], self.y[j]);
        let alpha_i_old = self.alpha[i];
        let alpha_j_old = self.alpha[j];

        let (lo, hi) = if y_i != y_j {
            (
                (alpha_j_old - alpha_i_old).max(0.0),
                (self.c + alpha_j_old - alpha_i_old).min(self.c),
            )
        } else {
            (
                (alpha_i_old + alpha_j_old - self.c).max(0.0),
                (alpha_i_old + alpha_j_old).min(self.c),
            )
        };
        if lo >= hi {
            return false;
        }

        let k_ii = self.kernel_matrix[i * self.n + i];
        let k_jj = self.kernel_matrix[j * self.n + j];
        let k_ij = self.kernel_matrix[i * self.n + j];
        let eta = 2.0 * k_ij - k_ii - k_jj;
        if eta >= 0.0 {
            return false;
        }

        let mut alpha_j = alpha_j_old - y_j * (e_i - e_j) / eta;
        alpha_j = alpha_j.clamp(lo, hi);
        if (alpha_j - alpha_j_old).abs() < MIN_ALPHA_STEP {
            return false;
        }
        let mut alpha_i = alpha_i_old + y_i * y_j * (alpha_j_old - alpha_j);
        if alpha_i < BOUND_SNAP {
            alpha_i = 0.0;
        } else if alpha_i > self.c - BOUND_SNAP {
            alpha_i = self.c;
        }

        let d_i = y_i * (alpha_i - alpha_i_old);
        let d_j = y_j * (alpha_j - alpha_j_old);
        let b1 = self.bias - e_i - d_i * k_ii - d_j * k_ij;
        let b2 = self.bias - e_j - d_i * k_ij - d_j * k_jj;
        let new_bias = if alpha_i > 0.0 && alpha_i < self.c {
            b1
        } else if alpha_j > 0.0 && alpha_j < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let d_b = new_bias - self.bias;

        let row_i = &self.kernel_matrix[i * self.n..(i + 1) * self.n];
        let row_j = &self.kernel_matrix[j * self.n..(j + 1) * self.n];
        for ((e, ki), kj) in self.err.iter_mut().zip(row_i).zip(row_j) {
            *e += d_i * ki + d_j * kj + d_b;
        }

        self.alpha[i] = alpha_i;
        self.alpha[j] = alpha_j;
        self.bias = new_bias;
        true
    }

    /// Re-derive the error cache exactly from the current alphas.
    fn recompute_errors(&mut self) {
        for i in 0..self.n {
            let row = &self.kernel_matrix[i * self.n..(i + 1) * self.n];
            let g: f64 = self.bias
                + self
                    .alpha
                    .iter()
                    .zip(&self.y)
                    .zip(row)
                    .map(|((a, yi), kv)| a * yi * kv)
                    .sum::<f64>();
            self.err[i] = g - self.y[i];
        }
    }

    /// Deterministic endgame: for every violated i, scan all j in order.
    /// Returns true when any pair moved.
    fn sweep_deterministic(&mut self) -> bool {
        let mut moved = false;
        for i in 0..self.n {
            if !self.violates(i) {
                continue;
            }
            for j in 0..self.n {
                if self.try_pair(i, j) {
                    moved = true;
                    break;
                }
            }
        }
        moved
    }
}

/// Train a soft-margin SVM on `data`. Deterministic for a fixed seed.
pub fn train_svm(data: &LabeledDataset, params: &TrainParams) -> Result<SvmModel> {
    train_svm_with_duals(data, params).map(|(model, _)| model)
}

/// Like `train_svm`, but also returns the full alpha vector (one entry per
/// training point, zeros included) for KKT diagnostics.
pub fn train_svm_with_duals(
    data: &LabeledDataset,
    params: &TrainParams,
) -> Result<(SvmModel, Vec<f64>)> {
    params.check()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !data.has_both_classes() {
        return Err(Error::DegenerateTrainingSet(
            "training data must contain both classes".into(),
        ));
    }
    let n = data.len();
    let dim = data.dim();
    let kernel = params.kernel.resolve(dim)?;

    // Dense kernel matrix; training sets here are desk-scale.
    let mut kernel_matrix = vec![0.0f64; n * n];
    for i in 0..n {
        let xi = data.point(i);
        for j in i..n {
            let v = kernel.eval(xi, data.point(j));
            kernel_matrix[i * n + j] = v;
            kernel_matrix[j * n + i] = v;
        }
    }

    let y: Vec<f64> = data.labels().iter().map(|l| l.sign()).collect();
    let mut solver = Solver {
        n,
        c: params.c,
        tol: params.tol,
        err: y.iter().map(|yi| -yi).collect(),
        y,
        kernel_matrix,
        alpha: vec![0.0f64; n],
        bias: 0.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut quiet_passes = 0usize;
    let mut total_passes = 0usize;

    while total_passes < MAX_TOTAL_PASSES {
        total_passes += 1;
        let mut num_changed = 0usize;
        for i in 0..n {
            if !solver.violates(i) {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if solver.try_pair(i, j) {
                num_changed += 1;
            }
        }
        if num_changed == 0 {
            quiet_passes += 1;
        } else {
            quiet_passes = 0;
        }
        if quiet_passes < params.max_passes {
            continue;
        }

        // Quiet long enough: re-derive the errors exactly, then drive out
        // any remaining violations deterministically. Stop once no pair
        // can move any further.
        solver.recompute_errors();
        if !(0..n).any(|i| solver.violates(i)) {
            break;
        }
        if !solver.sweep_deterministic() {
            break;
        }
        quiet_passes = 0;
    }

    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for i in 0..n {
        if solver.alpha[i] > 0.0 {
            support_vectors.push(data.point(i).to_vec());
            dual_coeffs.push(solver.alpha[i] * solver.y[i]);
        }
    }
    let model = SvmModel::new(kernel, dim, support_vectors, dual_coeffs, solver.bias)?;
    Ok((model, solver.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{serialize_svm, KernelSpec, Label};
    use crate::encoding::FeatureVector;

    fn fv(coords: &[f64]) -> FeatureVector {
        FeatureVector::new(coords.to_vec())
    }

    fn two_point_data() -> LabeledDataset {
        LabeledDataset::from_pairs([
            (fv(&[0.0]), Label::NonAcceptable),
            (fv(&[1.0]), Label::Acceptable),
        ])
        .unwrap()
    }

    #[test]
    fn separates_two_points_linear() {
        let params = TrainParams {
            kernel: KernelSpec::Linear,
            ..Default::default()
        };
        let m = train_svm(&two_point_data(), &params).unwrap();
        assert_eq!(m.predict(&fv(&[0.0])).unwrap(), Label::NonAcceptable);
        assert_eq!(m.predict(&fv(&[1.0])).unwrap(), Label::Acceptable);
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = LabeledDataset::from_pairs([
            (fv(&[0.0]), Label::Acceptable),
            (fv(&[1.0]), Label::Acceptable),
        ])
        .unwrap();
        match train_svm(&data, &TrainParams::default()) {
            Err(Error::DegenerateTrainingSet(_)) => {}
            other => panic!("expected degenerate training set, got {other:?}"),
        }
    }

    #[test]
    fn xor_fits_with_rbf() {
        let data = LabeledDataset::from_pairs([
            (fv(&[0.0, 0.0]), Label::NonAcceptable),
            (fv(&[1.0, 1.0]), Label::NonAcceptable),
            (fv(&[0.0, 1.0]), Label::Acceptable),
            (fv(&[1.0, 0.0]), Label::Acceptable),
        ])
        .unwrap();
        let params = TrainParams {
            c: 10.0,
            kernel: KernelSpec::Rbf { gamma: Some(1.0) },
            ..Default::default()
        };
        let m = train_svm(&data, &params).unwrap();
        for i in 0..data.len() {
            let predicted = Label::from_decision(
                m.decision(&fv(data.point(i))).unwrap(),
            );
            assert_eq!(predicted, data.label(i), "point {i}");
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let data = LabeledDataset::from_pairs(
            (0..40).map(|i| {
                let t = i as f64 / 39.0;
                let x = fv(&[t, (t * 7.3).sin().abs()]);
                let y = if t > 0.5 {
                    Label::Acceptable
                } else {
                    Label::NonAcceptable
                };
                (x, y)
            }),
        )
        .unwrap();
        let params = TrainParams {
            seed: 42,
            ..Default::default()
        };
        let a = serialize_svm(&train_svm(&data, &params).unwrap());
        let b = serialize_svm(&train_svm(&data, &params).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn kkt_conditions_hold_after_training() {
        // well-separated blobs, linear kernel
        let data = LabeledDataset::from_pairs((0..30).map(|i| {
            let t = (i % 15) as f64 / 15.0;
            if i < 15 {
                (fv(&[0.1 + 0.2 * t, 0.1 + 0.15 * t]), Label::NonAcceptable)
            } else {
                (fv(&[0.7 + 0.2 * t, 0.8 + 0.1 * t]), Label::Acceptable)
            }
        }))
        .unwrap();
        let params = TrainParams {
            kernel: KernelSpec::Linear,
            c: 10.0,
            seed: 7,
            ..Default::default()
        };
        let (m, alpha) = train_svm_with_duals(&data, &params).unwrap();
        let slack = params.tol + 1e-9;
        for i in 0..data.len() {
            let g = m.decision(&fv(data.point(i))).unwrap();
            let margin = data.label(i).sign() * g;
            let a = alpha[i];
            if a <= 1e-9 {
                assert!(margin >= 1.0 - slack, "alpha=0 point {i}: margin {margin}");
            } else if a >= params.c - 1e-9 {
                assert!(margin <= 1.0 + slack, "alpha=C point {i}: margin {margin}");
            } else {
                assert!(
                    (margin - 1.0).abs() <= slack,
                    "interior point {i}: margin {margin}"
                );
            }
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let data = LabeledDataset::new(2);
        assert!(matches!(
            train_svm(&data, &TrainParams::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
