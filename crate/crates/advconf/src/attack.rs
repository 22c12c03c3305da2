//! Gradient-based evasion attack: move a copy of a known point along the
//! decision-function gradient toward the target class, one fixed-length
//! step per iteration, clamped to the feature box \[0,1\]^d.

use std::collections::BTreeSet;

use crate::classifier::{Label, SvmModel};
use crate::encoding::FeatureVector;
use crate::error::{Error, Result};

/// Gradient norms below this are treated as a stationary point.
const STATIONARY_EPS: f64 = 1e-12;

/// Parameters of one evasion run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackParams {
    /// Class the point should drift toward.
    pub target: Label,
    /// Euclidean displacement per iteration.
    pub step: f64,
    pub iterations: usize,
    /// Stop as soon as the prediction reaches the target class.
    pub early_stop: bool,
    /// Feature slots that must not move.
    pub frozen_features: BTreeSet<usize>,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            target: Label::Acceptable,
            step: 0.002,
            iterations: 100,
            early_stop: false,
            frozen_features: BTreeSet::new(),
        }
    }
}

impl AttackParams {
    fn check(&self, dim: usize) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidParams(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if let Some(&bad) = self.frozen_features.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidParams(format!(
                "frozen feature index {bad} out of range for dimension {dim}"
            )));
        }
        Ok(())
    }
}

/// Why an attack run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackStatus {
    Completed,
    Stationary,
    EarlyStopped,
}

/// Every iterate of one evasion run with its decision value.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackTrace {
    pub points: Vec<FeatureVector>,
    pub decisions: Vec<f64>,
    pub status: AttackStatus,
}

impl AttackTrace {
    pub fn start_decision(&self) -> f64 {
        self.decisions[0]
    }

    pub fn final_decision(&self) -> f64 {
        *self.decisions.last().expect("trace is never empty")
    }

    pub fn final_point(&self) -> &FeatureVector {
        self.points.last().expect("trace is never empty")
    }

    /// True when the endpoint is predicted as `target`.
    pub fn reached(&self, target: Label) -> bool {
        Label::from_decision(self.final_decision()) == target
    }

    /// True when the run started outside the target class and ended inside.
    pub fn crossed(&self, target: Label) -> bool {
        Label::from_decision(self.start_decision()) != target && self.reached(target)
    }

    /// CSV export: `iter,g,coord_0..coord_{d-1}`.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, FeatureVector::dim);
        let mut out = String::from("iter,g");
        for i in 0..dim {
            out.push_str(&format!(",coord_{i}"));
        }
        out.push('\n');
        for (i, (point, g)) in self.points.iter().zip(&self.decisions).enumerate() {
            out.push_str(&format!("{i},{g:?}"));
            for v in point.coords() {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Run the evasion attack from `x0`.
///
/// Each iteration takes a step of exactly `params.step` along the gradient
/// direction (sign chosen by the target class), zeroes frozen coordinates
/// before normalizing, and clamps the result back into \[0,1\]^d. The trace
/// records every iterate including the start.
pub fn evade(model: &SvmModel, x0: &FeatureVector, params: &AttackParams) -> Result<AttackTrace> {
    let dim = model.dim();
    if x0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x0.dim(),
        });
    }
    params.check(dim)?;
    if x0.coords().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParams(
            "attack start point must lie in [0,1]^d".into(),
        ));
    }

    let sign = params.target.sign();
    let mut x = x0.coords().to_vec();
    let mut points = Vec::with_capacity(params.iterations + 1);
    let mut decisions = Vec::with_capacity(params.iterations + 1);
    points.push(FeatureVector::new(x.clone()));
    decisions.push(model.decision_slice(&x));

    let mut status = AttackStatus::Completed;
    if params.early_stop && Label::from_decision(decisions[0]) == params.target {
        return Ok(AttackTrace {
            points,
            decisions,
            status: AttackStatus::EarlyStopped,
        });
    }

    for iter in 0..params.iterations {
        let mut direction = model.gradient_slice(&x);
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(iter));
        }
        for &i in &params.frozen_features {
            direction[i] = 0.0;
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < STATIONARY_EPS {
            status = AttackStatus::Stationary;
            break;
        }
        let scale = sign * params.step / norm;
        for (xi, di) in x.iter_mut().zip(&direction) {
            *xi = (*xi + scale * di).clamp(0.0, 1.0);
        }
        points.push(FeatureVector::new(x.clone()));
        decisions.push(model.decision_slice(&x));
        if params.early_stop
            && Label::from_decision(*decisions.last().expect("just pushed")) == params.target
        {
            status = AttackStatus::EarlyStopped;
            break;
        }
    }

    Ok(AttackTrace {
        points,
        decisions,
        status,
    })
}

/// Element-wise `evade` over many start points; output order matches input
/// order and is independent of `threads`.
pub fn batch_evade(
    model: &SvmModel,
    sources: &[FeatureVector],
    params: &AttackParams,
) -> Result<Vec<AttackTrace>> {
    batch_evade_threads(model, sources, params, 1)
}

/// `batch_evade` with a worker-thread count; results are identical to the
/// sequential run, only wall-clock time changes.
pub fn batch_evade_threads(
    model: &SvmModel,
    sources: &[FeatureVector],
    params: &AttackParams,
    threads: usize,
) -> Result<Vec<AttackTrace>> {
    let threads = threads.max(1);
    if threads == 1 || sources.len() < 2 {
        return sources.iter().map(|x| evade(model, x, params)).collect();
    }
    let chunk = sources.len().div_ceil(threads);
    let results: Vec<Result<Vec<AttackTrace>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || part.iter().map(|x| evade(model, x, params)).collect())
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("attack worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(sources.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
