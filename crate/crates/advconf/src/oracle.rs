//! Test oracles: ground-truth labeling procedures over configurations,
//! composable sub-checks, and the synthetic scenarios used throughout the
//! experiments.
//!
//! An oracle stands for the expensive step of deriving a variant and
//! testing it, so every oracle carries a query counter and experiments
//! report their oracle budgets.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::Label;
use crate::encoding::{build_encoder, Encoder};
use crate::error::{Error, Result};
use crate::varmodel::{
    parse_constraint, Configuration, OptionDef, Value, VariabilityModel,
};

type LabelFn = dyn Fn(&Configuration) -> Label + Send + Sync;

/// A deterministic labeling procedure with a query counter.
#[derive(Clone)]
pub struct Oracle {
    name: String,
    f: Arc<LabelFn>,
    queries: Arc<AtomicU64>,
}

impl std::fmt::Debug for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle")
            .field("name", &self.name)
            .field("queries", &self.queries())
            .finish()
    }
}

impl Oracle {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Configuration) -> Label + Send + Sync + 'static,
    {
        Oracle {
            name: name.into(),
            f: Arc::new(f),
            queries: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Label a configuration. Exactly one counter increment per call.
    pub fn label(&self, config: &Configuration) -> Label {
        self.queries.fetch_add(1, Ordering::Relaxed);
        (self.f)(config)
    }

    /// Total queries so far, shared across clones of this oracle.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Verdict of a composite oracle with the names of the failed sub-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeVerdict {
    pub label: Label,
    pub failed: Vec<String>,
}

/// Conjunction of named sub-oracles: acceptable only when every sub-check
/// accepts.
#[derive(Clone)]
pub struct CompositeOracle {
    name: String,
    checks: Vec<(String, Oracle)>,
    queries: Arc<AtomicU64>,
}

impl CompositeOracle {
    pub fn new(name: impl Into<String>) -> Self {
        CompositeOracle {
            name: name.into(),
            checks: Vec::new(),
            queries: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn with_check(mut self, name: impl Into<String>, oracle: Oracle) -> Self {
        self.checks.push((name.into(), oracle));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// Label plus the list of failed sub-checks.
    pub fn label_detailed(&self, config: &Configuration) -> CompositeVerdict {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut failed = Vec::new();
        for (name, oracle) in &self.checks {
            if oracle.label(config) == Label::NonAcceptable {
                failed.push(name.clone());
            }
        }
        CompositeVerdict {
            label: if failed.is_empty() {
                Label::Acceptable
            } else {
                Label::NonAcceptable
            },
            failed,
        }
    }

    pub fn label(&self, config: &Configuration) -> Label {
        self.label_detailed(config).label
    }

    /// Wrap into a plain `Oracle` (with its own counter).
    pub fn into_oracle(self) -> Oracle {
        let name = self.name.clone();
        Oracle::new(name, move |config| {
            let mut ok = true;
            for (_, oracle) in &self.checks {
                if oracle.label(config) == Label::NonAcceptable {
                    ok = false;
                }
            }
            if ok {
                Label::Acceptable
            } else {
                Label::NonAcceptable
            }
        })
    }
}

/// A named experiment setting: a model and a matching ground-truth oracle.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub model: VariabilityModel,
    pub oracle: Oracle,
}

/// Build one of the named scenarios.
///
/// `band2d`: two numeric options on \[0,1\], no constraints; acceptable iff
/// `x1 <= 0.5 + 0.2 sin(2 pi x0)`, a wavy band through the unit square.
///
/// `motivlike80`: a deterministically generated 80-option model (8 boolean,
/// 24 categorical with 3-5 choices, 48 numeric) with 10 random binary
/// constraints. The oracle scores `w . encode(c)` plus five pairwise
/// interaction terms and accepts below a threshold calibrated so that
/// 25-40% of seed-sampled valid configurations are non-acceptable.
pub fn make_scenario(name: &str, seed: u64) -> Result<Scenario> {
    match name {
        "band2d" => Ok(band2d(seed)),
        "motivlike80" => motivlike80(seed),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn band2d(seed: u64) -> Scenario {
    let model = VariabilityModel::new(
        vec![
            OptionDef::numeric("x0", 0.0, 1.0),
            OptionDef::numeric("x1", 0.0, 1.0),
        ],
        vec![],
    )
    .expect("static model is well-formed");
    let oracle = Oracle::new("band2d", |config| {
        let x0 = match config.get("x0") {
            Some(Value::Real(v)) => *v,
            _ => return Label::NonAcceptable,
        };
        let x1 = match config.get("x1") {
            Some(Value::Real(v)) => *v,
            _ => return Label::NonAcceptable,
        };
        let limit = 0.5 + 0.2 * (2.0 * std::f64::consts::PI * x0).sin();
        if x1 <= limit {
            Label::Acceptable
        } else {
            Label::NonAcceptable
        }
    });
    Scenario {
        name: "band2d".into(),
        seed,
        model,
        oracle,
    }
}

// Choice palette for generated categorical options; the first k are used.
const CHOICE_PALETTE: [&str; 5] = ["off", "low", "medium", "high", "extreme"];

// Power-of-two spans keep encode/project numerically exact.
const NUMERIC_SPANS: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

fn motivlike80(seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut options = Vec::with_capacity(80);
    for i in 0..8 {
        options.push(OptionDef::boolean(format!("flag_{i:02}")));
    }
    let mut choice_counts = Vec::new();
    for i in 0..24 {
        let k = rng.random_range(3..=5usize);
        choice_counts.push(k);
        options.push(OptionDef::categorical(
            format!("mode_{i:02}"),
            CHOICE_PALETTE[..k].iter().copied(),
        ));
    }
    let mut spans = Vec::new();
    for i in 0..48 {
        let span = NUMERIC_SPANS[rng.random_range(0..NUMERIC_SPANS.len())];
        spans.push(span);
        options.push(OptionDef::numeric(format!("level_{i:02}"), 0.0, span));
    }

    // Ten gentle binary constraints; each one cuts a small slice of the
    // space so rejection sampling stays cheap.
    let mut constraint_texts = Vec::with_capacity(10);
    for round in 0..10 {
        let text = match round % 3 {
            0 => {
                let f = rng.random_range(0..8usize);
                let l = rng.random_range(0..48usize);
                let cap = 0.75 * spans[l];
                format!("flag_{f:02} == true => level_{l:02} <= {cap:?}")
            }
            1 => {
                let a = rng.random_range(0..24usize);
                let mut b = rng.random_range(0..23usize);
                if b >= a {
                    b += 1;
                }
                let ca = CHOICE_PALETTE[choice_counts[a] - 1];
                let cb = CHOICE_PALETTE[choice_counts[b] - 1];
                format!("!(mode_{a:02} == {ca} && mode_{b:02} == {cb})")
            }
            _ => {
                let m = rng.random_range(0..24usize);
                let l = rng.random_range(0..48usize);
                let c = CHOICE_PALETTE[0];
                let floor = 0.25 * spans[l];
                format!("mode_{m:02} == {c} => level_{l:02} >= {floor:?}")
            }
        };
        constraint_texts.push(text);
    }
    let constraints = constraint_texts
        .iter()
        .map(|t| parse_constraint(t, &options))
        .collect::<Result<Vec<_>>>()?;
    let model = VariabilityModel::new(options, constraints)?;
    let encoder = build_encoder(&model);
    let dim = encoder.dim();

    // Linear score plus five pairwise interactions over encoded features.
    let mut weights = Vec::with_capacity(dim);
    for _ in 0..dim {
        weights.push(rng.random_range(-1.0..=1.0));
    }
    let mut interactions = Vec::with_capacity(5);
    for _ in 0..5 {
        let a = rng.random_range(0..dim);
        let mut b = rng.random_range(0..dim - 1);
        if b >= a {
            b += 1;
        }
        let w: f64 = rng.random_range(-1.0..=1.0);
        interactions.push((a, b, w));
    }

    // Calibrate the acceptance threshold on a seeded sample of valid
    // configurations so that 25-40% land on the non-acceptable side.
    let calibration_seed = rng.next_u64();
    let sample = model.sample_valid(1000, calibration_seed)?;
    let mut scores: Vec<f64> = sample
        .iter()
        .map(|c| score(&encoder, &weights, &interactions, c))
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    // strictly-greater scores are non-acceptable: index 674 leaves 325 above
    let threshold = scores[674];

    let oracle_name = format!("motivlike80(seed={seed})");
    let oracle = Oracle::new(oracle_name, move |config| {
        if score(&encoder, &weights, &interactions, config) <= threshold {
            Label::Acceptable
        } else {
            Label::NonAcceptable
        }
    });

    Ok(Scenario {
        name: "motivlike80".into(),
        seed,
        model,
        oracle,
    })
}

fn score(
    encoder: &Encoder,
    weights: &[f64],
    interactions: &[(usize, usize, f64)],
    config: &Configuration,
) -> f64 {
    let x = match encoder.encode(config) {
        Ok(x) => x,
        // Oracles are total over valid configurations; anything outside the
        // domain is simply non-acceptable.
        Err(_) => return f64::INFINITY,
    };
    let coords = x.coords();
    let mut s: f64 = weights.iter().zip(coords).map(|(w, v)| w * v).sum();
    for (a, b, w) in interactions {
        s += w * coords[*a] * coords[*b];
    }
    s
}

/// Batch labeling over configuration CSV: returns the same CSV with a
/// `label` column appended (replacing any existing labels).
pub fn label_batch(
    oracle: &Oracle,
    model: &VariabilityModel,
    csv_text: &str,
) -> Result<String> {
    let (configs, _) = crate::varmodel::csv::read_configurations(model, csv_text)?;
    let labels: Vec<Label> = configs.iter().map(|c| oracle.label(c)).collect();
    crate::varmodel::csv::write_configurations(model, &configs, Some(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band_config(x0: f64, x1: f64) -> Configuration {
        Configuration::from_pairs([
            ("x0".into(), Value::Real(x0)),
            ("x1".into(), Value::Real(x1)),
        ])
    }

    #[test]
    fn band2d_labels_match_the_band() {
        let s = make_scenario("band2d", 0).unwrap();
        // limit at x0 = 0.25 is 0.7
        assert_eq!(s.oracle.label(&band_config(0.25, 0.0)), Label::Acceptable);
        assert_eq!(
            s.oracle.label(&band_config(0.25, 0.9)),
            Label::NonAcceptable
        );
        // the boundary itself is acceptable
        assert_eq!(s.oracle.label(&band_config(0.0, 0.5)), Label::Acceptable);
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(matches!(
            make_scenario("bandX", 0),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn query_counter_counts_every_call() {
        let s = make_scenario("band2d", 0).unwrap();
        assert_eq!(s.oracle.queries(), 0);
        let c = band_config(0.1, 0.1);
        let a = s.oracle.label(&c);
        let b = s.oracle.label(&c);
        assert_eq!(a, b);
        assert_eq!(s.oracle.queries(), 2);
        // clones share the counter
        let clone = s.oracle.clone();
        clone.label(&c);
        assert_eq!(s.oracle.queries(), 3);
    }

    #[test]
    fn composite_reports_failed_checks() {
        let always_ok = Oracle::new("ok", |_| Label::Acceptable);
        let always_bad = Oracle::new("bad", |_| Label::NonAcceptable);
        let composite = CompositeOracle::new("combo")
            .with_check("noise", always_ok.clone())
            .with_check("blur", always_bad)
            .with_check("color", always_ok);
        let verdict = composite.label_detailed(&band_config(0.0, 0.0));
        assert_eq!(verdict.label, Label::NonAcceptable);
        assert_eq!(verdict.failed, vec!["blur".to_string()]);

        let all_ok = CompositeOracle::new("combo2")
            .with_check("a", Oracle::new("a", |_| Label::Acceptable))
            .with_check("b", Oracle::new("b", |_| Label::Acceptable));
        assert_eq!(all_ok.label(&band_config(0.0, 0.0)), Label::Acceptable);
    }

    #[test]
    fn motivlike80_shape_and_calibration() {
        for seed in [1u64, 2, 77] {
            let s = make_scenario("motivlike80", seed).unwrap();
            assert_eq!(s.model.options.len(), 80);
            assert_eq!(s.model.constraints.len(), 10);
            let sample = s.model.sample_valid(1000, 12345).unwrap();
            let bad = sample
                .iter()
                .filter(|c| s.oracle.label(c) == Label::NonAcceptable)
                .count();
            let frac = bad as f64 / 1000.0;
            assert!(
                (0.25..=0.40).contains(&frac),
                "seed {seed}: non-acceptable fraction {frac}"
            );
        }
    }

    #[test]
    fn motivlike80_is_deterministic_per_seed() {
        let a = make_scenario("motivlike80", 9).unwrap();
        let b = make_scenario("motivlike80", 9).unwrap();
        assert_eq!(a.model, b.model);
        for c in a.model.sample_valid(50, 4).unwrap() {
            assert_eq!(a.oracle.label(&c), b.oracle.label(&c));
        }
    }

    #[test]
    fn label_batch_appends_label_column() {
        let s = make_scenario("band2d", 0).unwrap();
        let configs = s.model.sample_valid(5, 3).unwrap();
        let csv =
            crate::varmodel::csv::write_configurations(&s.model, &configs, None).unwrap();
        let labeled = label_batch(&s.oracle, &s.model, &csv).unwrap();
        let (parsed, labels) =
            crate::varmodel::csv::read_configurations(&s.model, &labeled).unwrap();
        assert_eq!(parsed, configs);
        let labels = labels.unwrap();
        for (c, l) in parsed.iter().zip(&labels) {
            assert_eq!(s.oracle.label(c), *l);
        }
    }
}
