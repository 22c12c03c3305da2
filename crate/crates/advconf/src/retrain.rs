//! Adversarial retraining loop and the random-acquisition baseline.
//!
//! Each round of the adversarial loop picks source points among the
//! training set's non-acceptable members, runs the evasion attack toward
//! the acceptable class, materializes each endpoint as a configuration,
//! labels it (copying the source label, or asking the oracle), appends it
//! to the training set, and retrains. The random baseline spends the same
//! per-round oracle budget on uniformly sampled configurations and keeps
//! only the ones the classifier got wrong.

use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::attack::{batch_evade_threads, AttackParams};
use crate::classifier::{train_svm, Label, LabeledDataset, SvmModel, TrainParams};
use crate::encoding::{build_encoder, Encoder, FeatureVector};
use crate::error::{Error, Result};
use crate::oracle::Scenario;
use crate::varmodel::Configuration;

const INIT_RESAMPLE_TRIES: u64 = 100;

/// How adversarial endpoints are labeled before entering the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingStrategy {
    /// Copy the label of the source point (no oracle involvement).
    SourceLabel,
    /// Query the oracle on the projected configuration.
    OracleLabel,
}

impl std::fmt::Display for LabelingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelingStrategy::SourceLabel => write!(f, "source"),
            LabelingStrategy::OracleLabel => write!(f, "oracle"),
        }
    }
}

/// Parameters shared by both loops.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopParams {
    pub rounds: usize,
    pub attacks_per_round: usize,
    pub attack: AttackParams,
    pub labeling: LabelingStrategy,
    pub seed: u64,
    pub holdout_size: usize,
    /// Drop adversarial configurations that violate the variability model
    /// instead of training on them.
    pub discard_invalid: bool,
    /// Worker threads for the per-round attack batch; results do not
    /// depend on this.
    pub threads: usize,
}

impl Default for LoopParams {
    fn default() -> Self {
        LoopParams {
            rounds: 100,
            attacks_per_round: 10,
            attack: AttackParams::default(),
            labeling: LabelingStrategy::SourceLabel,
            seed: 0,
            holdout_size: 500,
            discard_invalid: false,
            threads: 1,
        }
    }
}

/// Per-round metrics. Row 0 describes the state before any attack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRow {
    pub round: usize,
    pub train_size: usize,
    /// Fraction of the holdout where the classifier disagrees with the
    /// oracle's stored labels.
    pub disagreement: f64,
    pub mean_abs_g: f64,
    /// Adversarial points that ended on the target side after starting
    /// outside it.
    pub crossed: usize,
    /// Adversarial configurations valid under the variability model.
    pub valid_adv: usize,
    /// Cumulative oracle queries at the end of the round.
    pub oracle_queries: u64,
}

/// Completion state of a loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopStatus {
    Completed,
    Aborted { round: usize, reason: String },
}

/// Full record of one loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopReport {
    pub scenario: String,
    pub scenario_seed: u64,
    pub mode: String,
    /// Encoded feature dimension; resolves the default rbf gamma of 1/d.
    pub feature_dim: usize,
    pub labeling: LabelingStrategy,
    pub seed: u64,
    pub init_train_size: usize,
    pub holdout_size: usize,
    pub rounds: usize,
    pub attacks_per_round: usize,
    pub attack_step: f64,
    pub attack_iterations: usize,
    pub discard_invalid: bool,
    pub train_c: f64,
    pub train_kernel: String,
    pub train_gamma: Option<f64>,
    pub train_tol: f64,
    pub train_seed: u64,
    pub status: LoopStatus,
    pub rows: Vec<RoundRow>,
}

pub const REPORT_CSV_HEADER: &str =
    "round,train_size,disagreement,mean_abs_g,crossed,valid_adv,oracle_queries";

impl LoopReport {
    /// Fixed-header CSV, one row per round.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:?},{:?},{},{},{}\n",
                r.round,
                r.train_size,
                r.disagreement,
                r.mean_abs_g,
                r.crossed,
                r.valid_adv,
                r.oracle_queries
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn kernel_name(params: &TrainParams) -> String {
    match params.kernel {
        crate::classifier::KernelSpec::Linear => "linear".into(),
        crate::classifier::KernelSpec::Rbf { .. } => "rbf".into(),
    }
}

fn kernel_gamma(params: &TrainParams) -> Option<f64> {
    match params.kernel {
        crate::classifier::KernelSpec::Linear => None,
        crate::classifier::KernelSpec::Rbf { gamma } => gamma,
    }
}

/// Shared setup: initial training set, fixed holdout, first model.
struct LoopState {
    encoder: Encoder,
    train: LabeledDataset,
    holdout: Vec<FeatureVector>,
    holdout_labels: Vec<Label>,
    model: SvmModel,
}

fn initialize(
    scenario: &Scenario,
    init_train_size: usize,
    train_params: &TrainParams,
    p: &LoopParams,
    init_seed: u64,
    holdout_seed: u64,
) -> Result<LoopState> {
    if init_train_size < 2 {
        return Err(Error::InvalidParams(
            "initial training set needs at least 2 points".into(),
        ));
    }
    let encoder = build_encoder(&scenario.model);

    // Resample until both classes appear, within a bounded number of tries.
    let mut attempt = 0u64;
    let (configs, labels) = loop {
        let configs = scenario
            .model
            .sample_valid(init_train_size, init_seed.wrapping_add(attempt))?;
        let labels: Vec<Label> = configs.iter().map(|c| scenario.oracle.label(c)).collect();
        if labels.contains(&Label::Acceptable) && labels.contains(&Label::NonAcceptable) {
            break (configs, labels);
        }
        attempt += 1;
        if attempt >= INIT_RESAMPLE_TRIES {
            return Err(Error::DegenerateTrainingSet(format!(
                "initial sample still single-class after {INIT_RESAMPLE_TRIES} resamples"
            )));
        }
    };

    let mut train = LabeledDataset::new(encoder.dim());
    for (c, l) in configs.iter().zip(&labels) {
        train.push(encoder.encode(c)?, *l)?;
    }

    // Fixed holdout, disjoint from the initial training configurations.
    let mut holdout_configs: Vec<Configuration> = Vec::with_capacity(p.holdout_size);
    let mut top_up = 0u64;
    while holdout_configs.len() < p.holdout_size {
        if top_up >= INIT_RESAMPLE_TRIES {
            return Err(Error::SamplingBudget {
                attempts: top_up,
                accepted: holdout_configs.len(),
                requested: p.holdout_size,
            });
        }
        let need = p.holdout_size - holdout_configs.len();
        let batch = scenario
            .model
            .sample_valid(need, holdout_seed.wrapping_add(top_up))?;
        for c in batch {
            if !configs.contains(&c) && !holdout_configs.contains(&c) {
                holdout_configs.push(c);
            }
        }
        top_up += 1;
    }
    let holdout_labels: Vec<Label> = holdout_configs
        .iter()
        .map(|c| scenario.oracle.label(c))
        .collect();
    let holdout: Vec<FeatureVector> = holdout_configs
        .iter()
        .map(|c| encoder.encode(c))
        .collect::<Result<_>>()?;

    let model = train_svm(&train, train_params)?;
    Ok(LoopState {
        encoder,
        train,
        holdout,
        holdout_labels,
        model,
    })
}

fn holdout_metrics(state: &LoopState) -> (f64, f64) {
    let n = state.holdout.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut disagreements = 0usize;
    let mut abs_sum = 0.0f64;
    for (x, label) in state.holdout.iter().zip(&state.holdout_labels) {
        let g = state.model.decision(x).expect("holdout dims match");
        abs_sum += g.abs();
        if Label::from_decision(g) != *label {
            disagreements += 1;
        }
    }
    (disagreements as f64 / n as f64, abs_sum / n as f64)
}

fn make_row(
    round: usize,
    state: &LoopState,
    scenario: &Scenario,
    crossed: usize,
    valid_adv: usize,
) -> RoundRow {
    let (disagreement, mean_abs_g) = holdout_metrics(state);
    RoundRow {
        round,
        train_size: state.train.len(),
        disagreement,
        mean_abs_g,
        crossed,
        valid_adv,
        oracle_queries: scenario.oracle.queries(),
    }
}

fn report_skeleton(
    scenario: &Scenario,
    mode: &str,
    init_train_size: usize,
    train_params: &TrainParams,
    p: &LoopParams,
) -> LoopReport {
    LoopReport {
        scenario: scenario.name.clone(),
        scenario_seed: scenario.seed,
        mode: mode.into(),
        feature_dim: build_encoder(&scenario.model).dim(),
        labeling: p.labeling,
        seed: p.seed,
        init_train_size,
        holdout_size: p.holdout_size,
        rounds: p.rounds,
        attacks_per_round: p.attacks_per_round,
        attack_step: p.attack.step,
        attack_iterations: p.attack.iterations,
        discard_invalid: p.discard_invalid,
        train_c: train_params.c,
        train_kernel: kernel_name(train_params),
        train_gamma: kernel_gamma(train_params),
        train_tol: train_params.tol,
        train_seed: train_params.seed,
        status: LoopStatus::Completed,
        rows: Vec::new(),
    }
}

/// The adversarial retraining loop.
///
/// Per round: pick `attacks_per_round` source points uniformly (seeded)
/// among the training points currently labeled non-acceptable — including
/// adversarial points added in earlier rounds — attack each toward the
/// target class, project every endpoint to a configuration, record its
/// validity, label it per the labeling strategy, append, and retrain.
pub fn run_adversarial_loop(
    scenario: &Scenario,
    init_train_size: usize,
    train_params: &TrainParams,
    p: &LoopParams,
) -> Result<LoopReport> {
    let mut seeds = ChaCha8Rng::seed_from_u64(p.seed);
    let init_seed = seeds.next_u64();
    let holdout_seed = seeds.next_u64();
    let mut source_rng = ChaCha8Rng::seed_from_u64(seeds.next_u64());

    let mut state = initialize(
        scenario,
        init_train_size,
        train_params,
        p,
        init_seed,
        holdout_seed,
    )?;
    let mut report = report_skeleton(scenario, "adversarial", init_train_size, train_params, p);
    report.rows.push(make_row(0, &state, scenario, 0, 0));

    for round in 1..=p.rounds {
        let pool: Vec<usize> = (0..state.train.len())
            .filter(|&i| state.train.label(i) == Label::NonAcceptable)
            .collect();
        if pool.is_empty() {
            report.status = LoopStatus::Aborted {
                round,
                reason: "no non-acceptable training points left to attack".into(),
            };
            return Ok(report);
        }
        let sources: Vec<FeatureVector> = (0..p.attacks_per_round)
            .map(|_| {
                let i = pool[source_rng.random_range(0..pool.len())];
                FeatureVector::new(state.train.point(i).to_vec())
            })
            .collect();

        let traces = batch_evade_threads(&state.model, &sources, &p.attack, p.threads)?;
        let mut crossed = 0usize;
        let mut valid_adv = 0usize;
        for trace in &traces {
            if trace.crossed(p.attack.target) {
                crossed += 1;
            }
            let config = state.encoder.project(trace.final_point())?;
            let valid = scenario.model.validate(&config)?.valid;
            if valid {
                valid_adv += 1;
            }
            if p.discard_invalid && !valid {
                continue;
            }
            let label = match p.labeling {
                LabelingStrategy::SourceLabel => Label::NonAcceptable,
                LabelingStrategy::OracleLabel => scenario.oracle.label(&config),
            };
            state.train.push(state.encoder.encode(&config)?, label)?;
        }

        match train_svm(&state.train, train_params) {
            Ok(model) => state.model = model,
            Err(Error::DegenerateTrainingSet(reason)) => {
                report.status = LoopStatus::Aborted { round, reason };
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
        report
            .rows
            .push(make_row(round, &state, scenario, crossed, valid_adv));
    }
    Ok(report)
}

/// The random-acquisition baseline with the same metrics schema.
///
/// Per round: sample `attacks_per_round` valid configurations, query the
/// oracle on each, and add only those where the classifier and the oracle
/// disagree (with the oracle's label). Retrains only when something was
/// added.
pub fn run_random_loop(
    scenario: &Scenario,
    init_train_size: usize,
    train_params: &TrainParams,
    p: &LoopParams,
) -> Result<LoopReport> {
    let mut seeds = ChaCha8Rng::seed_from_u64(p.seed);
    let init_seed = seeds.next_u64();
    let holdout_seed = seeds.next_u64();
    let mut round_seeds = ChaCha8Rng::seed_from_u64(seeds.next_u64());

    let mut state = initialize(
        scenario,
        init_train_size,
        train_params,
        p,
        init_seed,
        holdout_seed,
    )?;
    let mut report = report_skeleton(scenario, "random", init_train_size, train_params, p);
    report.rows.push(make_row(0, &state, scenario, 0, 0));

    for round in 1..=p.rounds {
        let candidates = scenario
            .model
            .sample_valid(p.attacks_per_round, round_seeds.next_u64())?;
        let mut added = 0usize;
        for config in &candidates {
            let truth = scenario.oracle.label(config);
            let x = state.encoder.encode(config)?;
            let predicted = state.model.predict(&x)?;
            if predicted != truth {
                state.train.push(x, truth)?;
                added += 1;
            }
        }
        if added > 0 {
            match train_svm(&state.train, train_params) {
                Ok(model) => state.model = model,
                Err(Error::DegenerateTrainingSet(reason)) => {
                    report.status = LoopStatus::Aborted { round, reason };
                    return Ok(report);
                }
                Err(e) => return Err(e),
            }
        }
        // All sampled candidates are valid by construction; the crossing
        // column is attack-specific and stays zero here.
        report
            .rows
            .push(make_row(round, &state, scenario, 0, added));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::KernelSpec;
    use crate::oracle::make_scenario;

    fn quick_train_params() -> TrainParams {
        TrainParams {
            c: 10.0,
            kernel: KernelSpec::Rbf { gamma: Some(20.0) },
            seed: 5,
            ..Default::default()
        }
    }

    fn quick_loop_params(rounds: usize, labeling: LabelingStrategy) -> LoopParams {
        LoopParams {
            rounds,
            attacks_per_round: 5,
            labeling,
            seed: 42,
            holdout_size: 100,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rounds_is_a_single_row() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let report = run_adversarial_loop(
            &scenario,
            50,
            &quick_train_params(),
            &quick_loop_params(0, LabelingStrategy::SourceLabel),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].train_size, 50);
        assert_eq!(report.status, LoopStatus::Completed);

        let report = run_random_loop(
            &scenario,
            50,
            &quick_train_params(),
            &quick_loop_params(0, LabelingStrategy::OracleLabel),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn training_set_grows_by_attacks_per_round() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let p = quick_loop_params(4, LabelingStrategy::SourceLabel);
        let report =
            run_adversarial_loop(&scenario, 50, &quick_train_params(), &p).unwrap();
        assert_eq!(report.rows.len(), 5);
        for (r, row) in report.rows.iter().enumerate() {
            assert_eq!(row.round, r);
            assert_eq!(row.train_size, 50 + r * p.attacks_per_round);
        }
    }

    #[test]
    fn source_label_never_queries_the_oracle_after_init() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let p = quick_loop_params(3, LabelingStrategy::SourceLabel);
        let report =
            run_adversarial_loop(&scenario, 50, &quick_train_params(), &p).unwrap();
        let baseline = report.rows[0].oracle_queries;
        assert_eq!(baseline, 50 + 100);
        for row in &report.rows[1..] {
            assert_eq!(row.oracle_queries, baseline);
        }
    }

    #[test]
    fn random_loop_query_arithmetic() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let p = quick_loop_params(4, LabelingStrategy::OracleLabel);
        let report = run_random_loop(&scenario, 50, &quick_train_params(), &p).unwrap();
        for (r, row) in report.rows.iter().enumerate() {
            assert_eq!(
                row.oracle_queries,
                (100 + 50 + r * p.attacks_per_round) as u64
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let scenario_a = make_scenario("band2d", 1).unwrap();
        let scenario_b = make_scenario("band2d", 1).unwrap();
        let p = quick_loop_params(3, LabelingStrategy::OracleLabel);
        let a = run_adversarial_loop(&scenario_a, 40, &quick_train_params(), &p).unwrap();
        let b = run_adversarial_loop(&scenario_b, 40, &quick_train_params(), &p).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn csv_has_the_pinned_header() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let report = run_adversarial_loop(
            &scenario,
            40,
            &quick_train_params(),
            &quick_loop_params(1, LabelingStrategy::SourceLabel),
        )
        .unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with(
            "round,train_size,disagreement,mean_abs_g,crossed,valid_adv,oracle_queries\n"
        ));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn discard_invalid_never_shrinks_below_init() {
        let scenario = make_scenario("band2d", 1).unwrap();
        let mut p = quick_loop_params(2, LabelingStrategy::SourceLabel);
        p.discard_invalid = true;
        let report =
            run_adversarial_loop(&scenario, 40, &quick_train_params(), &p).unwrap();
        // band2d has no constraints, so every projected point is valid and
        // nothing is actually discarded
        assert_eq!(report.rows.last().unwrap().train_size, 40 + 10);
        assert_eq!(report.rows.last().unwrap().valid_adv, 5);
    }
}
