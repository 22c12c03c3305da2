//! Train the SVM on oracle-labeled samples of the band2d scenario,
//! evaluate it against fresh data, and round-trip it through JSON.
//!
//! Run with: cargo run --release --example train_classifier

use advconf::classifier::{
    parse_svm, serialize_svm, train_svm, KernelSpec, LabeledDataset, TrainParams,
};
use advconf::encoding::build_encoder;
use advconf::oracle::make_scenario;

fn main() -> advconf::Result<()> {
    let scenario = make_scenario("band2d", 42)?;
    let encoder = build_encoder(&scenario.model);

    let labeled = |n: usize, seed: u64| -> advconf::Result<LabeledDataset> {
        let configs = scenario.model.sample_valid(n, seed)?;
        LabeledDataset::from_pairs(configs.iter().map(|c| {
            (
                encoder.encode(c).expect("sampled configs encode"),
                scenario.oracle.label(c),
            )
        }))
    };

    let train = labeled(200, 42)?;
    let test = labeled(1000, 1000)?;

    let params = TrainParams {
        c: 3.0,
        kernel: KernelSpec::Rbf { gamma: Some(25.0) },
        seed: 42,
        ..Default::default()
    };
    let model = train_svm(&train, &params)?;
    println!(
        "trained rbf(gamma=25) C=3 on 200 points: {} support vectors, bias {:.4}",
        model.num_support_vectors(),
        model.bias()
    );

    let metrics = model.evaluate(&test)?;
    println!(
        "test error {:.3} (tp {} fp {} tn {} fn {}), mean |g| {:.3}",
        metrics.error_rate,
        metrics.true_positive,
        metrics.false_positive,
        metrics.true_negative,
        metrics.false_negative,
        metrics.mean_abs_decision
    );

    let json = serialize_svm(&model);
    let reloaded = parse_svm(&json)?;
    assert_eq!(reloaded, model);
    println!(
        "JSON round trip is bit-exact ({} bytes, oracle queries so far: {})",
        json.len(),
        scenario.oracle.queries()
    );
    Ok(())
}
