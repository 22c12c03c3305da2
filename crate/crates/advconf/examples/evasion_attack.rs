//! One evasion run: pick a non-acceptable configuration, walk it along the
//! classifier gradient toward the acceptable class, and watch the decision
//! value climb until the point crosses the separating function.
//!
//! Run with: cargo run --release --example evasion_attack

use advconf::attack::{evade, AttackParams};
use advconf::classifier::{train_svm, KernelSpec, Label, LabeledDataset, TrainParams};
use advconf::encoding::build_encoder;
use advconf::oracle::make_scenario;

fn main() -> advconf::Result<()> {
    let scenario = make_scenario("band2d", 42)?;
    let encoder = build_encoder(&scenario.model);

    let configs = scenario.model.sample_valid(200, 42)?;
    let data = LabeledDataset::from_pairs(configs.iter().map(|c| {
        (
            encoder.encode(c).expect("sampled configs encode"),
            scenario.oracle.label(c),
        )
    }))?;
    let params = TrainParams {
        c: 3.0,
        kernel: KernelSpec::Rbf { gamma: Some(25.0) },
        seed: 42,
        ..Default::default()
    };
    let model = train_svm(&data, &params)?;

    // the rejected configuration the classifier rejects with the least
    // confidence: g < 0, but the boundary is within reach
    let source = configs
        .iter()
        .filter(|c| {
            scenario.oracle.label(c) == Label::NonAcceptable
                && model
                    .decision(&encoder.encode(c).expect("sampled configs encode"))
                    .expect("dims match")
                    < 0.0
        })
        .max_by(|a, b| {
            let ga = model.decision(&encoder.encode(a).unwrap()).unwrap();
            let gb = model.decision(&encoder.encode(b).unwrap()).unwrap();
            ga.partial_cmp(&gb).unwrap()
        })
        .expect("band2d samples contain non-acceptable points");
    let x0 = encoder.encode(source)?;

    let attack = AttackParams::default(); // step 0.002, 100 iterations, target +1
    let trace = evade(&model, &x0, &attack)?;
    println!(
        "attack status {:?}, {} iterates, g {:+.4} -> {:+.4}",
        trace.status,
        trace.points.len(),
        trace.start_decision(),
        trace.final_decision()
    );
    for i in (0..trace.points.len()).step_by(20) {
        let p = trace.points[i].coords();
        println!("  iter {i:>3}: ({:.4}, {:.4}) g {:+.5}", p[0], p[1], trace.decisions[i]);
    }
    println!(
        "crossed the separating function: {}",
        trace.crossed(Label::Acceptable)
    );

    // materialize the endpoint as a configuration again
    let adversarial = encoder.project(trace.final_point())?;
    let report = scenario.model.validate(&adversarial)?;
    println!(
        "adversarial configuration: x0={} x1={} (valid under the model: {})",
        adversarial.get("x0").unwrap(),
        adversarial.get("x1").unwrap(),
        report.valid
    );
    println!("oracle verdict on it: {}", scenario.oracle.label(&adversarial));
    Ok(())
}
