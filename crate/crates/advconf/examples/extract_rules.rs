//! Capitalize on the hardened classifier: distill it into a small decision
//! tree, turn the rejecting leaves into constraints, and inject them back
//! into the variability model so the forbidden regions become invalid.
//!
//! Run with: cargo run --release --example extract_rules

use advconf::classifier::{train_svm, KernelSpec, LabeledDataset, TrainParams};
use advconf::encoding::build_encoder;
use advconf::oracle::make_scenario;
use advconf::rules::{distill_tree, extract_constraints, inject_constraints};
use advconf::varmodel::serialize_model;

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
    let svm = train_svm(&data, &params)?;

    let tree = distill_tree(&svm, &encoder, &scenario.model, 2000, 4, 8)?;
    println!("distilled tree (thresholds in normalized [0,1] coordinates):");
    print!("{}", tree.to_text(&encoder));

    let constraints = extract_constraints(&tree, &encoder, &scenario.model);
    println!("\nextracted constraints (one per rejecting leaf):");
    for c in &constraints {
        println!("  {c}");
    }

    let hardened = inject_constraints(&scenario.model, &constraints)?;
    let fresh = scenario.model.sample_valid(1000, 99)?;
    let still_valid = fresh
        .iter()
        .filter(|c| hardened.validate(c).expect("total config").valid)
        .count();
    println!(
        "\nafter injection, {still_valid}/1000 previously-valid configurations remain valid"
    );

    // fidelity of the surrogate against the classifier it imitates
    let agree = fresh
        .iter()
        .filter(|c| {
            let x = encoder.encode(c).expect("sampled configs encode");
            tree.predict(x.coords()).expect("dims match") == svm.predict(&x).expect("dims match")
        })
        .count();
    println!("tree-vs-SVM agreement on the same sample: {:.1}%", agree as f64 / 10.0);

    std::fs::write("hardened_model.json", serialize_model(&hardened))?;
    println!("wrote hardened_model.json");
    Ok(())
}
