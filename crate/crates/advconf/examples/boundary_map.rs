//! Export the classifier's decision surface on a grid, plus the oracle's
//! true labels, so an external plot can show where the two diverge.
//!
//! Run with: cargo run --release --example boundary_map
//! Then plot boundary.csv (x0, x1, g) however you like.

use advconf::classifier::{train_svm, KernelSpec, Label, LabeledDataset, TrainParams};
use advconf::cli::boundary_map;
use advconf::encoding::build_encoder;
use advconf::oracle::make_scenario;
use advconf::varmodel::{Configuration, Value};

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

    let csv = boundary_map(&model, 101)?;
    std::fs::write("boundary.csv", &csv)?;
    println!("wrote boundary.csv ({} grid rows)", csv.lines().count() - 1);

    // coarse ASCII view: classifier sign vs oracle label on a 40x20 grid
    println!("# = classifier and oracle agree acceptable, . = agree non-acceptable");
    println!("X = classifier acceptable but oracle rejects, o = the reverse");
    for row in (0..20).rev() {
        let x1 = row as f64 / 19.0;
        let mut line = String::new();
        for col in 0..40 {
            let x0 = col as f64 / 39.0;
            let g = model.decision(&advconf::encoding::FeatureVector::new(vec![x0, x1]))?;
            let predicted = Label::from_decision(g);
            let config = Configuration::from_pairs([
                ("x0".into(), Value::Real(x0)),
                ("x1".into(), Value::Real(x1)),
            ]);
            let truth = scenario.oracle.label(&config);
            line.push(match (predicted, truth) {
                (Label::Acceptable, Label::Acceptable) => '#',
                (Label::NonAcceptable, Label::NonAcceptable) => '.',
                (Label::Acceptable, Label::NonAcceptable) => 'X',
                (Label::NonAcceptable, Label::Acceptable) => 'o',
            });
        }
        println!("{line}");
    }
    Ok(())
}
