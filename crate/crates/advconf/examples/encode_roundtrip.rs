//! Feature encoding: how options map onto [0,1]^d coordinates, and how
//! arbitrary points project back to configurations (the step that turns an
//! attack endpoint into something a generator could actually build).
//!
//! Run with: cargo run --release --example encode_roundtrip

use advconf::encoding::{build_encoder, FeatureVector};
use advconf::varmodel::parse_model;

fn main() -> advconf::Result<()> {
    let model = parse_model(
        r#"{
  "options": [
    {"name": "fog", "kind": "boolean"},
    {"name": "weather", "kind": "categorical", "choices": ["sun", "rain", "storm"]},
    {"name": "noise", "kind": "numeric", "min": 0.0, "max": 8.0}
  ],
  "constraints": []
}"#,
    )?;
    let encoder = build_encoder(&model);
    println!("layout ({} slots):", encoder.dim());
    for (i, slot) in encoder.slots().iter().enumerate() {
        println!("  slot {i}: {}", slot.name());
    }

    let config = model.sample_valid(1, 3)?.remove(0);
    let x = encoder.encode(&config)?;
    println!("encoded {:?}", x.coords());
    assert_eq!(encoder.project(&x)?, config);
    println!("project(encode(c)) == c");

    // A continuous point, as produced mid-attack: booleans threshold at
    // 0.5, one-hot groups take their argmax, numerics clamp then rescale.
    let moved = FeatureVector::new(vec![0.71, 0.2, 0.65, 0.55, 1.08]);
    let snapped = encoder.project(&moved)?;
    for opt in &model.options {
        println!("snapped {} = {}", opt.name, snapped.get(&opt.name).unwrap());
    }
    Ok(())
}
