//! Oracles as compositions of simpler checks: each sub-procedure judges
//! one visual property, the composite accepts only when all of them do,
//! and a failed verdict names the checks that rejected.
//!
//! Run with: cargo run --release --example composite_oracle

use advconf::classifier::Label;
use advconf::oracle::{CompositeOracle, Oracle};
use advconf::varmodel::{parse_model, Value};

fn main() -> advconf::Result<()> {
    let model = parse_model(
        r#"{
  "options": [
    {"name": "noise", "kind": "numeric", "min": 0.0, "max": 8.0},
    {"name": "blur", "kind": "numeric", "min": 0.0, "max": 1.0},
    {"name": "night", "kind": "boolean"}
  ],
  "constraints": []
}"#,
    )?;

    let noise_check = Oracle::new("noise-level", |c| match c.get("noise") {
        Some(Value::Real(v)) if *v <= 6.0 => Label::Acceptable,
        _ => Label::NonAcceptable,
    });
    let blur_check = Oracle::new("blur-level", |c| match c.get("blur") {
        Some(Value::Real(v)) if *v <= 0.7 => Label::Acceptable,
        _ => Label::NonAcceptable,
    });
    // darkness amplifies blur: the combined check is stricter at night
    let contrast_check = Oracle::new("night-contrast", |c| {
        match (c.get("night"), c.get("blur")) {
            (Some(Value::Bool(true)), Some(Value::Real(b))) if *b > 0.4 => Label::NonAcceptable,
            _ => Label::Acceptable,
        }
    });

    let oracle = CompositeOracle::new("video-quality")
        .with_check("noise", noise_check)
        .with_check("blur", blur_check)
        .with_check("contrast", contrast_check);

    for config in model.sample_valid(8, 21)? {
        let verdict = oracle.label_detailed(&config);
        println!(
            "noise={:<20} blur={:<20} night={:<5} -> {} {}",
            config.get("noise").unwrap().to_string(),
            config.get("blur").unwrap().to_string(),
            config.get("night").unwrap().to_string(),
            verdict.label,
            if verdict.failed.is_empty() {
                String::new()
            } else {
                format!("(failed: {})", verdict.failed.join(", "))
            }
        );
    }
    println!("composite queries: {}", oracle.queries());
    Ok(())
}
