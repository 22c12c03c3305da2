//! Configuration CSV: header row is the option names in model order, with
//! an optional trailing `label` column holding `-1`/`1`. Option names are
//! identifiers and values never contain commas, so no quoting is needed.

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::varmodel::{Configuration, OptionKind, Value, VariabilityModel};

/// Render configurations (and labels, if given) to CSV text.
pub fn write_configurations(
    model: &VariabilityModel,
    configs: &[Configuration],
    labels: Option<&[Label]>,
) -> Result<String> {
    if let Some(labels) = labels {
        if labels.len() != configs.len() {
            return Err(Error::Csv(format!(
                "{} labels for {} configurations",
                labels.len(),
                configs.len()
            )));
        }
    }
    let mut out = String::new();
    for (i, opt) in model.options.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&opt.name);
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (row, config) in configs.iter().enumerate() {
        for (i, opt) in model.options.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let value = config.get(&opt.name).ok_or_else(|| {
                Error::Csv(format!("row {row} is missing option `{}`", opt.name))
            })?;
            out.push_str(&value.to_string());
        }
        if let Some(labels) = labels {
            out.push(',');
            out.push_str(&labels[row].as_int().to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse configurations from CSV text. Returns the labels as well when the
/// header carries a `label` column.
pub fn read_configurations(
    model: &VariabilityModel,
    text: &str,
) -> Result<(Vec<Configuration>, Option<Vec<Label>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv("empty document".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let expected: Vec<&str> = model.options.iter().map(|o| o.name.as_str()).collect();
    let labeled = match columns.len().checked_sub(expected.len()) {
        Some(0) => false,
        Some(1) if columns.last() == Some(&"label") => true,
        _ => {
            return Err(Error::Csv(format!(
                "header does not match model options: `{header}`"
            )))
        }
    };
    if columns[..expected.len()] != expected[..] {
        return Err(Error::Csv(format!(
            "header columns must be the model options in order: `{header}`"
        )));
    }

    let mut configs = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Csv(format!(
                "line {}: expected {} fields, got {}",
                lineno + 1,
                columns.len(),
                fields.len()
            )));
        }
        let mut config = Configuration::default();
        for (opt, field) in model.options.iter().zip(&fields) {
            let value = parse_value(&opt.kind, field).map_err(|e| {
                Error::Csv(format!("line {}, option `{}`: {e}", lineno + 1, opt.name))
            })?;
            config.set(opt.name.clone(), value);
        }
        if labeled {
            let raw = fields[fields.len() - 1];
            let label = match raw {
                "1" | "+1" => Label::Acceptable,
                "-1" => Label::NonAcceptable,
                other => {
                    return Err(Error::Csv(format!(
                        "line {}: bad label `{other}`",
                        lineno + 1
                    )))
                }
            };
            labels.push(label);
        }
        configs.push(config);
    }
    Ok((configs, labeled.then_some(labels)))
}

fn parse_value(kind: &OptionKind, field: &str) -> Result<Value> {
    match kind {
        OptionKind::Boolean => match field {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            other => Err(Error::Csv(format!("bad boolean `{other}`"))),
        },
        OptionKind::Categorical { .. } => Ok(Value::Choice(field.to_string())),
        OptionKind::Numeric { .. } => field
            .parse::<f64>()
            .map(Value::Real)
            .map_err(|_| Error::Csv(format!("bad number `{field}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varmodel::OptionDef;

    fn model() -> VariabilityModel {
        VariabilityModel::new(
            vec![
                OptionDef::boolean("fog"),
                OptionDef::categorical("weather", ["sun", "rain"]),
                OptionDef::numeric("noise", 0.0, 10.0),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn round_trips_values_bit_exactly() {
        let m = model();
        let configs = m.sample_valid(50, 9).unwrap();
        let text = write_configurations(&m, &configs, None).unwrap();
        let (parsed, labels) = read_configurations(&m, &text).unwrap();
        assert_eq!(parsed, configs);
        assert!(labels.is_none());
    }

    #[test]
    fn round_trips_labels() {
        let m = model();
        let configs = m.sample_valid(4, 2).unwrap();
        let labels = vec![
            Label::Acceptable,
            Label::NonAcceptable,
            Label::NonAcceptable,
            Label::Acceptable,
        ];
        let text = write_configurations(&m, &configs, Some(&labels)).unwrap();
        assert!(text.starts_with("fog,weather,noise,label\n"));
        let (parsed, parsed_labels) = read_configurations(&m, &text).unwrap();
        assert_eq!(parsed, configs);
        assert_eq!(parsed_labels.unwrap(), labels);
    }

    #[test]
    fn rejects_header_mismatch_and_bad_fields() {
        let m = model();
        assert!(read_configurations(&m, "fog,noise,weather\n").is_err());
        assert!(read_configurations(&m, "fog,weather,noise\ntrue,sun\n").is_err());
        assert!(read_configurations(&m, "fog,weather,noise\nmaybe,sun,1.0\n").is_err());
        assert!(
            read_configurations(&m, "fog,weather,noise,label\ntrue,sun,1.0,2\n").is_err()
        );
    }
}
