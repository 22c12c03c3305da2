//! Mapping between configurations and numeric feature vectors in \[0,1\]^d.
//!
//! Booleans map to one 0/1 coordinate, a categorical option with n choices
//! expands to n one-hot coordinates, and numeric options are min-max scaled
//! to \[0,1\]. `project` is the inverse used to materialize a configuration
//! from a point that an attack moved continuously: booleans threshold at
//! 0.5, one-hot groups take the argmax (ties to the lowest declared index),
//! and numeric coordinates are clamped before denormalization.

use crate::error::{Error, Result};
use crate::varmodel::{Configuration, OptionKind, Value, VariabilityModel};

/// One coordinate of the feature layout.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Boolean {
        option: String,
    },
    OneHot {
        option: String,
        choice: String,
    },
    Numeric {
        option: String,
        min: f64,
        max: f64,
    },
}

impl Slot {
    /// Short human-readable name, used in tree exports.
    pub fn name(&self) -> String {
        match self {
            Slot::Boolean { option } | Slot::Numeric { option, .. } => option.clone(),
            Slot::OneHot { option, choice } => format!("{option}={choice}"),
        }
    }
}

/// A point in the feature space \[0,1\]^d.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    coords: Vec<f64>,
}

impl FeatureVector {
    pub fn new(coords: Vec<f64>) -> Self {
        FeatureVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(coords: Vec<f64>) -> Self {
        FeatureVector::new(coords)
    }
}

/// Deterministic layout of a model's options onto feature coordinates:
/// options in model order, choices in declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    slots: Vec<Slot>,
}

/// Build the encoder for a model. The layout is a pure function of the
/// model, so repeated calls agree.
pub fn build_encoder(model: &VariabilityModel) -> Encoder {
    let mut slots = Vec::new();
    for opt in &model.options {
        match &opt.kind {
            OptionKind::Boolean => slots.push(Slot::Boolean {
                option: opt.name.clone(),
            }),
            OptionKind::Categorical { choices } => {
                for choice in choices {
                    slots.push(Slot::OneHot {
                        option: opt.name.clone(),
                        choice: choice.clone(),
                    });
                }
            }
            OptionKind::Numeric { min, max } => slots.push(Slot::Numeric {
                option: opt.name.clone(),
                min: *min,
                max: *max,
            }),
        }
    }
    Encoder { slots }
}

impl Encoder {
    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> &Slot {
        &self.slots[index]
    }

    /// Encode a total configuration into \[0,1\]^d.
    pub fn encode(&self, config: &Configuration) -> Result<FeatureVector> {
        let mut coords = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let coord = match slot {
                Slot::Boolean { option } => match config.get(option) {
                    Some(Value::Bool(b)) => {
                        if *b {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    other => {
                        return Err(Error::InvalidConfiguration(format!(
                            "option `{option}` expected boolean, found {other:?}"
                        )))
                    }
                },
                Slot::OneHot { option, choice } => match config.get(option) {
                    Some(Value::Choice(c)) => {
                        if c == choice {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    other => {
                        return Err(Error::InvalidConfiguration(format!(
                            "option `{option}` expected choice, found {other:?}"
                        )))
                    }
                },
                Slot::Numeric { option, min, max } => match config.get(option) {
                    Some(Value::Real(v)) => {
                        if !v.is_finite() || v < min || v > max {
                            return Err(Error::OutOfDomain(format!(
                                "{v} outside [{min}, {max}] for `{option}`"
                            )));
                        }
                        (v - min) / (max - min)
                    }
                    other => {
                        return Err(Error::InvalidConfiguration(format!(
                            "option `{option}` expected number, found {other:?}"
                        )))
                    }
                },
            };
            coords.push(coord);
        }
        // Every encoded categorical is exactly-one-hot by construction if
        // and only if its value was one of the declared choices.
        let mut i = 0;
        while i < self.slots.len() {
            if let Slot::OneHot { option, .. } = &self.slots[i] {
                let mut ones = 0;
                let mut j = i;
                while j < self.slots.len() {
                    match &self.slots[j] {
                        Slot::OneHot { option: o, .. } if o == option => {
                            if coords[j] == 1.0 {
                                ones += 1;
                            }
                            j += 1;
                        }
                        _ => break,
                    }
                }
                if ones != 1 {
                    return Err(Error::OutOfDomain(format!(
                        "value of `{option}` is not one of its declared choices"
                    )));
                }
                i = j;
            } else {
                i += 1;
            }
        }
        Ok(FeatureVector::new(coords))
    }

    /// Project an arbitrary d-dimensional point back to a configuration.
    pub fn project(&self, x: &FeatureVector) -> Result<Configuration> {
        let coords = x.coords();
        if coords.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                expected: self.slots.len(),
                got: coords.len(),
            });
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "non-finite coordinate {bad}"
            )));
        }
        let mut config = Configuration::default();
        let mut i = 0;
        while i < self.slots.len() {
            match &self.slots[i] {
                Slot::Boolean { option } => {
                    config.set(option.clone(), Value::Bool(coords[i] >= 0.5));
                    i += 1;
                }
                Slot::Numeric { option, min, max } => {
                    let t = coords[i].clamp(0.0, 1.0);
                    config.set(option.clone(), Value::Real(min + t * (max - min)));
                    i += 1;
                }
                Slot::OneHot { option, .. } => {
                    // Scan the contiguous group; strict `>` keeps the lowest
                    // declared index on ties.
                    let group_option = option.clone();
                    let mut best = i;
                    let mut j = i;
                    while j < self.slots.len() {
                        match &self.slots[j] {
                            Slot::OneHot { option: o, .. } if *o == group_option => {
                                if coords[j] > coords[best] {
                                    best = j;
                                }
                                j += 1;
                            }
                            _ => break,
                        }
                    }
                    let choice = match &self.slots[best] {
                        Slot::OneHot { choice, .. } => choice.clone(),
                        _ => unreachable!(),
                    };
                    config.set(group_option, Value::Choice(choice));
                    i = j;
                }
            }
        }
        Ok(config)
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
                OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
                OptionDef::numeric("noise", 0.0, 10.0),
            ],
            vec![],
        )
        .unwrap()
    }

    fn config(fog: bool, weather: &str, noise: f64) -> Configuration {
        Configuration::from_pairs([
            ("fog".into(), Value::Bool(fog)),
            ("weather".into(), Value::Choice(weather.into())),
            ("noise".into(), Value::Real(noise)),
        ])
    }

    #[test]
    fn layout_dimension_adds_up() {
        let enc = build_encoder(&model());
        assert_eq!(enc.dim(), 1 + 3 + 1);
        let one_opt = VariabilityModel::new(vec![OptionDef::boolean("fog")], vec![]).unwrap();
        assert_eq!(build_encoder(&one_opt).dim(), 1);
        let four = VariabilityModel::new(
            vec![OptionDef::categorical("c", ["a", "b", "cc", "d"])],
            vec![],
        )
        .unwrap();
        assert_eq!(build_encoder(&four).dim(), 4);
    }

    #[test]
    fn encodes_per_slot_rules() {
        let enc = build_encoder(&model());
        let x = enc.encode(&config(true, "rain", 6.0)).unwrap();
        assert_eq!(x.coords(), &[1.0, 0.0, 1.0, 0.0, 0.6]);
        // midpoint normalization on a shifted domain
        let m = VariabilityModel::new(vec![OptionDef::numeric("noise", 2.0, 10.0)], vec![])
            .unwrap();
        let enc = build_encoder(&m);
        let x = enc
            .encode(&Configuration::from_pairs([(
                "noise".into(),
                Value::Real(6.0),
            )]))
            .unwrap();
        assert_eq!(x.coords(), &[0.5]);
    }

    #[test]
    fn encode_rejects_out_of_domain() {
        let enc = build_encoder(&model());
        assert!(enc.encode(&config(true, "rain", 11.0)).is_err());
        assert!(enc.encode(&config(true, "hail", 1.0)).is_err());
    }

    #[test]
    fn project_argmax_and_clamp() {
        let enc = build_encoder(&model());
        let c = enc
            .project(&FeatureVector::new(vec![0.2, 0.2, 0.7, 0.6, 1.3]))
            .unwrap();
        assert_eq!(c.get("fog"), Some(&Value::Bool(false)));
        assert_eq!(c.get("weather"), Some(&Value::Choice("rain".into())));
        assert_eq!(c.get("noise"), Some(&Value::Real(10.0)));
        // tie goes to the lowest declared index
        let c = enc
            .project(&FeatureVector::new(vec![0.9, 0.5, 0.5, 0.1, 0.0]))
            .unwrap();
        assert_eq!(c.get("weather"), Some(&Value::Choice("sun".into())));
    }

    #[test]
    fn project_rejects_bad_input() {
        let enc = build_encoder(&model());
        assert!(enc.project(&FeatureVector::new(vec![0.0; 3])).is_err());
        assert!(enc
            .project(&FeatureVector::new(vec![0.0, 1.0, 0.0, 0.0, f64::NAN]))
            .is_err());
    }

    #[test]
    fn round_trip_on_sampled_configs() {
        let m = model();
        let enc = build_encoder(&m);
        for c in m.sample_valid(200, 5).unwrap() {
            let x = enc.encode(&c).unwrap();
            assert!(x.coords().iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(enc.project(&x).unwrap(), c);
        }
    }

    #[test]
    fn project_encode_is_idempotent() {
        use proptest::prelude::*;
        let m = model();
        let enc = build_encoder(&m);
        proptest!(|(coords in proptest::collection::vec(0.0f64..=1.0, 5))| {
            let x = FeatureVector::new(coords);
            let c1 = enc.project(&x).unwrap();
            let y = enc.encode(&c1).unwrap();
            let c2 = enc.project(&y).unwrap();
            let z = enc.encode(&c2).unwrap();
            prop_assert_eq!(&c1, &c2);
            prop_assert_eq!(y, z);
        });
    }
}
