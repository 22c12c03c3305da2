//! Variability models: options with domains, cross-tree constraints,
//! configuration validity, and seeded rejection sampling.
//!
//! A model is the problem-space description of a configurable system. A
//! configuration assigns a value to every option; it is valid when each
//! value lies in its option's domain and every constraint evaluates true.

mod constraint;
pub mod csv;

pub use constraint::{parse_constraint, Atom, CmpOp, Constraint, Expr};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain of a single configuration option.
#[derive(Debug, Clone, PartialEq)]
pub enum OptionKind {
    Boolean,
    Categorical { choices: Vec<String> },
    Numeric { min: f64, max: f64 },
}

/// One configuration option: a name plus its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionDef {
    pub name: String,
    pub kind: OptionKind,
}

impl OptionDef {
    pub fn boolean(name: impl Into<String>) -> Self {
        OptionDef {
            name: name.into(),
            kind: OptionKind::Boolean,
        }
    }

    pub fn categorical<I, S>(name: impl Into<String>, choices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        OptionDef {
            name: name.into(),
            kind: OptionKind::Categorical {
                choices: choices.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn numeric(name: impl Into<String>, min: f64, max: f64) -> Self {
        OptionDef {
            name: name.into(),
            kind: OptionKind::Numeric { min, max },
        }
    }
}

/// A concrete value assigned to an option.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Choice(String),
    Real(f64),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Choice(c) => write!(f, "{c}"),
            Value::Real(v) => write!(f, "{v:?}"),
        }
    }
}

/// Total assignment of a value to every option of a model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Configuration {
    values: BTreeMap<String, Value>,
}

impl Configuration {
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, Value)>,
    {
        Configuration {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, option: &str) -> Option<&Value> {
        self.values.get(option)
    }

    pub fn set(&mut self, option: impl Into<String>, value: Value) {
        self.values.insert(option.into(), value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.values.iter()
    }
}

/// The problem space: options plus cross-tree constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct VariabilityModel {
    pub options: Vec<OptionDef>,
    pub constraints: Vec<Constraint>,
}

/// Outcome of validating one configuration against a model.
///
/// Domain violations (a value outside its option's declared domain) are
/// reported separately from violated constraints, which are reported by
/// index into `model.constraints`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<usize>,
    pub domain_violations: Vec<String>,
}

impl VariabilityModel {
    /// Build a model, enforcing all structural invariants.
    pub fn new(options: Vec<OptionDef>, constraints: Vec<Constraint>) -> Result<Self> {
        if options.is_empty() {
            return Err(Error::InvalidModel("model has no options".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for opt in &options {
            if opt.name.is_empty() {
                return Err(Error::InvalidModel("empty option name".into()));
            }
            if !seen.insert(opt.name.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate option name `{}`",
                    opt.name
                )));
            }
            match &opt.kind {
                OptionKind::Boolean => {}
                OptionKind::Categorical { choices } => {
                    if choices.len() < 2 {
                        return Err(Error::InvalidModel(format!(
                            "categorical option `{}` needs at least 2 choices",
                            opt.name
                        )));
                    }
                    let mut cs = std::collections::BTreeSet::new();
                    for c in choices {
                        if !cs.insert(c.as_str()) {
                            return Err(Error::InvalidModel(format!(
                                "duplicate choice `{c}` in option `{}`",
                                opt.name
                            )));
                        }
                    }
                }
                OptionKind::Numeric { min, max } => {
                    if !min.is_finite() || !max.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "non-finite bounds on numeric option `{}`",
                            opt.name
                        )));
                    }
                    if min >= max {
                        return Err(Error::InvalidModel(format!(
                            "empty numeric domain on option `{}` (min {min} >= max {max})",
                            opt.name
                        )));
                    }
                }
            }
        }
        for c in &constraints {
            c.check_against(&options)?;
        }
        Ok(VariabilityModel {
            options,
            constraints,
        })
    }

    pub fn option(&self, name: &str) -> Option<&OptionDef> {
        self.options.iter().find(|o| o.name == name)
    }

    /// Check that `config` assigns every option, each value is in domain,
    /// and report which constraints it violates.
    pub fn validate(&self, config: &Configuration) -> Result<ValidityReport> {
        if config.len() != self.options.len() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} assignments, got {}",
                self.options.len(),
                config.len()
            )));
        }
        let mut domain_violations = Vec::new();
        for opt in &self.options {
            let value = config.get(&opt.name).ok_or_else(|| {
                Error::InvalidConfiguration(format!("missing option `{}`", opt.name))
            })?;
            match (&opt.kind, value) {
                (OptionKind::Boolean, Value::Bool(_)) => {}
                (OptionKind::Categorical { choices }, Value::Choice(c)) => {
                    if !choices.iter().any(|x| x == c) {
                        domain_violations
                            .push(format!("`{c}` is not a choice of `{}`", opt.name));
                    }
                }
                (OptionKind::Numeric { min, max }, Value::Real(v)) => {
                    if !v.is_finite() || v < min || v > max {
                        domain_violations.push(format!(
                            "{v} outside [{min}, {max}] for `{}`",
                            opt.name
                        ));
                    }
                }
                _ => {
                    domain_violations.push(format!(
                        "value kind does not match option `{}`",
                        opt.name
                    ));
                }
            }
        }
        let violations: Vec<usize> = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.eval(config))
            .map(|(i, _)| i)
            .collect();
        Ok(ValidityReport {
            valid: violations.is_empty() && domain_violations.is_empty(),
            violations,
            domain_violations,
        })
    }

    /// Draw one configuration uniformly from the unconstrained domain.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Configuration {
        let mut config = Configuration::default();
        for opt in &self.options {
            let value = match &opt.kind {
                OptionKind::Boolean => Value::Bool(rng.random_bool(0.5)),
                OptionKind::Categorical { choices } => {
                    Value::Choice(choices[rng.random_range(0..choices.len())].clone())
                }
                OptionKind::Numeric { min, max } => {
                    Value::Real(rng.random_range(*min..=*max))
                }
            };
            config.set(opt.name.clone(), value);
        }
        config
    }

    /// Rejection-sample `n` valid configurations, deterministically for a
    /// fixed seed. Fails once `1000 * n` candidate draws have been spent,
    /// which signals an over-constrained model rather than looping forever.
    pub fn sample_valid(&self, n: usize, seed: u64) -> Result<Vec<Configuration>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = 1000u64.saturating_mul(n as u64);
        let mut attempts = 0u64;
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if attempts >= budget {
                return Err(Error::SamplingBudget {
                    attempts,
                    accepted: out.len(),
                    requested: n,
                });
            }
            attempts += 1;
            let candidate = self.draw(&mut rng);
            if self.constraints.iter().all(|c| c.eval(&candidate)) {
                out.push(candidate);
            }
        }
        Ok(out)
    }
}

// --- JSON schema ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawOption {
    name: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    choices: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    options: Vec<RawOption>,
    constraints: Vec<String>,
}

/// Parse a model from its JSON document form.
pub fn parse_model(text: &str) -> Result<VariabilityModel> {
    let raw: RawModel = serde_json::from_str(text)?;
    let mut options = Vec::with_capacity(raw.options.len());
    for o in raw.options {
        let kind = match o.kind.as_str() {
            "boolean" => OptionKind::Boolean,
            "categorical" => OptionKind::Categorical {
                choices: o.choices.ok_or_else(|| {
                    Error::InvalidModel(format!("option `{}` is missing choices", o.name))
                })?,
            },
            "numeric" => OptionKind::Numeric {
                min: o.min.ok_or_else(|| {
                    Error::InvalidModel(format!("option `{}` is missing min", o.name))
                })?,
                max: o.max.ok_or_else(|| {
                    Error::InvalidModel(format!("option `{}` is missing max", o.name))
                })?,
            },
            other => {
                return Err(Error::InvalidModel(format!(
                    "unknown option kind `{other}`"
                )))
            }
        };
        options.push(OptionDef { name: o.name, kind });
    }
    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for c in &raw.constraints {
        constraints.push(parse_constraint(c, &options)?);
    }
    VariabilityModel::new(options, constraints)
}

/// Serialize a model to its canonical JSON document form. The output is a
/// fixed point: `serialize(parse(serialize(m))) == serialize(m)` bytewise.
pub fn serialize_model(model: &VariabilityModel) -> String {
    let raw = RawModel {
        options: model
            .options
            .iter()
            .map(|o| match &o.kind {
                OptionKind::Boolean => RawOption {
                    name: o.name.clone(),
                    kind: "boolean".into(),
                    choices: None,
                    min: None,
                    max: None,
                },
                OptionKind::Categorical { choices } => RawOption {
                    name: o.name.clone(),
                    kind: "categorical".into(),
                    choices: Some(choices.clone()),
                    min: None,
                    max: None,
                },
                OptionKind::Numeric { min, max } => RawOption {
                    name: o.name.clone(),
                    kind: "numeric".into(),
                    choices: None,
                    min: Some(*min),
                    max: Some(*max),
                },
            })
            .collect(),
        constraints: model.constraints.iter().map(|c| c.to_string()).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fog_blur_model() -> VariabilityModel {
        let options = vec![OptionDef::boolean("fog"), OptionDef::boolean("blur")];
        let c = parse_constraint("fog == true => blur == false", &options).unwrap();
        VariabilityModel::new(options, vec![c]).unwrap()
    }

    #[test]
    fn parses_minimal_document() {
        let m = parse_model(r#"{"options":[{"name":"fog","kind":"boolean"}],"constraints":[]}"#)
            .unwrap();
        assert_eq!(m.options.len(), 1);
        assert!(m.constraints.is_empty());
    }

    #[test]
    fn rejects_inverted_numeric_bounds() {
        let err = parse_model(
            r#"{"options":[{"name":"n","kind":"numeric","min":1.0,"max":0.0}],"constraints":[]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("empty numeric domain"), "{err}");
    }

    #[test]
    fn rejects_unknown_kind_and_bad_constraints() {
        assert!(parse_model(
            r#"{"options":[{"name":"x","kind":"stringy"}],"constraints":[]}"#
        )
        .is_err());
        assert!(parse_model(
            r#"{"options":[{"name":"fog","kind":"boolean"}],"constraints":["ghost == true"]}"#
        )
        .is_err());
        assert!(parse_model(
            r#"{"options":[{"name":"fog","kind":"boolean"}],"constraints":["fog < 0.5"]}"#
        )
        .is_err());
        assert!(parse_model("not json at all").is_err());
    }

    #[test]
    fn validate_reports_constraint_indices() {
        let m = fog_blur_model();
        let bad = Configuration::from_pairs([
            ("fog".into(), Value::Bool(true)),
            ("blur".into(), Value::Bool(true)),
        ]);
        let report = m.validate(&bad).unwrap();
        assert!(!report.valid);
        assert_eq!(report.violations, vec![0]);
        assert!(report.domain_violations.is_empty());

        let ok = Configuration::from_pairs([
            ("fog".into(), Value::Bool(false)),
            ("blur".into(), Value::Bool(true)),
        ]);
        let report = m.validate(&ok).unwrap();
        assert!(report.valid);
    }

    #[test]
    fn validate_reports_domain_violations_distinctly() {
        let options = vec![OptionDef::numeric("noise", 0.0, 1.0)];
        let m = VariabilityModel::new(options, vec![]).unwrap();
        let out = Configuration::from_pairs([("noise".into(), Value::Real(2.0))]);
        let report = m.validate(&out).unwrap();
        assert!(!report.valid);
        assert!(report.violations.is_empty());
        assert_eq!(report.domain_violations.len(), 1);
    }

    #[test]
    fn validate_rejects_partial_configs() {
        let m = fog_blur_model();
        let partial = Configuration::from_pairs([("fog".into(), Value::Bool(true))]);
        assert!(m.validate(&partial).is_err());
        let mut extra = partial.clone();
        extra.set("blur", Value::Bool(false));
        extra.set("ghost", Value::Bool(false));
        assert!(m.validate(&extra).is_err());
    }

    #[test]
    fn sample_zero_is_empty() {
        let m = fog_blur_model();
        assert!(m.sample_valid(0, 1).unwrap().is_empty());
    }

    #[test]
    fn sample_contradiction_exhausts_budget() {
        let options = vec![OptionDef::boolean("fog")];
        let c1 = parse_constraint("fog == true", &options).unwrap();
        let c2 = parse_constraint("fog == false", &options).unwrap();
        let m = VariabilityModel::new(options, vec![c1, c2]).unwrap();
        match m.sample_valid(1, 3) {
            Err(Error::SamplingBudget { attempts, .. }) => assert_eq!(attempts, 1000),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let options = vec![
            OptionDef::boolean("fog"),
            OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
            OptionDef::numeric("noise", 0.0, 10.0),
        ];
        let m = VariabilityModel::new(options, vec![]).unwrap();
        let a = m.sample_valid(100, 7).unwrap();
        let b = m.sample_valid(100, 7).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        for c in &a {
            assert!(m.validate(c).unwrap().valid);
        }
        let c = m.sample_valid(100, 8).unwrap();
        assert_ne!(a, c);
    }

    // Every configuration the sampler returns must validate, whatever the
    // seed.
    #[test]
    fn sampled_configs_respect_constraints() {
        use proptest::prelude::*;
        let options = vec![
            OptionDef::boolean("fog"),
            OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
            OptionDef::numeric("noise", 0.0, 10.0),
        ];
        let c1 = parse_constraint("fog == true => noise <= 2.0", &options).unwrap();
        let c2 = parse_constraint("!(weather == fog3 && fog == false)", &options).unwrap();
        let m = VariabilityModel::new(options, vec![c1, c2]).unwrap();
        proptest!(|(seed: u64)| {
            for config in m.sample_valid(20, seed).unwrap() {
                prop_assert!(m.validate(&config).unwrap().valid);
            }
        });
    }

    #[test]
    fn model_json_round_trip_is_semantic_identity_and_byte_stable() {
        let options = vec![
            OptionDef::boolean("fog"),
            OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
            OptionDef::numeric("noise", 0.5, 8.25),
        ];
        let c = parse_constraint("fog == true => noise < 4.125", &options).unwrap();
        let m = VariabilityModel::new(options, vec![c]).unwrap();
        let s1 = serialize_model(&m);
        let parsed = parse_model(&s1).unwrap();
        assert_eq!(m, parsed);
        let s2 = serialize_model(&parsed);
        assert_eq!(s1, s2);
    }
}
