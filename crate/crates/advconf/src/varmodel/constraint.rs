//! Boolean constraint expressions over configuration options.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! expr  := or ("=>" expr)?          implication, right-associative
//! or    := and ("||" and)*
//! and   := unary ("&&" unary)*
//! unary := "!" unary | "(" expr ")" | atom
//! atom  := name ("==" | "<" | "<=" | ">" | ">=") literal
//! ```
//!
//! `==` applies to boolean and categorical options, the comparison operators
//! to numeric options. Literal types are resolved against the option's kind,
//! so a categorical choice may be named anything, including `true`.

use std::fmt;

use crate::error::{Error, Result};
use crate::varmodel::{Configuration, OptionDef, OptionKind, Value};

/// Comparison operator for numeric atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// A single test against one option.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `option == literal` for boolean and categorical options.
    Eq { option: String, value: Value },
    /// `option <op> number` for numeric options.
    Cmp {
        option: String,
        op: CmpOp,
        value: f64,
    },
}

/// Constraint expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(Atom),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
}

/// A cross-tree constraint attached to a variability model.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: Expr,
}

impl Constraint {
    pub fn new(expr: Expr) -> Self {
        Constraint { expr }
    }

    /// Evaluate against a total configuration. Missing options evaluate to
    /// an error upstream; here they are treated as a violated atom, which
    /// never happens for configurations validated against the same model.
    pub fn eval(&self, config: &Configuration) -> bool {
        eval_expr(&self.expr, config)
    }

    /// Check that every referenced option exists and every atom matches its
    /// option's kind.
    pub fn check_against(&self, options: &[OptionDef]) -> Result<()> {
        check_expr(&self.expr, options)
    }
}

fn eval_expr(expr: &Expr, config: &Configuration) -> bool {
    match expr {
        Expr::Atom(a) => eval_atom(a, config),
        Expr::Not(e) => !eval_expr(e, config),
        Expr::And(a, b) => eval_expr(a, config) && eval_expr(b, config),
        Expr::Or(a, b) => eval_expr(a, config) || eval_expr(b, config),
        Expr::Implies(a, b) => !eval_expr(a, config) || eval_expr(b, config),
    }
}

fn eval_atom(atom: &Atom, config: &Configuration) -> bool {
    match atom {
        Atom::Eq { option, value } => config.get(option) == Some(value),
        Atom::Cmp { option, op, value } => match config.get(option) {
            Some(Value::Real(v)) => op.eval(*v, *value),
            _ => false,
        },
    }
}

fn check_expr(expr: &Expr, options: &[OptionDef]) -> Result<()> {
    match expr {
        Expr::Atom(a) => check_atom(a, options),
        Expr::Not(e) => check_expr(e, options),
        Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) => {
            check_expr(a, options)?;
            check_expr(b, options)
        }
    }
}

fn check_atom(atom: &Atom, options: &[OptionDef]) -> Result<()> {
    let name = match atom {
        Atom::Eq { option, .. } | Atom::Cmp { option, .. } => option,
    };
    let def = options
        .iter()
        .find(|o| &o.name == name)
        .ok_or_else(|| Error::ConstraintParse(format!("unknown option `{name}`")))?;
    match (atom, &def.kind) {
        (Atom::Eq { value: Value::Bool(_), .. }, OptionKind::Boolean) => Ok(()),
        (Atom::Eq { value: Value::Choice(c), .. }, OptionKind::Categorical { choices }) => {
            if choices.iter().any(|x| x == c) {
                Ok(())
            } else {
                Err(Error::ConstraintParse(format!(
                    "`{c}` is not a choice of categorical option `{name}`"
                )))
            }
        }
        (Atom::Cmp { .. }, OptionKind::Numeric { .. }) => Ok(()),
        _ => Err(Error::ConstraintParse(format!(
            "atom type does not match the kind of option `{name}`"
        ))),
    }
}

// --- printing ---------------------------------------------------------

// Binding strength; higher binds tighter. Used to decide where parentheses
// are required so that `parse(to_string(e)) == e` holds for every tree.
fn prec(expr: &Expr) -> u8 {
    match expr {
        Expr::Implies(..) => 1,
        Expr::Or(..) => 2,
        Expr::And(..) => 3,
        Expr::Not(..) => 4,
        Expr::Atom(..) => 5,
    }
}

fn fmt_expr(expr: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    fn child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(e) < min {
            write!(f, "(")?;
            fmt_expr(e, f)?;
            write!(f, ")")
        } else {
            fmt_expr(e, f)
        }
    }
    match expr {
        Expr::Atom(a) => write!(f, "{a}"),
        // Always parenthesized: `!(noise >= 8.0)` reads unambiguously even
        // though the grammar would bind the atom as a unit anyway.
        Expr::Not(e) => {
            write!(f, "!(")?;
            fmt_expr(e, f)?;
            write!(f, ")")
        }
        // Left-associative: the right child needs parens at equal precedence.
        Expr::And(a, b) => {
            child(a, 3, f)?;
            write!(f, " && ")?;
            child(b, 4, f)
        }
        Expr::Or(a, b) => {
            child(a, 2, f)?;
            write!(f, " || ")?;
            child(b, 3, f)
        }
        // Right-associative.
        Expr::Implies(a, b) => {
            child(a, 2, f)?;
            write!(f, " => ")?;
            child(b, 1, f)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eq { option, value } => write!(f, "{option} == {value}"),
            Atom::Cmp { option, op, value } => {
                write!(f, "{option} {} {value:?}", op.symbol())
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

// --- parsing ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    EqEq,
    Lt,
    Le,
    Gt,
    Ge,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '!' => {
                tokens.push(Token::Bang);
                i += 1;
            }
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    tokens.push(Token::AndAnd);
                    i += 2;
                } else {
                    return Err(Error::ConstraintParse("expected `&&`".into()));
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    tokens.push(Token::OrOr);
                    i += 2;
                } else {
                    return Err(Error::ConstraintParse("expected `||`".into()));
                }
            }
            '=' => match bytes.get(i + 1) {
                Some(&b'=') => {
                    tokens.push(Token::EqEq);
                    i += 2;
                }
                Some(&b'>') => {
                    tokens.push(Token::Arrow);
                    i += 2;
                }
                _ => return Err(Error::ConstraintParse("expected `==` or `=>`".into())),
            },
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token::Le);
                    i += 2;
                } else {
                    tokens.push(Token::Lt);
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token::Ge);
                    i += 2;
                } else {
                    tokens.push(Token::Gt);
                    i += 1;
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token::Ident(text[start..i].to_string()));
            }
            _ if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    let sign_after_exponent =
                        (d == '-' || d == '+') && matches!(bytes[i - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || sign_after_exponent
                    {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let raw = &text[start..i];
                let num: f64 = raw
                    .parse()
                    .map_err(|_| Error::ConstraintParse(format!("bad number `{raw}`")))?;
                tokens.push(Token::Number(num));
            }
            _ => {
                return Err(Error::ConstraintParse(format!(
                    "unexpected character `{c}`"
                )))
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    options: &'a [OptionDef],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            other => Err(Error::ConstraintParse(format!(
                "expected {t:?}, found {other:?}"
            ))),
        }
    }

    fn implies(&mut self) -> Result<Expr> {
        let lhs = self.or()?;
        if self.peek() == Some(&Token::Arrow) {
            self.bump();
            let rhs = self.implies()?;
            Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Expr> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::OrOr) {
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::AndAnd) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Bang) => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Token::LParen) => {
                self.bump();
                let inner = self.implies()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let name = match self.bump() {
            Some(Token::Ident(n)) => n,
            other => {
                return Err(Error::ConstraintParse(format!(
                    "expected option name, found {other:?}"
                )))
            }
        };
        let def = self
            .options
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| Error::ConstraintParse(format!("unknown option `{name}`")))?;
        let op = self.bump();
        match op {
            Some(Token::EqEq) => {
                let lit = self.bump();
                let value = match (&def.kind, lit) {
                    (OptionKind::Boolean, Some(Token::Ident(s))) if s == "true" => {
                        Value::Bool(true)
                    }
                    (OptionKind::Boolean, Some(Token::Ident(s))) if s == "false" => {
                        Value::Bool(false)
                    }
                    (OptionKind::Boolean, other) => {
                        return Err(Error::ConstraintParse(format!(
                            "boolean option `{name}` compared to {other:?}"
                        )))
                    }
                    (OptionKind::Categorical { choices }, Some(Token::Ident(c))) => {
                        if choices.iter().any(|x| *x == c) {
                            Value::Choice(c)
                        } else {
                            return Err(Error::ConstraintParse(format!(
                                "`{c}` is not a choice of categorical option `{name}`"
                            )));
                        }
                    }
                    (OptionKind::Categorical { .. }, other) => {
                        return Err(Error::ConstraintParse(format!(
                            "categorical option `{name}` compared to {other:?}"
                        )))
                    }
                    (OptionKind::Numeric { .. }, _) => {
                        return Err(Error::ConstraintParse(format!(
                            "numeric option `{name}` only supports <, <=, >, >="
                        )))
                    }
                };
                Ok(Expr::Atom(Atom::Eq { option: name, value }))
            }
            Some(t @ (Token::Lt | Token::Le | Token::Gt | Token::Ge)) => {
                if !matches!(def.kind, OptionKind::Numeric { .. }) {
                    return Err(Error::ConstraintParse(format!(
                        "comparison on non-numeric option `{name}`"
                    )));
                }
                let value = match self.bump() {
                    Some(Token::Number(v)) => v,
                    other => {
                        return Err(Error::ConstraintParse(format!(
                            "expected number, found {other:?}"
                        )))
                    }
                };
                let op = match t {
                    Token::Lt => CmpOp::Lt,
                    Token::Le => CmpOp::Le,
                    Token::Gt => CmpOp::Gt,
                    Token::Ge => CmpOp::Ge,
                    _ => unreachable!(),
                };
                Ok(Expr::Atom(Atom::Cmp {
                    option: name,
                    op,
                    value,
                }))
            }
            other => Err(Error::ConstraintParse(format!(
                "expected comparison operator after `{name}`, found {other:?}"
            ))),
        }
    }
}

/// Parse a constraint string against the options it may reference.
pub fn parse_constraint(text: &str, options: &[OptionDef]) -> Result<Constraint> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(Error::ConstraintParse("empty constraint".into()));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        options,
    };
    let expr = parser.implies()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::ConstraintParse(format!(
            "trailing input after expression in `{text}`"
        )));
    }
    Ok(Constraint::new(expr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varmodel::VariabilityModel;

    fn options() -> Vec<OptionDef> {
        vec![
            OptionDef::boolean("fog"),
            OptionDef::boolean("blur"),
            OptionDef::categorical("weather", ["sun", "rain", "fog3"]),
            OptionDef::numeric("noise", 0.0, 10.0),
        ]
    }

    fn cfg(fog: bool, blur: bool, weather: &str, noise: f64) -> Configuration {
        Configuration::from_pairs([
            ("fog".into(), Value::Bool(fog)),
            ("blur".into(), Value::Bool(blur)),
            ("weather".into(), Value::Choice(weather.into())),
            ("noise".into(), Value::Real(noise)),
        ])
    }

    #[test]
    fn parses_implication() {
        let opts = options();
        let c = parse_constraint("fog == true => blur == false", &opts).unwrap();
        assert!(!c.eval(&cfg(true, true, "sun", 1.0)));
        assert!(c.eval(&cfg(false, true, "sun", 1.0)));
        assert!(c.eval(&cfg(true, false, "sun", 1.0)));
    }

    #[test]
    fn precedence_not_binds_tightest() {
        let opts = options();
        let c = parse_constraint("!fog == true || blur == true", &opts).unwrap();
        // (!(fog == true)) || (blur == true)
        assert!(c.eval(&cfg(false, false, "sun", 0.0)));
        assert!(c.eval(&cfg(true, true, "sun", 0.0)));
        assert!(!c.eval(&cfg(true, false, "sun", 0.0)));
    }

    #[test]
    fn implies_is_right_associative() {
        let opts = options();
        let c = parse_constraint("fog == true => blur == true => noise < 5", &opts).unwrap();
        match &c.expr {
            Expr::Implies(_, rhs) => assert!(matches!(**rhs, Expr::Implies(..))),
            other => panic!("expected implication, got {other:?}"),
        }
    }

    #[test]
    fn numeric_atoms() {
        let opts = options();
        let c = parse_constraint("noise <= 2.5", &opts).unwrap();
        assert!(c.eval(&cfg(false, false, "sun", 2.5)));
        assert!(!c.eval(&cfg(false, false, "sun", 2.6)));
    }

    #[test]
    fn rejects_type_mismatches() {
        let opts = options();
        assert!(parse_constraint("fog < 1.0", &opts).is_err());
        assert!(parse_constraint("noise == 1.0", &opts).is_err());
        assert!(parse_constraint("weather == hail", &opts).is_err());
        assert!(parse_constraint("ghost == true", &opts).is_err());
        assert!(parse_constraint("fog == true extra", &opts).is_err());
    }

    #[test]
    fn display_matches_expected_shapes() {
        let opts = options();
        let c = parse_constraint("!(fog == true && noise >= 8.0)", &opts).unwrap();
        assert_eq!(c.to_string(), "!(fog == true && noise >= 8.0)");
        let c = parse_constraint("weather == rain || weather == sun", &opts).unwrap();
        assert_eq!(c.to_string(), "weather == rain || weather == sun");
    }

    #[test]
    fn display_parse_round_trip_preserves_tree() {
        let opts = options();
        for text in [
            "fog == true",
            "!(fog == true)",
            "fog == true && blur == false && noise < 3.25",
            "fog == true && (blur == false && noise < 3.25)",
            "(fog == true || blur == true) && weather == fog3",
            "fog == true => blur == true => noise >= 0.5",
            "(fog == true => blur == true) => noise >= 0.5",
            "!(!(noise > 9.9))",
        ] {
            let c = parse_constraint(text, &opts).unwrap();
            let printed = c.to_string();
            let reparsed = parse_constraint(&printed, &opts).unwrap();
            assert_eq!(c, reparsed, "round trip changed `{text}` -> `{printed}`");
        }
    }

    // Random expression trees must survive print -> parse unchanged.
    #[test]
    fn proptest_display_parse_identity() {
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                proptest::bool::ANY.prop_map(|b| Expr::Atom(Atom::Eq {
                    option: "fog".into(),
                    value: Value::Bool(b),
                })),
                proptest::sample::select(vec!["sun", "rain", "fog3"]).prop_map(|c| {
                    Expr::Atom(Atom::Eq {
                        option: "weather".into(),
                        value: Value::Choice(c.into()),
                    })
                }),
                (0.0f64..10.0, proptest::sample::select(vec![
                    CmpOp::Lt,
                    CmpOp::Le,
                    CmpOp::Gt,
                    CmpOp::Ge
                ]))
                    .prop_map(|(v, op)| Expr::Atom(Atom::Cmp {
                        option: "noise".into(),
                        op,
                        value: v,
                    })),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
                    (inner.clone(), inner)
                        .prop_map(|(a, b)| Expr::Implies(Box::new(a), Box::new(b))),
                ]
            })
        }

        let opts = options();
        proptest!(|(expr in arb_expr())| {
            let c = Constraint::new(expr);
            let printed = c.to_string();
            let reparsed = parse_constraint(&printed, &opts).unwrap();
            prop_assert_eq!(c, reparsed);
        });
        let _ = VariabilityModel::new(options(), vec![]).unwrap();
    }
}
