//! Typed event values and the closed tag set that types ports.
//!
//! Ports carry one of five value shapes: integer, real, boolean, text, or a
//! record of named fields. Model state additionally uses lists (queues and
//! the like); lists cannot appear on ports because no tag describes them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::UsageError;

/// Shape of values a port accepts or emits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueTypeTag {
    Integer,
    Real,
    Boolean,
    Text,
    /// Named fields, unique by name, canonically sorted.
    Record(BTreeMap<String, ValueTypeTag>),
}

impl ValueTypeTag {
    pub fn record(fields: impl IntoIterator<Item = (String, ValueTypeTag)>) -> ValueTypeTag {
        ValueTypeTag::Record(fields.into_iter().collect())
    }
}

impl fmt::Display for ValueTypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueTypeTag::Integer => write!(f, "integer"),
            ValueTypeTag::Real => write!(f, "real"),
            ValueTypeTag::Boolean => write!(f, "boolean"),
            ValueTypeTag::Text => write!(f, "text"),
            ValueTypeTag::Record(fields) => {
                write!(f, "record{{")?;
                for (i, (name, tag)) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{name}:{tag}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// A concrete event or state value.
#[derive(Debug, Clone)]
pub enum Value {
    Integer(i64),
    Real(f64),
    Boolean(bool),
    Text(String),
    Record(BTreeMap<String, Value>),
    /// State-only: ordered collection, never valid on a port.
    List(Vec<Value>),
}

impl Value {
    pub fn record(fields: impl IntoIterator<Item = (String, Value)>) -> Value {
        Value::Record(fields.into_iter().collect())
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Value::Integer(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_boolean(&self) -> Option<bool> {
        match self {
            Value::Boolean(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Record(fields) => Some(fields),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Integer(_) => 0,
            Value::Real(_) => 1,
            Value::Boolean(_) => 2,
            Value::Text(_) => 3,
            Value::Record(_) => 4,
            Value::List(_) => 5,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Boolean(a), Value::Boolean(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Record(a), Value::Record(b)) => a.cmp(b),
            (Value::List(a), Value::List(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Renders a real so it parses back as a real: the shortest round-trip
/// decimal, with `.0` forced onto integral values.
fn render_real(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains('E') || s.contains("inf") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Quotes text with backslash escapes; the canonical form is always quoted.
pub fn quote_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    /// Canonical literal form: `7`, `2.5`, `true`, `"hi"`, `{a=1,b=2.0}`,
    /// `[1,2]`. Record fields come out sorted by name.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{}", render_real(*v)),
            Value::Boolean(v) => write!(f, "{v}"),
            Value::Text(v) => write!(f, "{}", quote_text(v)),
            Value::Record(fields) => {
                write!(f, "{{")?;
                for (i, (name, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{name}={value}")?;
                }
                write!(f, "}}")
            }
            Value::List(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Checks structural conformance of `value` against `tag`, recursively for
/// records. On mismatch the error names the offending path inside the value.
pub fn check_value(value: &Value, tag: &ValueTypeTag) -> Result<(), String> {
    check_at("value", value, tag)
}

fn check_at(path: &str, value: &Value, tag: &ValueTypeTag) -> Result<(), String> {
    let found = match value {
        Value::Integer(_) => "integer",
        Value::Real(_) => "real",
        Value::Boolean(_) => "boolean",
        Value::Text(_) => "text",
        Value::Record(_) => "record",
        Value::List(_) => "list",
    };
    match (value, tag) {
        (Value::Integer(_), ValueTypeTag::Integer)
        | (Value::Real(_), ValueTypeTag::Real)
        | (Value::Boolean(_), ValueTypeTag::Boolean)
        | (Value::Text(_), ValueTypeTag::Text) => Ok(()),
        (Value::Record(fields), ValueTypeTag::Record(field_tags)) => {
            for name in fields.keys() {
                if !field_tags.contains_key(name) {
                    return Err(format!("{path}.{name}: field not declared in record type"));
                }
            }
            for (name, field_tag) in field_tags {
                let Some(field) = fields.get(name) else {
                    return Err(format!("{path}.{name}: missing field of type {field_tag}"));
                };
                check_at(&format!("{path}.{name}"), field, field_tag)?;
            }
            Ok(())
        }
        _ => Err(format!("{path}: expected {tag}, found {found}")),
    }
}

/// A behavior's sequential state: an opaque record value.
///
/// Keeping state in the value domain makes every model snapshot serializable
/// and comparable, which replay determinism and resumability both lean on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StateValue(Value);

impl StateValue {
    pub fn new(fields: impl IntoIterator<Item = (String, Value)>) -> StateValue {
        StateValue(Value::record(fields))
    }

    pub fn from_value(value: Value) -> Result<StateValue, UsageError> {
        match value {
            Value::Record(_) => Ok(StateValue(value)),
            other => Err(UsageError::new(format!("state must be a record, got {other}"))),
        }
    }

    pub fn value(&self) -> &Value {
        &self.0
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        self.0.as_record().and_then(|fields| fields.get(name))
    }

    /// Copy with one field replaced (or inserted).
    pub fn with_field(&self, name: &str, value: Value) -> StateValue {
        let mut fields = self.0.as_record().cloned().unwrap_or_default();
        fields.insert(name.to_owned(), value);
        StateValue(Value::Record(fields))
    }
}

impl fmt::Display for StateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_tag() -> ValueTypeTag {
        ValueTypeTag::record([("x".to_owned(), ValueTypeTag::Real)])
    }

    #[test]
    fn conforming_values() {
        assert!(check_value(&Value::Integer(7), &ValueTypeTag::Integer).is_ok());
        assert!(check_value(
            &Value::record([("x".to_owned(), Value::Real(1.5))]),
            &record_tag()
        )
        .is_ok());
    }

    #[test]
    fn mismatch_names_offending_path() {
        let err = check_value(&Value::Integer(7), &ValueTypeTag::Boolean).unwrap_err();
        assert!(err.contains("expected boolean"), "{err}");

        let nested = ValueTypeTag::record([(
            "inner".to_owned(),
            ValueTypeTag::record([("flag".to_owned(), ValueTypeTag::Boolean)]),
        )]);
        let bad = Value::record([(
            "inner".to_owned(),
            Value::record([("flag".to_owned(), Value::Integer(1))]),
        )]);
        let err = check_value(&bad, &nested).unwrap_err();
        assert!(err.starts_with("value.inner.flag"), "{err}");
    }

    #[test]
    fn lists_never_conform_to_port_tags() {
        let err = check_value(&Value::List(vec![Value::Integer(1)]), &ValueTypeTag::Integer)
            .unwrap_err();
        assert!(err.contains("found list"), "{err}");
    }

    #[test]
    fn canonical_rendering_distinguishes_real_from_integer() {
        assert_eq!(Value::Integer(2).to_string(), "2");
        assert_eq!(Value::Real(2.0).to_string(), "2.0");
        assert_eq!(Value::Real(0.4).to_string(), "0.4");
        assert_eq!(Value::Text("a\tb".into()).to_string(), "\"a\\tb\"");
        let rec = Value::record([
            ("b".to_owned(), Value::Integer(2)),
            ("a".to_owned(), Value::Real(1.0)),
        ]);
        assert_eq!(rec.to_string(), "{a=1.0,b=2}");
    }

    #[test]
    fn deep_nesting_terminates() {
        let mut tag = ValueTypeTag::Integer;
        let mut value = Value::Integer(0);
        for _ in 0..64 {
            tag = ValueTypeTag::record([("f".to_owned(), tag)]);
            value = Value::record([("f".to_owned(), value)]);
        }
        assert!(check_value(&value, &tag).is_ok());
    }
}
