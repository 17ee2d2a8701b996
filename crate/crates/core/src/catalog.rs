//! Registry of named behaviors and contextual initializers.
//!
//! Models are data; the catalog is the fixed, audited library that gives the
//! names meaning. Each behavior entry pairs a parameter schema with a factory
//! building the executable atomic spec.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atomic::{AtomicBehavior, AtomicSpec};
use crate::error::{BehaviorError, UsageError};
use crate::model::{AtomicModelSpec, ParamMap, ParamValue};
use crate::structure::ContextSnapshot;
use crate::time::SimTime;
use crate::value::{StateValue, ValueTypeTag};

/// Shape of one behavior parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Integer,
    Real,
    Boolean,
    Text,
    /// A finite or infinite time literal.
    Time,
    /// A value-type tag literal, e.g. `integer` or `record{...}`.
    Type,
    /// Any value literal.
    Value,
}

/// One entry of a behavior's parameter schema.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
}

impl ParamSpec {
    pub const fn required(name: &'static str, kind: ParamKind) -> ParamSpec {
        ParamSpec { name, kind, required: true }
    }

    pub const fn optional(name: &'static str, kind: ParamKind) -> ParamSpec {
        ParamSpec { name, kind, required: false }
    }
}

/// The executable pieces a factory produces; the catalog attaches the
/// declarative source to form a full [`AtomicSpec`].
pub struct BehaviorParts {
    pub input_ports: BTreeMap<String, ValueTypeTag>,
    pub output_ports: BTreeMap<String, ValueTypeTag>,
    pub behavior: Arc<dyn AtomicBehavior>,
    pub initial_state: StateValue,
}

type FactoryFn = Box<dyn Fn(&ParamMap) -> Result<BehaviorParts, BehaviorError> + Send + Sync>;
type InitializerFn =
    Box<dyn Fn(&ParamMap, &ContextSnapshot) -> Result<StateValue, BehaviorError> + Send + Sync>;

struct BehaviorEntry {
    schema: Vec<ParamSpec>,
    factory: FactoryFn,
}

/// Named behaviors plus named contextual initializers.
pub struct BehaviorCatalog {
    behaviors: BTreeMap<String, BehaviorEntry>,
    initializers: BTreeMap<String, InitializerFn>,
}

impl BehaviorCatalog {
    /// An empty catalog; tests and embedders can register their own entries.
    pub fn empty() -> BehaviorCatalog {
        BehaviorCatalog { behaviors: BTreeMap::new(), initializers: BTreeMap::new() }
    }

    /// The standard library: generator, processor, transducer, router, and
    /// the worker-pool executive, plus their initializers.
    pub fn standard() -> BehaviorCatalog {
        let mut catalog = BehaviorCatalog::empty();
        crate::behaviors::register_standard(&mut catalog);
        catalog
    }

    pub fn register_behavior(
        &mut self,
        name: &str,
        schema: Vec<ParamSpec>,
        factory: impl Fn(&ParamMap) -> Result<BehaviorParts, BehaviorError> + Send + Sync + 'static,
    ) {
        let previous = self
            .behaviors
            .insert(name.to_owned(), BehaviorEntry { schema, factory: Box::new(factory) });
        assert!(previous.is_none(), "behavior `{name}` registered twice");
    }

    pub fn register_initializer(
        &mut self,
        name: &str,
        initializer: impl Fn(&ParamMap, &ContextSnapshot) -> Result<StateValue, BehaviorError>
            + Send
            + Sync
            + 'static,
    ) {
        let previous = self.initializers.insert(name.to_owned(), Box::new(initializer));
        assert!(previous.is_none(), "initializer `{name}` registered twice");
    }

    pub fn behavior_names(&self) -> impl Iterator<Item = &str> {
        self.behaviors.keys().map(String::as_str)
    }

    pub fn has_behavior(&self, name: &str) -> bool {
        self.behaviors.contains_key(name)
    }

    pub fn has_initializer(&self, name: &str) -> bool {
        self.initializers.contains_key(name)
    }

    /// Instantiates a declarative atomic spec: schema check, then factory.
    pub fn make(&self, spec: &AtomicModelSpec) -> Result<AtomicSpec, UsageError> {
        let entry = self
            .behaviors
            .get(&spec.behavior)
            .ok_or_else(|| UsageError::new(format!("unknown behavior `{}`", spec.behavior)))?;
        check_schema(&spec.behavior, &entry.schema, &spec.params)?;
        let parts = (entry.factory)(&spec.params)
            .map_err(|e| UsageError::new(format!("behavior `{}`: {e}", spec.behavior)))?;
        Ok(AtomicSpec {
            input_ports: parts.input_ports,
            output_ports: parts.output_ports,
            behavior: parts.behavior,
            initial_state: parts.initial_state,
            source: spec.clone(),
        })
    }

    pub fn run_initializer(
        &self,
        name: &str,
        params: &ParamMap,
        snapshot: &ContextSnapshot,
    ) -> Result<StateValue, BehaviorError> {
        let initializer = self
            .initializers
            .get(name)
            .ok_or_else(|| BehaviorError::Parameter(format!("unknown initializer `{name}`")))?;
        initializer(params, snapshot)
    }
}

fn kind_matches(kind: ParamKind, value: &ParamValue) -> bool {
    match kind {
        ParamKind::Integer => value.as_integer().is_some(),
        ParamKind::Real => {
            matches!(value, ParamValue::Value(v) if v.as_real().is_some() || v.as_integer().is_some())
        }
        ParamKind::Boolean => matches!(value, ParamValue::Value(v) if v.as_boolean().is_some()),
        ParamKind::Text => value.as_text().is_some(),
        ParamKind::Time => value.as_time().is_some(),
        ParamKind::Type => value.as_type().is_some(),
        ParamKind::Value => matches!(value, ParamValue::Value(_)),
    }
}

fn check_schema(behavior: &str, schema: &[ParamSpec], params: &ParamMap) -> Result<(), UsageError> {
    for param in schema {
        match params.get(param.name) {
            Some(value) => {
                if !kind_matches(param.kind, value) {
                    return Err(UsageError::new(format!(
                        "behavior `{behavior}`: parameter `{}` has the wrong kind",
                        param.name
                    )));
                }
            }
            None if param.required => {
                return Err(UsageError::new(format!(
                    "behavior `{behavior}`: missing required parameter `{}`",
                    param.name
                )));
            }
            None => {}
        }
    }
    for name in params.keys() {
        if !schema.iter().any(|p| p.name == name) {
            return Err(UsageError::new(format!(
                "behavior `{behavior}`: unknown parameter `{name}`"
            )));
        }
    }
    Ok(())
}

/// Typed accessors factories use after the schema check.
pub mod params {
    use super::*;

    pub fn time_finite_positive(params: &ParamMap, name: &str) -> Result<SimTime, BehaviorError> {
        let t = params
            .get(name)
            .and_then(ParamValue::as_time)
            .ok_or_else(|| BehaviorError::Parameter(format!("`{name}` must be a time")))?;
        match t {
            SimTime::Finite(v) if v > 0.0 => Ok(t),
            SimTime::Finite(_) => {
                Err(BehaviorError::Parameter(format!("`{name}` must be positive")))
            }
            SimTime::Infinity => {
                Err(BehaviorError::Parameter(format!("`{name}` must be finite")))
            }
        }
    }

    pub fn integer_positive(params: &ParamMap, name: &str) -> Result<i64, BehaviorError> {
        match params.get(name).and_then(ParamValue::as_integer) {
            Some(v) if v > 0 => Ok(v),
            Some(_) => Err(BehaviorError::Parameter(format!("`{name}` must be positive"))),
            None => Err(BehaviorError::Parameter(format!("`{name}` must be an integer"))),
        }
    }

    pub fn integer_positive_or(params: &ParamMap, name: &str, default: i64) -> Result<i64, BehaviorError> {
        if params.contains_key(name) {
            integer_positive(params, name)
        } else {
            Ok(default)
        }
    }

    pub fn text_or<'a>(params: &'a ParamMap, name: &str, default: &'a str) -> &'a str {
        params.get(name).and_then(ParamValue::as_text).unwrap_or(default)
    }

    pub fn type_or(params: &ParamMap, name: &str, default: ValueTypeTag) -> ValueTypeTag {
        params.get(name).and_then(ParamValue::as_type).cloned().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Value;

    #[test]
    fn schema_rejects_unknown_and_missing_params() {
        let catalog = BehaviorCatalog::standard();
        let missing = AtomicModelSpec::new("generator", ParamMap::new());
        assert!(catalog.make(&missing).is_err());
        let unknown = AtomicModelSpec::new(
            "generator",
            ParamMap::from([
                ("period".to_owned(), ParamValue::Value(Value::Integer(2))),
                ("value".to_owned(), ParamValue::Value(Value::Integer(1))),
                ("bogus".to_owned(), ParamValue::Value(Value::Integer(1))),
            ]),
        );
        assert!(catalog.make(&unknown).is_err());
    }

    #[test]
    fn unknown_behavior_is_an_error() {
        let catalog = BehaviorCatalog::standard();
        let spec = AtomicModelSpec::new("no_such_behavior", ParamMap::new());
        assert!(catalog.make(&spec).is_err());
    }
}
