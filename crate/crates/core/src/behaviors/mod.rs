//! The standard behavior library: parametric atomics sufficient to exercise
//! every kernel and structure feature, plus their contextual initializers.

mod generator;
mod pool;
mod processor;
mod router;
mod transducer;

pub use generator::GeneratorBehavior;
pub use pool::PoolExecutiveBehavior;
pub use processor::ProcessorBehavior;
pub use router::RouterBehavior;
pub use transducer::TransducerBehavior;

use crate::catalog::BehaviorCatalog;
use crate::error::BehaviorError;
use crate::value::{StateValue, Value, ValueTypeTag};

/// Registers every standard behavior and initializer.
pub fn register_standard(catalog: &mut BehaviorCatalog) {
    generator::register(catalog);
    processor::register(catalog);
    transducer::register(catalog);
    router::register(catalog);
    pool::register(catalog);
}

fn state_err(field: &str) -> BehaviorError {
    BehaviorError::State(format!("missing or ill-typed state field `{field}`"))
}

pub(crate) fn get_int(state: &StateValue, field: &str) -> Result<i64, BehaviorError> {
    state.field(field).and_then(Value::as_integer).ok_or_else(|| state_err(field))
}

pub(crate) fn get_real(state: &StateValue, field: &str) -> Result<f64, BehaviorError> {
    state.field(field).and_then(Value::as_real).ok_or_else(|| state_err(field))
}

pub(crate) fn get_text<'a>(state: &'a StateValue, field: &str) -> Result<&'a str, BehaviorError> {
    state.field(field).and_then(Value::as_text).ok_or_else(|| state_err(field))
}

pub(crate) fn get_list<'a>(state: &'a StateValue, field: &str) -> Result<&'a [Value], BehaviorError> {
    state.field(field).and_then(Value::as_list).ok_or_else(|| state_err(field))
}

/// The port tag describing a literal value; lists have no port type.
pub(crate) fn type_of_value(value: &Value) -> Result<ValueTypeTag, BehaviorError> {
    Ok(match value {
        Value::Integer(_) => ValueTypeTag::Integer,
        Value::Real(_) => ValueTypeTag::Real,
        Value::Boolean(_) => ValueTypeTag::Boolean,
        Value::Text(_) => ValueTypeTag::Text,
        Value::Record(fields) => {
            let mut tags = std::collections::BTreeMap::new();
            for (name, field) in fields {
                tags.insert(name.clone(), type_of_value(field)?);
            }
            ValueTypeTag::Record(tags)
        }
        Value::List(_) => {
            return Err(BehaviorError::Parameter("list values cannot appear on ports".into()))
        }
    })
}
