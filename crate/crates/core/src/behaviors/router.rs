//! Zero-delay fan-out: forwards each message on `in` to one of its output
//! ports, chosen round-robin or by a text field of the message.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atomic::AtomicBehavior;
use crate::catalog::{params, BehaviorCatalog, BehaviorParts, ParamKind, ParamSpec};
use crate::error::BehaviorError;
use crate::message::{Bag, Message};
use crate::path::is_valid_name;
use crate::time::SimTime;
use crate::value::{StateValue, Value, ValueTypeTag};

use super::{get_int, get_list};

#[derive(Debug, Clone)]
pub enum RoutingPolicy {
    RoundRobin,
    ByField(String),
}

pub struct RouterBehavior {
    pub out_ports: Vec<String>,
    pub policy: RoutingPolicy,
}

impl RouterBehavior {
    fn initial_state() -> StateValue {
        StateValue::new([
            ("pending".to_owned(), Value::List(Vec::new())),
            ("rr".to_owned(), Value::Integer(0)),
        ])
    }

    fn choose(&self, rr: i64, value: &Value) -> Result<String, BehaviorError> {
        match &self.policy {
            RoutingPolicy::RoundRobin => {
                Ok(self.out_ports[(rr as usize) % self.out_ports.len()].clone())
            }
            RoutingPolicy::ByField(field) => {
                let fields = value.as_record().ok_or_else(|| {
                    BehaviorError::Routing(format!("by_field routing needs a record, got {value}"))
                })?;
                let chosen = fields
                    .get(field)
                    .ok_or_else(|| {
                        BehaviorError::Routing(format!("message lacks routing field `{field}`"))
                    })?
                    .as_text()
                    .ok_or_else(|| {
                        BehaviorError::Routing(format!("routing field `{field}` must be text"))
                    })?;
                if !self.out_ports.iter().any(|p| p == chosen) {
                    return Err(BehaviorError::Routing(format!(
                        "routing field names unknown output port `{chosen}`"
                    )));
                }
                Ok(chosen.to_owned())
            }
        }
    }
}

impl AtomicBehavior for RouterBehavior {
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
        Ok(state.with_field("pending", Value::List(Vec::new())))
    }

    fn delta_ext(
        &self,
        state: &StateValue,
        _elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError> {
        let mut pending = get_list(state, "pending")?.to_vec();
        let mut rr = get_int(state, "rr")?;
        for message in input.on_port("in") {
            let port = self.choose(rr, &message.value)?;
            if matches!(self.policy, RoutingPolicy::RoundRobin) {
                rr += 1;
            }
            pending.push(Value::record([
                ("port".to_owned(), Value::Text(port)),
                ("value".to_owned(), message.value.clone()),
            ]));
        }
        Ok(state
            .with_field("pending", Value::List(pending))
            .with_field("rr", Value::Integer(rr)))
    }

    fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError> {
        let pending = get_list(state, "pending")?;
        let mut bag = Bag::new();
        for entry in pending {
            let fields = entry
                .as_record()
                .ok_or_else(|| BehaviorError::State("malformed pending entry".into()))?;
            let port = fields
                .get("port")
                .and_then(Value::as_text)
                .ok_or_else(|| BehaviorError::State("pending entry lacks port".into()))?;
            let value = fields
                .get("value")
                .ok_or_else(|| BehaviorError::State("pending entry lacks value".into()))?;
            bag.push(Message::new(port, value.clone()));
        }
        Ok(bag)
    }

    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
        if get_list(state, "pending")?.is_empty() {
            Ok(SimTime::INFINITY)
        } else {
            Ok(SimTime::ZERO)
        }
    }
}

pub(super) fn register(catalog: &mut BehaviorCatalog) {
    catalog.register_behavior(
        "router",
        vec![
            ParamSpec::required("out_ports", ParamKind::Text),
            ParamSpec::optional("policy", ParamKind::Text),
            ParamSpec::optional("field", ParamKind::Text),
            ParamSpec::optional("job_type", ParamKind::Type),
        ],
        |p| {
            let ports_text = params::text_or(p, "out_ports", "");
            let out_ports: Vec<String> =
                ports_text.split(',').map(|s| s.trim().to_owned()).collect();
            if out_ports.is_empty() || out_ports.iter().any(|s| !is_valid_name(s)) {
                return Err(BehaviorError::Parameter(
                    "`out_ports` must be a comma-separated list of port names".into(),
                ));
            }
            let policy = match params::text_or(p, "policy", "round_robin") {
                "round_robin" => RoutingPolicy::RoundRobin,
                "by_field" => {
                    let field = p
                        .get("field")
                        .and_then(|v| v.as_text())
                        .ok_or_else(|| {
                            BehaviorError::Parameter("by_field policy needs `field`".into())
                        })?;
                    RoutingPolicy::ByField(field.to_owned())
                }
                other => {
                    return Err(BehaviorError::Parameter(format!("unknown policy `{other}`")))
                }
            };
            let job_type = params::type_or(p, "job_type", ValueTypeTag::Integer);
            let output_ports: BTreeMap<String, ValueTypeTag> =
                out_ports.iter().map(|name| (name.clone(), job_type.clone())).collect();
            if output_ports.len() != out_ports.len() {
                return Err(BehaviorError::Parameter("duplicate output port name".into()));
            }
            Ok(BehaviorParts {
                input_ports: BTreeMap::from([("in".to_owned(), job_type)]),
                output_ports,
                behavior: Arc::new(RouterBehavior { out_ports, policy }),
                initial_state: RouterBehavior::initial_state(),
            })
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::AtomicProcessor;
    use crate::model::{AtomicModelSpec, Mode, ParamMap, ParamValue};
    use crate::path::ModelPath;

    fn make(ports: &str) -> AtomicProcessor {
        let catalog = BehaviorCatalog::standard();
        let spec = catalog
            .make(&AtomicModelSpec::new(
                "router",
                ParamMap::from([(
                    "out_ports".to_owned(),
                    ParamValue::Value(Value::Text(ports.to_owned())),
                )]),
            ))
            .unwrap();
        let mut p = AtomicProcessor::new(ModelPath::parse("/router").unwrap(), spec);
        p.init(SimTime::ZERO).unwrap();
        p
    }

    #[test]
    fn round_robin_cycles() {
        let mut p = make("a,b");
        let mut seen = Vec::new();
        for (t, v) in [(1.0, 1), (2.0, 2), (3.0, 3)] {
            let bag = Bag::of([Message::new("in", Value::Integer(v))]);
            p.transition(SimTime::finite(t).unwrap(), &bag, Mode::Parallel, 100).unwrap();
            // zero-delay forward
            assert_eq!(p.t_next(), SimTime::finite(t).unwrap());
            let out = p.collect_output(p.t_next()).unwrap();
            seen.push(out.iter().next().unwrap().port.clone());
            p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        }
        assert_eq!(seen, vec!["a", "b", "a"]);
    }

    #[test]
    fn single_port_is_identity_forwarding() {
        let mut p = make("only");
        let bag = Bag::of([Message::new("in", Value::Integer(9))]);
        p.transition(SimTime::finite(1.0).unwrap(), &bag, Mode::Parallel, 100).unwrap();
        let out = p.collect_output(p.t_next()).unwrap();
        let fwd: Vec<_> = out.iter().collect();
        assert_eq!(fwd.len(), 1);
        assert_eq!(fwd[0].port, "only");
        assert_eq!(fwd[0].value, Value::Integer(9));
    }

    #[test]
    fn by_field_missing_field_is_routing_error() {
        let catalog = BehaviorCatalog::standard();
        let spec = catalog
            .make(&AtomicModelSpec::new(
                "router",
                ParamMap::from([
                    ("out_ports".to_owned(), ParamValue::Value(Value::Text("a,b".into()))),
                    ("policy".to_owned(), ParamValue::Value(Value::Text("by_field".into()))),
                    ("field".to_owned(), ParamValue::Value(Value::Text("dest".into()))),
                    (
                        "job_type".to_owned(),
                        ParamValue::Type(ValueTypeTag::record([(
                            "other".to_owned(),
                            ValueTypeTag::Integer,
                        )])),
                    ),
                ]),
            ))
            .unwrap();
        let mut p = AtomicProcessor::new(ModelPath::parse("/router").unwrap(), spec);
        p.init(SimTime::ZERO).unwrap();
        let bag = Bag::of([Message::new(
            "in",
            Value::record([("other".to_owned(), Value::Integer(1))]),
        )]);
        let err = p
            .transition(SimTime::finite(1.0).unwrap(), &bag, Mode::Parallel, 100)
            .unwrap_err();
        assert!(err.to_string().contains("routing field"), "{err}");
    }
}
