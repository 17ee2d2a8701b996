//! Worker-pool executive: watches queue-length reports on `load` and
//! requests structure changes — spawning an idle worker (with couplings) when
//! the observed backlog crosses a threshold, retiring the newest spawned
//! worker after a silent observation period.
//!
//! Spawned workers are named `<worker_prefix><k>` starting after the workers
//! assumed present at boot, fed from `<source>.<source_port>`, and report
//! their own load back to the executive.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atomic::{AtomicBehavior, IntentContext};
use crate::catalog::{params, BehaviorCatalog, BehaviorParts, ParamKind, ParamSpec};
use crate::error::BehaviorError;
use crate::message::Bag;
use crate::model::{AtomicModelSpec, Coupling, ModelSpec, ParamMap, ParamValue, PortRef};
use crate::structure::{InitDirective, StructureChangeKind};
use crate::time::SimTime;
use crate::value::{StateValue, Value, ValueTypeTag};

use super::{get_int, get_list, get_real};

pub struct PoolExecutiveBehavior {
    pub queue_threshold: i64,
    pub max_workers: i64,
    pub worker_service: f64,
    pub observation_period: f64,
    pub source: String,
    pub source_port: String,
    pub worker_prefix: String,
    pub job_type: ValueTypeTag,
}

impl PoolExecutiveBehavior {
    fn initial_state(&self, initial_workers: i64) -> StateValue {
        StateValue::new([
            ("workers".to_owned(), Value::Integer(initial_workers)),
            ("next_id".to_owned(), Value::Integer(initial_workers + 1)),
            ("spawned".to_owned(), Value::List(Vec::new())),
            ("pending".to_owned(), Value::List(Vec::new())),
            ("sigma".to_owned(), Value::Real(self.observation_period)),
            ("reports".to_owned(), Value::Integer(0)),
        ])
    }

    fn worker_spec(&self) -> ModelSpec {
        let mut params = ParamMap::from([(
            "service_time".to_owned(),
            ParamValue::Value(Value::Real(self.worker_service)),
        )]);
        if self.job_type != ValueTypeTag::Integer {
            params.insert("job_type".to_owned(), ParamValue::Type(self.job_type.clone()));
        }
        ModelSpec::Atomic(AtomicModelSpec::new("processor", params))
    }
}

impl AtomicBehavior for PoolExecutiveBehavior {
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
        let pending = get_list(state, "pending")?;
        if !pending.is_empty() {
            // The requests this state announced are being applied now;
            // drop them so they are not re-issued.
            return Ok(state.with_field("pending", Value::List(Vec::new())));
        }
        // Observation tick: a full period with no load report means the
        // newest spawned worker is surplus.
        let reports = get_int(state, "reports")?;
        let workers = get_int(state, "workers")?;
        let mut spawned = get_list(state, "spawned")?.to_vec();
        let mut state = state
            .with_field("reports", Value::Integer(0))
            .with_field("sigma", Value::Real(self.observation_period));
        if reports == 0 && workers > 1 {
            if let Some(name) = spawned.pop() {
                state = state
                    .with_field(
                        "pending",
                        Value::List(vec![Value::record([
                            ("op".to_owned(), Value::Text("remove".into())),
                            ("name".to_owned(), name.clone()),
                        ])]),
                    )
                    .with_field("spawned", Value::List(spawned))
                    .with_field("workers", Value::Integer(workers - 1));
            }
        }
        Ok(state)
    }

    fn delta_ext(
        &self,
        state: &StateValue,
        elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError> {
        let sigma = get_real(state, "sigma")?;
        let e = elapsed.value().unwrap_or(0.0);
        let mut state = state.with_field("sigma", Value::Real(sigma - e));
        let loads: Vec<i64> = input
            .on_port("load")
            .filter_map(|m| m.value.as_integer())
            .collect();
        let reports = get_int(&state, "reports")? + loads.len() as i64;
        state = state.with_field("reports", Value::Integer(reports));
        for load in loads {
            let workers = get_int(&state, "workers")?;
            if load > self.queue_threshold && workers < self.max_workers {
                let id = get_int(&state, "next_id")?;
                let name = format!("{}{id}", self.worker_prefix);
                let mut pending = get_list(&state, "pending")?.to_vec();
                pending.push(Value::record([
                    ("op".to_owned(), Value::Text("add".into())),
                    ("name".to_owned(), Value::Text(name.clone())),
                ]));
                let mut spawned = get_list(&state, "spawned")?.to_vec();
                spawned.push(Value::Text(name));
                state = state
                    .with_field("pending", Value::List(pending))
                    .with_field("spawned", Value::List(spawned))
                    .with_field("workers", Value::Integer(workers + 1))
                    .with_field("next_id", Value::Integer(id + 1));
            }
        }
        Ok(state)
    }

    fn lambda(&self, _state: &StateValue) -> Result<Bag, BehaviorError> {
        Ok(Bag::new())
    }

    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
        if !get_list(state, "pending")?.is_empty() {
            return Ok(SimTime::ZERO);
        }
        SimTime::finite(get_real(state, "sigma")?)
            .map_err(|e| BehaviorError::State(e.to_string()))
    }

    fn structure_intent(
        &self,
        state: &StateValue,
        ctx: &IntentContext<'_>,
    ) -> Vec<StructureChangeKind> {
        let Ok(pending) = get_list(state, "pending") else {
            return Vec::new();
        };
        let parent = ctx.parent();
        let mut kinds = Vec::new();
        for entry in pending {
            let Some(fields) = entry.as_record() else { continue };
            let op = fields.get("op").and_then(Value::as_text).unwrap_or("");
            let Some(name) = fields.get("name").and_then(Value::as_text) else { continue };
            match op {
                "add" => {
                    kinds.push(StructureChangeKind::AddModel {
                        parent: parent.clone(),
                        name: name.to_owned(),
                        spec: self.worker_spec(),
                        init: InitDirective::Contextual {
                            initializer: "idle_processor".to_owned(),
                            params: ParamMap::new(),
                        },
                    });
                    kinds.push(StructureChangeKind::AddCoupling {
                        scope: parent.clone(),
                        coupling: Coupling::new(
                            PortRef::component(self.source.clone(), self.source_port.clone()),
                            PortRef::component(name, "in"),
                        ),
                    });
                    kinds.push(StructureChangeKind::AddCoupling {
                        scope: parent.clone(),
                        coupling: Coupling::new(
                            PortRef::component(name, "load"),
                            PortRef::component(ctx.self_name(), "load"),
                        ),
                    });
                }
                "remove" => {
                    kinds.push(StructureChangeKind::RemoveModel { target: parent.child(name) });
                }
                _ => {}
            }
        }
        kinds
    }

    fn observables(&self, state: &StateValue) -> BTreeMap<String, Value> {
        let mut map = BTreeMap::new();
        if let Some(v) = state.field("workers") {
            map.insert("workers".to_owned(), v.clone());
        }
        map
    }
}

pub(super) fn register(catalog: &mut BehaviorCatalog) {
    catalog.register_behavior(
        "pool_executive",
        vec![
            ParamSpec::required("queue_threshold", ParamKind::Integer),
            ParamSpec::required("max_workers", ParamKind::Integer),
            ParamSpec::required("worker_service", ParamKind::Time),
            ParamSpec::optional("observation_period", ParamKind::Time),
            ParamSpec::optional("source", ParamKind::Text),
            ParamSpec::optional("source_port", ParamKind::Text),
            ParamSpec::optional("worker_prefix", ParamKind::Text),
            ParamSpec::optional("job_type", ParamKind::Type),
            ParamSpec::optional("initial_workers", ParamKind::Integer),
        ],
        |p| {
            let queue_threshold = params::integer_positive(p, "queue_threshold")?;
            let max_workers = params::integer_positive(p, "max_workers")?;
            let worker_service = params::time_finite_positive(p, "worker_service")?
                .value()
                .expect("checked finite");
            let observation_period = if p.contains_key("observation_period") {
                params::time_finite_positive(p, "observation_period")?
                    .value()
                    .expect("checked finite")
            } else {
                worker_service
            };
            let initial_workers = match p.get("initial_workers").map(|v| v.as_integer()) {
                None => 1,
                Some(Some(v)) if v >= 0 => v,
                _ => {
                    return Err(BehaviorError::Parameter(
                        "`initial_workers` must be a non-negative integer".into(),
                    ))
                }
            };
            let behavior = PoolExecutiveBehavior {
                queue_threshold,
                max_workers,
                worker_service,
                observation_period,
                source: params::text_or(p, "source", "source").to_owned(),
                source_port: params::text_or(p, "source_port", "out").to_owned(),
                worker_prefix: params::text_or(p, "worker_prefix", "w").to_owned(),
                job_type: params::type_or(p, "job_type", ValueTypeTag::Integer),
            };
            let initial_state = behavior.initial_state(initial_workers);
            Ok(BehaviorParts {
                input_ports: BTreeMap::from([("load".to_owned(), ValueTypeTag::Integer)]),
                output_ports: BTreeMap::new(),
                behavior: Arc::new(behavior),
                initial_state,
            })
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::AtomicProcessor;
    use crate::message::Message;
    use crate::model::Mode;
    use crate::path::ModelPath;

    fn make(threshold: i64, max_workers: i64) -> AtomicProcessor {
        let catalog = BehaviorCatalog::standard();
        let spec = catalog
            .make(&AtomicModelSpec::new(
                "pool_executive",
                ParamMap::from([
                    ("queue_threshold".to_owned(), ParamValue::Value(Value::Integer(threshold))),
                    ("max_workers".to_owned(), ParamValue::Value(Value::Integer(max_workers))),
                    ("worker_service".to_owned(), ParamValue::Value(Value::Integer(1))),
                ]),
            ))
            .unwrap();
        let mut p = AtomicProcessor::new(ModelPath::parse("/exec").unwrap(), spec);
        p.init(SimTime::ZERO).unwrap();
        p
    }

    fn load(v: i64) -> Bag {
        Bag::of([Message::new("load", Value::Integer(v))])
    }

    #[test]
    fn spawns_once_when_threshold_crossed() {
        let mut p = make(2, 3);
        let out = p.transition(SimTime::finite(0.5).unwrap(), &load(3), Mode::Parallel, 100).unwrap();
        let adds: Vec<_> = out
            .requests
            .iter()
            .filter(|r| matches!(r.kind, StructureChangeKind::AddModel { .. }))
            .collect();
        let couplings = out
            .requests
            .iter()
            .filter(|r| matches!(r.kind, StructureChangeKind::AddCoupling { .. }))
            .count();
        assert_eq!(adds.len(), 1);
        assert_eq!(couplings, 2);
        match &adds[0].kind {
            StructureChangeKind::AddModel { name, parent, init, .. } => {
                assert_eq!(name, "w2");
                assert!(parent.is_root());
                assert!(matches!(init, InitDirective::Contextual { initializer, .. }
                    if initializer == "idle_processor"));
            }
            _ => unreachable!(),
        }
        // The pending intents clear on the zero-delay internal event and are
        // not re-issued.
        assert_eq!(p.t_next(), SimTime::finite(0.5).unwrap());
        let out = p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        assert!(out.requests.is_empty());
        // Below-threshold traffic never spawns.
        let out = p.transition(SimTime::finite(0.8).unwrap(), &load(2), Mode::Parallel, 100).unwrap();
        assert!(out.requests.is_empty());
    }

    #[test]
    fn respects_max_workers() {
        let mut p = make(1, 2);
        let out = p.transition(SimTime::finite(0.2).unwrap(), &load(5), Mode::Parallel, 100).unwrap();
        assert_eq!(out.requests.len(), 3); // one spawn: add + 2 couplings
        p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        // workers now at max (2): further load spawns nothing
        let out = p.transition(SimTime::finite(0.4).unwrap(), &load(9), Mode::Parallel, 100).unwrap();
        assert!(out.requests.is_empty());
    }

    #[test]
    fn silent_period_retires_newest_worker() {
        let mut p = make(1, 3);
        p.transition(SimTime::finite(0.2).unwrap(), &load(5), Mode::Parallel, 100).unwrap();
        p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        // First tick still saw the report that caused the spawn: no removal.
        let tick = p.t_next();
        assert_eq!(tick, SimTime::finite(1.0).unwrap());
        let out = p.transition(tick, &Bag::new(), Mode::Parallel, 100).unwrap();
        assert!(out.requests.is_empty());
        // The next full period is silent: retire the newest spawned worker.
        let tick = p.t_next();
        assert_eq!(tick, SimTime::finite(2.0).unwrap());
        let out = p.transition(tick, &Bag::new(), Mode::Parallel, 100).unwrap();
        assert_eq!(out.requests.len(), 1);
        match &out.requests[0].kind {
            StructureChangeKind::RemoveModel { target } => {
                assert_eq!(target.to_string(), "/w2");
            }
            other => panic!("expected RemoveModel, got {other:?}"),
        }
        // Clear the pending intent, then verify later silence removes nothing
        // (only one worker remains).
        p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        let out = p.transition(p.t_next(), &Bag::new(), Mode::Parallel, 100).unwrap();
        assert!(out.requests.is_empty());
    }
}
