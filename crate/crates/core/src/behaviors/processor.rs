//! FIFO single-server: accepts jobs on `in`, serves one at a time for
//! `service_time`, emits the finished job on `done` plus its current queue
//! length on `load`.
//!
//! The confluent case (a job arriving exactly as one finishes) uses the
//! internal-first default: the finished job leaves, then arrivals enqueue.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atomic::AtomicBehavior;
use crate::catalog::{params, BehaviorCatalog, BehaviorParts, ParamKind, ParamSpec};
use crate::error::BehaviorError;
use crate::message::{Bag, Message};
use crate::structure::ContextSnapshot;
use crate::time::SimTime;
use crate::value::{StateValue, Value, ValueTypeTag};

use super::{get_int, get_list, get_real, get_text};

pub struct ProcessorBehavior {
    pub service_time: f64,
    /// Maximum number of waiting jobs (the one in service not counted);
    /// `None` means unbounded.
    pub queue_capacity: Option<i64>,
}

impl ProcessorBehavior {
    pub fn idle_state() -> StateValue {
        StateValue::new([
            ("phase".to_owned(), Value::Text("idle".into())),
            ("sigma".to_owned(), Value::Real(0.0)),
            ("current".to_owned(), Value::List(Vec::new())),
            ("queue".to_owned(), Value::List(Vec::new())),
            ("in_count".to_owned(), Value::Integer(0)),
            ("done_count".to_owned(), Value::Integer(0)),
            ("drop_count".to_owned(), Value::Integer(0)),
        ])
    }

    fn is_busy(state: &StateValue) -> Result<bool, BehaviorError> {
        Ok(get_text(state, "phase")? == "busy")
    }
}

impl AtomicBehavior for ProcessorBehavior {
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
        if !Self::is_busy(state)? {
            return Err(BehaviorError::State("internal event while idle".into()));
        }
        let done = get_int(state, "done_count")? + 1;
        let mut queue = get_list(state, "queue")?.to_vec();
        let state = state.with_field("done_count", Value::Integer(done));
        Ok(if queue.is_empty() {
            state
                .with_field("phase", Value::Text("idle".into()))
                .with_field("current", Value::List(Vec::new()))
                .with_field("sigma", Value::Real(0.0))
        } else {
            let next = queue.remove(0);
            state
                .with_field("current", Value::List(vec![next]))
                .with_field("queue", Value::List(queue))
                .with_field("sigma", Value::Real(self.service_time))
        })
    }

    fn delta_ext(
        &self,
        state: &StateValue,
        elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError> {
        let mut state = state.clone();
        let e = elapsed.value().unwrap_or(0.0);
        if Self::is_busy(&state)? {
            let sigma = get_real(&state, "sigma")?;
            state = state.with_field("sigma", Value::Real(sigma - e));
        }
        for message in input.on_port("in") {
            let arrived = get_int(&state, "in_count")? + 1;
            state = state.with_field("in_count", Value::Integer(arrived));
            if !Self::is_busy(&state)? {
                state = state
                    .with_field("phase", Value::Text("busy".into()))
                    .with_field("current", Value::List(vec![message.value.clone()]))
                    .with_field("sigma", Value::Real(self.service_time));
            } else {
                let mut queue = get_list(&state, "queue")?.to_vec();
                if self.queue_capacity.is_some_and(|cap| queue.len() as i64 >= cap) {
                    let drops = get_int(&state, "drop_count")? + 1;
                    state = state.with_field("drop_count", Value::Integer(drops));
                } else {
                    queue.push(message.value.clone());
                    state = state.with_field("queue", Value::List(queue));
                }
            }
        }
        Ok(state)
    }

    fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError> {
        if !Self::is_busy(state)? {
            return Ok(Bag::new());
        }
        let current = get_list(state, "current")?;
        let job = current
            .first()
            .ok_or_else(|| BehaviorError::State("busy with no current job".into()))?;
        let waiting = get_list(state, "queue")?.len() as i64;
        Ok(Bag::of([
            Message::new("done", job.clone()),
            Message::new("load", Value::Integer(waiting)),
        ]))
    }

    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
        if Self::is_busy(state)? {
            SimTime::finite(get_real(state, "sigma")?)
                .map_err(|e| BehaviorError::State(e.to_string()))
        } else {
            Ok(SimTime::INFINITY)
        }
    }

    fn observables(&self, state: &StateValue) -> BTreeMap<String, Value> {
        let mut map = BTreeMap::new();
        if let Ok(queue) = get_list(state, "queue") {
            map.insert("queue_length".to_owned(), Value::Integer(queue.len() as i64));
        }
        if let Some(drops) = state.field("drop_count") {
            map.insert("drops".to_owned(), drops.clone());
        }
        map
    }
}

pub(super) fn register(catalog: &mut BehaviorCatalog) {
    catalog.register_behavior(
        "processor",
        vec![
            ParamSpec::required("service_time", ParamKind::Time),
            ParamSpec::optional("queue_capacity", ParamKind::Integer),
            ParamSpec::optional("job_type", ParamKind::Type),
        ],
        |p| {
            let service = params::time_finite_positive(p, "service_time")?;
            let capacity = if p.contains_key("queue_capacity") {
                Some(params::integer_positive(p, "queue_capacity")?)
            } else {
                None
            };
            let job_type = params::type_or(p, "job_type", ValueTypeTag::Integer);
            Ok(BehaviorParts {
                input_ports: BTreeMap::from([("in".to_owned(), job_type.clone())]),
                output_ports: BTreeMap::from([
                    ("done".to_owned(), job_type),
                    ("load".to_owned(), ValueTypeTag::Integer),
                ]),
                behavior: Arc::new(ProcessorBehavior {
                    service_time: service.value().expect("checked finite"),
                    queue_capacity: capacity,
                }),
                initial_state: ProcessorBehavior::idle_state(),
            })
        },
    );

    // Contextual initializer used by the pool executive: a worker born idle
    // at insertion time, whatever the surrounding system looks like.
    catalog.register_initializer("idle_processor", |_params, _snapshot: &ContextSnapshot| {
        Ok(ProcessorBehavior::idle_state())
    });
}
