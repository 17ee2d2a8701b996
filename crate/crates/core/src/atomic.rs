//! The atomic model contract and its per-model processor.
//!
//! A behavior supplies the transition functions, output function, and time
//! advance; all of them are pure, so replaying the same inputs from the same
//! state reproduces the same trajectory. The processor owns the mutable
//! bookkeeping: current state, time of last event, time of next event.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{BehaviorError, SimError};
use crate::message::Bag;
use crate::model::{AtomicModelSpec, Mode};
use crate::path::ModelPath;
use crate::structure::{StructureChangeKind, StructureChangeRequest};
use crate::time::SimTime;
use crate::value::{check_value, StateValue, Value, ValueTypeTag};

/// Context handed to [`AtomicBehavior::structure_intent`] so a behavior can
/// address its own position in the tree without storing it in state.
pub struct IntentContext<'a> {
    pub self_path: &'a ModelPath,
}

impl IntentContext<'_> {
    /// The enclosing network (root if the model sits at top level).
    pub fn parent(&self) -> ModelPath {
        self.self_path.parent().unwrap_or_else(ModelPath::root)
    }

    pub fn self_name(&self) -> &str {
        self.self_path.leaf().unwrap_or("")
    }
}

/// The behavioral contract of an atomic model.
///
/// Implementations must be pure: equal inputs give equal outputs. State goes
/// in and out as plain record values; the kernel owns when each function
/// runs and never lets a behavior mutate anything else.
pub trait AtomicBehavior: Send + Sync {
    /// Internal transition, fired when the model is imminent with no input.
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError>;

    /// External transition: input arrived `elapsed` after the last event.
    fn delta_ext(
        &self,
        state: &StateValue,
        elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError>;

    /// Confluent transition: input arrived exactly at the scheduled internal
    /// event (parallel mode). Default resolves internal-first.
    fn delta_con(&self, state: &StateValue, input: &Bag) -> Result<StateValue, BehaviorError> {
        let after_internal = self.delta_int(state)?;
        self.delta_ext(&after_internal, SimTime::ZERO, input)
    }

    /// Output function; runs strictly before the transition it announces.
    fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError>;

    /// Time advance: how long the model rests in `state` absent input.
    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError>;

    /// Structure changes this state wants applied at the end of the current
    /// step. Most behaviors never request any.
    fn structure_intent(
        &self,
        _state: &StateValue,
        _ctx: &IntentContext<'_>,
    ) -> Vec<StructureChangeKind> {
        Vec::new()
    }

    /// Read-only fields exported to context snapshots (e.g. a queue length).
    fn observables(&self, _state: &StateValue) -> BTreeMap<String, Value> {
        BTreeMap::new()
    }
}

/// Executable embodiment of an atomic tuple: typed ports, behavior, and the
/// state the model boots in.
#[derive(Clone)]
pub struct AtomicSpec {
    pub input_ports: BTreeMap<String, ValueTypeTag>,
    pub output_ports: BTreeMap<String, ValueTypeTag>,
    pub behavior: Arc<dyn AtomicBehavior>,
    pub initial_state: StateValue,
    /// Declarative origin; used for digests and structure records.
    pub source: AtomicModelSpec,
}

impl std::fmt::Debug for AtomicSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AtomicSpec")
            .field("behavior", &self.source.behavior)
            .field("input_ports", &self.input_ports)
            .field("output_ports", &self.output_ports)
            .field("initial_state", &self.initial_state)
            .finish()
    }
}

/// Which transition a step performed for one atomic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Internal,
    External,
    Confluent,
}

impl TransitionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionKind::Internal => "internal",
            TransitionKind::External => "external",
            TransitionKind::Confluent => "confluent",
        }
    }
}

/// Result of one atomic transition.
#[derive(Debug)]
pub struct TransitionOutcome {
    pub kind: TransitionKind,
    /// Elapsed time passed to delta_ext, when one was involved.
    pub elapsed: Option<SimTime>,
    pub requests: Vec<StructureChangeRequest>,
}

/// The "simulator" processor driving one atomic model.
pub struct AtomicProcessor {
    pub path: ModelPath,
    spec: AtomicSpec,
    state: StateValue,
    t_last: SimTime,
    t_next: SimTime,
    seq_counter: u64,
    /// (time, transitions seen at that time) for the zero-delay guard.
    same_time_transitions: (SimTime, u32),
}

impl AtomicProcessor {
    /// Builds an uninitialized processor; [`AtomicProcessor::init`] must run
    /// before it participates in a step.
    pub fn new(path: ModelPath, spec: AtomicSpec) -> AtomicProcessor {
        let initial = spec.initial_state.clone();
        AtomicProcessor {
            path,
            spec,
            state: initial,
            t_last: SimTime::ZERO,
            t_next: SimTime::ZERO,
            seq_counter: 0,
            same_time_transitions: (SimTime::ZERO, 0),
        }
    }

    pub fn spec(&self) -> &AtomicSpec {
        &self.spec
    }

    /// Ports are per-instance and may be reshaped at runtime by structure
    /// changes.
    pub(crate) fn ports_mut(
        &mut self,
        direction: crate::port::Direction,
    ) -> &mut BTreeMap<String, ValueTypeTag> {
        match direction {
            crate::port::Direction::Input => &mut self.spec.input_ports,
            crate::port::Direction::Output => &mut self.spec.output_ports,
        }
    }

    pub fn state(&self) -> &StateValue {
        &self.state
    }

    pub fn t_last(&self) -> SimTime {
        self.t_last
    }

    pub fn t_next(&self) -> SimTime {
        self.t_next
    }

    pub fn observables(&self) -> BTreeMap<String, Value> {
        self.spec.behavior.observables(&self.state)
    }

    fn checked_ta(&self, state: &StateValue) -> Result<SimTime, SimError> {
        let ta = self
            .spec
            .behavior
            .ta(state)
            .map_err(|e| self.contract_violation(format!("ta failed: {e}")))?;
        if let SimTime::Finite(v) = ta {
            if v < 0.0 || v.is_nan() {
                return Err(self.contract_violation(format!("ta returned {v}, must be >= 0")));
            }
        }
        Ok(ta)
    }

    fn contract_violation(&self, detail: String) -> SimError {
        SimError::ModelContractViolation { model: self.path.clone(), detail }
    }

    /// (Re)initializes at time `t`: boot state, `t_last = t`,
    /// `t_next = t + ta(initial)`.
    pub fn init(&mut self, t: SimTime) -> Result<(), SimError> {
        self.state = self.spec.initial_state.clone();
        self.init_with_state(t, self.state.clone())
    }

    /// Initialization with an externally computed state (dynamic insertion).
    pub fn init_with_state(&mut self, t: SimTime, state: StateValue) -> Result<(), SimError> {
        let ta = self.checked_ta(&state)?;
        self.state = state;
        self.t_last = t;
        self.t_next = t + ta;
        self.seq_counter = 0;
        self.same_time_transitions = (t, 0);
        Ok(())
    }

    /// Runs the output function. Only legal when the model is imminent, and
    /// never mutates state: output strictly precedes the transition.
    pub fn collect_output(&self, t: SimTime) -> Result<Bag, SimError> {
        if t != self.t_next {
            return Err(SimError::ProtocolViolation {
                model: self.path.clone(),
                detail: format!("collect_output at t={t}, but t_next={}", self.t_next),
            });
        }
        let bag = self
            .spec
            .behavior
            .lambda(&self.state)
            .map_err(|e| self.contract_violation(format!("lambda failed: {e}")))?;
        for message in bag.iter() {
            let Some(tag) = self.spec.output_ports.get(&message.port) else {
                return Err(self.contract_violation(format!(
                    "lambda emitted on undeclared output port `{}`",
                    message.port
                )));
            };
            if let Err(detail) = check_value(&message.value, tag) {
                return Err(self.contract_violation(format!(
                    "lambda output on port `{}` ill-typed: {detail}",
                    message.port
                )));
            }
        }
        Ok(bag)
    }

    /// Performs the transition dispatched by time and input:
    ///
    /// * empty input at `t = t_next` — internal;
    /// * input before `t_next` — external with `e = t - t_last`;
    /// * input at exactly `t_next` — confluent in parallel mode, external in
    ///   classic mode (classic resolves collisions by serialization).
    pub fn transition(
        &mut self,
        t: SimTime,
        input: &Bag,
        mode: Mode,
        zero_delay_limit: u32,
    ) -> Result<TransitionOutcome, SimError> {
        if t < self.t_last || t > self.t_next {
            return Err(SimError::ProtocolViolation {
                model: self.path.clone(),
                detail: format!(
                    "transition at t={t} outside [{}, {}]",
                    self.t_last, self.t_next
                ),
            });
        }
        if input.is_empty() && t != self.t_next {
            return Err(SimError::ProtocolViolation {
                model: self.path.clone(),
                detail: format!("empty-input transition at t={t} but t_next={}", self.t_next),
            });
        }
        for message in input.iter() {
            let Some(tag) = self.spec.input_ports.get(&message.port) else {
                return Err(SimError::RoutingError {
                    model: self.path.clone(),
                    detail: format!("message delivered to undeclared input port `{}`", message.port),
                });
            };
            if let Err(detail) = check_value(&message.value, tag) {
                return Err(SimError::TypeMismatch {
                    model: self.path.clone(),
                    detail: format!("input on port `{}`: {detail}", message.port),
                });
            }
        }

        // Zero-delay livelock guard: unbounded repeats at one instant are a
        // model bug, not a schedule.
        if self.same_time_transitions.0 == t {
            self.same_time_transitions.1 += 1;
        } else {
            self.same_time_transitions = (t, 1);
        }
        if self.same_time_transitions.1 > zero_delay_limit {
            return Err(SimError::LivelockSuspected {
                model: self.path.clone(),
                time: t,
                count: self.same_time_transitions.1,
            });
        }

        let behavior = Arc::clone(&self.spec.behavior);
        let (kind, elapsed, next_state) = if input.is_empty() {
            let next = behavior
                .delta_int(&self.state)
                .map_err(|e| self.contract_violation(format!("delta_int failed: {e}")))?;
            (TransitionKind::Internal, None, next)
        } else if t == self.t_next && mode == Mode::Parallel {
            let next = behavior
                .delta_con(&self.state, input)
                .map_err(|e| self.contract_violation(format!("delta_con failed: {e}")))?;
            (TransitionKind::Confluent, None, next)
        } else {
            let elapsed = t.since(self.t_last)?;
            let next = behavior
                .delta_ext(&self.state, elapsed, input)
                .map_err(|e| self.contract_violation(format!("delta_ext failed: {e}")))?;
            (TransitionKind::External, Some(elapsed), next)
        };

        let ta = self.checked_ta(&next_state)?;
        self.state = next_state;
        self.t_last = t;
        self.t_next = t + ta;

        let ctx = IntentContext { self_path: &self.path };
        let requests = behavior
            .structure_intent(&self.state, &ctx)
            .into_iter()
            .map(|kind| {
                self.seq_counter += 1;
                StructureChangeRequest {
                    requester: self.path.clone(),
                    seq: self.seq_counter,
                    kind,
                }
            })
            .collect();

        Ok(TransitionOutcome { kind, elapsed, requests })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::model::ParamMap;

    /// Minimal periodic emitter used by kernel unit tests; independent of the
    /// behavior library.
    pub struct TickBehavior {
        pub period: f64,
    }

    impl AtomicBehavior for TickBehavior {
        fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
            let n = state.field("count").and_then(Value::as_integer).unwrap_or(0);
            Ok(state
                .with_field("count", Value::Integer(n + 1))
                .with_field("sigma", Value::Real(self.period)))
        }

        fn delta_ext(
            &self,
            state: &StateValue,
            elapsed: SimTime,
            _input: &Bag,
        ) -> Result<StateValue, BehaviorError> {
            let sigma = state.field("sigma").and_then(Value::as_real).unwrap_or(0.0);
            let e = elapsed.value().unwrap_or(0.0);
            Ok(state.with_field("sigma", Value::Real(sigma - e)))
        }

        fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError> {
            let n = state.field("count").and_then(Value::as_integer).unwrap_or(0);
            Ok(Bag::of([crate::message::Message::new("out", Value::Integer(n))]))
        }

        fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
            let sigma = state.field("sigma").and_then(Value::as_real).unwrap_or(0.0);
            Ok(SimTime::Finite(sigma))
        }
    }

    pub fn tick_spec(period: f64) -> AtomicSpec {
        AtomicSpec {
            input_ports: BTreeMap::from([("in".to_owned(), ValueTypeTag::Integer)]),
            output_ports: BTreeMap::from([("out".to_owned(), ValueTypeTag::Integer)]),
            behavior: Arc::new(TickBehavior { period }),
            initial_state: StateValue::new([
                ("count".to_owned(), Value::Integer(0)),
                ("sigma".to_owned(), Value::Real(period)),
            ]),
            source: AtomicModelSpec::new("tick", ParamMap::new()),
        }
    }
}
