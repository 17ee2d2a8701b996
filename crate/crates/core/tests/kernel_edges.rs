//! Kernel edge cases: empty and passive networks, the zero-delay guard,
//! classic-mode limits, and the confluent dispatch proven by an instrumented
//! counting behavior.

use std::collections::BTreeMap;
use std::sync::Arc;

use devsim_core::behaviors::ProcessorBehavior;
use devsim_core::catalog::{BehaviorParts, ParamKind, ParamSpec};
use devsim_core::{
    instantiate, parse_model, AtomicBehavior, Bag, BehaviorCatalog, BehaviorError, Engine,
    HaltReason, MemorySink, ModelPath, ModelSpec, NullSink, Processor, RecordKind, SimError,
    SimTime, StateValue, Value, ValueTypeTag,
};

fn run_text(text: &str, catalog: BehaviorCatalog) -> (MemorySink, Result<devsim_core::RunSummary, SimError>) {
    let catalog = Arc::new(catalog);
    let document = parse_model(text, &catalog).unwrap();
    let mut engine = Engine::new(document, catalog).unwrap().with_zero_delay_limit(100);
    let mut sink = MemorySink::new();
    let result = engine.run(&mut sink);
    (sink, result)
}

#[test]
fn empty_model_halts_immediately_as_all_passive() {
    let (sink, result) = run_text("devsim 1\nmode parallel\nnetwork {\n}\n", BehaviorCatalog::standard());
    let summary = result.unwrap();
    assert_eq!(summary.halt, HaltReason::AllPassive);
    assert_eq!(summary.clock, SimTime::ZERO);
    assert_eq!(summary.steps, 0);
    let halt = sink.records.last().unwrap();
    assert_eq!(halt.render(), "0\thalt\t/\treason=all_passive");
}

#[test]
fn all_passive_network_halts_without_events() {
    let text = "\
devsim 1
mode parallel
network {
  component idle = processor(service_time=1)
}
";
    let (sink, result) = run_text(text, BehaviorCatalog::standard());
    assert_eq!(result.unwrap().halt, HaltReason::AllPassive);
    assert!(sink.records.iter().all(|r| !r.kind.is_transition()));
}

#[test]
fn step_limit_halts_the_run() {
    let text = "\
devsim 1
mode parallel
stop steps 3

network {
  component gen = generator(period=1, value=1)
}
";
    let (sink, result) = run_text(text, BehaviorCatalog::standard());
    let summary = result.unwrap();
    assert_eq!(summary.halt, HaltReason::StepLimit);
    assert_eq!(summary.steps, 3);
    assert_eq!(sink.records.last().unwrap().get("reason"), Some("step_limit"));
}

#[test]
fn router_self_loop_trips_the_livelock_guard() {
    let text = "\
devsim 1
mode parallel
stop time 10

network {
  component gen = generator(period=1, value=1, limit=1)
  component loopy = router(out_ports=\"back\")
  couple gen.out -> loopy.in
  couple loopy.back -> loopy.in
}
";
    let (sink, result) = run_text(text, BehaviorCatalog::standard());
    let err = result.unwrap_err();
    assert!(matches!(err, SimError::LivelockSuspected { .. }), "{err}");
    let error_record = sink.records.last().unwrap();
    assert_eq!(error_record.kind, RecordKind::Error);
    assert_eq!(error_record.model.to_string(), "/loopy");
}

#[test]
fn classic_rejects_multi_message_delivery_in_one_micro_step() {
    // A burst generator emits two messages in one output bag; classically a
    // receiver may see at most one message per micro-step.
    let text = "\
devsim 1
mode classic
stop time 5

network {
  component burst = generator(period=2, value=1, count=2)
  component proc = processor(service_time=1)
  couple burst.out -> proc.in
  select [burst, proc]
}
";
    let (_, result) = run_text(text, BehaviorCatalog::standard());
    let err = result.unwrap_err();
    assert!(matches!(err, SimError::ClassicSemanticsViolation { .. }), "{err}");
}

#[test]
fn coordinator_schedule_examples() {
    let catalog = BehaviorCatalog::standard();
    let text = std::fs::read_to_string(format!(
        "{}/../../models/gpt.devs",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    let document = parse_model(&text, &catalog).unwrap();
    let root = instantiate(&ModelSpec::Coupled(document.root), ModelPath::root(), &catalog).unwrap();
    let Processor::Coupled(mut coordinator) = root else { unreachable!() };
    coordinator.init(SimTime::ZERO).unwrap();
    assert_eq!(coordinator.t_next(), SimTime::Finite(2.0));
    assert_eq!(coordinator.imminent_set(), vec!["gen"]);

    // Two generators started together are both imminent.
    let twin_text = "\
devsim 1
mode parallel
network {
  component a = generator(period=2, value=1)
  component b = generator(period=2, value=1)
}
";
    let twins = parse_model(twin_text, &catalog).unwrap();
    let root = instantiate(&ModelSpec::Coupled(twins.root), ModelPath::root(), &catalog).unwrap();
    let Processor::Coupled(mut coordinator) = root else { unreachable!() };
    coordinator.init(SimTime::ZERO).unwrap();
    assert_eq!(coordinator.imminent_set(), vec!["a", "b"]);

    // A passive network has no imminent components.
    let idle_text = "devsim 1\nmode parallel\nnetwork {\n  component p = processor(service_time=1)\n}\n";
    let idle = parse_model(idle_text, &catalog).unwrap();
    let root = instantiate(&ModelSpec::Coupled(idle.root), ModelPath::root(), &catalog).unwrap();
    let Processor::Coupled(mut coordinator) = root else { unreachable!() };
    coordinator.init(SimTime::ZERO).unwrap();
    assert_eq!(coordinator.t_next(), SimTime::INFINITY);
    assert!(coordinator.imminent_set().is_empty());
}

/// Wraps another behavior and counts which transition functions ran, inside
/// the state itself so purity is preserved.
struct CountingBehavior {
    inner: Arc<dyn AtomicBehavior>,
}

impl CountingBehavior {
    fn wrap(state: &StateValue, inner: StateValue) -> StateValue {
        state.with_field("inner", inner.value().clone())
    }

    fn inner_state(state: &StateValue) -> Result<StateValue, BehaviorError> {
        let value = state
            .field("inner")
            .cloned()
            .ok_or_else(|| BehaviorError::State("missing inner state".into()))?;
        StateValue::from_value(value).map_err(|e| BehaviorError::State(e.to_string()))
    }

    fn bump(state: &StateValue, counter: &str) -> StateValue {
        let current = state.field(counter).and_then(Value::as_integer).unwrap_or(0);
        state.with_field(counter, Value::Integer(current + 1))
    }
}

impl AtomicBehavior for CountingBehavior {
    fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
        let inner = self.inner.delta_int(&Self::inner_state(state)?)?;
        Ok(Self::bump(&Self::wrap(state, inner), "int_count"))
    }

    fn delta_ext(
        &self,
        state: &StateValue,
        elapsed: SimTime,
        input: &Bag,
    ) -> Result<StateValue, BehaviorError> {
        let inner = self.inner.delta_ext(&Self::inner_state(state)?, elapsed, input)?;
        Ok(Self::bump(&Self::wrap(state, inner), "ext_count"))
    }

    fn delta_con(&self, state: &StateValue, input: &Bag) -> Result<StateValue, BehaviorError> {
        let inner = self.inner.delta_con(&Self::inner_state(state)?, input)?;
        Ok(Self::bump(&Self::wrap(state, inner), "con_count"))
    }

    fn lambda(&self, state: &StateValue) -> Result<Bag, BehaviorError> {
        self.inner.lambda(&Self::inner_state(state)?)
    }

    fn ta(&self, state: &StateValue) -> Result<SimTime, BehaviorError> {
        self.inner.ta(&Self::inner_state(state)?)
    }
}

fn counting_catalog() -> BehaviorCatalog {
    let mut catalog = BehaviorCatalog::standard();
    catalog.register_behavior(
        "counting_processor",
        vec![ParamSpec::required("service_time", ParamKind::Time)],
        |p| {
            let service = p
                .get("service_time")
                .and_then(|v| v.as_time())
                .and_then(|t| t.value())
                .ok_or_else(|| BehaviorError::Parameter("`service_time` must be finite".into()))?;
            let inner: Arc<dyn AtomicBehavior> =
                Arc::new(ProcessorBehavior { service_time: service, queue_capacity: None });
            let initial = StateValue::new([
                ("inner".to_owned(), ProcessorBehavior::idle_state().value().clone()),
                ("int_count".to_owned(), Value::Integer(0)),
                ("ext_count".to_owned(), Value::Integer(0)),
                ("con_count".to_owned(), Value::Integer(0)),
            ]);
            Ok(BehaviorParts {
                input_ports: BTreeMap::from([("in".to_owned(), ValueTypeTag::Integer)]),
                output_ports: BTreeMap::from([
                    ("done".to_owned(), ValueTypeTag::Integer),
                    ("load".to_owned(), ValueTypeTag::Integer),
                ]),
                behavior: Arc::new(CountingBehavior { inner }),
                initial_state: initial,
            })
        },
    );
    catalog
}

#[test]
fn collision_invokes_delta_con_exactly_once() {
    // service 2, arrivals every 2: the job arriving at t=4 lands exactly at
    // the completion instant.
    let text = "\
devsim 1
mode parallel
stop time 4

network {
  component gen = generator(period=2, value=7)
  component proc = counting_processor(service_time=2)
  couple gen.out -> proc.in
}
";
    let catalog = Arc::new(counting_catalog());
    let document = parse_model(text, &catalog).unwrap();
    let mut engine = Engine::new(document, catalog).unwrap();
    let mut sink = MemorySink::new();
    engine.run(&mut sink).unwrap();

    let confluent: Vec<_> = sink
        .records
        .iter()
        .filter(|r| r.kind == RecordKind::Confluent && r.model.to_string() == "/proc")
        .collect();
    assert_eq!(confluent.len(), 1);
    assert_eq!(confluent[0].time, SimTime::Finite(4.0));

    // The completed job left in the same step as the collision.
    let done_at_4 = sink.records.iter().any(|r| {
        r.kind == RecordKind::Output
            && r.model.to_string() == "/proc"
            && r.get("port") == Some("done")
            && r.time == SimTime::Finite(4.0)
    });
    assert!(done_at_4);

    // The instrumented state proves one delta_con invocation and shows the
    // collision was not decomposed into observable int+ext calls at t=4.
    let proc = engine.root().find(&ModelPath::parse("/proc").unwrap()).unwrap();
    let Processor::Atomic(atomic) = proc else { unreachable!() };
    assert_eq!(atomic.state().field("con_count"), Some(&Value::Integer(1)));
    assert_eq!(atomic.state().field("int_count"), Some(&Value::Integer(0)));
    assert_eq!(atomic.state().field("ext_count"), Some(&Value::Integer(1)));
}

#[test]
fn negative_time_advance_is_a_contract_violation() {
    struct BrokenTa;
    impl AtomicBehavior for BrokenTa {
        fn delta_int(&self, state: &StateValue) -> Result<StateValue, BehaviorError> {
            Ok(state.clone())
        }
        fn delta_ext(
            &self,
            state: &StateValue,
            _elapsed: SimTime,
            _input: &Bag,
        ) -> Result<StateValue, BehaviorError> {
            Ok(state.clone())
        }
        fn lambda(&self, _state: &StateValue) -> Result<Bag, BehaviorError> {
            Ok(Bag::new())
        }
        fn ta(&self, _state: &StateValue) -> Result<SimTime, BehaviorError> {
            Ok(SimTime::Finite(-1.0))
        }
    }

    let mut catalog = BehaviorCatalog::empty();
    catalog.register_behavior("broken", vec![], |_| {
        Ok(BehaviorParts {
            input_ports: BTreeMap::new(),
            output_ports: BTreeMap::new(),
            behavior: Arc::new(BrokenTa),
            initial_state: StateValue::new([]),
        })
    });
    let catalog = Arc::new(catalog);
    let document = parse_model("devsim 1\nmode parallel\nnetwork {\n  component b = broken()\n}\n", &catalog).unwrap();
    let mut engine = Engine::new(document, catalog).unwrap();
    let err = engine.init(&mut NullSink).unwrap_err();
    assert!(matches!(err, SimError::ModelContractViolation { .. }), "{err}");
}
