//! The root coordinator: step execution, both semantics, and the run loop.
//!
//! A parallel step runs in phases: collect outputs from every imminent
//! component, route all messages, transition every activated component,
//! apply the step's structure requests, recompute times. A classic step is
//! one micro-step: the tie-breaking order picks a single imminent component,
//! only its output fires, and simultaneous events are exhausted by repeated
//! micro-steps at the same clock value.
//!
//! Phase work over the children of one coordinator is data-independent, so
//! with the `parallel` feature the collect and transition loops can fan out
//! over rayon; results are merged in child order, keeping traces
//! byte-identical to the sequential path.

use std::sync::Arc;

use crate::atomic::{AtomicProcessor, TransitionKind};
use crate::catalog::BehaviorCatalog;
use crate::coupled::{instantiate, validate_tree, ChildSlot, Coordinator, Processor};
use crate::error::{SimError, UsageError};
use crate::flatten::flatten;
use crate::message::{Bag, Message};
use crate::model::{
    Coupling, CoupledModelSpec, Mode, ModelDocument, ModelSpec, PortRef, StopCondition,
};
use crate::path::ModelPath;
use crate::structure::{apply_batch, Authority, ChangePolicy, StructureChangeRequest};
use crate::time::SimTime;
use crate::trace::{RecordKind, TraceRecord, TraceSink};

/// Default budget of transitions one model may perform at a single instant
/// before the kernel suspects a zero-delay livelock.
pub const DEFAULT_ZERO_DELAY_LIMIT: u32 = 10_000;

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    AllPassive,
    TimeLimit,
    StepLimit,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::AllPassive => "all_passive",
            HaltReason::TimeLimit => "time_limit",
            HaltReason::StepLimit => "step_limit",
        }
    }
}

/// Message-flow accounting for one run.
///
/// Every message emitted by an output function fans out along zero or more
/// coupling edges; `emitted + duplicated = delivered + discarded` holds at
/// every step (fan-out to k destinations books k-1 duplications).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounters {
    pub emitted: u64,
    pub delivered: u64,
    pub discarded: u64,
    pub duplicated: u64,
}

impl MessageCounters {
    fn absorb(&mut self, other: MessageCounters) {
        self.emitted += other.emitted;
        self.delivered += other.delivered;
        self.discarded += other.discarded;
        self.duplicated += other.duplicated;
    }

    pub fn conserved(&self) -> bool {
        self.emitted + self.duplicated == self.delivered + self.discarded
    }
}

/// Result of a completed run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub halt: HaltReason,
    pub clock: SimTime,
    pub steps: u64,
}

/// The root coordinator plus run configuration.
pub struct Engine {
    mode: Mode,
    policy: ChangePolicy,
    stop: StopCondition,
    zero_delay_limit: u32,
    parallel: bool,
    catalog: Arc<BehaviorCatalog>,
    initial_spec: CoupledModelSpec,
    root: Coordinator,
    clock: SimTime,
    steps: u64,
    counters: MessageCounters,
    initialized: bool,
}

impl Engine {
    /// Builds an engine for a parsed document. Classic mode requires a select
    /// order at every level; an executive-only policy must name a component
    /// that exists.
    pub fn new(document: ModelDocument, catalog: Arc<BehaviorCatalog>) -> Result<Engine, UsageError> {
        let root = Coordinator::from_spec(&document.root, ModelPath::root(), &catalog)?;
        if document.mode == Mode::Classic {
            require_select(&document.root, &ModelPath::root())?;
        }
        if let Authority::ExecutiveOnly(path) = &document.policy.authority {
            if root.find(path).is_none() {
                return Err(UsageError::new(format!(
                    "executive-only policy names missing component {path}"
                )));
            }
        }
        Ok(Engine {
            mode: document.mode,
            policy: document.policy,
            stop: document.stop,
            zero_delay_limit: DEFAULT_ZERO_DELAY_LIMIT,
            parallel: cfg!(feature = "parallel"),
            catalog,
            initial_spec: document.root,
            root,
            clock: SimTime::ZERO,
            steps: 0,
            counters: MessageCounters::default(),
            initialized: false,
        })
    }

    pub fn with_zero_delay_limit(mut self, limit: u32) -> Engine {
        self.zero_delay_limit = limit;
        self
    }

    /// Chooses between the rayon path and the sequential fallback at runtime
    /// (a no-op without the `parallel` feature).
    pub fn with_parallel_execution(mut self, parallel: bool) -> Engine {
        self.parallel = parallel && cfg!(feature = "parallel");
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn counters(&self) -> MessageCounters {
        self.counters
    }

    pub fn root(&self) -> &Coordinator {
        &self.root
    }

    pub fn catalog(&self) -> &BehaviorCatalog {
        &self.catalog
    }

    /// Initializes every processor at t=0 and emits the init records: one for
    /// the root (carrying the flattened coupling view) and one per atomic.
    pub fn init(&mut self, sink: &mut dyn TraceSink) -> Result<(), SimError> {
        let t = SimTime::ZERO;
        self.root.init(t)?;
        self.initialized = true;

        let flat = flatten(&self.initial_spec);
        let mut ports = Vec::new();
        for (name, tag) in &flat.input_ports {
            ports.push(format!("in {name}:{tag}"));
        }
        for (name, tag) in &flat.output_ports {
            ports.push(format!("out {name}:{tag}"));
        }
        let couplings: Vec<String> = flat.couplings.iter().map(|c| c.to_string()).collect();
        let mut payload = vec![
            ("couplings".to_owned(), couplings.join(",")),
            ("ports".to_owned(), ports.join(",")),
        ];
        if let Some(select) = &flat.select_order {
            payload.push(("select".to_owned(), select.join(",")));
        }
        let mut records = vec![TraceRecord::new(t, RecordKind::Init, ModelPath::root(), payload)];
        collect_atomic_init_records(&self.root, t, &mut records);
        for record in &records {
            sink.record(record).map_err(io_error)?;
        }
        Ok(())
    }

    /// Executes one step (one micro-step in classic mode). The caller must
    /// ensure something is scheduled.
    pub fn step(&mut self, sink: &mut dyn TraceSink) -> Result<SimTime, SimError> {
        let t = self.root.t_next();
        if t.is_infinite() {
            return Err(SimError::AllPassive);
        }
        self.clock = t;

        let (mut outputs, transitions, requests) = match self.mode {
            Mode::Parallel => self.phases_parallel(t)?,
            Mode::Classic => self.phases_classic(t)?,
        };
        sort_records_by_path(&mut outputs);
        let mut transitions = transitions;
        sort_records_by_path(&mut transitions);

        let batch = apply_batch(requests, &mut self.root, t, &self.policy, &self.catalog)?;
        if !batch.records.is_empty() || !batch.failures.is_empty() {
            self.root.refresh_times();
        }
        #[cfg(debug_assertions)]
        {
            if let Err(detail) = validate_tree(&self.root) {
                return Err(SimError::RoutingError { model: ModelPath::root(), detail });
            }
        }

        self.steps += 1;
        for record in outputs.iter().chain(transitions.iter()).chain(batch.records.iter()) {
            sink.record(record).map_err(io_error)?;
        }
        Ok(t)
    }

    fn phases_parallel(
        &mut self,
        t: SimTime,
    ) -> Result<(Vec<TraceRecord>, Vec<TraceRecord>, Vec<StructureChangeRequest>), SimError> {
        let collected = collect_phase(&mut self.root, t, self.parallel)?;
        let mut outputs = collected.records;
        self.counters.emitted += collected.emitted;
        for message in collected.output.iter() {
            outputs.push(output_record(t, ModelPath::root(), message));
            self.counters.discarded += 1;
        }
        let delta = deliver_phase(
            &mut self.root,
            t,
            Bag::new(),
            self.parallel,
            self.mode,
            self.zero_delay_limit,
        )?;
        self.counters.absorb(delta.counters);
        Ok((outputs, delta.records, delta.requests))
    }

    fn phases_classic(
        &mut self,
        t: SimTime,
    ) -> Result<(Vec<TraceRecord>, Vec<TraceRecord>, Vec<StructureChangeRequest>), SimError> {
        let selected = classic_select_path(&self.root, t)?;
        let collected = collect_selected(&mut self.root, t, &selected)?;
        let mut outputs = collected.records;
        self.counters.emitted += collected.emitted;
        for message in collected.output.iter() {
            outputs.push(output_record(t, ModelPath::root(), message));
            self.counters.discarded += 1;
        }
        let delta = deliver_classic(
            &mut self.root,
            t,
            Bag::new(),
            Some(&selected),
            self.zero_delay_limit,
        )?;
        self.counters.absorb(delta.counters);
        Ok((outputs, delta.records, delta.requests))
    }

    fn halt(&self, reason: HaltReason, sink: &mut dyn TraceSink) -> Result<RunSummary, SimError> {
        let record = TraceRecord::new(
            self.clock,
            RecordKind::Halt,
            ModelPath::root(),
            [("reason".to_owned(), reason.as_str().to_owned())],
        );
        sink.record(&record).map_err(io_error)?;
        Ok(RunSummary { halt: reason, clock: self.clock, steps: self.steps })
    }

    /// Runs to completion: init, loop until passive or a limit, halt record.
    /// On failure an error record is emitted before the error propagates.
    pub fn run(&mut self, sink: &mut dyn TraceSink) -> Result<RunSummary, SimError> {
        if !self.initialized {
            self.init(sink)?;
        }
        loop {
            if let Some(limit) = self.stop.step_limit {
                if self.steps >= limit {
                    return self.halt(HaltReason::StepLimit, sink);
                }
            }
            let next = self.root.t_next();
            if next.is_infinite() {
                return self.halt(HaltReason::AllPassive, sink);
            }
            if let Some(limit) = self.stop.time_limit {
                if next > limit {
                    return self.halt(HaltReason::TimeLimit, sink);
                }
            }
            if let Err(error) = self.step(sink) {
                let record = TraceRecord::new(
                    self.clock,
                    RecordKind::Error,
                    error_model(&error),
                    [("message".to_owned(), error.to_string())],
                );
                sink.record(&record).map_err(io_error)?;
                return Err(error);
            }
        }
    }
}

fn io_error(e: std::io::Error) -> SimError {
    SimError::Usage(UsageError::new(format!("trace sink failed: {e}")))
}

fn error_model(error: &SimError) -> ModelPath {
    match error {
        SimError::ProtocolViolation { model, .. }
        | SimError::ModelContractViolation { model, .. }
        | SimError::TypeMismatch { model, .. }
        | SimError::RoutingError { model, .. }
        | SimError::LivelockSuspected { model, .. }
        | SimError::ClassicSemanticsViolation { model, .. } => model.clone(),
        SimError::StructureRejected { requester, .. } => requester.clone(),
        _ => ModelPath::root(),
    }
}

/// Classic mode needs a select order at every level of the hierarchy.
fn require_select(spec: &CoupledModelSpec, path: &ModelPath) -> Result<(), UsageError> {
    if spec.select_order.is_none() {
        return Err(UsageError::new(format!("classic mode requires a select order in {path}")));
    }
    for (name, child) in &spec.components {
        if let ModelSpec::Coupled(coupled) = child {
            require_select(coupled, &path.child(name))?;
        }
    }
    Ok(())
}

fn output_record(t: SimTime, model: ModelPath, message: &Message) -> TraceRecord {
    TraceRecord::new(
        t,
        RecordKind::Output,
        model,
        [
            ("port".to_owned(), message.port.clone()),
            ("value".to_owned(), message.value.to_string()),
        ],
    )
}

fn transition_record(t: SimTime, atomic: &AtomicProcessor, kind: TransitionKind, elapsed: Option<SimTime>) -> TraceRecord {
    let record_kind = match kind {
        TransitionKind::Internal => RecordKind::Internal,
        TransitionKind::External => RecordKind::External,
        TransitionKind::Confluent => RecordKind::Confluent,
    };
    let mut payload = vec![("t_next".to_owned(), atomic.t_next().to_string())];
    if let Some(e) = elapsed {
        payload.push(("e".to_owned(), e.to_string()));
    }
    TraceRecord::new(t, record_kind, atomic.path.clone(), payload)
}

/// Stable sort by model path; ties keep emission order.
fn sort_records_by_path(records: &mut [TraceRecord]) {
    records.sort_by(|a, b| a.model.cmp(&b.model));
}

fn collect_atomic_init_records(coordinator: &Coordinator, t: SimTime, records: &mut Vec<TraceRecord>) {
    for slot in coordinator.children() {
        match &slot.processor {
            Processor::Atomic(atomic) => {
                let source = ModelSpec::Atomic(atomic.spec().source.clone());
                records.push(TraceRecord::new(
                    t,
                    RecordKind::Init,
                    atomic.path.clone(),
                    [
                        ("behavior".to_owned(), atomic.spec().source.behavior.clone()),
                        ("digest".to_owned(), source.digest()),
                        ("t_next".to_owned(), atomic.t_next().to_string()),
                    ],
                ));
            }
            Processor::Coupled(child) => collect_atomic_init_records(child, t, records),
        }
    }
}

/// Maps a function over child slots, in parallel when asked and compiled in.
/// Results come back in child order either way.
fn zip_map<I, R, F>(
    children: &mut [ChildSlot],
    inputs: Vec<I>,
    parallel: bool,
    f: F,
) -> Result<Vec<R>, SimError>
where
    I: Send,
    R: Send,
    F: Fn(&mut ChildSlot, I) -> Result<R, SimError> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && children.len() > 1 {
            use rayon::prelude::*;
            return children
                .par_iter_mut()
                .zip(inputs.into_par_iter())
                .map(|(slot, input)| f(slot, input))
                .collect();
        }
    }
    let _ = parallel;
    children.iter_mut().zip(inputs).map(|(slot, input)| f(slot, input)).collect()
}

struct CollectOut {
    /// Messages leaving this coordinator through its network output ports.
    output: Bag,
    records: Vec<TraceRecord>,
    emitted: u64,
}

/// Phase 1: run the output function of every imminent atomic (recursively)
/// and cache each child's bag for routing; returns the bag escaping upward.
fn collect_phase(coordinator: &mut Coordinator, t: SimTime, parallel: bool) -> Result<CollectOut, SimError> {
    let imminent: Vec<bool> = coordinator
        .children()
        .iter()
        .map(|slot| slot.processor.t_next() == t)
        .collect();
    let results = zip_map(coordinator.children_mut(), imminent, parallel, |slot, imminent| {
        if !imminent {
            slot.pending_out = None;
            return Ok(None);
        }
        match &mut slot.processor {
            Processor::Atomic(atomic) => {
                let bag = atomic.collect_output(t)?;
                let records: Vec<TraceRecord> =
                    bag.iter().map(|m| output_record(t, atomic.path.clone(), m)).collect();
                let emitted = bag.len() as u64;
                slot.pending_out = Some(bag);
                Ok(Some((records, emitted)))
            }
            Processor::Coupled(child) => {
                let out = collect_phase(child, t, parallel)?;
                slot.pending_out = Some(out.output);
                Ok(Some((out.records, out.emitted)))
            }
        }
    })?;

    let mut records = Vec::new();
    let mut emitted = 0;
    for result in results.into_iter().flatten() {
        records.extend(result.0);
        emitted += result.1;
    }
    Ok(CollectOut { output: project_network_output(coordinator), records, emitted })
}

/// Maps cached child output bags through the external-output couplings.
fn project_network_output(coordinator: &Coordinator) -> Bag {
    let mut output = Bag::new();
    for slot in coordinator.children() {
        let Some(bag) = &slot.pending_out else { continue };
        for message in bag.iter() {
            let source = PortRef::component(slot.name.clone(), message.port.clone());
            for coupling in couplings_from(coordinator.couplings(), &source) {
                if coupling.target.component.is_none() {
                    output.push(Message::new(coupling.target.port.clone(), message.value.clone()));
                }
            }
        }
    }
    output
}

/// Couplings with the given source endpoint (contiguous in sorted order).
fn couplings_from<'a>(couplings: &'a [Coupling], source: &PortRef) -> &'a [Coupling] {
    let start = couplings.partition_point(|c| c.source < *source);
    let end = couplings.partition_point(|c| c.source <= *source);
    &couplings[start..end]
}

#[derive(Default)]
struct DeltaOut {
    records: Vec<TraceRecord>,
    requests: Vec<StructureChangeRequest>,
    counters: MessageCounters,
}

impl DeltaOut {
    fn absorb(&mut self, other: DeltaOut) {
        self.records.extend(other.records);
        self.requests.extend(other.requests);
        self.counters.absorb(other.counters);
    }
}

/// Phase 2 at one level: distribute external input (through the network's
/// input couplings) and cached child outputs (through internal couplings)
/// into per-child mail bags. External-output edges were already projected in
/// phase 1, so they only count toward fan-out here.
fn route_mail(
    coordinator: &mut Coordinator,
    external: &Bag,
) -> Result<(Vec<Bag>, MessageCounters), SimError> {
    let child_count = coordinator.children().len();
    let pending: Vec<Option<Bag>> = coordinator
        .children_mut()
        .iter_mut()
        .map(|slot| slot.pending_out.take())
        .collect();

    let mut mail: Vec<Bag> = (0..child_count).map(|_| Bag::new()).collect();
    let mut counters = MessageCounters::default();
    let deliver = |coordinator: &Coordinator,
                       source: PortRef,
                       value: &crate::value::Value,
                       mail: &mut Vec<Bag>,
                       counters: &mut MessageCounters|
     -> Result<(), SimError> {
        let edges = couplings_from(coordinator.couplings(), &source);
        if edges.is_empty() {
            counters.discarded += 1;
            return Ok(());
        }
        counters.duplicated += (edges.len() - 1) as u64;
        for edge in edges {
            let Some(target_name) = &edge.target.component else {
                // External-output edge: this copy left in phase 1.
                continue;
            };
            let Some(idx) = coordinator.child_index(target_name) else {
                return Err(SimError::RoutingError {
                    model: coordinator.path.clone(),
                    detail: format!("stale coupling {edge}: no component `{target_name}`"),
                });
            };
            mail[idx].push(Message::new(edge.target.port.clone(), value.clone()));
            if coordinator.children()[idx].processor.is_atomic() {
                counters.delivered += 1;
            }
        }
        Ok(())
    };

    for message in external.iter() {
        let source = PortRef::network(message.port.clone());
        deliver(coordinator, source, &message.value, &mut mail, &mut counters)?;
    }
    for (index, bag) in pending.iter().enumerate() {
        let Some(bag) = bag else { continue };
        let name = coordinator.children()[index].name.clone();
        for message in bag.iter() {
            let source = PortRef::component(name.clone(), message.port.clone());
            deliver(coordinator, source, &message.value, &mut mail, &mut counters)?;
        }
    }
    Ok((mail, counters))
}

/// Phases 2-3 (parallel semantics): route, then transition every component
/// that is imminent and/or has mail, recursively.
fn deliver_phase(
    coordinator: &mut Coordinator,
    t: SimTime,
    external: Bag,
    parallel: bool,
    mode: Mode,
    zero_delay_limit: u32,
) -> Result<DeltaOut, SimError> {
    let (mail, route_counters) = route_mail(coordinator, &external)?;
    let imminent: Vec<bool> = coordinator
        .children()
        .iter()
        .map(|slot| slot.processor.t_next() == t)
        .collect();
    let inputs: Vec<(Bag, bool)> = mail.into_iter().zip(imminent).collect();

    let results = zip_map(coordinator.children_mut(), inputs, parallel, |slot, (bag, imminent)| {
        if !imminent && bag.is_empty() {
            return Ok(None);
        }
        match &mut slot.processor {
            Processor::Atomic(atomic) => {
                let outcome = atomic.transition(t, &bag, mode, zero_delay_limit)?;
                let mut out = DeltaOut::default();
                out.records.push(transition_record(t, atomic, outcome.kind, outcome.elapsed));
                out.requests = outcome.requests;
                Ok(Some(out))
            }
            Processor::Coupled(child) => {
                deliver_phase(child, t, bag, parallel, mode, zero_delay_limit).map(Some)
            }
        }
    })?;

    let mut total = DeltaOut { counters: route_counters, ..DeltaOut::default() };
    for result in results.into_iter().flatten() {
        total.absorb(result);
    }
    coordinator.t_last = t;
    coordinator.t_next = coordinator
        .children()
        .iter()
        .map(|slot| slot.processor.t_next())
        .fold(SimTime::INFINITY, SimTime::min);
    Ok(total)
}

/// Classic tie-breaking: the select order picks one imminent child per level,
/// down to a single atomic. Returns child indices from this level down.
fn classic_select_path(coordinator: &Coordinator, t: SimTime) -> Result<Vec<usize>, SimError> {
    let order = coordinator.select_order().ok_or_else(|| SimError::ClassicSemanticsViolation {
        model: coordinator.path.clone(),
        detail: "classic mode requires a select order".to_owned(),
    })?;
    let name = order
        .iter()
        .find(|name| {
            coordinator.child(name).is_some_and(|child| child.t_next() == t)
        })
        .ok_or_else(|| SimError::ProtocolViolation {
            model: coordinator.path.clone(),
            detail: format!("no imminent component at t={t}"),
        })?;
    let index = coordinator.child_index(name).expect("select order names existing child");
    match coordinator.child(name).expect("index just resolved") {
        Processor::Atomic(_) => Ok(vec![index]),
        Processor::Coupled(child) => {
            let mut path = vec![index];
            path.extend(classic_select_path(child, t)?);
            Ok(path)
        }
    }
}

/// Phase 1 (classic): only the selected atomic's output function fires.
fn collect_selected(
    coordinator: &mut Coordinator,
    t: SimTime,
    selected: &[usize],
) -> Result<CollectOut, SimError> {
    for slot in coordinator.children_mut() {
        slot.pending_out = None;
    }
    let (&index, rest) = selected.split_first().expect("selection path reaches an atomic");
    let slot = &mut coordinator.children_mut()[index];
    let (records, emitted) = match &mut slot.processor {
        Processor::Atomic(atomic) => {
            let bag = atomic.collect_output(t)?;
            let records: Vec<TraceRecord> =
                bag.iter().map(|m| output_record(t, atomic.path.clone(), m)).collect();
            let emitted = bag.len() as u64;
            slot.pending_out = Some(bag);
            (records, emitted)
        }
        Processor::Coupled(child) => {
            let out = collect_selected(child, t, rest)?;
            slot.pending_out = Some(out.output);
            (out.records, out.emitted)
        }
    };
    Ok(CollectOut { output: project_network_output(coordinator), records, emitted })
}

/// Phases 2-3 (classic): route the selected component's messages; the
/// selected atomic takes its internal transition, every receiver takes an
/// external transition with a single-message bag. More than one message to
/// one receiver in a micro-step cannot be expressed classically.
fn deliver_classic(
    coordinator: &mut Coordinator,
    t: SimTime,
    external: Bag,
    selected: Option<&[usize]>,
    zero_delay_limit: u32,
) -> Result<DeltaOut, SimError> {
    let (mail, route_counters) = route_mail(coordinator, &external)?;
    let mut total = DeltaOut { counters: route_counters, ..DeltaOut::default() };

    for (index, bag) in mail.into_iter().enumerate() {
        let selected_here = match selected {
            Some([first, ..]) if *first == index => Some(&selected.unwrap()[1..]),
            _ => None,
        };
        if selected_here.is_none() && bag.is_empty() {
            continue;
        }
        let slot = &mut coordinator.children_mut()[index];
        match &mut slot.processor {
            Processor::Atomic(atomic) => {
                if bag.len() > 1 {
                    return Err(SimError::ClassicSemanticsViolation {
                        model: atomic.path.clone(),
                        detail: format!(
                            "{} simultaneous messages in one micro-step; classic semantics allow one",
                            bag.len()
                        ),
                    });
                }
                if selected_here.is_some() {
                    let outcome = atomic.transition(t, &Bag::new(), Mode::Classic, zero_delay_limit)?;
                    total.records.push(transition_record(t, atomic, outcome.kind, outcome.elapsed));
                    total.requests.extend(outcome.requests);
                }
                if !bag.is_empty() {
                    let outcome = atomic.transition(t, &bag, Mode::Classic, zero_delay_limit)?;
                    total.records.push(transition_record(t, atomic, outcome.kind, outcome.elapsed));
                    total.requests.extend(outcome.requests);
                }
            }
            Processor::Coupled(child) => {
                let out = deliver_classic(child, t, bag, selected_here, zero_delay_limit)?;
                total.absorb(out);
            }
        }
    }
    coordinator.t_last = t;
    coordinator.t_next = coordinator
        .children()
        .iter()
        .map(|slot| slot.processor.t_next())
        .fold(SimTime::INFINITY, SimTime::min);
    Ok(total)
}

/// Convenience: build, run, and return the summary for a document.
pub fn run_document(
    document: ModelDocument,
    catalog: Arc<BehaviorCatalog>,
    sink: &mut dyn TraceSink,
) -> Result<RunSummary, SimError> {
    let mut engine = Engine::new(document, catalog)?;
    engine.run(sink)
}

/// Quick structural probe: instantiate a document without running it. This
/// is the whole of `validate` at the CLI level.
pub fn instantiate_document(
    document: &ModelDocument,
    catalog: &BehaviorCatalog,
) -> Result<Processor, UsageError> {
    instantiate(&ModelSpec::Coupled(document.root.clone()), ModelPath::root(), catalog)
}
