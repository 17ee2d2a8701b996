//! Runtime structure changes.
//!
//! Models request changes; the kernel alone applies them, at one safe point
//! per step (after all transitions, before times are recomputed). Requests
//! are validated against the evolving structure and applied in a canonical
//! order, so the outcome is independent of arrival order.

use std::collections::BTreeMap;
use std::fmt;

use crate::catalog::BehaviorCatalog;
use crate::coupled::{validate_coupling_in, Coordinator, Processor};
use crate::error::{SimError, StructureError, StructureErrorCode};
use crate::model::{Coupling, ModelSpec, ParamMap};
use crate::path::{is_valid_name, ModelPath};
use crate::port::{Direction, PortSpec};
use crate::time::SimTime;
use crate::trace::{RecordKind, TraceRecord};
use crate::value::{StateValue, Value, ValueTypeTag};

/// How a dynamically inserted model computes its boot state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitDirective {
    /// A fixed state, fully spelled out in the request.
    Static(StateValue),
    /// A registered initializer computes the state from a snapshot of the
    /// surrounding system at insertion time.
    Contextual { initializer: String, params: ParamMap },
}

impl fmt::Display for InitDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitDirective::Static(state) => write!(f, "static({state})"),
            InitDirective::Contextual { initializer, params } => {
                write!(f, "contextual({initializer}(")?;
                for (i, (name, value)) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{name}={value}")?;
                }
                write!(f, "))")
            }
        }
    }
}

/// Read-only view of a component's siblings, taken before the current batch
/// of changes touches anything.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSnapshot {
    pub time: SimTime,
    pub siblings: BTreeMap<String, SiblingInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiblingInfo {
    pub t_next: SimTime,
    pub observables: BTreeMap<String, Value>,
}

/// Who may request structure changes, and what a failed request does.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePolicy {
    pub authority: Authority,
    pub conflict_mode: ConflictMode,
}

impl Default for ChangePolicy {
    fn default() -> Self {
        ChangePolicy { authority: Authority::Distributed, conflict_mode: ConflictMode::Strict }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Authority {
    /// Any component may request changes.
    Distributed,
    /// Only the named executive component may.
    ExecutiveOnly(ModelPath),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictMode {
    /// First failing request aborts the run.
    Strict,
    /// Failing requests are recorded and skipped.
    Lenient,
}

/// The change itself.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureChangeKind {
    AddModel { parent: ModelPath, name: String, spec: ModelSpec, init: InitDirective },
    RemoveModel { target: ModelPath },
    AddCoupling { scope: ModelPath, coupling: Coupling },
    RemoveCoupling { scope: ModelPath, coupling: Coupling },
    AddPort { target: ModelPath, port: PortSpec },
    RemovePort { target: ModelPath, name: String, direction: Direction },
    RetypePort { target: ModelPath, name: String, direction: Direction, new_type: ValueTypeTag },
    ReplaceModel { target: ModelPath, spec: ModelSpec, init: InitDirective },
}

/// A validated, attributable structure-change request.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureChangeRequest {
    pub requester: ModelPath,
    /// Monotonically increasing per requester; makes batch order canonical.
    pub seq: u64,
    pub kind: StructureChangeKind,
}

/// Outcome of applying one batch.
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub records: Vec<TraceRecord>,
    pub failures: Vec<(StructureChangeRequest, StructureError)>,
}

fn deny(code: StructureErrorCode, detail: impl Into<String>) -> StructureError {
    StructureError::new(code, detail)
}

fn check_authority(request: &StructureChangeRequest, policy: &ChangePolicy) -> Result<(), StructureError> {
    match &policy.authority {
        Authority::Distributed => Ok(()),
        Authority::ExecutiveOnly(executive) if &request.requester == executive => Ok(()),
        Authority::ExecutiveOnly(executive) => Err(deny(
            StructureErrorCode::AuthorityDenied,
            format!("policy grants structure authority to {executive} only, request came from {}", request.requester),
        )),
    }
}

fn resolve_coordinator<'a>(
    root: &'a Coordinator,
    path: &ModelPath,
) -> Result<&'a Coordinator, StructureError> {
    root.find_coordinator(path)
        .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {path}")))
}

/// Couplings in `scope` that reference component `name` on either side.
fn couplings_referencing(scope: &Coordinator, name: &str) -> Vec<Coupling> {
    scope
        .couplings()
        .iter()
        .filter(|c| {
            c.source.component.as_deref() == Some(name) || c.target.component.as_deref() == Some(name)
        })
        .cloned()
        .collect()
}

/// Couplings (in the parent scope and, for networks, the inner scope) that
/// touch port `port`/`direction` of the model at `target`.
fn couplings_using_port(
    root: &Coordinator,
    target: &ModelPath,
    port: &str,
    direction: Direction,
) -> Vec<(ModelPath, Coupling)> {
    let mut found = Vec::new();
    if let (Some(parent_path), Some(name)) = (target.parent(), target.leaf()) {
        if let Some(parent) = root.find_coordinator(&parent_path) {
            for c in parent.couplings() {
                let touches = match direction {
                    Direction::Input => {
                        c.target.component.as_deref() == Some(name) && c.target.port == port
                    }
                    Direction::Output => {
                        c.source.component.as_deref() == Some(name) && c.source.port == port
                    }
                };
                if touches {
                    found.push((parent_path.clone(), c.clone()));
                }
            }
        }
    }
    // A network's own port is also reachable from inside it.
    if let Some(inner) = root.find_coordinator(target) {
        for c in inner.couplings() {
            let touches = match direction {
                Direction::Input => c.source.component.is_none() && c.source.port == port,
                Direction::Output => c.target.component.is_none() && c.target.port == port,
            };
            if touches {
                found.push((target.clone(), c.clone()));
            }
        }
    }
    found
}

/// Checks a request against the current structure without applying it.
pub fn validate(
    request: &StructureChangeRequest,
    root: &Coordinator,
    policy: &ChangePolicy,
) -> Result<(), StructureError> {
    check_authority(request, policy)?;
    match &request.kind {
        StructureChangeKind::AddModel { parent, name, .. } => {
            let scope = resolve_coordinator(root, parent)?;
            if !is_valid_name(name) {
                return Err(deny(StructureErrorCode::DuplicateName, format!("invalid component name `{name}`")));
            }
            if scope.child(name).is_some() {
                return Err(deny(
                    StructureErrorCode::DuplicateName,
                    format!("component `{name}` already exists in {parent}"),
                ));
            }
            Ok(())
        }
        StructureChangeKind::RemoveModel { target } | StructureChangeKind::ReplaceModel { target, .. } => {
            if target.is_root() {
                return Err(deny(StructureErrorCode::UnknownPath, "cannot remove or replace the root network"));
            }
            if root.find(target).is_none() {
                return Err(deny(StructureErrorCode::UnknownPath, format!("no model at {target}")));
            }
            Ok(())
        }
        StructureChangeKind::AddCoupling { scope, coupling } => {
            let coordinator = resolve_coordinator(root, scope)?;
            validate_coupling_in(coordinator, coupling)
        }
        StructureChangeKind::RemoveCoupling { scope, coupling } => {
            let coordinator = resolve_coordinator(root, scope)?;
            if !coordinator.couplings().contains(coupling) {
                return Err(deny(
                    StructureErrorCode::DanglingCoupling,
                    format!("no coupling {coupling} in {scope}"),
                ));
            }
            Ok(())
        }
        StructureChangeKind::AddPort { target, port } => {
            let model = root
                .find(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            if !is_valid_name(&port.name) {
                return Err(deny(StructureErrorCode::DuplicateName, format!("invalid port name `{}`", port.name)));
            }
            if model.port_type(&port.name, port.direction).is_some() {
                return Err(deny(
                    StructureErrorCode::DuplicateName,
                    format!("{target} already has {} port `{}`", port.direction, port.name),
                ));
            }
            Ok(())
        }
        StructureChangeKind::RemovePort { target, name, direction } => {
            let model = root
                .find(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            if model.port_type(name, *direction).is_none() {
                return Err(deny(
                    StructureErrorCode::UnknownPath,
                    format!("{target} has no {direction} port `{name}`"),
                ));
            }
            let users = couplings_using_port(root, target, name, *direction);
            if let Some((scope, coupling)) = users.first() {
                return Err(deny(
                    StructureErrorCode::PortInUse,
                    format!("port `{name}` of {target} still used by {coupling} in {scope}"),
                ));
            }
            Ok(())
        }
        StructureChangeKind::RetypePort { target, name, direction, new_type } => {
            let model = root
                .find(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            if model.port_type(name, *direction).is_none() {
                return Err(deny(
                    StructureErrorCode::UnknownPath,
                    format!("{target} has no {direction} port `{name}`"),
                ));
            }
            for (scope_path, coupling) in couplings_using_port(root, target, name, *direction) {
                let scope = resolve_coordinator(root, &scope_path)?;
                let peer_type = |portref: &crate::model::PortRef, wants: Direction| -> Option<ValueTypeTag> {
                    match &portref.component {
                        Some(component) => scope.child(component)?.port_type(&portref.port, wants).cloned(),
                        None => match wants {
                            // Within a scope, the network's own input feeds
                            // sources and its output receives targets.
                            Direction::Input => scope.input_ports().get(&portref.port).cloned(),
                            Direction::Output => scope.output_ports().get(&portref.port).cloned(),
                        },
                    }
                };
                // Identify the other endpoint of this coupling.
                let self_is_source = match direction {
                    Direction::Output => true,
                    Direction::Input => false,
                };
                let self_on_network_side = scope_path == *target;
                let (other_ref, other_dir) = if self_on_network_side {
                    // Port touched from inside its own network: the coupling's
                    // other side is a component within.
                    match direction {
                        Direction::Input => (&coupling.target, Direction::Input),
                        Direction::Output => (&coupling.source, Direction::Output),
                    }
                } else if self_is_source {
                    let dir = if coupling.target.component.is_some() { Direction::Input } else { Direction::Output };
                    (&coupling.target, dir)
                } else {
                    let dir = if coupling.source.component.is_some() { Direction::Output } else { Direction::Input };
                    (&coupling.source, dir)
                };
                let other = peer_type(other_ref, other_dir);
                if other.as_ref() != Some(new_type) {
                    return Err(deny(
                        StructureErrorCode::TypeMismatch,
                        format!(
                            "retyping port `{name}` of {target} to {new_type} breaks coupling {coupling} in {scope_path}"
                        ),
                    ));
                }
            }
            Ok(())
        }
    }
}

/// Immutable snapshot of `parent`'s children as they stand right now.
pub fn snapshot_context(
    root: &Coordinator,
    parent: &ModelPath,
    t: SimTime,
) -> Result<ContextSnapshot, StructureError> {
    let coordinator = resolve_coordinator(root, parent)?;
    let mut siblings = BTreeMap::new();
    for slot in coordinator.children() {
        let observables = match &slot.processor {
            Processor::Atomic(a) => a.observables(),
            Processor::Coupled(_) => BTreeMap::new(),
        };
        siblings.insert(
            slot.name.clone(),
            SiblingInfo { t_next: slot.processor.t_next(), observables },
        );
    }
    Ok(ContextSnapshot { time: t, siblings })
}

fn behavior_label(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Atomic(atomic) => atomic.behavior.clone(),
        ModelSpec::Coupled(_) => "network".to_owned(),
    }
}

fn request_payload(request: &StructureChangeRequest) -> Vec<(String, String)> {
    vec![
        ("requester".to_owned(), request.requester.to_string()),
        ("seq".to_owned(), request.seq.to_string()),
    ]
}

fn coupling_payload(coupling: &Coupling) -> Vec<(String, String)> {
    vec![
        ("from".to_owned(), coupling.source.to_string()),
        ("to".to_owned(), coupling.target.to_string()),
    ]
}

/// Applies a step's worth of requests at the safe point.
///
/// Requests are sorted by (requester, seq) and applied one by one against
/// the evolving structure. In strict mode the first failure aborts; in
/// lenient mode failures become error records and the batch continues.
pub fn apply_batch(
    mut requests: Vec<StructureChangeRequest>,
    root: &mut Coordinator,
    t: SimTime,
    policy: &ChangePolicy,
    catalog: &BehaviorCatalog,
) -> Result<BatchOutcome, SimError> {
    let mut outcome = BatchOutcome::default();
    if requests.is_empty() {
        return Ok(outcome);
    }
    requests.sort_by(|a, b| (&a.requester, a.seq).cmp(&(&b.requester, b.seq)));
    debug_assert!(
        requests.windows(2).all(|w| (&w[0].requester, w[0].seq) != (&w[1].requester, w[1].seq)),
        "(requester, seq) pairs must be unique within a step"
    );

    // Context snapshots reflect the structure before the whole batch.
    let mut snapshots: BTreeMap<ModelPath, ContextSnapshot> = BTreeMap::new();
    for request in &requests {
        let parent = match &request.kind {
            StructureChangeKind::AddModel { parent, .. } => Some(parent.clone()),
            StructureChangeKind::ReplaceModel { target, .. } => target.parent(),
            _ => None,
        };
        if let Some(parent) = parent {
            if let Ok(snapshot) = snapshot_context(root, &parent, t) {
                snapshots.entry(parent).or_insert(snapshot);
            }
        }
    }

    for request in requests {
        match apply_one(&request, root, t, policy, catalog, &snapshots, &mut outcome.records) {
            Ok(()) => {}
            Err(error) => match policy.conflict_mode {
                ConflictMode::Strict => {
                    return Err(SimError::StructureRejected {
                        requester: request.requester,
                        seq: request.seq,
                        error,
                    });
                }
                ConflictMode::Lenient => {
                    let mut payload = request_payload(&request);
                    payload.push(("reason".to_owned(), error.code.as_str().to_owned()));
                    payload.push(("detail".to_owned(), error.detail.clone()));
                    outcome.records.push(TraceRecord::new(
                        t,
                        RecordKind::Error,
                        request.requester.clone(),
                        payload,
                    ));
                    outcome.failures.push((request, error));
                }
            },
        }
    }
    Ok(outcome)
}

fn initial_state_for(
    init: &InitDirective,
    parent: &ModelPath,
    t: SimTime,
    catalog: &BehaviorCatalog,
    snapshots: &BTreeMap<ModelPath, ContextSnapshot>,
) -> Result<StateValue, StructureError> {
    match init {
        InitDirective::Static(state) => Ok(state.clone()),
        InitDirective::Contextual { initializer, params } => {
            let snapshot = snapshots.get(parent).cloned().unwrap_or(ContextSnapshot {
                time: t,
                siblings: BTreeMap::new(),
            });
            catalog.run_initializer(initializer, params, &snapshot).map_err(|e| {
                deny(StructureErrorCode::UnknownPath, format!("initializer `{initializer}`: {e}"))
            })
        }
    }
}

fn apply_one(
    request: &StructureChangeRequest,
    root: &mut Coordinator,
    t: SimTime,
    policy: &ChangePolicy,
    catalog: &BehaviorCatalog,
    snapshots: &BTreeMap<ModelPath, ContextSnapshot>,
    records: &mut Vec<TraceRecord>,
) -> Result<(), StructureError> {
    validate(request, root, policy)?;
    match &request.kind {
        StructureChangeKind::AddModel { parent, name, spec, init } => {
            let path = parent.child(name);
            let mut processor = crate::coupled::instantiate(spec, path.clone(), catalog)
                .map_err(|e| deny(StructureErrorCode::UnknownPath, e.to_string()))?;
            match &mut processor {
                Processor::Atomic(atomic) => {
                    let state = initial_state_for(init, parent, t, catalog, snapshots)?;
                    atomic.init_with_state(t, state).map_err(|e| {
                        deny(StructureErrorCode::TypeMismatch, format!("initialization failed: {e}"))
                    })?;
                }
                Processor::Coupled(coordinator) => {
                    coordinator.init(t).map_err(|e| {
                        deny(StructureErrorCode::TypeMismatch, format!("initialization failed: {e}"))
                    })?;
                }
            }
            let scope = root
                .find_coordinator_mut(parent)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {parent}")))?;
            scope.insert_child(name.clone(), processor);
            let mut payload = request_payload(request);
            payload.push(("behavior".to_owned(), behavior_label(spec)));
            payload.push(("spec".to_owned(), spec.to_string()));
            payload.push(("digest".to_owned(), spec.digest()));
            payload.push(("init".to_owned(), init.to_string()));
            records.push(TraceRecord::new(t, RecordKind::StructureAddModel, path, payload));
            Ok(())
        }
        StructureChangeKind::RemoveModel { target } => {
            remove_model(request, root, t, target, records)
        }
        StructureChangeKind::AddCoupling { scope, coupling } => {
            let coordinator = root
                .find_coordinator_mut(scope)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {scope}")))?;
            coordinator.add_coupling(coupling.clone());
            let mut payload = request_payload(request);
            payload.extend(coupling_payload(coupling));
            records.push(TraceRecord::new(t, RecordKind::StructureAddCoupling, scope.clone(), payload));
            Ok(())
        }
        StructureChangeKind::RemoveCoupling { scope, coupling } => {
            let coordinator = root
                .find_coordinator_mut(scope)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {scope}")))?;
            coordinator.remove_coupling(coupling);
            let mut payload = request_payload(request);
            payload.extend(coupling_payload(coupling));
            records.push(TraceRecord::new(t, RecordKind::StructureRemoveCoupling, scope.clone(), payload));
            Ok(())
        }
        StructureChangeKind::AddPort { target, port } => {
            let model = root
                .find_mut(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            model.add_port(port.clone());
            let mut payload = request_payload(request);
            payload.push(("op".to_owned(), "add".to_owned()));
            payload.push(("port".to_owned(), port.name.clone()));
            payload.push(("direction".to_owned(), port.direction.as_str().to_owned()));
            payload.push(("type".to_owned(), port.value_type.to_string()));
            records.push(TraceRecord::new(t, RecordKind::StructurePort, target.clone(), payload));
            Ok(())
        }
        StructureChangeKind::RemovePort { target, name, direction } => {
            let model = root
                .find_mut(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            model.remove_port(name, *direction);
            let mut payload = request_payload(request);
            payload.push(("op".to_owned(), "remove".to_owned()));
            payload.push(("port".to_owned(), name.clone()));
            payload.push(("direction".to_owned(), direction.as_str().to_owned()));
            records.push(TraceRecord::new(t, RecordKind::StructurePort, target.clone(), payload));
            Ok(())
        }
        StructureChangeKind::RetypePort { target, name, direction, new_type } => {
            let model = root
                .find_mut(target)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no model at {target}")))?;
            model.retype_port(name, *direction, new_type.clone());
            let mut payload = request_payload(request);
            payload.push(("op".to_owned(), "retype".to_owned()));
            payload.push(("port".to_owned(), name.clone()));
            payload.push(("direction".to_owned(), direction.as_str().to_owned()));
            payload.push(("type".to_owned(), new_type.to_string()));
            records.push(TraceRecord::new(t, RecordKind::StructurePort, target.clone(), payload));
            Ok(())
        }
        StructureChangeKind::ReplaceModel { target, spec, init } => {
            let parent_path = target.parent().expect("validated: target is not root");
            let name = target.leaf().expect("validated: target is not root").to_owned();

            let mut processor = crate::coupled::instantiate(spec, target.clone(), catalog)
                .map_err(|e| deny(StructureErrorCode::UnknownPath, e.to_string()))?;
            match &mut processor {
                Processor::Atomic(atomic) => {
                    let state = initial_state_for(init, &parent_path, t, catalog, snapshots)?;
                    atomic.init_with_state(t, state).map_err(|e| {
                        deny(StructureErrorCode::TypeMismatch, format!("initialization failed: {e}"))
                    })?;
                }
                Processor::Coupled(coordinator) => {
                    coordinator.init(t).map_err(|e| {
                        deny(StructureErrorCode::TypeMismatch, format!("initialization failed: {e}"))
                    })?;
                }
            }

            // External couplings survive when they still type-check against
            // the replacement; the rest are dropped with a trace note.
            let parent = root
                .find_coordinator(&parent_path)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {parent_path}")))?;
            let mut dropped = Vec::new();
            for coupling in couplings_referencing(parent, &name) {
                let still_valid = {
                    let probe_ok = |portref: &crate::model::PortRef, wants: Direction| -> bool {
                        match &portref.component {
                            Some(c) if c == &name => processor.port_type(&portref.port, wants).is_some(),
                            _ => true,
                        }
                    };
                    let source_ok = probe_ok(&coupling.source, Direction::Output);
                    let target_ok = probe_ok(&coupling.target, Direction::Input);
                    source_ok && target_ok && coupling_types_match(parent, &coupling, &name, &processor)
                };
                if !still_valid {
                    dropped.push(coupling);
                }
            }

            let parent_mut = root
                .find_coordinator_mut(&parent_path)
                .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {parent_path}")))?;
            for coupling in &dropped {
                parent_mut.remove_coupling(coupling);
                let mut payload = request_payload(request);
                payload.extend(coupling_payload(coupling));
                records.push(TraceRecord::new(
                    t,
                    RecordKind::StructureRemoveCoupling,
                    parent_path.clone(),
                    payload,
                ));
            }
            parent_mut.remove_child(&name);
            records.push(TraceRecord::new(
                t,
                RecordKind::StructureRemoveModel,
                target.clone(),
                request_payload(request),
            ));
            parent_mut.insert_child(name, processor);
            let mut payload = request_payload(request);
            payload.push(("behavior".to_owned(), behavior_label(spec)));
            payload.push(("spec".to_owned(), spec.to_string()));
            payload.push(("digest".to_owned(), spec.digest()));
            payload.push(("init".to_owned(), init.to_string()));
            records.push(TraceRecord::new(t, RecordKind::StructureAddModel, target.clone(), payload));
            Ok(())
        }
    }
}

/// Post-replacement type agreement for one coupling touching `replaced`.
///
/// The sending side of a coupling is a component output or the network's own
/// input port; the receiving side is a component input or the network output.
fn coupling_types_match(
    scope: &Coordinator,
    coupling: &Coupling,
    replaced: &str,
    replacement: &Processor,
) -> bool {
    let source = match &coupling.source.component {
        Some(c) if c == replaced => replacement.port_type(&coupling.source.port, Direction::Output).cloned(),
        Some(c) => scope.child(c).and_then(|p| p.port_type(&coupling.source.port, Direction::Output).cloned()),
        None => scope.input_ports().get(&coupling.source.port).cloned(),
    };
    let target = match &coupling.target.component {
        Some(c) if c == replaced => replacement.port_type(&coupling.target.port, Direction::Input).cloned(),
        Some(c) => scope.child(c).and_then(|p| p.port_type(&coupling.target.port, Direction::Input).cloned()),
        None => scope.output_ports().get(&coupling.target.port).cloned(),
    };
    matches!((source, target), (Some(s), Some(t)) if s == t)
}

fn remove_model(
    request: &StructureChangeRequest,
    root: &mut Coordinator,
    t: SimTime,
    target: &ModelPath,
    records: &mut Vec<TraceRecord>,
) -> Result<(), StructureError> {
    let parent_path = target.parent().expect("validated: target is not root");
    let name = target.leaf().expect("validated: target is not root").to_owned();
    let parent = root
        .find_coordinator_mut(&parent_path)
        .ok_or_else(|| deny(StructureErrorCode::UnknownPath, format!("no network at {parent_path}")))?;
    // Cascade: couplings referencing the target go first, then the model.
    for coupling in couplings_referencing(parent, &name) {
        parent.remove_coupling(&coupling);
        let mut payload = request_payload(request);
        payload.extend(coupling_payload(&coupling));
        records.push(TraceRecord::new(
            t,
            RecordKind::StructureRemoveCoupling,
            parent_path.clone(),
            payload,
        ));
    }
    parent.remove_child(&name);
    records.push(TraceRecord::new(
        t,
        RecordKind::StructureRemoveModel,
        target.clone(),
        request_payload(request),
    ));
    Ok(())
}
