//! The live model tree: coordinators over child processors.
//!
//! A coordinator owns its network ports, its coupling multiset, and a
//! name-sorted list of child slots. Sorted order is load-bearing: traversal,
//! routing, and trace assembly all derive their determinism from it.

use std::collections::BTreeMap;

use crate::atomic::AtomicProcessor;
use crate::catalog::BehaviorCatalog;
use crate::error::{SimError, StructureError, StructureErrorCode, UsageError};
use crate::message::Bag;
use crate::model::{CoupledModelSpec, Coupling, ModelSpec};
use crate::path::{is_valid_name, ModelPath};
use crate::port::{Direction, PortSpec};
use crate::time::SimTime;
use crate::value::ValueTypeTag;

/// A named child of a coordinator.
pub struct ChildSlot {
    pub name: String,
    pub processor: Processor,
    /// Output bag cached between the collect and deliver phases of a step.
    pub(crate) pending_out: Option<Bag>,
}

/// Either kind of executable component.
pub enum Processor {
    Atomic(AtomicProcessor),
    Coupled(Coordinator),
}

impl Processor {
    pub fn path(&self) -> &ModelPath {
        match self {
            Processor::Atomic(a) => &a.path,
            Processor::Coupled(c) => &c.path,
        }
    }

    pub fn t_next(&self) -> SimTime {
        match self {
            Processor::Atomic(a) => a.t_next(),
            Processor::Coupled(c) => c.t_next,
        }
    }

    pub fn t_last(&self) -> SimTime {
        match self {
            Processor::Atomic(a) => a.t_last(),
            Processor::Coupled(c) => c.t_last,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Processor::Atomic(_))
    }

    pub fn port_type(&self, name: &str, direction: Direction) -> Option<&ValueTypeTag> {
        let (inputs, outputs) = match self {
            Processor::Atomic(a) => (&a.spec().input_ports, &a.spec().output_ports),
            Processor::Coupled(c) => (&c.input_ports, &c.output_ports),
        };
        match direction {
            Direction::Input => inputs.get(name),
            Direction::Output => outputs.get(name),
        }
    }

    fn ports_mut(&mut self, direction: Direction) -> &mut BTreeMap<String, ValueTypeTag> {
        match self {
            Processor::Atomic(a) => a.ports_mut(direction),
            Processor::Coupled(c) => match direction {
                Direction::Input => &mut c.input_ports,
                Direction::Output => &mut c.output_ports,
            },
        }
    }

    pub fn add_port(&mut self, port: PortSpec) {
        self.ports_mut(port.direction).insert(port.name, port.value_type);
    }

    pub fn remove_port(&mut self, name: &str, direction: Direction) {
        self.ports_mut(direction).remove(name);
    }

    pub fn retype_port(&mut self, name: &str, direction: Direction, new_type: ValueTypeTag) {
        self.ports_mut(direction).insert(name.to_owned(), new_type);
    }

    pub fn init(&mut self, t: SimTime) -> Result<(), SimError> {
        match self {
            Processor::Atomic(a) => a.init(t),
            Processor::Coupled(c) => c.init(t),
        }
    }
}

/// The processor of a coupled model.
pub struct Coordinator {
    pub path: ModelPath,
    pub(crate) input_ports: BTreeMap<String, ValueTypeTag>,
    pub(crate) output_ports: BTreeMap<String, ValueTypeTag>,
    pub(crate) couplings: Vec<Coupling>,
    pub(crate) select_order: Option<Vec<String>>,
    pub(crate) children: Vec<ChildSlot>,
    pub(crate) t_last: SimTime,
    pub(crate) t_next: SimTime,
}

impl Coordinator {
    /// Builds the live tree for a declarative coupled spec, validating names,
    /// ports, couplings, and select coverage along the way.
    pub fn from_spec(
        spec: &CoupledModelSpec,
        path: ModelPath,
        catalog: &BehaviorCatalog,
    ) -> Result<Coordinator, UsageError> {
        for name in spec.input_ports.keys().chain(spec.output_ports.keys()) {
            if !is_valid_name(name) {
                return Err(UsageError::new(format!("invalid port name `{name}` on {path}")));
            }
        }
        let mut children = Vec::new();
        for (name, child_spec) in &spec.components {
            // Plain names come from hand-written documents; names with `/`
            // come from flattening.
            if !crate::path::is_valid_flat_name(name) {
                return Err(UsageError::new(format!("invalid component name `{name}` in {path}")));
            }
            let child = instantiate(child_spec, path.child(name), catalog)?;
            children.push(ChildSlot { name: name.clone(), processor: child, pending_out: None });
        }
        children.sort_by(|a, b| a.name.cmp(&b.name));

        if let Some(order) = &spec.select_order {
            let mut covered: Vec<&str> = order.iter().map(String::as_str).collect();
            covered.sort_unstable();
            covered.dedup();
            if covered.len() != order.len() || covered.len() != spec.components.len()
                || !spec.components.keys().all(|name| covered.binary_search(&name.as_str()).is_ok())
            {
                return Err(UsageError::new(format!(
                    "select order of {path} must list every component exactly once"
                )));
            }
        }

        let mut coordinator = Coordinator {
            path,
            input_ports: spec.input_ports.clone(),
            output_ports: spec.output_ports.clone(),
            couplings: Vec::new(),
            select_order: spec.select_order.clone(),
            children,
            t_last: SimTime::ZERO,
            t_next: SimTime::INFINITY,
        };
        for coupling in &spec.couplings {
            validate_coupling_in(&coordinator, coupling)
                .map_err(|e| UsageError::new(format!("in {}: {e}", coordinator.path)))?;
            coordinator.couplings.push(coupling.clone());
        }
        coordinator.couplings.sort();
        Ok(coordinator)
    }

    pub fn children(&self) -> &[ChildSlot] {
        &self.children
    }

    pub(crate) fn children_mut(&mut self) -> &mut [ChildSlot] {
        &mut self.children
    }

    pub fn input_ports(&self) -> &BTreeMap<String, ValueTypeTag> {
        &self.input_ports
    }

    pub fn output_ports(&self) -> &BTreeMap<String, ValueTypeTag> {
        &self.output_ports
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn select_order(&self) -> Option<&[String]> {
        self.select_order.as_deref()
    }

    pub fn t_next(&self) -> SimTime {
        self.t_next
    }

    pub fn t_last(&self) -> SimTime {
        self.t_last
    }

    pub(crate) fn child_index(&self, name: &str) -> Option<usize> {
        self.children.binary_search_by(|slot| slot.name.as_str().cmp(name)).ok()
    }

    pub fn child(&self, name: &str) -> Option<&Processor> {
        self.child_index(name).map(|i| &self.children[i].processor)
    }

    /// Inserts a child, keeping name order; in classic mode the newcomer gets
    /// lowest selection priority.
    pub fn insert_child(&mut self, name: String, processor: Processor) {
        let t_next = processor.t_next();
        let at = self
            .children
            .binary_search_by(|slot| slot.name.as_str().cmp(&name))
            .expect_err("insert_child requires a fresh name");
        if let Some(order) = &mut self.select_order {
            order.push(name.clone());
        }
        self.children.insert(at, ChildSlot { name, processor, pending_out: None });
        self.t_next = self.t_next.min(t_next);
    }

    pub fn remove_child(&mut self, name: &str) -> Option<Processor> {
        let at = self.child_index(name)?;
        if let Some(order) = &mut self.select_order {
            order.retain(|n| n != name);
        }
        let slot = self.children.remove(at);
        self.t_next = self.min_child_t_next();
        Some(slot.processor)
    }

    pub fn add_coupling(&mut self, coupling: Coupling) {
        self.couplings.push(coupling);
        self.couplings.sort();
    }

    /// Removes one instance of the coupling (they form a multiset).
    pub fn remove_coupling(&mut self, coupling: &Coupling) -> bool {
        if let Some(at) = self.couplings.iter().position(|c| c == coupling) {
            self.couplings.remove(at);
            true
        } else {
            false
        }
    }

    fn min_child_t_next(&self) -> SimTime {
        // min over the empty set is infinity: an empty network is passive.
        self.children
            .iter()
            .map(|slot| slot.processor.t_next())
            .fold(SimTime::INFINITY, SimTime::min)
    }

    /// Recursively initializes every child at `t` and recomputes `t_next`.
    pub fn init(&mut self, t: SimTime) -> Result<(), SimError> {
        for slot in &mut self.children {
            slot.processor.init(t)?;
            slot.pending_out = None;
        }
        self.t_last = t;
        self.t_next = self.min_child_t_next();
        Ok(())
    }

    /// Children scheduled exactly at this coordinator's next event time.
    pub fn imminent_set(&self) -> Vec<&str> {
        if self.t_next.is_infinite() {
            return Vec::new();
        }
        self.children
            .iter()
            .filter(|slot| slot.processor.t_next() == self.t_next)
            .map(|slot| slot.name.as_str())
            .collect()
    }

    /// Recomputes coordinator times bottom-up after structure changes.
    pub(crate) fn refresh_times(&mut self) {
        for slot in &mut self.children {
            if let Processor::Coupled(c) = &mut slot.processor {
                c.refresh_times();
            }
        }
        self.t_next = self.min_child_t_next();
    }

    /// Resolves an absolute path to a processor (the root itself is not a
    /// processor and yields `None`).
    pub fn find(&self, path: &ModelPath) -> Option<&Processor> {
        let segments = path.segments();
        let (first, rest) = segments.split_first()?;
        let child = self.child(first)?;
        if rest.is_empty() {
            return Some(child);
        }
        match child {
            Processor::Coupled(c) => c.find(&ModelPath::new(rest.to_vec()).ok()?),
            Processor::Atomic(_) => None,
        }
    }

    pub fn find_mut(&mut self, path: &ModelPath) -> Option<&mut Processor> {
        let segments = path.segments();
        let (first, rest) = segments.split_first()?;
        let at = self.child_index(first)?;
        let child = &mut self.children[at].processor;
        if rest.is_empty() {
            return Some(child);
        }
        match child {
            Processor::Coupled(c) => c.find_mut(&ModelPath::new(rest.to_vec()).ok()?),
            Processor::Atomic(_) => None,
        }
    }

    /// Resolves an absolute path to a network; the empty path is the root.
    pub fn find_coordinator(&self, path: &ModelPath) -> Option<&Coordinator> {
        if path.is_root() {
            return Some(self);
        }
        match self.find(path)? {
            Processor::Coupled(c) => Some(c),
            Processor::Atomic(_) => None,
        }
    }

    pub fn find_coordinator_mut(&mut self, path: &ModelPath) -> Option<&mut Coordinator> {
        if path.is_root() {
            return Some(self);
        }
        match self.find_mut(path)? {
            Processor::Coupled(c) => Some(c),
            Processor::Atomic(_) => None,
        }
    }
}

/// Builds a processor for a declarative spec.
pub fn instantiate(
    spec: &ModelSpec,
    path: ModelPath,
    catalog: &BehaviorCatalog,
) -> Result<Processor, UsageError> {
    match spec {
        ModelSpec::Atomic(atomic) => {
            let runtime = catalog
                .make(atomic)
                .map_err(|e| UsageError::new(format!("{path}: {e}")))?;
            Ok(Processor::Atomic(AtomicProcessor::new(path, runtime)))
        }
        ModelSpec::Coupled(coupled) => {
            Ok(Processor::Coupled(Coordinator::from_spec(coupled, path, catalog)?))
        }
    }
}

/// Checks one coupling against the live structure of `scope`: both endpoints
/// must name declared ports of the right direction, with equal value types.
pub fn validate_coupling_in(scope: &Coordinator, coupling: &Coupling) -> Result<(), StructureError> {
    let dangling = |detail: String| StructureError::new(StructureErrorCode::DanglingCoupling, detail);
    if coupling.kind().is_none() {
        return Err(dangling(format!(
            "{coupling}: a network input may not couple directly to a network output"
        )));
    }
    let source_type = match &coupling.source.component {
        Some(component) => {
            let child = scope
                .child(component)
                .ok_or_else(|| dangling(format!("{coupling}: no component `{component}`")))?;
            child.port_type(&coupling.source.port, Direction::Output).ok_or_else(|| {
                dangling(format!(
                    "{coupling}: `{component}` has no output port `{}`",
                    coupling.source.port
                ))
            })?
        }
        None => scope.input_ports.get(&coupling.source.port).ok_or_else(|| {
            dangling(format!("{coupling}: network has no input port `{}`", coupling.source.port))
        })?,
    };
    let target_type = match &coupling.target.component {
        Some(component) => {
            let child = scope
                .child(component)
                .ok_or_else(|| dangling(format!("{coupling}: no component `{component}`")))?;
            child.port_type(&coupling.target.port, Direction::Input).ok_or_else(|| {
                dangling(format!(
                    "{coupling}: `{component}` has no input port `{}`",
                    coupling.target.port
                ))
            })?
        }
        None => scope.output_ports.get(&coupling.target.port).ok_or_else(|| {
            dangling(format!("{coupling}: network has no output port `{}`", coupling.target.port))
        })?,
    };
    if source_type != target_type {
        return Err(StructureError::new(
            StructureErrorCode::TypeMismatch,
            format!(
                "{coupling}: source port carries {source_type}, target port expects {target_type}"
            ),
        ));
    }
    Ok(())
}

/// Full structural well-formedness check, used after every step in test
/// builds and by the property suites.
pub fn validate_tree(root: &Coordinator) -> Result<(), String> {
    validate_level(root)
}

fn validate_level(coordinator: &Coordinator) -> Result<(), String> {
    for window in coordinator.children.windows(2) {
        if window[0].name >= window[1].name {
            return Err(format!("children of {} out of order", coordinator.path));
        }
    }
    for coupling in &coordinator.couplings {
        validate_coupling_in(coordinator, coupling)
            .map_err(|e| format!("in {}: {e}", coordinator.path))?;
    }
    if let Some(order) = &coordinator.select_order {
        if order.len() != coordinator.children.len()
            || !coordinator.children.iter().all(|slot| order.contains(&slot.name))
        {
            return Err(format!("select order of {} does not cover its components", coordinator.path));
        }
    }
    for slot in &coordinator.children {
        let expected = coordinator.path.child(&slot.name);
        if slot.processor.path() != &expected {
            return Err(format!(
                "child `{}` of {} carries path {}",
                slot.name,
                coordinator.path,
                slot.processor.path()
            ));
        }
        if let Processor::Coupled(child) = &slot.processor {
            validate_level(child)?;
        }
    }
    Ok(())
}

/// Checks the `t_next = min(children)` invariant recursively.
pub fn validate_times(coordinator: &Coordinator) -> Result<(), String> {
    let expected = coordinator.min_child_t_next();
    if coordinator.t_next != expected {
        return Err(format!(
            "{}: cached t_next {} != min over children {}",
            coordinator.path, coordinator.t_next, expected
        ));
    }
    for slot in &coordinator.children {
        if let Processor::Coupled(child) = &slot.processor {
            validate_times(child)?;
        }
    }
    Ok(())
}
