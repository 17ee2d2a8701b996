//! Declarative model descriptions.
//!
//! A model is data: atomic components name a behavior from the catalog plus
//! parameters, coupled components list ports, children, and couplings. The
//! executable tree is instantiated from this form, and everything here has a
//! canonical compact rendering used for digests and structure trace records.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::UsageError;
use crate::path::is_valid_name;
use crate::structure::ChangePolicy;
use crate::time::SimTime;
use crate::value::{Value, ValueTypeTag};

/// A behavior parameter literal: a value, a type tag, or `inf`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamValue {
    Value(Value),
    Type(ValueTypeTag),
    Infinity,
}

impl ParamValue {
    /// Interprets the parameter as a time (integer and real literals are
    /// both accepted, plus `inf`).
    pub fn as_time(&self) -> Option<SimTime> {
        match self {
            ParamValue::Value(Value::Integer(v)) if *v >= 0 => SimTime::finite(*v as f64).ok(),
            ParamValue::Value(Value::Real(v)) => SimTime::finite(*v).ok(),
            ParamValue::Infinity => Some(SimTime::INFINITY),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            ParamValue::Value(v) => v.as_integer(),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Value(v) => v.as_text(),
            _ => None,
        }
    }

    pub fn as_type(&self) -> Option<&ValueTypeTag> {
        match self {
            ParamValue::Type(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            ParamValue::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Value(v) => v.fmt(f),
            ParamValue::Type(t) => t.fmt(f),
            ParamValue::Infinity => write!(f, "inf"),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// Declarative atomic component: a catalog behavior plus parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicModelSpec {
    pub behavior: String,
    pub params: ParamMap,
}

impl AtomicModelSpec {
    pub fn new(behavior: impl Into<String>, params: ParamMap) -> AtomicModelSpec {
        AtomicModelSpec { behavior: behavior.into(), params }
    }
}

impl fmt::Display for AtomicModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.behavior)?;
        for (i, (name, value)) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{name}={value}")?;
        }
        write!(f, ")")
    }
}

/// One endpoint of a coupling: a named component's port, or (with
/// `component = None`) a port of the enclosing network itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PortRef {
    pub component: Option<String>,
    pub port: String,
}

impl PortRef {
    pub fn network(port: impl Into<String>) -> PortRef {
        PortRef { component: None, port: port.into() }
    }

    pub fn component(component: impl Into<String>, port: impl Into<String>) -> PortRef {
        PortRef { component: Some(component.into()), port: port.into() }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.component {
            Some(c) => write!(f, "{c}.{}", self.port),
            None => write!(f, ".{}", self.port),
        }
    }
}

/// Kind of a coupling, by which sides touch the network boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Network input port to a component input.
    ExternalInput,
    /// Component output to a network output port.
    ExternalOutput,
    /// Component output to a component input.
    Internal,
}

/// A directed coupling inside one network scope.
///
/// Couplings form a multiset: the same edge may appear more than once (as
/// transitive flattening of reconvergent fan-out can produce), and routing
/// honors each instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coupling {
    pub source: PortRef,
    pub target: PortRef,
}

impl Coupling {
    pub fn new(source: PortRef, target: PortRef) -> Coupling {
        Coupling { source, target }
    }

    pub fn kind(&self) -> Option<CouplingKind> {
        match (&self.source.component, &self.target.component) {
            (None, Some(_)) => Some(CouplingKind::ExternalInput),
            (Some(_), None) => Some(CouplingKind::ExternalOutput),
            (Some(_), Some(_)) => Some(CouplingKind::Internal),
            (None, None) => None,
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

/// Declarative coupled component.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoupledModelSpec {
    pub input_ports: BTreeMap<String, ValueTypeTag>,
    pub output_ports: BTreeMap<String, ValueTypeTag>,
    pub components: BTreeMap<String, ModelSpec>,
    pub couplings: Vec<Coupling>,
    pub select_order: Option<Vec<String>>,
}

impl CoupledModelSpec {
    /// Canonicalizes coupling order (couplings are an order-insensitive
    /// multiset; sorting makes rendering and equality deterministic).
    pub fn normalize(&mut self) {
        self.couplings.sort();
        for spec in self.components.values_mut() {
            if let ModelSpec::Coupled(c) = spec {
                c.normalize();
            }
        }
    }

    pub fn couplings_of_kind(&self, kind: CouplingKind) -> impl Iterator<Item = &Coupling> {
        self.couplings.iter().filter(move |c| c.kind() == Some(kind))
    }
}

impl fmt::Display for CoupledModelSpec {
    /// Compact single-line rendering; parses back through the document
    /// grammar (statements separated by `;`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "network {{")?;
        let mut first = true;
        let sep = |f: &mut fmt::Formatter<'_>, first: &mut bool| -> fmt::Result {
            if *first {
                write!(f, " ")?;
                *first = false;
            } else {
                write!(f, "; ")?;
            }
            Ok(())
        };
        for (name, tag) in &self.input_ports {
            sep(f, &mut first)?;
            write!(f, "in {name}: {tag}")?;
        }
        for (name, tag) in &self.output_ports {
            sep(f, &mut first)?;
            write!(f, "out {name}: {tag}")?;
        }
        for (name, spec) in &self.components {
            sep(f, &mut first)?;
            write!(f, "component {name} = {spec}")?;
        }
        for coupling in &self.couplings {
            sep(f, &mut first)?;
            write!(f, "couple {coupling}")?;
        }
        if let Some(order) = &self.select_order {
            sep(f, &mut first)?;
            write!(f, "select [{}]", order.join(","))?;
        }
        write!(f, " }}")
    }
}

/// A component description: atomic or coupled, hierarchically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Atomic(AtomicModelSpec),
    Coupled(CoupledModelSpec),
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Atomic(a) => a.fmt(f),
            ModelSpec::Coupled(c) => c.fmt(f),
        }
    }
}

impl ModelSpec {
    /// Short content digest of the canonical rendering, used in structure
    /// trace records.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_string().as_bytes());
        let hash = hasher.finalize();
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Execution mode: classic serialized semantics or parallel bag semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classic,
    Parallel,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Classic => "classic",
            Mode::Parallel => "parallel",
        }
    }

    pub fn parse(text: &str) -> Result<Mode, UsageError> {
        match text {
            "classic" => Ok(Mode::Classic),
            "parallel" => Ok(Mode::Parallel),
            other => Err(UsageError::new(format!("unknown mode `{other}`"))),
        }
    }
}

/// Run termination bounds. Events at `t <= time_limit` execute; the run
/// halts when the next event would exceed the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct StopCondition {
    pub time_limit: Option<SimTime>,
    pub step_limit: Option<u64>,
}

impl Default for StopCondition {
    fn default() -> Self {
        StopCondition { time_limit: None, step_limit: None }
    }
}

/// A complete parsed model file: header configuration plus the root network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub version: u32,
    pub mode: Mode,
    pub policy: ChangePolicy,
    pub stop: StopCondition,
    pub root: CoupledModelSpec,
}

impl ModelDocument {
    pub fn new(mode: Mode, root: CoupledModelSpec) -> ModelDocument {
        ModelDocument {
            version: 1,
            mode,
            policy: ChangePolicy::default(),
            stop: StopCondition::default(),
            root,
        }
    }
}

/// Checks a component or port identifier, with a uniform error.
pub fn require_name(name: &str, what: &str) -> Result<(), UsageError> {
    if is_valid_name(name) {
        Ok(())
    } else {
        Err(UsageError::new(format!("invalid {what} name `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_rendering_sorts_params() {
        let spec = AtomicModelSpec::new(
            "generator",
            ParamMap::from([
                ("value".to_owned(), ParamValue::Value(Value::Integer(1))),
                ("period".to_owned(), ParamValue::Value(Value::Integer(2))),
            ]),
        );
        assert_eq!(spec.to_string(), "generator(period=2,value=1)");
    }

    #[test]
    fn digest_is_stable_and_content_sensitive(){
        let a = ModelSpec::Atomic(AtomicModelSpec::new("generator", ParamMap::new()));
        let b = ModelSpec::Atomic(AtomicModelSpec::new("processor", ParamMap::new()));
        assert_eq!(a.digest(), a.digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn coupling_kinds() {
        let eic = Coupling::new(PortRef::network("sig"), PortRef::component("p", "in"));
        let eoc = Coupling::new(PortRef::component("p", "done"), PortRef::network("out"));
        let ic = Coupling::new(PortRef::component("g", "out"), PortRef::component("p", "in"));
        let bad = Coupling::new(PortRef::network("a"), PortRef::network("b"));
        assert_eq!(eic.kind(), Some(CouplingKind::ExternalInput));
        assert_eq!(eoc.kind(), Some(CouplingKind::ExternalOutput));
        assert_eq!(ic.kind(), Some(CouplingKind::Internal));
        assert_eq!(bad.kind(), None);
    }
}
