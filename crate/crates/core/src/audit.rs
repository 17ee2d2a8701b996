//! Structure reconstruction from a trace.
//!
//! A trace begins with init records: one for the root carrying the flattened
//! coupling view, one per atomic. Structure records then describe every
//! change the run applied. Replaying them yields, for each time at which the
//! structure changed, the component set and coupling multiset in force — the
//! durable audit log the trace format was designed to be.

use std::collections::BTreeMap;

use crate::error::UsageError;
use crate::path::ModelPath;
use crate::time::SimTime;
use crate::trace::{RecordKind, TraceRecord};

/// One component as the trace describes it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInfo {
    /// Behavior name for atomics, `network` for coupled additions.
    pub behavior: String,
    pub digest: String,
    /// Compact spec text, when the trace carries one (dynamic additions).
    pub spec: Option<String>,
    /// Port changes applied to this component, newest last.
    pub port_notes: Vec<String>,
}

/// A coupling instance within one scope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CouplingEntry {
    pub scope: ModelPath,
    pub source: String,
    pub target: String,
}

/// The structure in force during one span of the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Structure {
    pub components: BTreeMap<String, ComponentInfo>,
    pub couplings: Vec<CouplingEntry>,
    /// Root network ports as rendered in the init record.
    pub ports: Vec<String>,
}

impl Structure {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for port in &self.ports {
            out.push_str(&format!("port {port}\n"));
        }
        for (path, info) in &self.components {
            out.push_str(&format!("component {path} behavior={}", info.behavior));
            if !info.digest.is_empty() {
                out.push_str(&format!(" digest={}", info.digest));
            }
            out.push('\n');
            for note in &info.port_notes {
                out.push_str(&format!("  port_change {note}\n"));
            }
        }
        let mut couplings = self.couplings.clone();
        couplings.sort();
        for coupling in &couplings {
            out.push_str(&format!(
                "coupling [{}] {} -> {}\n",
                coupling.scope, coupling.source, coupling.target
            ));
        }
        out
    }
}

/// A boundary in structure time.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub time: SimTime,
    pub structure: Structure,
}

/// Every structure the run passed through, oldest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructureHistory {
    pub epochs: Vec<Epoch>,
}

impl StructureHistory {
    /// The structure in force at time `t` (the latest epoch not after `t`).
    pub fn at(&self, t: SimTime) -> Option<&Structure> {
        self.epochs
            .iter()
            .rev()
            .find(|epoch| epoch.time <= t)
            .or(self.epochs.first())
            .map(|epoch| &epoch.structure)
    }
}

fn missing(record: &TraceRecord, key: &str) -> UsageError {
    UsageError::new(format!(
        "{} record at t={} lacks `{key}`",
        record.kind.as_str(),
        record.time
    ))
}

/// Rebuilds the structure timeline from a parsed trace.
pub fn structure_audit(records: &[TraceRecord]) -> Result<StructureHistory, UsageError> {
    let mut structure = Structure::default();
    let mut init_time = SimTime::ZERO;
    let mut saw_init = false;
    let mut epochs: Vec<Epoch> = Vec::new();
    let mut change_time: Option<SimTime> = None;

    for record in records {
        match record.kind {
            RecordKind::Init => {
                if !saw_init {
                    init_time = record.time;
                    saw_init = true;
                }
                apply_init_record(&mut structure, record)?;
            }
            kind if kind.is_structure() => {
                match change_time {
                    // First change: the structure so far is the boot epoch.
                    None => epochs.push(Epoch { time: init_time, structure: structure.clone() }),
                    Some(t) if t != record.time => {
                        epochs.push(Epoch { time: t, structure: structure.clone() })
                    }
                    _ => {}
                }
                change_time = Some(record.time);
                apply_structure_record(&mut structure, record)?;
            }
            _ => {}
        }
    }
    epochs.push(Epoch { time: change_time.unwrap_or(init_time), structure });
    Ok(StructureHistory { epochs })
}

fn apply_init_record(structure: &mut Structure, record: &TraceRecord) -> Result<(), UsageError> {
    if record.model.is_root() {
        if let Some(ports) = record.get("ports") {
            structure.ports =
                ports.split(',').filter(|s| !s.is_empty()).map(str::to_owned).collect();
        }
        if let Some(couplings) = record.get("couplings") {
            for entry in couplings.split(',').filter(|s| !s.is_empty()) {
                let Some((source, target)) = entry.split_once(" -> ") else {
                    return Err(UsageError::new(format!(
                        "malformed coupling `{entry}` in init record"
                    )));
                };
                structure.couplings.push(CouplingEntry {
                    scope: ModelPath::root(),
                    source: source.to_owned(),
                    target: target.to_owned(),
                });
            }
        }
    } else {
        structure.components.insert(
            record.model.to_string(),
            ComponentInfo {
                behavior: record
                    .get("behavior")
                    .ok_or_else(|| missing(record, "behavior"))?
                    .to_owned(),
                digest: record.get("digest").unwrap_or("").to_owned(),
                spec: None,
                port_notes: Vec::new(),
            },
        );
    }
    Ok(())
}

fn apply_structure_record(structure: &mut Structure, record: &TraceRecord) -> Result<(), UsageError> {
    match record.kind {
        RecordKind::StructureAddModel => {
            let spec = record.get("spec").ok_or_else(|| missing(record, "spec"))?.to_owned();
            let behavior = record
                .get("behavior")
                .map(str::to_owned)
                .unwrap_or_else(|| spec.split('(').next().unwrap_or("network").to_owned());
            structure.components.insert(
                record.model.to_string(),
                ComponentInfo {
                    behavior,
                    digest: record.get("digest").unwrap_or("").to_owned(),
                    spec: Some(spec),
                    port_notes: Vec::new(),
                },
            );
        }
        RecordKind::StructureRemoveModel => {
            structure.components.remove(&record.model.to_string());
        }
        RecordKind::StructureAddCoupling => {
            structure.couplings.push(CouplingEntry {
                scope: record.model.clone(),
                source: record.get("from").ok_or_else(|| missing(record, "from"))?.to_owned(),
                target: record.get("to").ok_or_else(|| missing(record, "to"))?.to_owned(),
            });
        }
        RecordKind::StructureRemoveCoupling => {
            let entry = CouplingEntry {
                scope: record.model.clone(),
                source: record.get("from").ok_or_else(|| missing(record, "from"))?.to_owned(),
                target: record.get("to").ok_or_else(|| missing(record, "to"))?.to_owned(),
            };
            if let Some(at) = structure.couplings.iter().position(|c| *c == entry) {
                structure.couplings.remove(at);
            }
        }
        RecordKind::StructurePort => {
            let op = record.get("op").ok_or_else(|| missing(record, "op"))?;
            let port = record.get("port").ok_or_else(|| missing(record, "port"))?;
            let direction = record.get("direction").unwrap_or("?");
            let note = match record.get("type") {
                Some(tag) => format!("{op} {direction} {port}:{tag}"),
                None => format!("{op} {direction} {port}"),
            };
            if let Some(info) = structure.components.get_mut(&record.model.to_string()) {
                info.port_notes.push(note);
            }
        }
        _ => {}
    }
    Ok(())
}
