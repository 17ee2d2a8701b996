//! Flattening: rewriting a hierarchy into a single-level network with the
//! same behavior.
//!
//! Atomic components keep their identity under names joined with `/`, and
//! couplings compose transitively through intermediate network ports. The
//! port graph is acyclic (output-side edges only ascend, input-side edges
//! only descend, with one sideways crossing per scope), so composition is a
//! straightforward path enumeration. Reconvergent fan-out composes into
//! duplicate flat edges — couplings are a multiset for exactly this reason.

use std::collections::BTreeMap;

use crate::model::{CoupledModelSpec, Coupling, CouplingKind, ModelSpec, PortRef};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Input,
    Output,
}

/// A port instance in the hierarchy: owning model path + port name + side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Node {
    path: Vec<String>,
    port: String,
    side: Side,
}

struct Walk {
    atomics: BTreeMap<String, ModelSpec>,
    /// Exact hierarchy path per atomic (joined names are ambiguous once
    /// components already carry `/` in their names).
    atomic_paths: BTreeMap<String, Vec<String>>,
    /// Selection priority vector per atomic (None once any level on the way
    /// down lacks a select order).
    priorities: BTreeMap<String, Option<Vec<usize>>>,
    edges: BTreeMap<Node, Vec<Node>>,
}

fn joined(path: &[String]) -> String {
    path.join("/")
}

impl Walk {
    fn add_edge(&mut self, from: Node, to: Node) {
        self.edges.entry(from).or_default().push(to);
    }

    fn visit(&mut self, spec: &CoupledModelSpec, path: &[String], priority: Option<Vec<usize>>) {
        for coupling in &spec.couplings {
            let (from, to) = match coupling.kind() {
                Some(CouplingKind::ExternalInput) => (
                    Node { path: path.to_vec(), port: coupling.source.port.clone(), side: Side::Input },
                    child_node(path, &coupling.target, Side::Input),
                ),
                Some(CouplingKind::ExternalOutput) => (
                    child_node(path, &coupling.source, Side::Output),
                    Node { path: path.to_vec(), port: coupling.target.port.clone(), side: Side::Output },
                ),
                Some(CouplingKind::Internal) => (
                    child_node(path, &coupling.source, Side::Output),
                    child_node(path, &coupling.target, Side::Input),
                ),
                None => continue,
            };
            self.add_edge(from, to);
        }
        for (index_name, child) in spec.components.iter() {
            let child_priority = match (&priority, &spec.select_order) {
                (Some(base), Some(order)) => order
                    .iter()
                    .position(|n| n == index_name)
                    .map(|i| {
                        let mut v = base.clone();
                        v.push(i);
                        v
                    }),
                _ => None,
            };
            let mut child_path = path.to_vec();
            child_path.push(index_name.clone());
            match child {
                ModelSpec::Atomic(_) => {
                    let name = joined(&child_path);
                    self.priorities.insert(name.clone(), child_priority);
                    self.atomic_paths.insert(name.clone(), child_path.clone());
                    self.atomics.insert(name, child.clone());
                }
                ModelSpec::Coupled(coupled) => {
                    self.visit(coupled, &child_path, child_priority);
                }
            }
        }
    }

    /// All sinks reachable from `node`, with multiplicity. A sink is an
    /// atomic input port or a root output port.
    fn sinks_from(&self, node: &Node, root_len: usize, out: &mut Vec<Node>) {
        let terminal = match node.side {
            Side::Input => self.atomics.contains_key(&joined(&node.path)),
            Side::Output => node.path.len() == root_len,
        };
        if terminal {
            out.push(node.clone());
            return;
        }
        if let Some(nexts) = self.edges.get(node) {
            for next in nexts {
                self.sinks_from(next, root_len, out);
            }
        }
    }
}

fn child_node(scope: &[String], portref: &PortRef, side: Side) -> Node {
    let mut path = scope.to_vec();
    path.push(portref.component.clone().expect("component endpoint"));
    Node { path, port: portref.port.clone(), side }
}

/// Produces the single-level equivalent of `root`: every reachable atomic
/// under its joined name, transitively composed couplings, the root's own
/// ports, and (when every level carries one) a composed select order.
pub fn flatten(root: &CoupledModelSpec) -> CoupledModelSpec {
    let mut walk = Walk {
        atomics: BTreeMap::new(),
        atomic_paths: BTreeMap::new(),
        priorities: BTreeMap::new(),
        edges: BTreeMap::new(),
    };
    let root_priority = root.select_order.as_ref().map(|_| Vec::new());
    walk.visit(root, &[], root_priority);

    let mut couplings = Vec::new();
    // Sources: atomic output ports.
    for (name, path) in &walk.atomic_paths {
        // Enumerate output ports via the edges leaving this atomic: edges are
        // keyed by exact nodes, so scan the edge map range for this path.
        for (node, _) in walk.edges.range(
            Node { path: path.clone(), port: String::new(), side: Side::Input }..,
        ) {
            if &node.path != path {
                break;
            }
            if node.side != Side::Output {
                continue;
            }
            let mut sinks = Vec::new();
            walk.sinks_from(node, 0, &mut sinks);
            for sink in sinks {
                let source = PortRef::component(name.clone(), node.port.clone());
                let target = match sink.side {
                    Side::Input => PortRef::component(joined(&sink.path), sink.port),
                    Side::Output => PortRef::network(sink.port),
                };
                couplings.push(Coupling::new(source, target));
            }
        }
    }
    // Sources: root input ports.
    for port in root.input_ports.keys() {
        let node = Node { path: Vec::new(), port: port.clone(), side: Side::Input };
        let mut sinks = Vec::new();
        walk.sinks_from(&node, 0, &mut sinks);
        for sink in sinks {
            if sink.side == Side::Input {
                couplings.push(Coupling::new(
                    PortRef::network(port.clone()),
                    PortRef::component(joined(&sink.path), sink.port),
                ));
            }
        }
    }

    let select_order = compose_select(&walk);

    let mut flat = CoupledModelSpec {
        input_ports: root.input_ports.clone(),
        output_ports: root.output_ports.clone(),
        components: walk.atomics,
        couplings,
        select_order,
    };
    flat.normalize();
    flat
}

fn compose_select(walk: &Walk) -> Option<Vec<String>> {
    if walk.atomics.is_empty() {
        return None;
    }
    let mut ranked: Vec<(&Vec<usize>, &String)> = Vec::with_capacity(walk.priorities.len());
    for (name, priority) in &walk.priorities {
        match priority {
            Some(vector) => ranked.push((vector, name)),
            None => return None,
        }
    }
    ranked.sort();
    Some(ranked.into_iter().map(|(_, name)| name.clone()).collect())
}
