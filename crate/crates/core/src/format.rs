//! The model file format.
//!
//! A document is a short header (format version, mode, change policy, stop
//! conditions) followed by one `network { ... }` block describing the root
//! coupled model. Parsing validates everything statically — port and
//! component names, behavior parameters against the catalog, coupling
//! endpoints and types, select coverage — and reports the first problem with
//! its line and column.

use std::collections::BTreeMap;

use crate::catalog::BehaviorCatalog;
use crate::doc::{
    parse_params, parse_type, tokenize, Cursor, FormatError, Pos, TokenKind,
};
use crate::model::{
    AtomicModelSpec, CoupledModelSpec, Coupling, Mode, ModelDocument, ModelSpec, PortRef,
    StopCondition,
};
use crate::path::{is_valid_name, ModelPath};
use crate::structure::{Authority, ChangePolicy, ConflictMode};
use crate::time::SimTime;
use crate::value::ValueTypeTag;

pub const FORMAT_VERSION: u32 = 1;

/// Parses and fully validates a model document.
pub fn parse_model(text: &str, catalog: &BehaviorCatalog) -> Result<ModelDocument, FormatError> {
    let tokens = tokenize(text)?;
    let mut cursor = Cursor::new(&tokens);
    cursor.skip_seps();

    let version_pos = cursor.expect_keyword("devsim")?;
    let version = match cursor.peek().clone() {
        TokenKind::Integer(v) if v >= 1 => {
            cursor.bump();
            v as u32
        }
        _ => return Err(FormatError::parse(cursor.pos(), "expected format version number")),
    };
    if version != FORMAT_VERSION {
        return Err(FormatError::validation(
            version_pos,
            format!("unsupported format version {version} (this build reads {FORMAT_VERSION})"),
        ));
    }
    cursor.expect_end_of_statement()?;

    let mut mode: Option<Mode> = None;
    let mut policy = ChangePolicy::default();
    let mut stop = StopCondition::default();

    loop {
        cursor.skip_seps();
        let (keyword, pos) = cursor.expect_ident()?;
        match keyword.as_str() {
            "mode" => {
                let (value, value_pos) = cursor.expect_ident()?;
                mode = Some(
                    Mode::parse(&value)
                        .map_err(|e| FormatError::validation(value_pos, e.to_string()))?,
                );
                cursor.expect_end_of_statement()?;
            }
            "policy" => {
                let (value, value_pos) = cursor.expect_ident()?;
                policy.authority = match value.as_str() {
                    "distributed" => Authority::Distributed,
                    "executive_only" => {
                        let path = parse_path(&mut cursor)?;
                        if path.is_root() {
                            return Err(FormatError::validation(
                                value_pos,
                                "executive_only must name a component, not the root",
                            ));
                        }
                        Authority::ExecutiveOnly(path)
                    }
                    other => {
                        return Err(FormatError::validation(
                            value_pos,
                            format!("unknown policy `{other}` (distributed or executive_only)"),
                        ))
                    }
                };
                cursor.expect_end_of_statement()?;
            }
            "conflict" => {
                let (value, value_pos) = cursor.expect_ident()?;
                policy.conflict_mode = match value.as_str() {
                    "strict" => ConflictMode::Strict,
                    "lenient" => ConflictMode::Lenient,
                    other => {
                        return Err(FormatError::validation(
                            value_pos,
                            format!("unknown conflict mode `{other}` (strict or lenient)"),
                        ))
                    }
                };
                cursor.expect_end_of_statement()?;
            }
            "stop" => {
                let (what, what_pos) = cursor.expect_ident()?;
                match what.as_str() {
                    "time" => {
                        let limit = parse_time_literal(&mut cursor)?;
                        stop.time_limit = Some(limit);
                    }
                    "steps" => match cursor.peek().clone() {
                        TokenKind::Integer(v) if v >= 0 => {
                            cursor.bump();
                            stop.step_limit = Some(v as u64);
                        }
                        _ => {
                            return Err(FormatError::parse(
                                cursor.pos(),
                                "expected a non-negative step count",
                            ))
                        }
                    },
                    other => {
                        return Err(FormatError::validation(
                            what_pos,
                            format!("unknown stop condition `{other}` (time or steps)"),
                        ))
                    }
                }
                cursor.expect_end_of_statement()?;
            }
            "network" => {
                let Some(mode) = mode else {
                    return Err(FormatError::validation(pos, "header must set `mode` before the network"));
                };
                let root = parse_network(&mut cursor, catalog, mode)?;
                cursor.skip_seps();
                if !cursor.at_end() {
                    return Err(FormatError::parse(
                        cursor.pos(),
                        "unexpected content after the root network",
                    ));
                }
                let mut document = ModelDocument::new(mode, root.spec);
                document.version = version;
                document.policy = policy;
                document.stop = stop;
                validate_executive(&document, pos)?;
                return Ok(document);
            }
            other => {
                return Err(FormatError::parse(
                    pos,
                    format!("unknown header statement `{other}`"),
                ))
            }
        }
    }
}

fn validate_executive(document: &ModelDocument, pos: Pos) -> Result<(), FormatError> {
    if let Authority::ExecutiveOnly(path) = &document.policy.authority {
        let mut spec = &document.root;
        let segments = path.segments();
        for (i, segment) in segments.iter().enumerate() {
            match spec.components.get(segment) {
                Some(ModelSpec::Coupled(inner)) => spec = inner,
                Some(ModelSpec::Atomic(_)) if i + 1 == segments.len() => return Ok(()),
                _ => {
                    return Err(FormatError::validation(
                        pos,
                        format!("executive_only names missing component {path}"),
                    ))
                }
            }
        }
    }
    Ok(())
}

fn parse_time_literal(cursor: &mut Cursor<'_>) -> Result<SimTime, FormatError> {
    let pos = cursor.pos();
    match cursor.peek().clone() {
        TokenKind::Integer(v) if v >= 0 => {
            cursor.bump();
            Ok(SimTime::Finite(v as f64))
        }
        TokenKind::Real(v) if v >= 0.0 => {
            cursor.bump();
            Ok(SimTime::Finite(v))
        }
        TokenKind::Ident(name) if name == "inf" => {
            cursor.bump();
            Ok(SimTime::Infinity)
        }
        other => Err(FormatError::parse(
            pos,
            format!("expected a non-negative time, found {}", other.describe()),
        )),
    }
}

fn parse_path(cursor: &mut Cursor<'_>) -> Result<ModelPath, FormatError> {
    let pos = cursor.pos();
    cursor.expect(&TokenKind::Slash)?;
    if let TokenKind::Ident(_) = cursor.peek() {
        let (name, _) = cursor.expect_ident()?;
        let segments: Vec<String> = name.split('/').map(str::to_owned).collect();
        ModelPath::new(segments).map_err(|e| FormatError::parse(pos, e.to_string()))
    } else {
        Ok(ModelPath::root())
    }
}

/// Ports of one already-parsed component, for coupling validation.
struct ComponentPorts {
    inputs: BTreeMap<String, ValueTypeTag>,
    outputs: BTreeMap<String, ValueTypeTag>,
}

struct ParsedNetwork {
    spec: CoupledModelSpec,
}

/// Parses `{ ... }` after the `network` keyword.
fn parse_network(
    cursor: &mut Cursor<'_>,
    catalog: &BehaviorCatalog,
    mode: Mode,
) -> Result<ParsedNetwork, FormatError> {
    let block_pos = cursor.pos();
    cursor.expect(&TokenKind::LBrace)?;

    let mut spec = CoupledModelSpec::default();
    let mut ports: BTreeMap<String, ComponentPorts> = BTreeMap::new();
    let mut couplings: Vec<(Coupling, Pos)> = Vec::new();
    let mut select: Option<(Vec<String>, Pos)> = None;

    loop {
        cursor.skip_seps();
        if cursor.eat(&TokenKind::RBrace) {
            break;
        }
        let (keyword, pos) = cursor.expect_ident()?;
        match keyword.as_str() {
            "in" | "out" => {
                let (name, name_pos) = cursor.expect_ident()?;
                if !is_valid_name(&name) {
                    return Err(FormatError::validation(
                        name_pos,
                        format!("invalid port name `{name}`"),
                    ));
                }
                cursor.expect(&TokenKind::Colon)?;
                let tag = parse_type(cursor)?;
                let map = if keyword == "in" { &mut spec.input_ports } else { &mut spec.output_ports };
                if map.insert(name.clone(), tag).is_some() {
                    return Err(FormatError::validation(
                        name_pos,
                        format!("duplicate {keyword}put port `{name}`"),
                    ));
                }
                cursor.expect_end_of_statement()?;
            }
            "component" => {
                let (name, name_pos) = cursor.expect_ident()?;
                if !crate::path::is_valid_flat_name(&name) {
                    return Err(FormatError::validation(
                        name_pos,
                        format!("invalid component name `{name}`"),
                    ));
                }
                if spec.components.contains_key(&name) {
                    return Err(FormatError::validation(
                        name_pos,
                        format!("duplicate component `{name}`"),
                    ));
                }
                cursor.expect(&TokenKind::Equals)?;
                let (child, child_ports) = parse_component(cursor, catalog, mode)?;
                spec.components.insert(name.clone(), child);
                ports.insert(name, child_ports);
                cursor.expect_end_of_statement()?;
            }
            "couple" => {
                let source = parse_portref(cursor)?;
                cursor.expect(&TokenKind::Arrow)?;
                let target = parse_portref(cursor)?;
                couplings.push((Coupling::new(source, target), pos));
                cursor.expect_end_of_statement()?;
            }
            "select" => {
                if select.is_some() {
                    return Err(FormatError::validation(pos, "duplicate select statement"));
                }
                cursor.expect(&TokenKind::LBracket)?;
                let mut order = Vec::new();
                if !cursor.eat(&TokenKind::RBracket) {
                    loop {
                        let (name, _) = cursor.expect_ident()?;
                        order.push(name);
                        if cursor.eat(&TokenKind::Comma) {
                            continue;
                        }
                        cursor.expect(&TokenKind::RBracket)?;
                        break;
                    }
                }
                select = Some((order, pos));
                cursor.expect_end_of_statement()?;
            }
            other => {
                return Err(FormatError::parse(
                    pos,
                    format!("unknown statement `{other}` in network block"),
                ))
            }
        }
    }

    // Couplings check against the declared interface of both endpoints.
    for (coupling, pos) in couplings {
        validate_coupling(&spec, &ports, &coupling, pos)?;
        spec.couplings.push(coupling);
    }

    if let Some((order, pos)) = &select {
        let mut sorted: Vec<&str> = order.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != order.len()
            || sorted.len() != spec.components.len()
            || !spec.components.keys().all(|n| sorted.binary_search(&n.as_str()).is_ok())
        {
            return Err(FormatError::validation(
                *pos,
                "select order must list every component exactly once",
            ));
        }
        spec.select_order = Some(order.clone());
    } else if mode == Mode::Classic {
        return Err(FormatError::validation(
            block_pos,
            "classic mode requires a select order in every network",
        ));
    }

    spec.normalize();
    Ok(ParsedNetwork { spec })
}

fn parse_component(
    cursor: &mut Cursor<'_>,
    catalog: &BehaviorCatalog,
    mode: Mode,
) -> Result<(ModelSpec, ComponentPorts), FormatError> {
    let (name, pos) = cursor.expect_ident()?;
    if name == "network" {
        let network = parse_network(cursor, catalog, mode)?;
        let ports = ComponentPorts {
            inputs: network.spec.input_ports.clone(),
            outputs: network.spec.output_ports.clone(),
        };
        return Ok((ModelSpec::Coupled(network.spec), ports));
    }
    let params = parse_params(cursor)?;
    let atomic = AtomicModelSpec::new(name, params);
    let runtime = catalog
        .make(&atomic)
        .map_err(|e| FormatError::validation(pos, e.to_string()))?;
    let ports = ComponentPorts {
        inputs: runtime.input_ports.clone(),
        outputs: runtime.output_ports.clone(),
    };
    Ok((ModelSpec::Atomic(atomic), ports))
}

fn parse_portref(cursor: &mut Cursor<'_>) -> Result<PortRef, FormatError> {
    if cursor.eat(&TokenKind::Dot) {
        let (port, _) = cursor.expect_ident()?;
        return Ok(PortRef::network(port));
    }
    let (component, _) = cursor.expect_ident()?;
    cursor.expect(&TokenKind::Dot)?;
    let (port, _) = cursor.expect_ident()?;
    Ok(PortRef::component(component, port))
}

fn validate_coupling(
    spec: &CoupledModelSpec,
    ports: &BTreeMap<String, ComponentPorts>,
    coupling: &Coupling,
    pos: Pos,
) -> Result<(), FormatError> {
    if coupling.kind().is_none() {
        return Err(FormatError::validation(
            pos,
            format!("{coupling}: a network input may not couple directly to a network output"),
        ));
    }
    let source_type = match &coupling.source.component {
        Some(component) => ports
            .get(component)
            .ok_or_else(|| {
                FormatError::validation(pos, format!("{coupling}: unknown component `{component}`"))
            })?
            .outputs
            .get(&coupling.source.port)
            .ok_or_else(|| {
                FormatError::validation(
                    pos,
                    format!(
                        "{coupling}: `{component}` has no output port `{}`",
                        coupling.source.port
                    ),
                )
            })?,
        None => spec.input_ports.get(&coupling.source.port).ok_or_else(|| {
            FormatError::validation(
                pos,
                format!("{coupling}: network has no input port `{}`", coupling.source.port),
            )
        })?,
    };
    let target_type = match &coupling.target.component {
        Some(component) => ports
            .get(component)
            .ok_or_else(|| {
                FormatError::validation(pos, format!("{coupling}: unknown component `{component}`"))
            })?
            .inputs
            .get(&coupling.target.port)
            .ok_or_else(|| {
                FormatError::validation(
                    pos,
                    format!(
                        "{coupling}: `{component}` has no input port `{}`",
                        coupling.target.port
                    ),
                )
            })?,
        None => spec.output_ports.get(&coupling.target.port).ok_or_else(|| {
            FormatError::validation(
                pos,
                format!("{coupling}: network has no output port `{}`", coupling.target.port),
            )
        })?,
    };
    if source_type != target_type {
        return Err(FormatError::validation(
            pos,
            format!(
                "{coupling}: source port `{}` carries {source_type}, target port `{}` expects {target_type}",
                coupling.source, coupling.target
            ),
        ));
    }
    Ok(())
}

/// Renders a document in canonical form: sorted ports, components, and
/// couplings; two-space indentation per nesting level. Parsing the result
/// reproduces the document exactly.
pub fn print_model(document: &ModelDocument) -> String {
    let mut out = String::new();
    out.push_str(&format!("devsim {}\n", document.version));
    out.push_str(&format!("mode {}\n", document.mode.as_str()));
    match &document.policy.authority {
        Authority::Distributed => out.push_str("policy distributed\n"),
        Authority::ExecutiveOnly(path) => out.push_str(&format!("policy executive_only {path}\n")),
    }
    match document.policy.conflict_mode {
        ConflictMode::Strict => out.push_str("conflict strict\n"),
        ConflictMode::Lenient => out.push_str("conflict lenient\n"),
    }
    if let Some(limit) = document.stop.time_limit {
        out.push_str(&format!("stop time {limit}\n"));
    }
    if let Some(limit) = document.stop.step_limit {
        out.push_str(&format!("stop steps {limit}\n"));
    }
    out.push('\n');
    out.push_str("network {\n");
    print_network_body(&document.root, 1, &mut out);
    out.push_str("}\n");
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_network_body(spec: &CoupledModelSpec, level: usize, out: &mut String) {
    for (name, tag) in &spec.input_ports {
        indent(level, out);
        out.push_str(&format!("in {name}: {tag}\n"));
    }
    for (name, tag) in &spec.output_ports {
        indent(level, out);
        out.push_str(&format!("out {name}: {tag}\n"));
    }
    for (name, component) in &spec.components {
        indent(level, out);
        match component {
            ModelSpec::Atomic(atomic) => out.push_str(&format!("component {name} = {atomic}\n")),
            ModelSpec::Coupled(coupled) => {
                out.push_str(&format!("component {name} = network {{\n"));
                print_network_body(coupled, level + 1, out);
                indent(level, out);
                out.push_str("}\n");
            }
        }
    }
    for coupling in &spec.couplings {
        indent(level, out);
        out.push_str(&format!("couple {coupling}\n"));
    }
    if let Some(order) = &spec.select_order {
        indent(level, out);
        out.push_str(&format!("select [{}]\n", order.join(", ")));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GPT: &str = "\
devsim 1
mode parallel
stop time 11

network {
  out finished: record{arrived: integer, solved: integer, throughput: real}
  component gen = generator(period=2, value=1)
  component proc = processor(service_time=1)
  component trans = transducer(observation_window=10)
  couple gen.out -> proc.in
  couple gen.out -> trans.arrived
  couple proc.done -> trans.solved
  couple trans.report -> .finished
}
";

    #[test]
    fn parses_gpt_document() {
        let catalog = BehaviorCatalog::standard();
        let document = parse_model(GPT, &catalog).unwrap();
        assert_eq!(document.mode, Mode::Parallel);
        assert_eq!(document.root.components.len(), 3);
        assert_eq!(document.root.couplings.len(), 4);
        assert_eq!(document.stop.time_limit, Some(SimTime::Finite(11.0)));
    }

    #[test]
    fn print_parse_round_trip() {
        let catalog = BehaviorCatalog::standard();
        let document = parse_model(GPT, &catalog).unwrap();
        let printed = print_model(&document);
        let reparsed = parse_model(&printed, &catalog).unwrap();
        assert_eq!(document, reparsed);
        // and printing is a fixpoint
        assert_eq!(print_model(&reparsed), printed);
    }

    #[test]
    fn coupling_type_mismatch_reports_both_ports() {
        let text = "\
devsim 1
mode parallel
network {
  component gen = generator(period=2, value=true)
  component proc = processor(service_time=1)
  couple gen.out -> proc.in
}
";
        let catalog = BehaviorCatalog::standard();
        let err = parse_model(text, &catalog).unwrap_err();
        assert_eq!(err.kind, crate::doc::ErrorKind::Validation);
        assert!(err.message.contains("gen.out"), "{}", err.message);
        assert!(err.message.contains("proc.in"), "{}", err.message);
        assert!(err.message.contains("boolean"), "{}", err.message);
        assert!(err.message.contains("integer"), "{}", err.message);
        assert_eq!(err.pos.line, 6);
    }

    #[test]
    fn classic_mode_requires_select() {
        let text = "\
devsim 1
mode classic
network {
  component gen = generator(period=2, value=1)
}
";
        let catalog = BehaviorCatalog::standard();
        let err = parse_model(text, &catalog).unwrap_err();
        assert_eq!(err.kind, crate::doc::ErrorKind::Validation);
        assert!(err.message.contains("select"), "{}", err.message);
    }

    #[test]
    fn unknown_behavior_is_validation_error_with_location() {
        let text = "\
devsim 1
mode parallel
network {
  component g = fabricator(rate=1)
}
";
        let catalog = BehaviorCatalog::standard();
        let err = parse_model(text, &catalog).unwrap_err();
        assert_eq!(err.kind, crate::doc::ErrorKind::Validation);
        assert_eq!(err.pos.line, 4);
        assert!(err.message.contains("fabricator"), "{}", err.message);
    }

    #[test]
    fn empty_network_is_legal() {
        let text = "devsim 1\nmode parallel\nnetwork {\n}\n";
        let catalog = BehaviorCatalog::standard();
        let document = parse_model(text, &catalog).unwrap();
        assert!(document.root.components.is_empty());
    }

    #[test]
    fn compact_single_line_network_parses() {
        let catalog = BehaviorCatalog::standard();
        let document = parse_model(GPT, &catalog).unwrap();
        // The compact Display form of the root network is itself valid input.
        let compact = format!(
            "devsim 1; mode parallel; {}",
            ModelSpec::Coupled(document.root.clone())
        );
        let reparsed = parse_model(&compact, &catalog).unwrap();
        assert_eq!(reparsed.root, document.root);
    }
}
