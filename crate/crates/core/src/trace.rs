//! Trace records and their byte-stable line format.
//!
//! One record per line: `time<TAB>kind<TAB>model-path<TAB>payload`, where the
//! payload is `key=value` pairs sorted by key and separated by single spaces.
//! Values containing spaces, tabs, quotes, or backslashes are double-quoted
//! with backslash escapes. Identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use crate::error::UsageError;
use crate::path::ModelPath;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Output,
    Internal,
    External,
    Confluent,
    StructureAddModel,
    StructureRemoveModel,
    StructureAddCoupling,
    StructureRemoveCoupling,
    StructurePort,
    Init,
    Halt,
    Error,
}

impl RecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordKind::Output => "output",
            RecordKind::Internal => "internal",
            RecordKind::External => "external",
            RecordKind::Confluent => "confluent",
            RecordKind::StructureAddModel => "structure_add_model",
            RecordKind::StructureRemoveModel => "structure_remove_model",
            RecordKind::StructureAddCoupling => "structure_add_coupling",
            RecordKind::StructureRemoveCoupling => "structure_remove_coupling",
            RecordKind::StructurePort => "structure_port",
            RecordKind::Init => "init",
            RecordKind::Halt => "halt",
            RecordKind::Error => "error",
        }
    }

    pub fn parse(text: &str) -> Result<RecordKind, UsageError> {
        Ok(match text {
            "output" => RecordKind::Output,
            "internal" => RecordKind::Internal,
            "external" => RecordKind::External,
            "confluent" => RecordKind::Confluent,
            "structure_add_model" => RecordKind::StructureAddModel,
            "structure_remove_model" => RecordKind::StructureRemoveModel,
            "structure_add_coupling" => RecordKind::StructureAddCoupling,
            "structure_remove_coupling" => RecordKind::StructureRemoveCoupling,
            "structure_port" => RecordKind::StructurePort,
            "init" => RecordKind::Init,
            "halt" => RecordKind::Halt,
            "error" => RecordKind::Error,
            other => return Err(UsageError::new(format!("unknown record kind `{other}`"))),
        })
    }

    pub fn is_structure(&self) -> bool {
        matches!(
            self,
            RecordKind::StructureAddModel
                | RecordKind::StructureRemoveModel
                | RecordKind::StructureAddCoupling
                | RecordKind::StructureRemoveCoupling
                | RecordKind::StructurePort
        )
    }

    pub fn is_transition(&self) -> bool {
        matches!(self, RecordKind::Internal | RecordKind::External | RecordKind::Confluent)
    }
}

/// One observable simulation event.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub kind: RecordKind,
    pub model: ModelPath,
    pub payload: BTreeMap<String, String>,
}

impl TraceRecord {
    pub fn new(
        time: SimTime,
        kind: RecordKind,
        model: ModelPath,
        payload: impl IntoIterator<Item = (String, String)>,
    ) -> TraceRecord {
        TraceRecord { time, kind, model, payload: payload.into_iter().collect() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload.get(key).map(String::as_str)
    }

    /// Renders the canonical line (no trailing newline).
    pub fn render(&self) -> String {
        let mut line = format!("{}\t{}\t{}\t", self.time, self.kind.as_str(), self.model);
        for (i, (key, value)) in self.payload.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(key);
            line.push('=');
            line.push_str(&quote_payload(value));
        }
        line
    }

    /// Parses one canonical line.
    pub fn parse(line: &str) -> Result<TraceRecord, UsageError> {
        let mut columns = line.splitn(4, '\t');
        let time = columns
            .next()
            .ok_or_else(|| UsageError::new("missing time column"))?;
        let kind = columns
            .next()
            .ok_or_else(|| UsageError::new("missing kind column"))?;
        let model = columns
            .next()
            .ok_or_else(|| UsageError::new("missing model column"))?;
        let payload_text = columns.next().unwrap_or("");
        Ok(TraceRecord {
            time: SimTime::parse(time)?,
            kind: RecordKind::parse(kind)?,
            model: ModelPath::parse(model)?,
            payload: parse_payload(payload_text)?,
        })
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn quote_payload(value: &str) -> String {
    let needs_quotes = value.is_empty()
        || value
            .chars()
            .any(|c| matches!(c, ' ' | '\t' | '\n' | '"' | '\\'));
    if !needs_quotes {
        return value.to_owned();
    }
    crate::value::quote_text(value)
}

fn parse_payload(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut payload = BTreeMap::new();
    let mut chars = text.chars().peekable();
    while chars.peek().is_some() {
        while chars.peek() == Some(&' ') {
            chars.next();
        }
        if chars.peek().is_none() {
            break;
        }
        let mut key = String::new();
        for c in chars.by_ref() {
            if c == '=' {
                break;
            }
            key.push(c);
        }
        if key.is_empty() {
            return Err(UsageError::new(format!("malformed payload `{text}`")));
        }
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some(c) => value.push(c),
                        None => return Err(UsageError::new("unterminated escape in payload")),
                    },
                    Some(c) => value.push(c),
                    None => return Err(UsageError::new("unterminated quote in payload")),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ' ' {
                    break;
                }
                value.push(c);
                chars.next();
            }
        }
        payload.insert(key, value);
    }
    Ok(payload)
}

/// Destination for trace records. One writer per sink.
pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord) -> io::Result<()>;
}

/// Streams canonical lines into any byte writer.
pub struct WriteSink<W: Write> {
    writer: W,
}

impl<W: Write> WriteSink<W> {
    pub fn new(writer: W) -> WriteSink<W> {
        WriteSink { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> TraceSink for WriteSink<W> {
    fn record(&mut self, record: &TraceRecord) -> io::Result<()> {
        writeln!(self.writer, "{}", record.render())
    }
}

/// Collects records in memory; the workhorse of tests and the audit tool.
#[derive(Default)]
pub struct MemorySink {
    pub records: Vec<TraceRecord>,
}

impl MemorySink {
    pub fn new() -> MemorySink {
        MemorySink::default()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&record.render());
            out.push('\n');
        }
        out
    }
}

impl TraceSink for MemorySink {
    fn record(&mut self, record: &TraceRecord) -> io::Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _record: &TraceRecord) -> io::Result<()> {
        Ok(())
    }
}

/// Writes records (assumed already in canonical order) as canonical lines.
pub fn write_trace<'a>(
    records: impl IntoIterator<Item = &'a TraceRecord>,
    writer: &mut impl Write,
) -> io::Result<()> {
    for record in records {
        writeln!(writer, "{}", record.render())?;
    }
    Ok(())
}

/// Parses a whole trace file; errors carry the 1-based line number.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, UsageError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let record = TraceRecord::parse(line)
            .map_err(|e| UsageError::new(format!("trace line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_output_line() {
        let record = TraceRecord::new(
            SimTime::finite(2.0).unwrap(),
            RecordKind::Output,
            ModelPath::parse("/gen").unwrap(),
            [("port".to_owned(), "out".to_owned()), ("value".to_owned(), "1".to_owned())],
        );
        assert_eq!(record.render(), "2\toutput\t/gen\tport=out value=1");
    }

    #[test]
    fn canonical_halt_line() {
        let record = TraceRecord::new(
            SimTime::finite(10.0).unwrap(),
            RecordKind::Halt,
            ModelPath::root(),
            [("reason".to_owned(), "time_limit".to_owned())],
        );
        assert_eq!(record.render(), "10\thalt\t/\treason=time_limit");
    }

    #[test]
    fn payload_keys_sorted_and_quoted_values_round_trip() {
        let record = TraceRecord::new(
            SimTime::finite(4.0).unwrap(),
            RecordKind::StructureAddModel,
            ModelPath::parse("/pool/w2").unwrap(),
            [
                ("spec".to_owned(), "processor(service_time=1)".to_owned()),
                ("requester".to_owned(), "/pool/exec".to_owned()),
                ("note".to_owned(), "has space \"and quote\"".to_owned()),
            ],
        );
        let line = record.render();
        assert!(line.starts_with("4\tstructure_add_model\t/pool/w2\t"));
        // keys appear in sorted order
        let payload = line.split('\t').nth(3).unwrap();
        assert!(payload.find("note=").unwrap() < payload.find("requester=").unwrap());
        assert_eq!(TraceRecord::parse(&line).unwrap(), record);
    }

    #[test]
    fn trace_round_trip() {
        let text = "2\toutput\t/gen\tport=out value=1\n10\thalt\t/\treason=time_limit\n";
        let records = parse_trace(text).unwrap();
        let mut bytes = Vec::new();
        write_trace(records.iter(), &mut bytes).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), text);
    }
}
