//! Port declarations: every model interface point has a name, a direction,
//! and a value type.

use std::fmt;

use crate::value::ValueTypeTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A declared port. Names are unique per direction on one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
    pub value_type: ValueTypeTag,
}

impl PortSpec {
    pub fn input(name: impl Into<String>, value_type: ValueTypeTag) -> PortSpec {
        PortSpec { name: name.into(), direction: Direction::Input, value_type }
    }

    pub fn output(name: impl Into<String>, value_type: ValueTypeTag) -> PortSpec {
        PortSpec { name: name.into(), direction: Direction::Output, value_type }
    }
}
