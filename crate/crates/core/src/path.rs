//! Hierarchical component addresses.
//!
//! A path names a component by the chain of component names from the root
//! network down. The root network itself is the empty path, rendered `/`.
//! Name characters are restricted so that joining segments with `/` preserves
//! lexicographic order — the property that makes hierarchical and flattened
//! traces comparable byte-for-byte.

use std::fmt;

use crate::error::UsageError;

/// True for names allowed as component or port identifiers.
///
/// Every permitted character sorts above `/` in ASCII, so segment-wise path
/// order and joined-string order agree.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.chars().next().unwrap().is_ascii_digit()
}

/// Like [`is_valid_name`] but also admits `/` separators, as produced by
/// flattening (`sub/gen`).
pub fn is_valid_flat_name(name: &str) -> bool {
    !name.is_empty() && name.split('/').all(is_valid_name)
}

/// Address of a component in the model tree; empty means the root network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModelPath {
    segments: Vec<String>,
}

impl ModelPath {
    pub fn root() -> Self {
        ModelPath { segments: Vec::new() }
    }

    pub fn new(segments: Vec<String>) -> Result<Self, UsageError> {
        for s in &segments {
            if !is_valid_flat_name(s) {
                return Err(UsageError::new(format!("invalid path segment `{s}`")));
            }
        }
        Ok(ModelPath { segments })
    }

    /// Parses the canonical rendering: `/` for root, `/a/b` otherwise.
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        if text == "/" {
            return Ok(ModelPath::root());
        }
        let Some(rest) = text.strip_prefix('/') else {
            return Err(UsageError::new(format!("path must start with `/`: `{text}`")));
        };
        let segments: Vec<String> = rest.split('/').map(str::to_owned).collect();
        if segments.iter().any(|s| !is_valid_name(s)) {
            return Err(UsageError::new(format!("invalid path `{text}`")));
        }
        Ok(ModelPath { segments })
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn child(&self, name: &str) -> ModelPath {
        let mut segments = self.segments.clone();
        segments.push(name.to_owned());
        ModelPath { segments }
    }

    /// Path of the enclosing network; `None` for the root.
    pub fn parent(&self) -> Option<ModelPath> {
        if self.segments.is_empty() {
            return None;
        }
        Some(ModelPath { segments: self.segments[..self.segments.len() - 1].to_vec() })
    }

    /// Final segment; `None` for the root.
    pub fn leaf(&self) -> Option<&str> {
        self.segments.last().map(String::as_str)
    }
}

impl fmt::Display for ModelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return write!(f, "/");
        }
        for s in &self.segments {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}
