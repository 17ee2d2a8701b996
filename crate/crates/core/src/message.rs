//! Port events and bags.
//!
//! A bag is the unit of simultaneous input/output: a multiset of messages.
//! Equality ignores order but respects multiplicity. Iteration order is the
//! deterministic arrival order produced by canonical routing, which lets
//! behaviors like FIFO queues process a bag reproducibly.

use std::fmt;

use crate::value::Value;

/// One event: a value on a named port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Message {
    pub port: String,
    pub value: Value,
}

impl Message {
    pub fn new(port: impl Into<String>, value: Value) -> Message {
        Message { port: port.into(), value }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.port, self.value)
    }
}

/// A multiset of simultaneous messages.
#[derive(Debug, Clone, Default)]
pub struct Bag {
    messages: Vec<Message>,
}

impl Bag {
    pub fn new() -> Bag {
        Bag::default()
    }

    pub fn of(messages: impl IntoIterator<Item = Message>) -> Bag {
        Bag { messages: messages.into_iter().collect() }
    }

    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn extend(&mut self, other: Bag) {
        self.messages.extend(other.messages);
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    /// Messages in deterministic arrival order.
    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter()
    }

    /// Messages on one port, in arrival order.
    pub fn on_port<'a>(&'a self, port: &'a str) -> impl Iterator<Item = &'a Message> + 'a {
        self.messages.iter().filter(move |m| m.port == port)
    }

    fn sorted(&self) -> Vec<&Message> {
        let mut v: Vec<&Message> = self.messages.iter().collect();
        v.sort();
        v
    }
}

impl PartialEq for Bag {
    fn eq(&self, other: &Self) -> bool {
        self.sorted() == other.sorted()
    }
}

impl Eq for Bag {}

impl IntoIterator for Bag {
    type Item = Message;
    type IntoIter = std::vec::IntoIter<Message>;

    fn into_iter(self) -> Self::IntoIter {
        self.messages.into_iter()
    }
}

impl FromIterator<Message> for Bag {
    fn from_iter<T: IntoIterator<Item = Message>>(iter: T) -> Bag {
        Bag::of(iter)
    }
}
