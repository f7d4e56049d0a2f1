//! Name-keyed registries for interchangeable numerical strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Maps a strategy name to a factory. Lookup failures list what is known.
pub struct Registry<F> {
    kind: &'static str,
    entries: BTreeMap<&'static str, F>,
}

impl<F> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: F) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn with(mut self, name: &'static str, factory: F) -> Self {
        self.register(name, factory);
        self
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}
