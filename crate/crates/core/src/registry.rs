//! Name-keyed registry of strategy constructors.

use crate::error::{Error, Result};

type Factory<T, P> = Box<dyn Fn(&P) -> Result<Box<T>> + Send + Sync>;

pub struct Registry<T: ?Sized, P> {
    kind: &'static str,
    entries: Vec<(&'static str, Factory<T, P>)>,
}

impl<T: ?Sized, P> Registry<T, P> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new() }
    }

    /// Registers `name`, replacing any earlier entry with the same name.
    pub fn register<F>(&mut self, name: &'static str, factory: F) -> &mut Self
    where
        F: Fn(&P) -> Result<Box<T>> + Send + Sync + 'static,
    {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, Box::new(factory)));
        self
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, params: &P) -> Result<Box<T>> {
        match self.entries.iter().find(|(n, _)| *n == name) {
            Some((_, f)) => f(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}
