//! Name-keyed constructors for projection and stabilization strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::reduced::{Galerkin, PetrovGalerkin, PetrovGalerkinQr, Projection};
use crate::stabilization::{Aggregation, Naive, Stabilization, Supremizer};

pub type ProjectionCtor = fn() -> Box<dyn Projection>;
pub type StabilizationCtor = fn() -> Box<dyn Stabilization>;

#[derive(Debug, Clone)]
pub struct Registry {
    projections: BTreeMap<String, ProjectionCtor>,
    stabilizations: BTreeMap<String, StabilizationCtor>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register_projection("galerkin", || Box::new(Galerkin));
        r.register_projection("pg", || Box::new(PetrovGalerkin));
        r.register_projection("pg-qr", || Box::new(PetrovGalerkinQr));
        r.register_stabilization("naive", || Box::new(Naive));
        r.register_stabilization("supremizer", || Box::new(Supremizer));
        r.register_stabilization("aggregation", || Box::new(Aggregation));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            projections: BTreeMap::new(),
            stabilizations: BTreeMap::new(),
        }
    }

    pub fn register_projection(&mut self, name: &str, ctor: ProjectionCtor) {
        self.projections.insert(name.to_string(), ctor);
    }

    pub fn register_stabilization(&mut self, name: &str, ctor: StabilizationCtor) {
        self.stabilizations.insert(name.to_string(), ctor);
    }

    pub fn projection(&self, name: &str) -> Result<Box<dyn Projection>> {
        self.projections
            .get(name)
            .map(|ctor| ctor())
            .ok_or_else(|| unknown("projection", name, self.projections.keys()))
    }

    pub fn stabilization(&self, name: &str) -> Result<Box<dyn Stabilization>> {
        self.stabilizations
            .get(name)
            .map(|ctor| ctor())
            .ok_or_else(|| unknown("stabilization", name, self.stabilizations.keys()))
    }

    pub fn projection_names(&self) -> Vec<&str> {
        self.projections.keys().map(String::as_str).collect()
    }

    pub fn stabilization_names(&self) -> Vec<&str> {
        self.stabilizations.keys().map(String::as_str).collect()
    }
}

fn unknown<'a>(family: &'static str, name: &str, known: impl Iterator<Item = &'a String>) -> Error {
    Error::UnknownStrategy {
        family,
        name: name.to_string(),
        known: known.cloned().collect::<Vec<_>>().join(", "),
    }
}
