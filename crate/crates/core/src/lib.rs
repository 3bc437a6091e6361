//! Inexact augmented Lagrangian methods for conic programs whose data depend
//! on a parameter that is being learned while the optimizer runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod al_core;
pub mod bounds;
pub mod cones;
pub mod error;
pub mod experiments;
pub mod inner_apg;
pub mod learning;
pub mod linalg;
pub mod model;
pub mod outer_alm;
pub mod reference;
pub mod registry;
pub mod series;

pub use error::{Error, Result};
