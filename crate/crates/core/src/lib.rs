//! Exact log-monomial algebra, threshold potential catalog, symbolic and
//! numeric certification, moment classification, and a radial shooting /
//! eigenvalue engine for inverse-square potentials with iterated-log
//! corrections.

pub mod catalog;
pub mod moments;
pub mod verify;
pub mod logalg;
