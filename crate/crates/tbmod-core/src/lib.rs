//! Discrete transboundary modulus on planar domains.
//!
//! A planar domain is the sphere minus finitely many disjoint compact
//! connected sets ("components").  The transboundary modulus of a family of
//! paths charges both the open part of the domain (an area integral) and the
//! components a path passes through (one lump per component).  This crate
//! computes that modulus on a grid discretization and uses it to machine-check
//! a collection of constructive estimates about uniformization of domains
//! whose components are uniform quasitripods:
//!
//! * [`geom`] — planar/spherical primitives: chordal metric, cross-ratio,
//!   components, domains, and separated annulus chains;
//! * [`qs`] — quasisymmetry checkers: weak-QS constants, quasitripod
//!   verification, spread probes, packing counts, quasi-Möbius distortion;
//! * [`grid`] — the transboundary graph (grid cells + component super-nodes),
//!   walk payoffs and shortest walks;
//! * [`solver`] — modulus as a convex program solved by constraint
//!   generation, plus the serial-combination and annulus probe estimates;
//! * [`blocking`] — per-component blocking data (pocket disk next to a tripod
//!   arm) and the detour inequality for paths that dip into the pocket;
//! * [`partition`] — the greedy component partition, the interval-splitting
//!   algorithm over quotient paths, and the chain inequalities it feeds;
//! * [`counterexample`] — the self-similar tree of tripod skeletons whose
//!   packing counts blow up, with the averaging ("light ray") certificate
//!   that modulus still degenerates.
//!
//! Everything is deterministic: randomized suites take explicit seeds.

#![forbid(unsafe_code)]

pub mod error;
pub mod geom;
pub mod grid;
pub mod qs;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
