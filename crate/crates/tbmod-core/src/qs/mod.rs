//! Quasisymmetry, quasitripod, spread, packing and quasi-Möbius verifiers.
//!
//! Everything here measures distortion on finite samples, so reported
//! constants are maxima over the samples — exact lower bounds for the true
//! constants.  Suites comparing a measured constant against a requested
//! one allow a fixed ×1.05 slack for the sampling gap.

pub mod mobius_checks;
pub mod packing;
pub mod profile;
pub mod spread;
pub mod tripod;
pub mod weak;

pub use mobius_checks::{
    diameter_floor_constant, image_diameter_floor, inversion_restriction_check,
    quasimobius_distortion, DistortionProfile, FloorReport, FloorStatus,
};
pub use packing::{
    packing_calibration, packing_count, packing_count_components, tripod_packing_bound,
    tripods_disjoint,
};
pub use profile::Profile;
pub use spread::{
    spread_check, ProbeOutcome, ProbeStatus, SpreadConfig, SpreadProbe, SpreadReport,
};
pub use tripod::{verify_quasitripod, Tripod, TripodSample};
pub use weak::{weak_qs_constant, weak_qs_constant_with_cap, QsReport};
