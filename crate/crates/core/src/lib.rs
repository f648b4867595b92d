//! Exact-arithmetic toolkit for filtered cochain complexes arising from
//! localizations of finite A-infinity categories.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — sparse matrices and subspaces over arbitrary-precision rationals;
//! * [`complexes`] — graded and filtered cochain complexes, cones, homotopy
//!   colimits and directed systems;
//! * [`spectral`] — spectral sequence pages of a filtered complex;
//! * [`ainf`] — finite A-infinity categories, twisted complexes and
//!   exceptional resolutions;
//! * [`localization`] — word-length-filtered quotient hom complexes and their
//!   growth functions;
//! * [`colimit`] — endofunctor iteration, colimit growth and entropy estimates;
//! * [`growth`] — growth tables, scaling/translation comparison, degree detection;
//! * [`instances`] — built-in desk-scale instances (projective line, linear
//!   quivers, seeded random complexes);
//! * [`spec_file`] — JSON (de)serialization of categories and reports.

pub mod linalg;
pub mod complexes;
pub mod spectral;
pub mod ainf;
pub mod localization;
pub mod colimit;
pub mod growth;
pub mod instances;
pub mod spec_file;
