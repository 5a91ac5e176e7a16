//! Classical and quantum integrable defects.
//!
//! * [`potentials`] - bulk and defect potentials with constraint verifiers.
//! * [`analytics`] - closed-form soliton data and scattering predictions.
//! * [`lattice`] - finite-difference evolution through type I / type II junctions.
//! * [`transmission`] - sine-Gordon S-matrix, transmission matrices, triangle relation.
//! * [`qgroup`] - q-oscillator Borel representation, Serre relations, intertwiners.

pub mod analytics;
pub mod lattice;
pub mod potentials;
pub mod qgroup;
pub mod special;
pub mod transmission;

pub use num_complex::Complex64;
