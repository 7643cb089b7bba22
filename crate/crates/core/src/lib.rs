//! Resonances, the order-4 Birkhoff normal form, and truncated dynamics of the
//! cubic nonlinear Schrödinger equation `i ψ_t = Δψ + |ψ|²ψ` on weighted 2D tori.
//!
//! On a torus with dispersion `λ_k = w1·k1² + w2·k2²` the quartic Hamiltonian
//! couples modes through 4-tuples `k1 + k2 = k3 + k4`. When `w1/w2` is
//! irrational the only exactly resonant tuples are axis-parallel rectangles,
//! and small data supported in a box `Q_M` stays confined there on the
//! `1/ε²` time scale. On the square torus nonparallel rectangles move mass to
//! new modes. This crate enumerates the tuples, builds the normal-form
//! transformation as a numerical flow, integrates the reduced and full
//! systems, and checks the confinement claim at desk scale.
//!
//! Module map:
//! - [`lattice`]: torus weights, modes, boxes, Fourier fields, Sobolev norms.
//! - [`resonance`]: exact resonance tests, enumeration and classification.
//! - [`quartic`]: the separable index over momentum-conserving tuples used by every cubic sum.
//! - [`normal_form`]: the auxiliary Hamiltonian χ and its time-1 flow.
//! - [`dynamics`]: resonant, condensed and full integrations, Taylor recursion, pipelines.
//! - [`family`]: validation of generation structures built from rectangles.
//! - [`cli`]: manifests, commands and artifact writing behind the `irrtorus` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod lattice;
pub mod normal_form;
pub mod ode;
pub mod quartic;
pub mod resonance;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{dispersion, residual, restrict, sobolev_norm, LatticeBox, Mode, ModeField, Rationality, TorusSpec};
pub use num_complex::Complex64;
