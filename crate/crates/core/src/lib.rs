//! Quantitative function theory in the unit disk.
//!
//! The crate turns statements of the form "there is a positive harmonic
//! function `H` with ..." into minimal-mass linear programs over discrete
//! boundary measures, and statements about harmonic measure into
//! walk-on-spheres estimates that are checked against closed forms.
//!
//! Layout:
//!
//! * [`geometry`] pseudohyperbolic distance, Möbius maps, Blaschke factors,
//!   the Poisson kernel and Harnack bounds.
//! * [`blaschke`] finite Blaschke products evaluated in the log domain.
//! * [`majorant`] boundary measures, their Poisson integrals and the LP
//!   fitter behind every majorant checker.
//! * [`harmonic_measure`] exact single-hole harmonic measure and the
//!   walk-on-spheres estimator.
//! * [`ideals`] corona-type quantities for tuples of Blaschke products.
//! * [`constructions`] the radial stable-rank counterexample, the product
//!   splitter and perturbation experiments.
//! * [`testfns`] random bounded analytic functions for property checks.

pub mod blaschke;
pub mod constructions;
pub mod error;
pub mod families;
pub mod geometry;
pub mod harmonic_measure;
pub mod ideals;
pub mod majorant;
pub mod testfns;

pub use error::{Error, Result};
pub use geometry::{DiskPoint, PseudoDisk};
pub use num_complex::Complex64;
