//! Branched flow and dynamical channeling ("superwires") in two-dimensional
//! periodic and random potentials.
//!
//! The crate is organised by method:
//!
//! - [`potential`]: soft Fermi bump lattices, the separable cosine lattice
//!   and the Mathieu channel, with analytic gradients.
//! - [`classical`]: symplectic trajectory ensembles, density histograms and
//!   channel retention.
//! - [`stdmap`]: the kick-and-drift map and the standard map.
//! - [`mathieu`]: Floquet monodromy, stability diagrams and retention scans.
//! - [`quantum`]: split-operator wave propagation, absorbers, Bloch states
//!   and energy filtering.
//! - [`experiments`]: composite measurements (shadow filling, quantum vs
//!   classical correspondence, cross-arm contrast).
//! - [`io`]: scenario files, the grid and point file formats, pixmap
//!   rendering and the experiment runner behind the `bflow` binary.

pub mod classical;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod mathieu;
pub mod potential;
pub mod quantum;
pub mod stdmap;

pub use grid::{GridSpec, Rect};
pub use potential::PotentialField;
