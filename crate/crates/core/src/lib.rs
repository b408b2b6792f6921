//! Core of the p-SOS interface simulator.
//!
//! Integer height fields on the box `{1..L}²` with Hamiltonian
//! `Σ |η_x − η_y|^p` over nearest-neighbour bonds, the free / floor /
//! floor-and-ceiling Gibbs measures, heat-bath Glauber dynamics with a
//! monotone grand coupling, level-set contours with the downward shift map,
//! and exact enumeration oracles for tiny boxes.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! experiment harness live in the `psos` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod contour;
pub mod dynamics;
pub mod error;
pub mod gibbs;
pub mod lattice;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use gibbs::{Energy, LocalDistribution, Mode, Model, ModelParams};
pub use lattice::{BoundaryCondition, BoxGeometry, HeightField, Location, Site};
