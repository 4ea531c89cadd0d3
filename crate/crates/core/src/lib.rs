//! Potential theory on finite trees.
//!
//! The crate samples Galton-Watson trees and branching processes in varying
//! environments, computes gauge energies and capacities exactly through the
//! effective-conductance recursion, evaluates tree-indexed target
//! percolation probabilities, and checks the comparison inequalities that
//! tie these quantities together at finite depth.
//!
//! Module map:
//!
//! * [`tree`]: trees, offspring laws, environments, text codecs
//! * [`flow`]: gauges, flows, energies, capacities, Frank-Wolfe cross-check
//! * [`target`]: percolation and target-set probabilities, exact and Monte Carlo
//! * [`product`]: product-tree kernel capacity and the comparison bounds
//! * [`euclid`]: the digit map into `[0,1]^d`, random Cantor sets, Euclidean energies
//! * [`experiments`]: reproducible experiment runner and report emitters

// `!(x >= y)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod euclid;
pub mod experiments;
pub mod flow;
pub mod product;
pub mod rng;
pub mod target;
pub mod tree;

pub use error::{Error, Result};

pub use flow::{Capacity, EnergyReport, Flow, Gauge};
pub use tree::{Environment, OffspringLaw, Tree, TreeStats};
