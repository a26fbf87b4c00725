//! Exact-rational EF1 + Pareto-optimal division of indivisible chores.

pub mod check;
pub mod error;
pub mod fpo;
pub mod instance;
pub mod lp;
pub mod market;
pub mod par;
pub mod perturb;
pub mod rat;
pub mod search;
pub mod solver;

pub use check::{CheckReport, Witness};
pub use error::{Error, Result};
pub use instance::{Allocation, Instance};
pub use rat::Rat;
