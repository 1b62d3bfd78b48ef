//! Exact-along-characteristics solver for a three-population age-structured
//! renewal system with harvesting controls, plus the machinery to express the
//! resulting profit as an explicit polynomial in piecewise-constant controls
//! and to maximize it over the control box.
//!
//! The model: juveniles `J` age on `[0, abar]`; at the maturity age `abar`
//! a time-dependent fraction `eta(t)` of the outflow continues as sale stock
//! `S` and the rest as brood stock `R`, both on `[abar, amax]`. Brood stock
//! drives a nonlocal birth law feeding the juvenile boundary. At each sell
//! age a further control `theta_i(t)` keeps a fraction of `S` and sells the
//! rest. Income and running costs are integral functionals of the solution;
//! profit is income minus cost.
//!
//! Because the system is linear and controls enter through boundary factors,
//! profit is a polynomial in the control values once the control breakpoints
//! respect the generation structure. [`polyfit`] reconstructs that polynomial
//! from finitely many solves and [`optimizer`] maximizes it.

pub mod characteristics;
pub mod error;
pub mod functionals;
pub mod optimizer;
mod parallel;
pub mod polyfit;
mod population;
pub mod solver;

pub use error::{Error, Result};
pub use population::{PerPopulation, Population};
