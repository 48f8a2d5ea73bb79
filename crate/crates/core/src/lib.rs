//! Gap probabilities of scaled random matrix ensembles.
//!
//! Every quantity is computed by two independent routes: Nystrom
//! discretizations of Fredholm determinants (sine, Airy and Bessel kernels
//! and their square-root operators) and tau-functions built from Painleve
//! transcendents that are found by shooting from their asymptotic boundary
//! data. The [`gap`] module ties the two together and produces
//! [`gap::IdentityReport`]s for each identity relating them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ensembles;
pub mod error;
pub mod exec;
pub mod fredholm;
pub mod gap;
pub mod ode;
pub mod operators;
pub mod painleve;
pub mod quadrature;
pub mod report;
pub mod specfun;

pub use error::{Error, Result};
