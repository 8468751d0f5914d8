//! Monte Carlo laboratory for multi-dimensional quadratic BSDEs.
//!
//! The crate builds solutions of `Y_t = ξ + ∫_t^T g(s, Y_s, Z_s) ds − ∫_t^T Z_s dB_s`
//! on simulated Brownian ensembles by sequential scalar solves, Picard iteration and
//! backward pasting of short windows. It also evaluates the explicit a priori constants
//! of the local and global existence arguments, estimates the process norms they are
//! stated in, classifies generators against the structural growth conditions, and
//! implements the linear changes of variables that turn some interacting systems into
//! solvable ones.
//!
//! | Module | Contents |
//! |---|---|
//! | [`paths`] | time grids, counter-keyed Brownian ensembles, pathwise integrals |
//! | [`regression`] | least-squares conditional expectations on a Hermite basis |
//! | [`norms`] | S∞, L∞, M∞, BMO and E∞(r) estimators, John–Nirenberg check |
//! | [`generators`] | generator trait, structural parameters, gallery, classifiers, inequality suites |
//! | [`onedim`] | scalar backward solver, exponential-transform oracle, a priori bounds |
//! | [`system`] | sequential map, Picard iteration, interval pasting, residuals |
//! | [`constants`] | local and global constant chains, Young inequality checks |
//! | [`transforms`] | linear transforms, reduction classifiers, terminal shift |

pub mod constants;
pub mod error;
pub mod generators;
pub mod norms;
pub mod onedim;
mod par;
pub mod paths;
pub mod regression;
pub mod system;
pub mod transforms;

pub use error::{Error, Result};
pub use paths::{BrownianEnsemble, PathProcess, TimeGrid, Window};
