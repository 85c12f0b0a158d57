//! Characteristic and Lagrangian varieties of the Gauss-Manin equations of a
//! weighted generic arrangement of parallelly translated hyperplanes.
//!
//! The crate builds, exactly over the rationals, the Laurent polynomials that
//! cut out the Lagrangian variety of the master function, the finite
//! dimensional algebra of functions on the critical set together with its
//! commuting multiplication (Bethe) operators, and the space of singular
//! vectors with the isomorphism between the two. Numeric routines recover the
//! critical points two independent ways and check the Hessian and Jacobian
//! identities on them.

pub mod arrangement;
pub mod commands;
pub mod config;
pub mod error;
pub mod lagrangian;
pub mod linalg;
pub mod quotient;
pub mod relations;
pub mod report;
pub mod spectrum;
pub mod symbolic;

pub use arrangement::{binomial, subsets, ArrangementSpec, SpecFile};
pub use commands::{cmd_flows, cmd_gen, cmd_solve, cmd_verify, run_command};
pub use config::{resolve, ResolvedRun, RunConfig, Tolerances};
pub use error::{Error, Result};
pub use linalg::{CMatrix, Matrix, RatMatrix};
pub use quotient::{mu_map, QuotientAlgebra, QuotientBasis, SingSpace};
pub use relations::{involution_suite, RelationSet};
pub use report::{Report, Status};
pub use spectrum::{joint_spectrum, newton_multistart, CriticalPoint, NewtonOptions, SpectrumOptions};
pub use symbolic::{poisson, CPoint, LaurentPoly, PhasePoint, Rat, RatPoint, Scalar, Var, CF};
