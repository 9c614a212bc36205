//! Exact solutions, blow-up analysis and regularity classification for the
//! generalized inviscid Proudman-Johnson equation
//! `u_xt + u u_xx - lambda u_x^2 = I(t)`, `I = -(lambda + 1) int u_x^2`.

pub mod asymptotics;
pub mod cases;
pub mod classifier;
pub mod diagnostics;
pub mod error;
pub mod exact_solution;
pub mod pde_oracle;
pub mod profiles;
pub mod quadrature;
pub mod special_fn;

pub use asymptotics::Finiteness;
pub use classifier::{Classification, LinftyOutcome, LpOutcome, LpVerdict, RegularityVerdict};
pub use diagnostics::{BlowupReport, SweepRow};
pub use error::{Error, ErrorKind, Result};
pub use exact_solution::{ExactSolution, SolutionFrame};
pub use profiles::{builtin, Boundary, InitialProfile, ProfileSpec};
pub use quadrature::QuadratureSpec;
