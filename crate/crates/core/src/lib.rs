//! Collective-spin squeezing by two-axis counter-twisting.
//!
//! The crate prepares squeezed spin states from `|J, J⟩`, scans the evolution
//! time for maximal overlap with the equally weighted superposition and
//! twin-Fock states, evaluates Cramér–Rao sensitivity bounds and fits the
//! resulting J-scaling laws.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod golden;
pub mod observables;
pub mod scan;
pub mod spin;

pub use dynamics::{
    evolve, make_sss, rotate, rotate_with, tact_generator, Axis, Method, PropagatorConfig, TwistProtocol,
};
pub use error::{Error, Result};
pub use fit::{fit, FitFamily, FitModel, FitResult};
pub use observables::{fidelity, fisher_bound, prob_distribution, qpd, spin_moments, FieldEstimationParams, QpdGrid};
pub use scan::{scaling_sweep, scan_tau, Metric, ScanResult, ScanSpec, SweepRow};
pub use spin::{
    build_operator, make_cat, make_css, make_ewss, make_twin_fock, BandedOperator, CoherentSpinParams, Hermiticity,
    OperatorKind, Spin, SpinState,
};
