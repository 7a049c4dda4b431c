//! Brickwork circuits of controlled (bi)stochastic gates.
//!
//! A two-site *controlled* gate applies a single-site operation `u_i` to its
//! target site whenever the control site is in state `i`. When the `u_i` are
//! stochastic (flat-state preserving) or bistochastic, spatio-temporal
//! correlation functions of brickwork circuits built from such gates vanish
//! everywhere except on the autocorrelation line. This crate provides
//!
//! - gate construction and condition checking ([`gate`], [`families`]),
//! - the constructive operator-Schmidt characterization of controlled-stochastic
//!   gates ([`schmidt`]),
//! - exact dense state-vector evolution with light-cone-restricted contraction
//!   ([`circuit`]),
//! - exact two-point / multi-point correlators, autocorrelation series and
//!   decay fits ([`correlator`], [`fit`]),
//! - the folded-picture Haar reduction of random controlled quantum gates to
//!   effective classical gates ([`haar`]),
//! - a Monte-Carlo trajectory sampler usable as an independent statistical
//!   oracle ([`mc`]),
//! - an exhaustive survey of controlled deterministic automata ([`survey`]).

pub mod circuit;
pub mod correlator;
pub mod error;
pub mod families;
pub mod fit;
pub mod gate;
pub mod haar;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod random;
pub mod schmidt;
pub mod survey;

pub use circuit::{evolve, Boundary, CircuitSpec, Evolver, LayerParity, StateVector};
pub use correlator::{
    autocorrelation, correlation_grid, multi_point, two_point, verify_theorems, CorrelationGrid,
    MultiPointQuery, PointValue,
};
pub use error::{Error, Result};
pub use families::{make_gate, GateFamily};
pub use fit::{fit_decay, DecayFit, FitFlag};
pub use gate::{
    check_bcs, check_cs, check_generalized, condition_report, flat_state, rewrite_generalized,
    traceless_basis, CheckOutcome, ConditionReport, ControlledGate, GeneralizedC, LocalGate,
    Observable,
};
pub use schmidt::{cs_factorize, operator_schmidt, verify_bistochastic_refinement};
pub use survey::{classify_all, enumerate_controlled_permutations, BehaviorClass, SurveyRecord};

/// Max-norm tolerance for all gate condition checks. The constructions here
/// are exact up to round-off, so failures are structural, not numerical.
pub const TOL_COND: f64 = 1e-10;

/// Entries above `-EPS_NONNEG` count as nonnegative for the `probabilistic` flag.
pub const EPS_NONNEG: f64 = 1e-12;

/// Zero threshold for correlation-vanishing assertions.
pub const ZERO_TOL: f64 = 1e-12;

/// Relative singular-value cutoff for operator-Schmidt rank truncation.
pub const SIGMA_CUT_REL: f64 = 1e-12;

/// Threshold on |mu| deciding the S / S' index split in the
/// controlled-stochastic factorization.
pub const MU_TOL: f64 = 1e-10;
