//! Exact counterfactual mediation analysis over discrete structural causal
//! models.
//!
//! `pathwise` evaluates controlled, natural direct, natural indirect, total,
//! and path-specific effects by ground-truth enumeration of a finite SCM,
//! checks the graphical conditions under which those effects are identifiable,
//! and evaluates the corresponding identification formulas on exact
//! distributions or sampled datasets so the two routes can be compared.
//!
//! The crate is organized around five building blocks:
//!
//! - [`graph`] — causal DAGs, graph mutilation, d-separation, and the
//!   identifiability criteria (experimental criterion, the four-covariate
//!   graphical criterion, back-door admissibility, witness search).
//! - [`scm`] — discrete structural causal models: counterfactual evaluation,
//!   path surgery, exact distributions by unit enumeration, and seeded
//!   sampling.
//! - [`effects`] — the effect definitions themselves, at unit and population
//!   level.
//! - [`estimand`] — the identification formulas evaluated against a
//!   [`estimand::DistributionSource`], plus estimand-vs-ground-truth
//!   crosschecks.
//! - [`model`] — the JSON model document format with line/column error
//!   reporting and a canonical printer.
//!
//! All numeric work is generic over the scalar type through [`Real`];
//! the crate root exports `f64` aliases for the common case.

pub mod effects;
pub mod estimand;
pub mod fixtures;
pub mod graph;
pub mod model;
pub mod report;
pub mod scm;
pub mod synth;

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type for probabilities, numeric codes, and effect values.
///
/// Implemented for `f32` and `f64`. The probability-mass tolerance is
/// type-dependent: summing many terms in `f32` accumulates error well above
/// the `f64` bound, so validation uses the implementor's own tolerance.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Tolerance used when checking that probability mass sums to one.
    fn mass_tolerance() -> Self;

    /// Shorthand for lossless-enough construction from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Real for f64 {
    fn mass_tolerance() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn mass_tolerance() -> Self {
        1e-4
    }
}

pub use graph::{CausalGraph, ConditionReport, MutilationSpec, VariableId};
pub use scm::{Assignment, Dataset, Regime, Unit};

/// Default-precision structural causal model.
pub type Scm = scm::Scm<f64>;
/// Default-precision exact distribution.
pub type Distribution = scm::Distribution<f64>;
/// Default-precision effect report.
pub type EffectReport = effects::EffectReport<f64>;
/// Default-precision estimand result.
pub type EstimandResult = estimand::EstimandResult<f64>;
