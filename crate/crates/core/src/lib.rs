//! Exact and seeded-stochastic experiments on the Collatz `3n+1` map and its
//! odd `an+b` generalizations.
//!
//! The crate is organized by concern:
//!
//! * [`dynamics`]: the shortcut map, the odd-to-odd map and trajectories.
//! * [`identities`]: exact checks of the residue-class shift law, the
//!   closed-form trajectory identity, the Bohm–Sontacchi representation and
//!   the geometric-sum heuristic model.
//! * [`halfsplit`]: counting increase/decrease steps over `{1, …, 2^M}`.
//! * [`sweep`]: machine-word range sweeps with an arbitrary-precision fallback.
//! * [`anb`]: cycles, closed forms and growth diagnostics for `an+b`.
//! * [`stats`]: seeded coin-flip experiments, confidence intervals, the
//!   drift bound and stopping-time statistics.
//!
//! All integer values are [`Natural`] (arbitrary precision) unless a module
//! says otherwise; rational quantities are exact [`Rational`]s.

pub mod anb;
pub mod dynamics;
mod error;
pub mod halfsplit;
pub mod identities;
pub mod stats;
pub mod sweep;

pub use anb::{AnbTrajectory, CycleRecord, DivergenceDiagnostic, GrowthLabel};
pub use dynamics::{
    AnbParams, Natural, ParityExponents, StepKind, Termination, Trajectory, DEFAULT_MAX_STEPS,
};
pub use error::{Error, Result};
pub use halfsplit::{GammaSet, HalfSplitReport, StepTally};
pub use identities::{Rational, ResidueClass};
pub use stats::{ConfidenceLevel, IntervalMode, SampleStats, StoppingProfile};
pub use sweep::SweepReport;
