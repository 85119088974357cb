//! Chord functions (quantum characteristic functions) of Bohr-quantized
//! states of one degree of freedom.
//!
//! The chord function `χ(ξ) = ⟨ψ|T̂₋ξ|ψ⟩` is the overlap of a state with its
//! rigid phase-space translation by the chord `ξ = (ξ_p, ξ_q)`. This crate
//! evaluates it three ways for Fock states sheared by a cubic momentum
//! Hamiltonian:
//!
//! * [`exact`]: momentum-space quadrature of the evolved Fock state, plus the
//!   closed Laguerre form at `t = 0`. This is the reference for everything else.
//! * [`smallchord`]: the classical average of `exp(i x(θ)∧ξ/ħ)` over the
//!   quantized curve, with moments, Taylor partial sums and the
//!   covariance-ellipse estimate of the closest blind spots.
//! * [`semiclassical`]: stationary-phase evaluation over tangencies and chord
//!   realizations, joined to the short-chord integral.
//!
//! [`blindspots`] extracts nodal lines and zero-overlap chords from grids, and
//! [`verify`] bundles the quantitative checks behind `chordfn verify`.

pub mod blindspots;
pub mod curves;
pub mod error;
pub mod evaluator;
pub mod exact;
pub mod numerics;
pub mod phase;
pub mod semiclassical;
pub mod smallchord;
pub mod verify;

pub use crate::curves::CurveSpec;
pub use crate::error::{Error, Result};
pub use crate::evaluator::{ChordEvaluator, EvaluatorKind};
pub use crate::phase::{translate, wedge, Chord, ChordValue, Flag, PhasePoint, PlanckScale};
