//! Symplectic phase-space primitives.
//!
//! Points `x = (p, q)` and chords `ξ = (ξ_p, ξ_q)` share one wedge product,
//! `a ∧ b = a_p b_q − a_q b_p`. The translation operator is
//! `T̂_ξ = exp[(i/ħ) ξ∧x̂] = exp[(i/ħ)(ξ_p q̂ − ξ_q p̂)]`, so every phase in the
//! crate is built from [`wedge`] and nothing else. Units have `ω = m = 1`;
//! `ħ` is the only scale.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything with a momentum and a position component.
pub trait PhaseVector {
    fn p(&self) -> f64;
    fn q(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

/// A phase-space displacement. Also used for tangent vectors of curves.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Chord {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        PhasePoint { p, q }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}

impl Chord {
    pub const ZERO: Chord = Chord { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        Chord { p, q }
    }

    /// Chord of length `len` at angle `angle` from the `ξ_p` axis.
    pub fn polar(len: f64, angle: f64) -> Self {
        Chord::new(len * angle.cos(), len * angle.sin())
    }

    pub fn norm(&self) -> f64 {
        self.p.hypot(self.q)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    pub fn dot(&self, other: &Chord) -> f64 {
        self.p * other.p + self.q * other.q
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0.0 && self.q == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }
}

impl PhaseVector for PhasePoint {
    fn p(&self) -> f64 {
        self.p
    }
    fn q(&self) -> f64 {
        self.q
    }
}

impl PhaseVector for Chord {
    fn p(&self) -> f64 {
        self.p
    }
    fn q(&self) -> f64 {
        self.q
    }
}

/// `a ∧ b = a_p b_q − a_q b_p`.
#[inline]
pub fn wedge<A: PhaseVector, B: PhaseVector>(a: &A, b: &B) -> f64 {
    a.p() * b.q() - a.q() * b.p()
}

/// Classical translation `x ↦ x + ξ`.
#[inline]
pub fn translate(x: PhasePoint, xi: Chord) -> PhasePoint {
    x + xi
}

impl Add<Chord> for PhasePoint {
    type Output = PhasePoint;
    fn add(self, xi: Chord) -> PhasePoint {
        PhasePoint::new(self.p + xi.p, self.q + xi.q)
    }
}

impl Sub<Chord> for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, xi: Chord) -> PhasePoint {
        PhasePoint::new(self.p - xi.p, self.q - xi.q)
    }
}

impl Sub for PhasePoint {
    type Output = Chord;
    fn sub(self, other: PhasePoint) -> Chord {
        Chord::new(self.p - other.p, self.q - other.q)
    }
}

impl Add for Chord {
    type Output = Chord;
    fn add(self, other: Chord) -> Chord {
        Chord::new(self.p + other.p, self.q + other.q)
    }
}

impl Sub for Chord {
    type Output = Chord;
    fn sub(self, other: Chord) -> Chord {
        Chord::new(self.p - other.p, self.q - other.q)
    }
}

impl Neg for Chord {
    type Output = Chord;
    fn neg(self) -> Chord {
        Chord::new(-self.p, -self.q)
    }
}

impl Mul<f64> for Chord {
    type Output = Chord;
    fn mul(self, s: f64) -> Chord {
        Chord::new(self.p * s, self.q * s)
    }
}

impl From<PhasePoint> for Chord {
    fn from(x: PhasePoint) -> Chord {
        Chord::new(x.p, x.q)
    }
}

/// The reduced Planck constant of the problem, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PlanckScale(f64);

impl PlanckScale {
    pub fn new(hbar: f64) -> Result<Self> {
        if hbar.is_finite() && hbar > 0.0 {
            Ok(PlanckScale(hbar))
        } else {
            Err(Error::invalid(format!("ħ must be positive and finite, got {hbar}")))
        }
    }

    #[inline]
    pub fn hbar(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PlanckScale {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        PlanckScale::new(h)
    }
}

impl From<PlanckScale> for f64 {
    fn from(s: PlanckScale) -> f64 {
        s.0
    }
}

/// Quality of an evaluation. Ordered from best to worst so that combining
/// flags is a `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    Ok,
    DegenerateSymmetry,
    Evanescent,
    NearCaustic,
    Failed,
}

impl Flag {
    pub fn worst(self, other: Flag) -> Flag {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Ok => "OK",
            Flag::DegenerateSymmetry => "DEGENERATE_SYMMETRY",
            Flag::Evanescent => "EVANESCENT",
            Flag::NearCaustic => "NEAR_CAUSTIC",
            Flag::Failed => "FAILED",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complex chord-function value; `c(ξ)` is the real part and `s(ξ)` the
/// imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordValue {
    pub value: Complex64,
    pub flag: Flag,
}

impl ChordValue {
    pub fn ok(value: Complex64) -> Self {
        ChordValue { value, flag: Flag::Ok }
    }

    pub fn flagged(value: Complex64, flag: Flag) -> Self {
        ChordValue { value, flag }
    }

    /// NaN value flagged `FAILED`, standing in for an evaluation error.
    pub fn failed() -> Self {
        ChordValue::flagged(Complex64::new(f64::NAN, f64::NAN), Flag::Failed)
    }

    pub fn real(re: f64) -> Self {
        ChordValue::ok(Complex64::new(re, 0.0))
    }

    /// Cosine part `c(ξ)`.
    pub fn c(&self) -> f64 {
        self.value.re
    }

    /// Sine part `s(ξ)`.
    pub fn s(&self) -> f64 {
        self.value.im
    }

    pub fn abs2(&self) -> f64 {
        self.value.norm_sqr()
    }

    pub fn phase(&self) -> f64 {
        self.value.arg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge(&Chord::new(1.0, 0.0), &Chord::new(0.0, 1.0)), 1.0);
        assert_eq!(wedge(&Chord::new(2.0, 3.0), &Chord::new(5.0, 7.0)), -1.0);
        let a = PhasePoint::new(0.3, -1.7);
        assert_eq!(wedge(&a, &a), 0.0);
    }

    #[test]
    fn wedge_matches_translation_generator() {
        // ξ∧x = ξ_p q − ξ_q p
        let xi = Chord::new(0.4, 0.9);
        let x = PhasePoint::new(-1.2, 2.5);
        assert_eq!(wedge(&xi, &x), 0.4 * 2.5 - 0.9 * -1.2);
    }

    #[test]
    fn translate_examples() {
        assert_eq!(translate(PhasePoint::ORIGIN, Chord::new(1.0, 2.0)), PhasePoint::new(1.0, 2.0));
        let x = PhasePoint::new(0.25, -3.0);
        assert_eq!(translate(x, Chord::ZERO), x);
        let xi = Chord::new(0.5, 0.125);
        assert_eq!(translate(translate(x, xi), -xi), x);
    }

    #[test]
    fn planck_scale_rejects_nonpositive() {
        assert!(PlanckScale::new(0.0).is_err());
        assert!(PlanckScale::new(-0.1).is_err());
        assert!(PlanckScale::new(f64::NAN).is_err());
        assert_eq!(PlanckScale::new(0.1).unwrap().hbar(), 0.1);
    }

    #[test]
    fn flags_combine_to_the_worst() {
        assert_eq!(Flag::Ok.worst(Flag::NearCaustic), Flag::NearCaustic);
        assert_eq!(Flag::Evanescent.worst(Flag::Ok), Flag::Evanescent);
    }

    fn vec2() -> impl Strategy<Value = Chord> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(p, q)| Chord::new(p, q))
    }

    proptest! {
        #[test]
        fn wedge_is_antisymmetric(a in vec2(), b in vec2()) {
            prop_assert_eq!(wedge(&a, &b), -wedge(&b, &a));
        }

        #[test]
        fn wedge_is_additive(a in vec2(), b in vec2(), c in vec2()) {
            let lhs = wedge(&a, &(b + c));
            let rhs = wedge(&a, &b) + wedge(&a, &c);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn translation_is_a_group_action(a in vec2(), b in vec2(), c in vec2()) {
            let x = PhasePoint::new(a.p, a.q);
            let lhs = translate(translate(x, b), c);
            let rhs = translate(x, b + c);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + x.p.abs() + x.q.abs()));
        }
    }
}
