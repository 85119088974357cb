//! Stationary-phase chord functions and the composite semiclassical
//! approximation
//!
//! ```text
//! χ_sc(ξ) = χ_s(ξ) − SP[χ_s](ξ) + SP[χ_w](ξ).
//! ```
//!
//! `SP[χ_s]` sums over the tangencies of `ξ` to the curve, the stationary
//! points of the short-chord integral. `SP[χ_w]` sums over chord realizations
//! `x(θ₊) − x(θ₋) = ξ`. Each realization carries the area `A` between the arc
//! and the chord, the centre `x_c`, and the bracket `{I₊, I₋}` of the action
//! at the two tips. Near the origin the two stationary-phase sums cancel and
//! `χ_s` survives. Far from the origin `χ_s` cancels its own stationary-phase
//! form and the realization sum survives.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curves::{poisson_bracket, CurveSpec};
use crate::error::{Error, Result};
use crate::exact::fock_chi_closed;
use crate::numerics::{integrate_doubling, periodic_roots, RootScan};
use crate::phase::{wedge, Chord, ChordValue, Flag, PhasePoint};
use crate::smallchord::chi_small;

/// Integer Maslov offsets of the two realization classes and the overall
/// amplitude factor, fixed by matching the unevolved Fock state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaslovCalibration {
    /// γ for the realization with `{I₊, I₋} > 0` (the short arc).
    pub gamma_minor: i32,
    /// γ for the realization with `{I₊, I₋} < 0` (the long arc).
    pub gamma_major: i32,
    /// Multiplier of the `sqrt(ħ/2π)` prefactor.
    pub amplitude: f64,
}

impl MaslovCalibration {
    pub const FROZEN: MaslovCalibration = MaslovCalibration { gamma_minor: 0, gamma_major: 4, amplitude: 1.0 };
}

impl Default for MaslovCalibration {
    fn default() -> Self {
        MaslovCalibration::FROZEN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalConfig {
    /// Amplitude denominators `|x″∧ξ|` and `|{I₊, I₋}|` below this are caustic.
    pub caustic_tol: f64,
    /// Realization pairs with Airy variable `ζ = (3|S₁ − S₂|/4ħ)^{2/3}` below
    /// this are too close to coalescence for separate stationary points.
    pub airy_min: f64,
    /// Uniform scan size for root bracketing.
    pub samples: usize,
    pub maslov: MaslovCalibration,
}

impl Default for SemiclassicalConfig {
    fn default() -> Self {
        SemiclassicalConfig { caustic_tol: 1e-3, airy_min: 1.0, samples: 256, maslov: MaslovCalibration::FROZEN }
    }
}

impl SemiclassicalConfig {
    fn scan(&self) -> RootScan {
        RootScan { samples: self.samples, ..RootScan::default() }
    }
}

fn require_nonzero(xi: Chord) -> Result<()> {
    if xi.is_zero() {
        return Err(Error::invalid("stationary-phase terms are undefined at ξ = 0"));
    }
    if !xi.is_finite() {
        return Err(Error::invalid("chord must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangency {
    pub theta: f64,
    /// `x″(θ)∧ξ`, the second derivative of the phase times ħ.
    pub curvature: f64,
    pub flag: Flag,
}

/// Zeros of `g(θ) = x′(θ)∧ξ`: points where `ξ` is tangent to the curve.
pub fn tangency_points(c: &CurveSpec, xi: Chord, cfg: &SemiclassicalConfig) -> Result<Vec<Tangency>> {
    require_nonzero(xi)?;
    let g = |theta: f64| wedge(&c.derivatives(theta).0, &xi);
    let roots = periodic_roots(&g, cfg.scan());
    Ok(roots
        .into_iter()
        .map(|root| {
            let mut theta = root.theta;
            // One Newton step, kept only if it helps.
            let (d1, d2) = c.derivatives(theta);
            let slope = wedge(&d2, &xi);
            if slope != 0.0 {
                let cand = theta - wedge(&d1, &xi) / slope;
                if g(cand).abs() < g(theta).abs() {
                    theta = cand.rem_euclid(TAU);
                }
            }
            let curvature = wedge(&c.derivatives(theta).1, &xi);
            let flag = if root.double || curvature.abs() < cfg.caustic_tol { Flag::NearCaustic } else { Flag::Ok };
            Tangency { theta, curvature, flag }
        })
        .collect())
}

/// Stationary-phase form of the short-chord integral,
/// `(2π)⁻¹ Σ_ℓ sqrt(2πħ/|x″∧ξ|) exp[i x∧ξ/ħ + i(π/4) sign(x″∧ξ)]`.
pub fn sp_small(c: &CurveSpec, xi: Chord, cfg: &SemiclassicalConfig) -> Result<ChordValue> {
    let hbar = c.hbar();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut flag = Flag::Ok;
    for tan in tangency_points(c, xi, cfg)? {
        flag = flag.worst(tan.flag);
        let amp = (2.0 * PI * hbar / tan.curvature.abs()).sqrt() / TAU;
        let phase = wedge(&c.point(tan.theta), &xi) / hbar + FRAC_PI_4 * tan.curvature.signum();
        sum += Complex64::from_polar(amp, phase);
    }
    Ok(ChordValue::flagged(sum, flag))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub theta_minus: f64,
    pub theta_plus: f64,
    /// `x_c = x(θ₋) + ξ/2`.
    pub center: PhasePoint,
    /// Area enclosed by the arc from θ₋ forward to θ₊ and the chord back.
    pub area: f64,
    /// `{I₊, I₋}` with `I±` the action evaluated at `x_c ± ξ/2`.
    pub bracket: f64,
    pub sigma: i32,
    pub gamma: i32,
    pub flag: Flag,
}

impl Realization {
    /// Stationary action `A + x_c∧ξ`.
    pub fn action(&self, xi: Chord) -> f64 {
        self.area + wedge(&self.center, &xi)
    }

    /// This realization's term in the stationary-phase sum.
    pub fn contribution(&self, xi: Chord, hbar: f64, amplitude: f64) -> Complex64 {
        let amp = amplitude * (hbar / TAU).sqrt() / self.bracket.abs().sqrt();
        let phase = self.action(xi) / hbar + FRAC_PI_4 * (self.sigma + self.gamma) as f64;
        Complex64::from_polar(amp, phase)
    }
}

/// All placements of `ξ` with both tips on the curve: zeros θ₋ of
/// `h(θ) = I(x(θ) + ξ) − 𝓘`. Empty beyond the widest chord in this direction.
pub fn chord_realizations(c: &CurveSpec, xi: Chord, cfg: &SemiclassicalConfig) -> Result<Vec<Realization>> {
    require_nonzero(xi)?;
    let target = c.action();
    let h = |theta: f64| c.action_value(c.point(theta) + xi) - target;
    let scan = RootScan { touch_tol: 1e-12 * target, ..cfg.scan() };
    let mut out = Vec::new();
    for root in periodic_roots(&h, scan) {
        let xm = c.point(root.theta);
        let raw = Realization {
            theta_minus: root.theta,
            theta_plus: c.angle_of(xm + xi),
            center: xm + xi * 0.5,
            area: f64::NAN,
            bracket: f64::NAN,
            sigma: 0,
            gamma: 0,
            flag: if root.double { Flag::NearCaustic } else { Flag::Ok },
        };
        out.push(realization_geometry(c, raw, xi, cfg)?);
    }
    Ok(out)
}

/// Completes a realization whose endpoints are known: area, bracket, and the
/// phase indices. `σ = −sign{I₊, I₋}` and γ follows the calibrated class.
pub fn realization_geometry(c: &CurveSpec, real: Realization, xi: Chord, cfg: &SemiclassicalConfig) -> Result<Realization> {
    let center = real.center;
    let start = real.theta_minus;
    let mut end = real.theta_plus;
    while end <= start {
        end += TAU;
    }
    // The chord closing the loop is parallel to x − x_c there, so only the arc contributes.
    let f = |theta: f64| {
        let x = c.point(theta);
        let (d1, _) = c.derivatives(theta);
        Complex64::new(0.5 * wedge(&(x - center), &d1), 0.0)
    };
    let area = integrate_doubling(&f, start, end, 2, 1e-13, 14, "realization area")?.re;
    let tip_plus = center + xi * 0.5;
    let tip_minus = center - xi * 0.5;
    let bracket = poisson_bracket(c.action_gradient(tip_plus), c.action_gradient(tip_minus));
    let sigma = if bracket > 0.0 { -1 } else { 1 };
    let gamma = if bracket > 0.0 { cfg.maslov.gamma_minor } else { cfg.maslov.gamma_major };
    let mut flag = real.flag;
    if bracket.abs() < cfg.caustic_tol {
        flag = flag.worst(Flag::NearCaustic);
    }
    Ok(Realization { area, bracket, sigma, gamma, flag, ..real })
}

/// Airy variable of a realization pair; small values mean the two
/// stationary points are about to merge.
pub fn airy_variable(pair: [&Realization; 2], xi: Chord, hbar: f64) -> f64 {
    let ds = (pair[0].action(xi) - pair[1].action(xi)).abs();
    (3.0 * ds / (4.0 * hbar)).powf(2.0 / 3.0)
}

/// Stationary-phase sum over chord realizations,
/// `sqrt(ħ/2π) Σ_j |{I₊, I₋}|^{−1/2} exp[(i/ħ)(A_j + x_j∧ξ) + i(π/4)(σ_j + γ_j)]`.
pub fn sp_full(c: &CurveSpec, xi: Chord, cfg: &SemiclassicalConfig) -> Result<ChordValue> {
    let reals = chord_realizations(c, xi, cfg)?;
    if reals.is_empty() {
        return Ok(ChordValue::flagged(Complex64::new(0.0, 0.0), Flag::Evanescent));
    }
    if reals.len() > 2 {
        return Err(Error::InvalidState(format!(
            "{} chord realizations; the curve is not convex at these parameters",
            reals.len()
        )));
    }
    let hbar = c.hbar();
    let mut flag = reals.iter().fold(Flag::Ok, |f, r| f.worst(r.flag));
    if reals.len() == 2 && airy_variable([&reals[0], &reals[1]], xi, hbar) < cfg.airy_min {
        flag = flag.worst(Flag::NearCaustic);
    }
    let sum = reals.iter().map(|r| r.contribution(xi, hbar, cfg.maslov.amplitude)).sum();
    Ok(ChordValue::flagged(sum, flag))
}

/// `χ_s − SP[χ_s] + SP[χ_w]`. At the origin, and wherever both
/// stationary-phase terms sit on the origin caustic, only `χ_s` is returned.
pub fn chi_semiclassical(c: &CurveSpec, xi: Chord, cfg: &SemiclassicalConfig) -> Result<ChordValue> {
    let small = chi_small(c, xi)?;
    if xi.is_zero() {
        return Ok(small);
    }
    let sps = sp_small(c, xi, cfg)?;
    let spw = sp_full(c, xi, cfg)?;
    if sps.flag == Flag::NearCaustic && spw.flag == Flag::NearCaustic {
        return Ok(small);
    }
    Ok(ChordValue::flagged(small.value - sps.value + spw.value, small.flag.worst(sps.flag).worst(spw.flag)))
}

/// Result of fitting the Maslov offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub calibration: MaslovCalibration,
    /// Largest `|SP[χ_w] − χ_exact|` over the fitting set.
    pub max_error: f64,
}

/// Chords of the unevolved `n = 5`, `ħ = 0.1` state away from both caustics.
fn calibration_chords() -> Vec<Chord> {
    let mut out = Vec::new();
    for i in 0..=26 {
        let len = 0.5 + 0.05 * i as f64;
        for k in 0..8 {
            out.push(Chord::polar(len, 0.1 + TAU * k as f64 / 8.0));
        }
    }
    out
}

/// Picks `(γ_minor, γ_major) ∈ {0..7}²` and a positive amplitude factor by
/// least-error matching of the realization sum to the closed Fock form on
/// the mid-ring of the unevolved state.
pub fn calibrate_maslov() -> Result<CalibrationFit> {
    let c = CurveSpec::fock(5, 0.1)?;
    let hbar = c.hbar();
    let base = SemiclassicalConfig { maslov: MaslovCalibration { gamma_minor: 0, gamma_major: 0, amplitude: 1.0 }, ..Default::default() };
    let mut samples = Vec::new();
    for xi in calibration_chords() {
        let reals = chord_realizations(&c, xi, &base)?;
        let mut minor = Complex64::new(0.0, 0.0);
        let mut major = Complex64::new(0.0, 0.0);
        for r in &reals {
            let z = r.contribution(xi, hbar, 1.0);
            if r.bracket > 0.0 {
                minor += z;
            } else {
                major += z;
            }
        }
        samples.push((minor, major, fock_chi_closed(c.n, c.scale, xi).value));
    }
    let mut best: Option<CalibrationFit> = None;
    for gm in 0..8 {
        for gj in 0..8 {
            let rot = |g: i32| Complex64::from_polar(1.0, FRAC_PI_4 * g as f64);
            let model: Vec<(Complex64, Complex64)> =
                samples.iter().map(|(a, b, e)| (a * rot(gm) + b * rot(gj), *e)).collect();
            let num: f64 = model.iter().map(|(s, e)| (s.conj() * e).re).sum();
            let den: f64 = model.iter().map(|(s, _)| s.norm_sqr()).sum();
            let k = num / den;
            if k <= 0.0 {
                continue;
            }
            let err = model.iter().map(|(s, e)| (s * k - e).norm()).fold(0.0, f64::max);
            if best.is_none_or(|b| err < b.max_error) {
                best = Some(CalibrationFit {
                    calibration: MaslovCalibration { gamma_minor: gm, gamma_major: gj, amplitude: k },
                    max_error: err,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidState("no positive-amplitude Maslov calibration".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> SemiclassicalConfig {
        SemiclassicalConfig::default()
    }

    fn fock() -> CurveSpec {
        CurveSpec::fock(5, 0.1).unwrap()
    }

    #[test]
    fn zero_chord_is_rejected() {
        assert!(sp_small(&fock(), Chord::ZERO, &cfg()).is_err());
        assert!(sp_full(&fock(), Chord::ZERO, &cfg()).is_err());
        assert_eq!(chi_semiclassical(&fock(), Chord::ZERO, &cfg()).unwrap().c(), 1.0);
    }

    #[test]
    fn tangencies_of_the_circle() {
        let t = tangency_points(&fock(), Chord::new(0.0, 0.7), &cfg()).unwrap();
        assert_eq!(t.len(), 2);
        assert_abs_diff_eq!(t[0].theta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[1].theta, PI, epsilon = 1e-12);
    }

    #[test]
    fn tangencies_rotate_with_the_chord() {
        let base = tangency_points(&fock(), Chord::new(0.0, 0.7), &cfg()).unwrap();
        let phi = 0.63;
        let rot = tangency_points(&fock(), Chord::polar(0.7, FRAC_PI_4 * 2.0 + phi), &cfg()).unwrap();
        let mut expected: Vec<f64> = base.iter().map(|t| (t.theta + phi).rem_euclid(TAU)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in rot.iter().zip(&expected) {
            assert_abs_diff_eq!(a.theta, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reference_curve_has_two_tangencies_in_every_direction() {
        let c = CurveSpec::reference_evolved();
        for k in 0..90 {
            let xi = Chord::polar(0.8, TAU * k as f64 / 90.0);
            assert_eq!(tangency_points(&c, xi, &cfg()).unwrap().len(), 2);
        }
    }

    #[test]
    fn sp_small_on_the_circle_is_the_bessel_asymptote() {
        let c = fock();
        for len in [0.3, 0.9, 1.7] {
            let xi = Chord::polar(len, 1.1);
            let x = c.radius() * len / 0.1;
            let expected = (2.0 / (PI * x)).sqrt() * (x - FRAC_PI_4).cos();
            let v = sp_small(&c, xi, &cfg()).unwrap();
            assert_abs_diff_eq!(v.c(), expected, epsilon = 1e-12);
            assert_abs_diff_eq!(v.s(), 0.0, epsilon = 1e-12);
            assert_eq!(v.flag, Flag::Ok);
        }
    }

    #[test]
    fn sp_small_tracks_chi_small_at_large_argument() {
        // Leading-order Bessel asymptotics: error ≈ envelope/(8x).
        let c = fock();
        let mut len = 10.0 * 0.1 / c.radius();
        while len < 3.0 {
            let xi = Chord::polar(len, 0.4);
            let x = c.radius() * len / 0.1;
            let envelope = (2.0 / (PI * x)).sqrt();
            let d = (sp_small(&c, xi, &cfg()).unwrap().value - chi_small(&c, xi).unwrap().value).norm();
            assert!(d / envelope <= 0.02, "len={len}: {}", d / envelope);
            len += 0.01;
        }
    }

    #[test]
    fn sp_small_blows_up_at_the_origin() {
        let v = sp_small(&fock(), Chord::new(1e-5, 0.0), &cfg()).unwrap();
        assert_eq!(v.flag, Flag::NearCaustic);
        assert!(v.value.norm() > 1.0);
    }

    #[test]
    fn circle_realization_geometry() {
        let c = fock();
        let r = c.radius();
        for &phi in &[0.2, 0.7, 1.2] {
            let len = 2.0 * r * f64::sin(phi);
            let xi = Chord::polar(len, 0.9);
            let reals = chord_realizations(&c, xi, &cfg()).unwrap();
            assert_eq!(reals.len(), 2);
            let minor = r * r * (phi - phi.sin() * phi.cos());
            let bracket = 0.5 * len * (4.0 * r * r - len * len).sqrt();
            let (short, long) = if reals[0].bracket > 0.0 { (reals[0], reals[1]) } else { (reals[1], reals[0]) };
            assert_abs_diff_eq!(short.area, minor, epsilon = 1e-11);
            assert_abs_diff_eq!(long.area, PI * r * r - minor, epsilon = 1e-11);
            assert_abs_diff_eq!(short.bracket, bracket, epsilon = 1e-12);
            assert_abs_diff_eq!(long.bracket, -bracket, epsilon = 1e-12);
            for re in &reals {
                let tip = c.point(re.theta_plus) - c.point(re.theta_minus);
                assert!((tip - xi).norm() < 1e-12);
                // Centres lie on the perpendicular bisector at distance sqrt(r² − |ξ|²/4).
                assert_abs_diff_eq!(Chord::from(re.center).norm(), (r * r - len * len / 4.0).sqrt(), epsilon = 1e-12);
                assert_abs_diff_eq!(Chord::from(re.center).dot(&xi), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn half_circle_area_at_the_diameter() {
        let c = fock();
        let r = c.radius();
        let xi = Chord::polar(2.0 * r * (1.0 - 1e-9), 0.3);
        let reals = chord_realizations(&c, xi, &cfg()).unwrap();
        assert!(!reals.is_empty());
        for re in &reals {
            assert_abs_diff_eq!(re.area, PI * r * r / 2.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn short_realization_area_vanishes_with_the_chord() {
        let c = CurveSpec::reference_evolved();
        let reals = chord_realizations(&c, Chord::polar(1e-4, 0.5), &cfg()).unwrap();
        let short = reals.iter().map(|r| r.area.abs()).fold(f64::INFINITY, f64::min);
        assert!(short < 1e-10);
    }

    #[test]
    fn realization_counts_on_the_circle() {
        let c = fock();
        let r = c.radius();
        for k in 1..40 {
            let len = 2.0 * r * k as f64 / 40.0;
            assert_eq!(chord_realizations(&c, Chord::polar(len, 0.2 * k as f64), &cfg()).unwrap().len(), 2);
        }
        let far = Chord::polar(2.0 * r + 0.05, 1.0);
        assert!(chord_realizations(&c, far, &cfg()).unwrap().is_empty());
        let v = sp_full(&c, far, &cfg()).unwrap();
        assert_eq!(v.flag, Flag::Evanescent);
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn diameter_is_flagged() {
        let c = fock();
        let v = sp_full(&c, Chord::polar(2.0 * c.radius() - 1e-7, 0.5), &cfg()).unwrap();
        assert_eq!(v.flag, Flag::NearCaustic);
    }

    #[test]
    fn amplitude_denominators_below_tolerance_are_always_flagged() {
        let c = fock();
        let cfg = cfg();
        let r = c.radius();
        let mut len = 1.9 * r;
        while len < 2.1 * r {
            let xi = Chord::polar(len, 0.77);
            let v = sp_full(&c, xi, &cfg).unwrap();
            let reals = chord_realizations(&c, xi, &cfg).unwrap();
            if reals.iter().any(|re| re.bracket.abs() < cfg.caustic_tol) {
                assert_eq!(v.flag, Flag::NearCaustic, "len={len}");
            }
            assert!(v.value.norm().is_finite());
            len += 1e-5;
        }
        for len in [1e-6, 1e-5, 1e-4, 5e-4] {
            let xi = Chord::polar(len, 0.2);
            let s = sp_small(&c, xi, &cfg).unwrap();
            let w = sp_full(&c, xi, &cfg).unwrap();
            assert_eq!(s.flag, Flag::NearCaustic);
            assert_eq!(w.flag, Flag::NearCaustic);
        }
    }

    #[test]
    fn frozen_maslov_calibration_is_reproduced() {
        let fit = calibrate_maslov().unwrap();
        assert_eq!(fit.calibration.gamma_minor, MaslovCalibration::FROZEN.gamma_minor);
        assert_eq!(fit.calibration.gamma_major, MaslovCalibration::FROZEN.gamma_major);
        assert_abs_diff_eq!(fit.calibration.amplitude, MaslovCalibration::FROZEN.amplitude, epsilon = 0.01);
        assert!(fit.max_error < 0.02, "calibration error {}", fit.max_error);
    }

    #[test]
    fn sp_full_matches_the_fock_state_on_the_mid_ring() {
        let c = fock();
        let mut worst: f64 = 0.0;
        for i in 0..=52 {
            let len = 0.5 + 0.025 * i as f64;
            for k in 0..12 {
                let xi = Chord::polar(len, TAU * k as f64 / 12.0 + 0.05);
                let sp = sp_full(&c, xi, &cfg()).unwrap().value.norm();
                let ex = fock_chi_closed(5, c.scale, xi).value.norm();
                worst = worst.max((sp - ex).abs());
            }
        }
        assert!(worst <= 0.02, "max ||sp| − |χ|| = {worst}");
    }

    #[test]
    fn composite_hands_off_near_the_origin() {
        let c = CurveSpec::reference_evolved();
        let mut worst: f64 = 0.0;
        for i in 1..=10 {
            for k in 0..24 {
                let xi = Chord::polar(0.01 * i as f64, TAU * k as f64 / 24.0);
                let sc = chi_semiclassical(&c, xi, &cfg()).unwrap().value;
                worst = worst.max((sc - chi_small(&c, xi).unwrap().value).norm());
            }
        }
        assert!(worst <= 0.02, "{worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn composite_is_hermitian(len in 0.01..2.6f64, angle in 0.0..TAU) {
            let c = CurveSpec::reference_evolved();
            let xi = Chord::polar(len, angle);
            let a = chi_semiclassical(&c, xi, &cfg()).unwrap().value;
            let b = chi_semiclassical(&c, -xi, &cfg()).unwrap().value;
            prop_assert!((a - b.conj()).norm() < 1e-8);
        }
    }
}
