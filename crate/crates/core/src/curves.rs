//! The Bohr-quantized classical curve supporting a state.
//!
//! The Fock state `|n⟩` lives on the circle `p² + q² = 2𝓘` with
//! `𝓘 = ħ(n + ½)`. Evolving under `H(p) = α₃p³ + α₂p² + α₁p + α₀` for a time
//! `t` shears it along `q`:
//!
//! ```text
//! p(θ) = r cos θ,   q(θ) = r sin θ + f(p(θ))·t,   f(p) = H'(p) = 3α₃p² + 2α₂p + α₁
//! ```
//!
//! with `r = sqrt(2𝓘)`. The action variable is
//! `I(p, q) = ½[(q − f(p)t)² + p²]`, so the curve is the level set `I = 𝓘`
//! and encloses area `2π𝓘`. θ is the angle conjugate to `I`: the tangent
//! `x'(θ)` equals the Hamiltonian vector field `(−∂_q I, ∂_p I)`, and the
//! curve runs with positive orientation, `½∮ x∧dx > 0`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::periodic_mean;
use crate::phase::{wedge, Chord, PhasePoint, PlanckScale};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    /// Fock index.
    pub n: u32,
    pub scale: PlanckScale,
    /// Cubic Hamiltonian coefficients `[α₀, α₁, α₂, α₃]`.
    pub alpha: [f64; 4],
    /// Evolution time, `t ≥ 0`.
    pub t: f64,
}

impl CurveSpec {
    /// Unevolved Fock state `|n⟩`, with the default Hamiltonian
    /// `α₃ = α₂ = α₁ = 1`, `α₀ = 0`.
    pub fn fock(n: u32, hbar: f64) -> Result<Self> {
        Ok(CurveSpec { n, scale: PlanckScale::new(hbar)?, alpha: [0.0, 1.0, 1.0, 1.0], t: 0.0 })
    }

    pub fn with_alpha(mut self, alpha: [f64; 4]) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("Hamiltonian coefficients must be finite"));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn at_time(mut self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid(format!("evolution time must be finite and ≥ 0, got {t}")));
        }
        self.t = t;
        Ok(self)
    }

    /// `ħ = 0.1`, `n = 5`, `t = 0.1`, `α₁ = α₂ = α₃ = 1`: the evolved state of
    /// the reference comparison.
    pub fn reference_evolved() -> Self {
        CurveSpec::fock(5, 0.1).and_then(|c| c.at_time(0.1)).expect("valid reference parameters")
    }

    pub fn validate(&self) -> Result<()> {
        PlanckScale::new(self.scale.hbar())?;
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::invalid("evolution time must be finite and ≥ 0"));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("Hamiltonian coefficients must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn hbar(&self) -> f64 {
        self.scale.hbar()
    }

    /// Quantized action `𝓘 = ħ(n + ½)`.
    #[inline]
    pub fn action(&self) -> f64 {
        self.hbar() * (self.n as f64 + 0.5)
    }

    /// Radius of the Fock circle, `sqrt(2ħ(n + ½))`.
    #[inline]
    pub fn radius(&self) -> f64 {
        (2.0 * self.action()).sqrt()
    }

    /// True when the state has a centre of symmetry (no shear, or no
    /// p-dependence in the shear velocity).
    pub fn is_reflection_symmetric(&self) -> bool {
        self.t == 0.0 || (self.alpha[3] == 0.0 && self.alpha[2] == 0.0)
    }

    /// `H(p)`.
    pub fn hamiltonian(&self, p: f64) -> f64 {
        let [a0, a1, a2, a3] = self.alpha;
        ((a3 * p + a2) * p + a1) * p + a0
    }

    /// `H(p + d/2) − H(p − d/2)`, expanded so that `α₀` cancels exactly.
    pub fn hamiltonian_difference(&self, p: f64, d: f64) -> f64 {
        let [_, a1, a2, a3] = self.alpha;
        d * (a3 * (3.0 * p * p + 0.25 * d * d) + 2.0 * a2 * p + a1)
    }

    /// Shear velocity `f(p) = H'(p)`.
    #[inline]
    pub fn velocity(&self, p: f64) -> f64 {
        let [_, a1, a2, a3] = self.alpha;
        (3.0 * a3 * p + 2.0 * a2) * p + a1
    }

    #[inline]
    fn velocity_d1(&self, p: f64) -> f64 {
        6.0 * self.alpha[3] * p + 2.0 * self.alpha[2]
    }

    #[inline]
    fn velocity_d2(&self) -> f64 {
        6.0 * self.alpha[3]
    }

    pub fn point(&self, theta: f64) -> PhasePoint {
        let r = self.radius();
        let (s, c) = theta.rem_euclid(TAU).sin_cos();
        let p = r * c;
        PhasePoint::new(p, r * s + self.velocity(p) * self.t)
    }

    /// First and second θ-derivatives of [`CurveSpec::point`].
    pub fn derivatives(&self, theta: f64) -> (Chord, Chord) {
        let r = self.radius();
        let (s, c) = theta.rem_euclid(TAU).sin_cos();
        let p = r * c;
        let dp = -r * s;
        let ddp = -p;
        let f1 = self.velocity_d1(p);
        let f2 = self.velocity_d2();
        let dq = r * c + self.t * f1 * dp;
        let ddq = -r * s + self.t * (f2 * dp * dp + f1 * ddp);
        (Chord::new(dp, dq), Chord::new(ddp, ddq))
    }

    /// Angle of a point lying on the curve (exactly, up to rounding).
    pub fn angle_of(&self, x: PhasePoint) -> f64 {
        let u = x.q - self.velocity(x.p) * self.t;
        u.atan2(x.p).rem_euclid(TAU)
    }

    /// Action function `I(p, q) = ½[(q − f(p)t)² + p²]`.
    pub fn action_value(&self, x: PhasePoint) -> f64 {
        let u = x.q - self.velocity(x.p) * self.t;
        0.5 * (u * u + x.p * x.p)
    }

    /// `(∂I/∂p, ∂I/∂q)`.
    pub fn action_gradient(&self, x: PhasePoint) -> Chord {
        let u = x.q - self.velocity(x.p) * self.t;
        Chord::new(x.p - u * self.velocity_d1(x.p) * self.t, u)
    }

    /// `½∮ x∧dx` over one period. Equals `2π𝓘` for every `t` since the shear
    /// is symplectic.
    pub fn enclosed_area(&self) -> Result<f64> {
        let f = |theta: f64| {
            let x = self.point(theta);
            let (d1, _) = self.derivatives(theta);
            Complex64::new(0.5 * wedge(&x, &d1), 0.0)
        };
        let mean = periodic_mean(&f, 64, 1e-14, 1 << 20, "enclosed area")?;
        Ok(TAU * mean.re)
    }
}

/// Poisson bracket `{A, B} = ∂_q A ∂_p B − ∂_p A ∂_q B` of two gradients
/// given as `(∂_p, ∂_q)` pairs.
#[inline]
pub fn poisson_bracket(grad_a: Chord, grad_b: Chord) -> f64 {
    grad_a.q * grad_b.p - grad_a.p * grad_b.q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fig3() -> CurveSpec {
        CurveSpec::reference_evolved()
    }

    #[test]
    fn fock_radius_and_action() {
        let c = CurveSpec::fock(5, 0.1).unwrap();
        assert_abs_diff_eq!(c.radius(), 1.1f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.radius(), 1.048809, epsilon = 1e-6);
        assert_abs_diff_eq!(c.action(), 0.55, epsilon = 1e-15);
    }

    #[test]
    fn unsheared_top_point() {
        let c = CurveSpec::fock(5, 0.1).unwrap();
        let x = c.point(FRAC_PI_2);
        assert_abs_diff_eq!(x.p, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.q, c.radius(), epsilon = 1e-15);
    }

    #[test]
    fn sheared_point_at_theta_zero() {
        let c = fig3();
        let r = 1.1f64.sqrt();
        let x = c.point(0.0);
        assert_abs_diff_eq!(x.p, r, epsilon = 1e-15);
        assert_abs_diff_eq!(x.q, (3.0 * r * r + 2.0 * r + 1.0) * 0.1, epsilon = 1e-14);
    }

    #[test]
    fn unsheared_tangent_is_rotated_radius() {
        let c = CurveSpec::fock(3, 0.2).unwrap();
        for k in 0..16 {
            let th = k as f64 * 0.4;
            let (d1, _) = c.derivatives(th);
            assert_abs_diff_eq!(d1.p, -c.radius() * th.sin(), epsilon = 1e-14);
            assert_abs_diff_eq!(d1.q, c.radius() * th.cos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let c = fig3();
        for k in 0..24 {
            let th = 0.1 + k as f64 * 0.26;
            let (d1, d2) = c.derivatives(th);
            let errs: Vec<f64> = [1e-2, 5e-3]
                .iter()
                .map(|&h| {
                    let fd = (c.point(th + h) - c.point(th - h)) * (0.5 / h);
                    (fd - d1).norm()
                })
                .collect();
            // O(h²): halving h quarters the error.
            assert!(errs[0] < 1e-3);
            assert!((errs[0] / errs[1] - 4.0).abs() < 0.1, "{errs:?}");
            let h = 1e-4;
            let fd2 = (c.derivatives(th + h).0 - c.derivatives(th - h).0) * (0.5 / h);
            assert!((fd2 - d2).norm() < 1e-6);
        }
    }

    #[test]
    fn curve_is_regular_at_reference_parameters() {
        let c = fig3();
        let min_speed = (0..4096)
            .map(|k| c.derivatives(TAU * k as f64 / 4096.0).0.norm())
            .fold(f64::INFINITY, f64::min);
        assert!(min_speed > 0.5, "min |x'| = {min_speed}");
    }

    #[test]
    fn periodicity_is_exact() {
        // Exact up to the rounding of θ + 2π itself.
        let c = fig3();
        for k in 0..10 {
            let th = 0.37 * k as f64;
            assert!((c.point(th + TAU) - c.point(th)).norm() < 1e-14);
        }
    }

    #[test]
    fn level_set_consistency() {
        for c in [CurveSpec::fock(5, 0.1).unwrap(), fig3()] {
            for k in 0..64 {
                let x = c.point(TAU * k as f64 / 64.0);
                assert_abs_diff_eq!(c.action_value(x), c.action(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gradient_of_the_circle_is_the_position() {
        let c = CurveSpec::fock(5, 0.1).unwrap();
        let x = PhasePoint::new(0.3, -0.8);
        let g = c.action_gradient(x);
        assert_eq!((g.p, g.q), (0.3, -0.8));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = fig3();
        let x = PhasePoint::new(0.7, 0.4);
        let g = c.action_gradient(x);
        let h = 1e-5;
        let dp = (c.action_value(PhasePoint::new(x.p + h, x.q)) - c.action_value(PhasePoint::new(x.p - h, x.q))) / (2.0 * h);
        let dq = (c.action_value(PhasePoint::new(x.p, x.q + h)) - c.action_value(PhasePoint::new(x.p, x.q - h))) / (2.0 * h);
        assert_abs_diff_eq!(g.p, dp, epsilon = 1e-9);
        assert_abs_diff_eq!(g.q, dq, epsilon = 1e-9);
    }

    #[test]
    fn tangent_is_the_hamiltonian_vector_field_of_the_action() {
        let c = fig3();
        for k in 0..32 {
            let th = TAU * k as f64 / 32.0;
            let g = c.action_gradient(c.point(th));
            let (d1, _) = c.derivatives(th);
            assert_abs_diff_eq!(d1.p, -g.q, epsilon = 1e-13);
            assert_abs_diff_eq!(d1.q, g.p, epsilon = 1e-13);
        }
    }

    #[test]
    fn angle_of_inverts_point() {
        let c = fig3();
        for k in 0..50 {
            let th = TAU * (k as f64 + 0.3) / 50.0;
            assert_abs_diff_eq!(c.angle_of(c.point(th)), th, epsilon = 1e-12);
        }
    }

    #[test]
    fn enclosed_area_is_quantized_and_time_independent() {
        let base = CurveSpec::fock(5, 0.1).unwrap();
        let expected = TAU * 0.55;
        assert_abs_diff_eq!(expected, 3.455752, epsilon = 1e-6);
        assert_abs_diff_eq!(base.enclosed_area().unwrap(), PI * base.radius().powi(2), epsilon = 1e-12);
        for t in [0.0, 0.05, 0.1, 0.5] {
            let area = base.at_time(t).unwrap().enclosed_area().unwrap();
            assert_abs_diff_eq!(area, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn hamiltonian_difference_matches_direct_evaluation() {
        let c = fig3().with_alpha([3.0, 0.5, -1.2, 0.7]).unwrap();
        for (p, d) in [(0.1, 0.3), (-1.4, 2.2), (0.0, -0.7)] {
            let direct = c.hamiltonian(p + d / 2.0) - c.hamiltonian(p - d / 2.0);
            assert_abs_diff_eq!(c.hamiltonian_difference(p, d), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(CurveSpec::fock(1, 0.0).is_err());
        assert!(CurveSpec::fock(1, 0.1).unwrap().at_time(-1.0).is_err());
        assert!(CurveSpec::fock(1, 0.1).unwrap().with_alpha([f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }
}
