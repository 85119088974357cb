//! The short-chord regime: the classical average
//! `χ_s(ξ) = (2π)⁻¹∮ dθ exp[i x(θ)∧ξ/ħ]` over the quantized curve, its
//! moments, the moment Taylor series, and the covariance-ellipse estimate of
//! the first nodal line and of the closest blind spots.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curves::CurveSpec;
use crate::error::{Error, Result};
use crate::numerics::periodic_mean;
use crate::phase::{wedge, Chord, ChordValue, PlanckScale};

const SMALL_TOL: f64 = 1e-12;
const MAX_NODES: usize = 1 << 22;

/// Short-chord integral, trapezoid rule from 64 nodes with doubling to a
/// relative change below `1e-12`.
pub fn chi_small(c: &CurveSpec, xi: Chord) -> Result<ChordValue> {
    if xi.is_zero() {
        return Ok(ChordValue::real(1.0));
    }
    let hbar = c.hbar();
    let f = |theta: f64| Complex64::from_polar(1.0, wedge(&c.point(theta), &xi) / hbar);
    periodic_mean(&f, 64, SMALL_TOL, MAX_NODES, "short-chord integral").map(ChordValue::ok)
}

/// Raw moments `m[j][k] = ⟨q^j p^k⟩` for `j + k ≤ K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub max_order: usize,
    /// `m[j][k]`, rows of decreasing length `K + 1 − j`.
    pub m: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn new(max_order: usize, m: Vec<Vec<f64>>) -> Result<Self> {
        if m.len() != max_order + 1 || m.iter().enumerate().any(|(j, row)| row.len() != max_order + 1 - j) {
            return Err(Error::invalid("moment table shape must be triangular of order K"));
        }
        if (m[0][0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("zeroth moment is {}, expected 1", m[0][0])));
        }
        Ok(MomentTable { max_order, m })
    }

    /// `⟨q^j p^k⟩`.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.m[j][k]
    }

    /// `⟨x̂⟩ = (⟨p⟩, ⟨q⟩)`.
    pub fn mean(&self) -> Chord {
        Chord::new(self.m[0][1], self.m[1][0])
    }

    /// Central covariance `[[var p, cov], [cov, var q]]`.
    pub fn covariance(&self) -> Result<[[f64; 2]; 2]> {
        if self.max_order < 2 {
            return Err(Error::invalid("covariance needs second moments"));
        }
        let mu = self.mean();
        let vp = self.m[0][2] - mu.p * mu.p;
        let vq = self.m[2][0] - mu.q * mu.q;
        let cpq = self.m[1][1] - mu.p * mu.q;
        Ok([[vp, cpq], [cpq, vq]])
    }

    /// Robertson–Schrödinger bound `det K ≥ ħ²/4`.
    pub fn satisfies_uncertainty(&self, scale: PlanckScale) -> Result<bool> {
        let k = self.covariance()?;
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        Ok(det >= 0.25 * scale.hbar().powi(2) * (1.0 - 1e-12))
    }
}

/// Curve averages `(2π)⁻¹∮ q(θ)^j p(θ)^k dθ`.
pub fn classical_moments(c: &CurveSpec, max_order: usize) -> Result<MomentTable> {
    if max_order < 1 {
        return Err(Error::invalid("moment order must be at least 1"));
    }
    let mut m = Vec::with_capacity(max_order + 1);
    for j in 0..=max_order {
        let mut row = Vec::with_capacity(max_order + 1 - j);
        for k in 0..=(max_order - j) {
            let f = |theta: f64| {
                let x = c.point(theta);
                Complex64::new(x.q.powi(j as i32) * x.p.powi(k as i32), 0.0)
            };
            row.push(periodic_mean(&f, 64, 1e-14, 1 << 16, "classical moment")?.re);
        }
        m.push(row);
    }
    MomentTable::new(max_order, m)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Partial sum through `order` of
/// `χ(ξ) = Σ_n (1/n!)(−i/ħ)ⁿ ⟨(ξ∧x̂)ⁿ⟩`, with
/// `(ξ∧x)ⁿ = Σ_k C(n,k) ξ_p^{n−k} (−ξ_q)^k q^{n−k} p^k`.
pub fn chi_taylor(m: &MomentTable, scale: PlanckScale, xi: Chord, order: usize) -> Result<ChordValue> {
    if order > m.max_order {
        return Err(Error::invalid(format!("order {order} exceeds moment table order {}", m.max_order)));
    }
    let hbar = scale.hbar();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut factor = Complex64::new(1.0, 0.0);
    for n in 0..=order {
        if n > 0 {
            factor *= Complex64::new(0.0, -1.0 / (hbar * n as f64));
        }
        let avg: f64 = (0..=n)
            .map(|k| binomial(n, k) * xi.p.powi((n - k) as i32) * (-xi.q).powi(k as i32) * m.get(n - k, k))
            .sum();
        sum += factor * avg;
    }
    Ok(ChordValue::ok(sum))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentAxis {
    /// `⟨p̂ⁿ⟩ = (−iħ)ⁿ ∂ⁿχ/∂ξ_qⁿ`.
    P,
    /// `⟨q̂ⁿ⟩ = (iħ)ⁿ ∂ⁿχ/∂ξ_pⁿ`.
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSpec {
    /// Largest finite-difference step.
    pub step: f64,
    /// Richardson levels; the step is halved `levels − 1` times.
    pub levels: usize,
    /// Absolute error of the evaluator being differentiated.
    pub noise: f64,
    /// Accuracy wanted for the moment.
    pub tol: f64,
}

impl Default for DerivativeSpec {
    fn default() -> Self {
        DerivativeSpec { step: 0.02, levels: 4, noise: 1e-12, tol: 1e-8 }
    }
}

/// Moment of order `n` along one axis from central differences of `χ` at the
/// origin, Richardson-extrapolated in `h²`.
pub fn moments_from_chi<F>(chi: &F, scale: PlanckScale, n: u32, axis: MomentAxis, spec: &DerivativeSpec) -> Result<f64>
where
    F: Fn(Chord) -> Result<ChordValue> + ?Sized,
{
    if n == 0 {
        return Ok(1.0);
    }
    if spec.step.is_nan() || spec.step <= 0.0 || spec.levels == 0 {
        return Err(Error::invalid("finite-difference step and level count must be positive"));
    }
    let hbar = scale.hbar();
    let nn = n as i32;
    // Roundoff of the n-th central difference is about 2ⁿ·noise/hⁿ.
    let h_min = spec.step / 2f64.powi(spec.levels as i32 - 1);
    let amplification = hbar.powi(nn) * 2f64.powi(nn);
    let noise = amplification * spec.noise / h_min.powi(nn);
    if noise > spec.tol {
        let needed = (amplification * spec.noise / spec.tol).powf(1.0 / n as f64);
        return Err(Error::NoisyDerivative {
            step: spec.step,
            noise,
            recommended: needed * 2f64.powi(spec.levels as i32 - 1),
        });
    }
    let at = |s: f64| -> Result<Complex64> {
        let xi = match axis {
            MomentAxis::P => Chord::new(0.0, s),
            MomentAxis::Q => Chord::new(s, 0.0),
        };
        chi(xi).map(|v| v.value)
    };
    // δⁿf(0) = Σ_k (−1)^k C(n,k) f((n/2 − k)h) = hⁿ f⁽ⁿ⁾(0)(1 + O(h²)).
    let central = |h: f64| -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..=n as usize {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += at((n as f64 / 2.0 - k as f64) * h)? * (sign * binomial(n as usize, k));
        }
        Ok(s / h.powi(nn))
    };
    let mut table: Vec<Complex64> = Vec::with_capacity(spec.levels);
    let mut h = spec.step;
    for _ in 0..spec.levels {
        let mut cur = central(h)?;
        let mut pow4 = 1.0;
        for prev in table.iter_mut() {
            pow4 *= 4.0;
            let next = (cur * pow4 - *prev) / (pow4 - 1.0);
            *prev = cur;
            cur = next;
        }
        table.push(cur);
        h *= 0.5;
    }
    let deriv = *table.last().expect("at least one level");
    let factor = match axis {
        MomentAxis::P => Complex64::new(0.0, -hbar).powi(nn),
        MomentAxis::Q => Complex64::new(0.0, hbar).powi(nn),
    };
    Ok((factor * deriv).re)
}

/// Level set `Q(ξ) = ξ_p²⟨q²⟩ − 2ξ_pξ_q⟨qp⟩ + ξ_q²⟨p²⟩ = level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a_pp: f64,
    pub a_pq: f64,
    pub a_qq: f64,
    pub level: f64,
}

impl QuadraticForm {
    pub fn value(&self, xi: Chord) -> f64 {
        self.a_pp * xi.p * xi.p + 2.0 * self.a_pq * xi.p * xi.q + self.a_qq * xi.q * xi.q
    }

    /// Distance from the origin to the level set along the unit vector `u`.
    pub fn radius_along(&self, u: Chord) -> f64 {
        (self.level / self.value(u)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindSpotEstimate {
    pub ellipse: QuadraticForm,
    /// The two chords where the ellipse meets the line through the origin
    /// along `⟨x̂⟩`; empty when `degenerate`.
    pub spots: Vec<Chord>,
    /// `⟨x̂⟩` vanishes: the state is centre-symmetric and the zeros form
    /// nodal circles rather than isolated points.
    pub degenerate: bool,
}

/// First nodal line of `Re χ` from the second-order expansion,
/// `⟨(ξ∧x̂)²⟩ = 2ħ²`, and its intersections with the line along `⟨x̂⟩`,
/// where the first-order phase `ξ∧⟨x̂⟩` of `Im χ` vanishes.
pub fn closest_blind_spot_estimate(m: &MomentTable, scale: PlanckScale) -> Result<BlindSpotEstimate> {
    if m.max_order < 2 {
        return Err(Error::invalid("the blind-spot estimate needs second moments"));
    }
    let (qq, qp, pp) = (m.get(2, 0), m.get(1, 1), m.get(0, 2));
    if !(qq > 0.0 && pp > 0.0 && qq * pp - qp * qp > 0.0) {
        return Err(Error::InvalidState("second-moment matrix is not positive definite".into()));
    }
    let ellipse = QuadraticForm { a_pp: qq, a_pq: -qp, a_qq: pp, level: 2.0 * scale.hbar().powi(2) };
    let mean = m.mean();
    let degenerate = mean.norm() < 1e-8 * (pp + qq).sqrt();
    let spots = if degenerate {
        Vec::new()
    } else {
        let u = mean * (1.0 / mean.norm());
        let s = ellipse.radius_along(u);
        vec![u * s, u * -s]
    };
    Ok(BlindSpotEstimate { ellipse, spots, degenerate })
}
