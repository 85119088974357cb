//! Exact chord functions of evolved Fock states, and the purity checks on
//! gridded `|χ|²`.
//!
//! In the momentum representation the evolved state is
//! `ψ(p, t) = e^{−iH(p)t/ħ} ψ_n(p)`, so
//!
//! ```text
//! χ(ξ) = ∫dp ψ_n*(p₊) ψ_n(p₋) exp{−(i/ħ)(t[H(p₊) − H(p₋)] − p ξ_q)},   p± = p ± ξ_p/2.
//! ```
//!
//! The Hermite phases `(−i)ⁿ` cancel in the product, leaving a real envelope
//! times a pure phase. This is the reference every approximation is measured
//! against.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::blindspots::{ChordFieldGrid, Region};
use crate::curves::CurveSpec;
use crate::error::{Error, Result};
use crate::numerics::integrate_doubling;
use crate::phase::{Chord, ChordValue, Flag, PlanckScale};

/// The quantum state `e^{−iĤt/ħ}|n⟩` has the same parameters as its curve.
pub type StateSpec = CurveSpec;

/// Boundary `|χ|²` above which a grid is refused for Fourier checks.
pub const BOUNDARY_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Initial number of Gauss–Legendre nodes; doubled until converged.
    pub nodes: usize,
    /// Truncation half-width in units of the turning point `sqrt(ħ(2n+1))`.
    pub half_width: f64,
    /// Absolute agreement required between successive doublings.
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 320, half_width: 8.0, tol: 1e-12, max_doublings: 10 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::invalid("quadrature needs at least 2 nodes"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::invalid("truncation half-width must be positive"));
        }
        Ok(())
    }
}

/// Value of a wavefunction; `underflow` is set when the Gaussian factor
/// fell below the double range and the value was returned as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: Complex64,
    pub underflow: bool,
}

const RESCALE: f64 = 1e150;

/// Normalized Hermite function `φ_n(x) = (2ⁿn!√π)^{−1/2} H_n(x) e^{−x²/2}`
/// by the three-term recurrence, with the Gaussian applied in log space at the
/// end so neither factor overflows.
pub(crate) fn hermite_function(n: u32, x: f64) -> (f64, bool) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        let k = k as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * x * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    let exponent = log_scale - 0.5 * x * x - 0.25 * PI.ln();
    if cur == 0.0 {
        return (0.0, false);
    }
    let log_mag = exponent + cur.abs().ln();
    if log_mag < -745.0 {
        return (0.0, true);
    }
    (cur * exponent.exp(), false)
}

/// Momentum wavefunction `ψ_n(p) = (−i)ⁿ ħ^{−1/4} φ_n(p/√ħ)`.
pub fn hermite_psi(n: u32, scale: PlanckScale, p: f64) -> PsiValue {
    let hbar = scale.hbar();
    let (phi, underflow) = hermite_function(n, p / hbar.sqrt());
    let phase = match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    PsiValue { value: phase * (phi * hbar.powf(-0.25)), underflow }
}

/// `L_n(x)` by the standard recurrence.
pub(crate) fn laguerre(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed form for the unevolved Fock state,
/// `χ_n(ξ) = e^{−|ξ|²/4ħ} L_n(|ξ|²/2ħ)`.
pub fn fock_chi_closed(n: u32, scale: PlanckScale, xi: Chord) -> ChordValue {
    let z = xi.norm_sqr() / (2.0 * scale.hbar());
    ChordValue::real((-0.5 * z).exp() * laguerre(n, z))
}

/// Chord function of `e^{−iĤt/ħ}|n⟩` by Gauss–Legendre quadrature with
/// node doubling.
pub fn evolved_chi(s: &StateSpec, xi: Chord, quad: &QuadratureSpec) -> Result<ChordValue> {
    quad.validate()?;
    if !xi.is_finite() {
        return Err(Error::invalid("chord must be finite"));
    }
    let hbar = s.hbar();
    let sq = hbar.sqrt();
    let w = quad.half_width * (hbar * (2.0 * s.n as f64 + 1.0)).sqrt();
    let half = 0.5 * xi.p;
    // Both factors must sit inside their envelopes: |p ± ξ_p/2| ≤ w.
    let lim = w - half.abs();
    if lim <= 0.0 {
        return Ok(ChordValue::flagged(Complex64::new(0.0, 0.0), Flag::Evanescent));
    }
    let t = s.t;
    let integrand = |p: f64| {
        let (a, _) = hermite_function(s.n, (p + half) / sq);
        let (b, _) = hermite_function(s.n, (p - half) / sq);
        let phase = -(t * s.hamiltonian_difference(p, xi.p) - p * xi.q) / hbar;
        Complex64::from_polar(a * b / sq, phase)
    };
    let panels = quad.nodes.div_ceil(20);
    let value = integrate_doubling(&integrand, -lim, lim, panels, quad.tol, quad.max_doublings, "exact chord quadrature")?;
    debug_assert!(value.norm() <= 1.0 + 1e-8, "|χ| = {} exceeds 1", value.norm());
    if value.norm() > 1.0 + 1e-8 {
        return Ok(ChordValue::flagged(value, Flag::Failed));
    }
    Ok(ChordValue::ok(value))
}

/// A real field on the nodes of a chord-plane grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGrid {
    pub region: Region,
    pub n_p: usize,
    pub n_q: usize,
    /// Row-major: `values[iq * n_p + ip]`.
    pub values: Vec<f64>,
}

impl RealGrid {
    pub fn get(&self, ip: usize, iq: usize) -> f64 {
        self.values[iq * self.n_p + ip]
    }
}

/// Square grid of `n` nodes per axis whose spacing `h` satisfies
/// `n·h² = 2πħ`, so the symplectic Fourier kernel maps onto a plain discrete
/// transform. `n` is rounded up to the next odd number.
pub fn reciprocal_region(scale: PlanckScale, n: usize) -> (Region, usize) {
    let n = if n.is_multiple_of(2) { n + 1 } else { n };
    let h = (2.0 * PI * scale.hbar() / n as f64).sqrt();
    let half = ((n - 1) / 2) as f64 * h;
    (Region { p_min: -half, p_max: half, q_min: -half, q_max: half }, n)
}

/// How the discrete symplectic transform was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformRoute {
    /// Reciprocal grid, two passes of 1-D FFTs.
    Fft,
    /// Separable direct sums; any centred grid.
    Direct,
}

fn check_centred(grid: &ChordFieldGrid) -> Result<()> {
    let r = &grid.region;
    let sym = |a: f64, b: f64| (a + b).abs() <= 1e-12 * (b - a).abs();
    if grid.n_p.is_multiple_of(2) || grid.n_q.is_multiple_of(2) || !sym(r.p_min, r.p_max) || !sym(r.q_min, r.q_max) {
        return Err(Error::invalid("Fourier checks need a grid centred on the origin with odd node counts"));
    }
    Ok(())
}

fn boundary_max(grid: &ChordFieldGrid, f: &[f64]) -> f64 {
    let (np, nq) = (grid.n_p, grid.n_q);
    let mut m: f64 = 0.0;
    for ip in 0..np {
        m = m.max(f[ip]).max(f[(nq - 1) * np + ip]);
    }
    for iq in 0..nq {
        m = m.max(f[iq * np]).max(f[iq * np + np - 1]);
    }
    m
}

/// `G(ξ) = (2πħ)^{−1} Σ_η |χ(η)|² e^{(i/ħ)·sign·ξ∧η} h_p h_q` on the grid
/// nodes. `|χ|²` is real and even, so `G` is real and the sign only matters
/// for inputs that are not.
pub fn symplectic_fourier(grid: &ChordFieldGrid, scale: PlanckScale, sign: f64) -> Result<(RealGrid, TransformRoute)> {
    check_centred(grid)?;
    let f: Vec<f64> = grid.values.iter().map(|v| v.abs2()).collect();
    let boundary = boundary_max(grid, &f);
    if boundary > BOUNDARY_LIMIT {
        return Err(Error::GridTooSmall { boundary, limit: BOUNDARY_LIMIT });
    }
    let hbar = scale.hbar();
    let (hp, hq) = (grid.region.step_p(grid.n_p), grid.region.step_q(grid.n_q));
    let reciprocal = grid.n_p == grid.n_q && ((grid.n_p as f64 * hp * hq) / (2.0 * PI * hbar) - 1.0).abs() < 1e-9;
    let values = if reciprocal {
        fft_transform(&f, grid.n_p, sign)
    } else {
        direct_transform(&f, grid, hbar, sign)
    };
    let route = if reciprocal { TransformRoute::Fft } else { TransformRoute::Direct };
    Ok((RealGrid { region: grid.region, n_p: grid.n_p, n_q: grid.n_q, values }, route))
}

/// With `ξ = (a'h_p, b'h_q)`, `η = (c'h_p, d'h_q)` and `N h_p h_q = 2πħ`:
/// `G[b,a] = N⁻¹ Σ_{d,c} F[d,c] e^{2πi·sign·a'd'/N} e^{−2πi·sign·b'c'/N}`.
fn fft_transform(f: &[f64], n: usize, sign: f64) -> Vec<f64> {
    let m = (n - 1) / 2;
    let mut planner = FftPlanner::<f64>::new();
    let (fwd, inv) = if sign >= 0.0 {
        (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
    } else {
        (planner.plan_fft_inverse(n), planner.plan_fft_forward(n))
    };
    // Stored at position (c' mod N) so FFT frequencies come out centred the same way.
    let slot = |centred: usize| (centred + n - m) % n;
    // First pass over η_p (c) for each row d: result indexed [d][b'].
    let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
    for d in 0..n {
        let row = &mut rows[d * n..(d + 1) * n];
        for c in 0..n {
            row[slot(c)] = Complex64::new(f[d * n + c], 0.0);
        }
        fwd.process(row);
    }
    // Second pass over η_q (d) for each b': result indexed by a'.
    let mut out = vec![0.0; n * n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for kb in 0..n {
        for d in 0..n {
            col[slot(d)] = rows[d * n + kb];
        }
        inv.process(&mut col);
        let b = (kb + m) % n;
        for a in 0..n {
            out[b * n + a] = col[slot(a)].re / n as f64;
        }
    }
    out
}

fn direct_transform(f: &[f64], grid: &ChordFieldGrid, hbar: f64, sign: f64) -> Vec<f64> {
    let (np, nq) = (grid.n_p, grid.n_q);
    let ps: Vec<f64> = (0..np).map(|i| grid.region.p_at(i, np)).collect();
    let qs: Vec<f64> = (0..nq).map(|j| grid.region.q_at(j, nq)).collect();
    let (hp, hq) = (grid.region.step_p(np), grid.region.step_q(nq));
    // ξ∧η = ξ_p η_q − ξ_q η_p. First sum over η_p for every (η_q row, ξ_q).
    let mut t = vec![Complex64::new(0.0, 0.0); nq * nq];
    for d in 0..nq {
        for b in 0..nq {
            let mut s = Complex64::new(0.0, 0.0);
            for c in 0..np {
                s += Complex64::from_polar(f[d * np + c], -sign * qs[b] * ps[c] / hbar);
            }
            t[d * nq + b] = s;
        }
    }
    let norm = hp * hq / (2.0 * PI * hbar);
    let mut out = vec![0.0; np * nq];
    for b in 0..nq {
        for a in 0..np {
            let mut s = Complex64::new(0.0, 0.0);
            for d in 0..nq {
                s += t[d * nq + b] * Complex64::from_polar(1.0, sign * ps[a] * qs[d] / hbar);
            }
            out[b * np + a] = s.re * norm;
        }
    }
    out
}

fn origin_value(grid: &ChordFieldGrid) -> f64 {
    grid.get(grid.n_p / 2, grid.n_q / 2).abs2()
}

/// Departure of `|χ|²` from its own symplectic Fourier transform: the larger
/// of the relative L² deviation and the normalization defect `||χ(0)|² − 1|`.
/// Zero for a normalized pure state.
pub fn fourier_invariance_residual(grid: &ChordFieldGrid, scale: PlanckScale) -> Result<f64> {
    let (g, _) = symplectic_fourier(grid, scale, 1.0)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, gv) in grid.values.iter().zip(&g.values) {
        let f = v.abs2();
        num += (gv - f).powi(2);
        den += f * f;
    }
    if den == 0.0 {
        return Err(Error::InvalidState("grid carries no intensity".into()));
    }
    Ok((num / den).sqrt().max((origin_value(grid) - 1.0).abs()))
}

/// `C(ξ) = (2πħ)^{−1} ∫|χ(η)|² e^{−iξ∧η/ħ} dη`, the overlap of the state's
/// density with its translate. Equals `|χ(ξ)|²` for pure states.
pub fn correlation_c(grid: &ChordFieldGrid, scale: PlanckScale) -> Result<RealGrid> {
    symplectic_fourier(grid, scale, -1.0).map(|(g, _)| g)
}
