//! Quadrature and root-finding building blocks shared by the evaluators.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

const GL_ORDER: usize = 20;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite 20-point Gauss–Legendre over `panels` equal panels.
pub fn composite_gl<F>(f: &F, a: f64, b: f64, panels: usize) -> Complex64
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let (nodes, weights) = gl20();
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        let mut panel = Complex64::new(0.0, 0.0);
        for (x, w) in nodes.iter().zip(weights) {
            panel += f(mid + half * x) * *w;
        }
        sum += panel * half;
    }
    sum
}

/// Composite Gauss–Legendre with panel doubling until two successive
/// estimates agree to `abs_tol`.
pub fn integrate_doubling<F>(
    f: &F,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    max_doublings: usize,
    what: &'static str,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let mut panels = initial_panels.max(1);
    let mut prev = composite_gl(f, a, b, panels);
    for _ in 0..max_doublings {
        panels *= 2;
        let next = composite_gl(f, a, b, panels);
        if (next - prev).norm() <= abs_tol {
            return Ok(next);
        }
        prev = next;
        if !prev.re.is_finite() || !prev.im.is_finite() {
            break;
        }
    }
    let last = composite_gl(f, a, b, panels);
    Err(Error::NonConvergence { what, last: last.norm(), previous: prev.norm() })
}

/// Mean of a 2π-periodic function by the trapezoid rule, doubling the node
/// count from `start` until successive estimates differ by less than
/// `tol · max(1, |mean|)`.
pub fn periodic_mean<F>(f: &F, start: usize, tol: f64, max_nodes: usize, what: &'static str) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let mut n = start.max(4);
    let mut sum: Complex64 = (0..n).map(|k| f(TAU * k as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    while n < max_nodes {
        // New nodes sit halfway between the old ones.
        let extra: Complex64 = (0..n).map(|k| f(TAU * (k as f64 + 0.5) / n as f64)).sum();
        sum += extra;
        n *= 2;
        let next = sum / n as f64;
        if (next - mean).norm() <= tol * next.norm().max(1.0) {
            return Ok(next);
        }
        mean = next;
    }
    Err(Error::NonConvergence { what, last: mean.norm(), previous: f64::NAN })
}

/// Options for [`periodic_roots`].
#[derive(Debug, Clone, Copy)]
pub struct RootScan {
    pub samples: usize,
    /// Bisection stops once the bracket is narrower than this (radians).
    pub theta_tol: f64,
    /// Roots closer than this are merged.
    pub merge_tol: f64,
    /// A local extremum with `|g| ≤ touch_tol` that does not cross zero is
    /// reported as a double (tangent) root.
    pub touch_tol: f64,
}

impl Default for RootScan {
    fn default() -> Self {
        RootScan { samples: 256, theta_tol: 1e-13, merge_tol: 1e-9, touch_tol: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicRoot {
    pub theta: f64,
    /// The function touches zero without crossing it here.
    pub double: bool,
}

/// All zeros of a smooth 2π-periodic function on `[0, 2π)`.
///
/// Sign changes on a uniform scan are bisected. Local extrema of `|g|` that
/// stay on one side of zero on the scan are searched for a hidden pair of
/// close roots; a near-touching extremum is reported as a double root.
pub fn periodic_roots<G>(g: &G, scan: RootScan) -> Vec<PeriodicRoot>
where
    G: Fn(f64) -> f64 + ?Sized,
{
    let n = scan.samples.max(8);
    let step = TAU / n as f64;
    let th: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let vals: Vec<f64> = th.iter().map(|&t| g(t)).collect();
    let mut roots = Vec::new();

    for i in 0..n {
        let j = (i + 1) % n;
        let (a, ga) = (th[i], vals[i]);
        let b = a + step;
        let gb = vals[j];
        if ga == 0.0 {
            roots.push(PeriodicRoot { theta: a, double: false });
        } else if ga * gb < 0.0 {
            roots.push(PeriodicRoot { theta: bisect(g, a, b, ga, scan.theta_tol), double: false });
        }
    }

    for i in 0..n {
        let prev = vals[(i + n - 1) % n];
        let cur = vals[i];
        let next = vals[(i + 1) % n];
        if cur == 0.0 || prev * cur <= 0.0 || cur * next <= 0.0 {
            continue;
        }
        if cur.abs() > prev.abs() || cur.abs() > next.abs() {
            continue;
        }
        // Extremum of g toward zero inside [θ_{i-1}, θ_{i+1}].
        let sign = cur.signum();
        let lo = th[i] - step;
        let hi = th[i] + step;
        let (t_ext, g_ext) = golden_min(&|t: f64| sign * g(t), lo, hi, scan.theta_tol.max(1e-15));
        let g_ext = sign * g_ext;
        if g_ext * sign < 0.0 {
            roots.push(PeriodicRoot { theta: bisect(g, lo, t_ext, prev, scan.theta_tol), double: false });
            roots.push(PeriodicRoot { theta: bisect(g, t_ext, hi, g_ext, scan.theta_tol), double: false });
        } else if g_ext.abs() <= scan.touch_tol {
            roots.push(PeriodicRoot { theta: t_ext, double: true });
        }
    }

    for r in &mut roots {
        r.theta = r.theta.rem_euclid(TAU);
    }
    roots.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let mut merged: Vec<PeriodicRoot> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last_mut() {
            Some(last) if r.theta - last.theta <= scan.merge_tol => last.double |= r.double,
            _ => merged.push(r),
        }
    }
    if merged.len() > 1 {
        let first = merged[0].theta;
        let last = merged[merged.len() - 1].theta;
        if first + TAU - last <= scan.merge_tol {
            merged.pop();
        }
    }
    merged
}

fn bisect<G>(g: &G, mut a: f64, mut b: f64, mut ga: f64, tol: f64) -> f64
where
    G: Fn(f64) -> f64 + ?Sized,
{
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
pub fn golden_min<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Bessel `J₀(x)` by Miller's backward recurrence, normalized with
/// `J₀ + 2ΣJ_{2k} = 1`. Independent of any quadrature in this crate.
pub fn bessel_j0(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let x = x.abs();
    let mut top = (x + 40.0 + 12.0 * x.sqrt()) as usize;
    top += top % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut j0 = 0.0;
    let mut norm = 0.0;
    for k in (1..=top).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
        let order = k - 1;
        if order == 0 {
            j0 = cur;
            norm += cur;
        } else if order % 2 == 0 {
            norm += 2.0 * cur;
        }
    }
    j0 / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(20);
        let wsum: f64 = w.iter().sum();
        assert_abs_diff_eq!(wsum, 2.0, epsilon = 1e-14);
        // ∫ x^38 over [-1,1] = 2/39
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert_abs_diff_eq!(m, 2.0 / 39.0, epsilon = 1e-14);
    }

    #[test]
    fn doubling_gl_on_gaussian() {
        let f = |x: f64| Complex64::new((-x * x).exp(), 0.0);
        let v = integrate_doubling(&f, -8.0, 8.0, 4, 1e-14, 10, "gaussian").unwrap();
        assert_abs_diff_eq!(v.re, PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn doubling_reports_nonconvergence() {
        let f = |x: f64| Complex64::new((1e6 * x).sin().abs(), 0.0);
        let err = integrate_doubling(&f, 0.0, 1.0, 1, 1e-15, 2, "rough").unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn periodic_mean_of_cosine_power() {
        // mean of cos²θ = 1/2
        let f = |t: f64| Complex64::new(t.cos().powi(2), 0.0);
        let v = periodic_mean(&f, 8, 1e-14, 1 << 12, "cos2").unwrap();
        assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn roots_of_sine() {
        let roots = periodic_roots(&|t: f64| (t - 0.3).sin(), RootScan::default());
        assert_eq!(roots.len(), 2);
        assert_abs_diff_eq!(roots[0].theta, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(roots[1].theta, 0.3 + PI, epsilon = 1e-12);
    }

    #[test]
    fn root_on_a_sample_node_is_found_once() {
        let roots = periodic_roots(&|t: f64| t.sin(), RootScan::default());
        assert_eq!(roots.len(), 2);
        assert!(roots[0].theta.abs() < 1e-12);
    }

    #[test]
    fn close_pair_between_samples_is_resolved() {
        // Two roots 0.0089 apart, centered between the samples at 0 and 2π/256,
        // so every sample has the same sign.
        let mid = 0.5 * TAU / 256.0;
        let g = |t: f64| (t - mid).cos() - 0.99999;
        let roots = periodic_roots(&g, RootScan::default());
        assert_eq!(roots.len(), 2, "{roots:?}");
        let half = (0.99999f64).acos();
        assert_abs_diff_eq!(roots[0].theta, mid - half, epsilon = 1e-10);
        assert_abs_diff_eq!(roots[1].theta, mid + half, epsilon = 1e-10);
    }

    #[test]
    fn tangent_root_is_reported_as_double() {
        let g = |t: f64| t.cos() - 1.0 - 1e-15;
        let scan = RootScan { touch_tol: 1e-12, ..RootScan::default() };
        let roots = periodic_roots(&g, scan);
        assert_eq!(roots.len(), 1);
        assert!(roots[0].double);
    }

    #[test]
    fn miller_j0_matches_known_values() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
        assert!((bessel_j0(30.0) + 0.086_367_983_581_040_2).abs() < 1e-14);
    }
}
