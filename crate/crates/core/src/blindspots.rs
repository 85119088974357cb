//! Chord-field grids, nodal lines of `c(ξ) = Re χ` and `s(ξ) = Im χ`, and
//! blind spots, where both vanish and the translated state is orthogonal to
//! the original.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::CurveSpec;
use crate::error::{Error, Result};
use crate::phase::{Chord, ChordValue, Flag};

/// Rectangle `[p_min, p_max] × [q_min, q_max]` in the chord plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

impl Region {
    pub fn square(half: f64) -> Self {
        Region { p_min: -half, p_max: half, q_min: -half, q_max: half }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_min, self.p_max, self.q_min, self.q_max];
        if all.iter().any(|v| !v.is_finite()) || self.p_min >= self.p_max || self.q_min >= self.q_max {
            return Err(Error::invalid(format!("region must have finite, increasing bounds: {self:?}")));
        }
        Ok(())
    }

    pub fn step_p(&self, n: usize) -> f64 {
        (self.p_max - self.p_min) / (n - 1) as f64
    }

    pub fn step_q(&self, n: usize) -> f64 {
        (self.q_max - self.q_min) / (n - 1) as f64
    }

    pub fn p_at(&self, i: usize, n: usize) -> f64 {
        if i == n - 1 {
            self.p_max
        } else {
            self.p_min + i as f64 * self.step_p(n)
        }
    }

    pub fn q_at(&self, j: usize, n: usize) -> f64 {
        if j == n - 1 {
            self.q_max
        } else {
            self.q_min + j as f64 * self.step_q(n)
        }
    }

    pub fn contains(&self, xi: Chord) -> bool {
        (self.p_min..=self.p_max).contains(&xi.p) && (self.q_min..=self.q_max).contains(&xi.q)
    }

    pub fn width(&self) -> f64 {
        (self.p_max - self.p_min).max(self.q_max - self.q_min)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub evaluator: String,
    pub state: Option<CurveSpec>,
    /// Cells whose evaluation returned an error; they hold NaN and `FAILED`.
    pub failed_cells: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordFieldGrid {
    pub region: Region,
    pub n_p: usize,
    pub n_q: usize,
    /// Row-major with `ξ_q` rows: `values[iq * n_p + ip]`.
    pub values: Vec<ChordValue>,
    pub metadata: GridMetadata,
}

impl ChordFieldGrid {
    pub fn get(&self, ip: usize, iq: usize) -> ChordValue {
        self.values[iq * self.n_p + ip]
    }

    pub fn chord(&self, ip: usize, iq: usize) -> Chord {
        Chord::new(self.region.p_at(ip, self.n_p), self.region.q_at(iq, self.n_q))
    }

    fn cell_size(&self) -> f64 {
        self.region.step_p(self.n_p).hypot(self.region.step_q(self.n_q))
    }
}

/// Evaluates `f` at each chord in parallel, returning results in input order.
pub fn evaluate_many<F>(f: &F, chords: &[Chord]) -> Vec<Result<ChordValue>>
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    chords.par_iter().map(|&xi| f(xi)).collect()
}

/// Evaluates `f` at every node. Work is spread over threads but the output
/// order is fixed, so repeated scans are bit-identical.
pub fn scan_grid<F>(f: &F, region: Region, n_p: usize, n_q: usize, name: &str) -> Result<ChordFieldGrid>
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    region.validate()?;
    if n_p < 2 || n_q < 2 {
        return Err(Error::invalid("grid resolution must be at least 2 per axis"));
    }
    let chords: Vec<Chord> =
        (0..n_p * n_q).map(|idx| Chord::new(region.p_at(idx % n_p, n_p), region.q_at(idx / n_p, n_q))).collect();
    let results = evaluate_many(f, &chords);
    let mut metadata = GridMetadata { evaluator: name.to_string(), ..Default::default() };
    let values = results
        .into_iter()
        .map(|r| match r {
            Ok(v) => v,
            Err(e) => {
                metadata.failed_cells += 1;
                metadata.first_error.get_or_insert_with(|| e.to_string());
                ChordValue::failed()
            }
        })
        .collect();
    Ok(ChordFieldGrid { region, n_p, n_q, values, metadata })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Real,
    Imaginary,
}

impl Component {
    pub fn of(self, v: Complex64) -> f64 {
        match self {
            Component::Real => v.re,
            Component::Imaginary => v.im,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCurve {
    pub component: Component,
    pub points: Vec<Chord>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalContours {
    pub curves: Vec<NodalCurve>,
    /// `DEGENERATE_SYMMETRY` when the component vanishes on the whole grid.
    pub flag: Flag,
}

/// Below this the component is taken to vanish identically.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn component_max(grid: &ChordFieldGrid, component: Component) -> f64 {
    grid.values
        .iter()
        .map(|v| component.of(v.value).abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// Edge identifiers: horizontal edges join `(ip, iq)–(ip+1, iq)`, vertical
/// edges join `(ip, iq)–(ip, iq+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Zero-level lines of one component by marching squares. Saddle cells are
/// resolved with the value at the cell centre, from `refine` when given and
/// from the corner average otherwise. With `refine`, every vertex is also
/// bisected along its grid edge on the evaluator itself.
pub fn nodal_contours<F>(grid: &ChordFieldGrid, component: Component, refine: Option<&F>) -> NodalContours
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    if component_max(grid, component) < DEGENERACY_TOL {
        return NodalContours { curves: Vec::new(), flag: Flag::DegenerateSymmetry };
    }
    let (np, nq) = (grid.n_p, grid.n_q);
    let val = |ip: usize, iq: usize| component.of(grid.get(ip, iq).value);
    let positive = |v: f64| v > 0.0;

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for iq in 0..nq - 1 {
        for ip in 0..np - 1 {
            let c = [val(ip, iq), val(ip + 1, iq), val(ip + 1, iq + 1), val(ip, iq + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let edges = [Edge::H(ip, iq), Edge::V(ip + 1, iq), Edge::H(ip, iq + 1), Edge::V(ip, iq)];
            let s: Vec<bool> = c.iter().map(|&v| positive(v)).collect();
            let crossing: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre = match refine {
                        Some(f) => {
                            let mid = Chord::new(
                                0.5 * (grid.region.p_at(ip, np) + grid.region.p_at(ip + 1, np)),
                                0.5 * (grid.region.q_at(iq, nq) + grid.region.q_at(iq + 1, nq)),
                            );
                            f(mid).map(|v| component.of(v.value)).unwrap_or(0.25 * c.iter().sum::<f64>())
                        }
                        None => 0.25 * c.iter().sum::<f64>(),
                    };
                    if positive(centre) == s[0] {
                        // Corners 0 and 2 connect through the centre; cut off 1 and 3.
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let point_on = |e: Edge| -> Chord {
        let (a, b) = match e {
            Edge::H(ip, iq) => ((ip, iq), (ip + 1, iq)),
            Edge::V(ip, iq) => ((ip, iq), (ip, iq + 1)),
        };
        let (va, vb) = (val(a.0, a.1), val(b.0, b.1));
        let (xa, xb) = (grid.chord(a.0, a.1), grid.chord(b.0, b.1));
        let mut lam = va / (va - vb);
        if let Some(f) = refine {
            lam = refine_on_edge(f, component, xa, xb, va, lam);
        }
        xa + (xb - xa) * lam
    };

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(i);
        by_edge.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let mut start_order: Vec<usize> = (0..segments.len()).collect();
    // Open curves must start at an end, i.e. an edge used by one segment only.
    start_order.sort_by_key(|&i| {
        let (a, b) = segments[i];
        let open = by_edge[&a].len() == 1 || by_edge[&b].len() == 1;
        (!open, i)
    });
    for start in start_order {
        if used[start] {
            continue;
        }
        let (a, b) = segments[start];
        let (first, mut cur) = if by_edge[&b].len() == 1 { (b, a) } else { (a, b) };
        used[start] = true;
        let mut edges = vec![first, cur];
        let mut closed = false;
        loop {
            let next = by_edge[&cur].iter().copied().find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    let (x, y) = segments[s];
                    cur = if x == cur { y } else { x };
                    if cur == first {
                        closed = true;
                        break;
                    }
                    edges.push(cur);
                }
                None => break,
            }
        }
        curves.push(NodalCurve { component, points: edges.into_iter().map(point_on).collect(), closed });
    }
    NodalContours { curves, flag: Flag::Ok }
}

/// Bisection for the zero of the component on the segment `xa → xb`,
/// starting from the interpolated fraction `lam`.
fn refine_on_edge<F>(f: &F, component: Component, xa: Chord, xb: Chord, va: f64, lam: f64) -> f64
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    let eval = |l: f64| f(xa + (xb - xa) * l).map(|v| component.of(v.value)).ok();
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut flo = va;
    for _ in 0..60 {
        if hi - lo < 1e-13 {
            break;
        }
        let mid = if lo == 0.0 && hi == 1.0 { lam.clamp(1e-6, 1.0 - 1e-6) } else { 0.5 * (lo + hi) };
        let Some(fm) = eval(mid) else { return lam };
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlindSpot {
    pub xi: Chord,
    /// `|χ(ξ*)|` under the polishing evaluator.
    pub residual: f64,
    /// Number of seeds that converged here.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Jacobian step as a fraction of the region width.
    pub fd_fraction: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-8, max_iter: 50, fd_fraction: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindSpotReport {
    pub spots: Vec<BlindSpot>,
    /// `DEGENERATE_SYMMETRY` for a real chord function, whose zeros are
    /// whole nodal circles.
    pub flag: Flag,
    pub seeds: usize,
    /// Seeds whose Newton iteration failed, with the reason.
    pub dropped: Vec<String>,
    pub evaluator: String,
}

fn newton_polish<F>(f: &F, start: Chord, region: &Region, opts: &NewtonOptions) -> std::result::Result<(Chord, f64), String>
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    let eval = |xi: Chord| f(xi).map(|v| v.value).map_err(|e| e.to_string());
    let h = opts.fd_fraction * region.width();
    let mut x = start;
    let mut fx = eval(x)?;
    for _ in 0..opts.max_iter {
        if fx.norm() < opts.tol {
            return Ok((x, fx.norm()));
        }
        let dp = (eval(x + Chord::new(h, 0.0))? - eval(x - Chord::new(h, 0.0))?) / (2.0 * h);
        let dq = (eval(x + Chord::new(0.0, h))? - eval(x - Chord::new(0.0, h))?) / (2.0 * h);
        // J = [[∂Re/∂p, ∂Re/∂q], [∂Im/∂p, ∂Im/∂q]]
        let det = dp.re * dq.im - dq.re * dp.im;
        if det == 0.0 || !det.is_finite() {
            return Err(format!("singular Jacobian at {x:?}"));
        }
        let step = Chord::new((dq.im * fx.re - dq.re * fx.im) / det, (-dp.im * fx.re + dp.re * fx.im) / det);
        let mut lam = 1.0;
        loop {
            let cand = x - step * lam;
            let fc = eval(cand)?;
            if fc.norm() < fx.norm() {
                x = cand;
                fx = fc;
                break;
            }
            lam *= 0.5;
            if lam < 1e-10 {
                return Err(format!("damping failed at {x:?}, |χ| = {:e}", fx.norm()));
            }
        }
    }
    if fx.norm() < opts.tol {
        Ok((x, fx.norm()))
    } else {
        Err(format!("no convergence after {} iterations, |χ| = {:e}", opts.max_iter, fx.norm()))
    }
}

/// Seeds every cell in which both `Re χ` and `Im χ` change sign, polishes
/// each seed with damped Newton on `(Re χ, Im χ)`, merges duplicates closer
/// than one cell diagonal, and sorts by `|ξ*|`.
pub fn find_blind_spots<F>(f: &F, grid: &ChordFieldGrid, opts: &NewtonOptions, name: &str) -> BlindSpotReport
where
    F: Fn(Chord) -> Result<ChordValue> + Sync + ?Sized,
{
    let mut report = BlindSpotReport {
        spots: Vec::new(),
        flag: Flag::Ok,
        seeds: 0,
        dropped: Vec::new(),
        evaluator: name.to_string(),
    };
    if component_max(grid, Component::Imaginary) < DEGENERACY_TOL {
        report.flag = Flag::DegenerateSymmetry;
        return report;
    }
    let (np, nq) = (grid.n_p, grid.n_q);
    let changes = |c: Component, ip: usize, iq: usize| {
        let v = [grid.get(ip, iq), grid.get(ip + 1, iq), grid.get(ip, iq + 1), grid.get(ip + 1, iq + 1)]
            .map(|x| c.of(x.value));
        v.iter().all(|x| x.is_finite()) && v.iter().any(|&x| x > 0.0) && v.iter().any(|&x| x <= 0.0)
    };
    let mut seeds = Vec::new();
    for iq in 0..nq - 1 {
        for ip in 0..np - 1 {
            if changes(Component::Real, ip, iq) && changes(Component::Imaginary, ip, iq) {
                let a = grid.chord(ip, iq);
                let b = grid.chord(ip + 1, iq + 1);
                seeds.push(Chord::new(0.5 * (a.p + b.p), 0.5 * (a.q + b.q)));
            }
        }
    }
    report.seeds = seeds.len();
    let polished: Vec<std::result::Result<(Chord, f64), String>> =
        seeds.par_iter().map(|&s| newton_polish(f, s, &grid.region, opts)).collect();
    let merge = grid.cell_size();
    for (seed, result) in seeds.iter().zip(polished) {
        match result {
            Ok((xi, res)) if grid.region.contains(xi) => {
                if let Some(spot) = report.spots.iter_mut().find(|s| (s.xi - xi).norm() < merge) {
                    spot.multiplicity += 1;
                    if res < spot.residual {
                        spot.xi = xi;
                        spot.residual = res;
                    }
                } else {
                    report.spots.push(BlindSpot { xi, residual: res, multiplicity: 1 });
                }
            }
            Ok((xi, _)) => report.dropped.push(format!("seed {seed:?} left the region at {xi:?}")),
            Err(msg) => report.dropped.push(format!("seed {seed:?}: {msg}")),
        }
    }
    report.spots.sort_by(|a, b| {
        a.xi.norm().total_cmp(&b.xi.norm()).then(a.xi.q.atan2(a.xi.p).total_cmp(&b.xi.q.atan2(b.xi.p)))
    });
    report
}

/// Spots whose mirror `−ξ*` is not also in the list (within `tol`).
pub fn unpaired_spots(spots: &[BlindSpot], tol: f64) -> Vec<BlindSpot> {
    spots
        .iter()
        .filter(|s| !spots.iter().any(|o| (o.xi + s.xi).norm() < tol))
        .copied()
        .collect()
}
