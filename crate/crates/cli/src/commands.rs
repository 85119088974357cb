use std::time::Instant;

use chordfn::blindspots::{evaluate_many, find_blind_spots, nodal_contours, scan_grid, unpaired_spots, Component};
use chordfn::evaluator::Evaluator;
use chordfn::exact::evolved_chi;
use chordfn::smallchord::{classical_moments, closest_blind_spot_estimate, moments_from_chi, DerivativeSpec, MomentAxis};
use chordfn::verify::{self, CriterionResult, VerifyConfig};
use chordfn::{Chord, ChordEvaluator, ChordValue, EvaluatorKind, Flag, Result as CoreResult};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{num, write_csv, write_json};
use crate::Failure;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn evaluator(cfg: &RunConfig, kind: EvaluatorKind) -> Result<Evaluator, Failure> {
    Ok(Evaluator::with_settings(kind, cfg.state()?, cfg.quadrature(), cfg.semiclassical())?)
}

fn sidecar(command: &str, cfg: &RunConfig, extra: serde_json::Value, started: Instant) -> serde_json::Value {
    let mut v = json!({
        "tool": "chordfn",
        "version": VERSION,
        "command": command,
        "config": cfg,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v["timings"]["total_seconds"] = json!(started.elapsed().as_secs_f64());
    v
}

fn value_columns(v: &ChordValue) -> [String; 3] {
    [num(v.value.re), num(v.value.im), num(v.abs2())]
}

pub fn scan(cfg: &RunConfig) -> Result<(), Failure> {
    let started = Instant::now();
    let kind = cfg.single_evaluator("scan")?;
    let ev = evaluator(cfg, kind)?;
    let f = |xi: Chord| ev.evaluate(xi);
    let grid = scan_grid(&f, cfg.region, cfg.resolution, cfg.resolution, &ev.name())?;
    let eval_seconds = started.elapsed().as_secs_f64();

    let header = ["xi_p", "xi_q", "re", "im", "abs2", "phase", "flag"].map(String::from);
    let rows = (0..grid.n_q).flat_map(|iq| (0..grid.n_p).map(move |ip| (ip, iq))).map(|(ip, iq)| {
        let xi = grid.chord(ip, iq);
        let v = grid.get(ip, iq);
        let [re, im, abs2] = value_columns(&v);
        vec![num(xi.p), num(xi.q), re, im, abs2, num(v.phase()), v.flag.to_string()]
    });
    let csv = cfg.out_path("scan", "csv");
    write_csv(&csv, &header, rows)?;

    let mut flags = serde_json::Map::new();
    for v in &grid.values {
        let e = flags.entry(v.flag.as_str()).or_insert(json!(0));
        *e = json!(e.as_u64().unwrap_or(0) + 1);
    }
    if grid.metadata.failed_cells > 0 {
        eprintln!(
            "warning: {} cells failed ({}); they are flagged FAILED",
            grid.metadata.failed_cells,
            grid.metadata.first_error.as_deref().unwrap_or("unknown error")
        );
    }
    let meta = sidecar(
        "scan",
        cfg,
        json!({
            "csv": csv,
            "grid": {
                "n_p": grid.n_p,
                "n_q": grid.n_q,
                "evaluator": grid.metadata.evaluator,
                "failed_cells": grid.metadata.failed_cells,
                "first_error": grid.metadata.first_error,
                "flags": flags,
            },
            "timings": { "evaluate_seconds": eval_seconds },
        }),
        started,
    );
    write_json(&cfg.out_path("scan", "json"), &meta)?;
    println!("wrote {} ({}x{} points)", csv.display(), grid.n_p, grid.n_q);
    Ok(())
}

/// Sample positions `s` along the cut; a single sample sits at the start.
fn cut_positions(cfg: &RunConfig) -> Result<Vec<f64>, Failure> {
    let [a, b] = cfg.range;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Failure::Config(format!("range must be finite and increasing, got {a},{b}")));
    }
    Ok(match cfg.samples {
        0 => return Err(Failure::Config("samples must be at least 1".into())),
        1 => vec![a],
        n => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    })
}

pub fn cut(cfg: &RunConfig) -> Result<(), Failure> {
    let started = Instant::now();
    let d = Chord::new(cfg.direction[0], cfg.direction[1]);
    if !(d.is_finite() && d.norm() > 0.0) {
        return Err(Failure::Config("cut direction must be a finite nonzero vector".into()));
    }
    let u = d * (1.0 / d.norm());
    let s = cut_positions(cfg)?;
    let chords: Vec<Chord> = s.iter().map(|&si| u * si).collect();

    let mut columns = Vec::new();
    let mut failed = serde_json::Map::new();
    for &kind in &cfg.evaluators {
        let ev = evaluator(cfg, kind)?;
        let f = |xi: Chord| ev.evaluate(xi);
        let mut errors = 0;
        let values: Vec<ChordValue> = evaluate_many(&f, &chords)
            .into_iter()
            .map(|r| {
                r.unwrap_or_else(|_| {
                    errors += 1;
                    ChordValue::failed()
                })
            })
            .collect();
        failed.insert(kind.to_string(), json!(errors));
        columns.push((kind.to_string(), values));
    }
    let eval_seconds = started.elapsed().as_secs_f64();

    let mut header: Vec<String> = ["s", "xi_p", "xi_q"].map(String::from).to_vec();
    for (name, _) in &columns {
        header.extend(["re", "im", "abs2"].map(|c| format!("{name}_{c}")));
    }
    header.extend(columns.iter().map(|(name, _)| format!("{name}_flag")));
    let rows = (0..s.len()).map(|i| {
        let mut row = vec![num(s[i]), num(chords[i].p), num(chords[i].q)];
        for (_, vals) in &columns {
            row.extend(value_columns(&vals[i]));
        }
        row.extend(columns.iter().map(|(_, vals)| vals[i].flag.to_string()));
        row
    });
    let csv = cfg.out_path("cut", "csv");
    write_csv(&csv, &header, rows)?;
    let meta = sidecar(
        "cut",
        cfg,
        json!({
            "csv": csv,
            "unit_direction": [u.p, u.q],
            "failed_samples": failed,
            "timings": { "evaluate_seconds": eval_seconds },
        }),
        started,
    );
    write_json(&cfg.out_path("cut", "json"), &meta)?;
    println!("wrote {} ({} samples)", csv.display(), s.len());
    Ok(())
}

fn chord_json(xi: Chord) -> serde_json::Value {
    json!({ "xi_p": xi.p, "xi_q": xi.q, "radius": xi.norm() })
}

pub fn blindspots(cfg: &RunConfig) -> Result<(), Failure> {
    let started = Instant::now();
    let kind = cfg.single_evaluator("blindspots")?;
    let state = cfg.state()?;
    let ev = evaluator(cfg, kind)?;
    let f = |xi: Chord| ev.evaluate(xi);
    let quad = cfg.quadrature();
    let exact = |xi: Chord| evolved_chi(&state, xi, &quad);

    let m = classical_moments(&state, 2)?;
    let spec = DerivativeSpec::default();
    let from_chi = |n: u32, axis: MomentAxis| moments_from_chi(&exact, state.scale, n, axis, &spec);
    let moments = json!({
        "classical": {
            "mean_p": m.mean().p,
            "mean_q": m.mean().q,
            "pp": m.get(0, 2),
            "qq": m.get(2, 0),
            "qp": m.get(1, 1),
        },
        "from_exact_chord_function": {
            "mean_p": from_chi(1, MomentAxis::P)?,
            "mean_q": from_chi(1, MomentAxis::Q)?,
            "pp": from_chi(2, MomentAxis::P)?,
            "qq": from_chi(2, MomentAxis::Q)?,
        },
    });
    let est = closest_blind_spot_estimate(&m, state.scale)?;

    let grid = scan_grid(&f, cfg.region, cfg.resolution, cfg.resolution, &ev.name())?;
    let report = find_blind_spots(&f, &grid, &cfg.newton(), &ev.name());

    let mut located = Vec::new();
    for spot in &report.spots {
        let mut entry = chord_json(spot.xi);
        entry["residual"] = json!(spot.residual);
        entry["exact_residual"] = json!(exact(spot.xi)?.value.norm());
        entry["multiplicity"] = json!(spot.multiplicity);
        located.push(entry);
    }
    let comparison: Vec<serde_json::Value> = est
        .spots
        .iter()
        .map(|&target| {
            let nearest = report.spots.iter().min_by(|a, b| (a.xi - target).norm().total_cmp(&(b.xi - target).norm()));
            json!({
                "estimate": chord_json(target),
                "nearest_located": nearest.map(|s| chord_json(s.xi)),
                "relative_offset": nearest.map(|s| (s.xi - target).norm() / target.norm()),
            })
        })
        .collect();

    let mut outcome = json!({
        "flag": report.flag.as_str(),
        "seeds": report.seeds,
        "located": located,
        "unpaired": unpaired_spots(&report.spots, 1e-6).len(),
        "dropped_seeds": report.dropped,
    });
    if report.flag == Flag::DegenerateSymmetry {
        // The zeros are whole curves; report each closed nodal line by its
        // mean and extreme distance from the origin.
        let contours = nodal_contours(&grid, Component::Real, Some(&f));
        let mut lines: Vec<(f64, f64, f64, bool)> = contours
            .curves
            .iter()
            .map(|k| {
                let r: Vec<f64> = k.points.iter().map(|p| p.norm()).collect();
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                (mean, r.iter().copied().fold(f64::INFINITY, f64::min), r.iter().copied().fold(0.0, f64::max), k.closed)
            })
            .collect();
        lines.sort_by(|a, b| a.0.total_cmp(&b.0));
        outcome["nodal_radii"] = json!(lines.iter().filter(|l| l.3).map(|l| l.0).collect::<Vec<_>>());
        outcome["nodal_lines"] = json!(lines
            .iter()
            .map(|l| json!({ "mean_radius": l.0, "min_radius": l.1, "max_radius": l.2, "closed": l.3 }))
            .collect::<Vec<_>>());
        outcome["contour_flag"] = json!(contours.flag.as_str());
    }

    let doc = sidecar(
        "blindspots",
        cfg,
        json!({
            "moments": moments,
            "ellipse": {
                "a_pp": est.ellipse.a_pp,
                "a_pq": est.ellipse.a_pq,
                "a_qq": est.ellipse.a_qq,
                "level": est.ellipse.level,
                "degenerate": est.degenerate,
            },
            "estimated": est.spots.iter().map(|&s| chord_json(s)).collect::<Vec<_>>(),
            "comparison": comparison,
            "blind_spots": outcome,
        }),
        started,
    );
    let path = cfg.out_path("blindspots", "json");
    write_json(&path, &doc)?;
    println!("wrote {} ({}, {} spots)", path.display(), report.flag, report.spots.len());
    Ok(())
}

fn print_table(results: &[CriterionResult]) {
    println!("criterion\tname\tcheck\tmeasured\ttolerance\tpass");
    for r in results {
        for c in &r.checks {
            println!("{}\t{}\t{}\t{:e}\t{:e}\t{}", r.id, r.name, c.label, c.measured, c.tolerance, c.pass);
        }
    }
    for r in results {
        eprintln!("{}", r.summary());
    }
}

type Criterion = fn(&VerifyConfig) -> CoreResult<CriterionResult>;

const CRITERIA: [Criterion; 10] = [
    verify::normalization_and_symmetry,
    |_| verify::oracle_cross_check(),
    |_| verify::small_chord_bessel(),
    |_| verify::ellipse_accuracy(),
    verify::fock_nodal_circles,
    verify::cut_agreement,
    |_| verify::blind_spot_check(),
    |_| verify::moments_triangle(),
    verify::purity_invariance,
    |_| verify::regime_handoff(),
];

/// Runs the selected criteria (all when `only` is empty) and returns the
/// number that failed.
pub fn verify(cfg: &RunConfig, only: &[u8]) -> Result<usize, Failure> {
    let started = Instant::now();
    let vcfg = VerifyConfig { state: cfg.state()?, ..Default::default() };
    if let Some(&bad) = only.iter().find(|&&id| !(1..=10).contains(&id)) {
        return Err(Failure::Config(format!("no criterion {bad}; criteria are numbered 1 to 10")));
    }
    let mut results = Vec::new();
    for (i, run) in CRITERIA.iter().enumerate() {
        let id = i as u8 + 1;
        if only.is_empty() || only.contains(&id) {
            results.push(run(&vcfg)?);
        }
    }
    print_table(&results);
    let failed = results.iter().filter(|r| !r.pass).count();
    if cfg.out.is_some() {
        let doc = sidecar("verify", cfg, json!({ "criteria": results, "failed": failed }), started);
        write_json(&cfg.out_path("verify", "json"), &doc)?;
    }
    Ok(failed)
}
