//! Run configuration: defaults, `key = value` recipe files, JSON sidecars and
//! command-line overrides, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use chordfn::blindspots::{NewtonOptions, Region};
use chordfn::exact::QuadratureSpec;
use chordfn::semiclassical::SemiclassicalConfig;
use chordfn::{CurveSpec, EvaluatorKind, PlanckScale};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u32,
    pub hbar: f64,
    pub t: f64,
    /// `[α₀, α₁, α₂, α₃]`.
    pub alpha: [f64; 4],
    pub evaluators: Vec<EvaluatorKind>,
    pub region: Region,
    /// Grid points per axis.
    pub resolution: usize,
    /// Output path; the extension is replaced per file. Defaults to the
    /// command name.
    pub out: Option<PathBuf>,
    /// Cut direction, normalized before use so `s` is the signed chord length.
    pub direction: [f64; 2],
    pub range: [f64; 2],
    pub samples: usize,
    pub quad_tol: f64,
    pub newton_tol: f64,
    pub caustic_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 5,
            hbar: 0.1,
            t: 0.1,
            alpha: [0.0, 1.0, 1.0, 1.0],
            evaluators: vec![EvaluatorKind::Exact],
            region: Region::square(2.5),
            resolution: 201,
            out: None,
            direction: [0.8172, 1.0],
            range: [0.0, 2.5],
            samples: 501,
            quad_tol: QuadratureSpec::default().tol,
            newton_tol: NewtonOptions::default().tol,
            caustic_tol: SemiclassicalConfig::default().caustic_tol,
        }
    }
}

fn floats(key: &str, value: &str, count: usize) -> Result<Vec<f64>, Failure> {
    let parsed: Result<Vec<f64>, _> = value.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) if v.len() == count => Ok(v),
        _ => Err(Failure::Config(format!("{key}: expected {count} comma-separated numbers, got '{value}'"))),
    }
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value.trim().parse().map_err(|_| Failure::Config(format!("{key}: cannot parse '{value}'")))
}

impl RunConfig {
    /// Sets one field from its textual form. Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        match key {
            "n" => self.n = scalar(key, value)?,
            "hbar" => self.hbar = scalar(key, value)?,
            "t" => self.t = scalar(key, value)?,
            "alpha0" => self.alpha[0] = scalar(key, value)?,
            "alpha1" => self.alpha[1] = scalar(key, value)?,
            "alpha2" => self.alpha[2] = scalar(key, value)?,
            "alpha3" => self.alpha[3] = scalar(key, value)?,
            "evaluator" => {
                self.evaluators = value
                    .split(',')
                    .map(|s| s.parse::<EvaluatorKind>())
                    .collect::<chordfn::Result<_>>()
                    .map_err(|e| Failure::Config(e.to_string()))?
            }
            "region" => {
                let v = floats(key, value, 4)?;
                self.region = Region { p_min: v[0], p_max: v[1], q_min: v[2], q_max: v[3] };
            }
            "resolution" => self.resolution = scalar(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "direction" => {
                let v = floats(key, value, 2)?;
                self.direction = [v[0], v[1]];
            }
            "range" => {
                let v = floats(key, value, 2)?;
                self.range = [v[0], v[1]];
            }
            "samples" => self.samples = scalar(key, value)?,
            "quad_tol" => self.quad_tol = scalar(key, value)?,
            "newton_tol" => self.newton_tol = scalar(key, value)?,
            "caustic_tol" => self.caustic_tol = scalar(key, value)?,
            _ => return Err(Failure::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Failure> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("line {}: expected key = value, got '{raw}'", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Loads a recipe file, or a JSON sidecar written by an earlier run.
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let config = value.get("config").cloned().unwrap_or(value);
            return serde_json::from_value(config).map_err(|e| Failure::Config(format!("{}: {e}", path.display())));
        }
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn state(&self) -> Result<CurveSpec, Failure> {
        let c = CurveSpec::fock(self.n, self.hbar)
            .and_then(|c| c.with_alpha(self.alpha))
            .and_then(|c| c.at_time(self.t))?;
        Ok(c)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { tol: self.quad_tol, ..Default::default() }
    }

    pub fn semiclassical(&self) -> SemiclassicalConfig {
        SemiclassicalConfig { caustic_tol: self.caustic_tol, ..Default::default() }
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.newton_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        PlanckScale::new(self.hbar)?;
        self.state()?;
        self.region.validate()?;
        if self.evaluators.is_empty() {
            return Err(Failure::Config("at least one evaluator is required".into()));
        }
        if self.resolution < 2 {
            return Err(Failure::Config("resolution must be at least 2".into()));
        }
        for (name, tol) in [("quad_tol", self.quad_tol), ("newton_tol", self.newton_tol), ("caustic_tol", self.caustic_tol)]
        {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Failure::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    pub fn single_evaluator(&self, command: &str) -> Result<EvaluatorKind, Failure> {
        match self.evaluators.as_slice() {
            [one] => Ok(*one),
            _ => Err(Failure::Config(format!("{command} takes exactly one evaluator, got {}", self.evaluators.len()))),
        }
    }

    pub fn out_path(&self, command: &str, ext: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(command)).with_extension(ext)
    }
}
