//! A common interface over the chord-function evaluators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curves::CurveSpec;
use crate::error::{Error, Result};
use crate::exact::{evolved_chi, fock_chi_closed, QuadratureSpec};
use crate::phase::{Chord, ChordValue};
use crate::semiclassical::{chi_semiclassical, sp_full, sp_small, SemiclassicalConfig};
use crate::smallchord::{chi_small, chi_taylor, classical_moments, MomentTable};

pub trait ChordEvaluator: Sync {
    fn evaluate(&self, xi: Chord) -> Result<ChordValue>;

    fn name(&self) -> String {
        "custom".to_string()
    }
}

impl<F> ChordEvaluator for F
where
    F: Fn(Chord) -> Result<ChordValue> + Sync,
{
    fn evaluate(&self, xi: Chord) -> Result<ChordValue> {
        self(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EvaluatorKind {
    /// Momentum-space quadrature of the evolved state.
    Exact,
    /// Closed Laguerre form; ignores `t`.
    Fock,
    /// Short-chord curve average.
    Small,
    /// Tangency stationary-phase sum.
    SpSmall,
    /// Chord-realization stationary-phase sum.
    SpFull,
    /// The composite `χ_s − SP[χ_s] + SP[χ_w]`.
    Semiclassical,
    /// Moment Taylor series through the given order.
    Taylor(usize),
}

impl EvaluatorKind {
    pub const NAMES: [&'static str; 7] = ["exact", "fock", "small", "sp_small", "sp_full", "semiclassical", "taylor:K"];
}

impl fmt::Display for EvaluatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluatorKind::Exact => f.write_str("exact"),
            EvaluatorKind::Fock => f.write_str("fock"),
            EvaluatorKind::Small => f.write_str("small"),
            EvaluatorKind::SpSmall => f.write_str("sp_small"),
            EvaluatorKind::SpFull => f.write_str("sp_full"),
            EvaluatorKind::Semiclassical => f.write_str("semiclassical"),
            EvaluatorKind::Taylor(k) => write!(f, "taylor:{k}"),
        }
    }
}

impl FromStr for EvaluatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "exact" => EvaluatorKind::Exact,
            "fock" => EvaluatorKind::Fock,
            "small" => EvaluatorKind::Small,
            "sp_small" => EvaluatorKind::SpSmall,
            "sp_full" => EvaluatorKind::SpFull,
            "semiclassical" => EvaluatorKind::Semiclassical,
            _ => match s.strip_prefix("taylor:").map(str::parse::<usize>) {
                Some(Ok(k)) => EvaluatorKind::Taylor(k),
                _ => {
                    return Err(Error::invalid(format!(
                        "unknown evaluator '{s}', expected one of {}",
                        EvaluatorKind::NAMES.join(", ")
                    )))
                }
            },
        })
    }
}

impl TryFrom<String> for EvaluatorKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EvaluatorKind> for String {
    fn from(k: EvaluatorKind) -> String {
        k.to_string()
    }
}

/// A configured evaluator for one state.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub kind: EvaluatorKind,
    pub state: CurveSpec,
    pub quad: QuadratureSpec,
    pub semiclassical: SemiclassicalConfig,
    moments: Option<MomentTable>,
}

impl Evaluator {
    pub fn new(kind: EvaluatorKind, state: CurveSpec) -> Result<Self> {
        Evaluator::with_settings(kind, state, QuadratureSpec::default(), SemiclassicalConfig::default())
    }

    pub fn with_settings(
        kind: EvaluatorKind,
        state: CurveSpec,
        quad: QuadratureSpec,
        semiclassical: SemiclassicalConfig,
    ) -> Result<Self> {
        state.validate()?;
        quad.validate()?;
        let moments = match kind {
            EvaluatorKind::Taylor(k) => Some(classical_moments(&state, k.max(1))?),
            _ => None,
        };
        Ok(Evaluator { kind, state, quad, semiclassical, moments })
    }
}

impl ChordEvaluator for Evaluator {
    fn evaluate(&self, xi: Chord) -> Result<ChordValue> {
        let c = &self.state;
        match self.kind {
            EvaluatorKind::Exact => evolved_chi(c, xi, &self.quad),
            EvaluatorKind::Fock => Ok(fock_chi_closed(c.n, c.scale, xi)),
            EvaluatorKind::Small => chi_small(c, xi),
            EvaluatorKind::SpSmall => sp_small(c, xi, &self.semiclassical),
            EvaluatorKind::SpFull => sp_full(c, xi, &self.semiclassical),
            EvaluatorKind::Semiclassical => chi_semiclassical(c, xi, &self.semiclassical),
            EvaluatorKind::Taylor(k) => {
                let m = self.moments.as_ref().expect("moments are built with the evaluator");
                chi_taylor(m, c.scale, xi, k)
            }
        }
    }

    fn name(&self) -> String {
        self.kind.to_string()
    }
}
