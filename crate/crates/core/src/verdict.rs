//! Aggregated outcomes of residual checks.

use std::fmt;

use serde::Serialize;

use crate::symexpr::ZeroTest;

/// Outcome of checking that a table of residuals vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Zero,
    NumericallyZero,
    NonZero,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::NonZero
    }

    /// The weaker of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (NonZero, _) | (_, NonZero) => NonZero,
            (NumericallyZero, _) | (_, NumericallyZero) => NumericallyZero,
            _ => Zero,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Zero => "zero",
            Verdict::NumericallyZero => "numerically zero",
            Verdict::NonZero => "nonzero",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Which residual component failed, e.g. `J^1_{1,2,3}`.
    pub component: String,
    pub point: Vec<f64>,
    pub value: f64,
}

/// Maximum number of witnesses kept in a report.
pub const MAX_WITNESSES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub verdict: Verdict,
    pub components: usize,
    /// Largest absolute residual seen at any evaluated point.
    pub max_abs: f64,
    pub witnesses: Vec<Witness>,
}

impl ResidualReport {
    pub fn empty() -> ResidualReport {
        ResidualReport {
            verdict: Verdict::Zero,
            components: 0,
            max_abs: 0.0,
            witnesses: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn record(&mut self, component: String, test: &ZeroTest) {
        self.components += 1;
        match test {
            ZeroTest::Zero => {}
            ZeroTest::Unknown { max_abs, .. } => {
                self.max_abs = self.max_abs.max(*max_abs);
                self.verdict = self.verdict.and(Verdict::NumericallyZero);
            }
            ZeroTest::NonZero { witness, value } => {
                self.max_abs = self.max_abs.max(value.abs());
                self.verdict = Verdict::NonZero;
                if self.witnesses.len() < MAX_WITNESSES {
                    self.witnesses.push(Witness {
                        component,
                        point: witness.clone(),
                        value: *value,
                    });
                }
            }
        }
    }

    /// Records a purely numeric component evaluated at `point`.
    pub fn record_value(&mut self, component: impl FnOnce() -> String, point: &[f64], value: f64, tol: f64) {
        self.components += 1;
        let bad = !value.is_finite() || value.abs() > tol;
        self.max_abs = self.max_abs.max(if value.is_finite() { value.abs() } else { f64::INFINITY });
        if bad {
            self.verdict = Verdict::NonZero;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(Witness {
                    component: component(),
                    point: point.to_vec(),
                    value,
                });
            }
        } else if self.verdict == Verdict::Zero {
            self.verdict = Verdict::NumericallyZero;
        }
    }

    pub fn merge(&mut self, other: ResidualReport) {
        self.verdict = self.verdict.and(other.verdict);
        self.components += other.components;
        self.max_abs = self.max_abs.max(other.max_abs);
        for w in other.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
    }
}
