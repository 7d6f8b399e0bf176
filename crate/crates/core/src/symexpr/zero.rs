use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{normalize_bounded, Chart, Expr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOptions {
    pub samples: usize,
    pub abs_tol: f64,
    pub seed: u64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions {
            samples: 200,
            abs_tol: 1e-10,
            seed: 42,
        }
    }
}

/// Three-valued outcome of a zero test. `Unknown` means every sample
/// vanished to tolerance but the normal form is not the zero constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroTest {
    Zero,
    NonZero { witness: Vec<f64>, value: f64 },
    Unknown { samples: usize, max_abs: f64 },
}

impl ZeroTest {
    /// Zero, or numerically zero on every sample.
    pub fn vanishes(&self) -> bool {
        !matches!(self, ZeroTest::NonZero { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroTest::Zero => "zero",
            ZeroTest::NonZero { .. } => "nonzero",
            ZeroTest::Unknown { .. } => "numerically zero",
        }
    }
}

/// Work limit for the exact step of [`is_identically_zero`]; past it the
/// verdict comes from sampling alone.
pub const NORMALIZE_BUDGET: u64 = 250_000;

pub fn is_identically_zero(e: &Expr, chart: &Chart, opts: &ZeroOptions) -> Result<ZeroTest> {
    let mut guards = match normalize_bounded(e, NORMALIZE_BUDGET) {
        Some((nf, _)) if nf.is_zero() => return Ok(ZeroTest::Zero),
        Some((_, guards)) => guards,
        None => Vec::new(),
    };
    for g in e.singular_sets() {
        if !guards.contains(&g) {
            guards.push(g);
        }
    }
    let f = e.compile(chart.coords())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points = chart.sample(&mut rng, opts.samples, &guards)?;
    let mut max_abs: f64 = 0.0;
    let mut used = 0;
    for p in points {
        let v = f.eval(&p);
        if !v.is_finite() {
            continue;
        }
        used += 1;
        if v.abs() > opts.abs_tol {
            return Ok(ZeroTest::NonZero { witness: p, value: v });
        }
        max_abs = max_abs.max(v.abs());
    }
    if used == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(ZeroTest::Unknown {
        samples: used,
        max_abs,
    })
}
