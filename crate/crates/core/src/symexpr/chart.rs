use rand::Rng;
use serde::Serialize;

use super::{Compiled, Expr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Minimum |g(p)| for a guard g at an admissible sample.
pub const GUARD_EPS: f64 = 1e-8;

/// Coordinate chart: named coordinates on a closed box, minus the zero sets
/// of the guard expressions.
#[derive(Debug, Clone)]
pub struct Chart {
    coords: Vec<String>,
    bounds: Vec<Interval>,
    guards: Vec<Expr>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(coords: &[S], bounds: &[(f64, f64)]) -> Result<Chart> {
        if coords.len() != bounds.len() {
            return Err(Error::InvalidChart(format!(
                "{} coordinates but {} intervals",
                coords.len(),
                bounds.len()
            )));
        }
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{c}`")));
            }
            let valid = !c.is_empty()
                && !c.starts_with(|ch: char| ch.is_ascii_digit())
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid {
                return Err(Error::InvalidChart(format!("bad coordinate name `{c}`")));
            }
        }
        for (c, &(lo, hi)) in coords.iter().zip(bounds) {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidChart(format!("empty interval for `{c}`")));
            }
        }
        Ok(Chart {
            coords,
            bounds: bounds.iter().map(|&(a, b)| Interval::new(a, b)).collect(),
            guards: Vec::new(),
        })
    }

    /// Chart with no coordinates (a single point).
    pub fn point() -> Chart {
        Chart {
            coords: Vec::new(),
            bounds: Vec::new(),
            guards: Vec::new(),
        }
    }

    pub fn with_guard(mut self, g: Expr) -> Chart {
        self.add_guard(g);
        self
    }

    /// Adds a guard unless it is constant or already present. Returns
    /// whether it was new.
    pub fn add_guard(&mut self, g: Expr) -> bool {
        if g.as_num().is_some() || self.guards.contains(&g) {
            return false;
        }
        self.guards.push(g);
        true
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn guards(&self) -> &[Expr] {
        &self.guards
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(Interval::mid).collect()
    }

    pub fn in_box(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.bounds.iter().zip(p).all(|(b, &x)| b.contains(x))
    }

    fn compiled_guards(&self, extra: &[Expr]) -> Result<Vec<Compiled>> {
        self.guards
            .iter()
            .chain(extra)
            .map(|g| g.compile(&self.coords))
            .collect()
    }

    fn admissible(guards: &[Compiled], p: &[f64]) -> bool {
        guards.iter().all(|g| {
            let v = g.eval(p);
            v.is_finite() && v.abs() > GUARD_EPS
        })
    }

    /// Whether `p` is in the box and off every guard hypersurface.
    pub fn is_admissible(&self, p: &[f64]) -> Result<bool> {
        Ok(self.in_box(p) && Self::admissible(&self.compiled_guards(&[])?, p))
    }

    /// Uniform samples in the box avoiding the chart guards and `extra`.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize, extra: &[Expr]) -> Result<Vec<Vec<f64>>> {
        let guards = self.compiled_guards(extra)?;
        let mut out = Vec::with_capacity(count);
        let budget = 1000 * count.max(1);
        let mut tries = 0;
        while out.len() < count {
            if tries >= budget {
                if out.is_empty() {
                    return Err(Error::EmptyDomain);
                }
                break;
            }
            tries += 1;
            let p: Vec<f64> = self
                .bounds
                .iter()
                .map(|b| if b.lo == b.hi { b.lo } else { rng.gen_range(b.lo..=b.hi) })
                .collect();
            if Self::admissible(&guards, &p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Tensor grid of Chebyshev nodes, `per_axis` along every coordinate,
    /// minus points on guards. Nodes stay strictly inside the box.
    pub fn chebyshev_grid(&self, per_axis: usize, extra: &[Expr]) -> Result<Vec<Vec<f64>>> {
        let guards = self.compiled_guards(extra)?;
        let per_axis = per_axis.max(1);
        let nodes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|b| {
                (0..per_axis)
                    .map(|j| {
                        let t = ((2 * j + 1) as f64 * std::f64::consts::PI
                            / (2 * per_axis) as f64)
                            .cos();
                        b.mid() - b.half_width() * t
                    })
                    .collect()
            })
            .collect();
        let total = per_axis.pow(self.dim() as u32);
        let mut out = Vec::new();
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(self.dim());
            for axis in &nodes {
                p.push(axis[idx % per_axis]);
                idx /= per_axis;
            }
            if Self::admissible(&guards, &p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(out)
    }
}
