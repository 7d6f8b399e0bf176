//! Coframes on a chart: structure functions, coframe derivatives, the
//! invariant tower, and extraction of classifying algebroid data.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebroid::FlatAlgebroid;
use crate::error::{Error, Result};
use crate::linalg;
use crate::symexpr::{differentiate, is_identically_zero, normalize, Chart, Compiled, Expr, Node, ZeroOptions};
use crate::verdict::ResidualReport;

/// Determinant magnitude below which a coefficient matrix counts as
/// singular.
pub const SINGULAR_TOL: f64 = 1e-9;
/// Rank threshold for invariant Jacobians (relative to the largest
/// singular value).
pub const RANK_TOL: f64 = 1e-8;
/// Largest gap between values at points sharing `h` that still counts as
/// functional dependence.
pub const DEPENDENCE_TOL: f64 = 1e-8;
/// Default Chebyshev nodes per axis.
pub const DEFAULT_GRID: usize = 5;

/// `θ^i = Σ_j a^i_j dx^j` on a chart.
#[derive(Debug, Clone)]
pub struct Coframe {
    chart: Chart,
    a: Vec<Expr>,
    inv: Vec<Expr>,
}

impl Coframe {
    /// `a[i][j] = a^i_j`. Checks invertibility on a sample grid.
    pub fn new(chart: Chart, a: Vec<Vec<Expr>>) -> Result<Coframe> {
        let n = chart.dim();
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("coframe on a {n}-dimensional chart needs {n}×{n} coefficients")));
        }
        let a: Vec<Expr> = a.into_iter().flatten().collect();
        for e in &a {
            if let Some(v) = e.variables().into_iter().find(|v| chart.index_of(v).is_none()) {
                return Err(Error::UndeclaredVariable(v));
            }
        }
        let mut chart = chart;
        for g in a.iter().flat_map(|e| e.singular_sets()) {
            chart.add_guard(g);
        }
        let compiled: Vec<Compiled> = a.iter().map(|e| e.compile(chart.coords())).collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut points = chart.chebyshev_grid(3, &[])?;
        points.extend(chart.sample(&mut rng, 50, &[])?);
        for p in &points {
            let m = DMatrix::from_fn(n, n, |i, j| compiled[i * n + j].eval(p));
            let det = m.determinant();
            if !det.is_finite() || det.abs() <= SINGULAR_TOL {
                return Err(Error::SingularCoframe { point: p.clone() });
            }
        }
        let inv = symbolic_inverse(&a, n)?;
        for g in inv.iter().flat_map(|e| e.singular_sets()) {
            chart.add_guard(g);
        }
        Ok(Coframe { chart, a, inv })
    }

    /// Coframe from string entries parsed against `chart`.
    pub fn parse(chart: Chart, rows: &[&[&str]]) -> Result<Coframe> {
        let a = rows
            .iter()
            .map(|r| r.iter().map(|s| crate::symexpr::parse_expr(s, &chart)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Coframe::new(chart, a)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    /// `a^i_j`.
    pub fn coefficient(&self, i: usize, j: usize) -> &Expr {
        &self.a[i * self.n() + j]
    }

    /// `b^μ_i` with `dx^μ = Σ_i b^μ_i θ^i`.
    pub fn inverse(&self, mu: usize, i: usize) -> &Expr {
        &self.inv[mu * self.n() + i]
    }

    /// Numeric coefficient matrix at `x`.
    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.coefficient(i, j).eval(self.chart.coords(), x)?;
            }
        }
        Ok(m)
    }

    /// `C^k_ij` flattened as `(k * n + i) * n + j`.
    pub fn structure_functions(&self) -> Vec<Expr> {
        let n = self.n();
        let coords = self.chart.coords();
        // D^k_{μν} = ∂_μ a^k_ν − ∂_ν a^k_μ
        let mut dd = vec![Expr::zero(); n * n * n];
        for k in 0..n {
            for mu in 0..n {
                for nu in (mu + 1)..n {
                    let v = normalize(
                        &(differentiate(self.coefficient(k, nu), &coords[mu])
                            - differentiate(self.coefficient(k, mu), &coords[nu])),
                    );
                    dd[(k * n + nu) * n + mu] = -v.clone();
                    dd[(k * n + mu) * n + nu] = v;
                }
            }
        }
        let mut c = vec![Expr::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut terms = Vec::new();
                    for mu in 0..n {
                        for nu in 0..n {
                            let d = &dd[(k * n + mu) * n + nu];
                            if d.is_zero() {
                                continue;
                            }
                            terms.push(d * &(self.inverse(mu, i) * self.inverse(nu, j)));
                        }
                    }
                    let v = normalize(&Expr::sum(terms));
                    c[(k * n + j) * n + i] = normalize(&-v.clone());
                    c[(k * n + i) * n + j] = v;
                }
            }
        }
        c
    }

    /// `∂f/∂θ^k = Σ_j ∂_j f b^j_k`.
    pub fn coframe_derivative(&self, f: &Expr) -> Vec<Expr> {
        let n = self.n();
        let grads: Vec<Expr> = self.chart.coords().iter().map(|x| differentiate(f, x)).collect();
        (0..n)
            .map(|k| normalize(&Expr::sum((0..n).map(|j| &grads[j] * self.inverse(j, k)))))
            .collect()
    }

    /// Same coframe with one coefficient replaced.
    pub fn with_coefficient(&self, i: usize, j: usize, e: Expr) -> Result<Coframe> {
        let n = self.n();
        let mut rows: Vec<Vec<Expr>> = (0..n).map(|r| self.a[r * n..(r + 1) * n].to_vec()).collect();
        rows[i][j] = e;
        Coframe::new(self.chart.clone(), rows)
    }
}

/// Gauss-Jordan elimination on expressions, normalizing as it goes.
fn symbolic_inverse(a: &[Expr], n: usize) -> Result<Vec<Expr>> {
    let mut m: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let mut row: Vec<Expr> = a[i * n..(i + 1) * n].iter().map(normalize).collect();
            row.extend((0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .min_by_key(|&r| (m[r][col].as_num().is_none(), m[r][col].size(), r))
            .ok_or_else(|| Error::SingularCoframe { point: Vec::new() })?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for j in 0..2 * n {
            m[col][j] = normalize(&(&m[col][j] / &p));
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for j in 0..2 * n {
                if m[col][j].is_zero() {
                    continue;
                }
                m[r][j] = normalize(&(&m[r][j] - &(&factor * &m[col][j])));
            }
        }
    }
    Ok(m.into_iter().flat_map(|row| row.into_iter().skip(n)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub label: String,
    pub order: usize,
    pub expr: Expr,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantTower {
    /// Members of `F_s` new at each order `s`.
    pub orders: Vec<Vec<Invariant>>,
    /// Numeric rank `r_s` of the Jacobian of `F_s`, constant over the grid.
    pub ranks: Vec<usize>,
    /// First order `s` with `r_s = r_{s+1}`.
    pub stabilized_at: Option<usize>,
    /// Number of sample points the ranks were measured on.
    pub grid_points: usize,
    /// Selected functionally independent generators `h_1..h_d`.
    pub generators: Vec<Invariant>,
}

impl InvariantTower {
    /// The rank of the coframe, when the tower stabilized.
    pub fn rank(&self) -> Option<usize> {
        self.stabilized_at.map(|s| self.ranks[s])
    }

    pub fn all(&self) -> impl Iterator<Item = &Invariant> {
        self.orders.iter().flatten()
    }
}

#[derive(Debug, Clone, Default)]
pub struct TowerOptions {
    pub s_max: usize,
    pub grid_per_axis: usize,
    /// User-chosen generators, replacing the automatic selection.
    pub generators: Option<Vec<Expr>>,
}

impl TowerOptions {
    pub fn new(s_max: usize) -> TowerOptions {
        TowerOptions {
            s_max,
            grid_per_axis: DEFAULT_GRID,
            generators: None,
        }
    }
}

struct Gradients {
    rows: Vec<Vec<Compiled>>,
}

impl Gradients {
    fn new(exprs: &[&Expr], coords: &[String]) -> Result<Gradients> {
        let rows = exprs
            .iter()
            .map(|e| coords.iter().map(|x| differentiate(e, x).compile(coords)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Gradients { rows })
    }

    fn at(&self, x: &[f64]) -> DMatrix<f64> {
        let cols = self.rows.first().map_or(x.len(), |r| r.len());
        DMatrix::from_fn(self.rows.len(), cols, |i, j| self.rows[i][j].eval(x))
    }
}

pub fn invariant_tower(theta: &Coframe, opts: &TowerOptions) -> Result<InvariantTower> {
    let n = theta.n();
    let c = theta.structure_functions();
    let mut seen: Vec<Expr> = Vec::new();
    let mut level = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let e = c[(k * n + i) * n + j].clone();
                if !seen.contains(&e) {
                    seen.push(e.clone());
                    level.push(Invariant {
                        label: format!("C^{}_{{{},{}}}", k + 1, i + 1, j + 1),
                        order: 0,
                        expr: e,
                    });
                }
            }
        }
    }
    let mut orders = vec![level];
    // one order beyond s_max is needed to detect stabilization at s_max
    for s in 1..=opts.s_max + 1 {
        let mut next = Vec::new();
        for inv in &orders[s - 1] {
            for (k, e) in theta.coframe_derivative(&inv.expr).into_iter().enumerate() {
                if e.as_num().is_some() || seen.contains(&e) {
                    continue;
                }
                seen.push(e.clone());
                next.push(Invariant {
                    label: format!("∂_{}({})", k + 1, inv.label),
                    order: s,
                    expr: e,
                });
            }
        }
        orders.push(next);
    }

    let guards: Vec<Expr> = orders.iter().flatten().flat_map(|i| i.expr.singular_sets()).collect();
    let grid = theta.chart().chebyshev_grid(opts.grid_per_axis.max(2), &guards)?;
    let coords = theta.chart().coords();
    let all: Vec<&Invariant> = orders.iter().flatten().collect();
    let exprs: Vec<&Expr> = all.iter().map(|i| &i.expr).collect();
    let grads = Gradients::new(&exprs, coords)?;

    let mut ranks = Vec::new();
    for s in 0..orders.len() {
        let count: usize = orders[..=s].iter().map(Vec::len).sum();
        let mut per_point: Vec<(usize, &Vec<f64>)> = Vec::new();
        for p in &grid {
            let j = grads.at(p);
            let r = if count == 0 { 0 } else { linalg::rank(&j.rows(0, count).into_owned(), RANK_TOL) };
            per_point.push((r, p));
        }
        let r0 = per_point[0].0;
        if let Some((r1, q)) = per_point.iter().find(|(r, _)| *r != r0) {
            let mut distinct: Vec<usize> = per_point.iter().map(|(r, _)| *r).collect();
            distinct.sort_unstable();
            distinct.dedup();
            let _ = r1;
            return Err(Error::NotFullyRegular {
                order: s,
                ranks: distinct,
                witnesses: vec![per_point[0].1.clone(), (*q).clone()],
            });
        }
        ranks.push(r0);
    }
    let stabilized_at = (0..ranks.len() - 1).find(|&s| ranks[s] == ranks[s + 1]);

    let generators = match &opts.generators {
        Some(user) => user
            .iter()
            .enumerate()
            .map(|(a, e)| Invariant {
                label: format!("h{}", a + 1),
                order: 0,
                expr: normalize(e),
            })
            .collect(),
        None => {
            let base = theta.chart().center();
            let base = if theta.chart().is_admissible(&base)? { base } else { grid[0].clone() };
            let j = grads.at(&base);
            let mut chosen: Vec<usize> = Vec::new();
            let mut rows: Vec<DVector<f64>> = Vec::new();
            for idx in 0..all.len() {
                let row = j.row(idx).transpose();
                rows.push(row);
                let m = DMatrix::from_columns(&rows);
                if linalg::rank(&m, RANK_TOL) > chosen.len() {
                    chosen.push(idx);
                } else {
                    rows.pop();
                }
            }
            chosen.into_iter().map(|i| all[i].clone()).collect()
        }
    };

    Ok(InvariantTower {
        orders,
        ranks,
        stabilized_at,
        grid_points: grid.len(),
        generators,
    })
}

#[derive(Debug, Clone, Default)]
pub struct DeriveOptions {
    /// Names of the coordinates on `X`; defaults to `h` or `h1..hd`.
    pub names: Option<Vec<String>>,
    /// Expressions for chart coordinates in terms of the `X` coordinates.
    pub inverse: Option<BTreeMap<String, Expr>>,
    /// Box for `X`; defaults to the range of the generators on the grid.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub zero: ZeroOptions,
}

#[derive(Debug, Clone)]
pub struct ClassifyingData {
    pub algebroid: FlatAlgebroid,
    /// The map `h: M → X` in chart coordinates.
    pub h: Vec<Expr>,
    pub inverse: BTreeMap<String, Expr>,
}

enum Target {
    C(usize, usize, usize),
    F(usize, usize),
}

fn default_names(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["h".to_string()]
    } else {
        (1..=d).map(|a| format!("h{a}")).collect()
    }
}

/// Splits a normalized expression into numerator and denominator.
fn as_fraction(e: &Expr) -> (Expr, Expr) {
    match e.node() {
        Node::Div(a, b) => (a.clone(), b.clone()),
        _ => (e.clone(), Expr::one()),
    }
}

/// Solves `h = (αx + β)/(γx + δ)` for `x`, when `h` has that form in its only
/// variable `x`.
fn invert_linear_fractional(h: &Expr, target: &str) -> Option<(String, Expr)> {
    let vars = h.variables();
    if vars.len() != 1 {
        return None;
    }
    let x = vars.into_iter().next().unwrap();
    let (num, den) = as_fraction(&normalize(h));
    let linear = |p: &Expr| {
        let d1 = normalize(&differentiate(p, &x));
        let d2 = normalize(&differentiate(&d1, &x));
        if !d2.is_zero() || d1.depends_on(&x) {
            return None;
        }
        let c0 = normalize(&(p - &(&d1 * &Expr::var(&x))));
        if c0.depends_on(&x) {
            return None;
        }
        Some((d1, c0))
    };
    let (alpha, beta) = linear(&num)?;
    let (gamma, delta) = linear(&den)?;
    let hv = Expr::var(target);
    let x_of_h = normalize(&((&(&delta * &hv) - &beta) / (&alpha - &(&gamma * &hv))));
    if normalize(&(&alpha * &delta - &beta * &gamma)).is_zero() {
        return None;
    }
    Some((x, x_of_h))
}

/// Searches for two chart points with (nearly) equal `h` but different
/// values of `f`.
fn dependence_witness(
    chart: &Chart,
    h: &[Compiled],
    hgrads: &Gradients,
    f: &Compiled,
    points: &[Vec<f64>],
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let hv = |p: &[f64]| -> Vec<f64> { h.iter().map(|c| c.eval(p)).collect() };
    // exact coincidences on the grid
    for (i, p) in points.iter().enumerate() {
        let hp = hv(p);
        for q in &points[i + 1..] {
            let hq = hv(q);
            if hp.iter().zip(&hq).all(|(a, b)| (a - b).abs() <= 1e-12) {
                let gap = (f.eval(p) - f.eval(q)).abs();
                if gap > DEPENDENCE_TOL {
                    return Some((p.clone(), q.clone(), gap));
                }
            }
        }
    }
    // walk along the level set of h from each point
    let width: f64 = chart.bounds().iter().map(|b| b.hi - b.lo).fold(0.0, f64::max);
    for p in points {
        let jh = hgrads.at(p);
        let ker = linalg::kernel(&jh, RANK_TOL);
        let target = hv(p);
        for dir in ker.column_iter() {
            for &t in &[0.05, -0.05, 0.2, -0.2] {
                let mut q: DVector<f64> = DVector::from_column_slice(p) + dir * (t * width);
                for _ in 0..20 {
                    let qs: Vec<f64> = q.iter().cloned().collect();
                    let r = DVector::from_iterator(target.len(), hv(&qs).iter().zip(&target).map(|(a, b)| a - b));
                    if r.amax() < 1e-13 {
                        break;
                    }
                    let step = linalg::lstsq(&hgrads.at(&qs), &r, 1e-12);
                    q -= step;
                }
                let qs: Vec<f64> = q.iter().cloned().collect();
                let close = hv(&qs).iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-10);
                if !close || !chart.is_admissible(&qs).unwrap_or(false) {
                    continue;
                }
                let gap = (f.eval(p) - f.eval(&qs)).abs();
                if gap.is_finite() && gap > DEPENDENCE_TOL {
                    return Some((p.clone(), qs, gap));
                }
            }
        }
    }
    None
}

/// Builds the classifying algebroid of a fully regular coframe from its
/// tower generators.
pub fn derive_classifying_algebroid(
    theta: &Coframe,
    tower: &InvariantTower,
    opts: &DeriveOptions,
) -> Result<ClassifyingData> {
    let n = theta.n();
    let d = tower.generators.len();
    let names = opts.names.clone().unwrap_or_else(|| default_names(d));
    if names.len() != d {
        return Err(Error::Dimension(format!("{d} generators but {} names", names.len())));
    }
    let h: Vec<Expr> = tower.generators.iter().map(|g| g.expr.clone()).collect();
    let c = theta.structure_functions();
    // targets: C^k_ij (i<j) and F^a_i = ∂h_a/∂θ^i
    let mut targets: Vec<(Target, String, Expr)> = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                targets.push((
                    Target::C(k, i, j),
                    format!("C^{}_{{{},{}}}", k + 1, i + 1, j + 1),
                    c[(k * n + i) * n + j].clone(),
                ));
            }
        }
    }
    for (a, ha) in h.iter().enumerate() {
        for (i, e) in theta.coframe_derivative(ha).into_iter().enumerate() {
            targets.push((Target::F(a, i), format!("F^{}_{}", a + 1, i + 1), e));
        }
    }

    let grid = theta.chart().chebyshev_grid(DEFAULT_GRID, &[])?;
    let coords = theta.chart().coords();
    let hc: Vec<Compiled> = h.iter().map(|e| e.compile(coords)).collect::<Result<_>>()?;
    let hrefs: Vec<&Expr> = h.iter().collect();
    let hgrads = Gradients::new(&hrefs, coords)?;
    let check_dependence = || -> Result<()> {
        for (_, label, e) in &targets {
            let f = e.compile(coords)?;
            if let Some((p, q, gap)) = dependence_witness(theta.chart(), &hc, &hgrads, &f, &grid) {
                return Err(Error::NotFunctionOfInvariants {
                    label: label.clone(),
                    p,
                    q,
                    gap,
                });
            }
        }
        Ok(())
    };

    let inverse = match &opts.inverse {
        Some(inv) => inv.clone(),
        None if d == 0 => BTreeMap::new(),
        None => {
            let mut inv = BTreeMap::new();
            for (g, name) in h.iter().zip(&names) {
                match invert_linear_fractional(g, name) {
                    Some((x, e)) if !inv.contains_key(&x) => {
                        inv.insert(x, e);
                    }
                    _ => {
                        check_dependence()?;
                        return Err(Error::InverseRequired(format!(
                            "supply chart coordinates as functions of {}",
                            names.join(", ")
                        )));
                    }
                }
            }
            inv
        }
    };

    let mut bounds = match &opts.bounds {
        Some(b) => b.clone(),
        None => (0..d)
            .map(|a| {
                grid.iter().map(|p| hc[a].eval(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect(),
    };
    if d == 0 {
        bounds.clear();
    }
    let x_chart = Chart::new(&names, &bounds)?;

    let mut x_chart = x_chart;
    let mut c_entries = Vec::new();
    let mut f_entries = Vec::new();
    for (target, label, e) in &targets {
        let sub = normalize(&e.substitute(&inverse));
        if sub.variables().iter().any(|v| x_chart.index_of(v).is_none()) {
            check_dependence()?;
            return Err(Error::InverseRequired(format!("{label} = {sub} still involves chart coordinates")));
        }
        for g in sub.singular_sets() {
            x_chart.add_guard(g);
        }
        match *target {
            Target::C(k, i, j) => c_entries.push(((k, i, j), sub)),
            Target::F(a, i) => f_entries.push(((a, i), sub)),
        }
    }
    let algebroid = FlatAlgebroid::from_entries(x_chart, n, c_entries, f_entries)?;
    let cert = algebroid.certify(&opts.zero)?;
    if !cert.passed() {
        return Err(Error::Uncertified(format!(
            "jacobi {} / anchor {}",
            cert.jacobi.verdict, cert.anchor.verdict
        )));
    }
    Ok(ClassifyingData { algebroid, h, inverse })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyingReport {
    /// `C^k_ij(x) − C^k_ij(h(x))`.
    pub structure: ResidualReport,
    /// `∂h_a/∂θ^i − F^a_i(h(x))`.
    pub anchor: ResidualReport,
}

impl ClassifyingReport {
    pub fn passed(&self) -> bool {
        self.structure.passed() && self.anchor.passed()
    }
}

/// Checks that `(M, θ, h)` realizes the algebroid's structure functions.
pub fn verify_classifying_data(
    theta: &Coframe,
    h: &[Expr],
    alg: &FlatAlgebroid,
    opts: &ZeroOptions,
) -> Result<ClassifyingReport> {
    let n = theta.n();
    if alg.n() != n || alg.d() != h.len() {
        return Err(Error::Dimension(format!(
            "algebroid of rank {} over dimension {} against coframe of rank {n} with {} invariants",
            alg.n(),
            alg.d(),
            h.len()
        )));
    }
    let subst: BTreeMap<String, Expr> = alg.chart().coords().iter().cloned().zip(h.iter().cloned()).collect();
    let c = theta.structure_functions();
    let mut structure = ResidualReport::empty();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let r = &c[(k * n + i) * n + j] - &alg.c(k, i, j).substitute(&subst);
                let t = is_identically_zero(&r, theta.chart(), opts)?;
                structure.record(format!("C^{}_{{{},{}}}", k + 1, i + 1, j + 1), &t);
            }
        }
    }
    let mut anchor = ResidualReport::empty();
    for (a, ha) in h.iter().enumerate() {
        for (i, dh) in theta.coframe_derivative(ha).iter().enumerate() {
            let r = dh - &alg.f(a, i).substitute(&subst);
            let t = is_identically_zero(&r, theta.chart(), opts)?;
            anchor.record(format!("F^{}_{}", a + 1, i + 1), &t);
        }
    }
    Ok(ClassifyingReport { structure, anchor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn half_plane() -> Chart {
        Chart::new(&["x", "y"], &[(0.5, 2.0), (-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn closed_coframe_has_zero_structure_functions() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "1"]]).unwrap();
        assert!(th.structure_functions().iter().all(Expr::is_zero));
    }

    #[test]
    fn structure_function_of_x_dy() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "x"]]).unwrap();
        let c = th.structure_functions();
        // C^2_{12} at flat index (1*2+0)*2+1
        assert_eq!(c[5].to_string(), "1/x");
        assert_eq!(c[6].to_string(), "-1/x");
        assert!(c[1].is_zero());
    }

    #[test]
    fn exponential_coframe_is_constant() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "exp(x)"]]).unwrap();
        assert_eq!(th.structure_functions()[5].as_num(), Some(1.0));
    }

    #[test]
    fn coframe_derivatives() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "x"]]).unwrap();
        let d = th.coframe_derivative(&parse("1/x").unwrap());
        assert_eq!(d[0].to_string(), "-1/x^2");
        assert!(d[1].is_zero());
        assert!(th.coframe_derivative(&Expr::num(3.0)).iter().all(Expr::is_zero));
    }

    #[test]
    fn singular_coframe_rejected() {
        let r = Coframe::parse(half_plane(), &[&["1", "0"], &["1", "0"]]);
        assert!(matches!(r, Err(Error::SingularCoframe { .. })));
    }

    #[test]
    fn tower_ranks() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "x"]]).unwrap();
        let t = invariant_tower(&th, &TowerOptions::new(2)).unwrap();
        assert_eq!(t.rank(), Some(1));
        assert_eq!(t.generators.len(), 1);
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "exp(x)"]]).unwrap();
        let t = invariant_tower(&th, &TowerOptions::new(2)).unwrap();
        assert_eq!(t.rank(), Some(0));
    }

    #[test]
    fn derives_rank_two_algebroid() {
        let th = Coframe::parse(half_plane(), &[&["1", "0"], &["0", "x"]]).unwrap();
        let t = invariant_tower(&th, &TowerOptions::new(2)).unwrap();
        let data = derive_classifying_algebroid(&th, &t, &DeriveOptions::default()).unwrap();
        let alg = &data.algebroid;
        assert_eq!(alg.c(1, 0, 1).to_string(), "h");
        assert_eq!(alg.f(0, 0).to_string(), "-(h^2)");
        assert!(alg.f(0, 1).is_zero());
        let rep = verify_classifying_data(&th, &data.h, alg, &ZeroOptions::default()).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn rejects_non_invariant_target() {
        // h = x cannot express C^2_12 = 1/(x+y)
        let chart = Chart::new(&["x", "y"], &[(0.5, 2.0), (0.5, 2.0)]).unwrap();
        let th = Coframe::parse(chart, &[&["1", "0"], &["0", "x+y"]]).unwrap();
        let mut t = invariant_tower(&th, &TowerOptions::new(1)).unwrap();
        t.generators.truncate(0);
        t.generators.push(Invariant {
            label: "h".into(),
            order: 0,
            expr: parse("x").unwrap(),
        });
        let r = derive_classifying_algebroid(&th, &t, &DeriveOptions::default());
        assert!(matches!(r, Err(Error::NotFunctionOfInvariants { .. })), "{r:?}");
    }
}
