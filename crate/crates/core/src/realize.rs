//! Numeric verification of realizations by finite-difference exterior
//! calculus, and realizations of anchor-zero algebroids through
//! Maurer-Cartan coframes of matrix groups.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebroid::FlatAlgebroid;
use crate::coframe::Coframe;
use crate::error::{Error, Result};
use crate::liealg::{make_algebra, MatrixLieAlgebra};
use crate::symexpr::{Chart, Compiled, Expr};
use crate::verdict::ResidualReport;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Default half-width of the exponential chart.
pub const DEFAULT_HALF_WIDTH: f64 = 0.5;
/// Smallest `|det|` of the coframe matrix accepted on the exponential chart.
pub const INJECTIVITY_TOL: f64 = 1e-6;

/// Point evaluator returning a matrix.
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;
/// Point evaluator returning a vector.
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// `(M, θ, h)` given by evaluators: `coefficients(y)[(k, μ)] = θ^k_μ(y)`.
#[derive(Clone)]
pub struct RealizationCandidate {
    pub chart: Chart,
    pub coefficients: MatrixFn,
    pub h: VectorFn,
}

impl fmt::Debug for RealizationCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealizationCandidate").field("chart", &self.chart).finish_non_exhaustive()
    }
}

fn compile_all(es: &[Expr], coords: &[String]) -> Result<Vec<Compiled>> {
    es.iter().map(|e| e.compile(coords)).collect()
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Eval("non-finite value".into()))
    }
}

impl RealizationCandidate {
    /// Candidate from a symbolic coframe and base map.
    pub fn symbolic(theta: &Coframe, h: &[Expr]) -> Result<RealizationCandidate> {
        let n = theta.n();
        let coords = theta.chart().coords();
        let a: Vec<Expr> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| theta.coefficient(i, j).clone()).collect();
        let a = compile_all(&a, coords)?;
        let hc = compile_all(h, coords)?;
        Ok(RealizationCandidate {
            chart: theta.chart().clone(),
            coefficients: Arc::new(move |y| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = finite(a[i * n + j].eval(y))?;
                    }
                }
                Ok(m)
            }),
            h: Arc::new(move |y| hc.iter().map(|c| finite(c.eval(y))).collect()),
        })
    }

    /// The same candidate with one coefficient scaled by `factor`.
    pub fn mutated(&self, k: usize, mu: usize, factor: f64) -> RealizationCandidate {
        let inner = self.coefficients.clone();
        RealizationCandidate {
            chart: self.chart.clone(),
            coefficients: Arc::new(move |y| {
                let mut m = inner(y)?;
                m[(k, mu)] *= factor;
                Ok(m)
            }),
            h: self.h.clone(),
        }
    }
}

fn shifted(x: &[f64], mu: usize, dx: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[mu] += dx;
    y
}

/// Richardson-extrapolated central difference of `f` along `mu`.
fn partial<T, F>(f: &F, x: &[f64], mu: usize, step: f64) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
    T: Richardson,
{
    let central = |h: f64| -> Result<T> { Ok(T::central(&f(&shifted(x, mu, h))?, &f(&shifted(x, mu, -h))?, h)) };
    let coarse = central(step)?;
    let fine = central(step / 2.0)?;
    Ok(T::extrapolate(&fine, &coarse))
}

trait Richardson: Sized {
    fn central(plus: &Self, minus: &Self, h: f64) -> Self;
    fn extrapolate(fine: &Self, coarse: &Self) -> Self;
}

impl Richardson for DMatrix<f64> {
    fn central(plus: &Self, minus: &Self, h: f64) -> Self {
        (plus - minus) / (2.0 * h)
    }
    fn extrapolate(fine: &Self, coarse: &Self) -> Self {
        (fine * 4.0 - coarse) / 3.0
    }
}

impl Richardson for Vec<f64> {
    fn central(plus: &Self, minus: &Self, h: f64) -> Self {
        plus.iter().zip(minus).map(|(p, m)| (p - m) / (2.0 * h)).collect()
    }
    fn extrapolate(fine: &Self, coarse: &Self) -> Self {
        fine.iter().zip(coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
    }
}

/// `(dθ)^k_{μν} = ∂_μ a^k_ν − ∂_ν a^k_μ`, returned as one `m × m` matrix per
/// form `k`.
pub fn numeric_exterior_derivative(
    form: &dyn Fn(&[f64]) -> Result<DMatrix<f64>>,
    x: &[f64],
    step: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let m = x.len();
    let partials: Vec<DMatrix<f64>> = (0..m).map(|mu| partial(&form, x, mu, step)).collect::<Result<_>>()?;
    let rows = partials.first().map_or(0, |p| p.nrows());
    Ok((0..rows)
        .map(|k| DMatrix::from_fn(m, m, |mu, nu| partials[mu][(k, nu)] - partials[nu][(k, mu)]))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RealizationReport {
    /// `dθ^k − Σ_{i<j} C^k_ij(h) θ^i∧θ^j`.
    pub structure: ResidualReport,
    /// `dh^a − Σ_i F^a_i(h) θ^i`.
    pub anchor: ResidualReport,
    pub samples: usize,
    pub tol: f64,
}

impl RealizationReport {
    pub fn passed(&self) -> bool {
        self.structure.passed() && self.anchor.passed()
    }

    pub fn max_abs(&self) -> f64 {
        self.structure.max_abs.max(self.anchor.max_abs)
    }
}

/// Checks the structure equations of `alg` on `cand` at each sample point.
pub fn verify_realization_numeric(
    cand: &RealizationCandidate,
    alg: &FlatAlgebroid,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<RealizationReport> {
    verify_with_step(cand, alg, samples, tol, DEFAULT_STEP)
}

pub fn verify_with_step(
    cand: &RealizationCandidate,
    alg: &FlatAlgebroid,
    samples: &[Vec<f64>],
    tol: f64,
    step: f64,
) -> Result<RealizationReport> {
    let n = alg.n();
    let ev = alg.evaluator()?;
    let mut structure = ResidualReport::empty();
    let mut anchor = ResidualReport::empty();
    for y in samples {
        let a = (cand.coefficients)(y)?;
        if a.nrows() != n {
            return Err(Error::Dimension(format!("candidate has {} forms, algebroid rank {n}", a.nrows())));
        }
        let m = a.ncols();
        let hy = (cand.h)(y)?;
        if !alg.chart().in_box(&hy) {
            return Err(Error::OutsideChart(hy));
        }
        let c = ev.c_at(&hy);
        let f = ev.anchor_at(&hy);
        let coef = |p: &[f64]| (cand.coefficients)(p);
        let dtheta = numeric_exterior_derivative(&coef, y, step)?;
        for k in 0..n {
            for mu in 0..m {
                for nu in (mu + 1)..m {
                    let mut rhs = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            rhs += c[(k * n + i) * n + j] * a[(i, mu)] * a[(j, nu)];
                        }
                    }
                    let r = dtheta[k][(mu, nu)] - rhs;
                    structure.record_value(|| format!("dθ^{}_{{{},{}}}", k + 1, mu + 1, nu + 1), y, r, tol);
                }
            }
        }
        let hfun = |p: &[f64]| (cand.h)(p);
        let dh: Vec<Vec<f64>> = (0..m).map(|mu| partial(&hfun, y, mu, step)).collect::<Result<_>>()?;
        for ai in 0..alg.d() {
            for mu in 0..m {
                let rhs: f64 = (0..n).map(|i| f[(ai, i)] * a[(i, mu)]).sum();
                let r = dh[mu][ai] - rhs;
                anchor.record_value(|| format!("dh^{}_{}", ai + 1, mu + 1), y, r, tol);
            }
        }
    }
    Ok(RealizationReport {
        structure,
        anchor,
        samples: samples.len(),
        tol,
    })
}

/// A faithful matrix algebra whose bracket is the realized bracket of an
/// anchor-zero algebroid at `x`: the negated adjoint matrices, or diagonal
/// matrices when the fiber is abelian.
pub fn fiber_matrix_algebra(alg: &FlatAlgebroid, x: &[f64]) -> Result<MatrixLieAlgebra> {
    let n = alg.n();
    let ev = alg.evaluator()?;
    let c = ev.c_at(x);
    if c.iter().all(|v| *v == 0.0) {
        let basis = (0..n)
            .map(|i| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = 1.0;
                m
            })
            .collect();
        return make_algebra(basis);
    }
    let sigma = alg.convention().bracket_sign();
    // ad(e_i) for the realized bracket σC
    let basis = (0..n)
        .map(|i| DMatrix::from_fn(n, n, |k, j| sigma * c[(k * n + i) * n + j]))
        .collect();
    make_algebra(basis)
}

fn mat_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// Maurer-Cartan coframe of `y ↦ exp(y¹E₁)⋯exp(y^mE_m)` on `[−w, w]^m`,
/// with constant `h ≡ h0`. The box is halved until the coframe is
/// invertible at every check point.
pub fn realize_bundle_fiber(g: &MatrixLieAlgebra, half_width: f64, h0: Vec<f64>) -> Result<RealizationCandidate> {
    let m = g.dim();
    let mut w = half_width;
    for _ in 0..12 {
        let names: Vec<String> = (1..=m).map(|i| format!("y{i}")).collect();
        let chart = Chart::new(&names, &vec![(-w, w); m])?;
        let g2 = g.clone();
        let coefficients: MatrixFn = Arc::new(move |y: &[f64]| mc_coefficients(&g2, y));
        let points = chart.chebyshev_grid(3, &[])?;
        let mut corners = vec![vec![0.0; m]];
        for s in 0..(1usize << m.min(10)) {
            corners.push((0..m).map(|i| if (s >> i) & 1 == 1 { w } else { -w }).collect());
        }
        let ok = points.iter().chain(&corners).all(|p| {
            coefficients(p).map(|a| a.determinant().abs() > INJECTIVITY_TOL).unwrap_or(false)
        });
        if ok {
            let h0 = h0.clone();
            return Ok(RealizationCandidate {
                chart,
                coefficients,
                h: Arc::new(move |_| Ok(h0.clone())),
            });
        }
        w /= 2.0;
    }
    Err(Error::ChartNotInjective(w))
}

/// `θ^k_μ(y)`: coordinates of `P_μ⁻¹ E_μ P_μ` with
/// `P_μ = exp(y^{μ+1}E_{μ+1})⋯exp(y^mE_m)`.
fn mc_coefficients(g: &MatrixLieAlgebra, y: &[f64]) -> Result<DMatrix<f64>> {
    let m = g.dim();
    if y.len() != m {
        return Err(Error::Dimension(format!("point has {} coordinates, group has {m}", y.len())));
    }
    let basis = g.basis();
    let size = g.n();
    let mut out = DMatrix::zeros(m, m);
    let mut tail = DMatrix::identity(size, size);
    let mut tail_inv = DMatrix::identity(size, size);
    for mu in (0..m).rev() {
        let ad = &tail_inv * &basis[mu] * &tail;
        let (coef, _) = g.coordinates(&ad);
        for k in 0..m {
            out[(k, mu)] = coef[k];
        }
        tail = mat_exp(&(&basis[mu] * y[mu])) * tail;
        tail_inv = &tail_inv * mat_exp(&(&basis[mu] * -y[mu]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::presets;
    use crate::symexpr::parse;

    #[test]
    fn constant_coframe_has_zero_derivative() {
        let f = |_: &[f64]| Ok(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let d = numeric_exterior_derivative(&f, &[0.3, 0.4], DEFAULT_STEP).unwrap();
        assert!(d.iter().all(|m| m.amax() < 1e-10));
    }

    #[test]
    fn x_dy_derivative() {
        let f = |p: &[f64]| Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, p[0]]));
        let d = numeric_exterior_derivative(&f, &[1.0, 0.0], DEFAULT_STEP).unwrap();
        assert!((d[1][(0, 1)] - 1.0).abs() < 1e-8);
        assert!((d[1][(1, 0)] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn abelian_fiber_gives_coordinate_coframe() {
        let g = presets::o(2);
        let cand = realize_bundle_fiber(&g, 0.5, vec![]).unwrap();
        let a = (cand.coefficients)(&[0.3]).unwrap();
        assert!((a[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn so3_fiber_realizes_its_algebroid() {
        let g = presets::o(3);
        let cand = realize_bundle_fiber(&g, 0.5, vec![]).unwrap();
        let sc = g.structure_constants();
        // C = -c
        let entries: Vec<_> = (0..3)
            .flat_map(|i| ((i + 1)..3).flat_map(move |j| (0..3).map(move |k| (k, i, j))))
            .map(|(k, i, j)| ((k, i, j), Expr::num(-sc.get(i, j, k))))
            .collect();
        let alg = FlatAlgebroid::from_entries(Chart::point(), 3, entries, []).unwrap();
        let pts = cand.chart.chebyshev_grid(3, &[]).unwrap();
        let rep = verify_realization_numeric(&cand, &alg, &pts, 1e-6).unwrap();
        assert!(rep.passed(), "{}", rep.max_abs());
        let bad = cand.mutated(0, 1, 1.5);
        let rep = verify_realization_numeric(&bad, &alg, &pts, 1e-6).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn last_factor_direction_is_constant() {
        let g = presets::o(3);
        let cand = realize_bundle_fiber(&g, 0.5, vec![]).unwrap();
        let a = (cand.coefficients)(&[0.1, -0.2, 0.3]).unwrap();
        let b = (cand.coefficients)(&[0.1, -0.2, -0.4]).unwrap();
        for k in 0..3 {
            assert!((a[(k, 2)] - b[(k, 2)]).abs() < 1e-8);
        }
    }

    #[test]
    fn symbolic_candidate_matches() {
        let chart = Chart::new(&["x", "y"], &[(0.5, 2.0), (-1.0, 1.0)]).unwrap();
        let th = Coframe::parse(chart, &[&["1", "0"], &["0", "x"]]).unwrap();
        let hchart = Chart::new(&["h"], &[(0.4, 2.1)]).unwrap();
        let alg = FlatAlgebroid::from_entries(hchart, 2, [((1, 0, 1), Expr::var("h"))], [((0, 0), -parse("h^2").unwrap())])
            .unwrap();
        let cand = RealizationCandidate::symbolic(&th, &[parse("1/x").unwrap()]).unwrap();
        let pts = th.chart().chebyshev_grid(4, &[]).unwrap();
        let rep = verify_realization_numeric(&cand, &alg, &pts, 1e-8).unwrap();
        assert!(rep.passed(), "{}", rep.max_abs());
    }
}
