//! Flat Lie algebroids `X × Rⁿ → X` given by symbolic structure functions
//! `C^k_ij` and anchor components `F^a_i`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::{AlgebraType, StructureConstants};
use crate::linalg;
use crate::symexpr::{differentiate, is_identically_zero, normalize, Chart, Compiled, Expr, ZeroOptions};
use crate::verdict::{ResidualReport, Verdict};

/// How the tables `C`, `F` read off from `dθ = Σ C θ∧θ`, `dh = F θ` are
/// turned into a bracket on constant sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `[e_i, e_j] = -C^k_ij e_k`, `#e_i = F^a_i ∂_a`. This is the bracket
    /// for which `d² = 0` on a realization is equivalent to the axioms.
    #[default]
    StructureEquation,
    /// `[e_i, e_j] = C^k_ij e_k`, `#e_i = F^a_i ∂_a`.
    Literal,
}

impl SignConvention {
    /// Sign `σ` with `[e_i, e_j] = σ C^k_ij e_k`.
    pub fn bracket_sign(self) -> f64 {
        match self {
            SignConvention::StructureEquation => -1.0,
            SignConvention::Literal => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignConvention::StructureEquation => "structure-equation",
            SignConvention::Literal => "literal",
        }
    }

    pub fn from_name(s: &str) -> Option<SignConvention> {
        match s {
            "structure-equation" | "structure_equation" => Some(SignConvention::StructureEquation),
            "literal" => Some(SignConvention::Literal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlatAlgebroid {
    chart: Chart,
    n: usize,
    // c[(k * n + i) * n + j] = C^k_ij
    c: Vec<Expr>,
    // f[a * n + i] = F^a_i
    f: Vec<Expr>,
    convention: SignConvention,
    warnings: Vec<String>,
}

impl FlatAlgebroid {
    /// Builds from full tables. A `C` that is not antisymmetric in `(i,j)` is
    /// replaced by its antisymmetric part and a warning is recorded.
    pub fn new(chart: Chart, n: usize, c: Vec<Expr>, f: Vec<Expr>) -> Result<FlatAlgebroid> {
        let d = chart.dim();
        if c.len() != n * n * n {
            return Err(Error::Dimension(format!("C needs {} entries, got {}", n * n * n, c.len())));
        }
        if f.len() != d * n {
            return Err(Error::Dimension(format!("F needs {} entries, got {}", d * n, f.len())));
        }
        for e in c.iter().chain(&f) {
            if let Some(v) = e.variables().into_iter().find(|v| chart.index_of(v).is_none()) {
                return Err(Error::UndeclaredVariable(v));
            }
        }
        let mut alg = FlatAlgebroid {
            chart,
            n,
            c,
            f,
            convention: SignConvention::default(),
            warnings: Vec::new(),
        };
        alg.enforce_antisymmetry();
        Ok(alg)
    }

    /// Builds from entries `C^k_ij` with `i < j` and anchor entries
    /// `F^a_i`; omitted entries are zero. Indices are 0-based.
    pub fn from_entries(
        chart: Chart,
        n: usize,
        c_entries: impl IntoIterator<Item = ((usize, usize, usize), Expr)>,
        f_entries: impl IntoIterator<Item = ((usize, usize), Expr)>,
    ) -> Result<FlatAlgebroid> {
        let d = chart.dim();
        let mut c = vec![Expr::zero(); n * n * n];
        for ((k, i, j), e) in c_entries {
            if k >= n || i >= n || j >= n || i == j {
                return Err(Error::Dimension(format!("bad C index ({k},{i},{j})")));
            }
            let (i, j, e) = if i < j { (i, j, e) } else { (j, i, -e) };
            c[(k * n + i) * n + j] = e.clone();
            c[(k * n + j) * n + i] = -e;
        }
        let mut f = vec![Expr::zero(); d * n];
        for ((a, i), e) in f_entries {
            if a >= d || i >= n {
                return Err(Error::Dimension(format!("bad F index ({a},{i})")));
            }
            f[a * n + i] = e;
        }
        FlatAlgebroid::new(chart, n, c, f)
    }

    fn enforce_antisymmetry(&mut self) {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let a = self.c[(k * n + i) * n + j].clone();
                    let b = self.c[(k * n + j) * n + i].clone();
                    if normalize(&(&a + &b)).is_zero() {
                        continue;
                    }
                    self.warnings.push(format!(
                        "C^{}_{{{},{}}} was not antisymmetric; replaced by its antisymmetric part",
                        k + 1,
                        i + 1,
                        j + 1
                    ));
                    let half = normalize(&((&a - &b) * Expr::num(0.5)));
                    self.c[(k * n + j) * n + i] = -half.clone();
                    self.c[(k * n + i) * n + j] = half;
                }
            }
        }
    }

    pub fn with_convention(mut self, convention: SignConvention) -> FlatAlgebroid {
        self.convention = convention;
        self
    }

    pub fn convention(&self) -> SignConvention {
        self.convention
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Fiber rank.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Base dimension.
    pub fn d(&self) -> usize {
        self.chart.dim()
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.c[(k * self.n + i) * self.n + j]
    }

    pub fn f(&self, a: usize, i: usize) -> &Expr {
        &self.f[a * self.n + i]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same algebroid in the relabeled basis `e'_p = e_{perm[p]}`.
    pub fn relabel(&self, perm: &[usize]) -> FlatAlgebroid {
        let n = self.n;
        let d = self.d();
        let mut c = vec![Expr::zero(); n * n * n];
        for r in 0..n {
            for p in 0..n {
                for q in 0..n {
                    c[(r * n + p) * n + q] = self.c(perm[r], perm[p], perm[q]).clone();
                }
            }
        }
        let mut f = vec![Expr::zero(); d * n];
        for a in 0..d {
            for p in 0..n {
                f[a * n + p] = self.f(a, perm[p]).clone();
            }
        }
        FlatAlgebroid {
            chart: self.chart.clone(),
            n,
            c,
            f,
            convention: self.convention,
            warnings: self.warnings.clone(),
        }
    }

    /// `J^m_{ijk}` for `i < j < k`, as `((i, j, k, m), expr)`.
    pub fn jacobi_table(&self) -> Vec<((usize, usize, usize, usize), Expr)> {
        let n = self.n;
        let coords = self.chart.coords().to_vec();
        let sigma = self.convention.bracket_sign();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for m in 0..n {
                        let mut terms = Vec::new();
                        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..n {
                                terms.push(self.c(l, a, b) * self.c(m, l, c));
                            }
                            for (x, name) in coords.iter().enumerate() {
                                let dc = differentiate(self.c(m, a, b), name);
                                terms.push((self.f(x, c) * &dc).scale(-sigma));
                            }
                        }
                        out.push(((i, j, k, m), Expr::sum(terms)));
                    }
                }
            }
        }
        out
    }

    /// `M^b_{ij}` for `i < j`, as `((i, j, b), expr)`.
    pub fn anchor_table(&self) -> Vec<((usize, usize, usize), Expr)> {
        let n = self.n;
        let coords = self.chart.coords().to_vec();
        let sigma = self.convention.bracket_sign();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for b in 0..self.d() {
                    let mut terms = Vec::new();
                    for (a, name) in coords.iter().enumerate() {
                        terms.push(self.f(a, i) * &differentiate(self.f(b, j), name));
                        terms.push(-(self.f(a, j) * &differentiate(self.f(b, i), name)));
                    }
                    for k in 0..n {
                        terms.push((self.c(k, i, j) * self.f(b, k)).scale(-sigma));
                    }
                    out.push(((i, j, b), Expr::sum(terms)));
                }
            }
        }
        out
    }

    pub fn jacobi_residual(&self, opts: &ZeroOptions) -> Result<ResidualReport> {
        let mut report = ResidualReport::empty();
        for ((i, j, k, m), e) in self.jacobi_table() {
            let t = is_identically_zero(&e, &self.chart, opts)?;
            report.record(format!("J^{}_{{{},{},{}}}", m + 1, i + 1, j + 1, k + 1), &t);
        }
        Ok(report)
    }

    pub fn anchor_morphism_residual(&self, opts: &ZeroOptions) -> Result<ResidualReport> {
        let mut report = ResidualReport::empty();
        for ((i, j, b), e) in self.anchor_table() {
            let t = is_identically_zero(&e, &self.chart, opts)?;
            report.record(format!("M^{}_{{{},{}}}", b + 1, i + 1, j + 1), &t);
        }
        Ok(report)
    }

    /// Both symbolic checks.
    pub fn certify(&self, opts: &ZeroOptions) -> Result<Certification> {
        Ok(Certification {
            convention: self.convention,
            jacobi: self.jacobi_residual(opts)?,
            anchor: self.anchor_morphism_residual(opts)?,
        })
    }

    pub fn evaluator(&self) -> Result<AlgebroidEval> {
        AlgebroidEval::new(self)
    }

    /// Numeric Jacobi and anchor residuals at the given points, judged
    /// against `tol`.
    pub fn numeric_certify(&self, points: &[Vec<f64>], tol: f64) -> Result<Certification> {
        let ev = self.evaluator()?;
        let n = self.n;
        let d = self.d();
        let mut jacobi = ResidualReport::empty();
        let mut anchor = ResidualReport::empty();
        for p in points {
            let (jv, mv) = ev.residuals_at(p);
            let mut idx = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in (j + 1)..n {
                        for m in 0..n {
                            jacobi.record_value(
                                || format!("J^{}_{{{},{},{}}}", m + 1, i + 1, j + 1, k + 1),
                                p,
                                jv[idx],
                                tol,
                            );
                            idx += 1;
                        }
                    }
                }
            }
            let mut idx = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    for b in 0..d {
                        anchor.record_value(|| format!("M^{}_{{{},{}}}", b + 1, i + 1, j + 1), p, mv[idx], tol);
                        idx += 1;
                    }
                }
            }
        }
        Ok(Certification {
            convention: self.convention,
            jacobi,
            anchor,
        })
    }

    /// Kernel of `F(x)` with the induced bracket.
    pub fn isotropy_at(&self, x: &[f64]) -> Result<IsotropyAlgebra> {
        let ev = self.evaluator()?;
        self.check_point(x)?;
        let f = ev.anchor_at(x);
        let n = self.n;
        let kernel = if f.amax() <= ORBIT_TOL {
            DMatrix::identity(n, n)
        } else {
            linalg::kernel(&f, ORBIT_TOL)
        };
        let r = kernel.ncols();
        let sigma = self.convention.bracket_sign();
        let cv = ev.c_at(x);
        let bracket = |u: &DVector<f64>, v: &DVector<f64>| {
            DVector::from_fn(n, |k, _| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += cv[(k * n + i) * n + j] * u[i] * v[j];
                    }
                }
                sigma * s
            })
        };
        let mut constants = StructureConstants::zeros(r);
        let mut residual: f64 = 0.0;
        for p in 0..r {
            for q in (p + 1)..r {
                let w = bracket(&kernel.column(p).into_owned(), &kernel.column(q).into_owned());
                let coef = kernel.transpose() * &w;
                residual = residual.max((&w - &kernel * &coef).amax());
                for s in 0..r {
                    constants.set(p, q, s, coef[s]);
                }
            }
        }
        if residual > ISOTROPY_TOL {
            return Err(Error::IsotropyNotClosed {
                point: x.to_vec(),
                residual,
            });
        }
        let kind = constants.classify(ISOTROPY_TOL);
        Ok(IsotropyAlgebra {
            point: x.to_vec(),
            basis: kernel.column_iter().map(|c| c.iter().cloned().collect()).collect(),
            constants,
            closure_residual: residual,
            kind,
        })
    }

    pub fn orbit_rank_at(&self, x: &[f64]) -> Result<usize> {
        self.check_point(x)?;
        let f = self.evaluator()?.anchor_at(x);
        if f.amax() <= ORBIT_TOL {
            return Ok(0);
        }
        Ok(linalg::rank(&f, ORBIT_TOL))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() || !self.chart.in_box(x) {
            return Err(Error::OutsideChart(x.to_vec()));
        }
        Ok(())
    }

    /// Semi-decision of whether `x` and `y` lie on one orbit, by composing
    /// flows of anchor fields.
    pub fn same_orbit(&self, x: &[f64], y: &[f64], budget: usize) -> Result<OrbitVerdict> {
        self.check_point(x)?;
        self.check_point(y)?;
        let ev = self.evaluator()?;
        let dist = |a: &[f64]| a.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        if dist(x) <= ORBIT_REACH_TOL {
            return Ok(OrbitVerdict::Yes { path: Vec::new(), endpoint: x.to_vec() });
        }
        if self.orbit_rank_at(x)? == 0 && self.orbit_rank_at(y)? == 0 {
            return Ok(OrbitVerdict::No {
                reason: "both points are fixed by every anchor field".into(),
            });
        }
        let mut p = x.to_vec();
        let mut path = Vec::new();
        let mut steps_used = 0usize;
        while steps_used < budget {
            let current = dist(&p);
            if current <= ORBIT_REACH_TOL {
                return Ok(OrbitVerdict::Yes { path, endpoint: p });
            }
            let f = ev.anchor_at(&p);
            let target = DVector::from_iterator(p.len(), y.iter().zip(&p).map(|(q, a)| q - a));
            let v = linalg::lstsq(&f, &target, ORBIT_TOL);
            if v.amax() == 0.0 || !v.iter().all(|c| c.is_finite()) {
                break;
            }
            let coef: Vec<f64> = v.iter().cloned().collect();
            let mut time = 1.0;
            let mut advanced = false;
            while time >= FLOW_STEP && steps_used < budget {
                let steps = (time / FLOW_STEP).round().max(1.0) as usize;
                let q = ev.flow(&p, &coef, steps, time / steps as f64);
                steps_used += steps;
                match q {
                    Some(q) if self.chart.in_box(&q) && dist(&q) < current => {
                        path.push(FlowSegment {
                            coefficients: coef.clone(),
                            time,
                        });
                        p = q;
                        advanced = true;
                        break;
                    }
                    _ => time *= 0.5,
                }
            }
            if !advanced {
                break;
            }
        }
        Ok(OrbitVerdict::Unknown {
            closest: dist(&p),
            steps: steps_used,
        })
    }
}

/// Singular values of `F(x)` at or below this count as zero.
pub const ORBIT_TOL: f64 = 1e-9;
/// Closure tolerance for the isotropy bracket.
pub const ISOTROPY_TOL: f64 = 1e-9;
/// Distance at which a flow path counts as having reached its target.
pub const ORBIT_REACH_TOL: f64 = 1e-6;
/// Fixed RK4 step for anchor flows.
pub const FLOW_STEP: f64 = 1e-3;
/// Default step budget for orbit searches.
pub const DEFAULT_FLOW_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub convention: SignConvention,
    pub jacobi: ResidualReport,
    pub anchor: ResidualReport,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.jacobi.passed() && self.anchor.passed()
    }

    pub fn verdict(&self) -> Verdict {
        self.jacobi.verdict.and(self.anchor.verdict)
    }

    pub fn max_abs(&self) -> f64 {
        self.jacobi.max_abs.max(self.anchor.max_abs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyAlgebra {
    pub point: Vec<f64>,
    /// Orthonormal basis of `ker F(x)`, as vectors in `Rⁿ`.
    pub basis: Vec<Vec<f64>>,
    #[serde(skip)]
    pub constants: StructureConstants,
    pub closure_residual: f64,
    pub kind: AlgebraType,
}

impl IsotropyAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSegment {
    /// Coefficients `v` of the flowed field `Σ v^i #e_i`.
    pub coefficients: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrbitVerdict {
    Yes { path: Vec<FlowSegment>, endpoint: Vec<f64> },
    No { reason: String },
    Unknown { closest: f64, steps: usize },
}

/// Compiled tables of an algebroid and their first derivatives.
pub struct AlgebroidEval {
    n: usize,
    d: usize,
    c: Vec<Compiled>,
    f: Vec<Compiled>,
    // dc[a][idx], df[a][idx]
    dc: Vec<Vec<Compiled>>,
    df: Vec<Vec<Compiled>>,
    sigma: f64,
}

impl AlgebroidEval {
    fn new(alg: &FlatAlgebroid) -> Result<AlgebroidEval> {
        let coords = alg.chart.coords();
        let compile = |es: &[Expr]| -> Result<Vec<Compiled>> { es.iter().map(|e| e.compile(coords)).collect() };
        let mut dc = Vec::new();
        let mut df = Vec::new();
        for name in coords {
            let dcs: Vec<Expr> = alg.c.iter().map(|e| differentiate(e, name)).collect();
            let dfs: Vec<Expr> = alg.f.iter().map(|e| differentiate(e, name)).collect();
            dc.push(compile(&dcs)?);
            df.push(compile(&dfs)?);
        }
        Ok(AlgebroidEval {
            n: alg.n,
            d: alg.d(),
            c: compile(&alg.c)?,
            f: compile(&alg.f)?,
            dc,
            df,
            sigma: alg.convention.bracket_sign(),
        })
    }

    /// `C^k_ij(x)` flattened as `(k * n + i) * n + j`.
    pub fn c_at(&self, x: &[f64]) -> Vec<f64> {
        self.c.iter().map(|e| e.eval(x)).collect()
    }

    /// The `d × n` matrix `F(x)`.
    pub fn anchor_at(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.n, |a, i| self.f[a * self.n + i].eval(x))
    }

    /// Jacobi components (`i<j<k`, then `m`) and anchor components
    /// (`i<j`, then `b`) at `x`.
    pub fn residuals_at(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, d) = (self.n, self.d);
        let c = self.c_at(x);
        let f: Vec<f64> = self.f.iter().map(|e| e.eval(x)).collect();
        let dc: Vec<Vec<f64>> = self.dc.iter().map(|t| t.iter().map(|e| e.eval(x)).collect()).collect();
        let df: Vec<Vec<f64>> = self.df.iter().map(|t| t.iter().map(|e| e.eval(x)).collect()).collect();
        let ci = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let mut jac = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for (a, b, cc) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..n {
                                s += c[ci(l, a, b)] * c[ci(m, l, cc)];
                            }
                            for x in 0..d {
                                s -= self.sigma * f[x * n + cc] * dc[x][ci(m, a, b)];
                            }
                        }
                        jac.push(s);
                    }
                }
            }
        }
        let mut anc = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for b in 0..d {
                    let mut s = 0.0;
                    for a in 0..d {
                        s += f[a * n + i] * df[a][b * n + j] - f[a * n + j] * df[a][b * n + i];
                    }
                    for k in 0..n {
                        s -= self.sigma * c[ci(k, i, j)] * f[b * n + k];
                    }
                    anc.push(s);
                }
            }
        }
        (jac, anc)
    }

    /// RK4 flow of `Σ v^i #e_i`. `None` if evaluation fails.
    pub fn flow(&self, x: &[f64], v: &[f64], steps: usize, dt: f64) -> Option<Vec<f64>> {
        let field = |p: &[f64]| -> Vec<f64> {
            (0..self.d)
                .map(|a| (0..self.n).map(|i| self.f[a * self.n + i].eval(p) * v[i]).sum())
                .collect()
        };
        let axpy = |p: &[f64], k: &[f64], h: f64| -> Vec<f64> { p.iter().zip(k).map(|(a, b)| a + h * b).collect() };
        let mut p = x.to_vec();
        for _ in 0..steps {
            let k1 = field(&p);
            let k2 = field(&axpy(&p, &k1, dt / 2.0));
            let k3 = field(&axpy(&p, &k2, dt / 2.0));
            let k4 = field(&axpy(&p, &k3, dt));
            for a in 0..self.d {
                p[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            }
            if !p.iter().all(|c| c.is_finite()) {
                return None;
            }
        }
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn curvature_algebroid() -> FlatAlgebroid {
        let chart = Chart::new(&["k"], &[(-2.0, 2.0)]).unwrap();
        let k = Expr::var("k");
        FlatAlgebroid::from_entries(
            chart,
            3,
            [((2, 0, 1), k), ((1, 0, 2), Expr::num(-1.0)), ((0, 1, 2), Expr::one())],
            [],
        )
        .unwrap()
    }

    fn rank_two(f: &str) -> FlatAlgebroid {
        let chart = Chart::new(&["h"], &[(0.1, 2.0)]).unwrap();
        FlatAlgebroid::from_entries(chart, 2, [((1, 0, 1), Expr::var("h"))], [((0, 0), parse(f).unwrap())]).unwrap()
    }

    #[test]
    fn curvature_algebroid_is_certified_exactly() {
        let cert = curvature_algebroid().certify(&ZeroOptions::default()).unwrap();
        assert_eq!(cert.jacobi.verdict, Verdict::Zero);
        assert_eq!(cert.anchor.verdict, Verdict::Zero);
    }

    #[test]
    fn non_lie_constants_fail() {
        let chart = Chart::point();
        let alg = FlatAlgebroid::from_entries(chart, 3, [((0, 0, 1), Expr::one()), ((1, 1, 2), Expr::one())], [])
            .unwrap();
        let cert = alg.certify(&ZeroOptions::default()).unwrap();
        assert_eq!(cert.jacobi.verdict, Verdict::NonZero);
    }

    #[test]
    fn antisymmetrizes_with_warning() {
        let chart = Chart::point();
        let mut c = vec![Expr::zero(); 8];
        c[1] = Expr::num(2.0); // C^1_{1,2}
        let alg = FlatAlgebroid::new(chart, 2, c, vec![]).unwrap();
        assert_eq!(alg.warnings().len(), 1);
        assert_eq!(alg.c(0, 0, 1).as_num(), Some(1.0));
        assert_eq!(alg.c(0, 1, 0).as_num(), Some(-1.0));
    }

    #[test]
    fn isotropy_and_orbits_of_rank_two_example() {
        let alg = rank_two("-h^2");
        assert!(alg.certify(&ZeroOptions::default()).unwrap().passed());
        let iso = alg.isotropy_at(&[1.0]).unwrap();
        assert_eq!(iso.dim(), 1);
        assert!(iso.basis[0][0].abs() < 1e-12);
        assert_eq!(iso.kind, AlgebraType::Abelian(1));
        assert_eq!(alg.orbit_rank_at(&[1.0]).unwrap(), 1);
    }

    #[test]
    fn isotropy_of_curvature_fibers() {
        let alg = curvature_algebroid();
        assert_eq!(alg.isotropy_at(&[1.0]).unwrap().kind, AlgebraType::So3);
        assert_eq!(alg.isotropy_at(&[0.0]).unwrap().kind, AlgebraType::Se2);
        assert_eq!(alg.isotropy_at(&[-1.0]).unwrap().kind, AlgebraType::Sl2);
        assert_eq!(alg.orbit_rank_at(&[0.3]).unwrap(), 0);
    }

    #[test]
    fn orbit_search() {
        let alg = rank_two("-h^2");
        match alg.same_orbit(&[1.0], &[0.5], DEFAULT_FLOW_BUDGET).unwrap() {
            OrbitVerdict::Yes { endpoint, .. } => assert!((endpoint[0] - 0.5).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        let curv = curvature_algebroid();
        assert!(matches!(curv.same_orbit(&[1.0], &[2.0], 1000).unwrap(), OrbitVerdict::No { .. }));
        assert!(matches!(
            curv.same_orbit(&[1.0], &[1.0], 1000).unwrap(),
            OrbitVerdict::Yes { ref path, .. } if path.is_empty()
        ));
    }

    #[test]
    fn numeric_and_symbolic_routes_agree() {
        let chart = Chart::new(&["h"], &[(0.1, 2.0)]).unwrap();
        // θ¹=dx, θ²=dy−y dx, h=y: C²₁₂=1, F=(h,1)
        let alg = FlatAlgebroid::from_entries(
            chart,
            2,
            [((1, 0, 1), Expr::one())],
            [((0, 0), Expr::var("h")), ((0, 1), Expr::one())],
        )
        .unwrap();
        let pts = vec![vec![0.3], vec![1.7]];
        assert!(alg.certify(&ZeroOptions::default()).unwrap().passed());
        assert!(alg.numeric_certify(&pts, 1e-12).unwrap().passed());
        let lit = alg.with_convention(SignConvention::Literal);
        assert!(!lit.certify(&ZeroOptions::default()).unwrap().passed());
        let num = lit.numeric_certify(&pts, 1e-12).unwrap();
        assert!(!num.passed());
        assert!((num.anchor.max_abs - 2.0).abs() < 1e-12);
    }
}
