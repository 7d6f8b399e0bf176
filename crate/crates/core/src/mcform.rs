//! Algebroid-valued 1-forms, connections on the trivial bundle, torsion,
//! the covariant exterior derivative and the generalized Maurer-Cartan
//! residual.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebroid::FlatAlgebroid;
use crate::error::{Error, Result};
use crate::symexpr::{differentiate, is_identically_zero, normalize, Chart, Expr, ZeroOptions};
use crate::verdict::ResidualReport;

/// `∇_{∂/∂x^a} e_j = Σ_k Γ^k_{aj} e_k` over the base of an algebroid.
#[derive(Debug, Clone)]
pub struct Connection {
    n: usize,
    d: usize,
    // gamma[(k * d + a) * n + j] = Γ^k_{aj}
    gamma: Vec<Expr>,
}

impl Connection {
    /// The canonical flat connection `∇e_i = 0`.
    pub fn flat(alg: &FlatAlgebroid) -> Connection {
        Connection {
            n: alg.n(),
            d: alg.d(),
            gamma: vec![Expr::zero(); alg.n() * alg.n() * alg.d()],
        }
    }

    /// Entries `((k, a, j), Γ^k_{aj})`; omitted entries are zero.
    pub fn from_entries(
        alg: &FlatAlgebroid,
        entries: impl IntoIterator<Item = ((usize, usize, usize), Expr)>,
    ) -> Result<Connection> {
        let mut c = Connection::flat(alg);
        for ((k, a, j), e) in entries {
            if k >= c.n || a >= c.d || j >= c.n {
                return Err(Error::Dimension(format!("bad connection index ({k},{a},{j})")));
            }
            if let Some(v) = e.variables().into_iter().find(|v| alg.chart().index_of(v).is_none()) {
                return Err(Error::UndeclaredVariable(v));
            }
            c.gamma[(k * c.d + a) * c.n + j] = e;
        }
        Ok(c)
    }

    pub fn gamma(&self, k: usize, a: usize, j: usize) -> &Expr {
        &self.gamma[(k * self.d + a) * self.n + j]
    }

    fn check(&self, alg: &FlatAlgebroid) -> Result<()> {
        if self.n != alg.n() || self.d != alg.d() {
            return Err(Error::Dimension("connection does not match the algebroid".into()));
        }
        Ok(())
    }
}

/// A bundle map `TM → A` covering `h: M → X`, with
/// `η(∂/∂y^μ) = Σ_i η^i_μ e_i`.
#[derive(Debug, Clone)]
pub struct AValuedOneForm {
    chart: Chart,
    h: Vec<Expr>,
    // eta[i * m + mu] = η^i_μ
    eta: Vec<Expr>,
    n: usize,
}

impl AValuedOneForm {
    /// `eta[i][μ] = η^i_μ`.
    pub fn new(chart: Chart, h: Vec<Expr>, eta: Vec<Vec<Expr>>) -> Result<AValuedOneForm> {
        let m = chart.dim();
        if eta.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("each η^i needs {m} components")));
        }
        for e in h.iter().chain(eta.iter().flatten()) {
            if let Some(v) = e.variables().into_iter().find(|v| chart.index_of(v).is_none()) {
                return Err(Error::UndeclaredVariable(v));
            }
        }
        let n = eta.len();
        Ok(AValuedOneForm {
            chart,
            h,
            eta: eta.into_iter().flatten().collect(),
            n,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn h(&self) -> &[Expr] {
        &self.h
    }

    /// Rank of the target bundle.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the source manifold.
    pub fn m(&self) -> usize {
        self.chart.dim()
    }

    pub fn eta(&self, i: usize, mu: usize) -> &Expr {
        &self.eta[i * self.m() + mu]
    }

    pub fn with_eta(&self, i: usize, mu: usize, e: Expr) -> AValuedOneForm {
        let mut out = self.clone();
        let m = self.m();
        out.eta[i * m + mu] = e;
        out
    }

    pub fn with_h(&self, a: usize, e: Expr) -> AValuedOneForm {
        let mut out = self.clone();
        out.h[a] = e;
        out
    }

    fn check(&self, alg: &FlatAlgebroid) -> Result<()> {
        if self.n != alg.n() || self.h.len() != alg.d() {
            return Err(Error::Dimension(format!(
                "form into rank {} over {} coordinates, algebroid has rank {} over {}",
                self.n,
                self.h.len(),
                alg.n(),
                alg.d()
            )));
        }
        Ok(())
    }

    fn pullback(&self, alg: &FlatAlgebroid) -> BTreeMap<String, Expr> {
        alg.chart().coords().iter().cloned().zip(self.h.iter().cloned()).collect()
    }
}

/// `R^a_μ = ∂h^a/∂y^μ − Σ_i F^a_i(h) η^i_μ`, as `((a, μ), expr)`.
pub fn anchor_compatibility_table(eta: &AValuedOneForm, alg: &FlatAlgebroid) -> Result<Vec<((usize, usize), Expr)>> {
    eta.check(alg)?;
    let sub = eta.pullback(alg);
    let ys = eta.chart.coords();
    let mut out = Vec::new();
    for a in 0..alg.d() {
        for (mu, y) in ys.iter().enumerate() {
            let mut terms = vec![differentiate(&eta.h[a], y)];
            for i in 0..alg.n() {
                terms.push(-(alg.f(a, i).substitute(&sub) * eta.eta(i, mu).clone()));
            }
            out.push(((a, mu), Expr::sum(terms)));
        }
    }
    Ok(out)
}

pub fn anchor_compatibility_residual(
    eta: &AValuedOneForm,
    alg: &FlatAlgebroid,
    opts: &ZeroOptions,
) -> Result<ResidualReport> {
    let mut report = ResidualReport::empty();
    for ((a, mu), e) in anchor_compatibility_table(eta, alg)? {
        let t = is_identically_zero(&e, &eta.chart, opts)?;
        report.record(format!("R^{}_{}", a + 1, mu + 1), &t);
    }
    Ok(report)
}

/// `T^k_ij = Σ_a (F^a_i Γ^k_aj − F^a_j Γ^k_ai) − σ C^k_ij`, the torsion of
/// `∇` on constant sections for the bracket `[e_i, e_j] = σ C^k_ij e_k`.
/// Flattened as `(k * n + i) * n + j`.
pub fn torsion(alg: &FlatAlgebroid, conn: &Connection) -> Result<Vec<Expr>> {
    conn.check(alg)?;
    let n = alg.n();
    let sigma = alg.convention().bracket_sign();
    let mut t = vec![Expr::zero(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut terms = Vec::new();
                for a in 0..alg.d() {
                    terms.push(alg.f(a, i) * conn.gamma(k, a, j));
                    terms.push(-(alg.f(a, j) * conn.gamma(k, a, i)));
                }
                terms.push(alg.c(k, i, j).scale(-sigma));
                t[(k * n + i) * n + j] = normalize(&Expr::sum(terms));
            }
        }
    }
    Ok(t)
}

/// `(d_∇η)^k_{μν}` for the pullback of `∇` along `h`, flattened as
/// `(k * m + μ) * m + ν`.
pub fn covariant_exterior_derivative(
    eta: &AValuedOneForm,
    alg: &FlatAlgebroid,
    conn: &Connection,
) -> Result<Vec<Expr>> {
    eta.check(alg)?;
    conn.check(alg)?;
    let (n, m, d) = (alg.n(), eta.m(), alg.d());
    let sub = eta.pullback(alg);
    let ys = eta.chart.coords();
    let dh: Vec<Vec<Expr>> = (0..d).map(|a| ys.iter().map(|y| differentiate(&eta.h[a], y)).collect()).collect();
    let gamma_h: Vec<Expr> = conn.gamma.iter().map(|g| g.substitute(&sub)).collect();
    let g = |k: usize, a: usize, j: usize| &gamma_h[(k * d + a) * n + j];
    let mut out = vec![Expr::zero(); n * m * m];
    for k in 0..n {
        for mu in 0..m {
            for nu in (mu + 1)..m {
                let mut terms = vec![
                    differentiate(eta.eta(k, nu), &ys[mu]),
                    -differentiate(eta.eta(k, mu), &ys[nu]),
                ];
                for a in 0..d {
                    for j in 0..n {
                        if g(k, a, j).is_zero() {
                            continue;
                        }
                        terms.push(&dh[a][mu] * &(g(k, a, j) * eta.eta(j, nu)));
                        terms.push(-(&dh[a][nu] * &(g(k, a, j) * eta.eta(j, mu))));
                    }
                }
                let v = Expr::sum(terms);
                out[(k * m + nu) * m + mu] = -v.clone();
                out[(k * m + mu) * m + nu] = v;
            }
        }
    }
    Ok(out)
}

/// `d_∇η − ½[η,η]_∇`, i.e. `(d_∇η)^k_{μν} − Σ_ij T^k_ij(h) η^i_μ η^j_ν`,
/// for `μ < ν`, as `((k, μ, ν), expr)`.
pub fn mc_table(eta: &AValuedOneForm, alg: &FlatAlgebroid, conn: &Connection) -> Result<Vec<((usize, usize, usize), Expr)>> {
    let (n, m) = (alg.n(), eta.m());
    let dn = covariant_exterior_derivative(eta, alg, conn)?;
    let sub = eta.pullback(alg);
    let t: Vec<Expr> = torsion(alg, conn)?.iter().map(|e| e.substitute(&sub)).collect();
    let mut out = Vec::new();
    for k in 0..n {
        for mu in 0..m {
            for nu in (mu + 1)..m {
                let mut terms = vec![dn[(k * m + mu) * m + nu].clone()];
                for i in 0..n {
                    for j in 0..n {
                        let tk = &t[(k * n + i) * n + j];
                        if tk.is_zero() {
                            continue;
                        }
                        terms.push(-(tk * &(eta.eta(i, mu) * eta.eta(j, nu))));
                    }
                }
                out.push(((k, mu, nu), Expr::sum(terms)));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub residual: ResidualReport,
    pub anchor: ResidualReport,
    /// Set when anchor compatibility fails: the residual is then only
    /// advisory.
    pub advisory: bool,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.residual.passed() && self.anchor.passed()
    }
}

pub fn mc_residual(
    eta: &AValuedOneForm,
    alg: &FlatAlgebroid,
    conn: &Connection,
    opts: &ZeroOptions,
) -> Result<McReport> {
    let anchor = anchor_compatibility_residual(eta, alg, opts)?;
    let mut residual = ResidualReport::empty();
    for ((k, mu, nu), e) in mc_table(eta, alg, conn)? {
        let t = is_identically_zero(&e, &eta.chart, opts)?;
        residual.record(format!("MC^{}_{{{},{}}}", k + 1, mu + 1, nu + 1), &t);
    }
    let advisory = !anchor.passed();
    Ok(McReport {
        residual,
        anchor,
        advisory,
    })
}
