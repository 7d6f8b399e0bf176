//! Realization data for G-structures with vanishing first prolongation:
//! the algebroid on `X × (Rⁿ ⊕ g)`, its inner g-action, and residuals of
//! the structure equations for candidate pairs `(ω, φ)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebroid::{FlatAlgebroid, SignConvention};
use crate::coframe::Coframe;
use crate::error::{Error, Result};
use crate::liealg::{first_prolongation, reduce_structure_function, AltMap, MatrixLieAlgebra};
use crate::symexpr::{differentiate, is_identically_zero, normalize, Chart, Expr, ZeroOptions};
use crate::verdict::ResidualReport;

/// Which slot order the `S` term of the `dφ` equation contracts against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SOrder {
    /// `S(h) ∘ ω∧φ`.
    #[default]
    OmegaPhi,
    /// `S(h) ∘ φ∧ω`, which flips the sign of `S`.
    PhiOmega,
}

impl SOrder {
    fn sign(self) -> f64 {
        match self {
            SOrder::OmegaPhi => 1.0,
            SOrder::PhiOmega => -1.0,
        }
    }

    pub fn from_name(s: &str) -> Option<SOrder> {
        match s {
            "omega-phi" | "omega_phi" => Some(SOrder::OmegaPhi),
            "phi-omega" | "phi_omega" => Some(SOrder::PhiOmega),
            _ => None,
        }
    }
}

/// `(c, b, S, Θ, Φ)` over a chart `X`, for `g ⊂ gl(n)` with `g⁽¹⁾ = 0`.
#[derive(Debug, Clone)]
pub struct GRealizationData {
    g: MatrixLieAlgebra,
    chart: Chart,
    // c[(k * n + i) * n + j]
    c: Vec<Expr>,
    // b[(γ * n + i) * n + j]
    b: Vec<Expr>,
    // s[(γ * n + j) * m + α] = S^γ_{jα}
    s: Vec<Expr>,
    // theta[a * n + i]
    theta: Vec<Expr>,
    // phi[a * m + α]
    phi: Vec<Expr>,
    pub s_order: SOrder,
}

/// Entry lists for [`GRealizationData::new`], 0-based. `c` and `b` entries
/// are given for `i < j` only.
#[derive(Debug, Clone, Default)]
pub struct GTables {
    pub c: Vec<((usize, usize, usize), Expr)>,
    pub b: Vec<((usize, usize, usize), Expr)>,
    /// `((γ, j, α), S^γ_{jα})`.
    pub s: Vec<((usize, usize, usize), Expr)>,
    /// `((a, i), Θ^a_i)`.
    pub theta: Vec<((usize, usize), Expr)>,
    /// `((a, α), Φ^a_α)`.
    pub phi: Vec<((usize, usize), Expr)>,
}

impl GRealizationData {
    pub fn new(g: MatrixLieAlgebra, chart: Chart, tables: GTables) -> Result<GRealizationData> {
        let prolonged = first_prolongation(&g).dim();
        if prolonged != 0 {
            return Err(Error::ProlongationNonzero(prolonged));
        }
        let (n, m, d) = (g.n(), g.dim(), chart.dim());
        let bad = |what: &str| Error::Dimension(format!("index out of range in {what}"));
        let mut c = vec![Expr::zero(); n * n * n];
        for ((k, i, j), e) in tables.c {
            if k >= n || i >= j || j >= n {
                return Err(bad("c"));
            }
            c[(k * n + j) * n + i] = -e.clone();
            c[(k * n + i) * n + j] = e;
        }
        let mut b = vec![Expr::zero(); m * n * n];
        for ((gm, i, j), e) in tables.b {
            if gm >= m || i >= j || j >= n {
                return Err(bad("b"));
            }
            b[(gm * n + j) * n + i] = -e.clone();
            b[(gm * n + i) * n + j] = e;
        }
        let mut s = vec![Expr::zero(); m * n * m];
        for ((gm, j, al), e) in tables.s {
            if gm >= m || j >= n || al >= m {
                return Err(bad("S"));
            }
            s[(gm * n + j) * m + al] = e;
        }
        let mut theta = vec![Expr::zero(); d * n];
        for ((a, i), e) in tables.theta {
            if a >= d || i >= n {
                return Err(bad("Theta"));
            }
            theta[a * n + i] = e;
        }
        let mut phi = vec![Expr::zero(); d * m];
        for ((a, al), e) in tables.phi {
            if a >= d || al >= m {
                return Err(bad("Phi"));
            }
            phi[a * m + al] = e;
        }
        for e in c.iter().chain(&b).chain(&s).chain(&theta).chain(&phi) {
            if let Some(v) = e.variables().into_iter().find(|v| chart.index_of(v).is_none()) {
                return Err(Error::UndeclaredVariable(v));
            }
        }
        Ok(GRealizationData {
            g,
            chart,
            c,
            b,
            s,
            theta,
            phi,
            s_order: SOrder::default(),
        })
    }

    pub fn with_s_order(mut self, order: SOrder) -> GRealizationData {
        self.s_order = order;
        self
    }

    pub fn g(&self) -> &MatrixLieAlgebra {
        &self.g
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn m(&self) -> usize {
        self.g.dim()
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.c[(k * self.n() + i) * self.n() + j]
    }

    pub fn b(&self, gm: usize, i: usize, j: usize) -> &Expr {
        &self.b[(gm * self.n() + i) * self.n() + j]
    }

    pub fn s(&self, gm: usize, j: usize, al: usize) -> &Expr {
        &self.s[(gm * self.n() + j) * self.m() + al]
    }

    pub fn theta(&self, a: usize, i: usize) -> &Expr {
        &self.theta[a * self.n() + i]
    }

    pub fn phi(&self, a: usize, al: usize) -> &Expr {
        &self.phi[a * self.m() + al]
    }
}

fn num(x: f64) -> Expr {
    Expr::num(x)
}

/// The algebroid on `X × (Rⁿ ⊕ g)` with fiber basis `e_1..e_n` followed by
/// the basis of `g`. Its table is the bracket on constant sections as
/// written for the realization problem; with the default convention the
/// realized bracket is its negative, matching the structure equations.
pub fn build_gstructure_algebroid(data: &GRealizationData) -> Result<FlatAlgebroid> {
    let (n, m) = (data.n(), data.m());
    let g = &data.g;
    let sc = g.structure_constants();
    let s_sign = data.s_order.sign();
    let mut c_entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                c_entries.push(((k, i, j), data.c(k, i, j).clone()));
            }
            for gm in 0..m {
                c_entries.push(((n + gm, i, j), data.b(gm, i, j).clone()));
            }
        }
    }
    for j in 0..n {
        for be in 0..m {
            // [(e_j,0),(0,E_β)] = (E_β e_j, S(e_j ⊗ E_β))
            for k in 0..n {
                let v = g.basis()[be][(k, j)];
                if v != 0.0 {
                    c_entries.push(((k, j, n + be), num(v)));
                }
            }
            for gm in 0..m {
                c_entries.push(((n + gm, j, n + be), data.s(gm, j, be).scale(s_sign)));
            }
        }
    }
    for al in 0..m {
        for be in (al + 1)..m {
            for gm in 0..m {
                let v = sc.get(al, be, gm);
                if v != 0.0 {
                    c_entries.push(((n + gm, n + al, n + be), num(-v)));
                }
            }
        }
    }
    let d = data.chart.dim();
    let mut f_entries = Vec::new();
    for a in 0..d {
        for i in 0..n {
            f_entries.push(((a, i), data.theta(a, i).clone()));
        }
        for al in 0..m {
            f_entries.push(((a, n + al), data.phi(a, al).clone()));
        }
    }
    let c_entries: Vec<_> = c_entries.into_iter().filter(|(_, e)| !e.is_zero()).collect();
    FlatAlgebroid::from_entries(data.chart.clone(), n + m, c_entries, f_entries)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomomorphismReport {
    pub convention: SignConvention,
    pub residual: ResidualReport,
}

/// Residual of `[(0,α),(0,β)]_A − (0,[α,β]_g)` over basis pairs, for the
/// algebroid's sign convention.
pub fn constant_section_homomorphism_residual(
    alg: &FlatAlgebroid,
    g: &MatrixLieAlgebra,
    opts: &ZeroOptions,
) -> Result<HomomorphismReport> {
    let (m, nm) = (g.dim(), alg.n());
    if nm < m {
        return Err(Error::Dimension("algebroid rank smaller than dim g".into()));
    }
    let n = nm - m;
    let sigma = alg.convention().bracket_sign();
    let sc = g.structure_constants();
    let mut residual = ResidualReport::empty();
    for al in 0..m {
        for be in (al + 1)..m {
            for p in 0..nm {
                let target = if p >= n { sc.get(al, be, p - n) } else { 0.0 };
                let e = alg.c(p, n + al, n + be).scale(sigma) - num(target);
                let t = is_identically_zero(&e, alg.chart(), opts)?;
                residual.record(format!("[E{},E{}]^{}", al + 1, be + 1, p + 1), &t);
            }
        }
    }
    Ok(HomomorphismReport {
        convention: alg.convention(),
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerAction {
    /// `derivation[q][p]`: component `q` of `ρ(α)(e_p)`.
    pub derivation: Vec<Vec<Expr>>,
    /// Components of `#(0,α) = Φ(x)α` on `X`.
    pub field: Vec<Expr>,
}

/// `ρ(α)(e_p) = [(0,α), e_p]_A` for `α = Σ alpha[a] E_a`.
pub fn inner_action(alg: &FlatAlgebroid, g: &MatrixLieAlgebra, alpha: &[f64]) -> Result<InnerAction> {
    let (m, nm) = (g.dim(), alg.n());
    if alpha.len() != m || nm < m {
        return Err(Error::Dimension("element does not match g".into()));
    }
    let n = nm - m;
    let sigma = alg.convention().bracket_sign();
    let derivation = (0..nm)
        .map(|q| {
            (0..nm)
                .map(|p| {
                    normalize(&Expr::sum(
                        (0..m).filter(|&a| alpha[a] != 0.0).map(|a| alg.c(q, n + a, p).scale(sigma * alpha[a])),
                    ))
                })
                .collect()
        })
        .collect();
    let field = (0..alg.d())
        .map(|x| normalize(&Expr::sum((0..m).filter(|&a| alpha[a] != 0.0).map(|a| alg.f(x, n + a).scale(alpha[a])))))
        .collect();
    Ok(InnerAction { derivation, field })
}

/// A candidate `(B, ω, φ, h)` for the realization problem.
#[derive(Debug, Clone)]
pub struct GRealizationCandidate {
    pub chart: Chart,
    /// `omega[k][μ]`: component of `ω^k` along `dy^μ`.
    pub omega: Vec<Vec<Expr>>,
    /// `phi[γ][μ]`: component of `φ^γ` along `dy^μ`.
    pub phi: Vec<Vec<Expr>>,
    pub h: Vec<Expr>,
}

impl GRealizationCandidate {
    /// The combined coframe `(ω, φ)`; fails if it is not invertible.
    pub fn coframe(&self) -> Result<Coframe> {
        let rows: Vec<Vec<Expr>> = self.omega.iter().chain(&self.phi).cloned().collect();
        Coframe::new(self.chart.clone(), rows)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GRealizationReport {
    pub d_omega: ResidualReport,
    pub d_phi: ResidualReport,
    pub dh: ResidualReport,
}

impl GRealizationReport {
    pub fn passed(&self) -> bool {
        self.d_omega.passed() && self.d_phi.passed() && self.dh.passed()
    }
}

/// `(α∧β)_{μν} = α_μ β_ν − α_ν β_μ`.
fn wedge(a: &[Expr], b: &[Expr], mu: usize, nu: usize) -> Expr {
    &a[mu] * &b[nu] - &a[nu] * &b[mu]
}

/// Residuals of the three structure equations, in coordinate components.
pub fn verify_g_realization(
    cand: &GRealizationCandidate,
    data: &GRealizationData,
    opts: &ZeroOptions,
) -> Result<GRealizationReport> {
    let (n, m) = (data.n(), data.m());
    if cand.omega.len() != n || cand.phi.len() != m || cand.h.len() != data.chart.dim() {
        return Err(Error::Dimension("candidate does not match the realization data".into()));
    }
    let dim = cand.chart.dim();
    if cand.omega.iter().chain(&cand.phi).any(|r| r.len() != dim) {
        return Err(Error::Dimension(format!("forms on B need {dim} components")));
    }
    cand.coframe()?;
    let ys = cand.chart.coords();
    let sub: BTreeMap<String, Expr> = data.chart.coords().iter().cloned().zip(cand.h.iter().cloned()).collect();
    let at_h = |e: &Expr| e.substitute(&sub);
    let ext = |form: &[Expr], mu: usize, nu: usize| differentiate(&form[nu], &ys[mu]) - differentiate(&form[mu], &ys[nu]);
    let g = &data.g;
    let sc = g.structure_constants();
    let s_sign = data.s_order.sign();
    let (om, ph) = (&cand.omega, &cand.phi);
    let check = |e: Expr, label: String, report: &mut ResidualReport| -> Result<()> {
        let t = is_identically_zero(&e, &cand.chart, opts)?;
        report.record(label, &t);
        Ok(())
    };

    let mut d_omega = ResidualReport::empty();
    let mut d_phi = ResidualReport::empty();
    for mu in 0..dim {
        for nu in (mu + 1)..dim {
            for k in 0..n {
                // dω = c(h) ω∧ω − φ∧ω
                let mut terms = vec![ext(&om[k], mu, nu)];
                for i in 0..n {
                    for j in (i + 1)..n {
                        if !data.c(k, i, j).is_zero() {
                            terms.push(-(at_h(data.c(k, i, j)) * wedge(&om[i], &om[j], mu, nu)));
                        }
                    }
                }
                for al in 0..m {
                    for j in 0..n {
                        let v = g.basis()[al][(k, j)];
                        if v != 0.0 {
                            terms.push(wedge(&ph[al], &om[j], mu, nu).scale(v));
                        }
                    }
                }
                check(Expr::sum(terms), format!("dω^{}_{{{},{}}}", k + 1, mu + 1, nu + 1), &mut d_omega)?;
            }
            for gm in 0..m {
                // dφ = b(h) ω∧ω + S(h) ω∧φ − φ∧φ
                let mut terms = vec![ext(&ph[gm], mu, nu)];
                for i in 0..n {
                    for j in (i + 1)..n {
                        if !data.b(gm, i, j).is_zero() {
                            terms.push(-(at_h(data.b(gm, i, j)) * wedge(&om[i], &om[j], mu, nu)));
                        }
                    }
                }
                for j in 0..n {
                    for al in 0..m {
                        if !data.s(gm, j, al).is_zero() {
                            terms.push(-(at_h(data.s(gm, j, al)).scale(s_sign) * wedge(&om[j], &ph[al], mu, nu)));
                        }
                    }
                }
                for al in 0..m {
                    for be in (al + 1)..m {
                        let v = sc.get(al, be, gm);
                        if v != 0.0 {
                            terms.push(wedge(&ph[al], &ph[be], mu, nu).scale(v));
                        }
                    }
                }
                check(Expr::sum(terms), format!("dφ^{}_{{{},{}}}", gm + 1, mu + 1, nu + 1), &mut d_phi)?;
            }
        }
    }
    let mut dh = ResidualReport::empty();
    for (a, ha) in cand.h.iter().enumerate() {
        for (mu, y) in ys.iter().enumerate() {
            let mut terms = vec![differentiate(ha, y)];
            for i in 0..n {
                if !data.theta(a, i).is_zero() {
                    terms.push(-(at_h(data.theta(a, i)) * om[i][mu].clone()));
                }
            }
            for al in 0..m {
                if !data.phi(a, al).is_zero() {
                    terms.push(-(at_h(data.phi(a, al)) * ph[al][mu].clone()));
                }
            }
            check(Expr::sum(terms), format!("dh^{}_{}", a + 1, mu + 1), &mut dh)?;
        }
    }
    Ok(GRealizationReport { d_omega, d_phi, dh })
}

/// Representative of `[c]` in `hom(Λ²Rⁿ,Rⁿ) / A(hom(Rⁿ, g))`.
pub fn first_structure_function_at(c_value: &AltMap, g: &MatrixLieAlgebra) -> AltMap {
    reduce_structure_function(c_value, g)
}

/// Structure functions of a coframe at a point, as an element of
/// `hom(Λ²Rⁿ,Rⁿ)`.
pub fn structure_function_value(theta: &Coframe, x: &[f64]) -> Result<AltMap> {
    let n = theta.n();
    let c = theta.structure_functions();
    let coords = theta.chart().coords();
    let mut out = AltMap::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                out.set(k, i, j, c[(k * n + i) * n + j].eval(coords, x)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{make_algebra, presets};
    use crate::symexpr::parse;
    use crate::verdict::Verdict;
    use nalgebra::DMatrix;

    fn o2() -> MatrixLieAlgebra {
        make_algebra(vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])]).unwrap()
    }

    fn curvature_data() -> GRealizationData {
        let chart = Chart::new(&["k"], &[(-2.0, 2.0)]).unwrap();
        GRealizationData::new(
            o2(),
            chart,
            GTables {
                b: vec![((0, 0, 1), Expr::var("k"))],
                ..GTables::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn rejects_infinite_type() {
        let chart = Chart::point();
        let r = GRealizationData::new(presets::gl(2), chart, GTables::default());
        assert_eq!(r.unwrap_err(), Error::ProlongationNonzero(6));
    }

    #[test]
    fn curvature_algebroid_from_g_data() {
        let alg = build_gstructure_algebroid(&curvature_data()).unwrap();
        assert_eq!(alg.c(2, 0, 1).to_string(), "k");
        assert_eq!(alg.c(1, 0, 2).as_num(), Some(-1.0));
        assert_eq!(alg.c(0, 1, 2).as_num(), Some(1.0));
        assert!(alg.certify(&ZeroOptions::default()).unwrap().passed());
    }

    #[test]
    fn rotation_acts_by_its_matrix() {
        let alg = build_gstructure_algebroid(&curvature_data()).unwrap();
        let rho = inner_action(&alg, &o2(), &[1.0]).unwrap();
        // J e1 = -e2, J e2 = e1
        assert_eq!(rho.derivation[1][0].as_num(), Some(-1.0));
        assert_eq!(rho.derivation[0][1].as_num(), Some(1.0));
        assert!(rho.derivation[2].iter().all(Expr::is_zero));
        assert!((0..3).all(|q| rho.derivation[q][2].is_zero()));
    }

    #[test]
    fn euclidean_frame_bundle_realizes_flat_data() {
        let chart = Chart::new(&["x", "y", "t"], &[(-1.0, 1.0), (-1.0, 1.0), (-3.0, 3.0)]).unwrap();
        let p = |s: &str| parse(s).unwrap();
        let mut cand = GRealizationCandidate {
            chart,
            omega: vec![vec![p("cos(t)"), p("sin(t)"), p("0")], vec![p("-sin(t)"), p("cos(t)"), p("0")]],
            phi: vec![vec![p("0"), p("0"), p("-1")]],
            h: vec![p("0")],
        };
        let rep = verify_g_realization(&cand, &curvature_data(), &ZeroOptions::default()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        cand.phi[0][2] = p("1");
        let rep = verify_g_realization(&cand, &curvature_data(), &ZeroOptions::default()).unwrap();
        assert_eq!(rep.d_omega.verdict, Verdict::NonZero);
    }

    #[test]
    fn homomorphism_sign_depends_on_convention() {
        let g = presets::u(2);
        let chart = Chart::point();
        let data = GRealizationData::new(g.clone(), chart, GTables::default()).unwrap();
        let alg = build_gstructure_algebroid(&data).unwrap();
        let rep = constant_section_homomorphism_residual(&alg, &g, &ZeroOptions::default()).unwrap();
        assert_eq!(rep.residual.verdict, Verdict::Zero);
        let lit = alg.with_convention(SignConvention::Literal);
        let rep = constant_section_homomorphism_residual(&lit, &g, &ZeroOptions::default()).unwrap();
        assert_eq!(rep.residual.verdict, Verdict::NonZero);
    }

    #[test]
    fn structure_function_reduction() {
        let chart = Chart::new(&["x", "y"], &[(0.5, 2.0), (-1.0, 1.0)]).unwrap();
        let th = Coframe::parse(chart, &[&["1", "0"], &["0", "x"]]).unwrap();
        let c = structure_function_value(&th, &[1.0, 0.0]).unwrap();
        assert!(first_structure_function_at(&c, &presets::o(2)).max_abs() < 1e-12);
        let zero = presets::zero(2);
        assert_eq!(first_structure_function_at(&c, &zero), c);
    }
}
