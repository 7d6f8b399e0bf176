//! Built-in examples: the constant-curvature and Bochner-Kähler classifying
//! algebroids, their G-structure data, and a few worked coframes.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebroid::{FlatAlgebroid, SignConvention};
use crate::coframe::Coframe;
use crate::error::Result;
use crate::gstruct::{GRealizationCandidate, GRealizationData, GTables};
use crate::liealg::presets;
use crate::symexpr::{normalize, parse, Chart, Expr};

/// Range of the curvature coordinate `k`.
pub const CURVATURE_RANGE: (f64, f64) = (-2.0, 2.0);

fn ex(s: &str) -> Expr {
    parse(s).expect("catalog expressions parse")
}

pub fn curvature_chart() -> Chart {
    Chart::new(&["k"], &[CURVATURE_RANGE]).expect("valid chart")
}

/// `[e₁,e₂] = k e₃`, `[e₁,e₃] = −e₂`, `[e₂,e₃] = e₁`, anchor zero, over the
/// line of curvatures.
pub fn constant_curvature() -> FlatAlgebroid {
    FlatAlgebroid::from_entries(
        curvature_chart(),
        3,
        [((2, 0, 1), ex("k")), ((1, 0, 2), ex("-1")), ((0, 1, 2), ex("1"))],
        [],
    )
    .expect("valid algebroid")
}

/// `g = o(2)` with `b = k` on `e₁∧e₂` and everything else zero.
pub fn constant_curvature_gdata() -> GRealizationData {
    let tables = GTables {
        b: vec![((0, 0, 1), ex("k"))],
        ..GTables::default()
    };
    GRealizationData::new(presets::o(2), curvature_chart(), tables).expect("o(2) has zero prolongation")
}

/// The rotated translation coframe on `R² × SO(2)` with its flat
/// connection form, mapped to `k = 0`.
pub fn euclidean_candidate() -> GRealizationCandidate {
    let chart = Chart::new(&["x", "y", "t"], &[(-1.0, 1.0), (-1.0, 1.0), (-3.0, 3.0)]).expect("valid chart");
    GRealizationCandidate {
        chart,
        omega: vec![
            vec![ex("cos(t)"), ex("sin(t)"), ex("0")],
            vec![ex("-sin(t)"), ex("cos(t)"), ex("0")],
        ],
        phi: vec![vec![ex("0"), ex("0"), ex("-1")]],
        h: vec![ex("0")],
    }
}

/// A named coframe with the base chart it lives on.
#[derive(Debug, Clone)]
pub struct WorkedCoframe {
    pub name: &'static str,
    pub coframe: Coframe,
}

fn worked(name: &'static str, bounds: &[(f64, f64)], rows: &[&[&str]]) -> WorkedCoframe {
    let chart = Chart::new(&["x", "y"], bounds).expect("valid chart");
    WorkedCoframe {
        name,
        coframe: Coframe::parse(chart, rows).expect("worked coframes are invertible"),
    }
}

/// `θ¹ = dx, θ² = x dy` on `x ∈ [0.5, 2]`.
pub fn coframe_x_dy() -> WorkedCoframe {
    worked("x-dy", &[(0.5, 2.0), (-1.0, 1.0)], &[&["1", "0"], &["0", "x"]])
}

pub fn worked_coframes() -> Vec<WorkedCoframe> {
    vec![
        coframe_x_dy(),
        worked("exp-dy", &[(-1.0, 1.0), (-1.0, 1.0)], &[&["1", "0"], &["0", "exp(x)"]]),
        worked("dy-y-dx", &[(-1.0, 1.0), (0.5, 2.0)], &[&["1", "0"], &["-y", "1"]]),
        worked("identity", &[(-1.0, 1.0), (-1.0, 1.0)], &[&["1", "0"], &["0", "1"]]),
    ]
}

#[derive(Debug, Clone, PartialEq)]
struct C {
    re: Expr,
    im: Expr,
}

impl C {
    fn real(e: Expr) -> C {
        C { re: e, im: Expr::zero() }
    }

    fn num(re: f64, im: f64) -> C {
        C {
            re: Expr::num(re),
            im: Expr::num(im),
        }
    }

    fn zero() -> C {
        C::num(0.0, 0.0)
    }

    fn conj(&self) -> C {
        C {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn scale(&self, s: f64) -> C {
        C {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }
}

impl Add for &C {
    type Output = C;
    fn add(self, o: &C) -> C {
        C {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl Sub for &C {
    type Output = C;
    fn sub(self, o: &C) -> C {
        C {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for &C {
    type Output = C;
    fn mul(self, o: &C) -> C {
        C {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &C {
    type Output = C;
    fn neg(self) -> C {
        C {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

type CMat = Vec<Vec<C>>;
type CVec = Vec<C>;

fn csum(terms: impl IntoIterator<Item = C>) -> C {
    let (re, im): (Vec<Expr>, Vec<Expr>) = terms.into_iter().map(|c| (c.re, c.im)).unzip();
    C {
        re: Expr::sum(re),
        im: Expr::sum(im),
    }
}

fn mat_zero(n: usize) -> CMat {
    vec![vec![C::zero(); n]; n]
}

fn mat_id(n: usize, s: &C) -> CMat {
    let mut m = mat_zero(n);
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = s.clone();
    }
    m
}

fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| csum((0..n).map(|l| &a[i][l] * &b[l][j]))).collect())
        .collect()
}

fn mat_vec(a: &CMat, v: &CVec) -> CVec {
    a.iter().map(|row| csum(row.iter().zip(v).map(|(x, y)| x * y))).collect()
}

fn mat_lin(terms: &[(f64, &CMat)]) -> CMat {
    let n = terms[0].1.len();
    (0..n)
        .map(|i| (0..n).map(|j| csum(terms.iter().map(|(s, m)| m[i][j].scale(*s)))).collect())
        .collect()
}

fn vec_lin(terms: &[(f64, &CVec)]) -> CVec {
    let n = terms[0].1.len();
    (0..n).map(|i| csum(terms.iter().map(|(s, v)| v[i].scale(*s)))).collect()
}

/// `u* v = Σ conj(u_k) v_k`.
fn inner(u: &CVec, v: &CVec) -> C {
    csum(u.iter().zip(v).map(|(a, b)| &a.conj() * b))
}

/// `u v*`.
fn outer(u: &CVec, v: &CVec) -> CMat {
    u.iter().map(|a| v.iter().map(|b| a * &b.conj()).collect()).collect()
}

/// Row vector `v* S` as a column of its entries.
fn row_times(v: &CVec, s: &CMat) -> CVec {
    let n = v.len();
    (0..n).map(|l| csum((0..n).map(|m| &v[m].conj() * &s[m][l]))).collect()
}

/// Coordinates on `X = Herm(n) × Cⁿ × R`: the diagonal of `s`, real and
/// imaginary parts of `s_kl` for `k < l`, then `Re t`, `Im t`, then `u`.
pub fn bochner_kahler_chart(n: usize) -> Chart {
    let mut names = Vec::new();
    for k in 0..n {
        names.push(format!("s{}{}", k + 1, k + 1));
    }
    for k in 0..n {
        for l in (k + 1)..n {
            names.push(format!("sr{}{}", k + 1, l + 1));
            names.push(format!("si{}{}", k + 1, l + 1));
        }
    }
    for k in 0..n {
        names.push(format!("tr{}", k + 1));
    }
    for k in 0..n {
        names.push(format!("ti{}", k + 1));
    }
    names.push("u".into());
    let bounds = vec![(-1.0, 1.0); names.len()];
    Chart::new(&names, &bounds).expect("valid chart")
}

struct BkPoint {
    n: usize,
    s: CMat,
    t: CVec,
    u: C,
}

impl BkPoint {
    fn new(n: usize) -> BkPoint {
        let v = |s: String| Expr::var(&s);
        let mut s = mat_zero(n);
        for k in 0..n {
            s[k][k] = C::real(v(format!("s{}{}", k + 1, k + 1)));
            for l in (k + 1)..n {
                let re = v(format!("sr{}{}", k + 1, l + 1));
                let im = v(format!("si{}{}", k + 1, l + 1));
                s[k][l] = C { re: re.clone(), im: im.clone() };
                s[l][k] = C { re, im: -im };
            }
        }
        let t = (0..n)
            .map(|k| C {
                re: v(format!("tr{}", k + 1)),
                im: v(format!("ti{}", k + 1)),
            })
            .collect();
        BkPoint {
            n,
            s,
            t,
            u: C::real(Expr::var("u")),
        }
    }

    /// Bracket of `(z₁, a₁)` and `(z₂, a₂)` in `Cⁿ ⊕ u(n)`.
    fn bracket(&self, (z1, a1): &(CVec, CMat), (z2, a2): &(CVec, CMat)) -> (CVec, CMat) {
        let n = self.n;
        let s = &self.s;
        let w = vec_lin(&[(1.0, &mat_vec(a2, z1)), (-1.0, &mat_vec(a1, z2))]);
        let comm = mat_lin(&[(1.0, &mat_mul(a1, a2)), (-1.0, &mat_mul(a2, a1))]);
        let c1 = &inner(z1, z2) - &inner(z2, z1);
        let t1 = mat_mul(&mat_id(n, &c1), s);
        let zz = mat_lin(&[(1.0, &outer(z1, z2)), (-1.0, &outer(z2, z1))]);
        let t2 = mat_mul(s, &zz);
        let r2 = row_times(z2, s);
        let r1 = row_times(z1, s);
        let t3 = mat_lin(&[(1.0, &outer_rows(z1, &r2)), (-1.0, &outer_rows(z2, &r1))]);
        let c4 = &inner(z1, &mat_vec(s, z2)) - &inner(z2, &mat_vec(s, z1));
        let t4 = mat_id(n, &c4);
        let g = mat_lin(&[(-1.0, &comm), (1.0, &t1), (-1.0, &t2), (-1.0, &t3), (1.0, &t4)]);
        (w, g)
    }

    /// Anchor components `(ds, dt, du)` of `(z, a)`.
    fn anchor(&self, (z, a): &(CVec, CMat)) -> (CMat, CVec, C) {
        let n = self.n;
        let (s, t) = (&self.s, &self.t);
        let half = (&inner(t, z) + &inner(z, t)).scale(0.5);
        let ds = mat_lin(&[
            (-1.0, &mat_mul(a, s)),
            (1.0, &mat_mul(s, a)),
            (1.0, &outer(t, z)),
            (1.0, &outer(z, t)),
            (1.0, &mat_id(n, &half)),
        ]);
        let m = mat_lin(&[(1.0, &mat_id(n, &self.u)), (1.0, &mat_mul(s, s))]);
        let dt = vec_lin(&[(-1.0, &mat_vec(a, t)), (1.0, &mat_vec(&m, z))]);
        let du = &inner(t, &mat_vec(s, z)) + &inner(z, &mat_vec(s, t));
        (ds, dt, du)
    }
}

/// `u (v_row)` where `v_row` holds the entries of a row vector.
fn outer_rows(u: &CVec, row: &CVec) -> CMat {
    u.iter().map(|a| row.iter().map(|b| a * b).collect()).collect()
}

/// Fiber basis of `Cⁿ ⊕ u(n)`: `e_k`, `i e_k`, then the `u(n)` basis.
fn bk_fiber_basis(n: usize) -> Vec<(CVec, CMat)> {
    let mut out = Vec::new();
    let zero_v = || vec![C::zero(); n];
    for im in [false, true] {
        for k in 0..n {
            let mut z = zero_v();
            z[k] = if im { C::num(0.0, 1.0) } else { C::num(1.0, 0.0) };
            out.push((z, mat_zero(n)));
        }
    }
    for (re, im) in presets::unitary_basis(n) {
        let m = (0..n)
            .map(|i| (0..n).map(|j| C::num(re[(i, j)], im[(i, j)])).collect())
            .collect();
        out.push((zero_v(), m));
    }
    out
}

fn fiber_coords(n: usize, (w, g): &(CVec, CMat)) -> Vec<Expr> {
    let mut v: Vec<Expr> = w.iter().map(|c| c.re.clone()).collect();
    v.extend(w.iter().map(|c| c.im.clone()));
    for k in 0..n {
        v.push(g[k][k].im.clone());
    }
    for k in 0..n {
        for l in (k + 1)..n {
            v.push(g[k][l].re.clone());
            v.push(g[k][l].im.clone());
        }
    }
    v.iter().map(normalize).collect()
}

fn base_coords(n: usize, (ds, dt, du): &(CMat, CVec, C)) -> Vec<Expr> {
    let mut v: Vec<Expr> = (0..n).map(|k| ds[k][k].re.clone()).collect();
    for k in 0..n {
        for l in (k + 1)..n {
            v.push(ds[k][l].re.clone());
            v.push(ds[k][l].im.clone());
        }
    }
    v.extend(dt.iter().map(|c| c.re.clone()));
    v.extend(dt.iter().map(|c| c.im.clone()));
    v.push(du.re.clone());
    v.iter().map(normalize).collect()
}

struct BkTables {
    chart: Chart,
    /// bracket[i][j] for `i < j`, fiber coordinates.
    bracket: Vec<Vec<Vec<Expr>>>,
    /// anchor[i], base coordinates.
    anchor: Vec<Vec<Expr>>,
}

fn bk_tables(n: usize) -> BkTables {
    let p = BkPoint::new(n);
    let basis = bk_fiber_basis(n);
    let nn = basis.len();
    let mut bracket = vec![vec![Vec::new(); nn]; nn];
    for i in 0..nn {
        for j in (i + 1)..nn {
            bracket[i][j] = fiber_coords(n, &p.bracket(&basis[i], &basis[j]));
        }
    }
    let anchor = basis.iter().map(|b| base_coords(n, &p.anchor(b))).collect();
    BkTables {
        chart: bochner_kahler_chart(n),
        bracket,
        anchor,
    }
}

/// The Bochner-Kähler classifying algebroid of complex dimension `n` over
/// `Herm(n) × Cⁿ × R`, with fiber `Cⁿ ⊕ u(n)` realified as in
/// [`bochner_kahler_chart`] and [`presets::u`].
pub fn bochner_kahler(n: usize) -> FlatAlgebroid {
    let tb = bk_tables(n);
    let nn = tb.anchor.len();
    let mut c = Vec::new();
    for i in 0..nn {
        for j in (i + 1)..nn {
            for (k, e) in tb.bracket[i][j].iter().enumerate() {
                if !e.is_zero() {
                    c.push(((k, i, j), e.clone()));
                }
            }
        }
    }
    let f = tb
        .anchor
        .iter()
        .enumerate()
        .flat_map(|(i, col)| col.iter().enumerate().map(move |(a, e)| ((a, i), e.clone())))
        .filter(|(_, e)| !e.is_zero());
    FlatAlgebroid::from_entries(tb.chart, nn, c, f.collect::<Vec<_>>()).expect("valid algebroid")
}

/// The same data as [`bochner_kahler`] split into `(c, b, S, Θ, Φ)` for
/// `g = u(n) ⊂ gl(2n)`.
pub fn bochner_kahler_gdata(n: usize) -> GRealizationData {
    let tb = bk_tables(n);
    let r = 2 * n;
    let m = n * n;
    let mut tables = GTables::default();
    for i in 0..r {
        for j in (i + 1)..r {
            for gm in 0..m {
                let e = &tb.bracket[i][j][r + gm];
                if !e.is_zero() {
                    tables.b.push(((gm, i, j), e.clone()));
                }
            }
        }
    }
    for (i, col) in tb.anchor.iter().enumerate() {
        for (a, e) in col.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            if i < r {
                tables.theta.push(((a, i), e.clone()));
            } else {
                tables.phi.push(((a, i - r), e.clone()));
            }
        }
    }
    GRealizationData::new(presets::u(n), tb.chart, tables).expect("u(n) has zero prolongation")
}

/// Numeric certification outcome for one convention.
#[derive(Debug, Clone, Serialize)]
pub struct ConventionTrial {
    pub convention: SignConvention,
    pub jacobi_max: f64,
    pub anchor_max: f64,
    pub passed: bool,
}

/// Certification of an algebroid under every sign convention, at seeded
/// random points of its chart.
#[derive(Debug, Clone, Serialize)]
pub struct ConventionScan {
    pub trials: Vec<ConventionTrial>,
    pub resolved: Option<SignConvention>,
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

pub fn convention_scan(alg: &FlatAlgebroid, points: usize, seed: u64, tol: f64) -> Result<ConventionScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = alg.chart().sample(&mut rng, points, &[])?;
    let mut trials = Vec::new();
    for conv in [SignConvention::StructureEquation, SignConvention::Literal] {
        let cert = alg.clone().with_convention(conv).numeric_certify(&pts, tol)?;
        trials.push(ConventionTrial {
            convention: conv,
            jacobi_max: cert.jacobi.max_abs,
            anchor_max: cert.anchor.max_abs,
            passed: cert.passed(),
        });
    }
    let resolved = trials.iter().find(|t| t.passed).map(|t| t.convention);
    Ok(ConventionScan {
        trials,
        resolved,
        points,
        seed,
        tol,
    })
}

/// Matrix of `J'` acting on `R²`, the basis of `o(2)` used throughout.
pub fn rotation_generator() -> DMatrix<f64> {
    presets::o(2).basis()[0].clone()
}
