#![allow(dead_code)]

use std::collections::BTreeMap;

use cartan::algebroid::FlatAlgebroid;
use cartan::catalog;
use cartan::symexpr::{differentiate, parse, Chart, Expr};
use rand::Rng;

pub fn ex(s: &str) -> Expr {
    parse(s).unwrap()
}

/// Random polynomial with small integer coefficients.
pub fn rand_poly<R: Rng>(rng: &mut R, vars: &[&str], degree: u32, terms: usize) -> Expr {
    let mut out = Vec::new();
    for _ in 0..terms {
        let c = rng.gen_range(-3..=3);
        if c == 0 {
            continue;
        }
        let mut t = Expr::num(c as f64);
        for v in vars {
            let p = rng.gen_range(0..=degree);
            if p > 0 {
                t = t * Expr::powi(Expr::var(v), p as i32);
            }
        }
        out.push(t);
    }
    Expr::sum(out)
}

/// Exterior forms in a basis `θ^1..θ^n`: sorted index lists to coefficients.
#[derive(Clone, Debug, Default)]
pub struct Form(pub BTreeMap<Vec<usize>, Expr>);

impl Form {
    pub fn scalar(e: Expr) -> Form {
        Form(BTreeMap::from([(Vec::new(), e)]))
    }

    pub fn basis(i: usize) -> Form {
        Form(BTreeMap::from([(vec![i], Expr::one())]))
    }

    pub fn add(&mut self, idx: Vec<usize>, e: Expr) {
        let slot = self.0.entry(idx).or_insert_with(Expr::zero);
        *slot = slot.clone() + e;
    }

    pub fn plus(mut self, other: &Form) -> Form {
        for (k, v) in &other.0 {
            self.add(k.clone(), v.clone());
        }
        self
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::default();
        for (a, x) in &self.0 {
            for (b, y) in &other.0 {
                let mut idx: Vec<usize> = a.iter().chain(b).copied().collect();
                // sign of the sorting permutation, zero on repeats
                let mut sign = 1.0;
                for i in 0..idx.len() {
                    for j in 0..idx.len() - 1 - i {
                        if idx[j] == idx[j + 1] {
                            sign = 0.0;
                        }
                        if idx[j] > idx[j + 1] {
                            idx.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                if idx.windows(2).any(|w| w[0] == w[1]) {
                    sign = 0.0;
                }
                if sign != 0.0 {
                    out.add(idx, (x.clone() * y.clone()).scale(sign));
                }
            }
        }
        out
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        self.0.get(idx).cloned().unwrap_or_else(Expr::zero)
    }
}

/// The exterior derivative on forms over a realization of `alg`, using only
/// `dθ^k = Σ_{i<j} C^k_ij θ^i∧θ^j` and `df = Σ ∂_a f F^a_i θ^i`.
pub struct Exterior<'a> {
    pub alg: &'a FlatAlgebroid,
}

impl Exterior<'_> {
    pub fn d_function(&self, f: &Expr) -> Form {
        let mut out = Form::default();
        for (a, x) in self.alg.chart().coords().iter().enumerate() {
            let df = differentiate(f, x);
            for i in 0..self.alg.n() {
                out.add(vec![i], df.clone() * self.alg.f(a, i).clone());
            }
        }
        out
    }

    pub fn d_basis(&self, k: usize) -> Form {
        let n = self.alg.n();
        let mut out = Form::default();
        for i in 0..n {
            for j in (i + 1)..n {
                out.add(vec![i, j], self.alg.c(k, i, j).clone());
            }
        }
        out
    }

    pub fn d(&self, form: &Form) -> Form {
        let mut out = Form::default();
        for (idx, coef) in &form.0 {
            // d(f θ^I) = df ∧ θ^I + f Σ_p (−1)^p θ^{i_1..} ∧ dθ^{i_p} ∧ ...
            let mut mono = Form::scalar(Expr::one());
            for &i in idx {
                mono = mono.wedge(&Form::basis(i));
            }
            out = out.plus(&self.d_function(coef).wedge(&mono));
            for p in 0..idx.len() {
                let mut term = Form::scalar(coef.clone());
                for (q, &i) in idx.iter().enumerate() {
                    let factor = if q == p { self.d_basis(i) } else { Form::basis(i) };
                    term = term.wedge(&factor);
                }
                if p % 2 == 1 {
                    term = Form(term.0.into_iter().map(|(k, v)| (k, -v)).collect());
                }
                out = out.plus(&term);
            }
        }
        out
    }
}

/// A symbolic realization `(M, θ, h)` of an algebroid.
pub struct Known {
    pub name: &'static str,
    pub alg: FlatAlgebroid,
    pub chart: Chart,
    pub theta: Vec<Vec<Expr>>,
    pub h: Vec<Expr>,
}

fn rows(r: &[&[&str]]) -> Vec<Vec<Expr>> {
    r.iter().map(|row| row.iter().map(|s| ex(s)).collect()).collect()
}

fn line_chart() -> Chart {
    Chart::new(&["h"], &[(-2.0, 2.0)]).unwrap()
}

pub fn rank2_algebroid() -> FlatAlgebroid {
    let chart = Chart::new(&["h"], &[(0.25, 4.0)]).unwrap();
    FlatAlgebroid::from_entries(chart, 2, [((1, 0, 1), ex("h"))], [((0, 0), -ex("h^2"))]).unwrap()
}

/// Realizations known in closed form.
pub fn known_realizations() -> Vec<Known> {
    let xy = |bx: (f64, f64), by: (f64, f64)| Chart::new(&["x", "y"], &[bx, by]).unwrap();
    let xyz = Chart::new(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap();
    let frame = |lo: f64| Chart::new(&["a", "b", "t"], &[(lo, 2.5), (-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let constant = |n: usize, entries: Vec<((usize, usize, usize), &str)>| {
        FlatAlgebroid::from_entries(line_chart(), n, entries.into_iter().map(|(i, s)| (i, ex(s))), []).unwrap()
    };
    vec![
        Known {
            name: "x dy",
            alg: rank2_algebroid(),
            chart: xy((0.5, 2.0), (-1.0, 1.0)).with_guard(ex("x")),
            theta: rows(&[&["1", "0"], &["0", "x"]]),
            h: vec![ex("1/x")],
        },
        Known {
            name: "affine",
            alg: constant(2, vec![((1, 0, 1), "1")]),
            chart: xy((-1.0, 1.0), (-1.0, 1.0)),
            theta: rows(&[&["1", "0"], &["-y", "1"]]),
            h: vec![ex("0.3")],
        },
        Known {
            name: "exp",
            alg: constant(2, vec![((1, 0, 1), "1")]),
            chart: xy((-1.0, 1.0), (-1.0, 1.0)),
            theta: rows(&[&["1", "0"], &["0", "exp(x)"]]),
            h: vec![ex("-0.5")],
        },
        Known {
            name: "heisenberg",
            alg: constant(3, vec![((2, 0, 1), "-1")]),
            chart: xyz.clone(),
            theta: rows(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "-x", "1"]]),
            h: vec![ex("1")],
        },
        Known {
            name: "abelian",
            alg: constant(3, vec![]),
            chart: xyz,
            theta: rows(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]),
            h: vec![ex("0")],
        },
        Known {
            name: "sphere frames",
            alg: catalog::constant_curvature(),
            chart: frame(0.5),
            theta: rows(&[
                &["cos(t)", "sin(t)*sin(a)", "0"],
                &["-sin(t)", "cos(t)*sin(a)", "0"],
                &["0", "-cos(a)", "-1"],
            ]),
            h: vec![ex("1")],
        },
        Known {
            name: "hyperbolic frames",
            alg: catalog::constant_curvature(),
            chart: frame(0.3),
            theta: rows(&[
                &["cos(t)", "sin(t)*sinh(a)", "0"],
                &["-sin(t)", "cos(t)*sinh(a)", "0"],
                &["0", "-cosh(a)", "-1"],
            ]),
            h: vec![ex("-1")],
        },
        Known {
            name: "euclidean frames",
            alg: catalog::constant_curvature(),
            chart: Chart::new(&["x", "y", "t"], &[(-1.0, 1.0); 3]).unwrap(),
            theta: rows(&[
                &["cos(t)", "sin(t)", "0"],
                &["-sin(t)", "cos(t)", "0"],
                &["0", "0", "-1"],
            ]),
            h: vec![ex("0")],
        },
    ]
}

/// Componentwise residuals of `dθ = C(h)θ∧θ` and `dh = F(h)θ`, computed
/// directly in coordinates.
pub fn structure_equation_residuals(
    alg: &FlatAlgebroid,
    chart: &Chart,
    theta: &[Vec<Expr>],
    h: &[Expr],
) -> Vec<Expr> {
    let sub: BTreeMap<String, Expr> = alg.chart().coords().iter().cloned().zip(h.iter().cloned()).collect();
    let ys = chart.coords();
    let n = alg.n();
    let m = ys.len();
    let mut out = Vec::new();
    for k in 0..n {
        for mu in 0..m {
            for nu in (mu + 1)..m {
                let mut terms = vec![
                    differentiate(&theta[k][nu], &ys[mu]),
                    -differentiate(&theta[k][mu], &ys[nu]),
                ];
                for i in 0..n {
                    for j in (i + 1)..n {
                        let w = theta[i][mu].clone() * theta[j][nu].clone() - theta[i][nu].clone() * theta[j][mu].clone();
                        terms.push(-(alg.c(k, i, j).substitute(&sub) * w));
                    }
                }
                out.push(Expr::sum(terms));
            }
        }
    }
    for (a, ha) in h.iter().enumerate() {
        for (mu, y) in ys.iter().enumerate() {
            let mut terms = vec![differentiate(ha, y)];
            for i in 0..n {
                terms.push(-(alg.f(a, i).substitute(&sub) * theta[i][mu].clone()));
            }
            out.push(Expr::sum(terms));
        }
    }
    out
}

/// Random expression over `x, y, z`, finite and smooth on `[0.5, 2]³`.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    use cartan::symexpr::Func;
    let vars = ["x", "y", "z"];
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expr::var(vars[rng.gen_range(0..3)])
        } else {
            let v: f64 = match rng.gen_range(0..3) {
                0 => rng.gen_range(-5..=5) as f64,
                1 => rng.gen_range(-40..=40) as f64 / 8.0,
                _ => rng.gen_range(-2.0..2.0),
            };
            Expr::num(v)
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => a + random_expr(rng, depth - 1),
        1 => a - random_expr(rng, depth - 1),
        2 | 3 => a * random_expr(rng, depth - 1),
        // positive denominators
        4 => a / (Expr::powi(random_expr(rng, depth - 1), 2) + Expr::num(1.0)),
        5 => Expr::powi(a, rng.gen_range(2..=3)),
        6 => -a,
        7 => {
            let f = [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh][rng.gen_range(0..4)];
            Expr::call(f, Expr::call(Func::Sin, a))
        }
        _ => {
            let pos = Expr::powi(a, 2) + Expr::num(1.0);
            let f = [Func::Exp, Func::Log, Func::Sqrt][rng.gen_range(0..3)];
            let arg = if f == Func::Exp { Expr::call(Func::Cos, pos) } else { pos };
            Expr::call(f, arg)
        }
    }
}

/// Central difference with one Richardson step.
pub fn richardson<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Ridders' extrapolated central difference, with its error estimate.
pub fn ridders<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64) -> (f64, f64) {
    const SHRINK: f64 = 1.4;
    const ROUNDS: usize = 12;
    let mut table = vec![vec![0.0; ROUNDS]; ROUNDS];
    let mut h = h0;
    table[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let (mut best, mut err) = (table[0][0], f64::INFINITY);
    for i in 1..ROUNDS {
        h /= SHRINK;
        table[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let e = (table[j][i] - table[j - 1][i]).abs().max((table[j][i] - table[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// Ridders from several starting steps, keeping the smallest error estimate.
pub fn derivative_oracle<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| ridders(&f, x, h))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, _)| d)
        .unwrap()
}

/// An `A`-valued one-form on a `z` chart with its base map.
pub struct Instance {
    pub name: String,
    pub alg: FlatAlgebroid,
    pub chart: Chart,
    pub eta: Vec<Vec<Expr>>,
    pub h: Vec<Expr>,
}

impl Instance {
    pub fn form(&self) -> cartan::mcform::AValuedOneForm {
        cartan::mcform::AValuedOneForm::new(self.chart.clone(), self.h.clone(), self.eta.clone()).unwrap()
    }

    pub fn with_eta(&self, name: String, i: usize, mu: usize, e: Expr) -> Instance {
        let mut eta = self.eta.clone();
        eta[i][mu] = e;
        Instance {
            name,
            alg: self.alg.clone(),
            chart: self.chart.clone(),
            eta,
            h: self.h.clone(),
        }
    }
}

/// Pulls `k` back along a random polynomial map from `[-1,1]^m` into the
/// middle of its chart.
pub fn pullback<R: Rng>(rng: &mut R, k: &Known, m: usize) -> Instance {
    let zs: Vec<String> = (1..=m).map(|i| format!("z{i}")).collect();
    let chart = Chart::new(&zs, &vec![(-1.0, 1.0); m]).unwrap();
    let zref: Vec<&str> = zs.iter().map(|s| s.as_str()).collect();
    let mut phi = Vec::new();
    for (mu, b) in k.chart.bounds().iter().enumerate() {
        let mut terms = Vec::new();
        let mut total = 0.0;
        for _ in 0..3 {
            let c = rng.gen_range(1..=3) as f64 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut t = Expr::num(c);
            for z in &zref {
                let p = rng.gen_range(0..=2);
                if p > 0 {
                    t = t * Expr::powi(Expr::var(z), p);
                }
            }
            total += c.abs();
            terms.push(t);
        }
        // keep the map non-degenerate in at least one direction
        terms.push(Expr::var(zref[mu % m]));
        total += 1.0;
        phi.push(Expr::num(b.mid()) + Expr::sum(terms).scale(0.5 * b.half_width() / total));
    }
    let sub: BTreeMap<String, Expr> = k.chart.coords().iter().cloned().zip(phi.iter().cloned()).collect();
    let jac: Vec<Vec<Expr>> = phi.iter().map(|p| zs.iter().map(|z| differentiate(p, z)).collect()).collect();
    let n = k.theta.len();
    let eta = (0..n)
        .map(|i| {
            (0..m)
                .map(|nu| {
                    Expr::sum((0..phi.len()).map(|mu| k.theta[i][mu].substitute(&sub) * jac[mu][nu].clone()))
                })
                .collect()
        })
        .collect();
    Instance {
        name: format!("{} pulled back to R^{m}", k.name),
        alg: k.alg.clone(),
        chart,
        eta,
        h: k.h.iter().map(|e| e.substitute(&sub)).collect(),
    }
}

/// Random polynomial connection coefficients over the algebroid base.
pub fn random_connection<R: Rng>(rng: &mut R, alg: &FlatAlgebroid) -> cartan::mcform::Connection {
    let xs: Vec<&str> = alg.chart().coords().iter().map(|s| s.as_str()).collect();
    let n = alg.n();
    let mut entries = Vec::new();
    for k in 0..n {
        for a in 0..alg.d() {
            for j in 0..n {
                if rng.gen_bool(0.5) {
                    entries.push(((k, a, j), rand_poly(rng, &xs, 2, 2)));
                }
            }
        }
    }
    cartan::mcform::Connection::from_entries(alg, entries).unwrap()
}
