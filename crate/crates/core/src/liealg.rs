//! Matrix Lie algebras `g ⊂ gl(n)`: structure constants, the
//! anti-symmetrization operator, prolongations and finite type, the Killing
//! form, and reduction of structure functions modulo the image of the
//! anti-symmetrization operator.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_TOL};

/// `c^γ_{αβ}` with `[E_α, E_β] = Σ_γ c^γ_{αβ} E_γ`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(dim: usize) -> Self {
        StructureConstants {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    /// Coefficient of `E_c` in `[E_a, E_b]`.
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[self.idx(a, b, c)]
    }

    /// Sets `[E_a,E_b]` component `c` to `v` and `[E_b,E_a]` to `-v`.
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let i = self.idx(a, b, c);
        let j = self.idx(b, a, c);
        self.data[i] = v;
        self.data[j] = -v;
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let mut out = vec![0.0; m];
        for a in 0..m {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..m {
                let w = x[a] * y[b];
                if w == 0.0 {
                    continue;
                }
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * self.get(a, b, c);
                }
            }
        }
        out
    }

    /// Matrix of `ad(E_a)` acting on coefficient vectors.
    pub fn ad(&self, a: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |c, b| self.get(a, b, c))
    }

    /// `K_{αβ} = tr(ad E_α ad E_β)`.
    pub fn killing_form(&self) -> DMatrix<f64> {
        let ads: Vec<DMatrix<f64>> = (0..self.dim).map(|a| self.ad(a)).collect();
        DMatrix::from_fn(self.dim, self.dim, |a, b| (&ads[a] * &ads[b]).trace())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest component of the Jacobiator over basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let m = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; m];
            v[i] = 1.0;
            v
        };
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let t1 = self.bracket(&self.bracket(&e(i), &e(j)), &e(k));
                    let t2 = self.bracket(&self.bracket(&e(j), &e(k)), &e(i));
                    let t3 = self.bracket(&self.bracket(&e(k), &e(i)), &e(j));
                    for c in 0..m {
                        worst = worst.max((t1[c] + t2[c] + t3[c]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Dimension of `[g, g]`.
    pub fn derived_dim(&self, tol: f64) -> usize {
        let m = self.dim;
        let cols: Vec<DVector<f64>> = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .map(|(a, b)| DVector::from_fn(m, |c, _| self.get(a, b, c)))
            .collect();
        if cols.is_empty() {
            return 0;
        }
        linalg::rank(&DMatrix::from_columns(&cols), tol)
    }

    pub fn classify(&self, tol: f64) -> AlgebraType {
        let m = self.dim;
        if m == 0 {
            return AlgebraType::Zero;
        }
        if self.max_abs() <= tol {
            return AlgebraType::Abelian(m);
        }
        let sig = Signature::of(&self.killing_form(), tol);
        if m != 3 {
            return AlgebraType::Other { dim: m, signature: sig };
        }
        match (sig.positive, sig.negative, sig.zero) {
            (0, 3, 0) => AlgebraType::So3,
            (_, _, 0) => AlgebraType::Sl2,
            (0, 1, 2) if self.derived_dim(tol) == 2 => AlgebraType::Se2,
            (1, 0, 2) if self.derived_dim(tol) == 2 => AlgebraType::Se11,
            (0, 0, 3) if self.derived_dim(tol) == 1 => AlgebraType::Heisenberg,
            _ => AlgebraType::Other { dim: m, signature: sig },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of(form: &DMatrix<f64>, tol: f64) -> Signature {
        let (positive, negative, zero) = linalg::inertia(form, tol);
        Signature {
            positive,
            negative,
            zero,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.zero > 0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.positive, self.negative)?;
        if self.zero > 0 {
            write!(f, " + {} null", self.zero)?;
        }
        Ok(())
    }
}

/// Isomorphism type of a low-dimensional real Lie algebra, as far as the
/// Killing form and derived algebra determine it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum AlgebraType {
    Zero,
    Abelian(usize),
    So3,
    Sl2,
    Se2,
    Se11,
    Heisenberg,
    Other { dim: usize, signature: Signature },
}

impl AlgebraType {
    /// Model plane geometry whose isometry algebra this is.
    pub fn geometry(&self) -> Option<&'static str> {
        match self {
            AlgebraType::So3 => Some("Spherical Geometry"),
            AlgebraType::Se2 => Some("Euclidean Geometry"),
            AlgebraType::Sl2 => Some("Hyperbolic Geometry"),
            _ => None,
        }
    }
}

impl fmt::Display for AlgebraType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraType::Zero => write!(f, "0"),
            AlgebraType::Abelian(m) => write!(f, "R^{m} (abelian)"),
            AlgebraType::So3 => write!(f, "so3"),
            AlgebraType::Sl2 => write!(f, "sl2"),
            AlgebraType::Se2 => write!(f, "se2"),
            AlgebraType::Se11 => write!(f, "se(1,1)"),
            AlgebraType::Heisenberg => write!(f, "heisenberg"),
            AlgebraType::Other { dim, signature } => {
                write!(f, "{dim}-dim, Killing signature {signature}")
            }
        }
    }
}

/// Subalgebra of `gl(n)` given by a basis of matrices.
#[derive(Debug, Clone)]
pub struct MatrixLieAlgebra {
    n: usize,
    basis: Vec<DMatrix<f64>>,
    constants: StructureConstants,
    // n² × m matrix whose columns are the row-major flattened basis
    flat: DMatrix<f64>,
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(n * m.ncols(), |i, _| m[(i / n, i % n)])
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Build the algebra spanned by `basis`, checking independence and closure.
pub fn make_algebra(basis: Vec<DMatrix<f64>>) -> Result<MatrixLieAlgebra> {
    let n = basis.first().map(|b| b.nrows()).unwrap_or(0);
    if basis.iter().any(|b| b.nrows() != n || b.ncols() != n) {
        return Err(Error::ShapeMismatch);
    }
    let m = basis.len();
    let flat = if m == 0 {
        DMatrix::zeros(n * n, 0)
    } else {
        DMatrix::from_columns(&basis.iter().map(flatten).collect::<Vec<_>>())
    };
    if linalg::rank(&flat, DEFAULT_TOL) < m {
        return Err(Error::DependentBasis);
    }
    let mut constants = StructureConstants::zeros(m);
    for a in 0..m {
        for b in (a + 1)..m {
            let br = commutator(&basis[a], &basis[b]);
            let target = flatten(&br);
            let coef = linalg::lstsq(&flat, &target, DEFAULT_TOL);
            let residual = (&flat * &coef - &target).amax();
            if residual > DEFAULT_TOL * br.amax().max(1.0) {
                return Err(Error::NotClosed(a, b, residual));
            }
            for c in 0..m {
                constants.set(a, b, c, coef[c]);
            }
        }
    }
    Ok(MatrixLieAlgebra {
        n,
        basis,
        constants,
        flat,
    })
}

impl MatrixLieAlgebra {
    /// Dimension of the representation space.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn element(&self, coef: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (c, e) in coef.iter().zip(&self.basis) {
            out += e * *c;
        }
        out
    }

    /// Coordinates of `x` in the basis, with the distance from `x` to the
    /// span (max-entry norm).
    pub fn coordinates(&self, x: &DMatrix<f64>) -> (Vec<f64>, f64) {
        let target = flatten(x);
        let coef = linalg::lstsq(&self.flat, &target, DEFAULT_TOL);
        let residual = if self.dim() == 0 {
            target.amax()
        } else {
            (&self.flat * &coef - &target).amax()
        };
        (coef.iter().cloned().collect(), residual)
    }

    pub fn contains(&self, x: &DMatrix<f64>, tol: f64) -> bool {
        self.coordinates(x).1 <= tol
    }

    /// Orthogonal projector onto `g` inside `gl(n)` (row-major flattening).
    fn projector(&self) -> DMatrix<f64> {
        let q = linalg::column_space(&self.flat, DEFAULT_TOL);
        &q * q.transpose()
    }

    pub fn killing_form(&self) -> DMatrix<f64> {
        killing_form(self)
    }
}

pub fn killing_form(g: &MatrixLieAlgebra) -> DMatrix<f64> {
    g.constants.killing_form()
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Named matrix algebras.
pub mod presets {
    use super::*;

    /// The zero subalgebra of `gl(n)`.
    pub fn zero(n: usize) -> MatrixLieAlgebra {
        make_algebra_or_empty(Vec::new(), n)
    }

    pub fn o(n: usize) -> MatrixLieAlgebra {
        let mut basis = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                basis.push(unit(n, i, j) - unit(n, j, i));
            }
        }
        make_algebra_or_empty(basis, n)
    }

    pub fn gl(n: usize) -> MatrixLieAlgebra {
        let basis = (0..n)
            .flat_map(|i| (0..n).map(move |j| unit(n, i, j)))
            .collect();
        make_algebra_or_empty(basis, n)
    }

    pub fn sl(n: usize) -> MatrixLieAlgebra {
        let mut basis = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    basis.push(unit(n, i, j));
                }
            }
        }
        for i in 0..n.saturating_sub(1) {
            basis.push(unit(n, i, i) - unit(n, i + 1, i + 1));
        }
        make_algebra_or_empty(basis, n)
    }

    pub fn co(n: usize) -> MatrixLieAlgebra {
        let mut basis = o(n).basis().to_vec();
        basis.push(DMatrix::identity(n, n));
        make_algebra_or_empty(basis, n)
    }

    /// Realify a complex matrix `P + iQ` as `[[P, -Q], [Q, P]]`, acting on
    /// `(Re z, Im z)`.
    pub fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
        let n = re.nrows();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(re);
        out.view_mut((n, n), (n, n)).copy_from(re);
        out.view_mut((0, n), (n, n)).copy_from(&(-im));
        out.view_mut((n, 0), (n, n)).copy_from(im);
        out
    }

    /// Complex (real, imaginary) parts of the `u(n)` basis: `i E_kk`, then
    /// for `k < l` the pair `E_kl - E_lk`, `i (E_kl + E_lk)`.
    pub fn unitary_basis(n: usize) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        let z = || DMatrix::zeros(n, n);
        let mut out = Vec::new();
        for k in 0..n {
            out.push((z(), unit(n, k, k)));
        }
        for k in 0..n {
            for l in (k + 1)..n {
                out.push((unit(n, k, l) - unit(n, l, k), z()));
                out.push((z(), unit(n, k, l) + unit(n, l, k)));
            }
        }
        out
    }

    /// `u(n)` in its real `2n`-dimensional representation.
    pub fn u(n: usize) -> MatrixLieAlgebra {
        let basis = unitary_basis(n)
            .iter()
            .map(|(re, im)| realify(re, im))
            .collect();
        make_algebra_or_empty(basis, 2 * n)
    }

    fn make_algebra_or_empty(basis: Vec<DMatrix<f64>>, n: usize) -> MatrixLieAlgebra {
        if basis.is_empty() {
            return MatrixLieAlgebra {
                n,
                basis,
                constants: StructureConstants::zeros(0),
                flat: DMatrix::zeros(n * n, 0),
            };
        }
        make_algebra(basis).expect("preset algebras are closed")
    }

    /// Parse names like `o(3)`, `gl(2)`, `sl(2)`, `u(1)`, `co(3)`.
    pub fn by_name(name: &str) -> Result<MatrixLieAlgebra> {
        let name = name.trim();
        let bad = || Error::Config(format!("unknown algebra preset `{name}`"));
        let open = name.find('(').ok_or_else(bad)?;
        if !name.ends_with(')') {
            return Err(bad());
        }
        let n: usize = name[open + 1..name.len() - 1]
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if n == 0 || n > 8 {
            return Err(bad());
        }
        match &name[..open] {
            "o" | "so" => Ok(o(n)),
            "gl" => Ok(gl(n)),
            "sl" => Ok(sl(n)),
            "u" => Ok(u(n)),
            "co" => Ok(co(n)),
            "zero" => Ok(zero(n)),
            _ => Err(bad()),
        }
    }
}

/// Element of `hom(Λ²Rⁿ, Rⁿ)`, stored by components `(k; a<b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AltMap {
    n: usize,
    data: Vec<f64>,
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn pair_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

impl AltMap {
    pub fn zeros(n: usize) -> AltMap {
        AltMap {
            n,
            data: vec![0.0; n * pair_count(n)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> AltMap {
        let mut out = AltMap::zeros(n);
        for k in 0..n {
            for a in 0..n {
                for b in (a + 1)..n {
                    out.set(k, a, b, f(k, a, b));
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Component `k` of the map evaluated on `(e_a, e_b)`.
    pub fn get(&self, k: usize, a: usize, b: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => 0.0,
            Less => self.data[k * pair_count(self.n) + pair_index(self.n, a, b)],
            Greater => -self.data[k * pair_count(self.n) + pair_index(self.n, b, a)],
        }
    }

    /// Sets component `k` on `(e_a, e_b)`, `a < b`.
    pub fn set(&mut self, k: usize, a: usize, b: usize, v: f64) {
        let p = pair_count(self.n);
        self.data[k * p + pair_index(self.n, a, b)] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `A(T)(u, v) = T(u)v - T(v)u`, with `T` given by the matrices `T(e_a)`.
pub fn antisymmetrize(t: &[DMatrix<f64>]) -> AltMap {
    let n = t.len();
    AltMap::from_fn(n, |k, a, b| t[a][(k, b)] - t[b][(k, a)])
}

/// Matrix of `T ↦ A(T)` on `hom(Rⁿ, g)`; columns indexed by `(a, α)` with
/// `T(e_a) = Σ_α t_{aα} E_α`.
fn antisymmetrization_matrix(g: &MatrixLieAlgebra) -> DMatrix<f64> {
    let n = g.n();
    let m = g.dim();
    let p = pair_count(n);
    let mut mat = DMatrix::zeros(n * p, n * m);
    for k in 0..n {
        for a in 0..n {
            for b in (a + 1)..n {
                let row = k * p + pair_index(n, a, b);
                for (alpha, e) in g.basis().iter().enumerate() {
                    mat[(row, a * m + alpha)] += e[(k, b)];
                    mat[(row, b * m + alpha)] -= e[(k, a)];
                }
            }
        }
    }
    mat
}

/// Rank of `A` restricted to `hom(Rⁿ, g)`.
pub fn antisymmetrization_rank(g: &MatrixLieAlgebra) -> usize {
    linalg::rank(&antisymmetrization_matrix(g), DEFAULT_TOL)
}

/// Basis of `g^(k)` as fully symmetric maps `V^{k+1} → V`.
#[derive(Debug, Clone)]
pub struct ProlongationSpace {
    order: usize,
    n: usize,
    basis: Vec<Vec<f64>>,
}

impl ProlongationSpace {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    fn offset(&self, args: &[usize], out: usize) -> usize {
        args.iter().fold(0, |acc, &i| acc * self.n + i) * self.n + out
    }

    /// Output component `out` of basis element `elem` on basis vectors
    /// `args` (length `order + 1`).
    pub fn component(&self, elem: usize, args: &[usize], out: usize) -> f64 {
        self.basis[elem][self.offset(args, out)]
    }

    /// The matrix `v ↦ T(e_{fixed}, …, v)` of basis element `elem`.
    pub fn partial(&self, elem: usize, fixed: &[usize]) -> DMatrix<f64> {
        let mut args = fixed.to_vec();
        args.push(0);
        DMatrix::from_fn(self.n, self.n, |j, l| {
            *args.last_mut().unwrap() = l;
            self.component(elem, &args, j)
        })
    }
}

fn multisets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, size, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, size, 0, &mut Vec::new(), &mut out);
    out
}

fn all_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut t| {
            let mut v = vec![0; len];
            for slot in v.iter_mut().rev() {
                *slot = t % n;
                t /= n;
            }
            v
        })
        .collect()
}

/// First prolongation as the kernel of the anti-symmetrization operator on
/// `hom(Rⁿ, g)`.
pub fn first_prolongation(g: &MatrixLieAlgebra) -> ProlongationSpace {
    let n = g.n();
    let m = g.dim();
    let ker = linalg::kernel(&antisymmetrization_matrix(g), DEFAULT_TOL);
    let basis = ker
        .column_iter()
        .map(|col| {
            // T(e_a, e_b)^k = (T(e_a) e_b)^k
            let mut data = vec![0.0; n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for k in 0..n {
                        data[(a * n + b) * n + k] =
                            (0..m).map(|al| col[a * m + al] * g.basis()[al][(k, b)]).sum();
                    }
                }
            }
            data
        })
        .collect();
    ProlongationSpace {
        order: 1,
        n,
        basis,
    }
}

/// `g^(k)` in the symmetric multilinear model: fully symmetric
/// `T: V^{k+1} → V` whose partial maps with `k` fixed arguments lie in `g`.
pub fn prolongation(g: &MatrixLieAlgebra, order: usize) -> ProlongationSpace {
    let n = g.n();
    let sets = multisets(n, order + 1);
    let index: HashMap<Vec<usize>, usize> =
        sets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let var = |mut args: Vec<usize>, out: usize| {
        args.sort_unstable();
        index[&args] * n + out
    };
    let unknowns = sets.len() * n;
    let complement = DMatrix::identity(n * n, n * n) - g.projector();
    let fixed_sets = multisets(n, order);
    let mut rows = Vec::new();
    for fixed in &fixed_sets {
        for r in 0..n * n {
            let mut row = vec![0.0; unknowns];
            let mut any = false;
            for j in 0..n {
                for l in 0..n {
                    let w = complement[(r, j * n + l)];
                    if w.abs() > 0.0 {
                        let mut args = fixed.clone();
                        args.push(l);
                        row[var(args, j)] += w;
                        any = true;
                    }
                }
            }
            if any {
                rows.push(row);
            }
        }
    }
    let constraints = if rows.is_empty() {
        DMatrix::zeros(0, unknowns)
    } else {
        DMatrix::from_fn(rows.len(), unknowns, |i, j| rows[i][j])
    };
    let ker = linalg::kernel(&constraints, DEFAULT_TOL);
    let tuples = all_tuples(n, order + 1);
    let basis = ker
        .column_iter()
        .map(|col| {
            let mut data = vec![0.0; tuples.len() * n];
            for (t, args) in tuples.iter().enumerate() {
                for out in 0..n {
                    data[t * n + out] = col[var(args.clone(), out)];
                }
            }
            data
        })
        .collect();
    ProlongationSpace {
        order,
        n,
        basis,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "order")]
pub enum FiniteTypeVerdict {
    /// `g^(k-1) ≠ 0` and `g^(k) = 0`.
    FiniteType(usize),
    /// No vanishing prolongation up to the given order.
    Undetermined(usize),
}

impl fmt::Display for FiniteTypeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiniteTypeVerdict::FiniteType(k) => write!(f, "FiniteType({k})"),
            FiniteTypeVerdict::Undetermined(k) => write!(f, "Undetermined({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProlongationTower {
    /// `dim g^(1), dim g^(2), …`, stopping at the first zero.
    pub dims: Vec<usize>,
    pub verdict: FiniteTypeVerdict,
}

pub fn prolongation_tower(g: &MatrixLieAlgebra, max_k: usize) -> ProlongationTower {
    if g.dim() == 0 {
        return ProlongationTower {
            dims: Vec::new(),
            verdict: FiniteTypeVerdict::FiniteType(0),
        };
    }
    let mut dims = Vec::new();
    for k in 1..=max_k.max(1) {
        let d = prolongation(g, k).dim();
        dims.push(d);
        if d == 0 {
            return ProlongationTower {
                dims,
                verdict: FiniteTypeVerdict::FiniteType(k),
            };
        }
    }
    ProlongationTower {
        dims,
        verdict: FiniteTypeVerdict::Undetermined(max_k.max(1)),
    }
}

/// Orthogonal projection of `c` onto the complement of `A(hom(Rⁿ, g))`:
/// a canonical representative of the class of `c` in the quotient.
pub fn reduce_structure_function(c: &AltMap, g: &MatrixLieAlgebra) -> AltMap {
    let image = linalg::column_space(&antisymmetrization_matrix(g), DEFAULT_TOL);
    let v = DVector::from_column_slice(c.as_slice());
    let reduced = if image.ncols() == 0 {
        v
    } else {
        &v - &image * (image.transpose() * &v)
    };
    AltMap {
        n: c.n(),
        data: reduced.iter().cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    fn mat(n: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    #[test]
    fn o2_is_abelian_one_dimensional() {
        let g = make_algebra(vec![mat(2, &[0.0, -1.0, 1.0, 0.0])]).unwrap();
        assert_eq!(g.dim(), 1);
        assert_eq!(g.structure_constants().max_abs(), 0.0);
    }

    #[test]
    fn gl2_closes() {
        assert_eq!(gl(2).dim(), 4);
    }

    #[test]
    fn two_dim_nonabelian() {
        let g = make_algebra(vec![unit(2, 0, 0), unit(2, 0, 1)]).unwrap();
        assert!((g.structure_constants().get(0, 1, 1) - 1.0).abs() < 1e-14);
        assert!(g.structure_constants().get(0, 1, 0).abs() < 1e-14);
    }

    #[test]
    fn detects_non_closure_and_dependence() {
        let r = make_algebra(vec![unit(2, 0, 1), unit(2, 1, 0)]);
        assert!(matches!(r, Err(Error::NotClosed(0, 1, _))));
        let r = make_algebra(vec![unit(2, 0, 1), unit(2, 0, 1) * 2.0]);
        assert_eq!(r.unwrap_err(), Error::DependentBasis);
        let r = make_algebra(vec![unit(2, 0, 1), unit(3, 0, 1)]);
        assert_eq!(r.unwrap_err(), Error::ShapeMismatch);
    }

    #[test]
    fn antisymmetrize_examples() {
        let zero = vec![DMatrix::zeros(2, 2); 2];
        assert_eq!(antisymmetrize(&zero).max_abs(), 0.0);
        let t = vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)];
        let a = antisymmetrize(&t);
        // A(T)(e1, e2) = T(e1)e2 - T(e2)e1 = e2
        assert_eq!(a.get(0, 0, 1), 0.0);
        assert_eq!(a.get(1, 0, 1), 1.0);
        assert_eq!(a.get(1, 1, 0), -1.0);
    }

    #[test]
    fn symmetric_valued_maps_are_killed() {
        // T(e_a)e_b = S(e_a, e_b) with S symmetric
        let n = 3;
        let s = |a: usize, b: usize, k: usize| ((a + b) * (k + 1)) as f64 + (a * b) as f64;
        let t: Vec<DMatrix<f64>> = (0..n)
            .map(|a| DMatrix::from_fn(n, n, |k, b| s(a, b, k)))
            .collect();
        assert_eq!(antisymmetrize(&t).max_abs(), 0.0);
    }

    #[test]
    fn first_prolongation_dims() {
        assert_eq!(first_prolongation(&o(2)).dim(), 0);
        assert_eq!(first_prolongation(&o(3)).dim(), 0);
        assert_eq!(first_prolongation(&o(4)).dim(), 0);
        assert_eq!(first_prolongation(&gl(2)).dim(), 6);
        assert_eq!(first_prolongation(&gl(3)).dim(), 18);
        assert_eq!(first_prolongation(&co(3)).dim(), 3);
    }

    #[test]
    fn both_routes_agree_at_order_one() {
        for g in [o(3), gl(2), co(3), sl(2), u(2)] {
            assert_eq!(first_prolongation(&g).dim(), prolongation(&g, 1).dim());
        }
    }

    #[test]
    fn towers() {
        let t = prolongation_tower(&o(2), 2);
        assert_eq!(t.dims, vec![0]);
        assert_eq!(t.verdict, FiniteTypeVerdict::FiniteType(1));
        let t = prolongation_tower(&co(3), 3);
        assert_eq!(t.dims, vec![3, 0]);
        assert_eq!(t.verdict, FiniteTypeVerdict::FiniteType(2));
        let t = prolongation_tower(&gl(2), 3);
        assert!(t.dims.iter().all(|&d| d > 0));
        assert_eq!(t.verdict, FiniteTypeVerdict::Undetermined(3));
    }

    #[test]
    fn prolongation_elements_are_symmetric_and_land_in_g() {
        let g = co(3);
        for k in 1..=2 {
            let p = prolongation(&g, k);
            for e in 0..p.dim() {
                for args in all_tuples(3, k + 1) {
                    let mut sorted = args.clone();
                    sorted.sort_unstable();
                    for out in 0..3 {
                        let d = p.component(e, &args, out) - p.component(e, &sorted, out);
                        assert!(d.abs() < 1e-10);
                    }
                }
                for fixed in all_tuples(3, k) {
                    assert!(g.contains(&p.partial(e, &fixed), 1e-10));
                }
            }
        }
    }

    #[test]
    fn killing_form_of_abelian_is_zero() {
        assert_eq!(o(2).killing_form().amax(), 0.0);
    }

    #[test]
    fn killing_classification_of_classical_algebras() {
        assert_eq!(o(3).structure_constants().classify(1e-9), AlgebraType::So3);
        assert_eq!(sl(2).structure_constants().classify(1e-9), AlgebraType::Sl2);
        assert_eq!(o(2).structure_constants().classify(1e-9), AlgebraType::Abelian(1));
    }

    #[test]
    fn reduction_examples() {
        // image of A is killed
        let g = co(3);
        let t: Vec<DMatrix<f64>> = (0..3)
            .map(|a| g.element(&[a as f64, 1.0 - a as f64, 0.5, 2.0]))
            .collect();
        let img = antisymmetrize(&t);
        assert!(reduce_structure_function(&img, &g).max_abs() < 1e-12);
        // trivial algebra: identity
        let zero = presets::zero(2);
        let c = AltMap::from_fn(2, |k, a, b| (k + 2 * a + 3 * b) as f64);
        assert_eq!(reduce_structure_function(&c, &zero), c);
        // gl(2): A is onto
        assert_eq!(antisymmetrization_rank(&gl(2)), 2);
        assert!(reduce_structure_function(&c, &gl(2)).max_abs() < 1e-12);
    }

    #[test]
    fn presets_by_name() {
        assert_eq!(presets::by_name("o(3)").unwrap().dim(), 3);
        assert_eq!(presets::by_name("u(2)").unwrap().n(), 4);
        assert_eq!(presets::by_name("co(2)").unwrap().dim(), 2);
        assert!(presets::by_name("spin(3)").is_err());
    }
}
