//! Canonical multivariate-rational normal form.
//!
//! An expression is mapped into `Q(atoms)`, where atoms are variables and
//! function applications with normalized arguments (treated as opaque).
//! Coefficients are exact: every f64 literal is converted to the rational
//! it denotes. Numerator and denominator are kept coprime with a monic
//! denominator, so the output is canonical for rational input and
//! `normalize` is idempotent.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Node};

type Sym = Arc<str>;
type Q = BigRational;

thread_local! {
    // remaining coefficient multiplications; gcds give up once it runs out
    static WORK: Cell<u64> = const { Cell::new(u64::MAX) };
}

fn charge(units: usize) {
    WORK.with(|w| w.set(w.get().saturating_sub(units as u64)));
}

fn exhausted() -> bool {
    WORK.with(|w| w.get() == 0)
}

struct BudgetScope(u64);

impl BudgetScope {
    fn new(limit: u64) -> BudgetScope {
        BudgetScope(WORK.with(|w| w.replace(limit)))
    }
}

impl Drop for BudgetScope {
    fn drop(&mut self) {
        WORK.with(|w| w.set(self.0));
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Mono(Vec<(Sym, u32)>);

impl Mono {
    fn one() -> Mono {
        Mono(Vec::new())
    }

    fn var(v: &Sym, k: u32) -> Mono {
        if k == 0 {
            Mono::one()
        } else {
            Mono(vec![(v.clone(), k)])
        }
    }

    fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    fn exponent(&self, v: &Sym) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| s == v)
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    fn without(&self, v: &Sym) -> Mono {
        Mono(self.0.iter().filter(|(s, _)| s != v).cloned().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Poly(BTreeMap<Mono, Q>);

impl Poly {
    fn zero() -> Poly {
        Poly(BTreeMap::new())
    }

    fn constant(c: Q) -> Poly {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Mono::one(), c);
        }
        Poly(m)
    }

    fn one() -> Poly {
        Poly::constant(Q::one())
    }

    fn monomial(c: Q, m: Mono) -> Poly {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(m, c);
        }
        Poly(map)
    }

    fn var(v: &Sym) -> Poly {
        Poly::monomial(Q::one(), Mono::var(v, 1))
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_const(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.0.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }

    fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    /// Largest coefficient size in 64-bit limbs.
    fn limbs(&self) -> usize {
        self.0.values().map(|c| (c.numer().bits() + c.denom().bits()) as usize / 64 + 1).max().unwrap_or(1)
    }

    fn mul(&self, other: &Poly) -> Poly {
        charge(self.0.len() * other.0.len() * self.limbs() * other.limbs());
        let mut out = Poly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    fn mul_mono(&self, m: &Mono) -> Poly {
        Poly(self.0.iter().map(|(k, c)| (k.mul(m), c.clone())).collect())
    }

    fn pow(&self, mut n: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn main_var(&self) -> Option<Sym> {
        self.0
            .keys()
            .flat_map(|m| m.0.iter().map(|(s, _)| s))
            .max()
            .cloned()
    }

    fn contains(&self, v: &Sym) -> bool {
        self.0.keys().any(|m| m.exponent(v) > 0)
    }

    fn degree(&self, v: &Sym) -> u32 {
        self.0.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Coefficients as a univariate polynomial in `v`.
    fn coeffs(&self, v: &Sym) -> Vec<Poly> {
        let mut out = vec![Poly::zero(); self.degree(v) as usize + 1];
        for (m, c) in &self.0 {
            out[m.exponent(v) as usize].add_term(m.without(v), c.clone());
        }
        out
    }

    fn lc(&self, v: &Sym) -> Poly {
        self.coeffs(v).pop().unwrap_or_else(Poly::zero)
    }

    /// Leading coefficient in the storage order; used only to pick a
    /// canonical scalar multiple.
    fn leading_scalar(&self) -> Option<&Q> {
        self.0.values().next_back()
    }

    fn monic(&self) -> Poly {
        match self.leading_scalar() {
            Some(c) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    fn div_exact(&self, b: &Poly) -> Option<Poly> {
        if b.is_zero() {
            return None;
        }
        if let Some(c) = b.as_const() {
            return Some(self.scale(&c.recip()));
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let v = match (self.main_var(), b.main_var()) {
            (Some(x), Some(y)) => x.max(y),
            (None, Some(y)) => y,
            _ => unreachable!("b is not constant"),
        };
        if !b.contains(&v) {
            let mut out = Poly::zero();
            for (k, c) in self.coeffs(&v).iter().enumerate() {
                let q = c.div_exact(b)?;
                out = out.add(&q.mul_mono(&Mono::var(&v, k as u32)));
            }
            return Some(out);
        }
        let db = b.degree(&v);
        let lb = b.lc(&v);
        let mut r = self.clone();
        let mut q = Poly::zero();
        while !r.is_zero() && r.contains(&v) && r.degree(&v) >= db {
            let dr = r.degree(&v);
            let t = r.lc(&v).div_exact(&lb)?.mul_mono(&Mono::var(&v, dr - db));
            r = r.sub(&t.mul(b));
            q = q.add(&t);
        }
        r.is_zero().then_some(q)
    }

    fn prem(&self, b: &Poly, v: &Sym) -> Poly {
        let db = b.degree(v);
        let lb = b.lc(v);
        let mut r = self.clone();
        while !r.is_zero() && r.degree(v) >= db && !exhausted() {
            let dr = r.degree(v);
            let t = r.lc(v).mul_mono(&Mono::var(v, dr - db));
            r = r.mul(&lb).sub(&t.mul(b));
        }
        r
    }

    fn content(&self, v: &Sym) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs(v) {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c);
            if g.as_const().is_some() {
                return Poly::one();
            }
        }
        g
    }

    fn primitive(&self, v: &Sym) -> Poly {
        let c = self.content(v);
        self.div_exact(&c).expect("content divides")
    }
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_const().is_some() || b.as_const().is_some() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if exhausted() {
        return Poly::one();
    }
    if a.0.len() <= b.0.len() && b.div_exact(a).is_some() {
        return a.monic();
    }
    if b.0.len() <= a.0.len() && a.div_exact(b).is_some() {
        return b.monic();
    }
    let v = a.main_var().unwrap().max(b.main_var().unwrap());
    match (a.contains(&v), b.contains(&v)) {
        (false, true) => gcd(a, &b.content(&v)),
        (true, false) => gcd(&a.content(&v), b),
        _ => {
            let (ca, cb) = (a.content(&v), b.content(&v));
            let c = gcd(&ca, &cb);
            let mut p = a.div_exact(&ca).unwrap();
            let mut q = b.div_exact(&cb).unwrap();
            if p.degree(&v) < q.degree(&v) {
                std::mem::swap(&mut p, &mut q);
            }
            loop {
                if exhausted() {
                    return Poly::one();
                }
                let r = p.prem(&q, &v);
                if r.is_zero() {
                    break;
                }
                if !r.contains(&v) {
                    q = Poly::one();
                    break;
                }
                p = q;
                q = r.primitive(&v);
            }
            let g = if q.contains(&v) { q.primitive(&v) } else { q };
            c.mul(&g).monic()
        }
    }
}

/// Element of the fraction field, reduced and with monic denominator.
#[derive(Clone, Debug, PartialEq)]
struct Frac {
    num: Poly,
    den: Poly,
}

impl Frac {
    fn poly(p: Poly) -> Frac {
        Frac {
            num: p,
            den: Poly::one(),
        }
    }

    fn new(num: Poly, den: Poly) -> Frac {
        if num.is_zero() {
            return Frac::poly(Poly::zero());
        }
        let (num, den) = if den.as_const().is_some() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
            }
        };
        let lead = den.leading_scalar().cloned().unwrap_or_else(Q::one);
        if lead.is_one() {
            Frac { num, den }
        } else {
            let k = lead.recip();
            Frac {
                num: num.scale(&k),
                den: den.scale(&k),
            }
        }
    }

    fn add(&self, o: &Frac) -> Frac {
        if self.den == o.den {
            if self.den.is_one() {
                return Frac::poly(self.num.add(&o.num));
            }
            return Frac::new(self.num.add(&o.num), self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        let a = self.den.div_exact(&g).unwrap();
        let b = o.den.div_exact(&g).unwrap();
        Frac::new(
            self.num.mul(&b).add(&o.num.mul(&a)),
            a.mul(&o.den),
        )
    }

    fn neg(&self) -> Frac {
        Frac {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    fn mul(&self, o: &Frac) -> Frac {
        if self.den.is_one() && o.den.is_one() {
            return Frac::poly(self.num.mul(&o.num));
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let n1 = self.num.div_exact(&g1).unwrap();
        let d2 = o.den.div_exact(&g1).unwrap();
        let n2 = o.num.div_exact(&g2).unwrap();
        let d1 = self.den.div_exact(&g2).unwrap();
        Frac::new(n1.mul(&n2), d1.mul(&d2))
    }

    fn inv(&self) -> Option<Frac> {
        if self.num.is_zero() {
            return None;
        }
        Some(Frac::new(self.den.clone(), self.num.clone()))
    }

    fn pow(&self, n: u32) -> Frac {
        Frac {
            num: self.num.pow(n),
            den: self.den.pow(n),
        }
    }
}

/// Display order: higher total degree first, then lexicographic with
/// earlier variable names dominating.
fn print_order(a: &Mono, b: &Mono) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let deg = |m: &Mono| m.0.iter().map(|(_, k)| *k).sum::<u32>();
    match deg(b).cmp(&deg(a)) {
        Ordering::Equal => {}
        o => return o,
    }
    for (x, y) in a.0.iter().zip(b.0.iter()) {
        match x.0.cmp(&y.0) {
            Ordering::Equal => match y.1.cmp(&x.1) {
                Ordering::Equal => continue,
                o => return o,
            },
            o => return o,
        }
    }
    b.0.len().cmp(&a.0.len())
}

struct Normalizer {
    atoms: BTreeMap<Sym, Expr>,
    guards: Vec<Expr>,
}

impl Normalizer {
    fn atom(&mut self, key: String, e: Expr) -> Frac {
        let sym: Sym = Arc::from(key.as_str());
        self.atoms.entry(sym.clone()).or_insert(e);
        Frac::poly(Poly::var(&sym))
    }

    fn guard(&mut self, f: &Frac) {
        if f.num.as_const().is_none() {
            let g = self.poly_expr(&f.num);
            if !self.guards.contains(&g) {
                self.guards.push(g);
            }
        }
    }

    fn convert(&mut self, e: &Expr) -> Frac {
        if exhausted() {
            // the caller discards the result
            return Frac::poly(Poly::zero());
        }
        match e.node() {
            Node::Num(x) => match Q::from_float(*x) {
                Some(q) => Frac::poly(Poly::constant(q)),
                None => self.atom(e.to_string(), e.clone()),
            },
            Node::Var(v) => {
                let key = v.to_string();
                self.atom(key, e.clone())
            }
            Node::Add(a, b) => {
                let (a, b) = (self.convert(a), self.convert(b));
                a.add(&b)
            }
            Node::Sub(a, b) => {
                let (a, b) = (self.convert(a), self.convert(b));
                a.add(&b.neg())
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.convert(a), self.convert(b));
                a.mul(&b)
            }
            Node::Div(a, b) => {
                let (na, nb) = (self.convert(a), self.convert(b));
                self.guard(&nb);
                match nb.inv() {
                    Some(inv) => na.mul(&inv),
                    None => self.atom(e.to_string(), e.clone()),
                }
            }
            Node::Pow(a, n) => {
                let base = self.convert(a);
                if *n >= 0 {
                    base.pow(*n as u32)
                } else {
                    self.guard(&base);
                    match base.inv() {
                        Some(inv) => inv.pow(n.unsigned_abs()),
                        None => self.atom(e.to_string(), e.clone()),
                    }
                }
            }
            Node::Neg(a) => self.convert(a).neg(),
            Node::Call(f, a) => {
                let arg = self.convert(a);
                let arg = self.to_expr(&arg);
                if let Some(v) = arg.as_num().and_then(|x| f.exact_at(x)) {
                    return Frac::poly(Poly::constant(Q::from_float(v).unwrap()));
                }
                let call = Expr::call(*f, arg);
                self.atom(call.to_string(), call)
            }
        }
    }

    fn scalar_expr(q: &Q) -> Expr {
        let to_num = |b: &BigInt| Expr::num(b.to_f64().unwrap_or(f64::NAN));
        if q.is_integer() {
            to_num(q.numer())
        } else {
            Expr::div(to_num(q.numer()), to_num(q.denom()))
        }
    }

    fn mono_expr(&self, m: &Mono) -> Expr {
        m.0.iter().fold(Expr::one(), |acc, (s, k)| {
            let atom = self.atoms.get(s).cloned().unwrap_or_else(|| Expr::var(s));
            Expr::mul(acc, Expr::powi(atom, *k as i32))
        })
    }

    fn poly_expr(&self, p: &Poly) -> Expr {
        let mut terms: Vec<(&Mono, &Q)> = p.0.iter().collect();
        terms.sort_by(|a, b| print_order(a.0, b.0));
        let mut acc: Option<Expr> = None;
        for (m, c) in terms {
            let mono = self.mono_expr(m);
            acc = Some(match acc {
                None => {
                    if c == &-Q::one() && !m.0.is_empty() {
                        Expr::neg(mono)
                    } else {
                        Expr::mul(Self::scalar_expr(c), mono)
                    }
                }
                Some(sum) => {
                    let term = Expr::mul(Self::scalar_expr(&c.abs()), mono);
                    if c.is_negative() {
                        Expr::sub(sum, term)
                    } else {
                        Expr::add(sum, term)
                    }
                }
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }

    fn to_expr(&self, f: &Frac) -> Expr {
        let num = self.poly_expr(&f.num);
        if f.den.is_one() {
            num
        } else {
            Expr::div(num, self.poly_expr(&f.den))
        }
    }
}

/// Bring an expression to canonical rational normal form.
pub fn normalize(e: &Expr) -> Expr {
    normalize_guarded(e).0
}

/// Normal form together with the non-constant denominators met on the way.
/// Denominators cancelled by the reduction are still reported: the
/// original expression is undefined on their zero sets.
pub fn normalize_guarded(e: &Expr) -> (Expr, Vec<Expr>) {
    let mut n = Normalizer {
        atoms: BTreeMap::new(),
        guards: Vec::new(),
    };
    let f = n.convert(e);
    let out = n.to_expr(&f);
    (out, n.guards)
}

/// [`normalize_guarded`] under a work limit, counted in coefficient
/// multiplications. `None` when the limit is reached before a canonical
/// form is found.
pub fn normalize_bounded(e: &Expr, limit: u64) -> Option<(Expr, Vec<Expr>)> {
    let _scope = BudgetScope::new(limit);
    let out = normalize_guarded(e);
    (!exhausted()).then_some(out)
}
