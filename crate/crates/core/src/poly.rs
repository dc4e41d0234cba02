//! Sparse multivariate polynomials over a [`Field`], with orders along
//! coordinate subspaces, Hasse-Schmidt derivatives, substitution and graded
//! parts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{Elem, Field, LAMBDA};

pub type Mono = Vec<u32>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("rings differ")]
    RingMismatch,
    #[error("polynomial is not in M^{0} at the origin")]
    BelowOrder(String),
    #[error("no (u;y) split declared")]
    NoSplit,
    #[error("parse error at offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct RingData {
    field: Field,
    names: Vec<String>,
    is_y: Vec<bool>,
}

/// Polynomial ring over a field with ordered variables and an optional split
/// of the variables into `(u; y)`.
#[derive(Clone, Debug)]
pub struct Ring(Arc<RingData>);

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for Ring {}

impl Ring {
    pub fn new<S: AsRef<str>>(field: Field, names: &[S]) -> Result<Ring, PolyError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PolyError::DuplicateVariable(n.clone()));
            }
        }
        let is_y = vec![false; names.len()];
        Ok(Ring(Arc::new(RingData { field, names, is_y })))
    }

    /// Same variables with the given names declared as the `y` part.
    pub fn with_split<S: AsRef<str>>(&self, y: &[S]) -> Result<Ring, PolyError> {
        let mut is_y = vec![false; self.nvars()];
        for s in y {
            let i = self.index(s.as_ref())?;
            is_y[i] = true;
        }
        Ok(Ring(Arc::new(RingData { field: self.0.field, names: self.0.names.clone(), is_y })))
    }

    pub fn with_split_indices(&self, y: &[usize]) -> Ring {
        let mut is_y = vec![false; self.nvars()];
        for &i in y {
            is_y[i] = true;
        }
        Ring(Arc::new(RingData { field: self.0.field, names: self.0.names.clone(), is_y }))
    }

    pub fn field(&self) -> Field {
        self.0.field
    }

    pub fn nvars(&self) -> usize {
        self.0.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.0.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.0.names[i]
    }

    pub fn index(&self, name: &str) -> Result<usize, PolyError> {
        self.0
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))
    }

    pub fn has_split(&self) -> bool {
        self.0.is_y.iter().any(|&b| b)
    }

    pub fn is_y(&self, i: usize) -> bool {
        self.0.is_y[i]
    }

    pub fn y_indices(&self) -> Vec<usize> {
        (0..self.nvars()).filter(|&i| self.0.is_y[i]).collect()
    }

    pub fn u_indices(&self) -> Vec<usize> {
        (0..self.nvars()).filter(|&i| !self.0.is_y[i]).collect()
    }

    /// Ring on the same field with new variable names and no split.
    pub fn renamed<S: AsRef<str>>(&self, names: &[S]) -> Result<Ring, PolyError> {
        Ring::new(self.field(), names)
    }

    /// Graded ring with uppercase copies of the variable names.
    pub fn graded(&self) -> Ring {
        let names: Vec<String> = self.names().iter().map(|n| n.to_uppercase()).collect();
        Ring::new(self.field(), &names).unwrap_or_else(|_| {
            let names: Vec<String> = self.names().iter().map(|n| format!("{}_", n.to_uppercase())).collect();
            Ring::new(self.field(), &names).expect("graded names")
        })
    }

    pub fn zero(&self) -> Poly {
        Poly { ring: self.clone(), terms: BTreeMap::new() }
    }

    pub fn one(&self) -> Poly {
        self.constant(self.field().one())
    }

    pub fn constant(&self, c: Elem) -> Poly {
        self.monomial(vec![0; self.nvars()], c)
    }

    pub fn int(&self, n: i64) -> Poly {
        self.constant(self.field().from_i64(n))
    }

    pub fn monomial(&self, exps: Mono, c: Elem) -> Poly {
        assert_eq!(exps.len(), self.nvars());
        let mut terms = BTreeMap::new();
        if !self.field().is_zero(&c) {
            terms.insert(exps, c);
        }
        Poly { ring: self.clone(), terms }
    }

    pub fn var(&self, i: usize) -> Poly {
        let mut e = vec![0; self.nvars()];
        e[i] = 1;
        self.monomial(e, self.field().one())
    }

    pub fn var_named(&self, name: &str) -> Result<Poly, PolyError> {
        Ok(self.var(self.index(name)?))
    }

    pub fn parse(&self, text: &str) -> Result<Poly, PolyError> {
        let mut p = Parser { ring: self, s: text.as_bytes(), pos: 0 };
        let r = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(r)
    }
}

/// Sparse polynomial: exponent vectors mapped to nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    ring: Ring,
    terms: BTreeMap<Mono, Elem>,
}

fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    r
}

/// Binomial coefficient of exponent vectors, as an element of the field.
pub fn binomial_vec(field: Field, b: &[u32], n: &[u32]) -> Elem {
    let mut acc = BigUint::one();
    for (&bi, &ni) in b.iter().zip(n) {
        if ni > bi {
            return field.zero();
        }
        acc *= binomial(bi, ni);
    }
    field.from_bigint(&BigInt::from(acc))
}

/// Result of expanding a polynomial in the `y` variables up to a bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    /// `y`-exponent `B` (in the order of `Ring::y_indices`) to `f_B(u)`.
    pub coeffs: BTreeMap<Vec<u32>, Poly>,
    /// Terms of `y`-degree at least the bound.
    pub remainder: Poly,
    pub bound: u32,
}

impl Poly {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn field(&self) -> Field {
        self.ring.field()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Elem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn from_terms(ring: &Ring, terms: impl IntoIterator<Item = (Mono, Elem)>) -> Poly {
        let k = ring.field();
        let mut map: BTreeMap<Mono, Elem> = BTreeMap::new();
        for (m, c) in terms {
            match map.get_mut(&m) {
                Some(v) => *v = k.add(v, &c),
                None => {
                    map.insert(m, c);
                }
            }
        }
        map.retain(|_, c| !k.is_zero(c));
        Poly { ring: ring.clone(), terms: map }
    }

    pub fn coeff(&self, m: &[u32]) -> Elem {
        self.terms.get(m).cloned().unwrap_or_else(|| self.field().zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&e| e == 0))
    }

    pub fn constant_term(&self) -> Elem {
        self.coeff(&vec![0; self.ring.nvars()])
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut d = None;
        for m in self.terms.keys() {
            let s: u32 = m.iter().sum();
            match d {
                None => d = Some(s),
                Some(x) if x != s => return false,
                _ => {}
            }
        }
        true
    }

    /// Variables that occur in some term.
    pub fn support_vars(&self) -> Vec<usize> {
        (0..self.ring.nvars()).filter(|&i| self.terms.keys().any(|m| m[i] > 0)).collect()
    }

    fn check(&self, other: &Poly) {
        assert!(self.ring == other.ring, "polynomials from different rings");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check(other);
        let k = self.field();
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            match terms.get_mut(m) {
                Some(v) => {
                    *v = k.add(v, c);
                    if k.is_zero(v) {
                        terms.remove(m);
                    }
                }
                None => {
                    terms.insert(m.clone(), c.clone());
                }
            }
        }
        Poly { ring: self.ring.clone(), terms }
    }

    pub fn neg(&self) -> Poly {
        let k = self.field();
        Poly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), k.neg(c))).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Elem) -> Poly {
        let k = self.field();
        if k.is_zero(c) {
            return self.ring.zero();
        }
        Poly { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, x)| (m.clone(), k.mul(x, c))).collect() }
    }

    pub fn mul_monomial(&self, mono: &[u32], c: &Elem) -> Poly {
        let k = self.field();
        if k.is_zero(c) {
            return self.ring.zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(m, x)| (m.iter().zip(mono).map(|(a, b)| a + b).collect(), k.mul(x, c)))
            .collect();
        Poly { ring: self.ring.clone(), terms }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check(other);
        let k = self.field();
        let mut terms: HashMap<Mono, Elem> = HashMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Mono = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                let c = k.mul(c1, c2);
                match terms.get_mut(&m) {
                    Some(v) => *v = k.add(v, &c),
                    None => {
                        terms.insert(m, c);
                    }
                }
            }
        }
        let terms = terms.into_iter().filter(|(_, c)| !k.is_zero(c)).collect();
        Poly { ring: self.ring.clone(), terms }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut r = self.ring.one();
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// Divide by the monomial `x^mono`; `None` unless every term is divisible.
    pub fn div_monomial(&self, mono: &[u32]) -> Option<Poly> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.iter().zip(mono).any(|(a, b)| a < b) {
                return None;
            }
            terms.insert(m.iter().zip(mono).map(|(a, b)| a - b).collect(), c.clone());
        }
        Some(Poly { ring: self.ring.clone(), terms })
    }

    /// Make the coefficient of the largest term (in printing order) one.
    pub fn monic(&self) -> Poly {
        match self.sorted_terms().first() {
            None => self.clone(),
            Some((_, c)) => self.scale(&self.field().inv(c).expect("nonzero")),
        }
    }

    /// Minimal total degree of a term; `None` for zero (infinite order).
    pub fn order_at_origin(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).min()
    }

    /// Order along the prime generated by the variables in `vars`.
    pub fn order_along(&self, vars: &[usize]) -> Option<u32> {
        self.terms.keys().map(|m| vars.iter().map(|&i| m[i]).sum()).min()
    }

    pub fn homogeneous_part(&self, d: u32) -> Poly {
        let terms = self.terms.iter().filter(|(m, _)| m.iter().sum::<u32>() == d).map(|(m, c)| (m.clone(), c.clone())).collect();
        Poly { ring: self.ring.clone(), terms }
    }

    /// Terms of total degree at least `d`.
    pub fn part_from_degree(&self, d: u32) -> Poly {
        let terms = self.terms.iter().filter(|(m, _)| m.iter().sum::<u32>() >= d).map(|(m, c)| (m.clone(), c.clone())).collect();
        Poly { ring: self.ring.clone(), terms }
    }

    /// The `b`-initial form at the origin. Zero when `b` is not an integer
    /// or when the order exceeds `b`.
    pub fn initial_form(&self, b: &BigRational) -> Result<Poly, PolyError> {
        if let Some(o) = self.order_at_origin() {
            if BigRational::from_integer(BigInt::from(o)) < *b {
                return Err(PolyError::BelowOrder(b.to_string()));
            }
        }
        if !b.is_integer() {
            return Ok(self.ring.zero());
        }
        let d = b.to_integer().to_u32().expect("weight fits in u32");
        Ok(self.homogeneous_part(d))
    }

    /// Hasse-Schmidt derivative with respect to `W^n`.
    pub fn hasse(&self, n: &[u32]) -> Poly {
        let k = self.field();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.iter().zip(n).any(|(a, b)| b > a) {
                continue;
            }
            let bin = binomial_vec(k, m, n);
            if k.is_zero(&bin) {
                continue;
            }
            terms.insert(m.iter().zip(n).map(|(a, b)| a - b).collect(), k.mul(c, &bin));
        }
        Poly { ring: self.ring.clone(), terms }
    }

    /// Substitute `images[i]` for variable `i`; images live in `target`.
    pub fn substitute(&self, target: &Ring, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.ring.nvars());
        let mut cache: HashMap<(usize, u32), Poly> = HashMap::new();
        let mut acc: HashMap<Mono, Elem> = HashMap::new();
        let k = target.field();
        for (m, c) in &self.terms {
            let mut t = target.constant(c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let pw = cache.entry((i, e)).or_insert_with(|| images[i].pow(e)).clone();
                t = t.mul(&pw);
            }
            for (mm, cc) in t.terms {
                match acc.get_mut(&mm) {
                    Some(v) => *v = k.add(v, &cc),
                    None => {
                        acc.insert(mm, cc);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !k.is_zero(c)).collect();
        Poly { ring: target.clone(), terms }
    }

    /// Substitute named variables within the same ring; others stay fixed.
    pub fn substitute_named(&self, map: &[(&str, Poly)]) -> Result<Poly, PolyError> {
        let mut images: Vec<Poly> = (0..self.ring.nvars()).map(|i| self.ring.var(i)).collect();
        for (name, img) in map {
            let i = self.ring.index(name)?;
            if img.ring != self.ring {
                return Err(PolyError::RingMismatch);
            }
            images[i] = img.clone();
        }
        Ok(self.substitute(&self.ring, &images))
    }

    /// Move into another ring by matching variable names.
    pub fn to_ring(&self, target: &Ring) -> Result<Poly, PolyError> {
        if self.field() != target.field() {
            return Err(PolyError::RingMismatch);
        }
        let mut pos = Vec::with_capacity(self.ring.nvars());
        for (i, n) in self.ring.names().iter().enumerate() {
            match target.index(n) {
                Ok(j) => pos.push(Some(j)),
                Err(e) => {
                    if self.terms.keys().any(|m| m[i] > 0) {
                        return Err(e);
                    }
                    pos.push(None);
                }
            }
        }
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = vec![0; target.nvars()];
            for (i, &x) in m.iter().enumerate() {
                if let Some(j) = pos[i] {
                    e[j] = x;
                }
            }
            (e, c.clone())
        });
        Ok(Poly::from_terms(target, terms))
    }

    /// Same exponent data viewed in a ring with the same number of variables.
    pub fn reinterpret(&self, target: &Ring) -> Poly {
        assert_eq!(self.ring.nvars(), target.nvars());
        assert_eq!(self.field(), target.field());
        Poly { ring: target.clone(), terms: self.terms.clone() }
    }

    /// `f = sum_{|B| < b} f_B(u) y^B + h` with `h` in `<y>^ceil(b)`.
    pub fn coefficient_expansion(&self, b: &BigRational) -> Result<Expansion, PolyError> {
        if !self.ring.has_split() {
            return Err(PolyError::NoSplit);
        }
        let ys = self.ring.y_indices();
        let bound = b.ceil().to_integer().to_u32().expect("weight fits in u32");
        let mut coeffs: BTreeMap<Vec<u32>, BTreeMap<Mono, Elem>> = BTreeMap::new();
        let mut rem = BTreeMap::new();
        for (m, c) in &self.terms {
            let bexp: Vec<u32> = ys.iter().map(|&i| m[i]).collect();
            if bexp.iter().sum::<u32>() >= bound {
                rem.insert(m.clone(), c.clone());
            } else {
                let mut um = m.clone();
                for &i in &ys {
                    um[i] = 0;
                }
                coeffs.entry(bexp).or_default().insert(um, c.clone());
            }
        }
        let coeffs = coeffs.into_iter().map(|(k, t)| (k, Poly { ring: self.ring.clone(), terms: t })).collect();
        Ok(Expansion { coeffs, remainder: Poly { ring: self.ring.clone(), terms: rem }, bound })
    }

    /// Whether the polynomial is a p-th power, returning the root.
    pub fn pth_root(&self) -> Option<Poly> {
        let k = self.field();
        let p = k.characteristic();
        if p == 0 {
            return None;
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.iter().any(|&e| e as u64 % p != 0) {
                return None;
            }
            let r = k.pth_root(c).ok()??;
            terms.insert(m.iter().map(|&e| e / p as u32).collect(), r);
        }
        Some(Poly { ring: self.ring.clone(), terms })
    }

    /// Terms in printing order: descending total degree, then descending
    /// lexicographic order of exponents.
    pub fn sorted_terms(&self) -> Vec<(&Mono, &Elem)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        v
    }

    fn format_mono(&self, m: &[u32]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in m.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(self.ring.name(i).to_string()),
                _ => parts.push(format!("{}^{}", self.ring.name(i), e)),
            }
        }
        parts.join("*")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let k = self.field();
        let mut out = String::new();
        for (idx, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let mono = self.format_mono(m);
            let neg = k.is_negative(c);
            let abs = if neg { k.neg(c) } else { c.clone() };
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let cs = k.format(&abs);
            if mono.is_empty() {
                if k.is_atomic(&abs) {
                    out.push_str(&cs);
                } else {
                    out.push_str(&format!("({})", cs));
                }
            } else if k.is_one(&abs) {
                out.push_str(&mono);
            } else if k.is_atomic(&abs) {
                out.push_str(&format!("{}*{}", cs, mono));
            } else {
                out.push_str(&format!("({})*{}", cs, mono));
            }
        }
        write!(f, "{}", out)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}
impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}
impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}
impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(self)
    }
}

struct Parser<'a> {
    ring: &'a Ring,
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse { offset: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.power()?;
                    if !d.is_constant() || d.is_zero() {
                        self.pos = at;
                        return Err(self.err("division only by nonzero constants"));
                    }
                    let inv = self.ring.field().inv(&d.constant_term()).map_err(|e| self.err(&e.to_string()))?;
                    acc = acc.scale(&inv);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.ws();
            let e = self.number()?;
            let e = e.to_u32().ok_or_else(|| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<BigInt, PolyError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let t = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(t.parse().unwrap())
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                Ok(self.ring.constant(self.ring.field().from_bigint(&n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len() {
                    let c = self.s[self.pos];
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                if let Ok(i) = self.ring.index(name) {
                    return Ok(self.ring.var(i));
                }
                if name == LAMBDA {
                    if let Some(l) = self.ring.field().lambda() {
                        return Ok(self.ring.constant(l));
                    }
                }
                self.pos = start;
                Err(self.err(&format!("unknown variable `{}`", name)))
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// `ceil` of a positive rational as `u32`.
pub fn ceil_u32(b: &BigRational) -> u32 {
    b.ceil().to_integer().to_u32().expect("weight fits in u32")
}

/// Convenience constructor for rationals.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as rational.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qring(names: &[&str]) -> Ring {
        Ring::new(Field::Rational, names).unwrap()
    }

    #[test]
    fn parse_and_print_roundtrip() {
        let r = qring(&["x", "y", "z"]);
        let f = r.parse("x^3 - y^3*z^2").unwrap();
        assert_eq!(f.to_string(), "-y^3*z^2 + x^3");
        assert_eq!(r.parse(&f.to_string()).unwrap(), f);
        let g = r.parse("(x+y)^2/2 - 1/3").unwrap();
        assert_eq!(r.parse(&g.to_string()).unwrap(), g);
        assert!(matches!(r.parse("x + w"), Err(PolyError::Parse { offset: 4, .. })));
        let k = Field::rational_function(2).unwrap();
        let rl = Ring::new(k, &["x", "y"]).unwrap();
        let h = rl.parse("(lam^2+1)/lam*x + lam*y^2").unwrap();
        assert_eq!(rl.parse(&h.to_string()).unwrap(), h);
    }

    #[test]
    fn orders() {
        let r = qring(&["x", "y", "z"]);
        let f = r.parse("x^3 - y^3*z^2").unwrap();
        assert_eq!(f.order_at_origin(), Some(3));
        assert_eq!(r.zero().order_at_origin(), None);
        assert_eq!(f.order_along(&[0, 2]), Some(2));
        assert_eq!(f.order_along(&[0, 1]), Some(3));
        assert_eq!(f.order_along(&[0, 1, 2]), f.order_at_origin());
    }

    #[test]
    fn order_of_high_power_example() {
        // y^{p^2+1} + z^{2p^2+1} + h with h in <u>^{2p^2+2}, p = 2
        let r = Ring::new(Field::Prime(2), &["y", "z", "u1", "u2"]).unwrap();
        let f = r.parse("y^5 + z^9 + u1^10 + u1^3*u2^7").unwrap();
        assert_eq!(f.order_at_origin(), Some(5));
    }

    #[test]
    fn hasse_derivatives() {
        let r = Ring::new(Field::Prime(2), &["X", "Y"]).unwrap();
        let f = r.parse("X*Y^4").unwrap();
        assert_eq!(f.hasse(&[0, 4]), r.parse("X").unwrap());
        assert!(f.hasse(&[2, 4]).is_zero());
        let q = qring(&["y", "z"]);
        let g = q.parse("y^3 + 3*y^2*z").unwrap();
        assert_eq!(g.hasse(&[2, 0]), q.parse("3*y + 3*z").unwrap());
    }

    #[test]
    fn substitution_examples() {
        let r = qring(&["w", "z"]);
        let f = r.parse("w^3 + 3*w^2*z + 3*w*z^2 + z^3 + z^5").unwrap();
        let g = f.substitute_named(&[("w", r.parse("w - z").unwrap())]).unwrap();
        assert_eq!(g, r.parse("w^3 + z^5").unwrap());
        assert_eq!(f.substitute_named(&[]).unwrap(), f);
        let s = qring(&["x", "y", "z"]);
        let h = s.parse("x^3 - y^3*z^2").unwrap();
        let t = h.substitute_named(&[("x", s.parse("x*y").unwrap())]).unwrap();
        assert_eq!(t, s.parse("y^3*(x^3 - z^2)").unwrap());
        assert!(matches!(h.substitute_named(&[("q", s.one())]), Err(PolyError::UnknownVariable(_))));
    }

    #[test]
    fn initial_forms() {
        let p = 2i64;
        let r = Ring::new(Field::Prime(2), &["x", "y", "z", "t", "u", "v"]).unwrap();
        let f1 = r.parse("x*y^4 - x*t^3*u^4").unwrap();
        let f3 = r.parse("t^6 - u^5*v").unwrap();
        let b = int(p * p + 1);
        assert!(f3.initial_form(&b).unwrap().is_zero());
        assert_eq!(f1.initial_form(&b).unwrap(), r.parse("x*y^4").unwrap());
        assert!(f1.initial_form(&rat(3, 2)).unwrap().is_zero());
        assert!(r.parse("x").unwrap().initial_form(&int(2)).is_err());
    }

    #[test]
    fn expansions() {
        let r = qring(&["y", "z", "x"]).with_split(&["x"]).unwrap();
        let g = "y^3 + 3*y^2*z + 3*y*z^2 + z^3 + z^5";
        let f = r.parse(&format!("x^2 + {}", g)).unwrap();
        let e = f.coefficient_expansion(&int(2)).unwrap();
        assert_eq!(e.coeffs.get(&vec![0]).unwrap(), &r.parse(g).unwrap());
        assert!(e.coeffs.get(&vec![1]).is_none());
        assert_eq!(e.remainder, r.parse("x^2").unwrap());

        let s = qring(&["u", "y"]).with_split(&["y"]).unwrap();
        let h = s.parse("y^2*u + y*u^3 + u^7").unwrap();
        let e = h.coefficient_expansion(&int(2)).unwrap();
        // independent route: peel off y by repeated division
        let f0 = h.substitute_named(&[("y", s.zero())]).unwrap();
        let rest = h.sub(&f0).div_monomial(&[0, 1]).unwrap();
        let f1 = rest.substitute_named(&[("y", s.zero())]).unwrap();
        assert_eq!(f0, s.parse("u^7").unwrap());
        assert_eq!(f1, s.parse("u^3").unwrap());
        assert_eq!(e.coeffs.get(&vec![0]).unwrap(), &f0);
        assert_eq!(e.coeffs.get(&vec![1]).unwrap(), &f1);

        let in_y = s.parse("y^2*u + y^3").unwrap();
        assert!(in_y.coefficient_expansion(&int(2)).unwrap().coeffs.is_empty());
    }

    fn small_poly(r: Ring) -> impl Strategy<Value = Poly> {
        let n = r.nvars();
        prop::collection::vec((prop::collection::vec(0u32..4, n), -3i64..4), 0..5)
            .prop_map(move |ts| Poly::from_terms(&r, ts.into_iter().map(|(m, c)| (m, r.field().from_i64(c)))))
    }

    proptest! {
        #[test]
        fn hasse_composition(b in prop::collection::vec(0u32..7, 3), n in prop::collection::vec(0u32..3, 3), m in prop::collection::vec(0u32..3, 3), p in prop::sample::select(vec![0u64, 2, 3])) {
            let k = if p == 0 { Field::Rational } else { Field::Prime(p) };
            let r = Ring::new(k, &["a", "b", "c"]).unwrap();
            let f = r.monomial(b, k.one());
            let lhs = f.hasse(&m).hasse(&n);
            let nm: Vec<u32> = n.iter().zip(&m).map(|(x, y)| x + y).collect();
            let rhs = f.hasse(&nm).scale(&binomial_vec(k, &nm, &n));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn order_is_additive(f in small_poly(qring(&["a", "b", "c"])), g in small_poly(qring(&["a", "b", "c"]))) {
            let o = match (f.order_at_origin(), g.order_at_origin()) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
            prop_assert_eq!(f.mul(&g).order_at_origin(), o);
        }

        #[test]
        fn expansion_reassembles(f in small_poly(qring(&["a", "b", "c"])), b in 1i64..5) {
            let r = f.ring().with_split(&["b", "c"]).unwrap();
            let f = f.reinterpret(&r);
            let e = f.coefficient_expansion(&int(b)).unwrap();
            let mut s = e.remainder.clone();
            for (bexp, c) in &e.coeffs {
                prop_assert!(bexp.iter().sum::<u32>() < b as u32);
                prop_assert!(c.order_along(&[1, 2]) == Some(0));
                s = s.add(&c.mul_monomial(&[0, bexp[0], bexp[1]], &r.field().one()));
            }
            prop_assert_eq!(s, f);
        }

        #[test]
        fn initial_form_at_order_is_homogeneous(f in small_poly(qring(&["a", "b", "c"]))) {
            if let Some(o) = f.order_at_origin() {
                let inf = f.initial_form(&int(o as i64)).unwrap();
                prop_assert!(!inf.is_zero());
                prop_assert!(inf.is_homogeneous());
            }
        }
    }
}
