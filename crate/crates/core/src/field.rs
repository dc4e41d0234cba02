//! Coefficient fields: the rationals, prime fields and the rational function
//! field `F_p(lam)` in one transcendental parameter.
//!
//! Elements do not carry their field. All arithmetic goes through a [`Field`]
//! descriptor; [`FieldElement`] pairs the two when a checked API is wanted.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Name of the transcendental parameter of `F_p(lam)` in text syntax.
pub const LAMBDA: &str = "lam";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field descriptor mismatch: {0} vs {1}")]
    DescriptorMismatch(Field, Field),
    #[error("operation needs positive characteristic")]
    CharacteristicZero,
    #[error("{0} is not a prime")]
    NotPrime(u64),
}

/// Field descriptor. The characteristic lives here, not on elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Rational,
    Prime(u64),
    /// `F_p(lam)`.
    RationalFunction(u64),
}

/// Raw element; meaningful only together with its [`Field`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Elem {
    Q(BigRational),
    P(u64),
    /// Reduced fraction of dense polynomials in `lam` (low degree first).
    /// The denominator is monic; zero is `[] / [1]`.
    F(Vec<u64>, Vec<u64>),
}

/// An element together with its field, for checked arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    pub field: Field,
    pub value: Elem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked arithmetic on field elements.
pub fn arith(a: &FieldElement, b: &FieldElement, op: ArithOp) -> Result<FieldElement, FieldError> {
    if a.field != b.field {
        return Err(FieldError::DescriptorMismatch(a.field, b.field));
    }
    let k = a.field;
    let value = match op {
        ArithOp::Add => k.add(&a.value, &b.value),
        ArithOp::Sub => k.sub(&a.value, &b.value),
        ArithOp::Mul => k.mul(&a.value, &b.value),
        ArithOp::Div => k.div(&a.value, &b.value)?,
    };
    Ok(FieldElement { field: k, value })
}

impl FieldElement {
    pub fn new(field: Field, value: Elem) -> Self {
        FieldElement { field, value }
    }

    pub fn pth_root(&self) -> Result<Option<FieldElement>, FieldError> {
        Ok(self.field.pth_root(&self.value)?.map(|v| FieldElement::new(self.field, v)))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field.format(&self.value))
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // p is prime and a != 0 mod p
    pow_mod(a, p - 2, p)
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * a as u128) % p as u128) as u64;
        }
        a = ((a as u128 * a as u128) % p as u128) as u64;
        e >>= 1;
    }
    r
}

// Dense polynomials over F_p, low degree first, no trailing zeros.
mod up {
    use super::{inv_mod, pow_mod};

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn add(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let r = (0..n)
            .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
            .collect();
        trim(r)
    }

    pub fn neg(a: &[u64], p: u64) -> Vec<u64> {
        a.iter().map(|&c| (p - c) % p).collect()
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut r = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = ((r[i + j] as u128 + x as u128 * y as u128) % p as u128) as u64;
            }
        }
        trim(r)
    }

    pub fn scale(a: &[u64], c: u64, p: u64) -> Vec<u64> {
        trim(a.iter().map(|&x| ((x as u128 * c as u128) % p as u128) as u64).collect())
    }

    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let mut r = a.to_vec();
        if a.len() < b.len() {
            return (Vec::new(), r);
        }
        let db = b.len() - 1;
        let inv = inv_mod(*b.last().unwrap(), p);
        let mut q = vec![0u64; a.len() - db];
        for i in (0..q.len()).rev() {
            let c = ((r[i + db] as u128 * inv as u128) % p as u128) as u64;
            q[i] = c;
            if c == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                let t = ((c as u128 * y as u128) % p as u128) as u64;
                r[i + j] = (r[i + j] + p - t) % p;
            }
        }
        (trim(q), trim(r))
    }

    pub fn monic(a: &[u64], p: u64) -> Vec<u64> {
        match a.last() {
            None => Vec::new(),
            Some(&l) => scale(a, inv_mod(l, p), p),
        }
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !y.is_empty() {
            let (_, r) = divrem(&x, &y, p);
            x = y;
            y = r;
        }
        monic(&x, p)
    }

    pub fn pow(a: &[u64], mut e: u64, p: u64) -> Vec<u64> {
        let mut r = vec![1];
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = mul(&r, &b, p);
            }
            b = mul(&b, &b, p);
            e >>= 1;
        }
        r
    }

    #[allow(dead_code)]
    pub fn eval(a: &[u64], x: u64, p: u64) -> u64 {
        a.iter().enumerate().fold(0, |acc, (i, &c)| {
            (acc + ((c as u128 * pow_mod(x, i as u64, p) as u128) % p as u128) as u64) % p
        })
    }
}

impl Field {
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        if is_prime(p) {
            Ok(Field::Prime(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn rational_function(p: u64) -> Result<Field, FieldError> {
        if is_prime(p) {
            Ok(Field::RationalFunction(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match *self {
            Field::Rational => 0,
            Field::Prime(p) | Field::RationalFunction(p) => p,
        }
    }

    pub fn is_perfect(&self) -> bool {
        !matches!(self, Field::RationalFunction(_))
    }

    pub fn zero(&self) -> Elem {
        match self {
            Field::Rational => Elem::Q(BigRational::zero()),
            Field::Prime(_) => Elem::P(0),
            Field::RationalFunction(_) => Elem::F(Vec::new(), vec![1]),
        }
    }

    pub fn one(&self) -> Elem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Elem {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> Elem {
        match *self {
            Field::Rational => Elem::Q(BigRational::from_integer(n.clone())),
            Field::Prime(p) => Elem::P(n.mod_floor(&BigInt::from(p)).to_u64().unwrap()),
            Field::RationalFunction(p) => {
                let c = n.mod_floor(&BigInt::from(p)).to_u64().unwrap();
                Elem::F(up::trim(vec![c]), vec![1])
            }
        }
    }

    /// Image of the integer `num/den`; fails if `den` vanishes in the field.
    pub fn from_ratio(&self, num: &BigInt, den: &BigInt) -> Result<Elem, FieldError> {
        let d = self.from_bigint(den);
        self.div(&self.from_bigint(num), &d)
    }

    /// The parameter `lam` of `F_p(lam)`; `None` for other fields.
    pub fn lambda(&self) -> Option<Elem> {
        match self {
            Field::RationalFunction(_) => Some(Elem::F(vec![0, 1], vec![1])),
            _ => None,
        }
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        match a {
            Elem::Q(q) => q.is_zero(),
            Elem::P(v) => *v == 0,
            Elem::F(n, _) => n.is_empty(),
        }
    }

    pub fn is_one(&self, a: &Elem) -> bool {
        *a == self.one()
    }

    fn p(&self) -> u64 {
        self.characteristic()
    }

    fn norm_frac(&self, n: Vec<u64>, d: Vec<u64>) -> Elem {
        let p = self.p();
        let n = up::trim(n);
        if n.is_empty() {
            return self.zero();
        }
        let g = up::gcd(&n, &d, p);
        let (n, _) = up::divrem(&n, &g, p);
        let (d, _) = up::divrem(&d, &g, p);
        let l = inv_mod(*d.last().unwrap(), p);
        Elem::F(up::scale(&n, l, p), up::scale(&d, l, p))
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Q(x), Elem::Q(y)) => Elem::Q(x + y),
            (Elem::P(x), Elem::P(y)) => Elem::P((x + y) % self.p()),
            (Elem::F(n1, d1), Elem::F(n2, d2)) => {
                let p = self.p();
                if d1 == d2 {
                    return self.norm_frac(up::add(n1, n2, p), d1.clone());
                }
                let n = up::add(&up::mul(n1, d2, p), &up::mul(n2, d1, p), p);
                self.norm_frac(n, up::mul(d1, d2, p))
            }
            _ => panic!("field element variant mismatch"),
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match a {
            Elem::Q(x) => Elem::Q(-x),
            Elem::P(x) => Elem::P((self.p() - x) % self.p()),
            Elem::F(n, d) => Elem::F(up::neg(n, self.p()), d.clone()),
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Q(x), Elem::Q(y)) => Elem::Q(x * y),
            (Elem::P(x), Elem::P(y)) => Elem::P(((*x as u128 * *y as u128) % self.p() as u128) as u64),
            (Elem::F(n1, d1), Elem::F(n2, d2)) => {
                let p = self.p();
                if n1.is_empty() || n2.is_empty() {
                    return self.zero();
                }
                if d1.len() == 1 && d2.len() == 1 {
                    return Elem::F(up::mul(n1, n2, p), vec![1]);
                }
                self.norm_frac(up::mul(n1, n2, p), up::mul(d1, d2, p))
            }
            _ => panic!("field element variant mismatch"),
        }
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match a {
            Elem::Q(x) => Elem::Q(x.recip()),
            Elem::P(x) => Elem::P(inv_mod(*x, self.p())),
            Elem::F(n, d) => self.norm_frac(d.clone(), n.clone()),
        })
    }

    pub fn div(&self, a: &Elem, b: &Elem) -> Result<Elem, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &Elem, mut e: u64) -> Elem {
        let mut r = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    /// `r` with `r^p = a`, or `None` when `a` is not a p-th power.
    pub fn pth_root(&self, a: &Elem) -> Result<Option<Elem>, FieldError> {
        match (self, a) {
            (Field::Rational, _) => Err(FieldError::CharacteristicZero),
            (Field::Prime(_), _) => Ok(Some(a.clone())),
            (Field::RationalFunction(p), Elem::F(n, d)) => {
                let p = *p as usize;
                let root = |v: &Vec<u64>| -> Option<Vec<u64>> {
                    if v.iter().enumerate().any(|(i, &c)| c != 0 && i % p != 0) {
                        return None;
                    }
                    Some(v.iter().step_by(p).copied().collect())
                };
                match (root(n), root(d)) {
                    (Some(rn), Some(rd)) => Ok(Some(Elem::F(rn, rd))),
                    _ => Ok(None),
                }
            }
            _ => panic!("field element variant mismatch"),
        }
    }

    /// Decomposition `a = sum_{i<q} c_i^q lam^i` over the p-basis `{lam}`,
    /// where `q` is a power of the characteristic. Perfect fields return `[a]`.
    pub fn p_basis(&self, a: &Elem, q: u64) -> Result<Vec<Elem>, FieldError> {
        match (self, a) {
            (Field::Rational, _) => Err(FieldError::CharacteristicZero),
            (Field::Prime(_), _) => Ok(vec![a.clone()]),
            (Field::RationalFunction(p), Elem::F(n, d)) => {
                let q = q as usize;
                let num = up::mul(n, &up::pow(d, q as u64 - 1, *p), *p);
                let mut parts = vec![Vec::new(); q];
                for (e, &c) in num.iter().enumerate() {
                    if c != 0 {
                        let part: &mut Vec<u64> = &mut parts[e % q];
                        let k = e / q;
                        if part.len() <= k {
                            part.resize(k + 1, 0);
                        }
                        part[k] = c;
                    }
                }
                Ok(parts.into_iter().map(|c| self.norm_frac(c, d.clone())).collect())
            }
            _ => panic!("field element variant mismatch"),
        }
    }

    /// Symmetric integer representative of a prime-field element.
    fn sym(&self, v: u64) -> i64 {
        let p = self.p();
        if v > p / 2 {
            v as i64 - p as i64
        } else {
            v as i64
        }
    }

    /// Whether the printed form begins with a minus sign.
    pub fn is_negative(&self, a: &Elem) -> bool {
        match a {
            Elem::Q(x) => x.is_negative(),
            Elem::P(v) => self.sym(*v) < 0,
            Elem::F(n, d) => d.len() == 1 && n.len() == 1 && self.sym(n[0]) < 0,
        }
    }

    /// Whether the printed form is a single token that needs no brackets
    /// when used as a factor.
    pub fn is_atomic(&self, a: &Elem) -> bool {
        match a {
            Elem::Q(x) => x.is_integer(),
            Elem::P(_) => true,
            Elem::F(n, d) => d.len() == 1 && n.iter().filter(|&&c| c != 0).count() <= 1,
        }
    }

    pub fn format(&self, a: &Elem) -> String {
        match a {
            Elem::Q(x) => {
                if x.is_integer() {
                    x.numer().to_string()
                } else {
                    format!("{}/{}", x.numer(), x.denom())
                }
            }
            Elem::P(v) => self.sym(*v).to_string(),
            Elem::F(n, d) => {
                let ns = self.format_lam_poly(n);
                if d.len() == 1 {
                    ns
                } else {
                    let ds = self.format_lam_poly(d);
                    let nw = if n.iter().filter(|&&c| c != 0).count() > 1 { format!("({})", ns) } else { ns };
                    let dw = if d.iter().filter(|&&c| c != 0).count() > 1 || d.len() > 2 && d[d.len() - 1] != 1 {
                        format!("({})", ds)
                    } else {
                        ds
                    };
                    format!("{}/{}", nw, dw)
                }
            }
        }
    }

    fn format_lam_poly(&self, a: &[u64]) -> String {
        if a.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (e, &c) in a.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let c = self.sym(c);
            let neg = c < 0;
            let c = c.unsigned_abs();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mon = match e {
                0 => String::new(),
                1 => LAMBDA.to_string(),
                _ => format!("{}^{}", LAMBDA, e),
            };
            if mon.is_empty() {
                s.push_str(&c.to_string());
            } else if c == 1 {
                s.push_str(&mon);
            } else {
                s.push_str(&format!("{}*{}", c, mon));
            }
        }
        s
    }

    /// Text form of the descriptor as used in ring headers.
    pub fn descriptor(&self) -> String {
        match self {
            Field::Rational => "Q".into(),
            Field::Prime(p) => format!("Fp({})", p),
            Field::RationalFunction(p) => format!("Fp({},{})", p, LAMBDA),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.descriptor())
    }
}
