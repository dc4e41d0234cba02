//! Equivalence moves with replayable certificates, coefficient pairs along
//! coordinate hypersurfaces, ridge decompositions `E ~ G & D+`, the
//! reduction classifier and truncated invariants with companion pairs.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::cone::{self, ConeError, Ridge};
use crate::linalg;
use crate::field::{Elem, FieldError};
use crate::gb;
use crate::pair::{
    exponents_up_to, ideal_order_along, ideal_power, ideal_product, var_power, Chart, Component, CoordinateChange, DivisorDef, Pair,
    PairError, PointSpec,
};
use crate::poly::{Poly, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("{mv} refused: {reason}")]
    SideCondition { mv: &'static str, reason: String },
    #[error("component index {0} out of range")]
    BadIndex(usize),
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("replay diverged: {0}")]
    Replay(String),
    #[error("cannot straighten {0} into a coordinate")]
    Straighten(String),
    #[error("boundary divisor is not a coordinate hyperplane: {0}")]
    NonCoordinateBoundary(String),
}

/// Local evidence that `Sing(J, b+1)` misses the origin: `D_n g` has a
/// nonzero constant term for the generator `g` and `|n| <= b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub gen: usize,
    pub n: Vec<u32>,
}

/// One step of an equivalence derivation. Component indices refer to the
/// pair the move is applied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// `(J, b) -> (J^a, ab)`.
    Power { comp: usize, a: u32 },
    /// `(J, b) -> (K, b/k)` when `K^k = J`.
    Root { comp: usize, k: u32, gens: Vec<Poly> },
    /// `(J1, b) & (J2, b) -> (J1 + J2, b)`, placed at the smaller index.
    SumSameWeight { first: usize, second: usize },
    /// Inverse of a sum: the first part stays in place, the others are appended.
    Split { comp: usize, parts: Vec<Vec<Poly>> },
    /// Append `(prod J_i^{a_i}, sum a_i b_i)`.
    Product { factors: Vec<(usize, u32)>, witnesses: Vec<Witness> },
    /// Drop a component contained in a product of other components whose
    /// weight is at least its own.
    Absorb { comp: usize, factors: Vec<(usize, u32)> },
    /// Append `(D_n g, b - |n|)`; needs integral `b` and `|n| < b`.
    Diff { comp: usize, gen: usize, n: Vec<u32> },
    /// Replace the generators by another basis of the same ideal.
    SameIdeal { comp: usize, gens: Vec<Poly> },
    /// `g_gen <- g_gen + sum c_k g_k`; a generator reaching zero is dropped.
    Combine { comp: usize, gen: usize, terms: Vec<(usize, Poly)> },
    Scale { comp: usize, gen: usize, by: Elem },
    /// `g_gen = unit * rest -> rest` for a polynomial unit (nonzero
    /// constant term).
    DropUnit { comp: usize, gen: usize, unit: Poly, rest: Poly },
    /// New component `i` is old component `perm[i]`.
    Reorder { perm: Vec<usize> },
    /// `(y, 1) & rest -> (y, 1) & D(rest; u; y)`, computed in the same ring.
    MaxContactSplit { comp: usize },
    /// From a certificate for `E1 ~ E2`, move `D(E1; y)` to `D(E2; y)`.
    CoeffFunctor { y: Vec<usize>, inner: Box<MoveCertificate> },
    Flatten,
}

impl Move {
    pub fn name(&self) -> &'static str {
        match self {
            Move::Power { .. } => "Power",
            Move::Root { .. } => "Root",
            Move::SumSameWeight { .. } => "SumSameWeight",
            Move::Split { .. } => "Split",
            Move::Product { .. } => "Product",
            Move::Absorb { .. } => "Absorb",
            Move::Diff { .. } => "Diff",
            Move::SameIdeal { .. } => "SameIdeal",
            Move::Combine { .. } => "Combine",
            Move::Scale { .. } => "Scale",
            Move::DropUnit { .. } => "DropUnit",
            Move::Reorder { .. } => "Reorder",
            Move::MaxContactSplit { .. } => "MaxContactSplit",
            Move::CoeffFunctor { .. } => "CoeffFunctor",
            Move::Flatten => "Flatten",
        }
    }

    /// Human-readable form with variable names from `ring`.
    pub fn describe(&self, ring: &Ring) -> String {
        let mono = |n: &[u32]| -> String {
            let m = ring.monomial(n.to_vec(), ring.field().one());
            m.to_string()
        };
        let facs = |f: &[(usize, u32)]| -> String {
            f.iter().map(|(i, a)| if *a == 1 { format!("c{i}") } else { format!("c{i}^{a}") }).collect::<Vec<_>>().join("*")
        };
        let list = |g: &[Poly]| g.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            Move::Power { comp, a } => format!("Power c{comp} ^{a}"),
            Move::Root { comp, k, gens } => format!("Root c{comp} by {k} -> <{}>", list(gens)),
            Move::SumSameWeight { first, second } => format!("SumSameWeight c{first} + c{second}"),
            Move::Split { comp, parts } => {
                let p: Vec<String> = parts.iter().map(|g| format!("<{}>", list(g))).collect();
                format!("Split c{comp} into {}", p.join(" | "))
            }
            Move::Product { factors, witnesses } => {
                let w: Vec<String> = witnesses.iter().map(|w| format!("D[{}] g{}", mono(&w.n), w.gen)).collect();
                format!("Product {} (witnesses {})", facs(factors), w.join(", "))
            }
            Move::Absorb { comp, factors } => format!("Absorb c{comp} into {}", facs(factors)),
            Move::Diff { comp, gen, n } => format!("Diff D[{}] on c{comp} g{gen}", mono(n)),
            Move::SameIdeal { comp, gens } => format!("SameIdeal c{comp} -> <{}>", list(gens)),
            Move::Combine { comp, gen, terms } => {
                let t: Vec<String> = terms.iter().map(|(k, c)| format!("({c})*g{k}")).collect();
                format!("Combine c{comp} g{gen} += {}", t.join(" + "))
            }
            Move::Scale { comp, gen, by } => format!("Scale c{comp} g{gen} by {}", ring.field().format(by)),
            Move::DropUnit { comp, gen, unit, rest } => format!("DropUnit c{comp} g{gen} = ({unit})*({rest})"),
            Move::Reorder { perm } => format!("Reorder {perm:?}"),
            Move::MaxContactSplit { comp } => format!("MaxContactSplit along c{comp}"),
            Move::CoeffFunctor { y, inner } => {
                let names: Vec<&str> = y.iter().map(|&i| ring.name(i)).collect();
                format!("CoeffFunctor along ({}) over {} inner moves", names.join(", "), inner.moves.len())
            }
            Move::Flatten => "Flatten".to_string(),
        }
    }
}

/// A source pair, a move list and the pair the moves produce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveCertificate {
    pub source: Pair,
    pub moves: Vec<Move>,
    pub target: Pair,
}

impl MoveCertificate {
    pub fn trivial(e: &Pair) -> MoveCertificate {
        MoveCertificate { source: e.clone(), moves: Vec::new(), target: e.clone() }
    }

    pub fn replay(&self) -> Result<Pair, ReduceError> {
        let mut cur = self.source.clone();
        for m in &self.moves {
            cur = step(&cur, m)?;
        }
        Ok(cur)
    }

    /// Replay and compare with the recorded target.
    pub fn verify(&self) -> Result<(), ReduceError> {
        let got = self.replay()?;
        if got != self.target {
            return Err(ReduceError::Replay(format!("expected {}, got {}", self.target, got)));
        }
        Ok(())
    }

    /// Concatenate with a certificate starting where this one ends.
    pub fn then(mut self, next: MoveCertificate) -> Result<MoveCertificate, ReduceError> {
        if next.source != self.target {
            return Err(ReduceError::Replay("certificates do not compose".into()));
        }
        self.moves.extend(next.moves);
        self.target = next.target;
        Ok(self)
    }
}

impl fmt::Display for MoveCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source: {}", self.source)?;
        let ring = self.source.ring();
        for (i, m) in self.moves.iter().enumerate() {
            writeln!(f, "{:>3}. {}", i + 1, m.describe(ring))?;
        }
        write!(f, "target: {}", self.target)
    }
}

/// Incremental certificate construction.
#[derive(Clone, Debug)]
pub struct Derivation {
    source: Pair,
    moves: Vec<Move>,
    current: Pair,
}

impl Derivation {
    pub fn new(e: &Pair) -> Derivation {
        Derivation { source: e.clone(), moves: Vec::new(), current: e.clone() }
    }

    pub fn resume(cert: MoveCertificate) -> Derivation {
        Derivation { source: cert.source, moves: cert.moves, current: cert.target }
    }

    pub fn current(&self) -> &Pair {
        &self.current
    }

    pub fn apply(&mut self, m: Move) -> Result<(), ReduceError> {
        self.current = step(&self.current, &m)?;
        self.moves.push(m);
        Ok(())
    }

    pub fn finish(self) -> MoveCertificate {
        MoveCertificate { source: self.source, moves: self.moves, target: self.current }
    }
}

/// Apply one move, returning the new pair and a one-step certificate.
pub fn apply_move(e: &Pair, m: &Move) -> Result<(Pair, MoveCertificate), ReduceError> {
    let out = step(e, m)?;
    let cert = MoveCertificate { source: e.clone(), moves: vec![m.clone()], target: out.clone() };
    Ok((out, cert))
}

fn refuse(m: &Move, reason: impl Into<String>) -> ReduceError {
    ReduceError::SideCondition { mv: m.name(), reason: reason.into() }
}

fn integral(b: &BigRational) -> Option<u32> {
    if b.is_integer() {
        b.to_integer().to_u32()
    } else {
        None
    }
}

fn rational(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn monic_set(gens: &[Poly]) -> Vec<Poly> {
    let mut v: Vec<Poly> = gens.iter().filter(|g| !g.is_zero()).map(|g| g.monic()).collect();
    v.sort_by_key(|g| g.to_string());
    v.dedup();
    v
}

fn ideal_eq(ring: &Ring, a: &[Poly], b: &[Poly]) -> bool {
    monic_set(a) == monic_set(b) || gb::ideal_equal(ring, a, b)
}

/// Whether `small` lies in the ideal generated by `big`.
fn contained(ring: &Ring, small: &[Poly], big: &[Poly]) -> bool {
    let bm = monic_set(big);
    small.iter().all(|g| bm.contains(&g.monic())) || gb::ideal_contains(ring, big, small)
}

/// If `p` is a nonzero constant times a single variable, that variable.
fn coordinate_of(p: &Poly) -> Option<usize> {
    if p.num_terms() != 1 {
        return None;
    }
    let (m, _) = p.terms().next()?;
    if m.iter().sum::<u32>() != 1 {
        return None;
    }
    m.iter().position(|&e| e == 1)
}

fn check_witness(c: &Component, w: &Witness) -> bool {
    let Some(g) = c.gens.get(w.gen) else { return false };
    if w.n.len() != g.ring().nvars() {
        return false;
    }
    let size: u32 = w.n.iter().sum();
    if rational(size as u64) > c.weight {
        return false;
    }
    let k = g.field();
    !k.is_zero(&g.hasse(&w.n).constant_term())
}

/// A witness from a lowest-degree term of a generator of least order.
pub fn witness_for(c: &Component) -> Option<Witness> {
    let (gen, g) = c.gens.iter().enumerate().min_by_key(|(_, g)| g.order_at_origin().unwrap_or(u32::MAX))?;
    let o = g.order_at_origin()?;
    let (m, _) = g.terms().find(|(m, _)| m.iter().sum::<u32>() == o)?;
    let w = Witness { gen, n: m.clone() };
    check_witness(c, &w).then_some(w)
}

fn product_of(m: &Move, e: &Pair, factors: &[(usize, u32)]) -> Result<(Vec<Poly>, BigRational), ReduceError> {
    if factors.is_empty() {
        return Err(refuse(m, "no factors"));
    }
    let ring = e.ring();
    let mut gens = vec![ring.one()];
    let mut w = BigRational::zero();
    for &(i, a) in factors {
        let c = e.components().get(i).ok_or(ReduceError::BadIndex(i))?;
        if a == 0 {
            return Err(refuse(m, "factor exponent must be positive"));
        }
        gens = ideal_product(&gens, &ideal_power(ring, &c.gens, a));
        w += &c.weight * rational(a as u64);
    }
    Ok((gens, w))
}

fn step(e: &Pair, m: &Move) -> Result<Pair, ReduceError> {
    let ring = e.ring();
    let comps = e.components();
    let get = |i: usize| comps.get(i).ok_or(ReduceError::BadIndex(i));
    let mut out: Vec<Component> = comps.to_vec();
    match m {
        Move::Power { comp, a } => {
            let c = get(*comp)?;
            if *a == 0 {
                return Err(refuse(m, "exponent must be positive"));
            }
            out[*comp] = Component { gens: ideal_power(ring, &c.gens, *a), weight: &c.weight * rational(*a as u64) };
        }
        Move::Root { comp, k, gens } => {
            let c = get(*comp)?;
            if *k == 0 {
                return Err(refuse(m, "root index must be positive"));
            }
            if gens.is_empty() || gens.iter().any(|g| g.ring() != ring || g.is_zero()) {
                return Err(refuse(m, "new generators must be nonzero polynomials of the pair's ring"));
            }
            if !ideal_eq(ring, &ideal_power(ring, gens, *k), &c.gens) {
                return Err(refuse(m, format!("the {k}-th power of the new ideal differs from component {comp}")));
            }
            out[*comp] = Component { gens: gens.clone(), weight: &c.weight / rational(*k as u64) };
        }
        Move::SumSameWeight { first, second } => {
            let (a, b) = (get(*first)?, get(*second)?);
            if first == second {
                return Err(refuse(m, "components must be distinct"));
            }
            if a.weight != b.weight {
                return Err(refuse(m, format!("weights differ ({} vs {})", a.weight, b.weight)));
            }
            let mut gens = a.gens.clone();
            gens.extend(b.gens.iter().cloned());
            let (lo, hi) = if first < second { (*first, *second) } else { (*second, *first) };
            out[lo] = Component { gens, weight: a.weight.clone() };
            out.remove(hi);
        }
        Move::Split { comp, parts } => {
            let c = get(*comp)?;
            if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
                return Err(refuse(m, "parts must be nonempty"));
            }
            if parts.iter().flatten().any(|g| !c.gens.contains(g)) || c.gens.iter().any(|g| !parts.iter().flatten().any(|h| h == g)) {
                return Err(refuse(m, "parts do not partition the generators"));
            }
            out[*comp] = Component { gens: parts[0].clone(), weight: c.weight.clone() };
            for p in &parts[1..] {
                out.push(Component { gens: p.clone(), weight: c.weight.clone() });
            }
        }
        Move::Product { factors, witnesses } => {
            if witnesses.len() != factors.len() {
                return Err(refuse(m, "one witness per factor required"));
            }
            for (&(i, _), w) in factors.iter().zip(witnesses) {
                let c = get(i)?;
                if !c.weight.is_integer() {
                    return Err(refuse(m, format!("factor c{i} has non-integral weight {}", c.weight)));
                }
                if !check_witness(c, w) {
                    return Err(refuse(m, format!("no witness that c{i} has order at most its weight at the origin")));
                }
            }
            let (gens, weight) = product_of(m, e, factors)?;
            out.push(Component { gens, weight });
        }
        Move::Absorb { comp, factors } => {
            let c = get(*comp)?;
            if factors.iter().any(|(i, _)| i == comp) {
                return Err(refuse(m, "component cannot absorb itself"));
            }
            let (gens, weight) = product_of(m, e, factors)?;
            if c.weight > weight {
                return Err(refuse(m, format!("weight {} exceeds product weight {}", c.weight, weight)));
            }
            if !contained(ring, &c.gens, &gens) {
                return Err(refuse(m, format!("c{comp} is not contained in the product ideal")));
            }
            out.remove(*comp);
        }
        Move::Diff { comp, gen, n } => {
            let c = get(*comp)?;
            let g = c.gens.get(*gen).ok_or(ReduceError::BadIndex(*gen))?;
            if integral(&c.weight).is_none() {
                return Err(refuse(m, format!("weight {} is not integral", c.weight)));
            }
            if n.len() != ring.nvars() {
                return Err(refuse(m, "exponent vector has the wrong length"));
            }
            let size: u32 = n.iter().sum();
            if rational(size as u64) >= c.weight {
                return Err(refuse(m, format!("|N| < b fails ({} >= {})", size, c.weight)));
            }
            let d = g.hasse(n);
            if d.is_zero() {
                return Err(refuse(m, "derivative vanishes"));
            }
            out.push(Component { gens: vec![d], weight: &c.weight - rational(size as u64) });
        }
        Move::SameIdeal { comp, gens } => {
            let c = get(*comp)?;
            if gens.iter().any(|g| g.ring() != ring) {
                return Err(refuse(m, "generators live in another ring"));
            }
            if !ideal_eq(ring, gens, &c.gens) {
                return Err(refuse(m, format!("new generators do not generate the ideal of c{comp}")));
            }
            out[*comp] = Component { gens: gens.clone(), weight: c.weight.clone() };
        }
        Move::Combine { comp, gen, terms } => {
            let c = get(*comp)?;
            let g = c.gens.get(*gen).ok_or(ReduceError::BadIndex(*gen))?;
            let mut new = g.clone();
            for (k, coef) in terms {
                if k == gen || *k >= c.gens.len() {
                    return Err(refuse(m, format!("bad generator index {k}")));
                }
                if coef.ring() != ring {
                    return Err(refuse(m, "multiplier lives in another ring"));
                }
                new = new.add(&coef.mul(&c.gens[*k]));
            }
            let mut gens = c.gens.clone();
            if new.is_zero() {
                gens.remove(*gen);
            } else {
                gens[*gen] = new;
            }
            out[*comp] = Component { gens, weight: c.weight.clone() };
        }
        Move::Scale { comp, gen, by } => {
            let c = get(*comp)?;
            let g = c.gens.get(*gen).ok_or(ReduceError::BadIndex(*gen))?;
            if ring.field().is_zero(by) {
                return Err(refuse(m, "scale factor must be a unit"));
            }
            out[*comp].gens[*gen] = g.scale(by);
        }
        Move::DropUnit { comp, gen, unit, rest } => {
            let c = get(*comp)?;
            let g = c.gens.get(*gen).ok_or(ReduceError::BadIndex(*gen))?;
            if unit.ring() != ring || rest.ring() != ring {
                return Err(refuse(m, "factors live in another ring"));
            }
            if ring.field().is_zero(&unit.constant_term()) {
                return Err(refuse(m, format!("{unit} is not a unit at the origin")));
            }
            if unit.mul(rest) != *g {
                return Err(refuse(m, format!("({unit})*({rest}) is not {g}")));
            }
            out[*comp].gens[*gen] = rest.clone();
        }
        Move::Reorder { perm } => {
            let mut seen = vec![false; comps.len()];
            if perm.len() != comps.len() || perm.iter().any(|&i| i >= comps.len() || std::mem::replace(&mut seen[i], true)) {
                return Err(refuse(m, "not a permutation of the components"));
            }
            out = perm.iter().map(|&i| comps[i].clone()).collect();
        }
        Move::MaxContactSplit { comp } => {
            let c = get(*comp)?;
            if !c.weight.is_one() {
                return Err(refuse(m, "contact component must have weight 1"));
            }
            let mut y = Vec::new();
            for g in &c.gens {
                match coordinate_of(g) {
                    Some(v) if !y.contains(&v) => y.push(v),
                    _ => return Err(refuse(m, format!("{g} is not a distinct coordinate"))),
                }
            }
            y.sort_unstable();
            let rest: Vec<Component> = comps.iter().enumerate().filter(|(i, _)| i != comp).map(|(_, c)| c.clone()).collect();
            out = vec![c.clone()];
            out.extend(coefficient_components(ring, &rest, &y));
        }
        Move::CoeffFunctor { y, inner } => {
            inner.verify()?;
            if inner.source.ring() != ring {
                return Err(refuse(m, "inner certificate lives in another ring"));
            }
            let expect = coefficient_pair_in_ring(&inner.source, y);
            if expect.components() != comps {
                return Err(refuse(m, "current pair is not the coefficient pair of the inner source"));
            }
            return Ok(coefficient_pair_in_ring(&inner.target, y));
        }
        Move::Flatten => {
            out = e.flatten().components().to_vec();
        }
    }
    Ok(Pair::new(ring, out)?)
}

/// Lift a certificate for `E1 ~ E2` to one for `D(E1; y) ~ D(E2; y)`.
pub fn coefficient_certificate(cert: &MoveCertificate, y: &[usize]) -> Result<MoveCertificate, ReduceError> {
    let source = coefficient_pair_in_ring(&cert.source, y);
    let m = Move::CoeffFunctor { y: y.to_vec(), inner: Box::new(cert.clone()) };
    let (_, c) = apply_move(&source, &m)?;
    Ok(c)
}

// ---------------------------------------------------------------------------
// coefficient pairs

/// Components `(f_B, b - |B|)` over generators `f` and `|B| < b`, where
/// `f = sum f_B(u) y^B` along the variables `y`. Zero coefficients and
/// repeated components are dropped.
pub fn coefficient_components(ring: &Ring, comps: &[Component], y: &[usize]) -> Vec<Component> {
    if y.is_empty() {
        return comps.to_vec();
    }
    let split = ring.with_split_indices(y);
    let mut out: Vec<Component> = Vec::new();
    for c in comps {
        for f in &c.gens {
            let ex = f.reinterpret(&split).coefficient_expansion(&c.weight).expect("split ring");
            for (bexp, fb) in ex.coeffs {
                if fb.is_zero() {
                    continue;
                }
                let size: u32 = bexp.iter().sum();
                let comp = Component { gens: vec![fb.reinterpret(ring)], weight: &c.weight - rational(size as u64) };
                if !out.contains(&comp) {
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// The coefficient pair with respect to `y`, kept in the ring of `e`.
pub fn coefficient_pair_in_ring(e: &Pair, y: &[usize]) -> Pair {
    let comps = coefficient_components(e.ring(), e.components(), y);
    Pair::new(e.ring(), comps).expect("coefficients are nonzero with positive weight")
}

/// Ring of the variables not in `y`.
pub fn u_subring(ring: &Ring, y: &[usize]) -> Ring {
    let names: Vec<&str> = (0..ring.nvars()).filter(|i| !y.contains(i)).map(|i| ring.name(i)).collect();
    Ring::new(ring.field(), &names).expect("subset of distinct names")
}

/// `D(E; u; y)` over the subring in the `u` variables.
pub fn coefficient_pair(e: &Pair, y: &[usize]) -> Pair {
    coefficient_pair_in_ring(e, y).to_ring(&u_subring(e.ring(), y)).expect("coefficients are free of y")
}

/// Order of the coefficient pair at the origin; `None` is infinity.
pub fn delta(e: &Pair, y: &[usize]) -> Option<BigRational> {
    coefficient_pair(e, y).ord_at_origin()
}

// ---------------------------------------------------------------------------
// ridge decomposition

/// A lift `g` of the ridge generator `sigma` with `g = sigma mod M^{q+1}`,
/// obtained as a normalized derivative `D_n` of generator `gen` of
/// component `comp` of the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lift {
    pub g: Poly,
    pub q: u64,
    pub sigma: Poly,
    pub comp: usize,
    pub gen: usize,
    pub n: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Origin outside `Sing(E)`: nothing to decompose.
    pub resolved: bool,
    pub lifts: Vec<Lift>,
    /// The residual part `D+`, possibly empty.
    pub residual: Pair,
    pub ridge: Option<Ridge>,
    /// `E -> (g_1, q_1) & ... & (g_s, q_s) & D+`.
    pub certificate: MoveCertificate,
}

impl Decomposition {
    fn resolved(e: &Pair) -> Decomposition {
        Decomposition {
            resolved: true,
            lifts: Vec::new(),
            residual: e.clone(),
            ridge: None,
            certificate: MoveCertificate::trivial(e),
        }
    }

    pub fn g(&self) -> Vec<(Poly, u64)> {
        self.lifts.iter().map(|l| (l.g.clone(), l.q)).collect()
    }

    /// `ord_M` of each residual component with its weight.
    pub fn residual_orders(&self) -> Vec<(Option<u32>, BigRational)> {
        let all: Vec<usize> = (0..self.residual.ring().nvars()).collect();
        self.residual.components().iter().map(|c| (ideal_order_along(&c.gens, &all), c.weight.clone())).collect()
    }

    /// Extend the certificate by merging lifts of equal degree.
    pub fn grouped(&self) -> Result<MoveCertificate, ReduceError> {
        let mut d = Derivation::resume(self.certificate.clone());
        for i in (1..self.lifts.len()).rev() {
            if self.lifts[i].q == self.lifts[i - 1].q {
                d.apply(Move::SumSameWeight { first: i - 1, second: i })?;
            }
        }
        Ok(d.finish())
    }
}

struct Candidate {
    comp: usize,
    gen: usize,
    form: Poly,
    b: u32,
}

struct Schedule {
    comp: usize,
    gen: usize,
    n: Vec<u32>,
    c: Elem,
    /// `(C, a)`: subtract `C prod g_j^{a_j}` after normalizing.
    corrections: Vec<(Elem, Vec<u32>)>,
    /// `(gen, n, c)`: use `sum c D_n g_gen` instead of a single derivative.
    combo: Vec<(usize, Vec<u32>, Elem)>,
}

/// Search the generators for a derivative whose initial form is a nonzero
/// multiple of `sigma_i` plus a polynomial in already lifted generators.
fn find_schedule(cands: &[Candidate], sig: &[Poly], rd: &Ridge, i: usize, lifted: &[bool]) -> Option<Schedule> {
    let k = sig[i].field();
    let p = k.characteristic();
    let degs = rd.degrees();
    let nv = sig[i].ring().nvars();
    for cand in cands {
        let Some(exp) = cone::express_in(sig, &cand.form, cand.b as u64) else { continue };
        let good: Vec<&Vec<u32>> =
            exp.iter().map(|(a, _)| a).filter(|a| a[i] >= 1 && (p == 0 || a[i] as u64 % p != 0)).collect();
        let Some(d0) = good.iter().map(|a| a[i]).max() else { continue };
        let mut ns: Vec<Vec<u32>> = good
            .iter()
            .filter(|a| a[i] == d0)
            .map(|a| {
                let mut n = vec![0u32; nv];
                for (j, s) in rd.sigmas.iter().enumerate() {
                    let e = if j == i { d0 - 1 } else { a[j] };
                    n[s.pivot] += e * s.q as u32;
                }
                n
            })
            .collect();
        ns.sort();
        ns.dedup();
        for n in ns {
            if let Some(sch) = schedule_for(cand, &n, sig, &degs, i, lifted) {
                return Some(sch);
            }
        }
    }
    // every derivative of the right order, for lifts the expansions miss
    for cand in cands {
        let Some(order) = cand.b.checked_sub(degs[i] as u32) else { continue };
        for n in exponents_up_to(nv, order).into_iter().filter(|n| n.iter().sum::<u32>() == order) {
            if let Some(sch) = schedule_for(cand, &n, sig, &degs, i, lifted) {
                return Some(sch);
            }
        }
    }
    // linear combinations of derivatives of the generators of one component
    let mut comps: Vec<usize> = cands.iter().map(|c| c.comp).collect();
    comps.dedup();
    for comp in comps {
        let group: Vec<&Candidate> = cands.iter().filter(|c| c.comp == comp).collect();
        let Some(order) = group[0].b.checked_sub(degs[i] as u32) else { continue };
        let ns: Vec<Vec<u32>> = exponents_up_to(nv, order).into_iter().filter(|n| n.iter().sum::<u32>() == order).collect();
        if let Some(sch) = combined_schedule(&group, &ns, sig, &degs, i, lifted) {
            return Some(sch);
        }
    }
    None
}

/// A combination `sum c D_n g` over the candidates and `ns` equal to
/// `sigma_i` plus products of lifted ridge forms.
fn combined_schedule(group: &[&Candidate], ns: &[Vec<u32>], sig: &[Poly], degs: &[u64], i: usize, lifted: &[bool]) -> Option<Schedule> {
    let k = sig[i].field();
    let mut derivs: Vec<(usize, Vec<u32>, Vec<(Vec<u32>, Elem)>)> = Vec::new();
    for cand in group {
        for n in ns {
            let g = cand.form.hasse(n);
            if g.is_zero() {
                continue;
            }
            derivs.push((cand.gen, n.clone(), cone::express_in(sig, &g, degs[i])?));
        }
    }
    let unit: Vec<u32> = (0..sig.len()).map(|j| u32::from(j == i)).collect();
    let free = |a: &Vec<u32>| a.iter().enumerate().all(|(j, &e)| e == 0 || lifted[j]);
    let mut keys: Vec<Vec<u32>> = vec![unit.clone()];
    for (a, _) in derivs.iter().flat_map(|d| &d.2) {
        if *a != unit && !free(a) && !keys.contains(a) {
            keys.push(a.clone());
        }
    }
    let coeff = |ex: &[(Vec<u32>, Elem)], a: &Vec<u32>| ex.iter().find(|(b, _)| b == a).map_or(k.zero(), |(_, c)| c.clone());
    let cols: Vec<Vec<Elem>> = derivs.iter().map(|d| keys.iter().map(|a| coeff(&d.2, a)).collect()).collect();
    let mut target = vec![k.zero(); keys.len()];
    target[0] = k.one();
    let x = linalg::solve_span(k, &cols, &target)?;
    let used: Vec<usize> = (0..derivs.len()).filter(|&t| !k.is_zero(&x[t])).collect();
    if used.len() < 2 {
        return None;
    }
    let mut corrections: Vec<(Elem, Vec<u32>)> = Vec::new();
    for &t in &used {
        for (a, y) in derivs[t].2.iter().filter(|(a, _)| *a != unit && free(a)) {
            let v = k.mul(&x[t], y);
            match corrections.iter_mut().find(|(_, b)| b == a) {
                Some(c) => c.0 = k.add(&c.0, &v),
                None => corrections.push((v, a.clone())),
            }
        }
    }
    corrections.retain(|(c, _)| !k.is_zero(c));
    let c = k.inv(&x[used[0]]).expect("nonzero");
    let combo: Vec<(usize, Vec<u32>, Elem)> = used.iter().map(|&t| (derivs[t].0, derivs[t].1.clone(), x[t].clone())).collect();
    Some(Schedule { comp: group[0].comp, gen: combo[0].0, n: combo[0].1.clone(), c, corrections, combo })
}

/// Append `sum c D_n g_gen` over generators of component `comp`, scaled so
/// the first coefficient is one. The remaining derivatives stay behind as
/// one more component of the same weight.
fn combined_derivative(d: &mut Derivation, comp: usize, combo: &[(usize, Vec<u32>, Elem)]) -> Result<(), ReduceError> {
    let ring = d.current().ring().clone();
    let k = ring.field();
    let base = d.current().components().len();
    let mut derivs: Vec<Poly> = Vec::new();
    for (g, n, _) in combo {
        d.apply(Move::Diff { comp, gen: *g, n: n.clone() })?;
        derivs.push(d.current().components().last().expect("appended").gens[0].clone());
    }
    for j in (1..combo.len()).rev() {
        d.apply(Move::SumSameWeight { first: base, second: base + j })?;
    }
    let gens = d.current().components()[base].gens.clone();
    let pos = |f: &Poly| gens.iter().position(|h| h == f).expect("derivative present");
    let first = pos(&derivs[0]);
    let c0 = k.inv(&combo[0].2)?;
    let mut terms: Vec<(usize, Poly)> = Vec::new();
    for ((_, _, c), f) in combo[1..].iter().zip(&derivs[1..]) {
        let j = pos(f);
        if j == first || terms.iter().any(|(t, _)| *t == j) {
            return Err(ReduceError::Decomposition(format!("repeated derivative {f}")));
        }
        terms.push((j, ring.constant(k.mul(c, &c0))));
    }
    d.apply(Move::Combine { comp: base, gen: first, terms })?;
    let all = d.current().components()[base].gens.clone();
    let rest: Vec<Poly> = all.iter().enumerate().filter(|(j, _)| *j != first).map(|(_, g)| g.clone()).collect();
    d.apply(Move::Split { comp: base, parts: vec![rest, vec![all[first].clone()]] })?;
    Ok(())
}

/// `D_n` of the candidate as a unit times `sigma_i` plus products of lifted
/// ridge forms.
fn schedule_for(cand: &Candidate, n: &[u32], sig: &[Poly], degs: &[u64], i: usize, lifted: &[bool]) -> Option<Schedule> {
    let k = sig[i].field();
    let g = cand.form.hasse(n);
    if g.is_zero() {
        return None;
    }
    let ge = cone::express_in(sig, &g, degs[i])?;
    let unit: Vec<u32> = (0..sig.len()).map(|j| u32::from(j == i)).collect();
    let c = ge.iter().find(|(a, _)| *a == unit).map(|(_, c)| c.clone())?;
    let cinv = k.inv(&c).expect("nonzero");
    let corrections: Vec<(Elem, Vec<u32>)> =
        ge.into_iter().filter(|(a, _)| *a != unit).map(|(a, x)| (k.mul(&x, &cinv), a)).collect();
    if corrections.iter().any(|(_, a)| a.iter().enumerate().any(|(j, &e)| e > 0 && !lifted[j])) {
        return None;
    }
    Some(Schedule { comp: cand.comp, gen: cand.gen, n: n.to_vec(), c, corrections, combo: Vec::new() })
}

fn lift_index(e: &Pair, g: &Poly, q: u64) -> usize {
    let w = rational(q);
    e.components().iter().rposition(|c| c.weight == w && c.gens.len() == 1 && c.gens[0] == *g).expect("lift component present")
}

/// Replace generator `gen` of component `comp` by
/// `g - sum C_t prod_j g_j^{a_j}` using product, sum, combine, split and
/// absorb moves. The factor components must carry witnesses.
fn eliminate(d: &mut Derivation, comp: usize, gen: usize, terms: &[(Elem, Vec<(usize, u32)>)]) -> Result<(), ReduceError> {
    if terms.is_empty() {
        return Ok(());
    }
    let ring = d.current().ring().clone();
    let k = ring.field();
    let base = d.current().components().len();
    for (_, fs) in terms {
        let mut witnesses = Vec::new();
        for &(j, _) in fs {
            let w = witness_for(&d.current().components()[j])
                .ok_or_else(|| ReduceError::Decomposition(format!("no witness for component {j}")))?;
            witnesses.push(w);
        }
        d.apply(Move::Product { factors: fs.clone(), witnesses })?;
    }
    let kc = terms.len();
    for t in (0..kc).rev() {
        d.apply(Move::SumSameWeight { first: comp, second: base + t })?;
    }
    let n0 = d.current().components()[comp].gens.len() - kc;
    // product t now sits at position n0 + (kc - 1 - t)
    let combine: Vec<(usize, Poly)> =
        terms.iter().enumerate().map(|(t, (c, _))| (n0 + kc - 1 - t, ring.constant(k.neg(c)))).collect();
    d.apply(Move::Combine { comp, gen, terms: combine })?;
    let gens = d.current().components()[comp].gens.clone();
    let kept = gens.len() - kc;
    let mut parts: Vec<Vec<Poly>> = Vec::new();
    if kept > 0 {
        parts.push(gens[..kept].to_vec());
    }
    parts.extend(gens[kept..].iter().map(|g| vec![g.clone()]));
    // factor list of the product in part `j` (after the kept part)
    let factors_at = |j: usize| terms[kc - 1 - j].1.clone();
    if parts.len() > 1 {
        d.apply(Move::Split { comp, parts })?;
    }
    let appended = if kept > 0 { kc } else { kc - 1 };
    let offset = if kept > 0 { 0 } else { 1 };
    for j in (0..appended).rev() {
        d.apply(Move::Absorb { comp: base + j, factors: factors_at(j + offset) })?;
    }
    if kept == 0 {
        d.apply(Move::Absorb { comp, factors: factors_at(0) })?;
    }
    Ok(())
}

/// `E ~ (g_1, q_1) & ... & (g_s, q_s) & D+` with `g_i` lifting the ridge
/// generators and `ord_M(D+)` above its weight.
pub fn ridge_decomposition(e: &Pair) -> Result<Decomposition, ReduceError> {
    let ring = e.ring().clone();
    let k = ring.field();
    if !e.is_empty() && !e.in_sing(&PointSpec::origin(&ring)) {
        return Ok(Decomposition::resolved(e));
    }
    let tc = cone::tangent_cone(e)?;
    let rd = cone::ridge(&tc)?;
    let w = tc.ring().clone();
    let sig = rd.polys();
    let s = sig.len();

    let mut cands = Vec::new();
    for (ci, c) in e.components().iter().enumerate() {
        let Some(b) = integral(&c.weight) else { continue };
        for (gi, f) in c.gens.iter().enumerate() {
            if f.order_at_origin() == Some(b) {
                cands.push(Candidate { comp: ci, gen: gi, form: f.homogeneous_part(b).reinterpret(&w), b });
            }
        }
    }

    let mut d = Derivation::new(e);
    let mut lifts: Vec<Option<Lift>> = vec![None; s];
    while lifts.iter().any(Option::is_none) {
        let mut progress = false;
        for i in 0..s {
            if lifts[i].is_some() {
                continue;
            }
            let lifted: Vec<bool> = lifts.iter().map(Option::is_some).collect();
            let Some(sch) = find_schedule(&cands, &sig, &rd, i, &lifted) else { continue };
            let q = rd.sigmas[i].q;
            if sch.combo.is_empty() {
                d.apply(Move::Diff { comp: sch.comp, gen: sch.gen, n: sch.n.clone() })?;
            } else {
                combined_derivative(&mut d, sch.comp, &sch.combo)?;
            }
            let at = d.current().components().len() - 1;
            d.apply(Move::Scale { comp: at, gen: 0, by: k.inv(&sch.c)? })?;
            let terms: Vec<(Elem, Vec<(usize, u32)>)> = sch
                .corrections
                .iter()
                .map(|(c, a)| {
                    let fs = a
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x > 0)
                        .map(|(j, &x)| {
                            let l = lifts[j].as_ref().expect("lifted");
                            (lift_index(d.current(), &l.g, l.q), x)
                        })
                        .collect();
                    (c.clone(), fs)
                })
                .collect();
            eliminate(&mut d, at, 0, &terms)?;
            let g = d.current().components()[at].gens[0].clone();
            let init = g.initial_form(&rational(q)).map_err(|_| ReduceError::Decomposition(format!("lift {g} has order below {q}")))?;
            if init.reinterpret(&w) != sig[i] {
                return Err(ReduceError::Decomposition(format!("lift {g} does not have initial form {}", sig[i])));
            }
            lifts[i] = Some(Lift { g, q, sigma: sig[i].clone(), comp: sch.comp, gen: sch.gen, n: sch.n });
            progress = true;
        }
        if !progress {
            let i = lifts.iter().position(Option::is_none).expect("missing lift");
            return Err(ReduceError::Decomposition(format!("no derivative schedule lifts {}", sig[i])));
        }
    }
    let lifts: Vec<Lift> = lifts.into_iter().map(|l| l.expect("all lifted")).collect();

    // residual: subtract the ridge expansion of every initial form
    let lift_pos: Vec<usize> = lifts.iter().map(|l| lift_index(d.current(), &l.g, l.q)).collect();
    let rest: Vec<usize> = (0..d.current().components().len()).filter(|i| !lift_pos.contains(i)).collect();
    for ci in rest.into_iter().rev() {
        let c = d.current().components()[ci].clone();
        let Some(b) = integral(&c.weight) else { continue };
        let mut gi = c.gens.len();
        while gi > 0 {
            gi -= 1;
            let before = d.current().components().len();
            let f = d.current().components()[ci].gens[gi].clone();
            if f.order_at_origin() != Some(b) {
                continue;
            }
            let form = f.homogeneous_part(b).reinterpret(&w);
            let exp = cone::express_in(&sig, &form, b as u64)
                .ok_or_else(|| ReduceError::Decomposition(format!("initial form of {f} is not generated by the ridge")))?;
            let terms: Vec<(Elem, Vec<(usize, u32)>)> = exp
                .into_iter()
                .map(|(a, cf)| {
                    let fs = a
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x > 0)
                        .map(|(j, &x)| (lift_index(d.current(), &lifts[j].g, lifts[j].q), x))
                        .collect();
                    (cf, fs)
                })
                .collect();
            eliminate(&mut d, ci, gi, &terms)?;
            if d.current().components().len() < before {
                break;
            }
        }
    }

    let cur = d.current().clone();
    let lift_pos: Vec<usize> = lifts.iter().map(|l| lift_index(&cur, &l.g, l.q)).collect();
    let mut perm = lift_pos.clone();
    perm.extend((0..cur.components().len()).filter(|i| !lift_pos.contains(i)));
    if perm.iter().enumerate().any(|(i, &j)| i != j) {
        d.apply(Move::Reorder { perm })?;
    }
    for ci in s..d.current().components().len() {
        for gi in 0..d.current().components()[ci].gens.len() {
            let g = &d.current().components()[ci].gens[gi];
            let (m, c) = g.terms().next().expect("nonzero");
            let by = k.div(&g.monic().coeff(m), c)?;
            if !k.is_one(&by) {
                d.apply(Move::Scale { comp: ci, gen: gi, by })?;
            }
        }
    }
    let cert = d.finish();
    let residual = cert.target.with_components(cert.target.components()[s..].to_vec());
    let dec = Decomposition { resolved: false, lifts, residual, ridge: Some(rd), certificate: cert };
    for (o, wt) in dec.residual_orders() {
        if let Some(o) = o {
            if rational(o as u64) <= wt {
                return Err(ReduceError::Decomposition(format!("residual order {o} does not exceed {wt}")));
            }
        }
    }
    Ok(dec)
}

// ---------------------------------------------------------------------------
// classification

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionCase {
    /// The origin is not in `Sing(E)`.
    Resolved,
    /// Some ridge generator of least exponent is not a coordinate after
    /// stripping p-th powers.
    NoReduction,
    /// `V(y_1, ..., y_t)` has maximal contact and the coefficient problem is
    /// known to be solvable.
    MaximalContact { t: usize },
    /// Maximal contact with all ridge generators, but the coefficient problem
    /// is passed on as a companion pair.
    CompanionRecursion { t: usize, companion: Pair },
    /// Maximal contact with only `t` of the `s` ridge generators.
    PartialOnly { t: usize, s: usize },
}

impl fmt::Display for ReductionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionCase::Resolved => write!(f, "resolved"),
            ReductionCase::NoReduction => write!(f, "no reduction"),
            ReductionCase::MaximalContact { t } => write!(f, "maximal contact (t = {t})"),
            ReductionCase::CompanionRecursion { t, companion } => {
                write!(f, "companion recursion (t = {t}, companion {companion})")
            }
            ReductionCase::PartialOnly { t, s } => write!(f, "partial (t = {t} < s = {s})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub case: ReductionCase,
    /// `c_1 <= ... <= c_s` with `q_i = p^{c_i}` after stripping.
    pub exponents: Vec<u32>,
    /// Stripped lifts, in the order of `exponents`.
    pub stripped: Vec<Poly>,
    pub decomposition: Decomposition,
    /// `E -> G & D+` with p-th powers stripped.
    pub certificate: MoveCertificate,
    /// Substitutions turning the contact elements into coordinates.
    pub straightening: Vec<CoordinateChange>,
    /// Contact variables, indices into the ring of `E`.
    pub contact: Vec<usize>,
    /// Straightened pair to `(y, 1) & D(...; y)`.
    pub contact_certificate: Option<MoveCertificate>,
    /// Coefficient pair over the subring without the contact variables.
    pub coefficient: Option<Pair>,
}

/// `f = a v + h` with `h` free of `v`.
fn split_linear(f: &Poly, v: usize) -> Option<(Elem, Poly)> {
    let with_v: Vec<_> = f.terms().filter(|(m, _)| m[v] > 0).collect();
    if with_v.len() != 1 {
        return None;
    }
    let (m, a) = with_v[0];
    if m.iter().sum::<u32>() != 1 {
        return None;
    }
    let a = a.clone();
    let h = f.sub(&f.ring().var(v).scale(&a));
    Some((a, h))
}

/// Split `f` into multiples `v_j * q_j` of the given variables and a rest
/// free of them.
fn strip_multiples(f: &Poly, vars: &[usize]) -> (Vec<(usize, Poly)>, Poly) {
    let ring = f.ring();
    let mut parts: Vec<(usize, Vec<(Vec<u32>, Elem)>)> = vars.iter().map(|&v| (v, Vec::new())).collect();
    let mut rest = Vec::new();
    for (m, c) in f.terms() {
        match parts.iter_mut().find(|(v, _)| m[*v] > 0) {
            Some((v, ts)) => {
                let mut q = m.clone();
                q[*v] -= 1;
                ts.push((q, c.clone()));
            }
            None => rest.push((m.clone(), c.clone())),
        }
    }
    let multiples = parts.into_iter().filter(|(_, ts)| !ts.is_empty()).map(|(v, ts)| (v, Poly::from_terms(ring, ts))).collect();
    (multiples, Poly::from_terms(ring, rest))
}

/// `f = unit * v` with a polynomial unit.
fn unit_times_coordinate(f: &Poly, v: usize) -> Option<(Poly, Poly)> {
    let mut m = vec![0u32; f.ring().nvars()];
    m[v] = 1;
    let unit = f.div_monomial(&m)?;
    if f.field().is_zero(&unit.constant_term()) {
        return None;
    }
    Some((unit, f.ring().var(v)))
}

/// Coefficient problems that are known to be solvable: characteristic
/// zero, empty or resolved pairs, at most three variables occurring, or
/// binomial generators.
pub fn coefficient_solvable(d: &Pair) -> bool {
    let mut occurring: Vec<usize> =
        d.components().iter().flat_map(|c| c.gens.iter().flat_map(|g| g.support_vars())).collect();
    occurring.sort_unstable();
    occurring.dedup();
    d.ring().field().characteristic() == 0
        || d.is_empty()
        || !d.in_sing(&PointSpec::origin(d.ring()))
        || occurring.len() <= 3
        || d.components().iter().all(|c| c.gens.iter().all(|g| g.num_terms() <= 2))
}

/// Strip p-th powers from the ridge lifts, then split off a hypersurface
/// of maximal contact when the least exponents vanish.
pub fn classify(e: &Pair) -> Result<ReductionReport, ReduceError> {
    let dec = ridge_decomposition(e)?;
    let ring = e.ring().clone();
    let k = ring.field();
    let p = k.characteristic();
    let bare = |case: ReductionCase, dec: Decomposition, exponents: Vec<u32>, stripped: Vec<Poly>, cert: MoveCertificate| {
        ReductionReport {
            case,
            exponents,
            stripped,
            decomposition: dec,
            certificate: cert,
            straightening: Vec::new(),
            contact: Vec::new(),
            contact_certificate: None,
            coefficient: None,
        }
    };
    if dec.resolved {
        let cert = dec.certificate.clone();
        return Ok(bare(ReductionCase::Resolved, dec, Vec::new(), Vec::new(), cert));
    }
    let s = dec.lifts.len();
    let mut d = Derivation::resume(dec.certificate.clone());
    let mut roots = Vec::with_capacity(s);
    let mut cs = Vec::with_capacity(s);
    for (i, l) in dec.lifts.iter().enumerate() {
        let (mut f, mut q) = (l.g.clone(), l.q);
        while q > 1 && p > 1 {
            let Some(r) = f.pth_root() else { break };
            d.apply(Move::Root { comp: i, k: p as u32, gens: vec![r.clone()] })?;
            f = r;
            q /= p;
        }
        let mut c = 0u32;
        while q > 1 {
            q /= p.max(2);
            c += 1;
        }
        roots.push(f);
        cs.push(c);
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by_key(|&i| cs[i]);
    let exponents: Vec<u32> = order.iter().map(|&i| cs[i]).collect();
    let stripped: Vec<Poly> = order.iter().map(|&i| roots[i].clone()).collect();
    let t = exponents.iter().take_while(|&&c| c == 0).count();
    let cert = d.finish();
    if t == 0 {
        return Ok(bare(ReductionCase::NoReduction, dec, exponents, stripped, cert));
    }

    let rd = dec.ridge.as_ref().expect("ridge present");
    let mut pair = cert.target.clone();
    let mut changes = Vec::new();
    let mut contact_comps: Vec<usize> = order[..t].to_vec();
    contact_comps.sort_unstable();
    let mut contact = Vec::new();
    for &i in &order[..t] {
        let f = pair.components()[i].gens[0].clone();
        let v = rd.sigmas[i].pivot;
        let (_, r) = strip_multiples(&f, &contact);
        if let Some((a, h)) = split_linear(&r, v) {
            if !(h.is_zero() && k.is_one(&a)) {
                let image = ring.var(v).sub(&h).scale(&k.inv(&a)?);
                pair = pair.substitute_named(&[(ring.name(v), image.clone())])?;
                changes.push(CoordinateChange { var: ring.name(v).to_string(), image });
            }
        } else if unit_times_coordinate(&r, v).is_none() {
            return Err(ReduceError::Straighten(r.to_string()));
        }
        contact.push(v);
    }
    let elements: Vec<Poly> = order[..t].iter().map(|&i| pair.components()[i].gens[0].clone()).collect();
    let mut d2 = Derivation::new(&pair);
    for &j in contact_comps[1..].iter().rev() {
        d2.apply(Move::SumSameWeight { first: contact_comps[0], second: j })?;
    }
    let c0 = contact_comps[0];
    for (idx, (&v, f)) in contact.iter().zip(&elements).enumerate() {
        let at = |d: &Derivation, g: &Poly| d.current().components()[c0].gens.iter().position(|x| x == g);
        let pos = at(&d2, f).ok_or_else(|| ReduceError::Straighten(f.to_string()))?;
        let (multiples, r) = strip_multiples(f, &contact[..idx]);
        if !multiples.is_empty() {
            let terms = multiples
                .into_iter()
                .map(|(j, q)| Ok((at(&d2, &ring.var(j)).ok_or_else(|| ReduceError::Straighten(f.to_string()))?, q.neg())))
                .collect::<Result<Vec<_>, ReduceError>>()?;
            d2.apply(Move::Combine { comp: c0, gen: pos, terms })?;
        }
        if r != ring.var(v) {
            let (unit, rest) = unit_times_coordinate(&r, v).ok_or_else(|| ReduceError::Straighten(r.to_string()))?;
            d2.apply(Move::DropUnit { comp: c0, gen: pos, unit, rest })?;
        }
    }
    d2.apply(Move::MaxContactSplit { comp: c0 })?;
    let ccert = d2.finish();
    let rest = ccert.target.with_components(ccert.target.components()[1..].to_vec());
    let mut y = contact.clone();
    y.sort_unstable();
    let coefficient = rest.to_ring(&u_subring(&ring, &y))?;
    let case = if t < s {
        ReductionCase::PartialOnly { t, s }
    } else if coefficient_solvable(&coefficient) {
        ReductionCase::MaximalContact { t }
    } else {
        let companion = companion(&coefficient, &[]).and_then(|c| c.pair).unwrap_or_else(|| coefficient.clone());
        ReductionCase::CompanionRecursion { t, companion }
    };
    Ok(ReductionReport {
        case,
        exponents,
        stripped,
        decomposition: dec,
        certificate: cert,
        straightening: changes,
        contact,
        contact_certificate: Some(ccert),
        coefficient: Some(coefficient),
    })
}

// ---------------------------------------------------------------------------
// companion pairs and invariant truncations

/// Factorization `I = M(I) N(I)` of a flattened coefficient pair `(I, d)`
/// against boundary variables, with the companion pair built from it.
#[derive(Clone, Debug)]
pub struct Companion {
    pub weight: BigRational,
    /// Exponents of the boundary monomial `M(I)`.
    pub monomial: Vec<u32>,
    pub rest: Vec<Poly>,
    /// `ord(I)/d - sum_eta ord_eta(I)/d`.
    pub nu: BigRational,
    /// `N(I)` is the unit ideal at the origin.
    pub monomial_case: bool,
    pub pair: Option<Pair>,
}

impl Companion {
    pub fn monomial_poly(&self, ring: &Ring) -> Poly {
        ring.monomial(self.monomial.clone(), ring.field().one())
    }
}

/// `None` for the empty pair.
pub fn companion(dp: &Pair, boundary: &[usize]) -> Option<Companion> {
    let flat = dp.flatten();
    let c = flat.components().first()?;
    let ring = dp.ring();
    let all: Vec<usize> = (0..ring.nvars()).collect();
    let ord = ideal_order_along(&c.gens, &all).expect("nonzero generators");
    let mut mono = vec![0u32; ring.nvars()];
    for &v in boundary {
        mono[v] = c.gens.iter().map(|g| var_power(g, v)).min().unwrap_or(0);
    }
    let msum: u32 = mono.iter().sum();
    let rest: Vec<Poly> = c.gens.iter().map(|g| g.div_monomial(&mono).expect("divisible").monic()).collect();
    let d = c.weight.clone();
    let nu = rational((ord - msum) as u64) / &d;
    let monomial_case = rest.iter().any(|g| !g.field().is_zero(&g.constant_term()));
    let pair = if monomial_case {
        None
    } else {
        let mut comps = vec![Component { gens: rest.clone(), weight: &d * &nu }];
        if nu < BigRational::one() && msum > 0 {
            comps.push(Component {
                gens: vec![ring.monomial(mono.clone(), ring.field().one())],
                weight: &d * (BigRational::one() - &nu),
            });
        }
        Some(Pair::new(ring, comps).expect("positive weights"))
    };
    Some(Companion { weight: d, monomial: mono, rest, nu, monomial_case, pair })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TruncationStop {
    Depth,
    MonomialCase,
    NoMaximalContact,
    EmptyCoefficient,
    Resolved,
}

#[derive(Clone, Debug)]
pub struct Stage {
    /// Pair whose maximal contact defines the stage.
    pub pair: Pair,
    pub contact: String,
    pub coefficient: Pair,
    pub companion: Option<Companion>,
}

#[derive(Clone, Debug)]
pub struct InvariantTruncation {
    /// Weight vector of the input pair, standing in for the first entry.
    pub nu1: Vec<BigRational>,
    pub s1: usize,
    /// `(nu_i, s_i)` for `i >= 2`.
    pub entries: Vec<(BigRational, usize)>,
    /// `nu_{k+1}`; `None` is infinity.
    pub tail: Option<BigRational>,
    pub stages: Vec<Stage>,
    pub stop: TruncationStop,
}

impl fmt::Display for InvariantTruncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nu1 = if self.nu1.len() == 1 {
            self.nu1[0].to_string()
        } else {
            format!("({})", self.nu1.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","))
        };
        let mut parts = vec![format!("{nu1},{}", self.s1)];
        for (nu, s) in &self.entries {
            parts.push(format!("{nu},{s}"));
        }
        parts.push(self.tail.as_ref().map_or("inf".to_string(), |t| t.to_string()));
        write!(f, "({})", parts.join(";"))
    }
}

/// Truncated invariant `(nu_1, s_1; nu_2, s_2; ...; nu_{k+1})` at the
/// origin of a chart, with `k = depth`.
pub fn invariant_truncation(chart: &Chart, e: &Pair, depth: usize) -> Result<InvariantTruncation, ReduceError> {
    let ring = e.ring().clone();
    let mut old = Vec::new();
    let mut new = Vec::new();
    for dv in &chart.boundary {
        match &dv.def {
            DivisorDef::Coord(i) => {
                if dv.old {
                    old.push(*i)
                } else {
                    new.push(ring.name(*i).to_string())
                }
            }
            DivisorDef::Poly(p) => return Err(ReduceError::NonCoordinateBoundary(p.to_string())),
        }
    }
    let mut out = InvariantTruncation {
        nu1: e.components().iter().map(|c| c.weight.clone()).collect(),
        s1: old.len(),
        entries: Vec::new(),
        tail: None,
        stages: Vec::new(),
        stop: TruncationStop::Depth,
    };
    if !e.in_sing(&PointSpec::origin(&ring)) {
        out.stop = TruncationStop::Resolved;
        return Ok(out);
    }
    let mut cur = if old.is_empty() {
        e.clone()
    } else {
        let gens: Vec<Poly> = old.iter().map(|&i| ring.var(i)).collect();
        e.intersect(&Pair::single(&ring, gens, BigRational::one())?)?
    };
    for stage in 1..=depth.max(1) {
        let rep = match classify(&cur) {
            Ok(r) if !r.contact.is_empty() => r,
            _ => {
                out.stop = TruncationStop::NoMaximalContact;
                break;
            }
        };
        let mut straight = cur.clone();
        for ch in &rep.straightening {
            straight = straight.substitute_named(&[(ch.var.as_str(), ch.image.clone())])?;
        }
        let z = rep.contact[0];
        let dk = coefficient_pair(&straight, &[z]);
        let sub = dk.ring().clone();
        let bvars: Vec<usize> = new.iter().filter_map(|n| sub.index(n).ok()).collect();
        let comp = companion(&dk, &bvars);
        let contact = cur.ring().name(z).to_string();
        out.stages.push(Stage { pair: cur.clone(), contact, coefficient: dk.clone(), companion: comp.clone() });
        let Some(comp) = comp else {
            out.tail = None;
            out.stop = TruncationStop::EmptyCoefficient;
            break;
        };
        out.tail = Some(comp.nu.clone());
        if comp.monomial_case {
            out.stop = TruncationStop::MonomialCase;
            break;
        }
        if stage >= depth {
            out.stop = TruncationStop::Depth;
            break;
        }
        out.entries.push((comp.nu.clone(), 0));
        cur = comp.pair.expect("not monomial");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// chains of maximal contact

#[derive(Clone, Debug)]
pub struct ChainStage {
    pub pair: Pair,
    pub report: ReductionReport,
    /// Contact coordinates: name and defining polynomial in the stage's
    /// original coordinates. Straightened coordinates get fresh names.
    pub contact: Vec<(String, Poly)>,
    /// The contact component `(y, 1)` in the renamed ring.
    pub contact_pair: Pair,
    pub coefficient: Pair,
    pub delta: Option<BigRational>,
}

fn fresh_name(taken: &[String]) -> String {
    let mut i = 0;
    loop {
        let n = if i == 0 { "w".to_string() } else { format!("w{i}") };
        if !taken.contains(&n) {
            return n;
        }
        i += 1;
    }
}

/// Iterate maximal contact: `E_1 = E`, `E_{k+1} = (I_k, ord I_k)` where
/// `(I_k, d_k)` flattens the coefficient pair of stage `k`. Stops when no
/// maximal contact exists, the coefficient pair is empty or resolved, or
/// after `max_stages`.
pub fn contact_chain(e: &Pair, max_stages: usize) -> Result<Vec<ChainStage>, ReduceError> {
    let mut out = Vec::new();
    let mut cur = e.clone();
    let mut taken: Vec<String> = e.ring().names().to_vec();
    for _ in 0..max_stages {
        let report = classify(&cur)?;
        if report.contact.is_empty() {
            break;
        }
        let ring = cur.ring().clone();
        let mut names: Vec<String> = ring.names().to_vec();
        let mut contact = Vec::new();
        let by_var: Vec<usize> = {
            let rd = report.decomposition.ridge.as_ref().expect("ridge");
            report.decomposition.lifts.iter().enumerate().map(|(i, _)| rd.sigmas[i].pivot).collect()
        };
        for &v in &report.contact {
            let li = by_var.iter().position(|&x| x == v).expect("contact pivot");
            let mut f = report.decomposition.lifts[li].g.clone();
            while f.num_terms() > 0 && f.order_at_origin() != Some(1) {
                match f.pth_root() {
                    Some(r) => f = r,
                    None => break,
                }
            }
            let name = if report.straightening.iter().any(|c| c.var == ring.name(v)) {
                let n = fresh_name(&taken);
                taken.push(n.clone());
                names[v] = n.clone();
                n
            } else {
                ring.name(v).to_string()
            };
            contact.push((name, f));
        }
        let renamed = ring.renamed(&names).map_err(|_| ReduceError::Straighten("rename".into()))?;
        let ccert = report.contact_certificate.as_ref().expect("contact certificate");
        let yc = &ccert.target.components()[0];
        let contact_pair = Pair::single(&renamed, yc.gens.iter().map(|g| g.reinterpret(&renamed)).collect(), yc.weight.clone())?;
        let coefficient = report.coefficient.clone().expect("coefficient");
        let delta = coefficient.ord_at_origin();
        let next = coefficient.flatten();
        out.push(ChainStage { pair: cur.clone(), report, contact, contact_pair, coefficient, delta: delta.clone() });
        let Some(c) = next.components().first() else { break };
        if delta.map_or(true, |d| d < BigRational::one()) {
            break;
        }
        let all: Vec<usize> = (0..next.ring().nvars()).collect();
        let ord = ideal_order_along(&c.gens, &all).expect("nonzero");
        cur = Pair::single(next.ring(), c.gens.clone(), rational(ord as u64))?;
    }
    Ok(out)
}
