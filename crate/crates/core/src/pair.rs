//! Pairs `(J, b)` and their intersections, orders at points, singular-locus
//! ideals, charts with boundary bookkeeping, and blowups along coordinate
//! centers.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::Elem;
use crate::poly::{Poly, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("weight must be positive, got {0}")]
    NonPositiveWeight(String),
    #[error("component {0} has no nonzero generator")]
    EmptyComponent(usize),
    #[error("pairs live in different rings")]
    RingMismatch,
    #[error("center is not permissible: component {component} has order {order} along it, below weight {weight}")]
    CenterNotPermissible { component: usize, order: String, weight: String },
    #[error("chart variable is not in the center")]
    ChartVarNotInCenter,
    #[error("center must be a nonempty set of distinct variables")]
    BadCenter,
    #[error("center not permissible for the boundary: {0}")]
    BoundaryNotPermissible(String),
    #[error("boundary check undecidable: {0}")]
    BoundaryUndecidable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// One marked ideal `(J_i, b_i)` of an intersection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub gens: Vec<Poly>,
    pub weight: BigRational,
}

/// Finite intersection of marked ideals over a common ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pair {
    ring: Ring,
    components: Vec<Component>,
    /// Generators are declared a standard basis, enabling strict transforms.
    pub standard_basis: bool,
}

/// Where an order is measured.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointSpec {
    /// Generic point of the coordinate subspace `V(x_i : i in S)`.
    Subspace(Vec<usize>),
    /// A rational point, translated to the origin before evaluation.
    Point(Vec<Elem>),
}

impl PointSpec {
    pub fn origin(ring: &Ring) -> PointSpec {
        PointSpec::Subspace((0..ring.nvars()).collect())
    }
}

/// All products of `a` generators (with repetition).
pub fn ideal_power(ring: &Ring, gens: &[Poly], a: u32) -> Vec<Poly> {
    fn rec(gens: &[Poly], start: usize, left: u32, acc: Poly, out: &mut Vec<Poly>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..gens.len() {
            rec(gens, i, left - 1, acc.mul(&gens[i]), out);
        }
    }
    let mut out = Vec::new();
    rec(gens, 0, a, ring.one(), &mut out);
    out.retain(|p| !p.is_zero());
    out
}

pub fn ideal_product(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let mut out = Vec::new();
    for f in a {
        for g in b {
            let h = f.mul(g);
            if !h.is_zero() && !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out
}

fn rat_of(n: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Order of an ideal along a coordinate subspace; `None` for the zero ideal.
pub fn ideal_order_along(gens: &[Poly], vars: &[usize]) -> Option<u32> {
    gens.iter().filter_map(|g| g.order_along(vars)).min()
}

/// Per-component value: `ord/b` when `ord >= b`, else `0`.
fn component_value(order: Option<u32>, weight: &BigRational) -> Option<BigRational> {
    match order {
        None => None,
        Some(o) => {
            let o = rat_of(o);
            if &o >= weight {
                Some(o / weight)
            } else {
                Some(BigRational::zero())
            }
        }
    }
}

/// Smaller of two orders where `None` is infinity.
pub fn min_order(a: Option<BigRational>, b: Option<BigRational>) -> Option<BigRational> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(if x < y { x } else { y }),
    }
}

pub fn format_order(o: &Option<BigRational>) -> String {
    match o {
        None => "inf".to_string(),
        Some(x) => x.to_string(),
    }
}

impl Pair {
    pub fn new(ring: &Ring, components: Vec<Component>) -> Result<Pair, PairError> {
        let mut comps = Vec::with_capacity(components.len());
        for (i, mut c) in components.into_iter().enumerate() {
            if !c.weight.is_positive() {
                return Err(PairError::NonPositiveWeight(c.weight.to_string()));
            }
            if c.gens.iter().any(|g| g.ring() != ring) {
                return Err(PairError::RingMismatch);
            }
            c.gens.retain(|g| !g.is_zero());
            if c.gens.is_empty() {
                return Err(PairError::EmptyComponent(i));
            }
            comps.push(c);
        }
        Ok(Pair { ring: ring.clone(), components: comps, standard_basis: false })
    }

    pub fn single(ring: &Ring, gens: Vec<Poly>, weight: BigRational) -> Result<Pair, PairError> {
        Pair::new(ring, vec![Component { gens, weight }])
    }

    /// The intersection with no components; its order is infinite everywhere.
    pub fn empty(ring: &Ring) -> Pair {
        Pair { ring: ring.clone(), components: Vec::new(), standard_basis: false }
    }

    pub fn with_standard_basis(mut self, flag: bool) -> Pair {
        self.standard_basis = flag;
        self
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Concatenate component lists.
    pub fn intersect(&self, other: &Pair) -> Result<Pair, PairError> {
        if self.ring != other.ring {
            return Err(PairError::RingMismatch);
        }
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(Pair { ring: self.ring.clone(), components, standard_basis: false })
    }

    /// Single component `(sum_i J_i^{c/b_i}, c)` with `c` the least common
    /// multiple of the weight numerators.
    pub fn flatten(&self) -> Pair {
        if self.components.len() <= 1 {
            return self.clone();
        }
        let mut c = BigInt::one();
        for comp in &self.components {
            c = c.lcm(comp.weight.numer());
        }
        let cr = BigRational::from_integer(c.clone());
        let mut gens: Vec<Poly> = Vec::new();
        for comp in &self.components {
            let a = (&cr / &comp.weight).to_integer().to_u32().expect("exponent fits");
            for g in ideal_power(&self.ring, &comp.gens, a) {
                if !gens.contains(&g) {
                    gens.push(g);
                }
            }
        }
        Pair { ring: self.ring.clone(), components: vec![Component { gens, weight: cr }], standard_basis: false }
    }

    /// Component orders at a point, each `None` for infinity.
    pub fn component_orders(&self, x: &PointSpec) -> Vec<Option<u32>> {
        match x {
            PointSpec::Subspace(vars) => self.components.iter().map(|c| ideal_order_along(&c.gens, vars)).collect(),
            PointSpec::Point(coords) => {
                let t = self.translate(coords);
                let all: Vec<usize> = (0..self.ring.nvars()).collect();
                t.components.iter().map(|c| ideal_order_along(&c.gens, &all)).collect()
            }
        }
    }

    /// Move the rational point `coords` to the origin.
    pub fn translate(&self, coords: &[Elem]) -> Pair {
        let images: Vec<Poly> =
            (0..self.ring.nvars()).map(|i| self.ring.var(i).add(&self.ring.constant(coords[i].clone()))).collect();
        self.map_polys(|g| g.substitute(&self.ring, &images))
    }

    /// `min_i` of the per-component values; `None` is infinity.
    pub fn ord_at(&self, x: &PointSpec) -> Option<BigRational> {
        let orders = self.component_orders(x);
        let mut acc = None;
        for (c, o) in self.components.iter().zip(orders) {
            acc = min_order(acc, component_value(o, &c.weight));
        }
        acc
    }

    pub fn ord_at_origin(&self) -> Option<BigRational> {
        self.ord_at(&PointSpec::origin(&self.ring))
    }

    /// Whether the point lies in the singular locus (order at least one).
    pub fn in_sing(&self, x: &PointSpec) -> bool {
        match self.ord_at(x) {
            None => true,
            Some(v) => v >= BigRational::one(),
        }
    }

    /// Generators whose common zero set is `Sing(E)`.
    pub fn singular_locus_ideal(&self) -> SingularLocus {
        let n = self.ring.nvars();
        let mut gens: Vec<Poly> = Vec::new();
        for c in &self.components {
            let top = c.weight.ceil().to_integer().to_u32().expect("weight fits") - 1;
            for exps in exponents_up_to(n, top) {
                for g in &c.gens {
                    let d = g.hasse(&exps);
                    if !d.is_zero() && !gens.contains(&d) {
                        gens.push(d);
                    }
                }
            }
        }
        SingularLocus { gens, upper_bound: !self.ring.field().is_perfect() }
    }

    pub fn map_polys(&self, f: impl Fn(&Poly) -> Poly) -> Pair {
        let components = self
            .components
            .iter()
            .map(|c| Component { gens: c.gens.iter().map(&f).filter(|g| !g.is_zero()).collect(), weight: c.weight.clone() })
            .collect();
        Pair { ring: self.ring.clone(), components, standard_basis: self.standard_basis }
    }

    /// Substitute named variables in every generator.
    pub fn substitute_named(&self, map: &[(&str, Poly)]) -> Result<Pair, PairError> {
        let mut images: Vec<Poly> = (0..self.ring.nvars()).map(|i| self.ring.var(i)).collect();
        for (name, img) in map {
            let i = self.ring.index(name).map_err(|_| PairError::UnknownVariable(name.to_string()))?;
            images[i] = img.clone();
        }
        Ok(self.map_polys(|g| g.substitute(&self.ring, &images)))
    }

    /// Move into a ring with compatible variable names.
    pub fn to_ring(&self, target: &Ring) -> Result<Pair, PairError> {
        let mut components = Vec::new();
        for c in &self.components {
            let gens = c
                .gens
                .iter()
                .map(|g| g.to_ring(target))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| PairError::RingMismatch)?;
            components.push(Component { gens, weight: c.weight.clone() });
        }
        Ok(Pair { ring: target.clone(), components, standard_basis: self.standard_basis })
    }

    /// Drop components by index (used by move replay).
    pub fn with_components(&self, components: Vec<Component>) -> Pair {
        Pair { ring: self.ring.clone(), components, standard_basis: false }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "empty");
        }
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| {
                let g: Vec<String> = c.gens.iter().map(|g| g.to_string()).collect();
                format!("({} : {})", g.join(", "), c.weight)
            })
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

/// Exponent vectors of total degree at most `d`.
pub fn exponents_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out.sort_by_key(|e| e.iter().sum::<u32>());
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularLocus {
    pub gens: Vec<Poly>,
    /// Set over an imperfect field, where the zero set may be larger.
    pub upper_bound: bool,
}

/// Definition of a boundary divisor in current coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DivisorDef {
    Coord(usize),
    Poly(Poly),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divisor {
    pub def: DivisorDef,
    pub old: bool,
    /// Blowup step that created the divisor; zero for initial boundary.
    pub birth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupStep {
    pub center: Vec<String>,
    pub chart_var: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateChange {
    pub var: String,
    pub image: Poly,
}

/// Affine chart with coordinate-change log, boundary and blowup history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    ring: Ring,
    pub changes: Vec<CoordinateChange>,
    pub boundary: Vec<Divisor>,
    pub history: Vec<BlowupStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryStatus {
    Permissible,
    NotPermissible(String),
    Undecidable(String),
}

/// Result of blowing up a chart along a coordinate center.
#[derive(Clone, Debug)]
pub struct Blowup {
    pub chart: Chart,
    /// Total transform generators, per component.
    pub total: Vec<Vec<Poly>>,
    pub pair: Pair,
    /// Present only for standard-basis input.
    pub strict: Option<Pair>,
}

/// If `p` is a nonzero constant times a single variable, that variable.
fn as_coordinate(p: &Poly) -> Option<usize> {
    if p.num_terms() != 1 {
        return None;
    }
    let (m, _) = p.terms().next()?;
    if m.iter().sum::<u32>() != 1 {
        return None;
    }
    m.iter().position(|&e| e == 1)
}

/// Largest `e` with `v^e` dividing every term.
pub fn var_power(p: &Poly, v: usize) -> u32 {
    p.terms().map(|(m, _)| m[v]).min().unwrap_or(0)
}

pub fn divide_var_power(p: &Poly, v: usize, e: u32) -> Poly {
    let mut mono = vec![0; p.ring().nvars()];
    mono[v] = e;
    p.div_monomial(&mono).expect("divisible")
}

impl Chart {
    pub fn new(ring: &Ring) -> Chart {
        Chart { ring: ring.clone(), changes: Vec::new(), boundary: Vec::new(), history: Vec::new() }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// Same chart with variables renamed; logged polynomials move along.
    pub fn renamed(&self, ring: &Ring) -> Result<Chart, PairError> {
        if ring.nvars() != self.ring.nvars() || ring.field() != self.ring.field() {
            return Err(PairError::RingMismatch);
        }
        let mut out = self.clone();
        out.ring = ring.clone();
        for c in out.changes.iter_mut() {
            c.image = c.image.reinterpret(ring);
        }
        for d in out.boundary.iter_mut() {
            if let DivisorDef::Poly(p) = &d.def {
                d.def = DivisorDef::Poly(p.reinterpret(ring));
            }
        }
        Ok(out)
    }

    pub fn with_boundary(mut self, defs: Vec<DivisorDef>) -> Chart {
        for d in defs {
            let def = match d {
                DivisorDef::Poly(p) => match as_coordinate(&p) {
                    Some(i) => DivisorDef::Coord(i),
                    None => DivisorDef::Poly(p),
                },
                c => c,
            };
            self.boundary.push(Divisor { def, old: true, birth: 0 });
        }
        self
    }

    /// Substitute named variables; boundary divisors follow the change.
    pub fn change_coordinates(&self, map: &[(&str, Poly)]) -> Result<Chart, PairError> {
        let mut images: Vec<Poly> = (0..self.ring.nvars()).map(|i| self.ring.var(i)).collect();
        for (name, img) in map {
            let i = self.ring.index(name).map_err(|_| PairError::UnknownVariable(name.to_string()))?;
            images[i] = img.clone();
        }
        let mut out = self.clone();
        for (name, img) in map {
            out.changes.push(CoordinateChange { var: name.to_string(), image: img.clone() });
        }
        for d in out.boundary.iter_mut() {
            let p = match &d.def {
                DivisorDef::Coord(i) => images[*i].clone(),
                DivisorDef::Poly(p) => p.substitute(&self.ring, &images),
            };
            d.def = match as_coordinate(&p) {
                Some(i) => DivisorDef::Coord(i),
                None => DivisorDef::Poly(p),
            };
        }
        Ok(out)
    }

    /// Snc check of a coordinate center against the boundary. With every
    /// divisor a distinct coordinate hypersurface, any coordinate center
    /// completes to a common coordinate system.
    pub fn b_permissible(&self, _center: &[usize]) -> BoundaryStatus {
        let mut seen: Vec<usize> = Vec::new();
        for d in &self.boundary {
            match &d.def {
                DivisorDef::Poly(p) => {
                    return BoundaryStatus::Undecidable(format!("divisor V({}) is not a coordinate hypersurface", p))
                }
                DivisorDef::Coord(i) => {
                    if seen.contains(i) {
                        return BoundaryStatus::NotPermissible(format!("divisor V({}) occurs twice", self.ring.name(*i)));
                    }
                    seen.push(*i);
                }
            }
        }
        BoundaryStatus::Permissible
    }

    /// Flag every current divisor as old when the invariant dropped.
    pub fn old_new_update(&self, invariant_dropped: bool) -> Chart {
        let mut out = self.clone();
        if invariant_dropped {
            for d in out.boundary.iter_mut() {
                d.old = true;
            }
        }
        out
    }

    pub fn boundary_vars(&self) -> Vec<usize> {
        self.boundary
            .iter()
            .filter_map(|d| match d.def {
                DivisorDef::Coord(i) => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn describe_boundary(&self) -> Vec<String> {
        self.boundary
            .iter()
            .map(|d| {
                let name = match &d.def {
                    DivisorDef::Coord(i) => self.ring.name(*i).to_string(),
                    DivisorDef::Poly(p) => p.to_string(),
                };
                format!("V({}) {} #{}", name, if d.old { "old" } else { "new" }, d.birth)
            })
            .collect()
    }

    /// Blow up along `V(x_i : i in center)` and pass to the `chart_var` chart.
    pub fn blowup(&self, e: &Pair, center: &[usize], chart_var: usize) -> Result<Blowup, PairError> {
        if e.ring() != &self.ring {
            return Err(PairError::RingMismatch);
        }
        let mut sorted = center.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() || sorted.len() != center.len() || sorted.iter().any(|&i| i >= self.ring.nvars()) {
            return Err(PairError::BadCenter);
        }
        if !center.contains(&chart_var) {
            return Err(PairError::ChartVarNotInCenter);
        }
        for (i, (c, o)) in e.components().iter().zip(e.component_orders(&PointSpec::Subspace(center.to_vec()))).enumerate() {
            let ok = match o {
                None => true,
                Some(o) => rat_of(o) >= c.weight,
            };
            if !ok {
                return Err(PairError::CenterNotPermissible {
                    component: i,
                    order: o.map_or("inf".into(), |x| x.to_string()),
                    weight: c.weight.to_string(),
                });
            }
        }
        match self.b_permissible(center) {
            BoundaryStatus::Permissible => {}
            BoundaryStatus::NotPermissible(s) => return Err(PairError::BoundaryNotPermissible(s)),
            BoundaryStatus::Undecidable(s) => return Err(PairError::BoundaryUndecidable(s)),
        }
        let r = &self.ring;
        let v = r.var(chart_var);
        let images: Vec<Poly> =
            (0..r.nvars()).map(|i| if i != chart_var && center.contains(&i) { v.mul(&r.var(i)) } else { r.var(i) }).collect();
        let mut total = Vec::new();
        let mut pair_comps = Vec::new();
        let mut strict_comps = Vec::new();
        for c in e.components() {
            let t: Vec<Poly> = c.gens.iter().map(|g| g.substitute(r, &images)).collect();
            // rational weights n/d pass to (J^d, n) first
            let d = c.weight.denom().to_u32().expect("denominator fits");
            let n = c.weight.numer().to_u32().expect("numerator fits");
            let base = if d == 1 { t.clone() } else { ideal_power(r, &t, d) };
            let pg: Vec<Poly> = base.iter().map(|g| divide_var_power(g, chart_var, n)).collect();
            pair_comps.push(Component { gens: pg, weight: rat_of(n) });
            let sg: Vec<Poly> = t.iter().map(|g| divide_var_power(g, chart_var, var_power(g, chart_var))).collect();
            strict_comps.push(Component { gens: sg, weight: c.weight.clone() });
            total.push(t);
        }
        let mut chart = self.clone();
        chart.boundary = Vec::new();
        for d in &self.boundary {
            match &d.def {
                DivisorDef::Coord(i) if *i == chart_var => {}
                DivisorDef::Coord(_) => chart.boundary.push(d.clone()),
                DivisorDef::Poly(p) => {
                    let q = p.substitute(r, &images);
                    let q = divide_var_power(&q, chart_var, var_power(&q, chart_var));
                    let def = match as_coordinate(&q) {
                        Some(i) => DivisorDef::Coord(i),
                        None => DivisorDef::Poly(q),
                    };
                    chart.boundary.push(Divisor { def, old: d.old, birth: d.birth });
                }
            }
        }
        chart.history.push(BlowupStep {
            center: center.iter().map(|&i| r.name(i).to_string()).collect(),
            chart_var: r.name(chart_var).to_string(),
        });
        chart.boundary.push(Divisor { def: DivisorDef::Coord(chart_var), old: false, birth: chart.history.len() });
        let pair = Pair { ring: r.clone(), components: pair_comps, standard_basis: false };
        let strict = if e.standard_basis {
            Some(Pair { ring: r.clone(), components: strict_comps, standard_basis: true })
        } else {
            None
        };
        Ok(Blowup { chart, total, pair, strict })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::gb::{self, GroebnerBasis};
    use crate::poly::{int, rat};
    use proptest::prelude::*;

    fn xyz() -> Ring {
        Ring::new(Field::Rational, &["x", "y", "z"]).unwrap()
    }

    fn pair(r: &Ring, f: &str, b: i64) -> Pair {
        Pair::single(r, vec![r.parse(f).unwrap()], int(b)).unwrap()
    }

    #[test]
    fn flatten_uses_lcm() {
        let r = xyz();
        let e = pair(&r, "x", 2).intersect(&pair(&r, "y", 3)).unwrap();
        let f = e.flatten();
        assert_eq!(f.components().len(), 1);
        assert_eq!(f.components()[0].weight, int(6));
        assert!(gb::ideal_equal(&r, &f.components()[0].gens, &[r.parse("x^3").unwrap(), r.parse("y^2").unwrap()]));
        let same = pair(&r, "x^2 + y", 2).intersect(&pair(&r, "x^2 + y", 2)).unwrap().flatten();
        assert_eq!(same.components()[0].gens, vec![r.parse("x^2 + y").unwrap()]);
    }

    #[test]
    fn orders_of_cusp_surface() {
        let r = xyz();
        let xz = PointSpec::Subspace(vec![0, 2]);
        assert_eq!(pair(&r, "x^3 - y^3*z^2", 2).ord_at(&xz), Some(int(1)));
        assert_eq!(pair(&r, "x^3 - y^3*z^2", 3).ord_at(&xz), Some(int(0)));
        assert_eq!(pair(&r, "x", 1).ord_at_origin(), Some(int(1)));
        assert_eq!(pair(&r, "x^3 - y^3*z^2", 2).ord_at_origin(), Some(rat(3, 2)));
        let p = PointSpec::Point(vec![r.field().from_i64(1), r.field().zero(), r.field().zero()]);
        assert_eq!(pair(&r, "x", 1).ord_at(&p), Some(int(0)));
    }

    #[test]
    fn singular_loci() {
        let r = xyz();
        let s = pair(&r, "x^3 - y^3*z^2", 3).singular_locus_ideal();
        for v in ["x", "y"] {
            assert!(gb::radical_member(&r, &r.parse(v).unwrap(), &s.gens));
        }
        assert!(!gb::radical_member(&r, &r.parse("z").unwrap(), &s.gens));
        let e = pair(&r, "x^3 - y^3*z^2", 2).intersect(&pair(&r, "x^3 - y^3*z^2", 3)).unwrap();
        let s2 = e.singular_locus_ideal();
        assert!(gb::ideal_equal(&r, &s.gens, &s2.gens) || s2.gens.iter().all(|g| gb::radical_member(&r, g, &s.gens)));
        let one = pair(&r, "x", 1).singular_locus_ideal();
        assert_eq!(one.gens, vec![r.parse("x").unwrap()]);
        assert!(!one.upper_bound);
    }

    #[test]
    fn cusp_surface_blowup() {
        let r = xyz();
        let chart = Chart::new(&r);
        let b2 = chart.blowup(&pair(&r, "x^3 - y^3*z^2", 2), &[0, 1], 1).unwrap();
        assert_eq!(b2.pair.components()[0].gens, vec![r.parse("y*(x^3 - z^2)").unwrap()]);
        assert_eq!(b2.pair.components()[0].weight, int(2));
        assert_eq!(b2.total[0], vec![r.parse("y^3*(x^3 - z^2)").unwrap()]);
        let b3 = chart.blowup(&pair(&r, "x^3 - y^3*z^2", 3), &[0, 1], 1).unwrap();
        assert_eq!(b3.pair.components()[0].gens, vec![r.parse("x^3 - z^2").unwrap()]);
        let s = b3.pair.singular_locus_ideal();
        assert!(GroebnerBasis::new(&r, &s.gens).is_unit());
        assert_eq!(b3.chart.describe_boundary(), vec!["V(y) new #1"]);
    }

    #[test]
    fn blowup_refuses_bad_centers() {
        let r = xyz();
        let e = pair(&r, "x^3 - y^3*z^2", 3);
        assert!(matches!(Chart::new(&r).blowup(&e, &[0, 2], 0), Err(PairError::CenterNotPermissible { .. })));
        assert!(matches!(Chart::new(&r).blowup(&e, &[0, 1], 2), Err(PairError::ChartVarNotInCenter)));
        let full = Chart::new(&r).blowup(&pair(&r, "x", 1), &[0, 1, 2], 0).unwrap();
        assert!(full.pair.components()[0].gens[0].is_constant());
    }

    #[test]
    fn boundary_checks() {
        let r = xyz();
        let c = Chart::new(&r).with_boundary(vec![DivisorDef::Coord(2)]);
        assert_eq!(c.b_permissible(&[0, 1]), BoundaryStatus::Permissible);
        assert_eq!(c.b_permissible(&[0, 2]), BoundaryStatus::Permissible);
        let bad = Chart::new(&r).with_boundary(vec![DivisorDef::Poly(r.parse("y + z^2").unwrap())]);
        assert!(matches!(bad.b_permissible(&[0]), BoundaryStatus::Undecidable(_)));
        let dup = Chart::new(&r).with_boundary(vec![DivisorDef::Coord(2), DivisorDef::Poly(r.parse("2*z").unwrap())]);
        assert!(matches!(dup.b_permissible(&[0]), BoundaryStatus::NotPermissible(_)));
        let moved = bad.change_coordinates(&[("y", r.parse("y - z^2").unwrap())]).unwrap();
        assert_eq!(moved.b_permissible(&[0]), BoundaryStatus::Permissible);
    }

    #[test]
    fn old_new_flags() {
        let r = xyz();
        let b = Chart::new(&r).blowup(&pair(&r, "x", 1), &[0], 0).unwrap().chart;
        assert!(!b.boundary[0].old);
        assert!(b.old_new_update(true).boundary[0].old);
        assert_eq!(b.old_new_update(false), b);
        assert_eq!(Chart::new(&r).old_new_update(true), Chart::new(&r));
    }

    #[test]
    fn strict_transform_needs_standard_basis() {
        let r = xyz();
        let e = pair(&r, "x^3 - y^3*z^2", 2);
        assert!(Chart::new(&r).blowup(&e, &[0, 1], 1).unwrap().strict.is_none());
        let s = Chart::new(&r).blowup(&e.with_standard_basis(true), &[0, 1], 1).unwrap().strict.unwrap();
        assert_eq!(s.components()[0].gens, vec![r.parse("x^3 - z^2").unwrap()]);
    }

    fn small_pair() -> impl Strategy<Value = Pair> {
        let r = Ring::new(Field::Prime(3), &["a", "b", "c"]).unwrap();
        let poly = {
            let r = r.clone();
            prop::collection::vec((prop::collection::vec(0u32..4, 3), 1i64..3), 1..4)
                .prop_map(move |ts| Poly::from_terms(&r, ts.into_iter().map(|(m, c)| (m, r.field().from_i64(c)))))
        };
        prop::collection::vec((prop::collection::vec(poly, 1..3), 1i64..4), 1..3).prop_filter_map("nonzero", move |cs| {
            let comps = cs.into_iter().map(|(gens, b)| Component { gens, weight: int(b) }).collect();
            Pair::new(&r, comps).ok()
        })
    }

    fn sample_points(n: usize) -> Vec<PointSpec> {
        let mut v = Vec::new();
        for mask in 1u32..(1 << n) {
            v.push(PointSpec::Subspace((0..n).filter(|i| mask & (1 << i) != 0).collect()));
        }
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn pair_transform_regenerates_total(e in small_pair()) {
            let r = e.ring().clone();
            for c in e.components() {
                let order = ideal_order_along(&c.gens, &[0, 1]).unwrap();
                if rat_of(order) < c.weight { return Ok(()); }
            }
            let b = Chart::new(&r).blowup(&e, &[0, 1], 0).unwrap();
            for ((c, tot), pc) in e.components().iter().zip(&b.total).zip(b.pair.components()) {
                let n = c.weight.to_integer().to_u32().unwrap();
                let mut h = vec![0; 3];
                h[0] = n;
                for (t, g) in tot.iter().zip(&pc.gens) {
                    prop_assert_eq!(g.mul_monomial(&h, &r.field().one()), t.clone());
                }
            }
        }

        #[test]
        fn flatten_preserves_orders(e in small_pair()) {
            let f = e.flatten();
            for x in sample_points(3) {
                prop_assert_eq!(e.ord_at(&x), f.ord_at(&x));
            }
        }

        #[test]
        fn sing_of_intersection(e1 in small_pair(), e2 in small_pair()) {
            let r = e1.ring().clone();
            let both = e1.intersect(&e2).unwrap();
            let s = both.singular_locus_ideal();
            let s1 = e1.singular_locus_ideal();
            let s2 = e2.singular_locus_ideal();
            let mut union = s1.gens.clone();
            union.extend(s2.gens.iter().cloned());
            // equal as ideals, so equal up to radical
            prop_assert!(gb::ideal_equal(&r, &s.gens, &union));
            for x in sample_points(3) {
                prop_assert_eq!(both.in_sing(&x), e1.in_sing(&x) && e2.in_sing(&x));
            }
        }
    }
}
