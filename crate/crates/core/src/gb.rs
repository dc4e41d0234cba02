//! Reduced Gröbner bases by Buchberger's algorithm, normal forms, ideal
//! membership, ideal equality and radical membership.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::field::{Elem, Field};
use crate::poly::{Mono, Poly, Ring};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    #[default]
    Grevlex,
    Lex,
}

impl MonomialOrder {
    pub fn cmp(&self, a: &[u32], b: &[u32]) -> Ordering {
        match self {
            MonomialOrder::Lex => a.cmp(b),
            MonomialOrder::Grevlex => {
                let da: u32 = a.iter().sum();
                let db: u32 = b.iter().sum();
                da.cmp(&db).then_with(|| {
                    for (x, y) in a.iter().zip(b).rev() {
                        if x != y {
                            return y.cmp(x);
                        }
                    }
                    Ordering::Equal
                })
            }
        }
    }
}

/// Terms sorted in decreasing monomial order.
type Terms = Vec<(Mono, Elem)>;

fn to_terms(f: &Poly, ord: MonomialOrder) -> Terms {
    let mut t: Terms = f.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    t.sort_by(|a, b| ord.cmp(&b.0, &a.0));
    t
}

fn divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn lcm(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn mono_sub(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `p - c * x^m * g`, all sorted in decreasing order.
fn sub_mul(k: Field, ord: MonomialOrder, p: &[(Mono, Elem)], c: &Elem, m: &[u32], g: &[(Mono, Elem)]) -> Terms {
    let mut out = Vec::with_capacity(p.len() + g.len());
    let mut i = 0;
    let mut j = 0;
    let shifted = |j: usize| -> Mono { g[j].0.iter().zip(m).map(|(a, b)| a + b).collect() };
    let mut gj = if j < g.len() { Some(shifted(j)) } else { None };
    while i < p.len() || gj.is_some() {
        let o = match (&gj, i < p.len()) {
            (None, _) => Ordering::Greater,
            (Some(_), false) => Ordering::Less,
            (Some(gm), true) => ord.cmp(&p[i].0, gm),
        };
        match o {
            Ordering::Greater => {
                out.push(p[i].clone());
                i += 1;
            }
            Ordering::Less => {
                let gm = gj.take().unwrap();
                out.push((gm, k.neg(&k.mul(c, &g[j].1))));
                j += 1;
                gj = if j < g.len() { Some(shifted(j)) } else { None };
            }
            Ordering::Equal => {
                let v = k.sub(&p[i].1, &k.mul(c, &g[j].1));
                if !k.is_zero(&v) {
                    out.push((p[i].0.clone(), v));
                }
                i += 1;
                j += 1;
                gj = if j < g.len() { Some(shifted(j)) } else { None };
            }
        }
    }
    out
}

fn reduce_terms(k: Field, ord: MonomialOrder, mut p: Terms, basis: &[Terms], full: bool) -> Terms {
    let mut rem = Vec::new();
    let mut start = 0;
    while start < p.len() {
        let (lm, lc) = (&p[start].0, &p[start].1);
        match basis.iter().find(|g| divides(&g[0].0, lm)) {
            Some(g) => {
                let m = mono_sub(lm, &g[0].0);
                let c = k.div(lc, &g[0].1).expect("nonzero leading coefficient");
                p = sub_mul(k, ord, &p[start + 1..], &c, &m, &g[1..]);
                start = 0;
            }
            None => {
                if !full {
                    rem.extend(p.drain(start..));
                    break;
                }
                rem.push(p[start].clone());
                start += 1;
            }
        }
    }
    rem
}

fn monic(k: Field, t: &mut Terms) {
    if let Some((_, lc)) = t.first() {
        let inv = k.inv(lc).expect("nonzero");
        for (_, c) in t.iter_mut() {
            *c = k.mul(c, &inv);
        }
    }
}

fn spoly(k: Field, ord: MonomialOrder, f: &Terms, g: &Terms) -> Terms {
    let l = lcm(&f[0].0, &g[0].0);
    let mf = mono_sub(&l, &f[0].0);
    let mg = mono_sub(&l, &g[0].0);
    let f_shift: Terms = f[1..]
        .iter()
        .map(|(m, c)| (m.iter().zip(&mf).map(|(a, b)| a + b).collect(), k.div(c, &f[0].1).unwrap()))
        .collect();
    let c = k.inv(&g[0].1).unwrap();
    sub_mul(k, ord, &f_shift, &c, &mg, &g[1..])
}

/// Reduced, monic Gröbner basis of an ideal.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    ring: Ring,
    order: MonomialOrder,
    basis: Vec<Poly>,
    terms: Vec<Terms>,
}

/// Outcome of a membership test, with the normal form as witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    pub normal_form: Poly,
}

impl GroebnerBasis {
    pub fn new(ring: &Ring, gens: &[Poly]) -> GroebnerBasis {
        GroebnerBasis::with_order(ring, gens, MonomialOrder::Grevlex)
    }

    pub fn with_order(ring: &Ring, gens: &[Poly], order: MonomialOrder) -> GroebnerBasis {
        let k = ring.field();
        let mut g: Vec<Terms> = Vec::new();
        for f in gens {
            assert!(f.ring() == ring, "generator from another ring");
            if !f.is_zero() {
                let mut t = to_terms(f, order);
                monic(k, &mut t);
                g.push(t);
            }
        }
        let mut pending: HashSet<(usize, usize)> = HashSet::new();
        for j in 0..g.len() {
            for i in 0..j {
                pending.insert((i, j));
            }
        }
        while !pending.is_empty() {
            let &(i, j) = pending
                .iter()
                .min_by(|a, b| {
                    let la = lcm(&g[a.0][0].0, &g[a.1][0].0);
                    let lb = lcm(&g[b.0][0].0, &g[b.1][0].0);
                    la.iter().sum::<u32>().cmp(&lb.iter().sum::<u32>()).then_with(|| la.cmp(&lb)).then_with(|| a.cmp(b))
                })
                .unwrap();
            pending.remove(&(i, j));
            let (li, lj) = (&g[i][0].0, &g[j][0].0);
            if li.iter().zip(lj).all(|(a, b)| *a == 0 || *b == 0) {
                continue;
            }
            let l = lcm(li, lj);
            let chain = (0..g.len()).any(|m| {
                m != i
                    && m != j
                    && divides(&g[m][0].0, &l)
                    && !pending.contains(&(i.min(m), i.max(m)))
                    && !pending.contains(&(j.min(m), j.max(m)))
            });
            if chain {
                continue;
            }
            let s = spoly(k, order, &g[i], &g[j]);
            let mut h = reduce_terms(k, order, s, &g, true);
            if h.is_empty() {
                continue;
            }
            monic(k, &mut h);
            let n = g.len();
            g.push(h);
            for m in 0..n {
                pending.insert((m, n));
            }
        }
        // minimize
        let mut keep: Vec<Terms> = Vec::new();
        for (i, t) in g.iter().enumerate() {
            let redundant = g.iter().enumerate().any(|(j, u)| {
                j != i && divides(&u[0].0, &t[0].0) && (u[0].0 != t[0].0 || j < i)
            });
            if !redundant {
                keep.push(t.clone());
            }
        }
        // interreduce
        let mut reduced = Vec::with_capacity(keep.len());
        for i in 0..keep.len() {
            let others: Vec<Terms> = keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t.clone()).collect();
            let mut t = vec![keep[i][0].clone()];
            t.extend(reduce_terms(k, order, keep[i][1..].to_vec(), &others, true));
            reduced.push(t);
        }
        reduced.sort_by(|a, b| order.cmp(&a[0].0, &b[0].0));
        let basis = reduced.iter().map(|t| Poly::from_terms(ring, t.iter().cloned())).collect();
        GroebnerBasis { ring: ring.clone(), order, basis, terms: reduced }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn basis(&self) -> &[Poly] {
        &self.basis
    }

    pub fn leading_monomials(&self) -> Vec<Mono> {
        self.terms.iter().map(|t| t[0].0.clone()).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.terms.iter().any(|t| t[0].0.iter().all(|&e| e == 0))
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn normal_form(&self, f: &Poly) -> Poly {
        assert!(f.ring() == &self.ring, "polynomial from another ring");
        let k = self.ring.field();
        let r = reduce_terms(k, self.order, to_terms(f, self.order), &self.terms, true);
        Poly::from_terms(&self.ring, r)
    }

    pub fn member(&self, f: &Poly) -> Membership {
        let normal_form = self.normal_form(f);
        Membership { member: normal_form.is_zero(), normal_form }
    }

    pub fn contains(&self, f: &Poly) -> bool {
        let k = self.ring.field();
        reduce_terms(k, self.order, to_terms(f, self.order), &self.terms, false).is_empty()
    }

    pub fn contains_all(&self, fs: &[Poly]) -> bool {
        fs.iter().all(|f| self.contains(f))
    }
}

pub fn buchberger(ring: &Ring, gens: &[Poly]) -> GroebnerBasis {
    GroebnerBasis::new(ring, gens)
}

/// Whether `<b>` is contained in `<a>`.
pub fn ideal_contains(ring: &Ring, a: &[Poly], b: &[Poly]) -> bool {
    if b.iter().all(|f| f.is_zero()) {
        return true;
    }
    GroebnerBasis::new(ring, a).contains_all(b)
}

pub fn ideal_equal(ring: &Ring, a: &[Poly], b: &[Poly]) -> bool {
    ideal_contains(ring, a, b) && ideal_contains(ring, b, a)
}

/// Whether `f` lies in the radical of `<gens>`, via `1 ∈ <gens, 1 - t f>`.
pub fn radical_member(ring: &Ring, f: &Poly, gens: &[Poly]) -> bool {
    let mut names: Vec<String> = ring.names().to_vec();
    let mut t = String::from("t_");
    while names.contains(&t) {
        t.push('_');
    }
    names.push(t);
    let ext = Ring::new(ring.field(), &names).expect("fresh variable");
    let mut g: Vec<Poly> = gens.iter().map(|h| h.to_ring(&ext).expect("same names")).collect();
    let tv = ext.var(names.len() - 1);
    g.push(ext.one().sub(&tv.mul(&f.to_ring(&ext).expect("same names"))));
    GroebnerBasis::new(&ext, &g).is_unit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(k: Field, names: &[&str]) -> Ring {
        Ring::new(k, names).unwrap()
    }

    #[test]
    fn principal_ideal() {
        let r = ring(Field::Rational, &["x", "y"]);
        let gb = buchberger(&r, &[r.parse("x").unwrap()]);
        assert_eq!(gb.basis(), &[r.parse("x").unwrap()]);
        assert!(!gb.contains(&r.one()));
    }

    #[test]
    fn two_curves() {
        let r = ring(Field::Rational, &["x", "y", "z"]);
        let gens = [r.parse("y^2 - x^3").unwrap(), r.parse("y^2 - z^5").unwrap()];
        let gb = buchberger(&r, &gens);
        assert!(gb.contains(&r.parse("x^3 - z^5").unwrap()));
        assert!(gens.iter().all(|g| gb.contains(g)));
    }

    #[test]
    fn homogeneous_pair() {
        let r = ring(Field::Rational, &["X", "Y"]);
        let gb = buchberger(&r, &[r.parse("X*Y").unwrap(), r.parse("X + Y").unwrap()]);
        assert_eq!(gb.basis(), &[r.parse("X + Y").unwrap(), r.parse("Y^2").unwrap()]);
    }

    #[test]
    fn memberships() {
        let r = ring(Field::Rational, &["x", "y"]);
        let gb = buchberger(&r, &[r.parse("x^2").unwrap(), r.parse("y^2").unwrap()]);
        let m = gb.member(&r.parse("x*y").unwrap());
        assert!(!m.member);
        assert_eq!(m.normal_form, r.parse("x*y").unwrap());
        assert!(!buchberger(&r, &[r.parse("x").unwrap()]).contains(&r.one()));
        assert!(ideal_equal(&r, &[r.var(0), r.var(1)], &[r.var(1), r.var(0)]));
        assert!(!ideal_equal(&r, &[r.var(0)], &[r.parse("x^2").unwrap()]));
    }

    #[test]
    fn gluing_identity_in_y_ideal() {
        let r = ring(Field::Prime(3), &["xb", "xj", "yij", "yib", "y22"]);
        let f = r.parse("xb*yij - yib*xj").unwrap();
        let ys = [r.parse("yij").unwrap(), r.parse("yib").unwrap(), r.parse("y22").unwrap()];
        assert!(buchberger(&r, &ys).contains(&f));
    }

    #[test]
    fn radical_membership() {
        let r = ring(Field::Prime(2), &["x", "y"]);
        assert!(radical_member(&r, &r.var(0), &[r.parse("x^4").unwrap()]));
        assert!(!radical_member(&r, &r.var(1), &[r.parse("x^4").unwrap()]));
        assert!(radical_member(&r, &r.parse("x + y").unwrap(), &[r.parse("x^2 + y^2").unwrap()]));
    }

    #[test]
    fn lex_order_elimination() {
        let r = ring(Field::Rational, &["t", "x", "y"]);
        let gb = GroebnerBasis::with_order(&r, &[r.parse("x - t^2").unwrap(), r.parse("y - t^3").unwrap()], MonomialOrder::Lex);
        let implicit = r.parse("x^3 - y^2").unwrap();
        assert!(gb.contains(&implicit));
        assert!(gb.basis().iter().any(|g| g.support_vars() == vec![1, 2]));
    }

    /// Homogeneous degree-`d` membership by linear algebra on monomial
    /// multiples of the generators.
    fn brute_member(r: &Ring, gens: &[Poly], f: &Poly) -> bool {
        let d = f.total_degree().unwrap_or(0);
        let n = r.nvars();
        let mut monos: Vec<Vec<Mono>> = vec![vec![vec![0; n]]];
        for _ in 0..d {
            let last = monos.last().unwrap();
            let mut next: Vec<Mono> = Vec::new();
            for m in last {
                for i in 0..n {
                    let mut m2 = m.clone();
                    m2[i] += 1;
                    if !next.contains(&m2) {
                        next.push(m2);
                    }
                }
            }
            monos.push(next);
        }
        let k = r.field();
        let mut vecs: Vec<Poly> = Vec::new();
        for g in gens {
            let gd = g.total_degree().unwrap();
            if gd > d {
                continue;
            }
            for m in &monos[(d - gd) as usize] {
                vecs.push(g.mul_monomial(m, &k.one()));
            }
        }
        let target = &monos[d as usize];
        let to_vec = |p: &Poly| -> Vec<Elem> { target.iter().map(|m| p.coeff(m)).collect() };
        let cols: Vec<Vec<Elem>> = vecs.iter().map(to_vec).collect();
        linalg::solve_span(k, &cols, &to_vec(f)).is_some()
    }

    fn random_form(r: &Ring, rng: &mut ChaCha8Rng, d: u32) -> Poly {
        let n = r.nvars();
        let k = r.field();
        let mut t = Vec::new();
        for _ in 0..3 {
            let mut m = vec![0u32; n];
            for _ in 0..d {
                m[rng.gen_range(0..n)] += 1;
            }
            t.push((m, k.from_i64(rng.gen_range(-2..3))));
        }
        Poly::from_terms(r, t)
    }

    #[test]
    fn membership_agrees_with_linear_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &k in &[Field::Rational, Field::Prime(3)] {
            let r = ring(k, &["a", "b", "c"]);
            for _ in 0..40 {
                let gens: Vec<Poly> = (0..2).map(|_| {
                    let d = rng.gen_range(1..3);
                    random_form(&r, &mut rng, d)
                }).filter(|g| !g.is_zero()).collect();
                let gb = buchberger(&r, &gens);
                for _ in 0..4 {
                    let d = rng.gen_range(1..5);
                    // either a random combination or a random form
                    let f = if rng.gen_bool(0.5) && !gens.is_empty() {
                        let g = &gens[rng.gen_range(0..gens.len())];
                        let gd = g.total_degree().unwrap();
                        let dd = d.max(gd);
                        g.mul(&random_form(&r, &mut rng, dd - gd)).add(&random_form(&r, &mut rng, dd).scale(&k.from_i64(rng.gen_range(0..2))))
                    } else {
                        random_form(&r, &mut rng, d)
                    };
                    if f.is_zero() {
                        continue;
                    }
                    assert_eq!(gb.contains(&f), brute_member(&r, &gens, &f), "f = {} gens = {:?}", f, gens.iter().map(|g| g.to_string()).collect::<Vec<_>>());
                }
            }
        }
    }

    fn small_poly(r: Ring) -> impl Strategy<Value = Poly> {
        let n = r.nvars();
        prop::collection::vec((prop::collection::vec(0u32..3, n), -3i64..4), 1..4)
            .prop_map(move |ts| Poly::from_terms(&r, ts.into_iter().map(|(m, c)| (m, r.field().from_i64(c)))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn generators_are_members_and_nf_idempotent(
            gens in prop::collection::vec(small_poly(Ring::new(Field::Prime(5), &["a", "b", "c"]).unwrap()), 1..4),
            f in small_poly(Ring::new(Field::Prime(5), &["a", "b", "c"]).unwrap()),
        ) {
            let r = f.ring().clone();
            let gens: Vec<Poly> = gens.into_iter().map(|g| g.reinterpret(&r)).collect();
            let gb = buchberger(&r, &gens);
            for g in &gens {
                prop_assert!(gb.contains(g));
            }
            let nf = gb.normal_form(&f);
            prop_assert_eq!(gb.normal_form(&nf), nf.clone());
            prop_assert!(gb.contains(&f.sub(&nf)));
        }
    }
}
