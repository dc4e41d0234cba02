//! Tangent cones of pairs, their translation stabilizers, ridges and
//! directrices.

use std::fmt;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::field::{Elem, Field};
use crate::gb::{self, GroebnerBasis};
use crate::linalg;
use crate::pair::Pair;
use crate::poly::{Mono, Poly, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConeError {
    #[error("origin is not in the singular locus: component {component} has order {order} < {weight}")]
    NotSingular { component: usize, order: String, weight: String },
    #[error("generation check failed: {0}")]
    GenerationFailure(String),
}

/// One homogeneous component `(In, b)` of a tangent cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeComponent {
    pub gens: Vec<Poly>,
    pub degree: u32,
}

/// Tangent cone pair in a graded ring of uppercase variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangentCone {
    ring: Ring,
    pub components: Vec<ConeComponent>,
    /// Set when the input generators were not declared a standard basis.
    pub best_effort: bool,
}

/// Build the tangent cone from the initial forms of the generators.
pub fn tangent_cone(e: &Pair) -> Result<TangentCone, ConeError> {
    let ring = e.ring().graded();
    let mut components = Vec::new();
    for (i, c) in e.components().iter().enumerate() {
        let mut forms = Vec::new();
        for g in &c.gens {
            let f = g.initial_form(&c.weight).map_err(|_| ConeError::NotSingular {
                component: i,
                order: g.order_at_origin().map_or("inf".into(), |o| o.to_string()),
                weight: c.weight.to_string(),
            })?;
            let f = f.reinterpret(&ring);
            if !f.is_zero() && !forms.contains(&f) {
                forms.push(f);
            }
        }
        if !forms.is_empty() {
            let degree = c.weight.to_integer().to_u32().expect("integral weight");
            components.push(ConeComponent { gens: forms, degree });
        }
    }
    Ok(TangentCone { ring, components, best_effort: !e.standard_basis })
}

impl TangentCone {
    pub fn new(ring: &Ring, components: Vec<ConeComponent>) -> TangentCone {
        TangentCone { ring: ring.clone(), components, best_effort: false }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn all_gens(&self) -> Vec<Poly> {
        self.components.iter().flat_map(|c| c.gens.iter().cloned()).collect()
    }

    /// Ring of translation coordinates `t_<W>`.
    pub fn translation_ring(&self) -> Ring {
        let names: Vec<String> = self.ring.names().iter().map(|n| format!("t_{}", n)).collect();
        Ring::new(self.ring.field(), &names).expect("distinct names")
    }
}

impl fmt::Display for TangentCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| {
                let g: Vec<String> = c.gens.iter().map(|g| g.to_string()).collect();
                format!("({} : {})", g.join(", "), c.degree)
            })
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

/// Generators, in the translation ring, of the ideal cutting out the
/// translations `t` with `C + t = C`.
pub fn stabilizer_ideal(c: &TangentCone) -> Vec<Poly> {
    let w = c.ring();
    let t = c.translation_ring();
    let n = w.nvars();
    let mut names: Vec<String> = w.names().to_vec();
    names.extend(t.names().iter().cloned());
    let both = Ring::new(w.field(), &names).expect("distinct names");
    let mut out: Vec<Poly> = Vec::new();
    for comp in &c.components {
        let gens: Vec<Poly> = comp.gens.iter().map(|g| g.to_ring(&both).unwrap()).collect();
        let basis = GroebnerBasis::new(&both, &gens);
        let shift: Vec<Poly> = (0..n).map(|i| both.var(i).add(&both.var(n + i))).collect();
        for g in &comp.gens {
            let moved = g.substitute(&both, &shift);
            let nf = basis.normal_form(&moved);
            // group by W-monomial; the T-parts are the stabilizer equations
            let mut groups: Vec<(Mono, Vec<(Mono, Elem)>)> = Vec::new();
            for (m, cf) in nf.terms() {
                let wm = m[..n].to_vec();
                let tm = m[n..].to_vec();
                match groups.iter_mut().find(|(k, _)| *k == wm) {
                    Some((_, v)) => v.push((tm, cf.clone())),
                    None => groups.push((wm, vec![(tm, cf.clone())])),
                }
            }
            for (_, terms) in groups {
                let p = Poly::from_terms(&t, terms);
                if !p.is_zero() && !out.contains(&p) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Additive form `sum_j coeffs[j] * W_j^q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Additive {
    pub q: u64,
    pub coeffs: Vec<Elem>,
    /// Variable whose coefficient is one and which no earlier form uses.
    pub pivot: usize,
}

impl Additive {
    pub fn to_poly(&self, ring: &Ring) -> Poly {
        let n = ring.nvars();
        Poly::from_terms(
            ring,
            self.coeffs.iter().enumerate().map(|(j, c)| {
                let mut m = vec![0; n];
                m[j] = self.q as u32;
                (m, c.clone())
            }),
        )
    }

    /// Raise to the `(q'/q)`-th power.
    pub fn frobenius(&self, k: Field, q_new: u64) -> Additive {
        let e = q_new / self.q;
        Additive { q: q_new, coeffs: self.coeffs.iter().map(|c| k.pow(c, e)).collect(), pivot: self.pivot }
    }
}

/// Additive generators of the ridge in triangular form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ridge {
    ring: Ring,
    pub sigmas: Vec<Additive>,
    /// Variable order realizing the triangular shape: pivots then the rest.
    pub order: Vec<usize>,
}

impl Ridge {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn polys(&self) -> Vec<Poly> {
        self.sigmas.iter().map(|s| s.to_poly(&self.ring)).collect()
    }

    pub fn degrees(&self) -> Vec<u64> {
        self.sigmas.iter().map(|s| s.q).collect()
    }

    pub fn is_triangular(&self) -> bool {
        let k = self.ring.field();
        for (i, s) in self.sigmas.iter().enumerate() {
            if i > 0 && self.sigmas[i - 1].q > s.q {
                return false;
            }
            if self.order[i] != s.pivot || !k.is_one(&s.coeffs[s.pivot]) {
                return false;
            }
            if self.order[..i].iter().any(|&j| !k.is_zero(&s.coeffs[j])) {
                return false;
            }
        }
        true
    }
}

fn var_power(ring: &Ring, j: usize, q: u64) -> Poly {
    let mut m = vec![0; ring.nvars()];
    m[j] = q as u32;
    ring.monomial(m, ring.field().one())
}

/// Extract additive generators of the stabilizer degree by degree.
pub fn ridge(c: &TangentCone) -> Result<Ridge, ConeError> {
    let k = c.ring().field();
    let t = c.translation_ring();
    let n = t.nvars();
    let stab = stabilizer_ideal(c);
    let basis = GroebnerBasis::new(&t, &stab);
    let p = k.characteristic();
    let top = stab.iter().filter_map(|g| g.total_degree()).max().unwrap_or(0) as u64;
    let mut sigmas: Vec<Additive> = Vec::new();
    let mut q = 1u64;
    loop {
        let current: Vec<Poly> = sigmas.iter().map(|s| s.to_poly(&t)).collect();
        if gb::ideal_equal(&t, &current, &stab) {
            break;
        }
        if q > top.max(1) {
            return Err(ConeError::GenerationFailure("stabilizer is not generated by additive forms".into()));
        }
        // additive forms of degree q in the stabilizer ideal
        let nfs: Vec<Poly> = (0..n).map(|j| basis.normal_form(&var_power(&t, j, q))).collect();
        let mut monos: Vec<Mono> = Vec::new();
        for f in &nfs {
            for (m, _) in f.terms() {
                if !monos.contains(m) {
                    monos.push(m.clone());
                }
            }
        }
        let rows: Vec<Vec<Elem>> = monos.iter().map(|m| nfs.iter().map(|f| f.coeff(m)).collect()).collect();
        let space = linalg::kernel(k, &rows, n);
        // remove what Frobenius powers of earlier forms already give
        let earlier: Vec<Additive> = sigmas.iter().map(|s| s.frobenius(k, q)).collect();
        let mut fresh: Vec<Vec<Elem>> = Vec::new();
        for v in space {
            let mut v = v;
            for e in &earlier {
                let f = v[e.pivot].clone();
                if !k.is_zero(&f) {
                    for (x, y) in v.iter_mut().zip(&e.coeffs) {
                        *x = k.sub(x, &k.mul(&f, y));
                    }
                }
            }
            if v.iter().any(|x| !k.is_zero(x)) {
                fresh.push(v);
            }
        }
        let pivots = linalg::rref(k, &mut fresh);
        for (v, pv) in fresh.into_iter().zip(pivots) {
            sigmas.push(Additive { q, coeffs: v, pivot: pv });
        }
        if p == 0 {
            q = top.max(1) + 1;
        } else {
            q *= p;
        }
    }
    let mut order: Vec<usize> = sigmas.iter().map(|s| s.pivot).collect();
    for j in 0..n {
        if !order.contains(&j) {
            order.push(j);
        }
    }
    let r = Ridge { ring: c.ring().clone(), sigmas, order };
    check_ridge(c, &r)?;
    Ok(r)
}

/// Exponent vectors `a` with `sum a_i w_i = d`.
fn weighted_exponents(w: &[u64], d: u64) -> Vec<Vec<u32>> {
    fn rec(w: &[u64], i: usize, left: u64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == w.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut e = 0;
        while e as u64 * w[i] <= left {
            cur[i] = e;
            rec(w, i + 1, left - e as u64 * w[i], cur, out);
            e += 1;
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    rec(w, 0, d, &mut vec![0; w.len()], &mut out);
    out
}

/// Coefficients of `target` in the products of `forms` of weighted degree
/// `degree`; `None` when `target` is not such a combination. The forms must
/// be homogeneous.
pub fn express_in(forms: &[Poly], target: &Poly, degree: u64) -> Option<Vec<(Vec<u32>, Elem)>> {
    let ring = target.ring();
    let k = ring.field();
    let degs: Vec<u64> = forms.iter().map(|f| f.total_degree().unwrap_or(0) as u64).collect();
    let exps = weighted_exponents(&degs, degree);
    let products: Vec<Poly> =
        exps.iter().map(|a| a.iter().zip(forms).fold(ring.one(), |acc, (&e, f)| acc.mul(&f.pow(e)))).collect();
    let mut monos: Vec<Mono> = Vec::new();
    for f in products.iter().chain(std::iter::once(target)) {
        for (m, _) in f.terms() {
            if !monos.contains(m) {
                monos.push(m.clone());
            }
        }
    }
    let vec_of = |p: &Poly| -> Vec<Elem> { monos.iter().map(|m| p.coeff(m)).collect() };
    let cols: Vec<Vec<Elem>> = products.iter().map(vec_of).collect();
    let x = linalg::solve_span(k, &cols, &vec_of(target))?;
    Some(exps.into_iter().zip(x).filter(|(_, c)| !k.is_zero(c)).collect())
}

/// Whether each generator of each component is a polynomial in the given
/// homogeneous forms. For an ideal generated in degree `b`, this is the
/// generation property `(In ∩ k[forms]) gr = In`.
pub fn generated_by(c: &TangentCone, forms: &[Poly]) -> bool {
    c.components.iter().all(|comp| comp.gens.iter().all(|g| express_in(forms, g, comp.degree as u64).is_some()))
}

/// Generation property and minimality for a ridge presentation.
pub fn check_ridge(c: &TangentCone, r: &Ridge) -> Result<(), ConeError> {
    let polys = r.polys();
    if !generated_by(c, &polys) {
        return Err(ConeError::GenerationFailure("cone is not generated by the ridge forms".into()));
    }
    for i in 0..polys.len() {
        let mut fewer = polys.clone();
        fewer.remove(i);
        if generated_by(c, &fewer) {
            return Err(ConeError::GenerationFailure(format!("ridge form {} is redundant", polys[i])));
        }
    }
    Ok(())
}

/// Minimal linear forms whose span carries the cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Directrix {
    ring: Ring,
    /// Coefficient vectors in reduced echelon form.
    pub forms: Vec<Vec<Elem>>,
    pub pivots: Vec<usize>,
}

impl Directrix {
    pub fn polys(&self) -> Vec<Poly> {
        let n = self.ring.nvars();
        self.forms
            .iter()
            .map(|v| {
                Poly::from_terms(
                    &self.ring,
                    v.iter().enumerate().map(|(j, c)| {
                        let mut m = vec![0; n];
                        m[j] = 1;
                        (m, c.clone())
                    }),
                )
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.forms.len()
    }
}

pub fn directrix(c: &TangentCone, r: &Ridge) -> Result<Directrix, ConeError> {
    let k = c.ring().field();
    let n = c.ring().nvars();
    let mut rows: Vec<Vec<Elem>> = Vec::new();
    for s in &r.sigmas {
        let parts: Vec<Vec<Elem>> =
            s.coeffs
            .iter()
            .map(|l| if s.q == 1 { vec![l.clone()] } else { k.p_basis(l, s.q).expect("additive coefficients decompose") })
            .collect();
        let width = parts.iter().map(|v| v.len()).max().unwrap_or(1);
        for i in 0..width {
            let row: Vec<Elem> = (0..n).map(|j| parts[j].get(i).cloned().unwrap_or_else(|| k.zero())).collect();
            if row.iter().any(|x| !k.is_zero(x)) {
                rows.push(row);
            }
        }
    }
    let pivots = linalg::rref(k, &mut rows);
    let d = Directrix { ring: c.ring().clone(), forms: rows, pivots };
    if !directrix_generates(c, &d.forms, &d.pivots) {
        return Err(ConeError::GenerationFailure("cone is not generated by the directrix forms".into()));
    }
    for i in 0..d.forms.len() {
        let mut fewer = d.forms.clone();
        fewer.remove(i);
        let mut fewer_rows = fewer.clone();
        let pv = linalg::rref(k, &mut fewer_rows);
        if directrix_generates(c, &fewer_rows, &pv) {
            return Err(ConeError::GenerationFailure("directrix form is redundant".into()));
        }
    }
    Ok(d)
}

/// Complete the echelon forms by unit vectors, change coordinates, and test
/// that the generators only involve the form coordinates.
fn directrix_generates(c: &TangentCone, forms: &[Vec<Elem>], pivots: &[usize]) -> bool {
    let k = c.ring().field();
    let ring = c.ring();
    let n = ring.nvars();
    let mut mat: Vec<Vec<Elem>> = forms.to_vec();
    let rest: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    for &j in &rest {
        let mut e = vec![k.zero(); n];
        e[j] = k.one();
        mat.push(e);
    }
    // new coordinate i is sum_j mat[i][j] W_j; express W_j in new coordinates
    let mut images = Vec::with_capacity(n);
    for j in 0..n {
        let mut target = vec![k.zero(); n];
        target[j] = k.one();
        let cols: Vec<Vec<Elem>> = mat.clone();
        // W_j = sum_i a_i * new_i  iff  sum_i a_i mat[i] = e_j
        let a = linalg::solve_span(k, &cols, &target).expect("invertible completion");
        images.push(Poly::from_terms(
            ring,
            a.into_iter().enumerate().map(|(i, c)| {
                let mut m = vec![0; n];
                m[i] = 1;
                (m, c)
            }),
        ));
    }
    let r = forms.len();
    c.all_gens().iter().all(|g| {
        let h = g.substitute(ring, &images);
        let free = h.terms().all(|(m, _)| m[r..].iter().all(|&e| e == 0));
        free
    })
}

/// Whether every ridge form is a `q`-th power of a linear form and the
/// numbers of forms agree.
pub fn reduced_ridge_equals_directrix(r: &Ridge, d: &Directrix) -> bool {
    if r.sigmas.len() != d.dim() {
        return false;
    }
    let k = r.ring().field();
    r.sigmas.iter().all(|s| {
        s.coeffs.iter().all(|c| {
            let mut x = c.clone();
            let mut q = s.q;
            while q > 1 {
                match k.pth_root(&x) {
                    Ok(Some(y)) => x = y,
                    _ => return false,
                }
                q /= k.characteristic();
            }
            true
        })
    })
}

impl fmt::Display for Ridge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sigmas.iter().map(|s| format!("({} : {})", s.to_poly(&self.ring), s.q)).collect();
        write!(f, "{}", parts.join(" & "))
    }
}

impl fmt::Display for Directrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.polys().iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn running_example(p: u64) -> Pair {
        let r = Ring::new(Field::Prime(p), &["x", "y", "z", "t", "u", "v"]).unwrap();
        let p2 = p * p;
        let f1 = r.parse(&format!("x*y^{p2} - x*t^3*u^{p2}")).unwrap();
        let f2 = r.parse(&format!("z^{}*(t + u)^{p} - v^{}", p2 - p + 1, p2 * p)).unwrap();
        let f3 = r.parse(&format!("t^{} - u^{}*v", p2 + 2, p2 + 1)).unwrap();
        Pair::single(&r, vec![f1, f2, f3], int((p2 + 1) as i64)).unwrap().with_standard_basis(true)
    }

    fn second_example(p: u64) -> Pair {
        let r = Ring::new(Field::rational_function(p).unwrap(), &["x", "y", "z", "t", "u", "v"]).unwrap();
        let p2 = p * p;
        let f1 = r.parse(&format!("(x^{p} + lam*y^{p})*z^{} + t*u*v^{p2}", p2 - p)).unwrap();
        let f2 = r.parse(&format!("z^{p2} + u^{p2} + lam*(x^{p} + lam*y^{p})^{p} + v^{}", p2 + 1)).unwrap();
        Pair::single(&r, vec![f1, f2], int(p2 as i64)).unwrap().with_standard_basis(true)
    }

    #[test]
    fn running_example_cone() {
        for p in [2u64, 3] {
            let c = tangent_cone(&running_example(p)).unwrap();
            let g = c.ring();
            let p2 = p * p;
            assert_eq!(c.components[0].gens.len(), 2);
            assert_eq!(c.components[0].gens[0], g.parse(&format!("X*Y^{p2}")).unwrap());
            assert_eq!(c.components[0].gens[1], g.parse(&format!("Z^{}*(T + U)^{p}", p2 - p + 1)).unwrap());
            assert!(!c.best_effort);
        }
    }

    #[test]
    fn running_example_ridge_and_directrix() {
        for p in [2u64, 3] {
            let c = tangent_cone(&running_example(p)).unwrap();
            let g = c.ring();
            let r = ridge(&c).unwrap();
            let want = [
                g.parse("X").unwrap(),
                g.parse("Z").unwrap(),
                g.parse(&format!("T^{p} + U^{p}")).unwrap(),
                g.parse(&format!("Y^{}", p * p)).unwrap(),
            ];
            assert_eq!(r.polys(), want);
            assert!(r.is_triangular());
            let d = directrix(&c, &r).unwrap();
            let dw = ["X", "Y", "Z", "T + U"].map(|s| g.parse(s).unwrap());
            assert_eq!(d.polys(), dw);
            assert!(reduced_ridge_equals_directrix(&r, &d));
        }
    }

    #[test]
    fn second_example_over_function_field() {
        for p in [2u64, 3] {
            let c = tangent_cone(&second_example(p)).unwrap();
            let g = c.ring();
            let p2 = p * p;
            assert_eq!(c.components[0].gens[0], g.parse(&format!("(X^{p} + lam*Y^{p})*Z^{}", p2 - p)).unwrap());
            let r = ridge(&c).unwrap();
            let want = [
                g.parse(&format!("X^{p} + lam*Y^{p}")).unwrap(),
                g.parse(&format!("Z^{p}")).unwrap(),
                g.parse(&format!("U^{p2}")).unwrap(),
            ];
            assert_eq!(r.polys(), want);
            assert!(r.is_triangular());
            let d = directrix(&c, &r).unwrap();
            assert_eq!(d.polys(), ["X", "Y", "Z", "U"].map(|s| g.parse(s).unwrap()));
            assert!(!reduced_ridge_equals_directrix(&r, &d));
        }
    }

    #[test]
    fn small_cones() {
        let q = Ring::new(Field::Rational, &["x", "y"]).unwrap();
        let c = tangent_cone(&Pair::single(&q, vec![q.parse("x").unwrap()], int(1)).unwrap()).unwrap();
        assert_eq!(stabilizer_ideal(&c), vec![c.translation_ring().parse("t_X").unwrap()]);
        let r = ridge(&c).unwrap();
        assert_eq!(r.polys(), vec![c.ring().parse("X").unwrap()]);
        assert!(reduced_ridge_equals_directrix(&r, &directrix(&c, &r).unwrap()));

        let xy = tangent_cone(&Pair::single(&q, vec![q.parse("x*y").unwrap()], int(2)).unwrap()).unwrap();
        let s = stabilizer_ideal(&xy);
        let t = xy.translation_ring();
        assert!(gb::radical_member(&t, &t.var(0), &s) && gb::radical_member(&t, &t.var(1), &s));

        let f2 = Ring::new(Field::Prime(2), &["x"]).unwrap();
        let sq = tangent_cone(&Pair::single(&f2, vec![f2.parse("x^2").unwrap()], int(2)).unwrap()).unwrap();
        let st = stabilizer_ideal(&sq);
        assert_eq!(st, vec![sq.translation_ring().parse("t_X^2").unwrap()]);
        let r = ridge(&sq).unwrap();
        assert_eq!(r.polys(), vec![sq.ring().parse("X^2").unwrap()]);
        let d = directrix(&sq, &r).unwrap();
        assert_eq!(d.polys(), vec![sq.ring().parse("X").unwrap()]);

        let q0 = Ring::new(Field::Rational, &["x"]).unwrap();
        let c0 = tangent_cone(&Pair::single(&q0, vec![q0.parse("x^2").unwrap()], int(2)).unwrap()).unwrap();
        let r0 = ridge(&c0).unwrap();
        assert_eq!(directrix(&c0, &r0).unwrap().polys(), vec![c0.ring().parse("X").unwrap()]);
        assert!(reduced_ridge_equals_directrix(&r0, &directrix(&c0, &r0).unwrap()));
    }

    #[test]
    fn cone_needs_singular_origin() {
        let q = Ring::new(Field::Rational, &["x", "y"]).unwrap();
        let e = Pair::single(&q, vec![q.parse("x + y^2").unwrap()], int(2)).unwrap();
        assert!(matches!(tangent_cone(&e), Err(ConeError::NotSingular { .. })));
    }
}
