use idexp::cone::{self, ConeComponent, TangentCone};
use idexp::detres::{self, ChartNode, GenericMatrixSpec};
use idexp::field::Field;
use idexp::pair::{Chart, Pair, PointSpec};
use idexp::poly::{int, Poly, Ring};
use idexp::reduce::{self, ReduceError, ReductionCase};
use idexp::sample;
use proptest::prelude::*;
use rand::Rng;

fn random_cone(seed: u64) -> TangentCone {
    let mut rng = sample::rng(seed);
    let k = sample::small_field(&mut rng);
    let n = rng.gen_range(1..=3);
    let w = Ring::new(k, &["X", "Y", "Z"][..n]).unwrap();
    let d = rng.gen_range(1..=4);
    let mut gens: Vec<Poly> = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let f = sample::poly(&mut rng, &w, d, 3).homogeneous_part(d);
        if !f.is_zero() && !gens.contains(&f) {
            gens.push(f);
        }
    }
    if gens.is_empty() {
        gens.push(w.var(0).pow(d));
    }
    TangentCone::new(&w, vec![ConeComponent { gens, degree: d }])
}

/// A pair whose weight is the order of its generators, so the origin is
/// singular.
fn singular_pair(seed: u64, field: Field) -> Pair {
    let mut rng = sample::rng(seed);
    let r = sample::small_ring(&mut rng, field, 3);
    let gens: Vec<Poly> = (0..rng.gen_range(1..=2))
        .map(|_| loop {
            let f = sample::poly(&mut rng, &r, 4, 3);
            if f.order_at_origin().is_some_and(|o| o > 0) {
                break f;
            }
        })
        .collect();
    let b = gens.iter().filter_map(|g| g.order_at_origin()).min().unwrap();
    Pair::single(&r, gens, int(b as i64)).unwrap().with_standard_basis(true)
}

/// `g = a v + h` with `h` free of `v`, or `g = unit * v`.
fn straightenable(g: &Poly, v: usize) -> bool {
    let with_v: Vec<_> = g.terms().filter(|(m, _)| m[v] > 0).collect();
    let linear = |m: &[u32]| m[v] == 1 && m.iter().sum::<u32>() == 1;
    if with_v.len() == 1 && linear(with_v[0].0) {
        return true;
    }
    with_v.len() == g.num_terms() && with_v.iter().any(|(m, _)| linear(m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ridge_is_minimal_and_vanishes_on_directrix(seed in any::<u64>()) {
        let c = random_cone(seed);
        let rid = cone::ridge(&c).unwrap();
        cone::check_ridge(&c, &rid).unwrap();
        let polys = rid.polys();
        prop_assert!(cone::generated_by(&c, &polys));
        for i in 0..polys.len() {
            let mut fewer = polys.clone();
            fewer.remove(i);
            prop_assert!(!cone::generated_by(&c, &fewer));
        }
        let dir = cone::directrix(&c, &rid).unwrap();
        let w = c.ring();
        let n = w.nvars();
        prop_assert!(dir.dim() <= n && rid.sigmas.len() <= n);
        // parametrize V(directrix) by the free coordinates
        let k = w.field();
        let mut images: Vec<Poly> = (0..n).map(|j| w.var(j)).collect();
        for (form, &piv) in dir.forms.iter().zip(&dir.pivots) {
            let mut img = w.zero();
            for j in (0..n).filter(|j| !dir.pivots.contains(j)) {
                img = img.sub(&w.var(j).scale(&form[j]));
            }
            images[piv] = img;
        }
        for s in &polys {
            prop_assert!(s.substitute(w, &images).is_zero(), "{} does not vanish on the directrix", s);
        }
        if k.characteristic() == 0 {
            prop_assert!(rid.degrees().iter().all(|&q| q == 1));
            prop_assert!(cone::reduced_ridge_equals_directrix(&rid, &dir));
        }
    }

    #[test]
    fn characteristic_zero_collapse(seed in any::<u64>()) {
        let e = singular_pair(seed, Field::Rational);
        let dec = reduce::ridge_decomposition(&e).unwrap();
        let rid = dec.ridge.as_ref().unwrap();
        let s = rid.sigmas.len();
        prop_assert!(s > 0 && rid.degrees().iter().all(|&q| q == 1));
        match reduce::classify(&e) {
            Ok(rep) => {
                prop_assert_eq!(rep.case, ReductionCase::MaximalContact { t: s });
                rep.certificate.verify().unwrap();
                rep.contact_certificate.unwrap().verify().unwrap();
            }
            // refused only for an element that is neither linear in its
            // pivot nor a unit multiple of it
            Err(ReduceError::Straighten(r)) => {
                let r = e.ring().parse(&r).unwrap();
                prop_assert!(rid.sigmas.iter().all(|sg| !straightenable(&r, sg.pivot)), "refused {}", r);
            }
            Err(err) => prop_assert!(false, "{}", err),
        }
    }

    #[test]
    fn certificates_replay_exactly(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let k = sample::small_field(&mut rng);
        let r = sample::small_ring(&mut rng, k, 3);
        let e = sample::pair(&mut rng, &r, 4);
        let cert = sample::certificate(&mut rng, &e, 5);
        prop_assert_eq!(cert.replay().unwrap(), cert.target.clone());
        prop_assert!(sample::order_mismatches(&cert).is_empty());
    }

    #[test]
    fn coefficient_pairs_follow_certificates(seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let k = sample::small_field(&mut rng);
        let r = sample::small_ring(&mut rng, k, 3);
        let e = sample::pair(&mut rng, &r, 4);
        let cert = sample::certificate(&mut rng, &e, 3);
        let y = vec![rng.gen_range(0..r.nvars())];
        let lifted = reduce::coefficient_certificate(&cert, &y).unwrap();
        lifted.verify().unwrap();
        prop_assert_eq!(&lifted.source, &reduce::coefficient_pair_in_ring(&cert.source, &y));
        prop_assert_eq!(&lifted.target, &reduce::coefficient_pair_in_ring(&cert.target, &y));
        for x in sample::probe_points(&r) {
            prop_assert_eq!(lifted.source.ord_at(&x), lifted.target.ord_at(&x), "at {:?}", x);
        }
    }
}

fn check_sizes(node: &ChartNode) {
    for child in &node.children {
        let (m, n, r) = node.size;
        assert_eq!(child.size, (m - 1, n - 1, r - 1), "{}", child.label());
        check_sizes(child);
    }
}

#[test]
fn determinantal_traces_shrink_each_round() {
    let specs = [(1, 1, 1), (1, 4, 1), (2, 2, 1), (2, 2, 2), (2, 4, 2), (3, 3, 2), (3, 3, 3), (2, 3, 2), (3, 4, 2)];
    for field in [Field::Rational, Field::Prime(2), Field::Prime(3)] {
        for (m, n, r) in specs {
            let spec = GenericMatrixSpec::new(m, n, r, field).unwrap();
            let trace = detres::resolve_determinantal(&spec, false).unwrap();
            assert_eq!(trace.depth(), r - 1, "({m},{n},{r}) over {:?}", field);
            assert_eq!(trace.root.size, (m, n, r));
            check_sizes(&trace.root);
            assert!(trace.complete(), "({m},{n},{r}) over {:?}", field);
            for leaf in trace.leaves() {
                assert!(leaf.coordinate_regular() && leaf.snc_boundary(), "{}", leaf.label());
            }
        }
    }
}

#[test]
fn blowups_do_not_raise_the_order() {
    let q = Field::Rational;
    let cases: Vec<(Ring, &str, i64, Vec<usize>)> = vec![
        (Ring::new(q, &["x", "y", "z"]).unwrap(), "x^3 - y^3*z^2", 2, vec![0, 1]),
        (Ring::new(q, &["x", "y", "z"]).unwrap(), "x^3 - y^3*z^2", 3, vec![0, 1]),
        (Ring::new(q, &["x", "y", "z"]).unwrap(), "x^2 + y^3 + 3*y^2*z + 3*y*z^2 + z^3 + z^5", 2, vec![0, 1, 2]),
        (Ring::new(Field::Prime(3), &["y1", "y2", "u1", "u2", "u3"]).unwrap(), "y1^3*y2^3 + u1^7 + u2^6*u3", 6, vec![0, 1, 2, 3, 4]),
        (Ring::new(Field::Prime(2), &["x", "y", "z"]).unwrap(), "x^2 + y^3*z + z^5", 2, vec![0, 1, 2]),
    ];
    for (r, f, b, center) in cases {
        let e = Pair::single(&r, vec![r.parse(f).unwrap()], int(b)).unwrap();
        let before = e.ord_at(&PointSpec::origin(&r)).unwrap();
        for &v in &center {
            let up = Chart::new(&r).blowup(&e, &center, v).unwrap();
            let after = up.pair.ord_at(&PointSpec::origin(up.pair.ring()));
            assert!(after.as_ref().is_some_and(|a| *a <= before), "{f} : {b} chart {v}: {:?} > {}", after, before);
        }
    }
}
