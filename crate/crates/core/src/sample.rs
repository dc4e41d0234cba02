//! Seeded random pairs and move sequences for property checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::Field;
use crate::pair::{Component, Pair, PointSpec};
use crate::poly::{int, rat, Poly, Ring};
use crate::reduce::{self, Derivation, Move, MoveCertificate};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One of `Q`, `F_2`, `F_3`.
pub fn small_field<R: Rng>(rng: &mut R) -> Field {
    [Field::Rational, Field::Prime(2), Field::Prime(3)][rng.gen_range(0..3)]
}

pub fn small_ring<R: Rng>(rng: &mut R, field: Field, max_vars: usize) -> Ring {
    let n = rng.gen_range(1..=max_vars.clamp(1, 3));
    Ring::new(field, &["x", "y", "z"][..n]).expect("distinct names")
}

/// Nonzero polynomial with at most `terms` terms of degree at most `deg`
/// and small integer coefficients.
pub fn poly<R: Rng>(rng: &mut R, ring: &Ring, deg: u32, terms: usize) -> Poly {
    let k = ring.field();
    let n = ring.nvars();
    loop {
        let mut f = ring.zero();
        for _ in 0..rng.gen_range(1..=terms) {
            let mut m = vec![0u32; n];
            let d = rng.gen_range(0..=deg);
            for _ in 0..d {
                m[rng.gen_range(0..n)] += 1;
            }
            let c = k.from_i64(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
            f = f.add(&ring.monomial(m, c));
        }
        if !f.is_zero() {
            return f;
        }
    }
}

/// Pair with one or two components, each with one or two generators,
/// weights in `1..=max_weight` (occasionally halves).
pub fn pair<R: Rng>(rng: &mut R, ring: &Ring, max_weight: i64) -> Pair {
    let comps = (0..rng.gen_range(1..=2))
        .map(|_| {
            let gens = (0..rng.gen_range(1..=2)).map(|_| poly(rng, ring, 4, 3)).collect();
            let b = rng.gen_range(1..=max_weight);
            let weight = if rng.gen_bool(0.15) { rat(2 * b - 1, 2) } else { int(b) };
            Component { gens, weight }
        })
        .collect();
    Pair::new(ring, comps).expect("nonzero generators")
}

fn integral_comps(e: &Pair) -> Vec<usize> {
    (0..e.components().len()).filter(|&i| e.components()[i].weight.is_integer()).collect()
}

/// A candidate move for `e`; it may still fail its side conditions.
pub fn candidate<R: Rng>(rng: &mut R, e: &Pair) -> Option<Move> {
    let ring = e.ring();
    let n = ring.nvars();
    let comps = e.components();
    let c = rng.gen_range(0..comps.len());
    let nc = comps.len();
    let m = match rng.gen_range(0..10) {
        0 => Move::Power { comp: c, a: rng.gen_range(2..=3) },
        1 => {
            let ints = integral_comps(e);
            let comp = *ints.choose(rng)?;
            let b = comps[comp].weight.to_integer().try_into().unwrap_or(1u32);
            if b < 2 {
                return None;
            }
            let mut nv = vec![0u32; n];
            for _ in 0..rng.gen_range(1..b) {
                nv[rng.gen_range(0..n)] += 1;
            }
            Move::Diff { comp, gen: rng.gen_range(0..comps[comp].gens.len()), n: nv }
        }
        2 if nc >= 2 => {
            let a = rng.gen_range(0..nc);
            let b = (a + rng.gen_range(1..nc)) % nc;
            Move::SumSameWeight { first: a.min(b), second: a.max(b) }
        }
        3 if comps[c].gens.len() >= 2 => {
            let k = rng.gen_range(1..comps[c].gens.len());
            Move::Split { comp: c, parts: vec![comps[c].gens[..k].to_vec(), comps[c].gens[k..].to_vec()] }
        }
        4 => {
            let a = rng.gen_range(0..nc);
            let factors = vec![(a, 1), (rng.gen_range(0..nc), 1)];
            let witnesses =
                factors.iter().map(|&(i, _)| reduce::witness_for(&comps[i])).collect::<Option<Vec<_>>>()?;
            Move::Product { factors, witnesses }
        }
        5 if nc >= 2 => {
            let other = (c + rng.gen_range(1..nc)) % nc;
            Move::Absorb { comp: c, factors: vec![(other, rng.gen_range(1..=2))] }
        }
        6 => Move::Flatten,
        7 => {
            let k = ring.field();
            Move::Scale { comp: c, gen: rng.gen_range(0..comps[c].gens.len()), by: k.from_i64(rng.gen_range(1..=2)) }
        }
        8 if comps[c].gens.len() >= 2 => {
            let g = rng.gen_range(0..comps[c].gens.len());
            let other = (g + 1) % comps[c].gens.len();
            Move::Combine { comp: c, gen: g, terms: vec![(other, poly(rng, ring, 1, 2))] }
        }
        9 => {
            let mut perm: Vec<usize> = (0..nc).collect();
            perm.shuffle(rng);
            Move::Reorder { perm }
        }
        _ => return None,
    };
    Some(m)
}

/// Whether `e` is small enough for further moves to stay cheap.
fn small(e: &Pair) -> bool {
    e.components().len() <= 5
        && e.components().iter().all(|c| c.gens.len() <= 4 && c.gens.iter().all(|g| g.total_degree().unwrap_or(0) <= 8))
}

/// Certificate from up to `steps` moves that pass their side conditions.
/// Stops early once the pair grows large.
pub fn certificate<R: Rng>(rng: &mut R, e: &Pair, steps: usize) -> MoveCertificate {
    let mut d = Derivation::new(e);
    let mut applied = 0;
    for _ in 0..steps * 8 {
        if applied == steps || !small(d.current()) {
            break;
        }
        let Some(m) = candidate(rng, d.current()) else { continue };
        if d.apply(m).is_ok() {
            applied += 1;
        }
    }
    d.finish()
}

/// The origin and the generic point of every nonempty coordinate subspace.
pub fn probe_points(ring: &Ring) -> Vec<PointSpec> {
    let n = ring.nvars();
    let mut out = vec![PointSpec::origin(ring)];
    for mask in 1u32..(1 << n) {
        let vars: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if vars.len() < n {
            out.push(PointSpec::Subspace(vars));
        }
    }
    out
}

/// Points where source and target orders disagree.
pub fn order_mismatches(cert: &MoveCertificate) -> Vec<PointSpec> {
    probe_points(cert.source.ring())
        .into_iter()
        .filter(|x| cert.source.ord_at(x) != cert.target.ord_at(x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_runs_repeat() {
        let mut a = rng(7);
        let mut b = rng(7);
        let fa = small_field(&mut a);
        let fb = small_field(&mut b);
        let ra = small_ring(&mut a, fa, 3);
        let rb = small_ring(&mut b, fb, 3);
        assert_eq!(pair(&mut a, &ra, 4), pair(&mut b, &rb, 4));
    }

    #[test]
    fn certificates_replay_and_move() {
        let mut r = rng(11);
        let mut nonempty = 0;
        for _ in 0..20 {
            let k = small_field(&mut r);
            let ring = small_ring(&mut r, k, 3);
            let e = pair(&mut r, &ring, 4);
            let c = certificate(&mut r, &e, 4);
            c.verify().unwrap();
            nonempty += usize::from(!c.moves.is_empty());
        }
        assert!(nonempty >= 15);
    }

    #[test]
    fn probes_cover_subspaces() {
        let r = Ring::new(Field::Rational, &["x", "y", "z"]).unwrap();
        assert_eq!(probe_points(&r).len(), 7);
    }
}
