//! Generic determinantal varieties `X_{m,n,r}`: the minors pair and a
//! chart-by-chart resolution driver that re-verifies every step with
//! Gröbner bases.

use std::fmt;

use thiserror::Error;

use crate::field::Field;
use crate::gb::GroebnerBasis;
use crate::pair::{Chart, Component, DivisorDef, Pair, PairError};
use crate::poly::{int, Poly, Ring};
use crate::reduce::{self, MoveCertificate, ReduceError};

#[derive(Debug, Error)]
pub enum DetError {
    #[error("need 1 <= r <= m <= n, got ({m},{n},{r})")]
    BadShape { m: usize, n: usize, r: usize },
    #[error("({m},{n},{r}) exceeds the default size cap m*n <= 16, r <= 4")]
    TooLarge { m: usize, n: usize, r: usize },
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Letters used for the coordinates introduced in successive rounds.
const LETTERS: [&str; 8] = ["x", "y", "z", "w", "v", "u", "t", "s"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenericMatrixSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub field: Field,
}

impl GenericMatrixSpec {
    pub fn new(m: usize, n: usize, r: usize, field: Field) -> Result<GenericMatrixSpec, DetError> {
        if r == 0 || r > m || m > n {
            return Err(DetError::BadShape { m, n, r });
        }
        Ok(GenericMatrixSpec { m, n, r, field })
    }

    pub fn within_cap(&self) -> bool {
        self.m * self.n <= 16 && self.r <= 4
    }

    /// Name of entry `(i, j)` (1-based) among the coordinates of `round`.
    pub fn entry_name(&self, round: usize, i: usize, j: usize) -> String {
        let letter = LETTERS.get(round).map_or_else(|| format!("c{}_", round), |s| s.to_string());
        if self.n > 9 {
            format!("{}{}_{}", letter, i, j)
        } else {
            format!("{}{}{}", letter, i, j)
        }
    }

    pub fn ring(&self) -> Ring {
        let names: Vec<String> =
            (1..=self.m).flat_map(|i| (1..=self.n).map(move |j| (i, j))).map(|(i, j)| self.entry_name(0, i, j)).collect();
        Ring::new(self.field, &names).expect("distinct entry names")
    }

    /// Variable index of entry `(i, j)`, 1-based. Renaming keeps positions.
    pub fn var(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n + (j - 1)
    }
}

/// All `k`-subsets of `items`, lexicographic.
fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (pos, &first) in items.iter().enumerate() {
        for mut rest in subsets(&items[pos + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Determinant by expansion along the first row.
fn det(ring: &Ring, entries: &[Vec<Poly>]) -> Poly {
    let k = entries.len();
    if k == 0 {
        return ring.one();
    }
    if k == 1 {
        return entries[0][0].clone();
    }
    let mut acc = ring.zero();
    for c in 0..k {
        let sub: Vec<Vec<Poly>> = entries[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, p)| p.clone()).collect())
            .collect();
        let t = entries[0][c].mul(&det(ring, &sub));
        acc = if c % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    acc
}

/// The `k x k` minors of the submatrix on `rows x cols` of generic entries.
fn minors_of(spec: &GenericMatrixSpec, ring: &Ring, rows: &[usize], cols: &[usize], k: usize) -> Vec<Poly> {
    let mut out = Vec::new();
    for ri in subsets(rows, k) {
        for ci in subsets(cols, k) {
            let entries: Vec<Vec<Poly>> =
                ri.iter().map(|&i| ci.iter().map(|&j| ring.var(spec.var(i, j))).collect()).collect();
            out.push(det(ring, &entries));
        }
    }
    out
}

fn minors_pair_on(spec: &GenericMatrixSpec, ring: &Ring, rows: &[usize], cols: &[usize], k: usize) -> Pair {
    let comps =
        minors_of(spec, ring, rows, cols, k).into_iter().map(|f| Component { gens: vec![f], weight: int(k as i64) }).collect();
    Pair::new(ring, comps).expect("minors are nonzero").with_standard_basis(true)
}

/// `E_{m,n,r}`: every `r x r` minor with weight `r`.
pub fn minors_pair(spec: &GenericMatrixSpec) -> Pair {
    let rows: Vec<usize> = (1..=spec.m).collect();
    let cols: Vec<usize> = (1..=spec.n).collect();
    minors_pair_on(spec, &spec.ring(), &rows, &cols, spec.r)
}

#[derive(Clone, Debug)]
pub struct LemmaEquivalence {
    /// `E_{m,n,r} -> (x_11, 1) & ... & (x_mn, 1)`.
    pub certificate: MoveCertificate,
    pub sing: Vec<Poly>,
    /// `Sing(E)` is exactly the origin: every `x_ij` is in the radical of
    /// `sing` and every generator of `sing` vanishes there.
    pub sing_is_origin: bool,
}

/// Certificate `E_{m,n,r} ~ ∩ (x_ij, 1)` from the ridge decomposition,
/// with the singular locus checked against the origin.
pub fn lemma_equivalence(spec: &GenericMatrixSpec) -> Result<LemmaEquivalence, DetError> {
    let e = minors_pair(spec);
    let ring = e.ring().clone();
    let dec = reduce::ridge_decomposition(&e)?;
    let mut cert = dec.certificate.clone();
    // bring the lifted coordinates into variable order
    let pos = |c: &Component| -> Option<usize> {
        if c.gens.len() != 1 {
            return None;
        }
        let sv = c.gens[0].support_vars();
        (sv.len() == 1 && c.gens[0].num_terms() == 1).then(|| sv[0])
    };
    let comps = cert.target.components().to_vec();
    if comps.iter().all(|c| pos(c).is_some()) {
        let mut perm: Vec<usize> = (0..comps.len()).collect();
        perm.sort_by_key(|&i| pos(&comps[i]));
        if perm.iter().enumerate().any(|(a, &b)| a != b) {
            let mut d = reduce::Derivation::resume(cert);
            d.apply(reduce::Move::Reorder { perm })?;
            cert = d.finish();
        }
    }
    let sing = e.singular_locus_ideal().gens;
    let k = ring.field();
    let sing_is_origin = sing.iter().all(|g| k.is_zero(&g.constant_term()))
        && (0..ring.nvars()).all(|i| sing.contains(&ring.var(i)) || crate::gb::radical_member(&ring, &ring.var(i), &sing));
    Ok(LemmaEquivalence { certificate: cert, sing, sing_is_origin })
}

/// Whether a certificate ends at `∩ (x_ij, 1)` over all variables.
pub fn is_coordinate_target(cert: &MoveCertificate) -> bool {
    let ring = cert.target.ring();
    let comps = cert.target.components();
    comps.len() == ring.nvars()
        && comps.iter().enumerate().all(|(i, c)| c.weight == int(1) && c.gens == vec![ring.var(i)])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Verified,
    /// A generator on one side not in the ideal of the other.
    Failed { reason: String, witness: Poly },
}

impl Status {
    pub fn is_verified(&self) -> bool {
        matches!(self, Status::Verified)
    }
}

#[derive(Clone, Debug)]
pub struct GluingCheck {
    pub statement: String,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct ChartNode {
    pub round: usize,
    /// Original indices `(i1, j1)` of the chart variable; `None` at the root.
    pub choice: Option<(usize, usize)>,
    pub chart: Chart,
    /// Rows and columns of the generic matrix still present.
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Recorded coordinate changes, as `new = old-coordinate expression`.
    pub substitution: Vec<String>,
    /// Strict transform of the current minors pair after the substitution.
    pub strict: Vec<Poly>,
    /// Minors of the reduced generic matrix.
    pub recognized: Vec<Poly>,
    pub size: (usize, usize, usize),
    pub status: Status,
    /// Next center against the transform of the global minors ideal.
    pub gluing: Vec<GluingCheck>,
    pub children: Vec<ChartNode>,
}

impl ChartNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn label(&self) -> String {
        match self.choice {
            None => "root".into(),
            Some((i, j)) => {
                let name = self.chart.history.last().map_or(String::new(), |h| h.chart_var.clone());
                format!("{} chart ({},{})", name, i, j)
            }
        }
    }

    /// Strict transform generated by distinct coordinates.
    pub fn coordinate_regular(&self) -> bool {
        let mut seen = Vec::new();
        self.status.is_verified()
            && self.recognized.iter().all(|g| {
                let sv = g.support_vars();
                let ok = g.num_terms() == 1 && g.total_degree() == Some(1) && !seen.contains(&sv[0]);
                if ok {
                    seen.push(sv[0]);
                }
                ok
            })
    }

    /// Boundary divisors are distinct coordinate hypersurfaces, transverse
    /// to the coordinates cutting out the strict transform.
    pub fn snc_boundary(&self) -> bool {
        let mut seen: Vec<usize> = Vec::new();
        for d in &self.chart.boundary {
            match d.def {
                DivisorDef::Coord(i) if !seen.contains(&i) => seen.push(i),
                _ => return false,
            }
        }
        let cut: Vec<usize> = self.recognized.iter().flat_map(|g| g.support_vars()).collect();
        seen.iter().all(|i| !cut.contains(i))
    }
}

#[derive(Clone, Debug)]
pub struct ResolutionTrace {
    pub spec: GenericMatrixSpec,
    pub root: ChartNode,
}

impl ResolutionTrace {
    pub fn nodes(&self) -> Vec<&ChartNode> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in n.children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<&ChartNode> {
        self.nodes().into_iter().filter(|n| n.is_leaf()).collect()
    }

    /// Number of rounds along the longest path.
    pub fn depth(&self) -> usize {
        self.nodes().iter().map(|n| n.round).max().unwrap_or(0)
    }

    pub fn all_verified(&self) -> bool {
        self.nodes().iter().all(|n| n.status.is_verified())
    }

    pub fn first_failure(&self) -> Option<&ChartNode> {
        self.nodes().into_iter().find(|n| !n.status.is_verified())
    }

    /// Depth `r - 1` everywhere, every chart verified, every leaf
    /// coordinate-regular with snc boundary, gluing checks true.
    pub fn complete(&self) -> bool {
        let r = self.spec.r;
        self.all_verified()
            && verify_gluing(self)
            && self.leaves().iter().all(|l| l.round == r - 1 && l.coordinate_regular() && l.snc_boundary())
    }
}

/// Strict transform of `f` in the chart of `chart_var` for a coordinate
/// center.
fn strict_transform(ring: &Ring, f: &Poly, center: &[usize], chart_var: usize) -> Poly {
    let v = ring.var(chart_var);
    let images: Vec<Poly> = (0..ring.nvars())
        .map(|i| if i != chart_var && center.contains(&i) { v.mul(&ring.var(i)) } else { ring.var(i) })
        .collect();
    let t = f.substitute(ring, &images);
    let e = crate::pair::var_power(&t, chart_var);
    crate::pair::divide_var_power(&t, chart_var, e)
}

/// First generator of `b` outside `<a>`.
fn outside(ring: &Ring, a: &[Poly], b: &[Poly]) -> Option<Poly> {
    let gb = GroebnerBasis::new(ring, a);
    b.iter().find(|f| !gb.contains(f)).cloned()
}

fn compare(ring: &Ring, strict: &[Poly], recognized: &[Poly]) -> Status {
    if let Some(w) = outside(ring, recognized, strict) {
        return Status::Failed { reason: "strict transform generator outside the minors ideal".into(), witness: w };
    }
    if let Some(w) = outside(ring, strict, recognized) {
        return Status::Failed { reason: "minor outside the strict transform ideal".into(), witness: w };
    }
    Status::Verified
}

/// Resolve `X_{m,n,r}` by `r - 1` rounds of blowups. Sizes beyond the cap
/// need `allow_large`.
pub fn resolve_determinantal(spec: &GenericMatrixSpec, allow_large: bool) -> Result<ResolutionTrace, DetError> {
    if !allow_large && !spec.within_cap() {
        return Err(DetError::TooLarge { m: spec.m, n: spec.n, r: spec.r });
    }
    let ring = spec.ring();
    let rows: Vec<usize> = (1..=spec.m).collect();
    let cols: Vec<usize> = (1..=spec.n).collect();
    let recognized = minors_of(spec, &ring, &rows, &cols, spec.r);
    let tracked: Vec<(usize, Vec<Poly>)> = (2..=spec.r).map(|k| (k, minors_of(spec, &ring, &rows, &cols, k))).collect();
    let mut root = ChartNode {
        round: 0,
        choice: None,
        chart: Chart::new(&ring),
        rows,
        cols,
        substitution: Vec::new(),
        strict: recognized.clone(),
        recognized,
        size: (spec.m, spec.n, spec.r),
        status: Status::Verified,
        gluing: Vec::new(),
        children: Vec::new(),
    };
    grow(spec, &mut root, &tracked)?;
    Ok(ResolutionTrace { spec: *spec, root })
}

fn grow(spec: &GenericMatrixSpec, node: &mut ChartNode, tracked: &[(usize, Vec<Poly>)]) -> Result<(), DetError> {
    let round = node.round + 1;
    if round > spec.r - 1 {
        return Ok(());
    }
    let ring = node.chart.ring().clone();
    let k = spec.r - node.round;
    let e = minors_pair_on(spec, &ring, &node.rows, &node.cols, k);
    let center: Vec<usize> = node.rows.iter().flat_map(|&i| node.cols.iter().map(move |&j| spec.var(i, j))).collect();
    for &a in &node.rows {
        for &b in &node.cols {
            let c = spec.var(a, b);
            let bl = node.chart.blowup(&e, &center, c)?;
            let strict_pair = bl.strict.expect("minors pair is a standard basis");
            let mut strict: Vec<Poly> = strict_pair.components().iter().flat_map(|c| c.gens.clone()).collect();
            let mut tr: Vec<(usize, Vec<Poly>)> = tracked
                .iter()
                .filter(|(kk, _)| *kk > round)
                .map(|(kk, gs)| (*kk, gs.iter().map(|g| strict_transform(&ring, g, &center, c)).collect()))
                .collect();

            // y_ij = x'_ij - x'_{i b} x'_{a j} off row a and column b
            let rows: Vec<usize> = node.rows.iter().copied().filter(|&i| i != a).collect();
            let cols: Vec<usize> = node.cols.iter().copied().filter(|&j| j != b).collect();
            let mut images: Vec<Poly> = (0..ring.nvars()).map(|i| ring.var(i)).collect();
            let mut named: Vec<(String, Poly)> = Vec::new();
            let mut names: Vec<String> = ring.names().to_vec();
            let mut substitution = Vec::new();
            for &i in &rows {
                for &j in &cols {
                    let v = spec.var(i, j);
                    let corr = ring.var(spec.var(i, b)).mul(&ring.var(spec.var(a, j)));
                    images[v] = ring.var(v).add(&corr);
                    named.push((ring.name(v).to_string(), images[v].clone()));
                    names[v] = spec.entry_name(round, i, j);
                    substitution.push(format!("{} = {} - {}", names[v], ring.name(v), corr));
                }
            }
            let named_ref: Vec<(&str, Poly)> = named.iter().map(|(s, p)| (s.as_str(), p.clone())).collect();
            let chart = bl.chart.change_coordinates(&named_ref)?;
            let new_ring = ring.renamed(&names).expect("fresh names");
            let chart = chart.renamed(&new_ring)?;
            let move_poly = |f: &Poly| f.substitute(&ring, &images).reinterpret(&new_ring);
            strict = strict.iter().map(move_poly).collect();
            for (_, gs) in tr.iter_mut() {
                *gs = gs.iter().map(move_poly).collect();
            }

            let recognized = minors_of(spec, &new_ring, &rows, &cols, k - 1);
            let status = compare(&new_ring, &strict, &recognized);
            let next_center: Vec<Poly> =
                rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| new_ring.var(spec.var(i, j))).collect();
            let mut gluing = Vec::new();
            if let Some((kk, gs)) = tr.iter().find(|(kk, _)| *kk == round + 1) {
                let gc = GroebnerBasis::new(&new_ring, &next_center);
                for g in gs {
                    gluing.push(GluingCheck {
                        statement: format!("transform of a {}x{} minor {} in the next center", kk, kk, g),
                        holds: gc.contains(g),
                    });
                }
                let gt = GroebnerBasis::new(&new_ring, gs);
                for y in &next_center {
                    gluing.push(GluingCheck {
                        statement: format!("{} in the transform of the {}x{} minors", y, kk, kk),
                        holds: gt.contains(y),
                    });
                }
            }
            let mut child = ChartNode {
                round,
                choice: Some((a, b)),
                chart,
                rows,
                cols,
                substitution,
                strict,
                recognized,
                size: (node.rows.len() - 1, node.cols.len() - 1, k - 1),
                status,
                gluing,
                children: Vec::new(),
            };
            if child.status.is_verified() {
                grow(spec, &mut child, &tr)?;
            }
            node.children.push(child);
        }
    }
    Ok(())
}

/// Every recorded gluing membership holds.
pub fn verify_gluing(trace: &ResolutionTrace) -> bool {
    trace.nodes().iter().all(|n| n.gluing.iter().all(|g| g.holds))
}

impl fmt::Display for ResolutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        writeln!(
            f,
            "X({},{},{}) over {}: {} rounds, {} leaf charts",
            s.m,
            s.n,
            s.r,
            s.field.descriptor(),
            self.depth(),
            self.leaves().len()
        )?;
        for n in self.nodes().into_iter().skip(1) {
            let pad = "  ".repeat(n.round - 1);
            let status = match &n.status {
                Status::Verified => "verified".to_string(),
                Status::Failed { reason, witness } => format!("FAILED: {} ({})", reason, witness),
            };
            let glued = n.gluing.iter().filter(|g| g.holds).count();
            writeln!(
                f,
                "{}round {} {}: size ({},{},{}), {}, gluing {}/{}",
                pad,
                n.round,
                n.label(),
                n.size.0,
                n.size.1,
                n.size.2,
                status,
                glued,
                n.gluing.len()
            )?;
            for sub in &n.substitution {
                writeln!(f, "{}  {}", pad, sub)?;
            }
            if n.is_leaf() {
                writeln!(
                    f,
                    "{}  leaf: regular {}, boundary {}",
                    pad,
                    n.coordinate_regular(),
                    n.chart.describe_boundary().join(", ")
                )?;
            }
        }
        Ok(())
    }
}
