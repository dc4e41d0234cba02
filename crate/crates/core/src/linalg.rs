//! Dense Gaussian elimination over a [`Field`].

use crate::field::{Elem, Field};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(k: Field, rows: &mut Vec<Vec<Elem>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(pr) = (r..rows.len()).find(|&i| !k.is_zero(&rows[i][c])) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = k.inv(&rows[r][c]).expect("nonzero pivot");
        for x in rows[r].iter_mut() {
            *x = k.mul(x, &inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || k.is_zero(&row[c]) {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !k.is_zero(y) {
                    *x = k.sub(x, &k.mul(&f, y));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(k: Field, rows: &[Vec<Elem>]) -> usize {
    let mut m = rows.to_vec();
    rref(k, &mut m).len()
}

/// Basis of `{x : A x = 0}` where `A` has `ncols` columns.
pub fn kernel(k: Field, rows: &[Vec<Elem>], ncols: usize) -> Vec<Vec<Elem>> {
    let mut m = rows.to_vec();
    let pivots = rref(k, &mut m);
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![k.zero(); ncols];
        v[free] = k.one();
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = k.neg(&row[free]);
        }
        out.push(v);
    }
    out
}

/// Coefficients `c` with `sum c_i vectors[i] = target`, if any.
pub fn solve_span(k: Field, vectors: &[Vec<Elem>], target: &[Elem]) -> Option<Vec<Elem>> {
    let n = vectors.len();
    let dim = target.len();
    // augmented system: columns are the vectors, last column the target
    let mut m: Vec<Vec<Elem>> = (0..dim)
        .map(|i| {
            let mut row: Vec<Elem> = vectors.iter().map(|v| v[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    let pivots = rref(k, &mut m);
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![k.zero(); n];
    for (row, &pc) in m.iter().zip(&pivots) {
        x[pc] = row[n].clone();
    }
    Some(x)
}
