//! Exact rational linear algebra: null spaces and a dense two-phase simplex.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

/// Basis of `{x : A x = 0}` for a dense `rows x cols` matrix.
pub fn null_space(a: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..cols {
                    let delta = &f * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(Vec<Q>),
    Infeasible,
}

/// Minimize `c.x` subject to `A x = b`, `x >= 0`, in exact arithmetic.
/// The objective is assumed bounded below on the feasible set (as it is
/// whenever `c >= 0`). Bland's rule guarantees termination.
pub fn minimize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    // Tableau columns: n structural, m artificial, then rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = vec![Q::zero(); width];
        for j in 0..n {
            row[j] = if flip { -a[i][j].clone() } else { a[i][j].clone() };
        }
        row[n + i] = Q::one();
        row[width - 1] = if flip { -b[i].clone() } else { b[i].clone() };
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut phase1 = vec![Q::zero(); width - 1];
    for j in n..n + m {
        phase1[j] = Q::one();
    }
    run_simplex(&mut t, &mut basis, &phase1, n + m);
    let infeasibility: Q = basis
        .iter()
        .zip(&t)
        .filter(|(&bj, _)| bj >= n)
        .map(|(_, row)| row[width - 1].clone())
        .fold(Q::zero(), |acc, v| acc + v);
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }

    // Drive zero-valued artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !t[r][j].is_zero()) {
                pivot(&mut t, &mut basis, r, j);
            } else {
                t.remove(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    let mut phase2 = vec![Q::zero(); width - 1];
    phase2[..n].clone_from_slice(c);
    run_simplex(&mut t, &mut basis, &phase2, n);

    let mut x = vec![Q::zero(); n];
    for (row, &bj) in t.iter().zip(&basis) {
        if bj < n {
            x[bj] = row[width - 1].clone();
        }
    }
    LpOutcome::Optimal(x)
}

fn pivot(t: &mut [Vec<Q>], basis: &mut [usize], r: usize, j: usize) {
    let inv = t[r][j].recip();
    for v in t[r].iter_mut() {
        *v = &*v * &inv;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && !row[j].is_zero() {
            let f = row[j].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
    }
    basis[r] = j;
}

/// Primal simplex on a tableau already in canonical form for `basis`.
/// Only columns below `allowed` may enter.
fn run_simplex(t: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], allowed: usize) {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    loop {
        // Reduced cost of column j: c_j - sum_i c_{B_i} t[i][j].
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut z = cost[j].clone();
            for (row, &bj) in t.iter().zip(basis.iter()) {
                if !cost[bj].is_zero() && !row[j].is_zero() {
                    z -= &cost[bj] * &row[j];
                }
            }
            z.is_negative()
        });
        let Some(j) = entering else { return };
        let mut leave: Option<(usize, Q)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[j].is_positive() {
                let ratio = &row[rhs] / &row[j];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        match leave {
            Some((i, _)) => pivot(t, basis, i, j),
            // Unbounded direction; callers only pose bounded problems.
            None => return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = vec![qv(&[1, 1, 0]), qv(&[2, 2, 0])];
        let ns = null_space(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for row in &a {
                let dot: Q = row.iter().zip(v).map(|(x, y)| x * y).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn small_lp() {
        // min x + y s.t. x - y = 1, x, y >= 0  ->  x = 1, y = 0
        let out = minimize(&qv(&[1, 1]), &[qv(&[1, -1])], &qv(&[1]));
        assert_eq!(out, LpOutcome::Optimal(qv(&[1, 0])));
    }

    #[test]
    fn infeasible_lp() {
        // x + y = -1 with x, y >= 0
        let out = minimize(&qv(&[1, 1]), &[qv(&[1, 1])], &qv(&[-1]));
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![qv(&[1, 1]), qv(&[2, 2])];
        let out = minimize(&qv(&[1, 2]), &a, &qv(&[3, 6]));
        assert_eq!(out, LpOutcome::Optimal(qv(&[3, 0])));
    }
}
