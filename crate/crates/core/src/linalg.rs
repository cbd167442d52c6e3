//! Exact dense linear solving over [`Scalar`], small systems only.

use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub enum LinSolve {
    Unique(Vec<Scalar>),
    /// Consistent but rank-deficient: a particular solution plus a nullspace
    /// basis (free variables set to 0 / 1 respectively).
    Underdetermined {
        particular: Vec<Scalar>,
        nullspace: Vec<Vec<Scalar>>,
    },
    Inconsistent,
}

impl LinSolve {
    pub fn particular(&self) -> Option<&Vec<Scalar>> {
        match self {
            LinSolve::Unique(x) => Some(x),
            LinSolve::Underdetermined { particular, .. } => Some(particular),
            LinSolve::Inconsistent => None,
        }
    }
}

/// Gaussian elimination on `a x = b` with exact pivoting (first nonzero).
/// `a` is row-major, rows may outnumber columns.
pub fn solve(a: &[Vec<Scalar>], b: &[Scalar]) -> Result<LinSolve> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    debug_assert_eq!(rows, b.len());
    let mut m: Vec<Vec<Scalar>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv_pivot = Scalar::one().checked_div(&m[row][col])?;
        for c in col..=cols {
            m[row][c] = &m[row][c] * &inv_pivot;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }

    // Any residual nonzero right-hand side below the pivot rows means the
    // system has no solution.
    for r in row..rows {
        if !m[r][cols].is_zero() {
            return Ok(LinSolve::Inconsistent);
        }
    }

    let mut particular = vec![Scalar::zero(); cols];
    for (i, &pc) in pivot_cols.iter().enumerate() {
        particular[pc] = m[i][cols].clone();
    }
    if pivot_cols.len() == cols {
        return Ok(LinSolve::Unique(particular));
    }

    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut nullspace = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![Scalar::zero(); cols];
        v[fc] = Scalar::one();
        for (i, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -&m[i][fc];
        }
        nullspace.push(v);
    }
    Ok(LinSolve::Underdetermined {
        particular,
        nullspace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn solves_unique_system() {
        // x + y = 3, x - y = 1
        let a = vec![vec![sc(1, 1), sc(1, 1)], vec![sc(1, 1), sc(-1, 1)]];
        let b = vec![sc(3, 1), sc(1, 1)];
        match solve(&a, &b).unwrap() {
            LinSolve::Unique(x) => assert_eq!(x, vec![sc(2, 1), sc(1, 1)]),
            other => panic!("expected unique, got {other:?}"),
        }
    }

    #[test]
    fn detects_inconsistency() {
        let a = vec![vec![sc(1, 1), sc(1, 1)], vec![sc(2, 1), sc(2, 1)]];
        let b = vec![sc(1, 1), sc(3, 1)];
        assert!(matches!(solve(&a, &b).unwrap(), LinSolve::Inconsistent));
    }

    #[test]
    fn reports_nullspace() {
        let a = vec![vec![sc(1, 1), sc(1, 1)]];
        let b = vec![sc(2, 1)];
        match solve(&a, &b).unwrap() {
            LinSolve::Underdetermined {
                particular,
                nullspace,
            } => {
                assert_eq!(particular, vec![sc(2, 1), sc(0, 1)]);
                assert_eq!(nullspace, vec![vec![sc(-1, 1), sc(1, 1)]]);
            }
            other => panic!("expected underdetermined, got {other:?}"),
        }
    }

    #[test]
    fn overdetermined_consistent() {
        let a = vec![vec![sc(1, 1)], vec![sc(2, 1)], vec![sc(3, 1)]];
        let b = vec![sc(2, 1), sc(4, 1), sc(6, 1)];
        match solve(&a, &b).unwrap() {
            LinSolve::Unique(x) => assert_eq!(x, vec![sc(2, 1)]),
            other => panic!("expected unique, got {other:?}"),
        }
    }
}
