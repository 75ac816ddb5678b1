//! Row reduction over prime fields F_p, shared by character-space and
//! module-rank computations. Matrices are dense `Vec<Vec<u64>>` with entries
//! already reduced mod p.

use crate::arith;

/// Reduce `rows` to reduced row echelon form in place, dropping zero rows.
/// Returns the pivot column indices in order.
pub(crate) fn rref(rows: &mut Vec<Vec<u64>>, ncols: usize, p: u64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(pivot_row) = (row..rows.len()).find(|&i| rows[i][col] % p != 0) else {
            continue;
        };
        rows.swap(row, pivot_row);
        let inv = arith::inv_mod(rows[row][col] % p, p).expect("pivot invertible mod prime");
        for x in rows[row].iter_mut() {
            *x = arith::mul_mod(*x, inv, p);
        }
        for i in 0..rows.len() {
            if i != row && rows[i][col] % p != 0 {
                let factor = rows[i][col] % p;
                for c in 0..ncols {
                    let sub = arith::mul_mod(factor, rows[row][c], p);
                    rows[i][c] = (rows[i][c] + p - sub) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    rows.truncate(row);
    pivots
}

/// Rank of the matrix over F_p.
pub(crate) fn rank(rows: &[Vec<u64>], ncols: usize, p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x % p).collect()).collect();
    rref(&mut m, ncols, p).len()
}

/// Canonical basis of the right nullspace {v : rows * v = 0} over F_p,
/// one vector per free column, each with a 1 in its free position.
pub(crate) fn nullspace(rows: &[Vec<u64>], ncols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x % p).collect()).collect();
    let pivots = rref(&mut m, ncols, p);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u64; ncols];
        v[free] = 1;
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = (p - m[i][free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_nullspace_complement() {
        let rows = vec![vec![1, 2, 0], vec![2, 4, 1], vec![0, 0, 1]];
        let r = rank(&rows, 3, 5);
        let ns = nullspace(&rows, 3, 5);
        assert_eq!(r + ns.len(), 3);
        // every nullspace vector is killed by every row
        for v in &ns {
            for row in &rows {
                let dot: u64 = row.iter().zip(v).map(|(&a, &b)| a * b % 5).sum::<u64>() % 5;
                assert_eq!(dot, 0);
            }
        }
    }

    #[test]
    fn nullspace_of_zero_map_is_everything() {
        let rows: Vec<Vec<u64>> = vec![vec![0, 0]];
        assert_eq!(nullspace(&rows, 2, 3).len(), 2);
        assert_eq!(rank(&rows, 2, 3), 0);
    }
}
