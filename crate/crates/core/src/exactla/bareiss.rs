//! Fraction-free (Bareiss) elimination over the integers.
//!
//! Rational matrices are cleared of denominators row by row, which does not
//! change the rank, and then reduced with exact integer division. Every
//! intermediate entry is a minor of the input, so magnitudes stay bounded by
//! Hadamard's inequality instead of growing like repeated fractions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Matrix, Rationals};

/// Integer rows with the same row space as `m`.
pub fn clear_denominators(m: &Matrix<Rationals>) -> Vec<Vec<BigInt>> {
    (0..m.rows())
        .map(|r| {
            let row = m.row(r);
            let lcm = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&lcm / v.denom())).collect()
        })
        .collect()
}

/// Rank of an integer matrix by Bareiss elimination.
pub fn rank_integer(mut a: Vec<Vec<BigInt>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                debug_assert!((&v % &prev).is_zero(), "Bareiss division must be exact");
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

pub(crate) fn rank_rational(m: &Matrix<Rationals>) -> usize {
    rank_integer(clear_denominators(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::field::Field;

    #[test]
    fn bareiss_matches_plain_elimination() {
        let q = Rationals;
        let m = Matrix::from_i64_rows(
            &q,
            &[
                vec![2, 4, 6, 8],
                vec![1, 3, 5, 7],
                vec![3, 7, 11, 15],
                vec![0, 0, 0, 1],
            ],
        );
        assert_eq!(rank_rational(&m), 3);
        assert_eq!(crate::exactla::matrix::rank_by_elimination(&m), 3);
    }

    #[test]
    fn fractional_rows_are_cleared() {
        let q = Rationals;
        let half = q.parse("1/2").unwrap();
        let third = q.parse("1/3").unwrap();
        let m = Matrix::from_rows(
            &q,
            vec![
                vec![half.clone(), third.clone()],
                vec![q.one(), q.parse("2/3").unwrap()],
            ],
        );
        assert_eq!(
            clear_denominators(&m)[0],
            vec![BigInt::from(3), BigInt::from(2)]
        );
        assert_eq!(rank_rational(&m), 1);
    }
}
